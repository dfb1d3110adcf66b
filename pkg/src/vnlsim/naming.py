"""Hierarchical (MDHT) name resolution and LLC path locators.

Dictionary nodes are arranged in four levels: access node, point of
presence, autonomous system and a single global dictionary. Publishing
copies an entry into the access dictionary and every ancestor; resolution
walks upward from the requester's access dictionary until the first hit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

LEVELS = ("AccessNode", "PoP", "AS", "Global")
DEFAULT_LEVEL_LATENCIES = (0.002, 0.010, 0.040, 0.120)
SEPARATOR = "/"

LLC = "LLC"
MDHT = "MDHT"


@dataclass(frozen=True)
class PathLocator:
    core_prefix: str
    edge_ids: tuple[str, ...] = ()

    def __str__(self):
        return encode_path_locator(self.core_prefix, self.edge_ids)


Locator = Union[str, PathLocator]


def _check_token(token: str, what: str) -> None:
    if not isinstance(token, str) or not token:
        raise ValueError(f"{what} must be a non-empty string")
    if SEPARATOR in token or any(ch.isspace() for ch in token):
        raise ValueError(f"{what} {token!r} contains a separator or whitespace")


def encode_path_locator(prefix: str, edge_ids) -> str:
    _check_token(prefix, "core prefix")
    for e in edge_ids:
        _check_token(e, "edge id")
    return SEPARATOR.join([prefix, *edge_ids])


def decode_path_locator(text: str) -> PathLocator:
    if not text:
        raise ValueError("empty path locator")
    parts = text.split(SEPARATOR)
    for p in parts:
        _check_token(p, "locator segment")
    return PathLocator(parts[0], tuple(parts[1:]))


def llc_route(locator: PathLocator, hop_latency_s: float) -> tuple[list[str], float]:
    """Connectionless hop-by-hop forwarding: core edge router, then each edge."""
    hops = [locator.core_prefix, *locator.edge_ids]
    return hops, hop_latency_s * len(hops)


def select_scheme(mobility_case: str | None = None) -> str:
    case = mobility_case or "terminal"
    if case == "terminal":
        return LLC
    if case == "network":
        return MDHT
    raise ValueError(f"unknown mobility case {mobility_case!r}")


@dataclass
class DictionaryNode:
    name: str
    level: str
    lookup_latency_s: float
    parent: "DictionaryNode | None" = None
    scope: set[str] = field(default_factory=set)
    table: dict[str, Locator] = field(default_factory=dict)
    writes: int = 0

    def put(self, oid: str, locator: Locator) -> None:
        self.table[oid] = locator
        self.writes += 1

    def drop(self, oid: str) -> None:
        if self.table.pop(oid, None) is not None:
            self.writes += 1


@dataclass(frozen=True)
class Resolution:
    locator: Locator | None
    latency_s: float
    hit_level: str | None

    @property
    def found(self) -> bool:
        return self.locator is not None


class Mdht:
    """Four-level dictionary hierarchy built from ``{as: {pop: [access, ...]}}``."""

    def __init__(self, tree: dict[str, dict[str, list[str]]], level_latencies=DEFAULT_LEVEL_LATENCIES):
        if len(level_latencies) != 4:
            raise ValueError("need one lookup latency per level")
        l1, l2, l3, l4 = level_latencies
        self.root = DictionaryNode("global", "Global", l4)
        self.nodes: dict[str, DictionaryNode] = {"global": self.root}
        self.access: dict[str, DictionaryNode] = {}
        for as_name, pops in tree.items():
            as_dn = self._add(as_name, "AS", l3, self.root)
            for pop_name, access_nodes in pops.items():
                pop_dn = self._add(pop_name, "PoP", l2, as_dn)
                for a in access_nodes:
                    dn = self._add(a, "AccessNode", l1, pop_dn)
                    self.access[a] = dn
                    p = dn
                    while p is not None:
                        p.scope.add(a)
                        p = p.parent
        if not self.access:
            raise ValueError("hierarchy has no access nodes")

    def _add(self, name, level, latency, parent) -> DictionaryNode:
        if name in self.nodes:
            raise ValueError(f"duplicate dictionary node {name!r}")
        dn = DictionaryNode(name, level, latency, parent)
        self.nodes[name] = dn
        return dn

    @classmethod
    def flat(cls, access_nodes: list[str], level_latencies=DEFAULT_LEVEL_LATENCIES) -> "Mdht":
        return cls({"as0": {"pop0": list(access_nodes)}}, level_latencies)

    def path(self, access_node: str) -> list[DictionaryNode]:
        try:
            dn = self.access[access_node]
        except KeyError:
            raise KeyError(f"unknown access node {access_node!r}") from None
        out = []
        while dn is not None:
            out.append(dn)
            dn = dn.parent
        return out

    def publish(self, oid: str, locator: Locator, access_node: str) -> None:
        if not oid:
            raise ValueError("object id must be non-empty")
        for dn in self.path(access_node):
            dn.put(oid, locator)

    def resolve(self, oid: str, from_access_node: str) -> Resolution:
        latency = 0.0
        for dn in self.path(from_access_node):
            latency += dn.lookup_latency_s
            if oid in dn.table:
                return Resolution(dn.table[oid], latency, dn.level)
        return Resolution(None, latency, None)

    def update_on_handover(
        self, oid: str, old_access: str, new_access: str, locator: Locator | None = None
    ) -> None:
        """Move an entry from ``old_access`` to ``new_access``.

        Dictionaries shared by both paths keep their entry unless a new
        ``locator`` is supplied, in which case every entry on the new path is
        refreshed.
        """
        old_path = self.path(old_access)
        new_path = self.path(new_access)
        if oid not in old_path[0].table:
            if locator is None:
                locator = next((dn.table[oid] for dn in old_path if oid in dn.table), None)
            if locator is None:
                raise KeyError(f"{oid!r} is not published and no locator was given")
            self.publish(oid, locator, new_access)
            return
        current = old_path[0].table[oid]
        shared = {id(dn) for dn in old_path} & {id(dn) for dn in new_path}
        for dn in old_path:
            if id(dn) not in shared:
                dn.drop(oid)
        for dn in new_path:
            if id(dn) not in shared:
                dn.put(oid, current if locator is None else locator)
            elif locator is not None and dn.table.get(oid) != locator:
                dn.put(oid, locator)
