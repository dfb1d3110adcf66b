"""Scenario files: a fixed JSON schema, fail-fast on unknown keys.

Errors name the offending key path and its line in the source file.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .ccu import allocate_vmps
from .mobility import Region, Trajectory, Waypoint
from .naming import DEFAULT_LEVEL_LATENCIES, select_scheme
from .radio import Cell, GeometryError, RadioParams, make_cell
from .vnl.node import NMN, NNMN

CN = "CN"
REQUIRED = object()


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Latencies:
    bs_link_s: float = 0.005
    core_s: float = 0.020
    adhoc_s: float = 0.010
    validation_s: float = 0.100
    inter_ccu_s: float = 0.020
    registration_s: float = 0.050
    agent_migration_s: float = 0.500
    probe_link_s: float = 0.010
    probe_processing_s: float = 0.004
    probe_jitter_s: float = 0.0
    probe_range_m: float = 3000.0
    edge_hop_s: float = 0.001


@dataclass(frozen=True)
class Toggles:
    vnl_enabled: bool = True
    power_mgmt_enabled: bool = True
    shadowing_sigma_db: float = 0.0
    adhoc_range_m: float = 250.0
    buffer_capacity: int | None = None
    ttl_s: float | None = None
    trigger_margin_s: float = 0.5
    idle_multiplier: float = 4.0
    vrss_mode: str = "geometric"
    retry_interval_s: float = 1.0
    speed_window_s: float = 5.0
    default_speed_mps: float = 1.0
    default_handoff_delay_s: float = 0.5
    paging_base_interval_s: float = 10.0
    battery_floor: float = 20.0
    energy_location_update: float = 0.05
    energy_signal: float = 0.02
    energy_packet_tx: float = 0.001
    latencies: Latencies = field(default_factory=Latencies)


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    kind: str
    trajectory: Trajectory
    battery: float = 100.0
    activity: str = "active"
    agent_from: str | None = None


@dataclass(frozen=True)
class SessionSpec:
    session_id: str
    src: str
    dst: str = CN
    interval_s: float = 0.05
    size_bytes: int = 1200
    start_s: float = 0.0
    stop_s: float | None = None
    cn_netinf: bool = True


@dataclass(frozen=True)
class Lookup:
    t: float
    from_access: str
    oid: str


@dataclass(frozen=True)
class ResolutionSpec:
    case: str | None = None
    level_latencies_s: tuple[float, ...] = DEFAULT_LEVEL_LATENCIES
    tree: dict | None = None
    access_of: dict = field(default_factory=dict)
    core_prefix: dict = field(default_factory=dict)
    lookups: tuple[Lookup, ...] = ()

    @property
    def scheme(self) -> str:
        return select_scheme(self.case)


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    tick_s: float
    master_seed: int
    toggles: Toggles
    cells: tuple[Cell, ...]
    nodes: tuple[NodeSpec, ...]
    sessions: tuple[SessionSpec, ...]
    resolution: ResolutionSpec
    deny_list: tuple[str, ...] = ()

    def with_seed(self, seed: int) -> "Scenario":
        return dataclasses.replace(self, master_seed=seed)

    def with_toggles(self, **changes) -> "Scenario":
        return dataclasses.replace(self, toggles=dataclasses.replace(self.toggles, **changes))


# -- line lookup ---------------------------------------------------------
class _Locator:
    def __init__(self, text: str):
        try:
            self.root = yaml.compose(text)
        except yaml.YAMLError:
            self.root = None

    def line(self, path: tuple) -> int | None:
        node = self.root
        line = None
        for part in path:
            if node is None:
                break
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == part:
                        line, nxt = k.start_mark.line + 1, v
                        break
                node = nxt
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                node = node.value[part]
                line = node.start_mark.line + 1
            else:
                break
        return line


class _Reader:
    def __init__(self, text: str, source: str):
        self.source = source
        self.lines = _Locator(text)

    def fail(self, path: tuple, msg: str):
        where = ".".join(str(p) for p in path) or "<root>"
        line = self.lines.line(path)
        at = f"{self.source}:{line}" if line else self.source
        raise ScenarioError(f"{at}: {where}: {msg}")

    def section(self, obj: Any, path: tuple, schema: dict) -> dict:
        if not isinstance(obj, dict):
            self.fail(path, "expected an object")
        for key in obj:
            if key not in schema:
                self.fail(path + (key,), f"unknown key {key!r}")
        out = {}
        for key, default in schema.items():
            if key in obj:
                out[key] = obj[key]
            elif default is REQUIRED:
                self.fail(path, f"missing required key {key!r}")
            else:
                out[key] = default
        return out

    def number(self, value, path, *, positive=False, nonneg=False, allow_none=False):
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if positive and not value > 0:
            self.fail(path, f"must be > 0, got {value!r}")
        if nonneg and value < 0:
            self.fail(path, f"must be >= 0, got {value!r}")
        return value

    def point(self, value, path):
        if not (isinstance(value, list) and len(value) == 2):
            self.fail(path, "expected [x, y]")
        return (float(self.number(value[0], path)), float(self.number(value[1], path)))


def _dataclass_schema(cls) -> dict:
    return {f.name: f.default for f in dataclasses.fields(cls) if f.default is not dataclasses.MISSING}


def _check_types(r: _Reader, values: dict, cls, path: tuple) -> dict:
    out = {}
    for f in dataclasses.fields(cls):
        if f.name not in values:
            continue
        v = values[f.name]
        default = f.default
        p = path + (f.name,)
        if isinstance(default, bool):
            if not isinstance(v, bool):
                r.fail(p, f"expected true/false, got {v!r}")
        elif isinstance(default, (int, float)) or (default is None and f.name in ("buffer_capacity", "ttl_s")):
            v = r.number(v, p, nonneg=True, allow_none=default is None)
            if f.name == "buffer_capacity" and v is not None and (not isinstance(v, int) or v < 0):
                r.fail(p, "must be a non-negative integer or null")
        elif isinstance(default, str) and not isinstance(v, str):
            r.fail(p, f"expected a string, got {v!r}")
        out[f.name] = v
    return out


def _trajectory(r: _Reader, obj, path) -> Trajectory:
    if not isinstance(obj, dict) or "kind" not in obj:
        r.fail(path, "trajectory needs a 'kind'")
    kind = obj["kind"]
    if kind == "static":
        t = r.section(obj, path, {"kind": REQUIRED, "pos": REQUIRED})
        return Trajectory("waypoints", (Waypoint(r.point(t["pos"], path + ("pos",))),))
    if kind == "waypoints":
        t = r.section(obj, path, {"kind": REQUIRED, "waypoints": REQUIRED})
        wps = []
        if not isinstance(t["waypoints"], list) or not t["waypoints"]:
            r.fail(path + ("waypoints",), "expected a non-empty list")
        for i, w in enumerate(t["waypoints"]):
            wp = path + ("waypoints", i)
            w = r.section(w, wp, {"pos": REQUIRED, "speed_mps": None})
            speed = r.number(w["speed_mps"], wp + ("speed_mps",), positive=True, allow_none=True)
            if i > 0 and speed is None:
                r.fail(wp, "every waypoint after the first needs speed_mps")
            wps.append(Waypoint(r.point(w["pos"], wp + ("pos",)), speed))
        return Trajectory("waypoints", tuple(wps))
    if kind == "random_waypoint":
        t = r.section(obj, path, {"kind": REQUIRED, "region": REQUIRED, "speed_range": REQUIRED, "start": None})
        reg = t["region"]
        if not (isinstance(reg, list) and len(reg) == 4):
            r.fail(path + ("region",), "expected [xmin, ymin, xmax, ymax]")
        xmin, ymin, xmax, ymax = (float(r.number(v, path + ("region",))) for v in reg)
        if xmin > xmax or ymin > ymax:
            r.fail(path + ("region",), "empty region")
        sr = t["speed_range"]
        if not (isinstance(sr, list) and len(sr) == 2 and 0 < sr[0] <= sr[1]):
            r.fail(path + ("speed_range",), "expected [lo, hi] with 0 < lo <= hi")
        start = r.point(t["start"], path + ("start",)) if t["start"] is not None else None
        region = Region(xmin, ymin, xmax, ymax)
        if start is not None and not region.contains(start):
            r.fail(path + ("start",), "start lies outside the region")
        return Trajectory("random_waypoint", region=region, speed_range=(float(sr[0]), float(sr[1])), start=start)
    r.fail(path + ("kind",), f"unknown trajectory kind {kind!r}")


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    r = _Reader(text, source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}: parse error: {exc.msg}") from None

    top = r.section(
        raw,
        (),
        {
            "name": "scenario",
            "duration_s": REQUIRED,
            "tick_s": 0.1,
            "master_seed": 0,
            "radio": {},
            "toggles": {},
            "cells": REQUIRED,
            "nodes": REQUIRED,
            "sessions": [],
            "resolution": {},
            "deny_list": [],
        },
    )
    duration = r.number(top["duration_s"], ("duration_s",), positive=True)
    tick = r.number(top["tick_s"], ("tick_s",), positive=True)
    seed = top["master_seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        r.fail(("master_seed",), "expected an integer")

    radio_raw = r.section(top["radio"], ("radio",), _dataclass_schema(RadioParams))
    try:
        radio = RadioParams(**{k: float(r.number(v, ("radio", k))) for k, v in radio_raw.items()})
    except GeometryError as exc:
        r.fail(("radio",), str(exc))

    tog_raw = r.section(top["toggles"], ("toggles",), _dataclass_schema(Toggles) | {"latencies": {}})
    lat_raw = r.section(tog_raw.pop("latencies"), ("toggles", "latencies"), _dataclass_schema(Latencies))
    lat = Latencies(**_check_types(r, lat_raw, Latencies, ("toggles", "latencies")))
    tog = Toggles(**_check_types(r, tog_raw, Toggles, ("toggles",)), latencies=lat)
    if tog.vrss_mode not in ("geometric", "rss"):
        r.fail(("toggles", "vrss_mode"), "must be 'geometric' or 'rss'")
    if tog.idle_multiplier < 1:
        r.fail(("toggles", "idle_multiplier"), "must be >= 1")

    # cells
    if not isinstance(top["cells"], list) or not top["cells"]:
        r.fail(("cells",), "expected a non-empty list")
    cells: list[Cell] = []
    seen: set[str] = set()
    for i, c in enumerate(top["cells"]):
        p = ("cells", i)
        c = r.section(c, p, {"id": REQUIRED, "center": REQUIRED, "radius_m": REQUIRED, "radio": None, "vmps": None})
        bs = c["id"]
        if not isinstance(bs, str) or not bs:
            r.fail(p + ("id",), "expected a non-empty string")
        if bs in seen:
            r.fail(p + ("id",), f"duplicate cell id {bs!r}")
        seen.add(bs)
        cell_radio = radio
        if c["radio"] is not None:
            cr = r.section(c["radio"], p + ("radio",), _dataclass_schema(RadioParams))
            try:
                cell_radio = RadioParams(**{k: float(v) for k, v in cr.items()})
            except GeometryError as exc:
                r.fail(p + ("radio",), str(exc))
        R = r.number(c["radius_m"], p + ("radius_m",), positive=True)
        cell = make_cell(bs, r.point(c["center"], p + ("center",)), float(R), cell_radio)
        if c["vmps"] is not None:
            v = r.section(c["vmps"], p + ("vmps",), {"count": REQUIRED, "r1_m": REQUIRED, "r_m": REQUIRED})
            try:
                vmps = allocate_vmps(cell, int(v["count"]), float(v["r1_m"]), float(v["r_m"]))
            except GeometryError as exc:
                r.fail(p + ("vmps",), str(exc))
            cell = dataclasses.replace(cell, vmps=tuple(vmps))
        cells.append(cell)

    # nodes
    if not isinstance(top["nodes"], list):
        r.fail(("nodes",), "expected a list")
    nodes: list[NodeSpec] = []
    node_ids: set[str] = set()
    for i, n in enumerate(top["nodes"]):
        p = ("nodes", i)
        n = r.section(
            n,
            p,
            {"id": REQUIRED, "kind": REQUIRED, "trajectory": REQUIRED, "battery": 100.0, "activity": "active", "agent_from": None},
        )
        nid = n["id"]
        if not isinstance(nid, str) or not nid or nid == CN:
            r.fail(p + ("id",), f"invalid node id {nid!r}")
        if nid in node_ids or nid in seen:
            r.fail(p + ("id",), f"duplicate id {nid!r}")
        node_ids.add(nid)
        if n["kind"] not in (NMN, NNMN):
            r.fail(p + ("kind",), "must be NMN or NNMN")
        if n["activity"] not in ("active", "idle"):
            r.fail(p + ("activity",), "must be 'active' or 'idle'")
        try:
            traj = _trajectory(r, n["trajectory"], p + ("trajectory",))
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            r.fail(p + ("trajectory",), str(exc))
        battery = float(r.number(n["battery"], p + ("battery",), nonneg=True))
        nodes.append(NodeSpec(nid, n["kind"], traj, battery, n["activity"], n["agent_from"]))
    kinds = {n.node_id: n.kind for n in nodes}
    for i, n in enumerate(nodes):
        if n.agent_from is None:
            continue
        p = ("nodes", i, "agent_from")
        if n.kind != NNMN:
            r.fail(p, "only an NNMN can host a Mobile Agent")
        if kinds.get(n.agent_from) != NMN:
            r.fail(p, f"agent source {n.agent_from!r} is not a defined NMN")

    # sessions
    sessions: list[SessionSpec] = []
    sids: set[str] = set()
    for i, s in enumerate(top["sessions"]):
        p = ("sessions", i)
        s = r.section(s, p, _dataclass_schema(SessionSpec) | {"id": REQUIRED, "src": REQUIRED})
        if s["id"] in sids:
            r.fail(p + ("id",), f"duplicate session id {s['id']!r}")
        sids.add(s["id"])
        if s["src"] not in node_ids:
            r.fail(p + ("src",), f"undefined node {s['src']!r}")
        if s["dst"] != CN and s["dst"] not in node_ids:
            r.fail(p + ("dst",), f"undefined node {s['dst']!r}")
        if s["dst"] == s["src"]:
            r.fail(p + ("dst",), "source and destination coincide")
        r.number(s["interval_s"], p + ("interval_s",), positive=True)
        r.number(s["start_s"], p + ("start_s",), nonneg=True)
        r.number(s["stop_s"], p + ("stop_s",), nonneg=True, allow_none=True)
        sessions.append(
            SessionSpec(
                s["id"], s["src"], s["dst"], float(s["interval_s"]), int(s["size_bytes"]),
                float(s["start_s"]), None if s["stop_s"] is None else float(s["stop_s"]), bool(s["cn_netinf"]),
            )
        )

    # resolution
    res = r.section(
        top["resolution"],
        ("resolution",),
        {"case": None, "level_latencies_s": list(DEFAULT_LEVEL_LATENCIES), "tree": None, "access_of": {}, "core_prefix": {}, "lookups": []},
    )
    if res["case"] not in (None, "terminal", "network"):
        r.fail(("resolution", "case"), "must be 'terminal' or 'network'")
    levels = res["level_latencies_s"]
    if not (isinstance(levels, list) and len(levels) == 4):
        r.fail(("resolution", "level_latencies_s"), "expected four latencies")
    cell_ids = [c.bs_id for c in cells]
    access_of = {bs: res["access_of"].get(bs, f"an-{bs}") for bs in cell_ids}
    for bs in res["access_of"]:
        if bs not in seen:
            r.fail(("resolution", "access_of", bs), f"undefined cell {bs!r}")
    tree = res["tree"]
    if tree is None:
        tree = {"as0": {"pop0": sorted(set(access_of.values()))}}
    known_access = {a for pops in tree.values() for ans in pops.values() for a in ans}
    for bs, a in access_of.items():
        if a not in known_access:
            r.fail(("resolution", "access_of"), f"access node {a!r} of {bs} is not in the tree")
    lookups = []
    for i, lk in enumerate(res["lookups"]):
        p = ("resolution", "lookups", i)
        lk = r.section(lk, p, {"t": REQUIRED, "from": REQUIRED, "oid": REQUIRED})
        if lk["from"] not in known_access:
            r.fail(p + ("from",), f"unknown access node {lk['from']!r}")
        lookups.append(Lookup(float(r.number(lk["t"], p + ("t",), nonneg=True)), lk["from"], lk["oid"]))
    resolution = ResolutionSpec(
        res["case"],
        tuple(float(x) for x in levels),
        tree,
        access_of,
        {bs: res["core_prefix"].get(bs, f"CER-{bs}") for bs in cell_ids},
        tuple(lookups),
    )

    deny = top["deny_list"]
    if not isinstance(deny, list):
        r.fail(("deny_list",), "expected a list of node ids")

    return Scenario(
        str(top["name"]), float(duration), float(tick), seed, tog,
        tuple(cells), tuple(nodes), tuple(sessions), resolution, tuple(deny),
    )


def bundled_scenarios() -> list[str]:
    root = resources.files("vnlsim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; a bare name selects a bundled fixture."""
    p = Path(path)
    if not p.exists() and str(path) in bundled_scenarios():
        text = (resources.files("vnlsim") / "scenarios" / f"{path}.json").read_text()
        return parse_scenario(text, f"{path}.json")
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from None
    return parse_scenario(text, str(path))
