"""Mobile node state, proxy selection, paging and Mobile-Agent deployment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from ..radio import Point, distance
from .fsm import Attached, DetachedRelay, HandoverState
from .relay import DtnBuffer

NMN = "NMN"
NNMN = "NNMN"


class AgentError(ValueError):
    pass


@dataclass
class ProxyLink:
    client: str
    proxy: str
    established_t: float
    validated: bool = False


@dataclass
class MobileAgent:
    host: str
    replicated_state: dict
    deployed_t: float


@dataclass
class Node:
    node_id: str
    kind: str
    position: Point
    battery: float = 100.0
    activity: str = "active"
    fsm: HandoverState = field(default_factory=DetachedRelay)
    proxy_link: ProxyLink | None = None
    buffer: DtnBuffer = field(default_factory=DtnBuffer)
    agent: MobileAgent | None = None
    vnl_allowed: bool = True

    @property
    def has_vnl(self) -> bool:
        """Whether the node runs VNL modules (natively, or through a hosted agent)."""
        if not self.vnl_allowed:
            return False
        return self.kind == NMN or self.agent is not None

    @property
    def attached(self) -> bool:
        return isinstance(self.fsm, Attached)


def select_proxy(
    pos: Point,
    candidates: list[Node],
    adhoc_range_m: float = math.inf,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> str | None:
    """Nearest VNL-capable candidate within range; ties go to the smaller id."""
    best: tuple[float, str] | None = None
    for c in candidates:
        if c.node_id in exclude or not c.has_vnl:
            continue
        d = distance(pos, c.position)
        if d > adhoc_range_m:
            continue
        key = (d, c.node_id)
        if best is None or key < best:
            best = key
    return best[1] if best else None


def paging_interval(
    activity: str,
    battery: float,
    base_interval_s: float,
    idle_multiplier: float,
    battery_floor: float,
) -> float:
    if base_interval_s <= 0:
        raise ValueError("base_interval_s must be > 0")
    if idle_multiplier < 1:
        raise ValueError("idle_multiplier must be >= 1")
    if activity == "idle" or battery <= battery_floor:
        return base_interval_s * idle_multiplier
    return base_interval_s


def deploy_agent(
    target: Node,
    source_state: dict[str, Any],
    now: float = 0.0,
    previous_host: Node | None = None,
) -> MobileAgent:
    """Install a Mobile Agent replicating ``source_state`` on an NNMN.

    Called once the migration has completed; the simulator delays the call
    by the configured migration latency. Passing ``previous_host`` moves the
    agent, removing it there first.
    """
    if target.kind != NNMN:
        raise AgentError(f"{target.node_id} is an NMN and needs no agent")
    if target.agent is not None:
        raise AgentError(f"{target.node_id} already hosts an agent")
    if previous_host is not None:
        if previous_host.agent is None:
            raise AgentError(f"{previous_host.node_id} hosts no agent to migrate")
        previous_host.agent = None
    agent = MobileAgent(target.node_id, dict(source_state), now)
    target.agent = agent
    return agent
