"""Virtual Node Layer: handover FSM, data relay, power management, agents."""
from .fsm import fsm_step
from .node import NMN, NNMN, MobileAgent, Node, ProxyLink, deploy_agent, paging_interval, select_proxy
from .relay import DtnBuffer, relay_enqueue, relay_flush
from .tunnel import NetInfRequest, TunneledPacket, ilctr_wrap, olctr_unwrap

__all__ = [
    "NMN",
    "NNMN",
    "DtnBuffer",
    "MobileAgent",
    "NetInfRequest",
    "Node",
    "ProxyLink",
    "TunneledPacket",
    "deploy_agent",
    "fsm_step",
    "ilctr_wrap",
    "olctr_unwrap",
    "paging_interval",
    "relay_enqueue",
    "relay_flush",
    "select_proxy",
]
