"""Handover state machine of the Virtual Node Layer.

The happy path of a handover between two base stations is::

    Attached(bs1) --VrssBelowMin--> HoPrepare(bs1, searching)
      --ProxyValidated(p)--> HoPrepare(bs1, p)
      --RssBelowMin--> DetachedRelay(p)
      --WeakBs2Detected--> ReProxy(p) --NewProxyValidated(q)--> DetachedRelay(q)
      --EnteredVmp2(bs2)--> Reattaching(bs2, q)
      --RegistrationConfirmed(bs2)--> Attached(bs2)

``fsm_step`` is total: any pair not listed in the table leaves the state
unchanged and yields ``[LogIgnored]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union


# -- states -------------------------------------------------------------
@dataclass(frozen=True)
class Attached:
    bs: str
    vmp: str | None = None

    def __str__(self):
        return f"Attached({self.bs},{self.vmp or '-'})"


@dataclass(frozen=True)
class HoPrepare:
    bs: str
    proxy: str | None = None  # None while searching, else the validated proxy

    def __str__(self):
        return f"HoPrepare({self.bs},{self.proxy or 'searching'})"


@dataclass(frozen=True)
class DetachedRelay:
    proxy: str | None = None  # None: no relay, traffic is buffered or lost

    def __str__(self):
        return f"DetachedRelay({self.proxy or '-'})"


@dataclass(frozen=True)
class ReProxy:
    old_proxy: str | None  # the pending candidate lives in the node's search context

    def __str__(self):
        return f"ReProxy({self.old_proxy or '-'})"


@dataclass(frozen=True)
class Reattaching:
    bs: str
    proxy: str | None = None

    def __str__(self):
        return f"Reattaching({self.bs},{self.proxy or '-'})"


HandoverState = Union[Attached, HoPrepare, DetachedRelay, ReProxy, Reattaching]


# -- events -------------------------------------------------------------
@dataclass(frozen=True)
class VrssBelowMin:
    cause: str = "vmp_exit"


@dataclass(frozen=True)
class ProxyValidated:
    proxy: str


@dataclass(frozen=True)
class RssBelowMin:
    pass


@dataclass(frozen=True)
class WeakBs2Detected:
    bs: str


@dataclass(frozen=True)
class NewProxyValidated:
    proxy: str


@dataclass(frozen=True)
class EnteredVmp2:
    bs: str


@dataclass(frozen=True)
class RegistrationConfirmed:
    bs: str


@dataclass(frozen=True)
class ProxySearchFailed:
    pass


@dataclass(frozen=True)
class ProxyLost:
    pass


HandoverEvent = Union[
    VrssBelowMin,
    ProxyValidated,
    RssBelowMin,
    WeakBs2Detected,
    NewProxyValidated,
    EnteredVmp2,
    RegistrationConfirmed,
    ProxySearchFailed,
    ProxyLost,
]

STATE_TYPES = (Attached, HoPrepare, DetachedRelay, ReProxy, Reattaching)
EVENT_TYPES = (
    VrssBelowMin,
    ProxyValidated,
    RssBelowMin,
    WeakBs2Detected,
    NewProxyValidated,
    EnteredVmp2,
    RegistrationConfirmed,
    ProxySearchFailed,
    ProxyLost,
)


# -- actions ------------------------------------------------------------
@dataclass(frozen=True)
class StartProxySearch:
    pass


@dataclass(frozen=True)
class ActivateLink:
    proxy: str


@dataclass(frozen=True)
class TerminateLink:
    proxy: str


@dataclass(frozen=True)
class ReleaseFromBs:
    bs: str


@dataclass(frozen=True)
class RegisterWith:
    bs: str


@dataclass(frozen=True)
class StartBuffering:
    pass


@dataclass(frozen=True)
class FlushBuffer:
    pass


@dataclass(frozen=True)
class ScheduleRetry:
    pass


@dataclass(frozen=True)
class CancelSearch:
    pass


@dataclass(frozen=True)
class LogIgnored:
    pass


Action = Union[
    StartProxySearch,
    ActivateLink,
    TerminateLink,
    ReleaseFromBs,
    RegisterWith,
    StartBuffering,
    FlushBuffer,
    ScheduleRetry,
    CancelSearch,
    LogIgnored,
]


def _terminate(proxy: str | None) -> list:
    return [TerminateLink(proxy)] if proxy else []


def fsm_step(state: HandoverState, event: HandoverEvent) -> tuple[HandoverState, list]:
    ignored = (state, [LogIgnored()])

    if isinstance(state, Attached):
        if isinstance(event, VrssBelowMin):
            return HoPrepare(state.bs), [StartProxySearch()]
        if isinstance(event, RssBelowMin):
            # coverage lost without a preparation trigger
            return DetachedRelay(None), [ReleaseFromBs(state.bs), StartBuffering(), StartProxySearch()]
        return ignored

    if isinstance(state, HoPrepare):
        searching = state.proxy is None
        if isinstance(event, (ProxyValidated, NewProxyValidated)) and searching:
            return HoPrepare(state.bs, event.proxy), [ActivateLink(event.proxy)]
        if isinstance(event, ProxySearchFailed) and searching:
            return state, [ScheduleRetry()]
        if isinstance(event, RssBelowMin):
            if searching:
                return DetachedRelay(None), [ReleaseFromBs(state.bs), StartBuffering()]
            return DetachedRelay(state.proxy), [ReleaseFromBs(state.bs)]
        if isinstance(event, ProxyLost) and not searching:
            return HoPrepare(state.bs), [TerminateLink(state.proxy), StartProxySearch()]
        if isinstance(event, EnteredVmp2):
            if event.bs == state.bs:
                # came back into the strong zone of the serving BS
                return Attached(state.bs), [CancelSearch(), *_terminate(state.proxy)]
            return Reattaching(event.bs, state.proxy), [
                CancelSearch(),
                ReleaseFromBs(state.bs),
                RegisterWith(event.bs),
            ]
        return ignored

    if isinstance(state, DetachedRelay):
        if isinstance(event, (ProxyValidated, NewProxyValidated)):
            if state.proxy is None:
                return DetachedRelay(event.proxy), [ActivateLink(event.proxy), FlushBuffer()]
            if event.proxy != state.proxy:
                return DetachedRelay(event.proxy), [TerminateLink(state.proxy), ActivateLink(event.proxy)]
            return ignored
        if isinstance(event, WeakBs2Detected):
            if state.proxy is None:
                return state, [StartProxySearch()]
            return ReProxy(state.proxy), [StartProxySearch()]
        if isinstance(event, ProxySearchFailed) and state.proxy is None:
            return state, [ScheduleRetry()]
        if isinstance(event, ProxyLost) and state.proxy is not None:
            return DetachedRelay(None), [TerminateLink(state.proxy), StartBuffering(), StartProxySearch()]
        if isinstance(event, EnteredVmp2):
            return Reattaching(event.bs, state.proxy), [CancelSearch(), RegisterWith(event.bs)]
        return ignored

    if isinstance(state, ReProxy):
        if isinstance(event, (NewProxyValidated, ProxyValidated)):
            if event.proxy == state.old_proxy:
                return DetachedRelay(state.old_proxy), []
            return DetachedRelay(event.proxy), [*_terminate(state.old_proxy), ActivateLink(event.proxy)]
        if isinstance(event, ProxySearchFailed):
            # keep relaying through the old proxy
            return DetachedRelay(state.old_proxy), []
        if isinstance(event, ProxyLost) and state.old_proxy is not None:
            return DetachedRelay(None), [TerminateLink(state.old_proxy), StartBuffering()]
        if isinstance(event, EnteredVmp2):
            return Reattaching(event.bs, state.old_proxy), [CancelSearch(), RegisterWith(event.bs)]
        return ignored

    if isinstance(state, Reattaching):
        if isinstance(event, RegistrationConfirmed) and event.bs == state.bs:
            return Attached(state.bs), [*_terminate(state.proxy), FlushBuffer()]
        if isinstance(event, ProxyLost) and state.proxy is not None:
            return Reattaching(state.bs, None), [TerminateLink(state.proxy), StartBuffering()]
        return ignored

    raise TypeError(f"not a handover state: {state!r}")


def serving_bs(state: HandoverState) -> str | None:
    if isinstance(state, (Attached, HoPrepare)):
        return state.bs
    return None


def active_proxy(state: HandoverState) -> str | None:
    if isinstance(state, (HoPrepare, DetachedRelay, Reattaching)):
        return state.proxy
    if isinstance(state, ReProxy):
        return state.old_proxy
    return None
