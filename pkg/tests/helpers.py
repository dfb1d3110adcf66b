"""Shared fixtures-as-functions for the test modules."""
from __future__ import annotations

import itertools

from vnlsim.vnl import fsm


def sample_states():
    """Representative instances of every state, covering optional fields."""
    return [
        fsm.Attached("bs1"),
        fsm.Attached("bs1", "bs1:v0"),
        fsm.HoPrepare("bs1"),
        fsm.HoPrepare("bs1", "p"),
        fsm.DetachedRelay(),
        fsm.DetachedRelay("p"),
        fsm.ReProxy("p"),
        fsm.ReProxy(None),
        fsm.Reattaching("bs2"),
        fsm.Reattaching("bs2", "p"),
    ]


def sample_events():
    return [
        fsm.VrssBelowMin(),
        fsm.VrssBelowMin("predicted"),
        fsm.ProxyValidated("p"),
        fsm.ProxyValidated("q"),
        fsm.RssBelowMin(),
        fsm.WeakBs2Detected("bs2"),
        fsm.NewProxyValidated("p"),
        fsm.NewProxyValidated("q"),
        fsm.EnteredVmp2("bs1"),
        fsm.EnteredVmp2("bs2"),
        fsm.RegistrationConfirmed("bs1"),
        fsm.RegistrationConfirmed("bs2"),
        fsm.ProxySearchFailed(),
        fsm.ProxyLost(),
    ]


def all_pairs():
    return list(itertools.product(sample_states(), sample_events()))


def check_fsm_pair(state, event) -> str | None:
    """Return a description of what is wrong with one transition, or None."""
    try:
        result = fsm.fsm_step(state, event)
    except Exception as exc:  # any exception means the pair is undefined
        return f"{state} x {event}: raised {exc!r}"
    if not (isinstance(result, tuple) and len(result) == 2):
        return f"{state} x {event}: bad result {result!r}"
    nxt, actions = result
    if not isinstance(nxt, fsm.STATE_TYPES) or not isinstance(actions, list):
        return f"{state} x {event}: bad result {result!r}"
    if any(isinstance(a, fsm.LogIgnored) for a in actions) and (nxt != state or len(actions) != 1):
        return f"{state} x {event}: ignored pair changed state or acted"
    return None


def fixture_names():
    from vnlsim.scenario import bundled_scenarios

    return bundled_scenarios()


# filled by the acceptance module, printed by conftest at the end of the run
ACCEPTANCE_LINES: list[str] = []
