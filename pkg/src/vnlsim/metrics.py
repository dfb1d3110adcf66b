"""QoS metrics derived purely from a trace, plus trace/metrics file I/O."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .simcore import TraceRow

TRACE_COLUMNS = ("time", "node", "event_kind", "detail")
SIGNALING_KINDS = frozenset(
    {"loc_update", "register_request", "probe", "validation_request", "identity_query"}
)


class MetricsError(ValueError):
    pass


@dataclass
class SessionMetrics:
    sent: int = 0
    delivered: int = 0
    lost: int = 0
    expired: int = 0
    in_flight: int = 0
    max_gap_s: float = 0.0
    interruption_time_s: float = 0.0


@dataclass
class NodeMetrics:
    handover_latency_s: list[float] = field(default_factory=list)
    signaling_count: int = 0
    location_updates: int = 0
    energy_consumed: float = 0.0


@dataclass
class Metrics:
    sessions: dict[str, SessionMetrics] = field(default_factory=dict)
    nodes: dict[str, NodeMetrics] = field(default_factory=dict)
    lookup_latency_s: list[float] = field(default_factory=list)
    proxy_search_failures: int = 0
    probe_failures: int = 0
    in_flight_at_end: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(
            {k: SessionMetrics(**v) for k, v in d["sessions"].items()},
            {k: NodeMetrics(**v) for k, v in d["nodes"].items()},
            list(d["lookup_latency_s"]),
            d["proxy_search_failures"],
            d["probe_failures"],
            d["in_flight_at_end"],
        )


def parse_detail(detail: str, row_no: int | None = None) -> dict[str, str]:
    out = {}
    for token in detail.split():
        key, sep, value = token.partition("=")
        if not sep or not key:
            where = f"row {row_no}: " if row_no is not None else ""
            raise MetricsError(f"{where}malformed detail token {token!r}")
        out[key] = value
    return out


def _t(x: float) -> float:
    # the CSV keeps six decimals; normalise so in-memory and reloaded traces agree
    return float(f"{x:.6f}")


def compute_metrics(trace: list[TraceRow]) -> Metrics:
    m = Metrics()
    intervals: dict[str, float] = {}
    arrivals: dict[str, list[float]] = defaultdict(list)
    pending_ho: dict[str, float] = {}

    def session(sid: str) -> SessionMetrics:
        if sid not in m.sessions:
            m.sessions[sid] = SessionMetrics()
        return m.sessions[sid]

    def node(nid: str) -> NodeMetrics:
        if nid not in m.nodes:
            m.nodes[nid] = NodeMetrics()
        return m.nodes[nid]

    for i, row in enumerate(trace, start=2):  # row 1 is the CSV header
        if not isinstance(row, TraceRow):
            raise MetricsError(f"row {i}: not a trace row")
        t = _t(row.time)
        d = parse_detail(row.detail, i)
        kind = row.event_kind
        try:
            if kind == "session_start":
                intervals[d["session"]] = float(d["interval_s"])
                session(d["session"])
            elif kind == "pkt_send":
                session(d["session"]).sent += 1
            elif kind == "pkt_deliver":
                session(d["session"]).delivered += 1
                arrivals[d["session"]].append(t)
            elif kind == "pkt_drop":
                session(d["session"]).lost += 1
            elif kind == "pkt_expire":
                session(d["session"]).expired += 1
            elif kind == "fsm":
                ev, src, dst = d["event"], d["from"], d["to"]
                if ev in ("VrssBelowMin", "RssBelowMin") and src.startswith("Attached"):
                    pending_ho.setdefault(row.node, t)
                elif dst.startswith("Attached"):
                    start = pending_ho.pop(row.node, None)
                    if start is not None and ev == "RegistrationConfirmed":
                        node(row.node).handover_latency_s.append(round(t - start, 6))
            elif kind == "resolve":
                m.lookup_latency_s.append(float(d["latency_s"]))
            elif kind == "proxy_search_failed":
                m.proxy_search_failures += 1
            elif kind == "probe_failed":
                m.probe_failures += 1
            elif kind == "sim_end":
                m.in_flight_at_end = int(d["in_flight"])
        except (KeyError, ValueError) as exc:
            raise MetricsError(f"row {i}: bad {kind!r} row ({exc})") from None
        if kind in SIGNALING_KINDS and row.node != "-":
            node(row.node).signaling_count += 1
        if kind == "loc_update":
            node(row.node).location_updates += 1
        if "energy" in d and row.node != "-":
            try:
                node(row.node).energy_consumed += float(d["energy"])
            except ValueError:
                raise MetricsError(f"row {i}: bad energy value {d['energy']!r}") from None

    for sid, s in m.sessions.items():
        s.in_flight = s.sent - s.delivered - s.lost - s.expired
        times = arrivals.get(sid, [])
        gaps = [round(b - a, 6) for a, b in zip(times, times[1:])]
        s.max_gap_s = max(gaps, default=0.0)
        interval = intervals.get(sid, min(gaps, default=0.0))
        # a stall is any gap longer than two packet intervals
        s.interruption_time_s = round(sum(g - interval for g in gaps if g > 2 * interval), 6)
    for nm in m.nodes.values():
        nm.energy_consumed = round(nm.energy_consumed, 9)
    return m


# -- file I/O -----------------------------------------------------------
def write_trace(trace: list[TraceRow], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace:
            w.writerow((f"{row.time:.6f}", row.node, row.event_kind, row.detail))


def read_trace(path: str | Path) -> list[TraceRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise MetricsError(f"row 1: expected header {','.join(TRACE_COLUMNS)}")
        for i, rec in enumerate(reader, start=2):
            if len(rec) != 4:
                raise MetricsError(f"row {i}: expected 4 columns, got {len(rec)}")
            try:
                t = float(rec[0])
            except ValueError:
                raise MetricsError(f"row {i}: bad time {rec[0]!r}") from None
            rows.append(TraceRow(t, rec[1], rec[2], rec[3]))
    return rows


def emit(trace: list[TraceRow], metrics: Metrics, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.csv"
    metrics_path = out / "metrics.json"
    write_trace(trace, trace_path)
    metrics_path.write_text(json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n")
    return trace_path, metrics_path
