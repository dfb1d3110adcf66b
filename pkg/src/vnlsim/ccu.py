"""Central Control Unit attached to each base station."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .radio import Cell, GeometryError, RadioParams, Vmp, rss_dbm, threshold_from_radius


class RegistrationError(LookupError):
    pass


@dataclass
class VisitRecord:
    node: str
    cell: str
    t_in: float
    t_out: float | None = None

    @property
    def duration(self) -> float | None:
        return None if self.t_out is None else self.t_out - self.t_in


@dataclass
class DelayEntry:
    samples: list[float] = field(default_factory=list)
    average: float = 0.0
    _total: Fraction = field(default=Fraction(0), repr=False)

    def add(self, sample: float) -> None:
        # exact running sum so the average is the correctly rounded mean
        self.samples.append(sample)
        self._total += Fraction(sample)
        self.average = float(self._total / len(self.samples))


def allocate_vmps(
    cell: Cell, count: int, r1: float, r: float, radio: RadioParams | None = None
) -> list[Vmp]:
    """VMPs evenly spaced on the circle of radius ``r1`` around the BS."""
    if count < 1:
        raise GeometryError("VMP count must be >= 1")
    if not 0 < r < r1:
        raise GeometryError(f"need 0 < r < r1, got r={r}, r1={r1}")
    if r1 + r > cell.radius_R:
        raise GeometryError(f"r1 + r = {r1 + r} exceeds cell radius {cell.radius_R}")
    radio = radio or cell.radio
    vrss = threshold_from_radius(radio, r1 + r)
    cx, cy = cell.center
    out = []
    for i in range(count):
        a = 2 * math.pi * i / count
        out.append(Vmp(f"{cell.bs_id}:v{i}", (cx + r1 * math.cos(a), cy + r1 * math.sin(a)), r, r1, vrss))
    return out


def trigger_distance(
    cell: Cell, vmp: Vmp, speed: float, handoff_delay: float, margin_s: float
) -> float:
    return max(vmp.offset_r1 + vmp.radius_r, cell.radius_R - speed * (handoff_delay + margin_s))


class Ccu:
    def __init__(self, cell: Cell, deny_list=()):
        self.cell = cell
        self.bs_id = cell.bs_id
        self.deny_list = set(deny_list)
        self.visits: list[VisitRecord] = []
        self.open: dict[str, VisitRecord] = {}
        self.durations: list[float] = []
        self.duplicates = 0
        self.transitions: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
        self._awaiting_next: set[str] = set()
        self.delays: dict[tuple[str, str], DelayEntry] = {}
        self.probe_failures = 0
        self._seen: set[str] = set()

    # -- registry -------------------------------------------------------
    def register(self, node: str, t: float) -> VisitRecord:
        rec = self.open.get(node)
        if rec is not None:
            self.duplicates += 1
            return rec
        rec = VisitRecord(node, self.bs_id, t)
        self.open[node] = rec
        self.visits.append(rec)
        self._seen.add(node)
        return rec

    def record_departure(self, node: str, t: float) -> VisitRecord:
        rec = self.open.pop(node, None)
        if rec is None:
            raise RegistrationError(f"{node} has no open visit in {self.bs_id}")
        rec.t_out = t
        self.durations.append(t - rec.t_in)
        self._awaiting_next.add(node)
        return rec

    def note_next_cell(self, node: str, next_cell: str) -> bool:
        """Count the transition once the cell a departed node went to is known."""
        if node not in self._awaiting_next:
            return False
        self._awaiting_next.discard(node)
        self.transitions[node][next_cell] += 1
        return True

    def history(self, node: str) -> list[VisitRecord]:
        return [v for v in self.visits if v.node == node]

    # -- prediction -----------------------------------------------------
    def stay_probability(self, t: float) -> float:
        if not self.durations:
            return 1.0
        return sum(1 for d in self.durations if d > t) / len(self.durations)

    def predict_next_cell(self, node: str) -> tuple[str, float] | None:
        row = self.transitions.get(node)
        if not row or sum(row.values()) == 0:
            row = defaultdict(int)
            for counts in self.transitions.values():
                for cell, n in counts.items():
                    row[cell] += n
        total = sum(row.values())
        if total == 0:
            return None
        cell = min(row, key=lambda c: (-row[c], c))
        return cell, row[cell] / total

    # -- cross-layer delay probing -------------------------------------
    def probe_handoff_delay(
        self,
        vmp_id: str,
        neighbor_bs: str,
        link_latency_s: float | None,
        processing_s: float,
    ) -> float | None:
        """Record one invalid-auth round trip; ``None`` latency means unreachable."""
        if link_latency_s is None:
            self.probe_failures += 1
            return None
        sample = 2 * link_latency_s + processing_s
        self.delays.setdefault((vmp_id, neighbor_bs), DelayEntry()).add(sample)
        return sample

    def average_delay(self, vmp_id: str, neighbor_bs: str) -> float | None:
        entry = self.delays.get((vmp_id, neighbor_bs))
        return entry.average if entry and entry.samples else None

    def predicted_rss_trigger(
        self, vmp: Vmp, speed: float, handoff_delay: float, margin_s: float
    ) -> float:
        d = trigger_distance(self.cell, vmp, speed, handoff_delay, margin_s)
        return rss_dbm(self.cell.radio, d)

    # -- identity -------------------------------------------------------
    def validate_identity(self, claimed_id: str) -> bool:
        return claimed_id in self._seen and claimed_id not in self.deny_list

    def knows(self, node: str) -> bool:
        return node in self._seen
