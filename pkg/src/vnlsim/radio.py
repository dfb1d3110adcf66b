"""Cell and VMP geometry with a log-distance received-signal model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

Point = tuple[float, float]


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 30.0
    ref_distance_m: float = 1.0
    ref_pathloss_db: float = 40.0
    pathloss_exponent: float = 3.5

    def __post_init__(self):
        if self.ref_distance_m <= 0:
            raise GeometryError("ref_distance_m must be > 0")
        if self.ref_pathloss_db < 0:
            raise GeometryError("ref_pathloss_db must be >= 0")
        if not 2.0 <= self.pathloss_exponent <= 6.0:
            raise GeometryError("pathloss_exponent must lie in [2, 6]")


@dataclass(frozen=True)
class Vmp:
    vmp_id: str
    center: Point
    radius_r: float
    offset_r1: float
    vrss_min_dbm: float


@dataclass(frozen=True)
class Cell:
    bs_id: str
    center: Point
    radius_R: float
    rss_min_dbm: float
    radio: RadioParams
    vmps: tuple[Vmp, ...] = field(default_factory=tuple)

    @property
    def attach_range_m(self) -> float:
        """Distance within which the BS accepts a (re)registration."""
        if not self.vmps:
            return self.radius_R
        return max(v.offset_r1 + v.radius_r for v in self.vmps)

    @property
    def attach_rss_dbm(self) -> float:
        if not self.vmps:
            return self.rss_min_dbm
        return min(v.vrss_min_dbm for v in self.vmps)


def distance(p1: Point, p2: Point) -> float:
    return math.hypot(p1[0] - p2[0], p1[1] - p2[1])


def rss_dbm(radio: RadioParams, d: float) -> float:
    """Log-distance received power; distances under the reference are clamped."""
    if not d > 0:
        raise GeometryError(f"distance must be > 0, got {d!r}")
    d = max(d, radio.ref_distance_m)
    return (
        radio.tx_power_dbm
        - radio.ref_pathloss_db
        - 10.0 * radio.pathloss_exponent * math.log10(d / radio.ref_distance_m)
    )


def in_vmp(pos: Point, vmp: Vmp) -> bool:
    # boundary inclusive
    return distance(pos, vmp.center) <= vmp.radius_r


def threshold_from_radius(radio: RadioParams, d: float) -> float:
    return rss_dbm(radio, d)


def make_cell(
    bs_id: str,
    center: Point,
    radius_R: float,
    radio: RadioParams,
    vmps: tuple[Vmp, ...] = (),
) -> Cell:
    if radius_R <= 0:
        raise GeometryError(f"cell {bs_id}: radius must be > 0")
    cell = Cell(bs_id, center, radius_R, threshold_from_radius(radio, radius_R), radio, tuple(vmps))
    check_cell(cell)
    return cell


def check_cell(cell: Cell) -> None:
    for v in cell.vmps:
        if not 0 < v.radius_r < v.offset_r1:
            raise GeometryError(
                f"VMP {v.vmp_id}: need 0 < r < r1, got r={v.radius_r}, r1={v.offset_r1}"
            )
        if v.offset_r1 + v.radius_r > cell.radius_R:
            raise GeometryError(
                f"VMP {v.vmp_id}: r1 + r = {v.offset_r1 + v.radius_r} exceeds R = {cell.radius_R}"
            )
