"""Rate-distortion curves, Bjontegaard Delta, and dataset aggregation.

BD-Rate follows the standard construction: both curves are interpolated
as monotone shape-preserving piecewise cubics (PCHIP) of log10(rate)
over quality, the difference is averaged over the overlapping quality
interval by exact piecewise-polynomial integration, and the average log
ratio is mapped back to a percentage. Negative means the test curve
saves bitrate.

Two dataset reductions are provided: the conventional one (BD-Rate per
clip, then arithmetic mean) and the aggregate-curve one (harmonic-mean
rate and quality per ladder rung on each side, then a single BD-Rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    AggregationError,
    AnalysisError,
    CurveError,
    DomainError,
    OverlapError,
)
from .store import MetricRecord

METRIC_VMAF = "vmaf"
METRIC_PSNR_Y = "psnr_y"


@dataclass(frozen=True)
class RDPoint:
    """One (rate kb/s, quality score) operating point."""

    rate: float
    quality: float


@dataclass(frozen=True)
class RDCurve:
    """Cleaned operating points, strictly increasing in rate and quality."""

    id: str
    metric_kind: str
    points: tuple[RDPoint, ...]

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])


@dataclass(frozen=True)
class BDResult:
    """A BD value plus the interval and point counts behind it."""

    value: float
    kind: str  # "rate" (percent) | "quality" (score delta)
    overlap: tuple[float, float]
    anchor_points_used: int
    test_points_used: int
    method_note: str = ""


def clean_curve(
    points: Iterable[Sequence[float]],
    id: str = "",
    metric_kind: str = METRIC_VMAF,
) -> RDCurve:
    """Drop Pareto-dominated (rate, quality) points and sort by quality.

    A point is dominated when some other point reaches at least its
    quality at no more rate; among equal qualities the lowest rate
    survives. The survivors are strictly increasing in both axes.
    """
    pts = []
    for p in points:
        if isinstance(p, RDPoint):
            rate, quality = p.rate, p.quality
        else:
            rate, quality = float(p[0]), float(p[1])
        if not (rate > 0):
            raise CurveError(f"rates must be positive, got {rate}")
        if not math.isfinite(quality):
            raise CurveError(f"quality must be finite, got {quality}")
        pts.append((rate, quality))
    pts = sorted(set(pts))
    survivors = [
        p for p in pts
        if not any(q != p and q[1] >= p[1] and q[0] <= p[0] for q in pts)
    ]
    survivors.sort(key=lambda p: p[1])
    if len(survivors) < 2:
        raise CurveError(
            f"curve {id!r}: only {len(survivors)} point(s) survive cleaning; "
            "need at least 2"
        )
    return RDCurve(
        id=id, metric_kind=metric_kind,
        points=tuple(RDPoint(rate=r, quality=q) for r, q in survivors),
    )


class MonotoneInterpolant:
    """PCHIP through (x, y) knots; exact segment-wise integration.

    Passes through every knot and never overshoots neighbouring knot
    values, so a monotone knot sequence yields a monotone interpolant.
    Two knots degenerate to the straight line.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self._pchip = PchipInterpolator(self.x, self.y, extrapolate=False)

    @property
    def lo(self) -> float:
        return float(self.x[0])

    @property
    def hi(self) -> float:
        return float(self.x[-1])

    def __call__(self, at) -> np.ndarray:
        return self._pchip(at)

    def integrate(self, a: float, b: float) -> float:
        """Closed-form integral over [a, b] (piecewise polynomial)."""
        return float(self._pchip.integrate(a, b))


def interpolate(curve: RDCurve) -> MonotoneInterpolant:
    """quality -> log10(rate) interpolant of a cleaned curve."""
    return MonotoneInterpolant(curve.qualities, np.log10(curve.rates))


def _rate_interpolant(curve: RDCurve) -> MonotoneInterpolant:
    """log10(rate) -> quality interpolant (the dual axis order)."""
    return MonotoneInterpolant(np.log10(curve.rates), curve.qualities)


def _overlap(a: MonotoneInterpolant, b: MonotoneInterpolant,
             what: str) -> tuple[float, float]:
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if not lo < hi:
        raise OverlapError(
            f"curves share no {what} interval "
            f"([{a.lo:g}, {a.hi:g}] vs [{b.lo:g}, {b.hi:g}])"
        )
    return lo, hi


def _check_pair(anchor: RDCurve, test: RDCurve) -> None:
    if anchor.metric_kind != test.metric_kind:
        raise AnalysisError(
            f"metric kinds differ: {anchor.metric_kind} vs {test.metric_kind}"
        )


def bd_rate(anchor: RDCurve, test: RDCurve) -> BDResult:
    """Average percent bitrate difference of test vs anchor at equal quality."""
    _check_pair(anchor, test)
    fa = interpolate(anchor)
    ft = interpolate(test)
    lo, hi = _overlap(fa, ft, "quality")
    delta = (ft.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo)
    value = (10.0 ** delta - 1.0) * 100.0
    return BDResult(
        value=value, kind="rate", overlap=(lo, hi),
        anchor_points_used=len(anchor.points),
        test_points_used=len(test.points),
        method_note=f"pchip log10-rate over {anchor.metric_kind}; exact integral",
    )


def bd_quality(anchor: RDCurve, test: RDCurve) -> BDResult:
    """Average quality difference of test vs anchor at equal rate."""
    _check_pair(anchor, test)
    fa = _rate_interpolant(anchor)
    ft = _rate_interpolant(test)
    lo, hi = _overlap(fa, ft, "log-rate")
    value = (ft.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo)
    return BDResult(
        value=value, kind="quality", overlap=(lo, hi),
        anchor_points_used=len(anchor.points),
        test_points_used=len(test.points),
        method_note=f"pchip {anchor.metric_kind} over log10-rate; exact integral",
    )


def harmonic_mean(values: Iterable[float]) -> float:
    """n / sum(1/v); defined only for non-empty positive inputs."""
    vals = list(values)
    if not vals:
        raise DomainError("harmonic mean of an empty set")
    if any(v <= 0 for v in vals):
        raise DomainError(f"harmonic mean needs positive values, got {min(vals)}")
    return len(vals) / sum(1.0 / v for v in vals)


def _metric_value(record: MetricRecord, metric_kind: str) -> float:
    value = record.vmaf if metric_kind == METRIC_VMAF else record.psnr_y
    if value is None:
        raise AggregationError(
            f"record {record.key()} has no {metric_kind} measurement"
        )
    return value


def aggregate_points(
    records: Sequence[MetricRecord],
    metric_kind: str = METRIC_VMAF,
    method: str = "harmonic",
) -> RDPoint:
    """Collapse same-key per-clip records into one dataset (R, D) point.

    Harmonic means by default; ``method="arithmetic"`` implements the
    additive bits/distortion variant for comparison.
    """
    if not records:
        raise AggregationError("no records to aggregate")
    keys = {(r.family, r.preset, r.passes, r.target_kbps) for r in records}
    if len(keys) != 1:
        raise AggregationError(f"mixed configuration keys in aggregate: {sorted(keys)}")
    rates = [r.measured_kbps for r in records]
    quals = [_metric_value(r, metric_kind) for r in records]
    if method == "harmonic":
        return RDPoint(rate=harmonic_mean(rates), quality=harmonic_mean(quals))
    if method == "arithmetic":
        return RDPoint(rate=float(np.mean(rates)), quality=float(np.mean(quals)))
    raise AggregationError(f"unknown aggregation method {method!r}")


def aggregate_curve(
    records: Sequence[MetricRecord],
    ladder: Sequence[float],
    metric_kind: str = METRIC_VMAF,
    method: str = "harmonic",
    id: str = "",
) -> RDCurve:
    """One aggregate point per ladder rung with data, then a cleaned curve."""
    points = []
    for tbr in ladder:
        rung = [r for r in records if r.target_kbps == tbr]
        if rung:
            points.append(aggregate_points(rung, metric_kind, method))
    if len(points) < 2:
        raise CurveError(
            f"aggregate curve {id!r} spans {len(points)} ladder rung(s); need 2"
        )
    return clean_curve(points, id=id, metric_kind=metric_kind)


def smart_bd_rate(
    anchor_records: Sequence[MetricRecord],
    test_records: Sequence[MetricRecord],
    ladder: Sequence[float],
    metric_kind: str = METRIC_VMAF,
    method: str = "harmonic",
) -> BDResult:
    """BD-Rate between dataset-level aggregate curves."""
    anchor = aggregate_curve(anchor_records, ladder, metric_kind, method, id="anchor")
    test = aggregate_curve(test_records, ladder, metric_kind, method, id="test")
    result = bd_rate(anchor, test)
    note = f"smart ({method} aggregation); " + result.method_note
    return BDResult(
        value=result.value, kind=result.kind, overlap=result.overlap,
        anchor_points_used=result.anchor_points_used,
        test_points_used=result.test_points_used, method_note=note,
    )


def curves_from_records(
    records: Sequence[MetricRecord],
    metric_kind: str = METRIC_VMAF,
) -> dict[str, RDCurve]:
    """Per-clip cleaned curves of (measured rate, quality). Clips whose
    points collapse below two survivors are omitted."""
    by_clip: dict[str, list[MetricRecord]] = {}
    for rec in records:
        by_clip.setdefault(rec.clip_id, []).append(rec)
    curves = {}
    for clip_id, recs in sorted(by_clip.items()):
        pts = [(r.measured_kbps, _metric_value(r, metric_kind)) for r in recs]
        try:
            curves[clip_id] = clean_curve(pts, id=clip_id, metric_kind=metric_kind)
        except CurveError:
            continue
    return curves


def classic_bd_rate(
    anchor_curves: Mapping[str, RDCurve],
    test_curves: Mapping[str, RDCurve],
) -> BDResult:
    """Arithmetic mean of per-clip BD-Rates over the shared clip set.

    Clips missing on either side, or failing with a degenerate overlap,
    are excluded and counted in the method note rather than silently
    treated as zero.
    """
    shared = sorted(set(anchor_curves) & set(test_curves))
    missing = len(set(anchor_curves) ^ set(test_curves))
    values = []
    errors = 0
    lo = math.inf
    hi = -math.inf
    anchor_pts = test_pts = 0
    for clip_id in shared:
        try:
            result = bd_rate(anchor_curves[clip_id], test_curves[clip_id])
        except (OverlapError, CurveError):
            errors += 1
            continue
        values.append(result.value)
        lo = min(lo, result.overlap[0])
        hi = max(hi, result.overlap[1])
        anchor_pts += result.anchor_points_used
        test_pts += result.test_points_used
    if not values:
        raise AggregationError(
            f"no clip produced a valid BD-Rate ({errors} overlap failures, "
            f"{missing} unmatched clips)"
        )
    note = (f"classic mean over {len(values)} clips; "
            f"excluded: {errors} overlap/curve errors, {missing} unmatched")
    return BDResult(
        value=float(np.mean(values)), kind="rate", overlap=(lo, hi),
        anchor_points_used=anchor_pts, test_points_used=test_pts,
        method_note=note,
    )


def curve_csv_rows(curve: RDCurve) -> list[str]:
    """CSV export rows (id, q, rate_kbps)."""
    rows = ["id,q,rate_kbps"]
    for p in curve.points:
        rows.append(f"{curve.id},{p.quality:.9g},{p.rate:.9g}")
    return rows


def result_csv_row(anchor_id: str, test_id: str, metric_kind: str,
                   result: BDResult) -> str:
    """CSV export row (anchor, test, metric, bd_percent, q_low, q_high, ...)."""
    return (f"{anchor_id},{test_id},{metric_kind},{result.value:.6f},"
            f"{result.overlap[0]:.9g},{result.overlap[1]:.9g},"
            f"{result.anchor_points_used},{result.test_points_used}")
