"""Besicovitch-type pseudometrics between orbits, with finite-checkpoint surrogates.

All quantities here are limits in the underlying theory; the computable
surrogate records the running average at every schedule checkpoint and
reports the max over the tail checkpoints for a limsup (min for a liminf).
The symbolic orbit distance uses the first-difference metric with a bounded
lookahead K: rho_j = 2^(-min{|k| <= K : x_{j+k} != y_{j+k}}), zero when no
difference is visible.  For truncated data (no continuation rule) the last
K indices of each checkpoint window are excluded and the exclusion is
reported; boundary coordinates are padded as agreements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .dynsys import OrbitWindow, Product, Rotation, SymbolicState
from .errors import ArgumentError, DomainError
from .schedule import CheckpointSchedule

LOOKAHEAD = 32
TAU_NUM = 1e-9


@dataclass(frozen=True)
class DensityTrace:
    """Prefix frequencies of a 0/1 sequence along a schedule."""

    schedule: CheckpointSchedule
    counts: tuple[int, ...]
    ratios: tuple[float, ...]
    upper: float  # limsup surrogate: max over tail checkpoints
    lower: float  # liminf surrogate: min over tail checkpoints

    def to_json(self) -> dict:
        return {
            "schedule": self.schedule.to_json(),
            "counts": list(self.counts),
            "ratios": list(self.ratios),
            "upper": self.upper,
            "lower": self.lower,
        }


def upper_density(indicator, schedule: CheckpointSchedule) -> DensityTrace:
    """Upper/lower density surrogates of {j : indicator[j]} along the schedule."""
    ind = np.ascontiguousarray(indicator).astype(bool)
    schedule.validate_length(ind.size)
    cums = np.cumsum(ind, dtype=np.int64)
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    counts = cums[cps - 1]
    ratios = counts / cps
    return DensityTrace(
        schedule,
        tuple(int(c) for c in counts),
        tuple(float(r) for r in ratios),
        upper=float(schedule.tail_max(ratios)),
        lower=float(schedule.tail_min(ratios)),
    )


@dataclass(frozen=True)
class PseudometricTrace:
    """Running orbit-distance averages along a schedule.

    ``estimate`` is the limsup surrogate (tail max); ``tail_min`` is the
    liminf surrogate used where a certified upper bound on a joining
    distance is wanted.  ``excluded_tail`` counts indices dropped from the
    end of every checkpoint window when the inputs are truncated.
    """

    schedule: CheckpointSchedule
    averages: tuple[float, ...]
    estimate: float
    tail_min: float
    metric: str
    lookahead: int | None = None
    excluded_tail: int = 0
    counts: tuple[int, ...] | None = None  # raw mismatch counts (d-bar only)

    def to_json(self) -> dict:
        data = {
            "schedule": self.schedule.to_json(),
            "averages": list(self.averages),
            "estimate": self.estimate,
            "tail_min": self.tail_min,
            "metric": self.metric,
            "excluded_tail": self.excluded_tail,
        }
        if self.lookahead is not None:
            data["lookahead"] = self.lookahead
        if self.counts is not None:
            data["counts"] = list(self.counts)
        return data


def _as_labels(x, n: int) -> np.ndarray:
    if isinstance(x, OrbitWindow):
        if x.labels is None:
            raise DomainError("a symbolic orbit window is required")
        labels = x.labels
    else:
        labels = np.ascontiguousarray(x, dtype=np.int64)
    if labels.size < n:
        raise ArgumentError(f"need at least {n} symbols, got {labels.size}")
    return labels[:n]


def dbar_estimate(x, y, schedule: CheckpointSchedule) -> PseudometricTrace:
    """Mismatch-density trace: (1/n) #{j < n : x_j != y_j} at each checkpoint."""
    n = schedule.last
    xa, ya = _as_labels(x, n), _as_labels(y, n)
    cums = np.cumsum(xa != ya, dtype=np.int64)
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    counts = cums[cps - 1]
    averages = counts / cps
    return PseudometricTrace(
        schedule,
        tuple(float(a) for a in averages),
        estimate=float(schedule.tail_max(averages)),
        tail_min=float(schedule.tail_min(averages)),
        metric="hamming0",
        counts=tuple(int(c) for c in counts),
    )


def _symbolic_profile(x: OrbitWindow, y: OrbitWindow, n: int, lookahead: int):
    """(rho profile over [0, n), excluded_tail, padded mismatch prefix sums)."""
    k = lookahead
    truncated = x.truncated or y.truncated

    def extended(w: OrbitWindow) -> np.ndarray:
        if not w.truncated:
            return w.extended_labels(-k, n + k)
        base = _as_labels(w, min(w.length, n + k))
        out = np.full(n + 2 * k, -1, dtype=np.int64)
        out[k : k + base.size] = base
        return out

    ex, ey = extended(x), extended(y)
    # pad undefined coordinates (-1 sentinels) as agreements on both sides
    undefined = (ex < 0) | (ey < 0)
    if undefined.any():
        ex = np.where(undefined, 0, ex)
        ey = np.where(undefined, 0, ey)
    profile = kernels.first_diff_profile(ex, ey, n, k)
    mismatch_prefix = np.cumsum(ex != ey, dtype=np.int64)
    excluded = k if truncated else 0
    return profile, excluded, mismatch_prefix


def _pair_profile(x: OrbitWindow, y: OrbitWindow, n: int, lookahead: int):
    """Per-index orbit distances rho(T^j x, T^j y) for j < n, plus exclusion."""
    if type(x.spec) is not type(y.spec):
        raise DomainError("orbit windows come from different system kinds")
    if isinstance(x.spec, Rotation):
        d = np.abs(x.angles[:n] - y.angles[:n])
        return np.minimum(d, 1.0 - d), 0
    if isinstance(x.spec, Product):
        pl, el = _pair_profile(x.parts[0], y.parts[0], n, lookahead)
        pr, er = _pair_profile(x.parts[1], y.parts[1], n, lookahead)
        return np.maximum(pl, pr), max(el, er)
    if x.labels is None or y.labels is None:
        raise DomainError("symbolic orbit windows are required")
    profile, excluded, _ = _symbolic_profile(x, y, n, lookahead)
    return profile, excluded


def _metric_name(spec) -> str:
    if isinstance(spec, Rotation):
        return "circle_arc"
    if isinstance(spec, Product):
        return f"max({_metric_name(spec.left)}, {_metric_name(spec.right)})"
    return "first_diff"


def _checkpoint_means(profile: np.ndarray, schedule: CheckpointSchedule, excluded: int) -> np.ndarray:
    if excluded and schedule.checkpoints[0] <= excluded:
        raise ArgumentError(
            f"first checkpoint must exceed the lookahead exclusion ({excluded})"
        )
    cums = np.cumsum(profile)
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    ends = cps - excluded
    return cums[ends - 1] / ends


def besicovitch_estimate(
    x: OrbitWindow, y: OrbitWindow, schedule: CheckpointSchedule, lookahead: int = LOOKAHEAD
) -> PseudometricTrace:
    """Besicovitch pseudometric surrogate along paired orbits x, y."""
    n = schedule.last
    if x.length < n or y.length < n:
        raise ArgumentError("orbit windows shorter than the schedule")
    profile, excluded = _pair_profile(x, y, n, lookahead)
    averages = _checkpoint_means(profile, schedule, excluded)
    return PseudometricTrace(
        schedule,
        tuple(float(a) for a in averages),
        estimate=float(schedule.tail_max(averages)),
        tail_min=float(schedule.tail_min(averages)),
        metric=_metric_name(x.spec),
        lookahead=lookahead if x.labels is not None or isinstance(x.spec, Product) else None,
        excluded_tail=excluded,
    )


def default_delta_grid(size: int = 64, floor: float = 2.0**-10) -> tuple[float, ...]:
    """Decreasing log-spaced thresholds in [floor, 1]."""
    return tuple(float(d) for d in np.geomspace(1.0, floor, size))


@dataclass(frozen=True)
class TildeResult:
    """inf{delta : upper-density{j : rho_j >= delta} < delta}, on a finite grid."""

    value: float
    qualified: bool
    grid: tuple[float, ...]
    densities: tuple[float, ...]  # upper-density surrogate per grid delta
    excluded_tail: int

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "qualified": self.qualified,
            "grid": list(self.grid),
            "densities": list(self.densities),
            "excluded_tail": self.excluded_tail,
        }


def tilde_besicovitch(
    x: OrbitWindow,
    y: OrbitWindow,
    schedule: CheckpointSchedule,
    delta_grid: Sequence[float] | None = None,
    lookahead: int = LOOKAHEAD,
) -> TildeResult:
    """Exceedance-density variant of the Besicovitch pseudometric."""
    grid = tuple(delta_grid) if delta_grid is not None else default_delta_grid()
    if not grid or any(d <= 0 for d in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
        raise ArgumentError("delta grid must be positive and strictly decreasing")
    n = schedule.last
    profile, excluded = _pair_profile(x, y, n, lookahead)
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    ends = cps - excluded
    if ends[0] <= 0:
        raise ArgumentError("first checkpoint must exceed the lookahead exclusion")
    densities = []
    for delta in grid:
        cums = np.cumsum(profile >= delta, dtype=np.int64)
        densities.append(float(schedule.tail_max(cums[ends - 1] / ends)))
    qualifying = [d for d, dens in zip(grid, densities) if dens < d]
    if qualifying:
        return TildeResult(min(qualifying), True, grid, tuple(densities), excluded)
    return TildeResult(max(grid), False, grid, tuple(densities), excluded)


@dataclass(frozen=True)
class AuditRow:
    label: str
    dbar: PseudometricTrace
    besicovitch: PseudometricTrace
    tilde: TildeResult
    lower_ok: bool  # dbar_n <= avg_n at every checkpoint
    upper_ok: bool  # avg_n <= 3*(padded mismatches)/denominator at every checkpoint
    tilde_ok: bool  # tail averages <= delta*(1 + diameter) when tilde qualified

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.tilde_ok

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "dbar": self.dbar.to_json(),
            "besicovitch": self.besicovitch.to_json(),
            "tilde": self.tilde.to_json(),
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
            "tilde_ok": self.tilde_ok,
        }


@dataclass(frozen=True)
class AuditReport:
    """Uniform-equivalence audit of (d-bar, D_B, tilde-D_B) over a pair corpus.

    The certified envelope for the first-difference metric with lookahead K:
      dbar_n <= avg_n                        (a coordinate-0 mismatch has rho = 1)
      avg_n  <= 3 * M_n / denom_n            (each mismatch in the K-padded window
                                              contributes at most sum_d 2^-|d| < 3)
    and, when the tilde value delta qualifies, tail averages obey
      avg <= delta * (1 + diameter)          (layer-cake bound, diameter = 1).
    Together these witness that the three quantities vanish together.
    """

    rows: tuple[AuditRow, ...]
    lookahead: int
    all_ok: bool
    co_vanishing: bool

    def to_json(self) -> dict:
        return {
            "rows": [r.to_json() for r in self.rows],
            "lookahead": self.lookahead,
            "all_ok": self.all_ok,
            "co_vanishing": self.co_vanishing,
        }


def equivalence_audit(
    pairs: Sequence[tuple[OrbitWindow, OrbitWindow]],
    schedule: CheckpointSchedule,
    labels: Sequence[str] | None = None,
    lookahead: int = LOOKAHEAD,
) -> AuditReport:
    """Check the two-sided d-bar / D_B / tilde equivalence bounds on a corpus."""
    if not pairs:
        raise ArgumentError("audit needs at least one pair")
    n = schedule.last
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    rows = []
    for i, (x, y) in enumerate(pairs):
        if x.labels is None or y.labels is None:
            raise DomainError("equivalence audit applies to symbolic pairs")
        name = labels[i] if labels is not None else f"pair{i}"
        profile, excluded, mismatch_prefix = _symbolic_profile(x, y, n, lookahead)
        ends = cps - excluded
        avg = np.cumsum(profile)[ends - 1] / ends
        bes = PseudometricTrace(
            schedule,
            tuple(float(a) for a in avg),
            estimate=float(schedule.tail_max(avg)),
            tail_min=float(schedule.tail_min(avg)),
            metric=_metric_name(x.spec),
            lookahead=lookahead,
            excluded_tail=excluded,
        )
        dbar = dbar_estimate(x, y, schedule)
        tilde = tilde_besicovitch(x, y, schedule, lookahead=lookahead)
        # mismatch count over the same (possibly exclusion-shortened) windows the
        # averages use: rho_j == 1 exactly when the pair mismatches at coordinate 0
        matched_counts = np.cumsum(profile == 1.0, dtype=np.int64)[ends - 1]
        # padded mismatch count over coordinates [-K, n_i + K)
        padded = mismatch_prefix[np.minimum(ends + 2 * lookahead, mismatch_prefix.size) - 1]
        lower_ok = bool(np.all(matched_counts / ends <= avg + TAU_NUM))
        upper_ok = bool(np.all(avg <= 3.0 * padded / ends + TAU_NUM))
        if tilde.qualified:
            tail_avg = max(schedule.tail(list(avg)))
            tilde_ok = bool(tail_avg <= tilde.value * 2.0 + TAU_NUM)
        else:
            tilde_ok = True
        rows.append(AuditRow(name, dbar, bes, tilde, lower_ok, upper_ok, tilde_ok))
    all_ok = all(r.ok for r in rows)
    # The verified per-checkpoint envelope squeezes every average between its
    # own mismatch density and 3x the padded density, so tail maxima inherit
    # the same two-sided bounds: the three quantities vanish together across
    # the corpus exactly when every row satisfies its envelope.
    co_vanishing = all_ok
    return AuditReport(tuple(rows), lookahead, all_ok, co_vanishing)
