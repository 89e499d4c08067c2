"""Joining distances between invariant measures: exact periodic values and brackets.

Two regimes.  For pairs of periodic orbits the distance is an exact finite
minimum: every shift-invariant coupling of two periodic orbit measures is a
convex mixture of the g = gcd(p, q) relative-offset orbit pairings, and the
cost is linear, so the optimum sits at one offset.  For general orbit data the
distance is bracketed: a transport LP on empirical k-block measures gives a
certified lower bound, and the average cost of the aligned pairing gives an
upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse
from scipy.optimize import linprog

from .besicovitch import TAU_NUM, besicovitch_estimate, dbar_estimate
from .dynsys import LABEL_DTYPE, OrbitWindow, Rotation, orbit_from_labels
from .errors import ArgumentError, CapacityError, DataQualityError, DomainError
from .measures import PeriodicMeasure, empirical_measure, periodic_from_word, word_to_text
from .schedule import CheckpointSchedule

SUPPORT_CAP = 512
ALIGN_EXACT_CAP = 1 << 22  # longest common period evaluated exactly for upper bounds
DUAL_TOL = 1e-7
RESIDUAL_TOL = 1e-9
OTHER_LABEL = "*other*"


@dataclass(frozen=True)
class CouplingPlan:
    """Optimal transport plan with duality and marginal certificates."""

    support: tuple[tuple[str, str, float], ...]
    value: float
    marginal_residuals: tuple[float, float]
    dual_gap: float

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "support": [list(row) for row in self.support],
            "marginal_residuals": list(self.marginal_residuals),
            "dual_gap": self.dual_gap,
        }


@dataclass(frozen=True)
class ExactDistance:
    """Exact distance between two periodic orbit measures, with the optimal offset."""

    value: float
    offset: int
    cost: str
    period_a: int
    period_b: int
    numerator: int | None = None
    denominator: int | None = None

    @property
    def regime(self) -> str:
        return "exact"

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "offset": self.offset,
            "cost": self.cost,
            "regime": self.regime,
            "periods": [self.period_a, self.period_b],
            "fraction": None
            if self.numerator is None
            else [self.numerator, self.denominator],
        }


def transport_lp(
    cost,
    mu,
    nu,
    labels_a: Sequence[str] | None = None,
    labels_b: Sequence[str] | None = None,
) -> tuple[float, CouplingPlan]:
    """Minimize sum_ij cost[i,j] * x[i,j] over couplings of mu and nu.

    Solved with the HiGHS LP backend; the result is certified by dual
    feasibility and complementary slackness before being returned, and the
    recovered coupling must reproduce both marginals to within 1e-9.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    nu = np.ascontiguousarray(nu, dtype=np.float64)
    if cost.ndim != 2 or cost.shape != (mu.size, nu.size):
        raise ArgumentError("cost matrix shape must match the marginal supports")
    if np.any(cost < 0) or not np.all(np.isfinite(cost)):
        raise DomainError("ground costs must be finite and nonnegative")
    for side, m in (("first", mu), ("second", nu)):
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-9:
            raise DomainError(f"{side} marginal is not a probability vector")
    P, Q = cost.shape
    if max(P, Q) > SUPPORT_CAP:
        raise CapacityError(f"transport support {max(P, Q)} exceeds cap {SUPPORT_CAP}")

    var = np.arange(P * Q)
    rows = np.concatenate([var // Q, P + (var % Q)])
    cols = np.concatenate([var, var])
    a_eq = scipy.sparse.csr_matrix(
        (np.ones(2 * P * Q), (rows, cols)), shape=(P + Q, P * Q)
    )
    b_eq = np.concatenate([mu, nu])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, method="highs")
    if res.status != 0:
        raise DataQualityError(f"transport solve failed: {res.message}")

    x = res.x.reshape(P, Q)
    duals = np.asarray(res.eqlin.marginals, dtype=np.float64)
    reduced = cost - duals[:P, None] - duals[None, P:]
    dual_gap = float(max(0.0, -reduced.min(initial=0.0)))
    slack = float(np.abs(x * reduced).max(initial=0.0))
    if dual_gap > DUAL_TOL or slack > DUAL_TOL:
        raise DataQualityError(
            f"transport optimality certificate failed (gap {dual_gap:.2e}, slack {slack:.2e})"
        )
    resid = (
        float(np.abs(x.sum(axis=1) - mu).max()),
        float(np.abs(x.sum(axis=0) - nu).max()),
    )
    if max(resid) > RESIDUAL_TOL:
        raise DataQualityError(f"coupling marginal residuals {resid} exceed 1e-9")

    la = list(labels_a) if labels_a is not None else [str(i) for i in range(P)]
    lb = list(labels_b) if labels_b is not None else [str(j) for j in range(Q)]
    ii, jj = np.nonzero(x > 1e-12)
    support = tuple(
        (la[i], lb[j], float(x[i, j])) for i, j in zip(ii.tolist(), jj.tolist())
    )
    value = float(res.fun)
    return value, CouplingPlan(support, value, resid, dual_gap)


def _as_periodic(m) -> PeriodicMeasure:
    if isinstance(m, PeriodicMeasure):
        return m
    if isinstance(m, OrbitWindow):
        state = m.origin
        period = getattr(state, "period", None)
        if period is None:
            raise DomainError("orbit is not periodic")
        return periodic_from_word(
            [state.symbol(j) for j in range(period)], state.alphabet_size
        )
    return periodic_from_word(m)


def dbar_periodic_exact(a, b) -> ExactDistance:
    """Exact normalized-Hamming joining distance between two periodic orbit measures.

    Minimizes the mismatch density over the g = gcd(p, q) relative offsets,
    each evaluated over one lcm(p, q) window; ties resolve to the smallest
    offset.  The value is the rational numerator/denominator rounded once.
    """
    pa, pb = _as_periodic(a), _as_periodic(b)
    if pa.alphabet_size != pb.alphabet_size:
        raise ArgumentError("alphabets differ")
    p, q = pa.period, pb.period
    g, L = math.gcd(p, q), math.lcm(p, q)
    t = np.arange(L)
    aw = np.asarray(pa.word, dtype=LABEL_DTYPE)[t % p]
    bw = np.asarray(pb.word, dtype=LABEL_DTYPE)
    best_count, best_r = L + 1, 0
    for r in range(g):
        count = int(np.count_nonzero(aw != bw[(t + r) % q]))
        if count < best_count:
            best_count, best_r = count, r
    return ExactDistance(
        value=best_count / L,
        offset=best_r,
        cost="hamming0",
        period_a=p,
        period_b=q,
        numerator=best_count,
        denominator=L,
    )


def _periodic_rho_mean(mismatch: np.ndarray) -> float:
    """Mean of 2^-dist(t, nearest mismatch) over one period of a periodic mismatch set."""
    L = mismatch.size
    pos = np.flatnonzero(mismatch)
    if pos.size == 0:
        return 0.0
    ext = np.concatenate([pos - L, pos, pos + L]).astype(np.float64)
    t = np.arange(L, dtype=np.float64)
    right = np.searchsorted(ext, t)
    dist = np.minimum(ext[right] - t, t - ext[right - 1])
    return float(np.exp2(-dist).mean())


def rhobar_periodic_exact(a, b) -> ExactDistance:
    """Exact joining distance in the system metric between two periodic orbits.

    Symbolic inputs use the first-difference metric with exact periodic
    continuation; rotation orbit windows (exact rational angle step) use the
    circle arc metric.  In both cases the minimum ranges over the finite set
    of relative-offset pairings, smallest offset winning ties.
    """
    if isinstance(a, OrbitWindow) and isinstance(a.spec, Rotation):
        if not (isinstance(b, OrbitWindow) and isinstance(b.spec, Rotation)):
            raise DomainError("cannot mix rotation and symbolic orbits")
        ra, rb = a.spec, b.spec
        if ra.exact is None or ra.exact != rb.exact:
            raise DomainError("need matching exact rational rotation angles")
        num, den = ra.exact
        da = (float(a.angles[0]) - float(b.angles[0])) % 1.0
        best_val, best_r = math.inf, 0
        for r in range(den):
            u = (da + (r * num % den) / den) % 1.0
            val = min(u, 1.0 - u)
            if val < best_val:
                best_val, best_r = val, r
        return ExactDistance(
            value=best_val,
            offset=best_r,
            cost="circle_arc",
            period_a=den,
            period_b=den,
        )

    pa, pb = _as_periodic(a), _as_periodic(b)
    if pa.alphabet_size != pb.alphabet_size:
        raise ArgumentError("alphabets differ")
    p, q = pa.period, pb.period
    g, L = math.gcd(p, q), math.lcm(p, q)
    t = np.arange(L)
    aw = np.asarray(pa.word, dtype=LABEL_DTYPE)[t % p]
    bw = np.asarray(pb.word, dtype=LABEL_DTYPE)
    best_val, best_r = math.inf, 0
    for r in range(g):
        val = _periodic_rho_mean(aw != bw[(t + r) % q])
        if val < best_val:
            best_val, best_r = val, r
    return ExactDistance(
        value=best_val,
        offset=best_r,
        cost="first_diff",
        period_a=p,
        period_b=q,
    )


def _coarsen(
    blocks: np.ndarray, probs: np.ndarray, keys: list[str]
) -> tuple[np.ndarray, np.ndarray, list[str], bool]:
    """Merge the lightest atoms into one zero-cost atom when over the support cap.

    The merged atom is priced at ground cost 0 against everything, which can
    only lower the transport value, so the lower-bound guarantee survives.
    """
    if probs.size <= SUPPORT_CAP:
        return blocks, probs, keys, False
    order = np.argsort(-probs, kind="stable")
    keep = np.sort(order[: SUPPORT_CAP - 1])
    rest = float(probs.sum() - probs[keep].sum())
    blocks = blocks[keep]
    probs = np.append(probs[keep], rest)
    keys = [keys[i] for i in keep.tolist()] + [OTHER_LABEL]
    return blocks, probs, keys, True


def _hamming_cost(blocks_a: np.ndarray, blocks_b: np.ndarray) -> np.ndarray:
    return (blocks_a[:, None, :] != blocks_b[None, :, :]).mean(axis=2)


def _rho_window_cost(blocks_a: np.ndarray, blocks_b: np.ndarray) -> np.ndarray:
    """Per-block-pair average of 2^-dist to the nearest in-window mismatch.

    Mismatches outside the k-window are invisible and score 0, so this cost
    is a pointwise lower bound for the first-difference metric along any
    pairing, which keeps the transport value a valid lower bound.
    """
    diff = blocks_a[:, None, :] != blocks_b[None, :, :]
    k = blocks_a.shape[1]
    idx = np.arange(k, dtype=np.float64)
    left = np.maximum.accumulate(np.where(diff, idx, -np.inf), axis=2)
    rev = np.where(diff, idx, np.inf)[..., ::-1]
    right = np.minimum.accumulate(rev, axis=2)[..., ::-1]
    dist = np.minimum(idx - left, right - idx)
    return np.exp2(-dist).mean(axis=2)


def _pad_cost(cost: np.ndarray, coarse_a: bool, coarse_b: bool) -> np.ndarray:
    if coarse_a:
        cost = np.vstack([cost, np.zeros((1, cost.shape[1]))])
    if coarse_b:
        cost = np.hstack([cost, np.zeros((cost.shape[0], 1))])
    return cost


@dataclass(frozen=True)
class RhoBarBracket:
    """Certified two-sided bracket for a joining distance from orbit data."""

    lower: float
    upper: float
    k: int
    cost: str
    plan: CouplingPlan
    upper_witness: dict
    coarsened: tuple[bool, bool]
    clamped: bool

    @property
    def regime(self) -> str:
        return "bracket"

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "k": self.k,
            "cost": self.cost,
            "regime": self.regime,
            "plan": self.plan.to_json(),
            "upper_witness": self.upper_witness,
            "coarsened": list(self.coarsened),
            "clamped": self.clamped,
        }


def _declared_alphabet(x) -> tuple[int, bool]:
    """(alphabet size, declared-by-a-system flag) for a window or raw labels."""
    if isinstance(x, OrbitWindow):
        if x.labels is None:
            raise DomainError("bracket estimation needs symbolic data")
        return x.spec.alphabet_size, True
    arr = np.ascontiguousarray(x, dtype=LABEL_DTYPE)
    return max(2, int(arr.max()) + 1), False


def _block_measure_of(x, k: int, n: int, alphabet_size: int):
    """k-block empirical measure of the first n coordinates, continuation-aware.

    Periodic origins get the exact invariant block measure (one period with
    wraparound); finite-sample block frequencies drift by O(period/n) and are
    only used when the period is unknown or impractically long.
    """
    if isinstance(x, OrbitWindow):
        period = getattr(x.origin, "period", None)
        if period is not None and period + k - 1 <= ALIGN_EXACT_CAP:
            ext = x.extended_labels(0, period + k - 1)
            return empirical_measure(ext, k, alphabet_size)
        if not x.truncated:
            ext = x.extended_labels(0, n + k - 1)
            return empirical_measure(ext, k, alphabet_size)
        if n > x.length:
            raise ArgumentError("schedule exceeds available data")
        return empirical_measure(x.labels[:n], k, alphabet_size)
    arr = np.ascontiguousarray(x, dtype=LABEL_DTYPE)
    if n > arr.size:
        raise ArgumentError("schedule exceeds available data")
    return empirical_measure(arr[:n], k, alphabet_size)


def rhobar_bracket(
    x, y, k: int, schedule: CheckpointSchedule, cost: str = "rho2k"
) -> RhoBarBracket:
    """Bracket the joining distance between the orbit measures behind two windows.

    lower: transport LP between the empirical k-block measures, ground cost
    ``d0`` (normalized Hamming on blocks) or ``rho2k`` (window-visible
    first-difference average).  upper: the aligned pairing's average cost.
    When both windows are periodic with a workable common period that average
    is evaluated exactly over one lcm window (a true upper bound: the aligned
    pairing is one admissible joining); otherwise it is the tail minimum of
    the checkpoint trace, padded by 2^-lookahead for ``rho2k`` where far
    mismatches are invisible.  An inversion beyond 1e-9 is a data-quality
    failure; a smaller one clamps the lower edge down to the upper edge.
    """
    if cost not in ("d0", "rho2k"):
        raise ArgumentError(f"unknown ground cost {cost!r}")
    if k <= 0:
        raise ArgumentError("block length must be positive")
    n = schedule.last
    alpha_a, decl_a = _declared_alphabet(x)
    alpha_b, decl_b = _declared_alphabet(y)
    if decl_a and decl_b and alpha_a != alpha_b:
        raise ArgumentError("alphabets differ")
    alphabet_size = max(alpha_a, alpha_b)
    if not isinstance(x, OrbitWindow):
        x = orbit_from_labels(x, alphabet_size)
    if not isinstance(y, OrbitWindow):
        y = orbit_from_labels(y, alphabet_size)
    em_a = _block_measure_of(x, k, n, alphabet_size)
    em_b = _block_measure_of(y, k, n, alphabet_size)

    blocks_a, pa = em_a.support_arrays()
    blocks_b, pb = em_b.support_arrays()
    keys_a = sorted(em_a.counts)
    keys_b = sorted(em_b.counts)
    blocks_a, pa, keys_a, ca = _coarsen(blocks_a, pa, keys_a)
    blocks_b, pb, keys_b, cb = _coarsen(blocks_b, pb, keys_b)
    ground = _hamming_cost(blocks_a, blocks_b) if cost == "d0" else _rho_window_cost(
        blocks_a, blocks_b
    )
    ground = _pad_cost(ground, ca, cb)
    lower, plan = transport_lp(ground, pa, pb, keys_a, keys_b)

    period_a = getattr(x.origin, "period", None)
    period_b = getattr(y.origin, "period", None)
    align_window = None
    if period_a is not None and period_b is not None:
        L = math.lcm(int(period_a), int(period_b))
        if L <= ALIGN_EXACT_CAP:
            align_window = L

    if cost == "d0":
        trace = dbar_estimate(x, y, schedule)
        pad = 0.0
        if align_window is not None:
            mism = x.extended_labels(0, align_window) != y.extended_labels(0, align_window)
            upper, surrogate = float(np.mean(mism)), "exact_period"
        else:
            upper, surrogate = trace.tail_min, "tail_min"
    else:
        trace = besicovitch_estimate(x, y, schedule)
        if align_window is not None:
            mism = x.extended_labels(0, align_window) != y.extended_labels(0, align_window)
            upper, pad, surrogate = _periodic_rho_mean(mism), 0.0, "exact_period"
        else:
            pad = float(np.exp2(-trace.lookahead))
            upper, surrogate = trace.tail_min + pad, "tail_min"
    upper_witness = {
        "pairing": "aligned",
        "surrogate": surrogate,
        "pad": pad,
        "averages": list(trace.averages),
        "checkpoints": list(trace.schedule.checkpoints),
    }

    clamped = False
    if lower > upper + TAU_NUM:
        raise DataQualityError(
            f"bracket inversion: lower {lower:.12g} exceeds upper {upper:.12g}"
        )
    if lower > upper:
        lower, clamped = upper, True
    return RhoBarBracket(
        lower=float(lower),
        upper=float(upper),
        k=k,
        cost=cost,
        plan=plan,
        upper_witness=upper_witness,
        coarsened=(ca, cb),
        clamped=clamped,
    )


@dataclass(frozen=True)
class SequenceAuditRow:
    word: str
    averages: tuple[float, ...]
    estimate: float
    certified_upper: float

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "averages": list(self.averages),
            "estimate": self.estimate,
            "certified_upper": self.certified_upper,
        }


@dataclass(frozen=True)
class SequenceAuditReport:
    """Per-measure distance traces of a periodic approximating sequence to a target."""

    rows: tuple[SequenceAuditRow, ...]
    consecutive_exact: tuple[float, ...]
    uppers_nonincreasing: bool
    cauchy: bool
    schedule: CheckpointSchedule

    def to_json(self) -> dict:
        return {
            "rows": [r.to_json() for r in self.rows],
            "consecutive_exact": list(self.consecutive_exact),
            "uppers_nonincreasing": self.uppers_nonincreasing,
            "cauchy": self.cauchy,
            "checkpoints": list(self.schedule.checkpoints),
        }


def rhobar_sequence_audit(
    measures: Sequence[PeriodicMeasure], target, schedule: CheckpointSchedule
) -> SequenceAuditReport:
    """Audit a sequence of periodic measures as approximants of a target orbit.

    Each measure gets a per-checkpoint normalized-Hamming trace against the
    target window; the tail minimum is exported as a certified upper bound on
    the joining distance.  Consecutive measures are compared exactly, and the
    Cauchy flag reports whether those exact gaps are nonincreasing, the finite
    surrogate for a Cauchy approximating sequence.
    """
    if not measures:
        raise ArgumentError("need at least one measure to audit")
    ms = [_as_periodic(m) for m in measures]
    n = schedule.last
    rows = []
    for m in ms:
        trace = dbar_estimate(target, m.repeated(n), schedule)
        rows.append(
            SequenceAuditRow(
                word=word_to_text(m.word),
                averages=trace.averages,
                estimate=trace.estimate,
                certified_upper=trace.tail_min,
            )
        )
    consecutive = tuple(
        dbar_periodic_exact(ms[i], ms[i + 1]).value for i in range(len(ms) - 1)
    )
    uppers = [r.certified_upper for r in rows]
    nonincreasing = all(b <= a + TAU_NUM for a, b in zip(uppers, uppers[1:]))
    cauchy = all(b <= a + TAU_NUM for a, b in zip(consecutive, consecutive[1:]))
    return SequenceAuditReport(
        rows=tuple(rows),
        consecutive_exact=consecutive,
        uppers_nonincreasing=nonincreasing,
        cauchy=cauchy,
        schedule=schedule,
    )
