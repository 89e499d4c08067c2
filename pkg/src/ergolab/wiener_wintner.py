"""Twisted ergodic averages, frequency scans, and spectral-regularity diagnostics.

The central object is Av_n(theta) = (1/n) sum_{j<n} e^(-2 pi i theta j) s_j
for a sampled observable series s.  A frequency scan evaluates |Av_{n_m}| on
an oversampled uniform grid (one zero-padded FFT), refines each peak by
golden-section search, certifies convergence along a checkpoint schedule,
and snaps refined frequencies to nearby rationals with small denominator.
Limits are never claimed: every reported quantity is a finite-n surrogate
with its thresholds echoed in the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.fft

from . import kernels
from .errors import ArgumentError, DomainError
from .schedule import CheckpointSchedule

TAU_REG = 0.02
TAU_NUM = 1e-9
Q_MAX = 128
GOLDEN_ITERS = 40
EXCLUSION_FLOOR = 32.0
EXCLUSION_SAFETY = 2.0
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FrequencyProbe:
    """A frequency theta in [0, 1), optionally certified as an exact rational p/q."""

    theta: float
    exact_rational: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta < 1.0:
            raise ArgumentError(f"theta {self.theta} outside [0, 1)")
        if self.exact_rational is not None:
            p, q = self.exact_rational
            if q <= 0 or math.gcd(p, q) != 1:
                raise ArgumentError("exact rational must be reduced with q > 0")
            if abs(self.theta - p / q) > 1e-15:
                raise ArgumentError("theta does not match its rational certificate")

    @classmethod
    def rational(cls, p: int, q: int) -> "FrequencyProbe":
        if q <= 0:
            raise ArgumentError("denominator must be positive")
        frac = Fraction(p, q) % 1
        return cls(float(frac), (frac.numerator, frac.denominator))

    def to_json(self) -> dict:
        p, q = self.exact_rational if self.exact_rational else (None, None)
        return {"theta": self.theta, "p": p, "q": q}


def _as_probe(probe) -> FrequencyProbe:
    if isinstance(probe, FrequencyProbe):
        return probe
    return FrequencyProbe(float(probe) % 1.0)


def _as_series(series) -> np.ndarray:
    s = np.ascontiguousarray(series, dtype=np.complex128)
    if s.ndim != 1 or s.size == 0:
        raise ArgumentError("series must be a nonempty 1-d sequence")
    return s


def tau_conv_default(n_last: int) -> float:
    return 10.0 / math.sqrt(n_last)


@dataclass(frozen=True)
class AveragesTrace:
    """Twisted averages along a schedule with a finite-n convergence verdict.

    verdict: converged if the diameter of the last three checkpoint values is
    at most tau_conv; oscillating if it exceeds 4 * tau_conv; undetermined
    in between.  ``limit`` is the last value when converged, else None.
    """

    probe: FrequencyProbe
    schedule: CheckpointSchedule
    values: tuple[complex, ...]
    verdict: str
    diameter: float
    tau_conv: float
    limit: complex | None = None

    def to_json(self) -> dict:
        return {
            "probe": self.probe.to_json(),
            "checkpoints": list(self.schedule.checkpoints),
            "values": [[v.real, v.imag] for v in self.values],
            "verdict": self.verdict,
            "diameter": self.diameter,
            "tau_conv": self.tau_conv,
            "limit": None if self.limit is None else [self.limit.real, self.limit.imag],
        }


def ww_average(series, probe, n: int) -> complex:
    """(1/n) sum_{j<n} e^(-2 pi i theta j) series[j], via the anchored recurrence."""
    s = _as_series(series)
    n = int(n)
    if n <= 0 or n > s.size:
        raise ArgumentError(f"n must lie in [1, {s.size}], got {n}")
    theta = _as_probe(probe).theta
    total = kernels.twisted_checkpoint_sums(s, theta, np.array([n], dtype=np.int64))
    return complex(total[0] / n)


def ww_trace(series, probe, schedule: CheckpointSchedule) -> AveragesTrace:
    """Twisted averages at every checkpoint plus the convergence verdict."""
    s = _as_series(series)
    schedule.validate_length(s.size)
    probe = _as_probe(probe)
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    sums = kernels.twisted_checkpoint_sums(s, probe.theta, cps)
    values = sums / cps
    return _build_trace(probe, schedule, values)


def _build_trace(
    probe: FrequencyProbe, schedule: CheckpointSchedule, values: np.ndarray
) -> AveragesTrace:
    tail = values[-3:] if values.size >= 3 else values
    diameter = float(max(abs(a - b) for a in tail for b in tail))
    tau_conv = tau_conv_default(schedule.last)
    if diameter <= tau_conv:
        verdict, limit = "converged", complex(values[-1])
    elif diameter > 4.0 * tau_conv:
        verdict, limit = "oscillating", None
    else:
        verdict, limit = "undetermined", None
    return AveragesTrace(
        probe=probe,
        schedule=schedule,
        values=tuple(complex(v) for v in values),
        verdict=verdict,
        diameter=diameter,
        tau_conv=tau_conv,
        limit=limit,
    )


@dataclass(frozen=True)
class SpectrumEntry:
    probe: FrequencyProbe
    trace: AveragesTrace
    amplitude: float

    def to_json(self) -> dict:
        last = self.trace.values[-1]
        p, q = self.probe.exact_rational if self.probe.exact_rational else (None, None)
        return {
            "theta": self.probe.theta,
            "p": p,
            "q": q,
            "re_av": last.real,
            "im_av": last.imag,
            "amplitude": self.amplitude,
            "verdict": self.trace.verdict,
        }


@dataclass(frozen=True)
class FrequencySpectrum:
    """Detected frequencies of a series, sorted by amplitude descending.

    ``residual_max`` is the largest grid amplitude outside the exclusion
    zones of all candidates (reported and rejected); under a sane detection
    threshold it stays below tau_det.  ``rejected`` keeps candidates whose
    traces did not converge: they are not certified frequencies but still
    shield their grid neighborhoods from the residual.
    """

    entries: tuple[SpectrumEntry, ...]
    rejected: tuple[SpectrumEntry, ...]
    residual_max: float
    grid_meta: dict

    def amplitudes(self) -> dict[float, float]:
        return {e.probe.theta: e.amplitude for e in self.entries}

    def to_json(self) -> dict:
        return {
            "entries": [e.to_json() for e in self.entries],
            "rejected": [e.to_json() for e in self.rejected],
            "residual_max": self.residual_max,
            "grid_meta": dict(self.grid_meta),
        }


def _grid_amplitudes(s: np.ndarray, n: int, grid_size: int) -> np.ndarray:
    spectrum = scipy.fft.fft(s[:n], n=grid_size)
    return np.abs(spectrum) / n


def _circular_peak_groups(mask: np.ndarray, amps: np.ndarray) -> list[int]:
    """Indices of per-run argmax peaks, with wraparound-aware run grouping."""
    size = mask.size
    if not mask.any():
        return []
    if mask.all():
        return [int(np.argmax(amps))]
    # rotate so index 0 is outside every run, making runs contiguous
    start = int(np.flatnonzero(~mask)[0])
    rot = np.roll(mask, -start)
    d = np.diff(rot.astype(np.int8))
    starts = np.flatnonzero(d == 1) + 1
    stops = np.flatnonzero(d == -1) + 1
    if rot[-1]:
        stops = np.append(stops, rot.size)
    peaks = []
    for a, b in zip(starts, stops):
        idx = (np.arange(a, b) + start) % size
        peaks.append(int(idx[np.argmax(amps[idx])]))
    return sorted(peaks)


def _amp_at(s: np.ndarray, n: int, thetas: np.ndarray) -> np.ndarray:
    sums = kernels.twisted_sums_multi(s, np.ascontiguousarray(thetas, dtype=np.float64), n)
    return np.abs(sums) / n


def _golden_refine(
    s: np.ndarray, n: int, centers: np.ndarray, width: float, stop: float
) -> tuple[np.ndarray, np.ndarray]:
    """Batched golden-section maximization of |Av_n| around each center."""
    a = centers - width / 2.0
    b = centers + width / 2.0
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = _amp_at(s, n, x1), _amp_at(s, n, x2)
    best_t = centers.copy()
    best_f = _amp_at(s, n, centers)

    def track(xs: np.ndarray, fs: np.ndarray) -> None:
        better = fs > best_f
        best_t[better] = xs[better]
        best_f[better] = fs[better]

    track(x1, f1)
    track(x2, f2)
    for _ in range(GOLDEN_ITERS):
        if float(np.max(b - a)) < stop:
            break
        left = f1 >= f2  # maximum bracketed in [a, x2] vs [x1, b]
        new_a = np.where(left, a, x1)
        new_b = np.where(left, x2, b)
        carried_x = np.where(left, x1, x2)  # survives as the other interior point
        carried_f = np.where(left, f1, f2)
        fresh_x = np.where(
            left,
            new_b - _INV_PHI * (new_b - new_a),
            new_a + _INV_PHI * (new_b - new_a),
        )
        fresh_f = _amp_at(s, n, fresh_x)
        track(fresh_x, fresh_f)
        a, b = new_a, new_b
        x1 = np.where(left, fresh_x, carried_x)
        f1 = np.where(left, fresh_f, carried_f)
        x2 = np.where(left, carried_x, fresh_x)
        f2 = np.where(left, carried_f, fresh_f)
    return best_t, best_f


def _snap_rational(theta: float, n: int, q_max: int) -> tuple[float, tuple[int, int] | None]:
    frac = Fraction(theta).limit_denominator(q_max)
    if abs(theta - float(frac)) <= 1.0 / (n * frac.denominator):
        frac = frac % 1
        return float(frac), (frac.numerator, frac.denominator)
    return theta % 1.0, None


def frequency_scan(
    series,
    grid_size: int | None = None,
    refine_passes: int = 2,
    schedule: CheckpointSchedule | None = None,
    *,
    tau_det: float | None = None,
    q_max: int = Q_MAX,
) -> FrequencySpectrum:
    """Scan for frequencies: FFT grid pass, golden-section refinement, traces.

    Grid amplitudes |Av_{n_m}(k / grid_size)| come from one zero-padded FFT;
    every run of grid points above tau_det contributes its argmax as a
    candidate.  Candidates are refined (refine_passes golden-section rounds
    in a window of width 2/n_m), deduplicated within 1/(2 n_m), snapped to
    rationals p/q (q <= q_max) within 1/(n_m q), sidelobe-suppressed (weaker
    candidates inside a stronger one's exclusion zone are dropped), and
    traced along the schedule.  Only converged candidates become entries.
    """
    if schedule is None:
        raise ArgumentError("a checkpoint schedule is required")
    s = _as_series(series)
    schedule.validate_length(s.size)
    if refine_passes < 0:
        raise ArgumentError("refine_passes must be nonnegative")
    n = schedule.last
    sup = float(np.abs(s[:n]).max())
    tau = 0.05 * sup if tau_det is None else float(tau_det)
    if tau <= 0 and sup > 0:
        raise ArgumentError("tau_det must be positive")

    min_grid = 4 * n
    if grid_size is None:
        grid_size = scipy.fft.next_fast_len(min_grid)
    elif grid_size < min_grid:
        raise ArgumentError(f"grid_size must be at least {min_grid}")
    grid_meta = {
        "grid_size": int(grid_size),
        "refine_passes": int(refine_passes),
        "tau_det": tau,
        "q_max": int(q_max),
        "tau_conv": tau_conv_default(n),
        "n_last": int(n),
        "checkpoints": list(schedule.checkpoints),
    }

    amps = _grid_amplitudes(s, n, grid_size)
    if sup == 0.0:
        return FrequencySpectrum((), (), 0.0, grid_meta)
    peak_idx = _circular_peak_groups(amps >= tau, amps)
    thetas = np.array([i / grid_size for i in peak_idx], dtype=np.float64)
    peak_amp = amps[peak_idx] if peak_idx else np.empty(0)

    width = 2.0 / n
    stop = 1e-4 / n
    for _ in range(int(refine_passes)):
        if thetas.size == 0:
            break
        thetas, peak_amp = _golden_refine(s, n, thetas, width, stop)
        width = max(4.0 * stop, width * 1e-2)

    # dedupe candidates closer than 1/(2 n), circularly, keeping the stronger
    cands = sorted(zip(thetas % 1.0, peak_amp), key=lambda t: t[0])
    merged: list[tuple[float, float]] = []
    for t, a in cands:
        if merged and t - merged[-1][0] < 0.5 / n:
            if a > merged[-1][1]:
                merged[-1] = (t, a)
        else:
            merged.append((t, a))
    if len(merged) > 1 and (merged[0][0] + 1.0) - merged[-1][0] < 0.5 / n:
        if merged[-1][1] > merged[0][1]:
            merged[0] = merged[-1]
        merged.pop()

    # snap to small-denominator rationals; label only, amplitude unchanged
    snapped: dict[float, tuple[float, tuple[int, int] | None, float]] = {}
    for t, a in merged:
        theta, exact = _snap_rational(t, n, q_max)
        if theta not in snapped or a > snapped[theta][2]:
            snapped[theta] = (theta, exact, a)

    # greedy sidelobe suppression: a weaker candidate inside a stronger
    # accepted candidate's exclusion zone is that peak's spectral leakage
    # (Dirichlet sidelobes clear tau out to ~amp/(pi tau) grid bins), not a
    # frequency of its own
    accepted: list[tuple[float, tuple[int, int] | None, float, float]] = []
    for theta, exact, amp in sorted(snapped.values(), key=lambda v: (-v[2], v[0])):
        radius = max(EXCLUSION_FLOOR, amp / (math.pi * tau)) * EXCLUSION_SAFETY / n
        dominated = any(
            min(abs(theta - t0), 1.0 - abs(theta - t0)) <= r0
            for t0, _, _, r0 in accepted
        )
        if not dominated:
            accepted.append((theta, exact, amp, radius))

    entries, rejected, zones = [], [], []
    for theta, exact, amp, radius in sorted(accepted, key=lambda v: v[0]):
        probe = FrequencyProbe(theta, exact)
        trace = ww_trace(s, probe, schedule)
        entry = SpectrumEntry(probe, trace, float(amp))
        zones.append((theta, radius))
        if trace.verdict == "converged" and amp >= tau:
            entries.append(entry)
        else:
            rejected.append(entry)

    visible = np.ones(grid_size, dtype=bool)
    for theta, radius in zones:
        lo = math.ceil((theta - radius) * grid_size)
        hi = math.floor((theta + radius) * grid_size)
        if hi - lo + 1 >= grid_size:
            visible[:] = False
            break
        visible[np.arange(lo, hi + 1) % grid_size] = False
    residual_max = float(amps[visible].max()) if visible.any() else 0.0

    entries.sort(key=lambda e: (-e.amplitude, e.probe.theta))
    rejected.sort(key=lambda e: (-e.amplitude, e.probe.theta))
    return FrequencySpectrum(tuple(entries), tuple(rejected), residual_max, grid_meta)


@dataclass(frozen=True)
class RegularityReport:
    """Spectral-mass accounting: sum of |Av|^2 over detected frequencies vs energy."""

    name: str
    target: float  # (1/n) sum |series_j|^2 over the scan prefix
    mass: float  # sum of amplitude^2 over spectrum entries
    defect: float  # target - mass, signed
    classification: str
    tau_reg: float

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "mass": self.mass,
            "defect": self.defect,
            "classification": self.classification,
            "tau_reg": self.tau_reg,
        }


def regularity_check(
    series, spectrum: FrequencySpectrum, name: str = "series", tau_reg: float = TAU_REG
) -> RegularityReport:
    """Compare detected spectral mass against the series energy at the scan length."""
    s = _as_series(series)
    n = int(spectrum.grid_meta["n_last"])
    if s.size < n:
        raise ArgumentError("series shorter than the scan it is audited against")
    target = float((np.abs(s[:n]) ** 2).mean())
    mass = float(sum(e.amplitude**2 for e in spectrum.entries))
    defect = target - mass
    if abs(defect) <= tau_reg * target + TAU_NUM:
        classification = "discrete-spectrum-consistent"
    elif defect > 0:
        classification = "spectral-mass-deficit"
    else:
        classification = "spectral-mass-excess"
    return RegularityReport(name, target, mass, defect, classification, tau_reg)


def shift_invariance_check(series, probe, k: int, schedule: CheckpointSchedule) -> float:
    """Max over checkpoints of |Av_n(s) - xi^(-k) Av_n(s shifted by k)|.

    The twist compensates the phase the shift introduces: the shifted average
    equals xi^k (S_{n+k} - S_k)/n, so the twisted deviation telescopes to
    |S_n - S_{n+k} + S_k| / n <= 2 k max|s| / n.
    """
    s = _as_series(series)
    k = int(k)
    if k < 0:
        raise ArgumentError("shift must be nonnegative")
    if schedule.last + k > s.size:
        raise ArgumentError("series too short for the shifted schedule")
    probe = _as_probe(probe)
    cps = np.asarray(schedule.checkpoints, dtype=np.int64)
    base = kernels.twisted_checkpoint_sums(s, probe.theta, cps) / cps
    shifted = kernels.twisted_checkpoint_sums(s[k:], probe.theta, cps) / cps
    twist = np.exp(-2j * np.pi * probe.theta * k)
    return float(np.abs(base - twist * shifted).max())


@dataclass(frozen=True)
class ContainmentReport:
    """Whether every detected frequency matches a candidate within 1/(2 n_m)."""

    covered: bool
    escapees: tuple[float, ...]
    matched: tuple[tuple[float, float], ...]  # (detected, matching candidate)
    tolerance: float
    spectrum: FrequencySpectrum

    def to_json(self) -> dict:
        return {
            "covered": self.covered,
            "escapees": list(self.escapees),
            "matched": [list(m) for m in self.matched],
            "tolerance": self.tolerance,
            "spectrum": self.spectrum.to_json(),
        }


def spectrum_containment(
    series,
    candidate_set: Sequence,
    schedule: CheckpointSchedule,
    **scan_kwargs,
) -> ContainmentReport:
    """Scan the series and test Spec(series) against a candidate frequency set."""
    candidates = [_as_probe(c).theta for c in candidate_set]
    spectrum = frequency_scan(series, schedule=schedule, **scan_kwargs)
    tol = 0.5 / schedule.last
    escapees, matched = [], []
    for entry in spectrum.entries:
        t = entry.probe.theta
        dists = [(min(abs(t - c), 1.0 - abs(t - c)), c) for c in candidates]
        best = min(dists, default=(math.inf, math.nan))
        if best[0] <= tol:
            matched.append((t, best[1]))
        else:
            escapees.append(t)
    return ContainmentReport(
        covered=not escapees,
        escapees=tuple(escapees),
        matched=tuple(matched),
        tolerance=tol,
        spectrum=spectrum,
    )
