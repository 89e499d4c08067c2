"""B-free characteristic sequences, their periodic truncations, and spectrum checks.

eta_B marks the integers avoiding every multiple of a generator set B.
Truncating B to its first k generators makes eta exactly periodic with
period lcm(b_1..b_k); those periodic approximants converge to eta_B in
mismatch density (the Davenport-Erdos experiment) and carry pure rational
discrete spectrum, which the spectrum experiment certifies three ways:
rational snapping with q | lcm, the spectral-mass identity, and agreement
with the exact one-period DFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft

from .besicovitch import TAU_NUM, PseudometricTrace, dbar_estimate
from .dynsys import (
    LABEL_DTYPE,
    BFreePoint,
    GeneratorContinuation,
    OrbitWindow,
    SymbolicState,
    generate_orbit,
)
from .errors import ArgumentError, CapacityError, DomainError
from .schedule import CheckpointSchedule
from .wiener_wintner import (
    TAU_REG,
    FrequencySpectrum,
    frequency_scan,
    regularity_check,
)

PRIME_SQUARES = "prime_squares"
LCM_CAP = 2**63


def _primes_up_to(limit: int) -> np.ndarray:
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def _first_primes(count: int) -> list[int]:
    bound = 16
    while True:
        primes = _primes_up_to(bound)
        if primes.size >= count:
            return primes[:count].tolist()
        bound *= 2


@dataclass(frozen=True)
class GeneratorSet:
    """Generators b_1 < b_2 < ... of a B-free set: a finite list or a named family."""

    generators: tuple[int, ...] = ()
    family: str | None = None

    def __post_init__(self) -> None:
        gens = tuple(int(b) for b in self.generators)
        object.__setattr__(self, "generators", gens)
        if self.family is None:
            if not gens:
                raise ArgumentError("a finite generator set must be nonempty")
        elif self.family != PRIME_SQUARES:
            raise ArgumentError(f"unknown generator family {self.family!r}")
        elif gens:
            raise ArgumentError("a named family does not take explicit generators")
        if any(b < 2 for b in gens):
            raise DomainError("generators must be at least 2")
        if any(b >= c for b, c in zip(gens, gens[1:])):
            raise DomainError("generators must be strictly increasing")

    @classmethod
    def from_rule(cls, rule, cap: int) -> "GeneratorSet":
        """Finite set {b in [2, cap] : rule(b)}; the cap makes user rules finite."""
        if cap < 2:
            raise ArgumentError("rule cap must be at least 2")
        return cls(tuple(b for b in range(2, cap + 1) if rule(b)))

    @property
    def is_family(self) -> bool:
        return self.family is not None

    def truncate(self, k: int) -> "GeneratorSet":
        """The finite set B(k) = {b_1, ..., b_k}."""
        if k < 1:
            raise ArgumentError("truncation index must be at least 1")
        if self.is_family:
            return GeneratorSet(tuple(int(p) ** 2 for p in _first_primes(k)))
        if k > len(self.generators):
            raise ArgumentError(
                f"truncation {k} exceeds the {len(self.generators)} generators"
            )
        return GeneratorSet(self.generators[:k])

    def enumerate_up_to(self, limit: int) -> tuple[int, ...]:
        """All generators <= limit; exact for the window [0, limit)."""
        if self.is_family:
            return tuple(int(p * p) for p in _primes_up_to(math.isqrt(limit)))
        return tuple(b for b in self.generators if b <= limit)

    def lcm(self, k: int) -> int:
        """lcm(b_1..b_k), guarded against overflow past 2^63."""
        value = 1
        for b in self.truncate(k).generators:
            value = math.lcm(value, b)
            if value >= LCM_CAP:
                raise CapacityError(f"lcm(b_1..b_{k}) reached {value} >= 2^63")
        return value

    def to_json(self) -> dict:
        if self.is_family:
            return {"family": self.family}
        return {"generators": list(self.generators)}

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorSet":
        if "family" in data and data["family"]:
            return cls((), data["family"])
        return cls(tuple(int(b) for b in data["generators"]))


@dataclass(frozen=True)
class EtaWindow:
    """values[j] = 1 iff j avoids every sieved generator, over [0, N).

    With a truncation the window is exactly periodic with period
    lcm(b_1..b_k); without one, all generators <= N are sieved, which is
    exact on the window (larger generators have no multiples below N except
    0, which is never free).
    """

    values: np.ndarray
    generators: GeneratorSet
    sieved: tuple[int, ...]
    truncation: int | None = None
    period: int | None = None

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=bool)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def length(self) -> int:
        return int(self.values.size)

    @property
    def density(self) -> float:
        return float(self.values.mean())

    def labels(self) -> np.ndarray:
        return self.values.astype(LABEL_DTYPE)

    def orbit_window(self) -> OrbitWindow:
        spec = BFreePoint(self.generators)
        origin = eta_origin(self.generators, self.truncation)
        return generate_orbit(spec, origin, self.length)

    def to_json(self) -> dict:
        return {
            "generators": self.generators.to_json(),
            "sieved": list(self.sieved),
            "truncation": self.truncation,
            "period": self.period,
            "length": self.length,
            "density": self.density,
        }


def _sieve(gens: Sequence[int], n: int) -> np.ndarray:
    eta = np.ones(n, dtype=bool)
    for b in gens:
        eta[0::b] = False
    # 0 is a multiple of every generator, even ones outside the sieved scope
    eta[0] = False
    return eta


def eta_window(B: GeneratorSet, N: int, truncation: int | None = None) -> EtaWindow:
    """Characteristic window of the B-free (or B(k)-free) integers on [0, N)."""
    if N < 1:
        raise ArgumentError("window length must be positive")
    if truncation is not None:
        trunc = B.truncate(truncation)
        period = B.lcm(truncation)
        return EtaWindow(
            values=_sieve(trunc.generators, N),
            generators=B,
            sieved=trunc.generators,
            truncation=truncation,
            period=period,
        )
    gens = B.enumerate_up_to(N)
    return EtaWindow(values=_sieve(gens, N), generators=B, sieved=gens)


def _eta_range(B: GeneratorSet, lo: int, hi: int) -> np.ndarray:
    """eta_B over absolute coordinates [lo, hi); divisibility extends over Z."""
    n = hi - lo
    out = np.ones(n, dtype=LABEL_DTYPE)
    reach = max(abs(lo), abs(hi - 1), 1)
    for b in B.enumerate_up_to(reach):
        first = -(-lo // b) * b  # smallest multiple of b that is >= lo
        out[first - lo :: b] = 0
    if lo <= 0 < hi:
        out[-lo] = 0
    return out


def eta_origin(B: GeneratorSet, truncation: int | None = None) -> SymbolicState:
    """The characteristic point of the (possibly truncated) B-free set.

    Truncated: one exact period stored with periodic continuation.  Full:
    an on-demand sieve rule over Z; generators larger than |coordinate|
    cannot strike it, so any finite window is computed exactly.
    """
    if truncation is not None:
        period = B.lcm(truncation)
        if period > 2**26:
            raise CapacityError(
                f"period {period} too large to materialize as a state window"
            )
        window = _sieve(B.truncate(truncation).generators, period).astype(LABEL_DTYPE)
        return SymbolicState(window=window, anchor=0, alphabet_size=2)
    rule = GeneratorContinuation(
        fn=lambda j: int(_eta_range(B, j, j + 1)[0]),
        range_fn=lambda lo, hi: _eta_range(B, lo, hi),
    )
    return SymbolicState(
        window=np.empty(0, dtype=LABEL_DTYPE), anchor=0, continuation=rule, alphabet_size=2
    )


@dataclass(frozen=True)
class DavenportErdosReport:
    """Per-truncation mismatch-density traces of eta_B(k) against eta_B."""

    truncations: tuple[int, ...]
    traces: tuple[PseudometricTrace, ...]
    tails: tuple[float, ...]  # per-k tail estimate (limsup surrogate)
    nonincreasing: bool
    window_length: int

    def to_json(self) -> dict:
        return {
            "truncations": list(self.truncations),
            "traces": [t.to_json() for t in self.traces],
            "tails": list(self.tails),
            "nonincreasing": self.nonincreasing,
            "window_length": self.window_length,
        }


def davenport_erdos_trace(
    B: GeneratorSet, truncations: Sequence[int], schedule: CheckpointSchedule
) -> DavenportErdosReport:
    """Mismatch-density convergence of the periodic approximants to eta_B."""
    ks = [int(k) for k in truncations]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ArgumentError("truncations must be nonempty and strictly increasing")
    n = schedule.last
    full = eta_window(B, n).labels()
    traces = []
    for k in ks:
        approx = eta_window(B, n, truncation=k).labels()
        traces.append(dbar_estimate(approx, full, schedule))
    tails = tuple(t.estimate for t in traces)
    nonincreasing = all(b <= a + TAU_NUM for a, b in zip(tails, tails[1:]))
    return DavenportErdosReport(tuple(ks), tuple(traces), tails, nonincreasing, n)


def exact_period_dft(window_period: np.ndarray) -> np.ndarray:
    """Fourier coefficients c_t = (1/P) sum_{j<P} w_j e^(-2 pi i t j / P)."""
    w = np.ascontiguousarray(window_period, dtype=np.float64)
    return scipy.fft.fft(w) / w.size


def _lcm_schedule(n_available: int, period: int) -> CheckpointSchedule:
    """Four doubling checkpoints, all exact multiples of the period."""
    q = n_available // period
    if q < 16:
        raise ArgumentError(f"need at least 16 periods, got {q}")
    return CheckpointSchedule(tuple(period * (q // 2**i) for i in (3, 2, 1, 0)))


@dataclass(frozen=True)
class MirskyTruncationReport:
    """Certification of the rational discrete spectrum of one eta_B(k) window."""

    k: int
    period: int
    n_last: int
    density: float
    spectrum: FrequencySpectrum
    rational_ok: bool  # every detected frequency is p/q with q | period
    rational_failures: tuple[float, ...]
    regularity: dict
    regularity_ok: bool
    dft_max_error: float
    dft_missing: tuple[int, ...]  # DFT lines >= tau_det that were not detected
    dft_ok: bool

    @property
    def passed(self) -> bool:
        return self.rational_ok and self.regularity_ok and self.dft_ok

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "period": self.period,
            "n_last": self.n_last,
            "density": self.density,
            "spectrum": self.spectrum.to_json(),
            "rational_ok": self.rational_ok,
            "rational_failures": list(self.rational_failures),
            "regularity": dict(self.regularity),
            "regularity_ok": self.regularity_ok,
            "dft_max_error": self.dft_max_error,
            "dft_missing": list(self.dft_missing),
            "dft_ok": self.dft_ok,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class MirskyContainmentRow:
    theta: float
    amplitude: float
    matched: dict[int, bool]

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "amplitude": self.amplitude,
            "matched": {str(k): v for k, v in self.matched.items()},
        }


@dataclass(frozen=True)
class MirskyReport:
    """Full spectrum experiment: per-truncation certificates plus containment."""

    per_k: tuple[MirskyTruncationReport, ...]
    containment_rows: tuple[MirskyContainmentRow, ...]
    containment_ok: bool | None  # None when the full scan was skipped
    full_spectrum: FrequencySpectrum | None
    config: dict

    @property
    def passed(self) -> bool:
        ok = all(r.passed for r in self.per_k)
        if self.containment_ok is not None:
            ok = ok and self.containment_ok
        return ok

    def to_json(self) -> dict:
        return {
            "per_k": [r.to_json() for r in self.per_k],
            "containment_rows": [r.to_json() for r in self.containment_rows],
            "containment_ok": self.containment_ok,
            "full_spectrum": None
            if self.full_spectrum is None
            else self.full_spectrum.to_json(),
            "config": dict(self.config),
            "passed": self.passed,
        }


def mirsky_spectrum_experiment(
    B: GeneratorSet,
    truncations: int | Sequence[int],
    N: int,
    *,
    tau_det: float = 0.005,
    tau_reg: float = TAU_REG,
    refine_passes: int = 0,
    full_scan: bool = True,
    full_tau_det: float = 0.05,
    containment_min_k: int = 2,
) -> MirskyReport:
    """Certify the rational discrete spectrum of Mirsky approximants eta_B(k).

    Per truncation k: scan the eta_B(k) window on a grid aligned with the
    period (checkpoints are exact period multiples, so every trace is
    constant and converged, and every true spectral line sits exactly on the
    grid), then assert (a) all detected frequencies are rationals p/q with
    q | lcm, (b) the detected spectral mass accounts for the series energy
    within tau_reg, (c) amplitudes match the exact one-period DFT to 1e-6,
    including every DFT line above threshold being detected.  Optionally
    scan the untruncated eta_B and check that each of its frequencies is
    also detected for every tested k >= containment_min_k.
    """
    ks = [int(truncations)] if isinstance(truncations, int) else [int(k) for k in truncations]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ArgumentError("truncations must be nonempty and strictly increasing")
    lcm_max = B.lcm(ks[-1])
    if N < 16 * lcm_max:
        raise ArgumentError(f"N must be at least 16*lcm = {16 * lcm_max}")

    per_k = []
    for k in ks:
        period = B.lcm(k)
        eta = eta_window(B, N, truncation=k)
        series = eta.labels().astype(np.float64)
        schedule = _lcm_schedule(N, period)
        n_last = schedule.last
        spectrum = frequency_scan(
            series,
            grid_size=4 * n_last,
            refine_passes=refine_passes,
            schedule=schedule,
            tau_det=tau_det,
            q_max=period,
        )

        failures = []
        for e in spectrum.entries:
            exact = e.probe.exact_rational
            snapped = exact is not None and period % exact[1] == 0
            if not (snapped and abs(e.probe.theta - exact[0] / exact[1]) <= 1.0 / (4 * N)):
                failures.append(e.probe.theta)
        rational_ok = not failures

        reg = regularity_check(series, spectrum, name=f"eta_k{k}", tau_reg=tau_reg)
        regularity_ok = abs(reg.defect) <= tau_reg * reg.target + TAU_NUM

        dft = exact_period_dft(eta.values[:period])
        dft_amp = np.abs(dft)
        max_err = 0.0
        detected_lines = set()
        for e in spectrum.entries:
            exact = e.probe.exact_rational
            if exact is None or period % exact[1] != 0:
                continue
            t = exact[0] * (period // exact[1])
            detected_lines.add(t)
            max_err = max(max_err, abs(e.amplitude - float(dft_amp[t])))
        # completeness: every DFT line clearly above threshold must be found
        strong = set(np.flatnonzero(dft_amp >= tau_det + 1e-9).tolist())
        missing = tuple(sorted(strong - detected_lines))
        dft_ok = max_err <= 1e-6 and not missing

        per_k.append(
            MirskyTruncationReport(
                k=k,
                period=period,
                n_last=n_last,
                density=eta.density,
                spectrum=spectrum,
                rational_ok=rational_ok,
                rational_failures=tuple(failures),
                regularity=reg.to_json(),
                regularity_ok=regularity_ok,
                dft_max_error=float(max_err),
                dft_missing=missing,
                dft_ok=dft_ok,
            )
        )

    containment_rows: list[MirskyContainmentRow] = []
    containment_ok: bool | None = None
    full_spectrum = None
    if full_scan:
        full_series = eta_window(B, N).labels().astype(np.float64)
        full_schedule = _lcm_schedule(N, lcm_max)
        grid_full = 4 * full_schedule.last
        full_spectrum = frequency_scan(
            full_series,
            grid_size=grid_full,
            refine_passes=refine_passes,
            schedule=full_schedule,
            tau_det=full_tau_det,
            q_max=lcm_max,
        )
        tol = 1.0 / grid_full
        tested = {
            r.k: [e.probe.theta for e in r.spectrum.entries]
            for r in per_k
            if r.k >= containment_min_k
        }
        containment_ok = True
        for e in full_spectrum.entries:
            t = e.probe.theta
            matched = {}
            for k, thetas in tested.items():
                hit = any(min(abs(t - c), 1.0 - abs(t - c)) <= tol for c in thetas)
                matched[k] = hit
                containment_ok = containment_ok and hit
            containment_rows.append(MirskyContainmentRow(t, e.amplitude, matched))

    config = {
        "generators": B.to_json(),
        "truncations": ks,
        "N": int(N),
        "tau_det": tau_det,
        "tau_reg": tau_reg,
        "refine_passes": int(refine_passes),
        "full_scan": bool(full_scan),
        "full_tau_det": full_tau_det,
        "containment_min_k": int(containment_min_k),
    }
    return MirskyReport(
        per_k=tuple(per_k),
        containment_rows=tuple(containment_rows),
        containment_ok=containment_ok,
        full_spectrum=full_spectrum,
        config=config,
    )
