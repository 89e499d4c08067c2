"""Concrete dynamical systems and their orbit windows.

Systems come in two flavours.  Symbolic kinds (full shift, periodic orbit,
B-free characteristic point) act by the left shift on two-sided symbol
sequences; a state stores only a finite window plus a continuation rule, so
bi-infinite sequences never materialize.  The rotation kind acts on the
circle [0, 1); orbit angles are always computed as origin + j*alpha mod 1
in extended precision, never by repeated addition.  Products combine one
state per factor and take the max of the factor metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional

import numpy as np

from .errors import ArgumentError, DomainError

LABEL_DTYPE = np.int64
MAX_ALPHABET = 36  # symbols serialize as single base-36 digits

# Search radius for the exact state metric on aperiodic symbolic states.
# 2**-radius underflows to exactly 0.0 long before this cap, so a miss is
# reported as 0; the besicovitch module uses its own bounded lookahead.
METRIC_SEARCH_RADIUS = 4096


# ---------------------------------------------------------------------------
# continuation rules


@dataclass(frozen=True)
class PeriodicContinuation:
    """Extend the stored window periodically in both directions."""

    def shifted(self, j: int) -> "PeriodicContinuation":
        return self


@dataclass(frozen=True)
class GeneratorContinuation:
    """Symbols outside the window come from an explicit rule on Z.

    ``fn`` maps an absolute coordinate (relative to the un-shifted point
    this continuation was created for) to a symbol; ``range_fn`` is an
    optional vectorized version mapping [lo, hi) to an int64 array.
    ``offset`` tracks how far the owning state has been shifted.
    """

    fn: Callable[[int], int]
    range_fn: Optional[Callable[[int, int], np.ndarray]] = None
    offset: int = 0

    def shifted(self, j: int) -> "GeneratorContinuation":
        return GeneratorContinuation(self.fn, self.range_fn, self.offset + j)

    def symbol(self, k: int) -> int:
        return int(self.fn(k + self.offset))

    def symbols(self, lo: int, hi: int) -> np.ndarray:
        if self.range_fn is not None:
            return np.asarray(self.range_fn(lo + self.offset, hi + self.offset), dtype=LABEL_DTYPE)
        return np.fromiter(
            (self.fn(k + self.offset) for k in range(lo, hi)), dtype=LABEL_DTYPE, count=hi - lo
        )


# ---------------------------------------------------------------------------
# state points


@dataclass(frozen=True, eq=False)
class SymbolicState:
    """A point of a symbolic system: window + continuation rule.

    ``window[i]`` is the symbol at coordinate ``anchor + i``.  Outside the
    window the continuation rule answers; ``continuation=None`` marks
    truncated data (e.g. loaded from a file) whose off-window symbols are
    undefined.
    """

    window: np.ndarray
    anchor: int = 0
    continuation: PeriodicContinuation | GeneratorContinuation | None = field(
        default_factory=PeriodicContinuation
    )
    alphabet_size: int = 2

    def __post_init__(self) -> None:
        win = np.ascontiguousarray(self.window, dtype=LABEL_DTYPE)
        win.setflags(write=False)
        object.__setattr__(self, "window", win)
        if not 2 <= self.alphabet_size <= MAX_ALPHABET:
            raise DomainError(f"alphabet size must be in [2, {MAX_ALPHABET}]")
        if win.size == 0 and not isinstance(self.continuation, GeneratorContinuation):
            raise ArgumentError("empty window requires a generator continuation")
        if win.size and (win.min() < 0 or win.max() >= self.alphabet_size):
            raise DomainError("window symbols outside the declared alphabet")

    def symbol(self, k: int) -> int:
        i = k - self.anchor
        if 0 <= i < self.window.size:
            return int(self.window[i])
        if isinstance(self.continuation, PeriodicContinuation):
            return int(self.window[i % self.window.size])
        if isinstance(self.continuation, GeneratorContinuation):
            return self.continuation.symbol(k)
        raise DomainError(f"symbol at coordinate {k} is outside the truncated window")

    def symbols(self, lo: int, hi: int) -> np.ndarray:
        """Vectorized window of symbols at coordinates [lo, hi)."""
        if hi < lo:
            raise ArgumentError("need lo <= hi")
        if isinstance(self.continuation, PeriodicContinuation):
            idx = np.arange(lo - self.anchor, hi - self.anchor) % self.window.size
            return self.window[idx]
        if isinstance(self.continuation, GeneratorContinuation) and self.window.size == 0:
            return self.continuation.symbols(lo, hi)
        out = np.empty(hi - lo, dtype=LABEL_DTYPE)
        w_lo, w_hi = self.anchor, self.anchor + self.window.size
        inside_lo, inside_hi = max(lo, w_lo), min(hi, w_hi)
        if inside_lo < inside_hi:
            out[inside_lo - lo : inside_hi - lo] = self.window[
                inside_lo - self.anchor : inside_hi - self.anchor
            ]
        for a, b in ((lo, min(hi, w_lo)), (max(lo, w_hi), hi)):
            if a >= b:
                continue
            if self.continuation is None:
                raise DomainError("symbols outside the truncated window are undefined")
            out[a - lo : b - lo] = self.continuation.symbols(a, b)
        return out

    def shifted(self, j: int) -> "SymbolicState":
        """The state T^j(self): symbol(k) becomes self.symbol(k + j)."""
        cont = self.continuation.shifted(j) if self.continuation is not None else None
        return SymbolicState(self.window, self.anchor - j, cont, self.alphabet_size)

    @property
    def period(self) -> int | None:
        return self.window.size if isinstance(self.continuation, PeriodicContinuation) else None


@dataclass(frozen=True)
class RotationState:
    """A point of the circle rotation, as an angle in [0, 1)."""

    angle: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.angle < 1.0 or not math.isfinite(self.angle):
            raise DomainError(f"angle {self.angle} outside [0, 1)")


@dataclass(frozen=True)
class ProductState:
    left: object
    right: object


StatePoint = SymbolicState | RotationState | ProductState


# ---------------------------------------------------------------------------
# system specs


class SystemSpec:
    """Base class; concrete kinds implement step, metric, orbit generation."""

    kind: str

    def validate_origin(self, origin: StatePoint) -> None:
        raise NotImplementedError

    def step(self, state: StatePoint) -> StatePoint:
        raise NotImplementedError

    def metric(self) -> Callable[[StatePoint, StatePoint], float]:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(data: dict) -> "SystemSpec":
        kind = data.get("kind")
        if kind == "full_shift":
            return FullShift(int(data["alphabet_size"]))
        if kind == "rotation":
            exact = data.get("exact")
            return Rotation(float(data["alpha"]), tuple(exact) if exact else None)
        if kind == "periodic_orbit":
            return PeriodicOrbit(tuple(int(c, MAX_ALPHABET) for c in data["word"]))
        if kind == "bfree":
            from .bfree import GeneratorSet

            return BFreePoint(GeneratorSet.from_json(data["generators"]))
        if kind == "product":
            return Product(SystemSpec.from_json(data["left"]), SystemSpec.from_json(data["right"]))
        raise ArgumentError(f"unknown system kind {kind!r}")


def _symbolic_metric(a: SymbolicState, b: SymbolicState, radius: int = METRIC_SEARCH_RADIUS) -> float:
    """2^(-min{|k| : a_k != b_k}), capped at 1; 0 iff equal on the represented data.

    For two periodic states the search radius is shrunk to one full common
    period, which decides equality exactly; otherwise the radius cap applies
    and a miss beyond it reports 0 (those values underflow anyway).
    """
    if a.period is not None and b.period is not None:
        radius = min(radius, _lcm(a.period, b.period))
    if a.symbol(0) != b.symbol(0):
        return 1.0
    span = a.symbols(-radius, radius + 1) != b.symbols(-radius, radius + 1)
    if not span.any():
        return 0.0
    diffs = np.flatnonzero(span) - radius
    return float(2.0 ** (-np.abs(diffs).min()))


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@dataclass(frozen=True)
class FullShift(SystemSpec):
    alphabet_size: int = 2
    kind: str = field(default="full_shift", init=False)

    def __post_init__(self) -> None:
        if not 2 <= self.alphabet_size <= MAX_ALPHABET:
            raise DomainError(f"alphabet size must be in [2, {MAX_ALPHABET}]")

    def validate_origin(self, origin: StatePoint) -> None:
        if not isinstance(origin, SymbolicState):
            raise DomainError("full shift origin must be a symbolic state")
        if origin.alphabet_size > self.alphabet_size:
            raise DomainError("origin alphabet exceeds the system alphabet")

    def step(self, state: SymbolicState) -> SymbolicState:
        return state.shifted(1)

    def metric(self):
        return _symbolic_metric

    def to_json(self) -> dict:
        return {"kind": self.kind, "alphabet_size": self.alphabet_size}


@dataclass(frozen=True)
class Rotation(SystemSpec):
    """x -> x + alpha mod 1. ``exact=(p, q)`` marks a rational angle p/q."""

    alpha: float
    exact: tuple[int, int] | None = None
    kind: str = field(default="rotation", init=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError("alpha must lie in [0, 1)")
        if self.exact is not None:
            p, q = self.exact
            if q <= 0 or not 0 <= p < q or math.gcd(p, q) != 1:
                raise DomainError("exact rational must be reduced with 0 <= p < q")
            if abs(self.alpha - p / q) > 1e-12:
                raise DomainError("exact rational does not match alpha")

    def validate_origin(self, origin: StatePoint) -> None:
        if not isinstance(origin, RotationState):
            raise DomainError("rotation origin must be a rotation state")

    def step(self, state: RotationState) -> RotationState:
        return RotationState((state.angle + self.alpha) % 1.0)

    def angles(self, origin: float, length: int) -> np.ndarray:
        """origin + j*alpha mod 1 for j < length, via exact/extended arithmetic."""
        j = np.arange(length, dtype=np.int64)
        if self.exact is not None:
            p, q = self.exact
            return ((origin + (j * p % q) / float(q)) % 1.0).astype(np.float64)
        jl = j.astype(np.longdouble)
        return np.asarray(
            np.mod(np.longdouble(origin) + jl * np.longdouble(self.alpha), 1.0),
            dtype=np.float64,
        ) % 1.0

    def metric(self):
        def arc(a: RotationState, b: RotationState) -> float:
            d = abs(a.angle - b.angle)
            return min(d, 1.0 - d)

        return arc

    def to_json(self) -> dict:
        data: dict = {"kind": self.kind, "alpha": self.alpha}
        if self.exact is not None:
            data["exact"] = list(self.exact)
        return data


@dataclass(frozen=True)
class PeriodicOrbit(SystemSpec):
    """The shift restricted to the orbit closure of one periodic word."""

    word: tuple[int, ...]
    alphabet_size: int = 0  # 0 -> inferred
    kind: str = field(default="periodic_orbit", init=False)

    def __post_init__(self) -> None:
        if not self.word:
            raise ArgumentError("periodic word must be nonempty")
        inferred = max(2, max(self.word) + 1)
        size = self.alphabet_size or inferred
        if size < inferred or size > MAX_ALPHABET:
            raise DomainError("alphabet size incompatible with the word")
        object.__setattr__(self, "alphabet_size", size)
        object.__setattr__(self, "word", tuple(int(s) for s in self.word))

    def origin(self, phase: int = 0) -> SymbolicState:
        p = len(self.word)
        rolled = tuple(self.word[(i + phase) % p] for i in range(p))
        return SymbolicState(np.array(rolled), 0, PeriodicContinuation(), self.alphabet_size)

    def validate_origin(self, origin: StatePoint) -> None:
        if not isinstance(origin, SymbolicState) or origin.period is None:
            raise DomainError("periodic orbit origin must be a periodic symbolic state")
        p = len(self.word)
        lcm = _lcm(p, origin.period)
        seq = tuple(int(s) for s in origin.symbols(0, lcm))
        doubled = self.word * (2 * lcm // p)
        if not any(seq == doubled[r : r + lcm] for r in range(p)):
            raise DomainError("origin does not lie on the periodic orbit")

    def step(self, state: SymbolicState) -> SymbolicState:
        return state.shifted(1)

    def metric(self):
        return _symbolic_metric

    def to_json(self) -> dict:
        return {"kind": self.kind, "word": "".join(np.base_repr(s, MAX_ALPHABET).lower() for s in self.word)}


@dataclass(frozen=True)
class BFreePoint(SystemSpec):
    """The orbit closure of the characteristic point of a B-free set."""

    generators: object  # bfree.GeneratorSet; typed loosely to avoid an import cycle
    kind: str = field(default="bfree", init=False)
    alphabet_size: int = field(default=2, init=False)

    def origin(self) -> SymbolicState:
        from .bfree import eta_origin

        return eta_origin(self.generators)

    def validate_origin(self, origin: StatePoint) -> None:
        if not isinstance(origin, SymbolicState) or origin.alphabet_size != 2:
            raise DomainError("b-free origin must be a binary symbolic state")

    def step(self, state: SymbolicState) -> SymbolicState:
        return state.shifted(1)

    def metric(self):
        return _symbolic_metric

    def to_json(self) -> dict:
        return {"kind": self.kind, "generators": self.generators.to_json()}


@dataclass(frozen=True)
class Product(SystemSpec):
    left: SystemSpec
    right: SystemSpec
    kind: str = field(default="product", init=False)

    def validate_origin(self, origin: StatePoint) -> None:
        if not isinstance(origin, ProductState):
            raise DomainError("product origin must be a product state")
        self.left.validate_origin(origin.left)
        self.right.validate_origin(origin.right)

    def step(self, state: ProductState) -> ProductState:
        return ProductState(self.left.step(state.left), self.right.step(state.right))

    def metric(self):
        ml, mr = self.left.metric(), self.right.metric()

        def product_metric(a: ProductState, b: ProductState) -> float:
            return max(ml(a.left, b.left), mr(a.right, b.right))

        return product_metric

    def to_json(self) -> dict:
        return {"kind": self.kind, "left": self.left.to_json(), "right": self.right.to_json()}


def state_metric(spec: SystemSpec) -> Callable[[StatePoint, StatePoint], float]:
    """The bounded metric used for this system kind (diameter <= 1)."""
    return spec.metric()


# ---------------------------------------------------------------------------
# orbit windows


@dataclass(frozen=True, eq=False)
class OrbitWindow:
    """The first ``length`` states of one orbit, with fast per-kind arrays.

    Symbolic orbits expose ``labels`` (coordinate-0 symbol of each state),
    rotations expose ``angles``; products hold one window per factor.
    StatePoints are materialized lazily via :meth:`state`.
    """

    spec: SystemSpec
    origin: StatePoint
    length: int
    labels: np.ndarray | None = None
    angles: np.ndarray | None = None
    parts: tuple["OrbitWindow", ...] = ()

    def state(self, j: int) -> StatePoint:
        if not 0 <= j < self.length:
            raise ArgumentError(f"state index {j} outside [0, {self.length})")
        if isinstance(self.origin, SymbolicState):
            return self.origin.shifted(j)
        if isinstance(self.origin, RotationState):
            return RotationState(float(self.angles[j]))
        return ProductState(self.parts[0].state(j), self.parts[1].state(j))

    def states(self) -> Iterator[StatePoint]:
        return (self.state(j) for j in range(self.length))

    def extended_labels(self, lo: int, hi: int) -> np.ndarray:
        """Symbols at coordinates [lo, hi) of the origin point (continuation-aware)."""
        if not isinstance(self.origin, SymbolicState):
            raise DomainError("extended labels exist only for symbolic orbits")
        return self.origin.symbols(lo, hi)

    @property
    def truncated(self) -> bool:
        return isinstance(self.origin, SymbolicState) and self.origin.continuation is None


def generate_orbit(spec: SystemSpec, origin: StatePoint, length: int) -> OrbitWindow:
    """Materialize the orbit window (x, Tx, ..., T^(length-1) x)."""
    if length <= 0:
        raise ArgumentError("orbit length must be positive")
    spec.validate_origin(origin)
    if isinstance(spec, Product):
        parts = (
            generate_orbit(spec.left, origin.left, length),
            generate_orbit(spec.right, origin.right, length),
        )
        return OrbitWindow(spec, origin, length, parts=parts)
    if isinstance(spec, Rotation):
        angles = spec.angles(origin.angle, length)
        return OrbitWindow(spec, origin, length, angles=angles)
    labels = origin.symbols(0, length)
    return OrbitWindow(spec, origin, length, labels=labels)


def orbit_from_labels(labels, alphabet_size: int = 2, periodic: bool = False) -> OrbitWindow:
    """Wrap a raw symbol sequence as a full-shift orbit window.

    ``periodic=True`` declares the data to repeat; otherwise symbols outside
    the window are undefined (truncated continuation) and downstream
    estimators exclude the affected indices.
    """
    arr = np.ascontiguousarray(labels, dtype=LABEL_DTYPE)
    if arr.ndim != 1 or arr.size == 0:
        raise ArgumentError("labels must be a nonempty 1-d sequence")
    cont = PeriodicContinuation() if periodic else None
    origin = SymbolicState(arr, 0, cont, alphabet_size)
    return generate_orbit(FullShift(alphabet_size), origin, arr.size)


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class Observable:
    """A bounded complex observable f evaluated at state points.

    ``fn`` is the pointwise rule; ``array_fn`` (optional) evaluates a whole
    orbit window at once and must agree with ``fn`` pointwise.
    """

    name: str
    fn: Callable[[StatePoint], complex]
    sup_bound: float
    array_fn: Callable[[OrbitWindow], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sup_bound) and self.sup_bound >= 0):
            raise ArgumentError("sup_bound must be finite and nonnegative")


def constant(value: complex = 1.0) -> Observable:
    c = complex(value)
    return Observable(f"constant[{c}]", lambda s: c, abs(c), lambda orbit: np.full(orbit.length, c))


def indicator(symbol: int) -> Observable:
    """1 when the coordinate-0 symbol equals ``symbol``, else 0."""
    s = int(symbol)

    def fn(state: StatePoint) -> complex:
        if not isinstance(state, SymbolicState):
            raise DomainError("indicator observables need symbolic states")
        return complex(state.symbol(0) == s)

    def array_fn(orbit: OrbitWindow) -> np.ndarray:
        if orbit.labels is None:
            raise DomainError("indicator observables need symbolic orbits")
        return (orbit.labels == s).astype(np.complex128)

    return Observable(f"indicator[{s}]", fn, 1.0, array_fn)


def pm_one() -> Observable:
    """Binary symbols mapped to +-1: symbol s -> 1 - 2s."""

    def fn(state: StatePoint) -> complex:
        if not isinstance(state, SymbolicState):
            raise DomainError("pm_one needs symbolic states")
        return complex(1 - 2 * state.symbol(0))

    def array_fn(orbit: OrbitWindow) -> np.ndarray:
        if orbit.labels is None:
            raise DomainError("pm_one needs symbolic orbits")
        return (1 - 2 * orbit.labels).astype(np.complex128)

    return Observable("pm_one", fn, 1.0, array_fn)


def character(m: int = 1) -> Observable:
    """The circle character exp(2*pi*i*m*theta)."""
    m = int(m)

    def fn(state: StatePoint) -> complex:
        if not isinstance(state, RotationState):
            raise DomainError("characters need rotation states")
        return complex(np.exp(2j * np.pi * m * state.angle))

    def array_fn(orbit: OrbitWindow) -> np.ndarray:
        if orbit.angles is None:
            raise DomainError("characters need rotation orbits")
        return np.exp(2j * np.pi * m * orbit.angles)

    return Observable(f"character[{m}]", fn, 1.0, array_fn)


def symbol_map(values: dict[int, complex], name: str = "symbol_map") -> Observable:
    """An arbitrary map from symbols to complex values."""
    table = {int(k): complex(v) for k, v in values.items()}
    bound = max(abs(v) for v in table.values()) if table else 0.0

    def fn(state: StatePoint) -> complex:
        if not isinstance(state, SymbolicState):
            raise DomainError("symbol maps need symbolic states")
        return table.get(state.symbol(0), 0.0 + 0.0j)

    def array_fn(orbit: OrbitWindow) -> np.ndarray:
        if orbit.labels is None:
            raise DomainError("symbol maps need symbolic orbits")
        lut = np.zeros(MAX_ALPHABET, dtype=np.complex128)
        for k, v in table.items():
            lut[k] = v
        return lut[orbit.labels]

    return Observable(name, fn, bound, array_fn)


def eval_series(observable: Observable, orbit: OrbitWindow) -> np.ndarray:
    """f(T^j x) for j < orbit.length as a complex128 array."""
    if observable.array_fn is not None:
        values = np.ascontiguousarray(observable.array_fn(orbit), dtype=np.complex128)
        if values.shape != (orbit.length,):
            raise ArgumentError("array evaluation returned the wrong shape")
        return values
    return np.fromiter(
        (observable.fn(s) for s in orbit.states()), dtype=np.complex128, count=orbit.length
    )
