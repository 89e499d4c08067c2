"""Concrete systems: orbit generation, metrics, observables, serialization."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.dynsys import (
    FullShift,
    Observable,
    OrbitWindow,
    PeriodicOrbit,
    Product,
    ProductState,
    Rotation,
    RotationState,
    SymbolicState,
    SystemSpec,
    character,
    constant,
    eval_series,
    generate_orbit,
    indicator,
    orbit_from_labels,
    pm_one,
    state_metric,
    symbol_map,
)
from ergolab.errors import ArgumentError, DomainError


def test_periodic_orbit_rolls_word_by_phase():
    spec = PeriodicOrbit((0, 1, 1))
    orbit = generate_orbit(spec, spec.origin(phase=1), 8)
    assert orbit.labels.tolist() == [1, 1, 0, 1, 1, 0, 1, 1]
    assert not orbit.truncated
    # coordinates below zero follow the same periodic continuation
    assert orbit.extended_labels(-3, 0).tolist() == [1, 1, 0]


def test_periodic_orbit_rejects_foreign_origin():
    spec = PeriodicOrbit((0, 1))
    other = PeriodicOrbit((0, 1, 1)).origin()
    with pytest.raises(DomainError):
        generate_orbit(spec, other, 4)


def test_rational_rotation_angles_are_exact():
    spec = Rotation(0.25, exact=(1, 4))
    orbit = generate_orbit(spec, RotationState(0.0), 9)
    assert orbit.angles.tolist() == [0.0, 0.25, 0.5, 0.75, 0.0, 0.25, 0.5, 0.75, 0.0]


def test_irrational_rotation_angles_match_exact_rational_arithmetic():
    # oracle: Fraction(float) is the exact binary value, so j*alpha mod 1 is
    # computable without rounding; the extended-precision path must stay close
    alpha = (np.sqrt(5) - 1) / 2
    spec = Rotation(float(alpha))
    n = 1_000_000
    orbit = generate_orbit(spec, RotationState(0.0), n)
    fa = Fraction(float(alpha))
    for j in (1, 999, 524_288, n - 1):
        want = float((fa * j) % 1)
        err = abs(orbit.angles[j] - want)
        assert min(err, 1 - err) <= 1e-10


def test_rotation_rejects_mismatched_exact_angle():
    with pytest.raises(DomainError):
        Rotation(0.3, exact=(1, 4))
    with pytest.raises(DomainError):
        Rotation(0.5, exact=(2, 4))  # not reduced


def test_arc_metric_wraps_around_the_circle():
    arc = state_metric(Rotation(0.1))
    assert arc(RotationState(0.95), RotationState(0.05)) == pytest.approx(0.1)
    assert arc(RotationState(0.2), RotationState(0.7)) == pytest.approx(0.5)


def test_symbolic_metric_halves_with_agreement_radius():
    spec = PeriodicOrbit((0, 1, 0, 0))
    d = state_metric(spec)
    x = spec.origin()
    assert d(x, x.shifted(4)) == 0.0  # same point after one full period
    y = spec.origin(phase=1)
    # x = 0100 0100..., y = 1000 1000...: differ already at coordinate 0
    assert d(x, y) == 1.0


def test_product_metric_is_the_max_of_factors():
    left = Rotation(0.25, exact=(1, 4))
    right = PeriodicOrbit((0, 1))
    spec = Product(left, right)
    origin = ProductState(RotationState(0.0), right.origin())
    orbit = generate_orbit(spec, origin, 6)
    assert orbit.parts[0].angles.tolist() == [0.0, 0.25, 0.5, 0.75, 0.0, 0.25]
    assert orbit.parts[1].labels.tolist() == [0, 1, 0, 1, 0, 1]
    d = state_metric(spec)
    assert d(orbit.state(0), orbit.state(2)) == pytest.approx(0.5)


def test_truncated_window_refuses_symbols_beyond_the_data():
    orbit = orbit_from_labels([0, 1, 1, 0], 2, periodic=False)
    assert orbit.truncated
    assert orbit.labels.tolist() == [0, 1, 1, 0]
    with pytest.raises(DomainError):
        orbit.extended_labels(0, 5)


def test_periodic_wrapper_extends_cyclically():
    orbit = orbit_from_labels([0, 1, 1], 2, periodic=True)
    assert not orbit.truncated
    assert orbit.extended_labels(3, 9).tolist() == [0, 1, 1, 0, 1, 1]


def test_symbolic_state_shift_relabels_coordinates():
    state = PeriodicOrbit((0, 1, 1)).origin()
    shifted = state.shifted(2)
    for k in range(-4, 8):
        assert shifted.symbol(k) == state.symbol(k + 2)


def test_observables_evaluate_pointwise_and_vectorized():
    spec = PeriodicOrbit((0, 1, 2), alphabet_size=3)
    orbit = generate_orbit(spec, spec.origin(), 7)
    ind = indicator(1)
    assert eval_series(ind, orbit).tolist() == [0, 1, 0, 0, 1, 0, 0]
    binary = orbit_from_labels([0, 1, 1, 0], 2)
    assert eval_series(pm_one(), binary).tolist() == [1, -1, -1, 1]
    vals = symbol_map({0: 2.0, 1: -1.0, 2: 0.5})
    assert eval_series(vals, orbit).tolist() == [2.0, -1.0, 0.5, 2.0, -1.0, 0.5, 2.0]
    assert eval_series(constant(3.0), orbit).tolist() == [3.0] * 7


def test_character_observable_is_the_circle_exponential():
    spec = Rotation(0.125, exact=(1, 8))
    orbit = generate_orbit(spec, RotationState(0.0), 8)
    got = eval_series(character(1), orbit)
    want = np.exp(2j * np.pi * np.arange(8) / 8)
    assert np.allclose(got, want, atol=1e-12)
    got2 = eval_series(character(3), orbit)
    assert np.allclose(got2, want**3, atol=1e-12)


def test_array_and_pointwise_observable_paths_agree():
    spec = PeriodicOrbit((0, 1, 1, 0, 1))
    orbit = generate_orbit(spec, spec.origin(), 11)
    for obs in (indicator(1), pm_one(), constant(2.0 - 1j)):
        arrays = eval_series(obs, orbit)
        pointwise = np.array([obs.fn(s) for s in orbit.states()], dtype=np.complex128)
        assert np.array_equal(arrays, pointwise)


def test_observable_requires_finite_sup_bound():
    with pytest.raises(ArgumentError):
        Observable("bad", lambda s: 1.0, float("inf"))


@pytest.mark.parametrize(
    "data",
    [
        {"kind": "full_shift", "alphabet_size": 3},
        {"kind": "rotation", "alpha": 0.375, "exact": [3, 8]},
        {"kind": "rotation", "alpha": 0.137},
        {"kind": "periodic_orbit", "word": "0110"},
        {"kind": "bfree", "generators": {"generators": [4, 9]}},
        {
            "kind": "product",
            "left": {"kind": "rotation", "alpha": 0.5, "exact": [1, 2]},
            "right": {"kind": "periodic_orbit", "word": "01"},
        },
    ],
)
def test_system_specs_round_trip_through_json(data):
    spec = SystemSpec.from_json(data)
    assert SystemSpec.from_json(spec.to_json()) == spec


def test_unknown_system_kind_is_rejected():
    with pytest.raises(ArgumentError):
        SystemSpec.from_json({"kind": "horocycle"})


def test_orbit_window_state_materialization_matches_arrays():
    spec = Rotation(0.2)
    orbit = generate_orbit(spec, RotationState(0.1), 5)
    assert orbit.state(3).angle == pytest.approx(orbit.angles[3])
    with pytest.raises(ArgumentError):
        orbit.state(5)


@given(
    word=st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=10),
    phase=st.integers(min_value=0, max_value=9),
    length=st.integers(min_value=1, max_value=50),
)
@settings(max_examples=60, deadline=None)
def test_generated_labels_tile_the_word(word, phase, length):
    spec = PeriodicOrbit(tuple(word), alphabet_size=2)
    orbit = generate_orbit(spec, spec.origin(phase=phase), length)
    p = len(spec.word)
    want = [spec.word[(phase + j) % p] for j in range(length)]
    assert orbit.labels.tolist() == want
