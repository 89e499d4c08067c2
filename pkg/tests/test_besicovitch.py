"""Orbit pseudometrics: sieve-density oracles, envelope bounds, metric axioms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab import (
    CheckpointSchedule,
    GeneratorSet,
    besicovitch_estimate,
    dbar_estimate,
    default_delta_grid,
    equivalence_audit,
    eta_window,
    orbit_from_labels,
    tilde_besicovitch,
    upper_density,
)
from ergolab.dynsys import PeriodicOrbit, Rotation, RotationState, generate_orbit
from ergolab.errors import ArgumentError


def periodic(word, length):
    spec = PeriodicOrbit(tuple(word), alphabet_size=2)
    return generate_orbit(spec, spec.origin(), length)


def test_upper_density_counts_prefix_hits():
    ind = np.zeros(100, dtype=bool)
    ind[::10] = True  # 10 hits in [0, 100)
    trace = upper_density(ind, CheckpointSchedule((10, 50, 100)))
    assert trace.counts == (1, 5, 10)
    assert trace.ratios == (0.1, 0.1, 0.1)
    assert trace.upper == 0.1 and trace.lower == 0.1


def test_mismatch_density_of_nested_sieves_is_one_sixth():
    # oracle: eta_{2} and eta_{2,3} disagree exactly at j = 3 mod 6 (odd
    # multiples of 3), so the normalized Hamming average at n = 600 is 1/6
    n = 600
    x = eta_window(GeneratorSet((2,)), n).orbit_window()
    y = eta_window(GeneratorSet((2, 3)), n).orbit_window()
    trace = dbar_estimate(x, y, CheckpointSchedule((6, 60, 600)))
    assert trace.averages == (1 / 6, 1 / 6, 1 / 6)
    assert trace.estimate == 1 / 6
    assert trace.metric == "hamming0"


def test_sparse_mismatches_average_to_the_geometric_layer_sum():
    # mismatches every 10 steps: each contributes 1 + 2(1/2+1/4+1/8+1/16) + 1/32
    # = 2.90625 over its period, so the running average is exactly 0.290625
    n = 1000
    x = periodic([0], n)
    y = periodic([1] + [0] * 9, n)
    trace = besicovitch_estimate(x, y, CheckpointSchedule((10, 100, 1000)))
    assert trace.averages == (0.290625, 0.290625, 0.290625)
    assert trace.metric == "first_diff"
    assert trace.lookahead == 32


def test_identical_orbits_are_at_distance_zero():
    x = periodic([0, 1, 1], 300)
    sched = CheckpointSchedule((30, 300))
    assert dbar_estimate(x, x, sched).estimate == 0.0
    assert besicovitch_estimate(x, x, sched).estimate == 0.0


def test_estimates_are_symmetric():
    x = periodic([0, 1, 0, 0, 1], 500)
    y = periodic([1, 1, 0], 500)
    sched = CheckpointSchedule((50, 500))
    assert dbar_estimate(x, y, sched).averages == dbar_estimate(y, x, sched).averages
    assert (
        besicovitch_estimate(x, y, sched).averages
        == besicovitch_estimate(y, x, sched).averages
    )


def test_hamming_never_exceeds_first_difference_average():
    # a coordinate-0 mismatch contributes 1 to both; nearby mismatches raise
    # only the first-difference profile
    rng = np.random.default_rng(3)
    sched = CheckpointSchedule((64, 256, 1024))
    for _ in range(5):
        x = orbit_from_labels(rng.integers(0, 2, 1024), 2, periodic=True)
        y = orbit_from_labels(rng.integers(0, 2, 1024), 2, periodic=True)
        d = dbar_estimate(x, y, sched).averages
        b = besicovitch_estimate(x, y, sched).averages
        assert all(dn <= bn + 1e-12 for dn, bn in zip(d, b))


def test_truncated_data_excludes_the_unseen_tail():
    # truncated windows cannot see past the data end, so each checkpoint
    # drops its last `lookahead` indices and renormalizes
    K = 8
    x = orbit_from_labels(np.zeros(100, dtype=np.int64), 2, periodic=False)
    labels = np.zeros(100, dtype=np.int64)
    labels[50] = 1
    y = orbit_from_labels(labels, 2, periodic=False)
    trace = besicovitch_estimate(x, y, CheckpointSchedule((20, 100)), lookahead=K)
    assert trace.excluded_tail == K
    # window n=20 ends before the mismatch at 50 sees anything
    assert trace.averages[0] == 0.0
    # window n=100: the isolated mismatch radiates 1 + 2 sum_{d<=K} 2^-d
    # = 3 - 2^(1-K) in total, over the renormalized length 100 - K
    assert trace.averages[1] == pytest.approx((3 - 2.0 ** (1 - K)) / (100 - K))


def test_rotation_pairs_use_the_arc_metric():
    spec = Rotation(0.25, exact=(1, 4))
    x = generate_orbit(spec, RotationState(0.0), 400)
    y = generate_orbit(spec, RotationState(0.1), 400)
    trace = besicovitch_estimate(x, y, CheckpointSchedule((40, 400)))
    assert trace.metric == "circle_arc"
    assert trace.averages == pytest.approx((0.1, 0.1))


def test_schedule_longer_than_data_is_rejected():
    x = periodic([0, 1], 100)
    with pytest.raises(ArgumentError):
        dbar_estimate(x, x, CheckpointSchedule((50, 200)))


def test_default_delta_grid_is_positive_and_decreasing():
    grid = default_delta_grid()
    assert all(d > 0 for d in grid)
    assert all(a > b for a, b in zip(grid, grid[1:]))


def test_tilde_of_identical_orbits_qualifies_at_the_smallest_delta():
    x = periodic([0, 1], 400)
    result = tilde_besicovitch(x, x, CheckpointSchedule((40, 400)))
    assert result.qualified
    assert result.value == min(result.grid)
    assert all(d == 0.0 for d in result.densities)


def test_tilde_bounds_exceedance_density():
    # mismatches every 4 steps: rho >= 1/2 on half the indices, so every
    # delta <= 1/2 sees exceedance density >= 1/2 > delta and fails;
    # the reported value must exceed 1/2's failure region
    x = periodic([0], 400)
    y = periodic([1, 0, 0, 0], 400)
    result = tilde_besicovitch(x, y, CheckpointSchedule((40, 400)))
    assert result.qualified
    assert result.value > 0.5


def test_equivalence_audit_certifies_the_envelope_on_a_mixed_corpus():
    rng = np.random.default_rng(11)
    n = 2048
    sched = CheckpointSchedule.up_to(n, count=5)
    pairs = []
    for density in (0.01, 0.1, 0.5):
        x = rng.integers(0, 2, n)
        flips = rng.uniform(size=n) < density
        y = np.where(flips, 1 - x, x)
        pairs.append(
            (
                orbit_from_labels(x, 2, periodic=True),
                orbit_from_labels(y, 2, periodic=True),
            )
        )
    report = equivalence_audit(pairs, sched, labels=["sparse", "tenth", "half"])
    assert report.all_ok
    assert report.co_vanishing
    for row in report.rows:
        assert row.lower_ok and row.upper_ok and row.tilde_ok
        # the two-sided envelope in raw numbers
        assert all(d <= b + 1e-12 for d, b in zip(row.dbar.averages, row.besicovitch.averages))


@given(
    words=st.tuples(
        st.lists(st.integers(0, 1), min_size=1, max_size=6),
        st.lists(st.integers(0, 1), min_size=1, max_size=6),
        st.lists(st.integers(0, 1), min_size=1, max_size=6),
    )
)
@settings(max_examples=40, deadline=None)
def test_checkpoint_averages_satisfy_the_triangle_inequality(words):
    # the first-difference state metric is an ultrametric, so per-index
    # distances and hence running averages obey the triangle inequality
    n = 240
    sched = CheckpointSchedule((24, 240))
    x, y, z = (periodic(w, n) for w in words)
    xy = besicovitch_estimate(x, y, sched).averages
    yz = besicovitch_estimate(y, z, sched).averages
    xz = besicovitch_estimate(x, z, sched).averages
    for a, b, c in zip(xz, xy, yz):
        assert a <= b + c + 1e-12
