"""Kernel backends: direct-formula oracles and cross-backend agreement."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab import kernels


BACKENDS = [kernels.get_backend(name) for name in kernels.available_backends()]
IDS = list(kernels.available_backends())


def direct_twisted_sums(series, theta, checkpoints):
    # oracle: literal partial sums of exp(-2 pi i theta j) * series[j]
    j = np.arange(int(max(checkpoints)))
    twisted = np.exp(-2j * np.pi * theta * j) * series[: j.size]
    cums = np.cumsum(twisted)
    return np.array([cums[n - 1] for n in checkpoints])


def direct_first_diff(x, y, lookahead):
    # oracle: per-index nearest-mismatch scan, plain python
    n = len(x) - 2 * lookahead
    out = np.zeros(n)
    for j in range(n):
        best = None
        for d in range(lookahead + 1):
            if x[j + lookahead + d] != y[j + lookahead + d]:
                best = d
                break
        for d in range(1, (best if best is not None else lookahead) + 1):
            if x[j + lookahead - d] != y[j + lookahead - d]:
                if best is None or d < best:
                    best = d
                break
        if best is not None:
            out[j] = 2.0 ** (-best)
    return out


@pytest.mark.parametrize("backend", BACKENDS, ids=IDS)
def test_twisted_checkpoint_sums_match_direct_formula(backend):
    rng = np.random.default_rng(7)
    series = rng.normal(size=2000) + 1j * rng.normal(size=2000)
    cps = [1, 2, 17, 300, 2000]
    for theta in (0.0, 0.5, 1 / 3, 0.123456789):
        got = backend.twisted_checkpoint_sums(series, theta, cps)
        want = direct_twisted_sums(series, theta, cps)
        assert np.allclose(got, want, atol=1e-9, rtol=0)


@pytest.mark.parametrize("backend", BACKENDS, ids=IDS)
def test_twisted_sums_multi_matches_single_frequency_path(backend):
    rng = np.random.default_rng(8)
    series = rng.normal(size=1500) + 1j * rng.normal(size=1500)
    thetas = np.array([0.0, 0.25, 0.7071, 0.9999])
    got = backend.twisted_sums_multi(series, thetas, 1500)
    for t, theta in enumerate(thetas):
        want = backend.twisted_checkpoint_sums(series, float(theta), [1500])[0]
        assert abs(got[t] - want) <= 1e-9


@pytest.mark.parametrize("backend", BACKENDS, ids=IDS)
def test_phase_anchor_keeps_long_runs_accurate(backend):
    # one pure tone over several anchor blocks: S_n stays n to near machine accuracy
    n = 200_000
    theta = 0.437
    j = np.arange(n)
    series = np.exp(2j * np.pi * theta * j)
    got = backend.twisted_checkpoint_sums(series, theta, [n])[0]
    assert abs(got - n) <= 1e-6 * n


@pytest.mark.parametrize("backend", BACKENDS, ids=IDS)
def test_first_diff_profile_matches_python_scan(backend):
    rng = np.random.default_rng(9)
    K = 5
    n = 300
    x = rng.integers(0, 2, size=n + 2 * K).astype(np.int64)
    y = x.copy()
    flips = rng.choice(n + 2 * K, size=30, replace=False)
    y[flips] = 1 - y[flips]
    got = backend.first_diff_profile(x, y, n, K)
    want = direct_first_diff(x, y, K)
    assert np.array_equal(got, want)


def test_identical_orbits_have_zero_profile():
    x = np.arange(100, dtype=np.int64) % 3
    got = kernels.first_diff_profile(x, x.copy(), 80, 10)
    assert np.all(got == 0.0)


def test_coordinate_zero_mismatch_scores_one():
    K = 4
    x = np.zeros(20 + 2 * K, dtype=np.int64)
    y = x.copy()
    y[K + 3] = 1  # pair index 3 differs at its own coordinate
    got = kernels.first_diff_profile(x, y, 20, K)
    assert got[3] == 1.0
    assert got[2] == 0.5 and got[4] == 0.5
    assert got[3 - K] == 0.0 if 3 - K >= 0 else True


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels unavailable")
def test_backends_agree_on_random_data():
    fast, ref = kernels.get_backend("compiled"), kernels.get_backend("reference")
    rng = np.random.default_rng(10)
    series = rng.normal(size=70_000) + 1j * rng.normal(size=70_000)
    cps = [100, 65_536, 70_000]  # straddles the anchor block length
    for theta in (0.0, 0.318309886, 5 / 7):
        a = fast.twisted_checkpoint_sums(series, theta, cps)
        b = ref.twisted_checkpoint_sums(series, theta, cps)
        assert np.allclose(a, b, atol=1e-7 * len(series), rtol=0)
    thetas = rng.uniform(0, 1, size=12)
    assert np.allclose(
        fast.twisted_sums_multi(series, thetas, 50_000),
        ref.twisted_sums_multi(series, thetas, 50_000),
        atol=1e-7 * len(series),
        rtol=0,
    )
    x = rng.integers(0, 2, size=900 + 64).astype(np.int64)
    y = rng.integers(0, 2, size=900 + 64).astype(np.int64)
    assert np.array_equal(
        fast.first_diff_profile(x, y, 900, 32), ref.first_diff_profile(x, y, 900, 32)
    )


@given(
    theta=st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
    n=st.integers(min_value=1, max_value=400),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_twisted_sum_bounded_by_total_mass(theta, n, seed):
    # |sum exp(..) s_j| <= sum |s_j| for any frequency
    rng = np.random.default_rng(seed)
    series = rng.normal(size=n) + 1j * rng.normal(size=n)
    got = kernels.twisted_checkpoint_sums(series, theta, [n])[0]
    assert abs(got) <= np.abs(series).sum() + 1e-9
