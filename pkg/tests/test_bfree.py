"""B-free sieves, periodic truncations, convergence traces, spectrum certificates."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ergolab import (
    ArgumentError,
    CapacityError,
    CheckpointSchedule,
    DomainError,
    GeneratorSet,
    davenport_erdos_trace,
    eta_origin,
    eta_window,
    exact_period_dft,
    generate_orbit,
    mirsky_spectrum_experiment,
)
from ergolab.dynsys import BFreePoint


def direct_eta(gens, n):
    """Independent sieve: j is free iff no generator divides it (0 is never free)."""
    return np.array(
        [j != 0 and all(j % b != 0 for b in gens) for j in range(n)], dtype=bool
    )


class TestGeneratorSet:
    def test_validation_rejects_bad_sets(self):
        with pytest.raises(ArgumentError):
            GeneratorSet(())  # empty finite set
        with pytest.raises(ArgumentError):
            GeneratorSet((), "no_such_family")
        with pytest.raises(ArgumentError):
            GeneratorSet((4, 9), "prime_squares")  # family + explicit generators
        with pytest.raises(DomainError):
            GeneratorSet((1, 4))  # generator below 2
        with pytest.raises(DomainError):
            GeneratorSet((9, 4))  # not strictly increasing

    def test_from_rule_builds_the_capped_set(self):
        squares = GeneratorSet.from_rule(lambda b: math.isqrt(b) ** 2 == b, cap=30)
        assert squares.generators == (4, 9, 16, 25)
        with pytest.raises(ArgumentError):
            GeneratorSet.from_rule(lambda b: True, cap=1)

    def test_prime_squares_family_truncates_and_enumerates(self):
        fam = GeneratorSet((), "prime_squares")
        assert fam.is_family
        assert fam.truncate(4).generators == (4, 9, 25, 49)
        # p^2 <= 100 needs p <= 10, so exactly the squares of 2, 3, 5, 7
        assert fam.enumerate_up_to(100) == (4, 9, 25, 49)
        assert fam.enumerate_up_to(121) == (4, 9, 25, 49, 121)

    def test_finite_truncation_bounds(self):
        B = GeneratorSet((4, 9))
        assert B.truncate(1).generators == (4,)
        with pytest.raises(ArgumentError):
            B.truncate(3)
        with pytest.raises(ArgumentError):
            B.truncate(0)

    def test_lcm_values_and_overflow_guard(self):
        assert GeneratorSet((4, 9)).lcm(2) == 36
        fam = GeneratorSet((), "prime_squares")
        # lcm of the first 9 prime squares is the squared primorial, < 2^63
        assert fam.lcm(9) == 223092870**2
        with pytest.raises(CapacityError):
            fam.lcm(10)

    def test_json_round_trip(self):
        for B in (GeneratorSet((4, 9, 25)), GeneratorSet((), "prime_squares")):
            assert GeneratorSet.from_json(B.to_json()) == B


class TestEtaWindow:
    def test_single_even_generator_marks_odd_integers(self):
        eta = eta_window(GeneratorSet((2,)), 6)
        assert eta.values.tolist() == [False, True, False, True, False, True]
        assert not eta.values[0]  # 0 is a multiple of everything

    def test_two_generator_density_is_exact_on_one_period(self):
        eta = eta_window(GeneratorSet((4, 9)), 36, truncation=2)
        # inclusion-exclusion on [0, 36): 9 multiples of 4, 4 of 9, 1 of both
        assert int(eta.values.sum()) == 36 - (9 + 4 - 1)
        assert eta.density == pytest.approx(2 / 3, abs=0)
        assert eta.period == 36

    def test_matches_direct_sieve(self):
        for gens in ((2,), (4, 9), (2, 3, 5), (4, 9, 25, 49)):
            eta = eta_window(GeneratorSet(gens), 500)
            assert np.array_equal(eta.values, direct_eta(gens, 500))

    def test_truncated_window_is_exactly_periodic(self):
        B = GeneratorSet((4, 9, 25))
        eta = eta_window(B, 3 * 36, truncation=2)
        assert eta.period == 36
        v = eta.values
        assert np.array_equal(v[:36], v[36:72])
        assert np.array_equal(v[:36], v[72:108])
        assert eta.sieved == (4, 9)

    def test_untruncated_window_sieves_all_reachable_generators(self):
        fam = GeneratorSet((), "prime_squares")
        eta = eta_window(fam, 122)
        assert eta.sieved == (4, 9, 25, 49, 121)
        assert not eta.values[121]
        assert np.array_equal(eta.values, direct_eta(eta.sieved, 122))

    def test_rejects_empty_window(self):
        with pytest.raises(ArgumentError):
            eta_window(GeneratorSet((2,)), 0)

    def test_mismatch_sets_shrink_as_truncation_grows(self):
        fam = GeneratorSet((), "prime_squares")
        n = 2000
        full = eta_window(fam, n).values
        previous = None
        for k in (1, 2, 3, 4):
            approx = eta_window(fam, n, truncation=k).values
            # approximants only over-mark: anything free in eta is free in eta_k
            assert np.all(approx[full])
            mismatch = approx != full
            if previous is not None:
                assert np.all(previous[mismatch])  # mismatch(k) subset mismatch(k-1)
            previous = mismatch


class TestEtaOrigin:
    def test_full_origin_reproduces_the_window_sieve(self):
        fam = GeneratorSet((), "prime_squares")
        orbit = generate_orbit(BFreePoint(fam), eta_origin(fam), 300)
        assert np.array_equal(orbit.labels, eta_window(fam, 300).labels())

    def test_full_origin_extends_left_by_divisibility(self):
        B = GeneratorSet((4, 9))
        orbit = generate_orbit(BFreePoint(B), eta_origin(B), 50)
        left = orbit.extended_labels(-10, 10)
        expected = [
            1 if (j != 0 and j % 4 != 0 and j % 9 != 0) else 0 for j in range(-10, 10)
        ]
        assert left.tolist() == expected

    def test_truncated_origin_agrees_with_truncated_window(self):
        B = GeneratorSet((4, 9, 25))
        orbit = generate_orbit(BFreePoint(B), eta_origin(B, truncation=2), 100)
        assert np.array_equal(orbit.labels, eta_window(B, 100, truncation=2).labels())
        assert orbit.origin.period == 36

    def test_truncated_origin_refuses_unmaterializable_periods(self):
        fam = GeneratorSet((), "prime_squares")
        with pytest.raises(CapacityError):
            eta_origin(fam, truncation=8)  # period (2*3*...*19)^2 > 2^26

    def test_eta_window_orbit_round_trip(self):
        B = GeneratorSet((4, 9))
        eta = eta_window(B, 80, truncation=2)
        assert np.array_equal(eta.orbit_window().labels, eta.labels())


class TestDavenportErdos:
    def test_tails_match_the_inclusion_exclusion_density(self):
        # eta_{4} vs eta_{4,9} differ exactly on multiples of 9 that are not
        # multiples of 4: density (1/9)(3/4) = 1/12, exact on lcm multiples
        B = GeneratorSet((4, 9))
        schedule = CheckpointSchedule((36 * 8, 36 * 16, 36 * 32, 36 * 64))
        report = davenport_erdos_trace(B, [1, 2], schedule)
        assert report.truncations == (1, 2)
        assert report.tails[0] == pytest.approx(1 / 12, abs=1e-12)
        assert report.tails[1] == 0.0
        assert report.nonincreasing
        assert report.window_length == 36 * 64

    def test_trace_counts_match_a_direct_mismatch_count(self):
        fam = GeneratorSet((), "prime_squares")
        schedule = CheckpointSchedule.up_to(4096)
        report = davenport_erdos_trace(fam, [1, 2, 3], schedule)
        full = eta_window(fam, 4096).values
        for k, trace in zip(report.truncations, report.traces):
            approx = eta_window(fam, 4096, truncation=k).values
            for cp, avg in zip(schedule.checkpoints, trace.averages):
                direct = float(np.mean(approx[:cp] != full[:cp]))
                assert avg == pytest.approx(direct, abs=0)

    def test_requires_increasing_truncations(self):
        with pytest.raises(ArgumentError):
            davenport_erdos_trace(
                GeneratorSet((4, 9)), [2, 1], CheckpointSchedule.up_to(1024)
            )
        with pytest.raises(ArgumentError):
            davenport_erdos_trace(
                GeneratorSet((4, 9)), [], CheckpointSchedule.up_to(1024)
            )


class TestExactPeriodDft:
    def test_matches_the_direct_fourier_sum(self):
        w = eta_window(GeneratorSet((4, 9)), 36, truncation=2).values.astype(float)
        c = exact_period_dft(w)
        P = w.size
        j = np.arange(P)
        for t in range(P):
            direct = np.sum(w * np.exp(-2j * np.pi * t * j / P)) / P
            assert abs(c[t] - direct) <= 1e-12

    def test_zero_mode_is_the_density_and_mass_obeys_parseval(self):
        # for a 0/1 window, sum_t |c_t|^2 = (1/P) sum w_j^2 = density
        eta = eta_window(GeneratorSet((2, 3)), 6, truncation=2)
        c = exact_period_dft(eta.values)
        assert c[0].real == pytest.approx(1 / 3, abs=1e-12)
        assert float(np.sum(np.abs(c) ** 2)) == pytest.approx(eta.density, abs=1e-12)


class TestMirskySpectrum:
    def test_single_generator_spectrum_is_the_two_line_comb(self):
        report = mirsky_spectrum_experiment(GeneratorSet((2,)), 1, 4096)
        assert report.passed
        (per,) = report.per_k
        assert per.period == 2
        lines = {
            e.probe.exact_rational: e.amplitude for e in per.spectrum.entries
        }
        assert set(lines) == {(0, 1), (1, 2)}
        assert lines[(0, 1)] == pytest.approx(0.5, abs=1e-9)
        assert lines[(1, 2)] == pytest.approx(0.5, abs=1e-9)
        assert per.dft_max_error <= 1e-9
        assert per.dft_missing == ()

    def test_two_generator_amplitudes_match_the_cosine_comb(self):
        # eta_{2,3} one period is (0,1,0,0,0,1): c_t = (1/3) cos(pi t / 3)
        report = mirsky_spectrum_experiment(GeneratorSet((2, 3)), [1, 2], 4096)
        assert report.passed
        per = report.per_k[1]
        assert per.period == 6
        expected = {
            (0, 1): 1 / 3,
            (1, 6): 1 / 6,
            (1, 3): 1 / 6,
            (1, 2): 1 / 3,
            (2, 3): 1 / 6,
            (5, 6): 1 / 6,
        }
        lines = {e.probe.exact_rational: e.amplitude for e in per.spectrum.entries}
        assert set(lines) == set(expected)
        for key, amp in expected.items():
            assert lines[key] == pytest.approx(amp, abs=1e-9)

    def test_containment_rows_cover_the_full_spectrum(self):
        report = mirsky_spectrum_experiment(GeneratorSet((2, 3)), [1, 2], 4096)
        assert report.containment_ok is True
        # the untruncated sieve of {2, 3} is already periodic, so the full
        # scan sees the same six lines and k=2 matches each one
        assert len(report.containment_rows) == 6
        assert all(row.matched[2] for row in report.containment_rows)

    def test_full_scan_can_be_skipped(self):
        report = mirsky_spectrum_experiment(
            GeneratorSet((2,)), 1, 4096, full_scan=False
        )
        assert report.containment_ok is None
        assert report.full_spectrum is None
        assert report.containment_rows == ()
        assert report.passed  # gate then rests on the per-k certificates

    def test_rejects_short_windows_and_bad_truncations(self):
        with pytest.raises(ArgumentError):
            mirsky_spectrum_experiment(GeneratorSet((4, 9)), 2, 100)  # < 16 periods
        with pytest.raises(ArgumentError):
            mirsky_spectrum_experiment(GeneratorSet((4, 9)), [2, 1], 4096)

    def test_report_json_is_serializable(self):
        import json

        report = mirsky_spectrum_experiment(
            GeneratorSet((2,)), 1, 2048, full_scan=False
        )
        blob = json.dumps(report.to_json(), sort_keys=True)
        assert '"passed": true' in blob


@given(st.sets(st.integers(min_value=2, max_value=30), min_size=1, max_size=4))
def test_sieve_agrees_with_direct_divisibility(gens):
    gens = tuple(sorted(gens))
    eta = eta_window(GeneratorSet(gens), 200)
    assert np.array_equal(eta.values, direct_eta(gens, 200))
