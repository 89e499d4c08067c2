"""Timing comparison of the compiled and reference kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``.  Each hot loop is timed
on both backends at a few sizes; results agree to ~1e-10 (summation order
differs), so the table also prints the observed cross-backend deviation.
"""

import time

import numpy as np

from ergolab.kernels import available_backends, get_backend


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def bench_twisted_checkpoint_sums(backend, series, checkpoints):
    return lambda: backend.twisted_checkpoint_sums(series, 0.3819660112501051, checkpoints)


def bench_twisted_sums_multi(backend, series, thetas, n):
    return lambda: backend.twisted_sums_multi(series, thetas, n)


def bench_first_diff_profile(backend, ext_x, ext_y, n, lookahead):
    return lambda: backend.first_diff_profile(ext_x, ext_y, n, lookahead)


def main():
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled kernels not built; timing the reference backend only")

    rng = np.random.default_rng(0)
    rows = []
    for n in (2**16, 2**20):
        series = (1 - 2 * rng.integers(0, 2, n)).astype(np.complex128)
        checkpoints = np.array([n // 8, n // 4, n // 2, n], dtype=np.int64)
        thetas = rng.random(32)
        lookahead = 32
        ext_x = rng.integers(0, 2, n + 2 * lookahead)
        ext_y = ext_x.copy()
        ext_y[rng.integers(0, n, n // 100)] ^= 1

        cases = [
            ("twisted_checkpoint_sums", lambda b: bench_twisted_checkpoint_sums(b, series, checkpoints)),
            ("twisted_sums_multi(32)", lambda b: bench_twisted_sums_multi(b, series, thetas, n)),
            ("first_diff_profile", lambda b: bench_first_diff_profile(b, ext_x, ext_y, n, lookahead)),
        ]
        for name, make in cases:
            timings, results = {}, {}
            for backend_name in backends:
                timings[backend_name], results[backend_name] = best_of(
                    make(get_backend(backend_name))
                )
            if len(backends) == 2:
                deviation = float(
                    np.max(np.abs(np.asarray(results["compiled"]) - np.asarray(results["reference"])))
                )
                speedup = timings["reference"] / timings["compiled"]
                rows.append((name, n, timings["compiled"], timings["reference"], speedup, deviation))
            else:
                rows.append((name, n, None, timings["reference"], None, 0.0))

    header = f"{'kernel':28s} {'n':>9s} {'compiled':>10s} {'reference':>10s} {'speedup':>8s} {'max |diff|':>11s}"
    print(header)
    print("-" * len(header))
    for name, n, tc, tr, speedup, deviation in rows:
        tc_s = "-" if tc is None else f"{tc * 1e3:8.2f}ms"
        sp_s = "-" if speedup is None else f"{speedup:7.1f}x"
        print(f"{name:28s} {n:9d} {tc_s:>10s} {tr * 1e3:8.2f}ms {sp_s:>8s} {deviation:11.2e}")


if __name__ == "__main__":
    main()
