"""NumPy reference kernels.

Semantically identical to the compiled backend in ``_fastk.pyx``: twisted
phases are generated blockwise with a fresh anchor every ``ANCHOR_BLOCK``
samples, so rounding drift stays bounded regardless of series length.  The
reference path builds each block's phase ramp with a cumulative product
(the vectorized form of the single-frequency recurrence) instead of a
per-sample scalar loop.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

ANCHOR_BLOCK = 1 << 16

BACKEND = "reference"


def _phase_block(theta: float, start: int, length: int) -> np.ndarray:
    """w[i] = exp(-2*pi*i*theta*(start+i)) for i < length, anchored at start."""
    anchor = cmath.exp(-2j * math.pi * math.fmod(theta * start, 1.0))
    w = np.empty(length, dtype=np.complex128)
    w[0] = anchor
    if length > 1:
        w[1:] = cmath.exp(-2j * math.pi * theta)
        np.cumprod(w, out=w)
    return w


def twisted_checkpoint_sums(series: np.ndarray, theta: float, checkpoints) -> np.ndarray:
    """Partial sums S_n = sum_{j<n} exp(-2*pi*i*theta*j) * series[j] at each checkpoint."""
    cps = np.asarray(checkpoints, dtype=np.int64)
    n_last = int(cps[-1])
    out = np.empty(cps.size, dtype=np.complex128)
    total = 0.0 + 0.0j
    ci = 0
    for j0 in range(0, n_last, ANCHOR_BLOCK):
        j1 = min(j0 + ANCHOR_BLOCK, n_last)
        tw = _phase_block(theta, j0, j1 - j0)
        tw *= series[j0:j1]
        while ci < cps.size and cps[ci] <= j1:
            out[ci] = total + tw[: int(cps[ci]) - j0].sum()
            ci += 1
        total += tw.sum()
    return out


def twisted_sums_multi(series: np.ndarray, thetas, n: int) -> np.ndarray:
    """S_n(theta_t) for a batch of frequencies over the same prefix of length n."""
    th = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    acc = np.zeros(th.size, dtype=np.complex128)
    n = int(n)
    for j0 in range(0, n, ANCHOR_BLOCK):
        j1 = min(j0 + ANCHOR_BLOCK, n)
        seg = series[j0:j1]
        for t in range(th.size):
            acc[t] += _phase_block(float(th[t]), j0, j1 - j0) @ seg
    return acc


def first_diff_profile(ext_x: np.ndarray, ext_y: np.ndarray, n: int, lookahead: int) -> np.ndarray:
    """rho_j = 2^(-min{|k| <= lookahead : x[j+k] != y[j+k]}), 0 when no difference is visible.

    Inputs are label arrays extended by ``lookahead`` on both sides, so the
    coordinate-0 symbol of the j-th pair sits at index j+lookahead.
    """
    k = int(lookahead)
    n = int(n)
    if ext_x.shape[0] != n + 2 * k or ext_y.shape[0] != n + 2 * k:
        raise ValueError("extended arrays must have length n + 2*lookahead")
    ne = ext_x != ext_y
    out = np.zeros(n, dtype=np.float64)
    pos = np.flatnonzero(ne)
    if pos.size == 0:
        return out
    centers = np.arange(k, k + n, dtype=np.int64)
    idx = np.searchsorted(pos, centers)
    right = np.where(idx < pos.size, pos[np.minimum(idx, pos.size - 1)] - centers, k + 1)
    left = np.where(idx > 0, centers - pos[np.maximum(idx - 1, 0)], k + 1)
    dist = np.minimum(np.minimum(left, right), k + 1)
    visible = dist <= k
    out[visible] = np.exp2(-dist[visible].astype(np.float64))
    return out
