"""Pure NumPy implementations of the hot kernels.

Semantics here are the reference; ``_kernels.pyx`` must agree with them to
floating-point rounding.  Both backends draw per-cell Gaussian deviates from
a counter-based hash so a cell's variation depends only on (seed, coordinates).
"""

import math

import numpy as np

BACKEND = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 2.0 * math.pi


def _splitmix(x):
    # uint64 arrays wrap silently; scalars would warn, so callers pass arrays.
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _splitmix_int(x):
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def gaussian(seed, a, b, c, d):
    """Standard normal deviate keyed by ``(seed, a, b, c, d)``."""
    h = _splitmix_int(int(seed) & _MASK)
    for v in (a, b, c, d):
        h = _splitmix_int(h ^ (int(v) & _MASK))
    u1 = ((h >> 11) + 0.5) * _INV53
    u2 = (_splitmix_int(h) >> 11) * _INV53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


def gaussian_array(seed, a, b, c, d):
    """Vectorized :func:`gaussian`; arguments broadcast against each other."""
    a, b, c, d = np.broadcast_arrays(*(np.asarray(v).astype(np.uint64) for v in (a, b, c, d)))
    h = _splitmix(np.full(a.shape, int(seed) & _MASK, dtype=np.uint64))
    for v in (a, b, c, d):
        h = _splitmix(h ^ v)
    u1 = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53
    u2 = (_splitmix(h) >> np.uint64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def round_half_away(v):
    v = np.asarray(v, dtype=np.float64)
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def accumulate_pulse(levels, match, blocks, drives, pulse, sigma, seed, layer):
    """Differential bitline current for one read pulse.

    levels : uint8[B, S, P]  cell states of the selected layer
    match  : uint8[B, S, P]  1 where the string's CAM segment passes
    blocks : int64[n]        driven blocks
    drives : float64[n]      signed drive per block (polarity x magnitude x block sign)

    A string contributes ``drive * (1 + sigma * z)`` when it matches and its
    selected cell has ``level <= pulse``; z is keyed by (block, ssl, bitline, layer).
    """
    levels = np.asarray(levels)
    n_bl = levels.shape[2]
    out = np.zeros(n_bl, dtype=np.float64)
    blocks = np.asarray(blocks, dtype=np.int64)
    drives = np.asarray(drives, dtype=np.float64)
    if blocks.size == 0:
        return out
    sel = levels[blocks]
    on = (sel <= pulse) & (np.asarray(match)[blocks] != 0)
    if sigma == 0.0:
        weight = on.astype(np.float64)
    else:
        ssl = np.arange(levels.shape[1])
        bl = np.arange(n_bl)
        z = gaussian_array(seed, blocks[:, None, None], ssl[None, :, None], bl[None, None, :], layer)
        weight = np.where(on, 1.0 + sigma * z, 0.0)
    out += np.einsum("n,nsp->p", drives, weight)
    return out


def mc_error_counts(seed, sign_x, sign_w, cond_pos, cond_neg, drive, weight_mag,
                    sigma, lsb, full_scale, tolerance=1.0, chunk=512):
    """Count Monte Carlo trials whose quantized dot product misses by >= ``tolerance``.

    sign_x, sign_w : int8[T, n]   per-trial, per-pair signs of x and w
    cond_pos/neg   : uint8[2, pulses, S]  conduction of the pos/neg block cells
                     for the +|w| code (row 0) and the -|w| code (row 1)

    Returns int64[n]: entry i counts trials failing with the first i+1 pairs driven.
    """
    sign_x = np.asarray(sign_x, dtype=np.int64)
    sign_w = np.asarray(sign_w, dtype=np.int64)
    cond_pos = np.asarray(cond_pos, dtype=np.float64)
    cond_neg = np.asarray(cond_neg, dtype=np.float64)
    n_trials, n_pairs = sign_x.shape
    n_ssl = cond_pos.shape[2]
    counts = np.zeros(n_pairs, dtype=np.int64)
    code_max = full_scale / lsb
    pair_idx = np.arange(n_pairs)
    cell_idx = np.arange(2 * n_ssl)
    for t0 in range(0, n_trials, chunk):
        t1 = min(n_trials, t0 + chunk)
        sx = sign_x[t0:t1]
        sw = sign_w[t0:t1]
        trial_idx = np.arange(t0, t1)
        if sigma == 0.0:
            cells = np.ones((t1 - t0, n_pairs, 2 * n_ssl))
        else:
            z = gaussian_array(seed, trial_idx[:, None, None], pair_idx[None, :, None],
                               cell_idx[None, None, :], 0)
            cells = 1.0 + sigma * z
        pos_cells = cells[:, :, :n_ssl]
        neg_cells = cells[:, :, n_ssl:]
        code = (sw < 0).astype(np.int64)  # 0 -> +|w| pattern, 1 -> -|w| pattern
        # [T, n, pulses]
        pos = np.einsum("tns,tnps->tnp", pos_cells, cond_pos[code])
        neg = np.einsum("tns,tnps->tnp", neg_cells, cond_neg[code])
        contrib = (sx * drive)[:, :, None] * (pos - neg)
        partial = np.cumsum(contrib, axis=1)
        codes = np.clip(round_half_away(partial / lsb), -code_max, code_max)
        total = codes.sum(axis=2)
        value = round_half_away(total * lsb / 2.0)
        exact = np.cumsum(sx * sw * drive * weight_mag, axis=1)
        counts += (np.abs(value - exact) >= tolerance).sum(axis=0)
    return counts
