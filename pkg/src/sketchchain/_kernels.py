"""Numba kernels for the inner matching loops.

Index construction evaluates chain similarity millions of times, so the DP
table fill, alignment backtracking and the centroid-angle consistency loop
are JIT-compiled. Everything here works on plain float64/int64 arrays; the
public API in :mod:`sketchchain.matching` owns types and parameter handling.
"""

from __future__ import annotations

import numpy as np
from numba import njit

PI = np.pi
TWO_PI = 2.0 * np.pi

# backtracking directions stored during the fill
_NONE, _DIAG, _SKIP_A, _SKIP_B = 0, 1, 2, 3


@njit(cache=True)
def joint_score_scalar(ratio_a, angle_a, ratio_b, angle_b, lam_ratio, lam_angle):
    om = ratio_a / ratio_b if ratio_a < ratio_b else ratio_b / ratio_a
    d = abs(angle_a - angle_b)
    if d > PI:
        d = TWO_PI - d
    # single exp of the summed exponents; equals the two-factor product to
    # within one ulp and halves the dominant cost of the table fill
    return np.exp(-(lam_ratio * (1.0 - om) + lam_angle * d))


@njit(cache=True)
def dp_fill(ra, ta, oa, rb, tb, ob, alpha_a, alpha_b, lam_ratio, lam_angle, table, dirs):
    """Fill the alignment table; returns (best score, best i, best j).

    ``table``/``dirs`` are (la+1, lb+1) scratch buffers. A cell is the best
    score of an almost-contiguous match ending at that joint pair; ties pick
    diagonal over skip-in-a over skip-in-b over restart, and the reported
    best cell is the first maximum in row-major order.
    """
    la = len(ra)
    lb = len(rb)
    for j in range(lb + 1):
        table[0, j] = 0.0
        dirs[0, j] = _NONE
    best = 0.0
    bi = 0
    bj = 0
    for i in range(1, la + 1):
        table[i, 0] = 0.0
        dirs[i, 0] = _NONE
        for j in range(1, lb + 1):
            s = joint_score_scalar(
                ra[i - 1], ta[i - 1], rb[j - 1], tb[j - 1], lam_ratio, lam_angle
            )
            diag = table[i - 1, j - 1] + s
            skip_a = table[i - 1, j] - oa[i - 1] * alpha_a
            skip_b = table[i, j - 1] - ob[j - 1] * alpha_b
            v = 0.0
            d = _NONE
            if skip_b >= v:
                v = skip_b
                d = _SKIP_B
            if skip_a >= v:
                v = skip_a
                d = _SKIP_A
            if diag >= v:
                v = diag
                d = _DIAG
            table[i, j] = v
            dirs[i, j] = d
            if v > best:
                best = v
                bi = i
                bj = j
    return best, bi, bj


@njit(cache=True)
def backtrack(table, dirs, bi, bj, pairs, skip_a, skip_b):
    """Walk from the best cell to the first zero cell; returns entry counts."""
    npairs = 0
    nskip_a = 0
    nskip_b = 0
    i = bi
    j = bj
    while i > 0 and j > 0 and table[i, j] > 0.0:
        d = dirs[i, j]
        if d == _DIAG:
            pairs[npairs, 0] = i - 1
            pairs[npairs, 1] = j - 1
            npairs += 1
            i -= 1
            j -= 1
        elif d == _SKIP_A:
            skip_a[nskip_a] = i - 1
            nskip_a += 1
            i -= 1
        elif d == _SKIP_B:
            skip_b[nskip_b] = j - 1
            nskip_b += 1
            j -= 1
        else:
            break
    # recorded tail-first; reverse in place
    for t in range(npairs // 2):
        u = npairs - 1 - t
        for c in range(2):
            tmp = pairs[t, c]
            pairs[t, c] = pairs[u, c]
            pairs[u, c] = tmp
    for t in range(nskip_a // 2):
        u = nskip_a - 1 - t
        tmp = skip_a[t]
        skip_a[t] = skip_a[u]
        skip_a[u] = tmp
    for t in range(nskip_b // 2):
        u = nskip_b - 1 - t
        tmp = skip_b[t]
        skip_b[t] = skip_b[u]
        skip_b[u] = tmp
    return npairs, nskip_a, nskip_b


@njit(cache=True)
def _subtended_angle(px, py, qx, qy, cx, cy):
    """Unsigned angle at (cx, cy) between rays to p and q, in [0, pi].

    A ray degenerating to the reference point contributes angle 0.
    """
    v1x = px - cx
    v1y = py - cy
    v2x = qx - cx
    v2y = qy - cy
    if (v1x * v1x + v1y * v1y) < 1e-24 or (v2x * v2x + v2y * v2y) < 1e-24:
        return 0.0
    cross = v1x * v2y - v1y * v2x
    dot = v1x * v2x + v1y * v2y
    return abs(np.arctan2(cross, dot))


@njit(cache=True)
def angle_consistency(pts_a, pts_b, pairs, npairs, lam):
    """Centroid-referenced angular agreement of the matched joints, in (0, 1]."""
    if npairs < 2:
        return 1.0
    cax = 0.0
    cay = 0.0
    cbx = 0.0
    cby = 0.0
    for t in range(npairs):
        cax += pts_a[pairs[t, 0], 0]
        cay += pts_a[pairs[t, 0], 1]
        cbx += pts_b[pairs[t, 1], 0]
        cby += pts_b[pairs[t, 1], 1]
    cax /= npairs
    cay /= npairs
    cbx /= npairs
    cby /= npairs
    total = 0.0
    for t in range(npairs - 1):
        a = _subtended_angle(
            pts_a[pairs[t, 0], 0], pts_a[pairs[t, 0], 1],
            pts_a[pairs[t + 1, 0], 0], pts_a[pairs[t + 1, 0], 1],
            cax, cay,
        )
        b = _subtended_angle(
            pts_b[pairs[t, 1], 0], pts_b[pairs[t, 1], 1],
            pts_b[pairs[t + 1, 1], 0], pts_b[pairs[t + 1, 1], 1],
            cbx, cby,
        )
        total += abs(a - b)
    return np.exp(-lam * total / npairs)


@njit(cache=True)
def _pair_score(
    ra, ta, oa, pa,
    rb4, tb4, ob4, pb4,
    alpha_a, alpha_b, lam_ratio, lam_angle, lam_consistency,
    table, dirs, pairs, skip_a, skip_b,
):
    best_score = -1.0
    best_gac = 1.0
    for v in range(4):
        score, bi, bj = dp_fill(
            ra, ta, oa, rb4[v], tb4[v], ob4[v],
            alpha_a, alpha_b, lam_ratio, lam_angle, table, dirs,
        )
        if score > best_score:
            best_score = score
            npairs, _, _ = backtrack(table, dirs, bi, bj, pairs, skip_a, skip_b)
            best_gac = angle_consistency(pa, pb4[v], pairs, npairs, lam_consistency)
    return best_gac * best_score


@njit(cache=True)
def score_all_variants(
    ra, ta, oa, pa,
    rb4, tb4, ob4, pb4,
    alpha_a, alpha_b, lam_ratio, lam_angle, lam_consistency,
):
    """Consistency-weighted score of the best variant, no alignment output."""
    la = len(ra)
    lb = rb4.shape[1]
    table = np.empty((la + 1, lb + 1))
    dirs = np.empty((la + 1, lb + 1), dtype=np.uint8)
    pairs = np.empty((min(la, lb), 2), dtype=np.int64)
    skip_a = np.empty(la, dtype=np.int64)
    skip_b = np.empty(lb, dtype=np.int64)
    return _pair_score(
        ra, ta, oa, pa, rb4, tb4, ob4, pb4,
        alpha_a, alpha_b, lam_ratio, lam_angle, lam_consistency,
        table, dirs, pairs, skip_a, skip_b,
    )


@njit(cache=True)
def score_query_against_packed(
    rb4, tb4, ob4, pb4,
    ra_flat, ta_flat, oa_flat, pa_flat, offsets,
    alpha_a, alpha_b, lam_ratio, lam_angle, lam_consistency,
    out,
):
    """Score one query (as the b side) against many packed descriptors.

    The a-side features of all candidates live in flat arrays indexed by
    ``offsets``; scratch buffers are hoisted across candidates. Fills ``out``
    with one score per candidate.
    """
    n = len(offsets) - 1
    lb = rb4.shape[1]
    max_la = 0
    for i in range(n):
        la = offsets[i + 1] - offsets[i]
        if la > max_la:
            max_la = la
    table = np.empty((max_la + 1, lb + 1))
    dirs = np.empty((max_la + 1, lb + 1), dtype=np.uint8)
    pairs = np.empty((max_la if max_la < lb else lb, 2), dtype=np.int64)
    skip_a = np.empty(max_la, dtype=np.int64)
    skip_b = np.empty(lb, dtype=np.int64)
    for i in range(n):
        s = offsets[i]
        e = offsets[i + 1]
        out[i] = _pair_score(
            ra_flat[s:e], ta_flat[s:e], oa_flat[s:e], pa_flat[s:e],
            rb4, tb4, ob4, pb4,
            alpha_a, alpha_b, lam_ratio, lam_angle, lam_consistency,
            table, dirs, pairs, skip_a, skip_b,
        )


@njit(cache=True)
def match_all_variants(
    ra, ta, oa, pa,
    rb4, tb4, ob4, pb4,
    alpha_a, alpha_b, lam_ratio, lam_angle, lam_consistency,
):
    """Match descriptor A against the four flip variants of B.

    Returns (variant index, alignment score, angle consistency, pairs,
    npairs, skips in a, count, skips in b, count) for the variant with the
    highest alignment score (earliest variant wins ties).
    """
    la = len(ra)
    lb = rb4.shape[1]
    table = np.empty((la + 1, lb + 1))
    dirs = np.empty((la + 1, lb + 1), dtype=np.uint8)
    pairs = np.empty((min(la, lb), 2), dtype=np.int64)
    skip_a = np.empty(la, dtype=np.int64)
    skip_b = np.empty(lb, dtype=np.int64)
    best_var = 0
    best_score = -1.0
    best_gac = 1.0
    npairs = 0
    nskip_a = 0
    nskip_b = 0
    for v in range(4):
        score, bi, bj = dp_fill(
            ra, ta, oa, rb4[v], tb4[v], ob4[v],
            alpha_a, alpha_b, lam_ratio, lam_angle, table, dirs,
        )
        if score > best_score:
            best_var = v
            best_score = score
            npairs, nskip_a, nskip_b = backtrack(table, dirs, bi, bj, pairs, skip_a, skip_b)
            best_gac = angle_consistency(pa, pb4[v], pairs, npairs, lam_consistency)
    return best_var, best_score, best_gac, pairs, npairs, skip_a, nskip_a, skip_b, nskip_b
