"""Array kernels behind the simulator and the brute-force fixedness oracle.

Everything here works on plain int64/float64 arrays with teams indexed
0..3 and the 12 ordered (home, away) slot pairs indexed in lexicographic
order.  The hot functions are compiled with numba; set
``STAKELESS_NUMBA=0`` before import to run the identical source as pure
Python (orders of magnitude slower, useful for verification), or call
the ``.py_func`` attribute of a compiled kernel directly.

Match aggregates are carried as three 4x4 matrices: ``w[i, j]`` wins of
team i over team j, ``d[i, j]`` draws between i and j (symmetric) and
``gf[i, j]`` goals scored by i against j.  The ranking routines share a
preallocated (10, 4) int64 scratch slab so the hot loops allocate
nothing; see :func:`make_scratch`.
"""
from __future__ import annotations

import math
import os

import numpy as np

RULE_GOAL_DIFF = 0
RULE_HEAD_TO_HEAD = 1

#: Ordered (home, away) slot pairs, 1-based slots, lexicographic.
ORDERED_PAIRS = tuple((i, j) for i in range(1, 5) for j in range(1, 5) if i != j)
PAIR_INDEX = {p: k for k, p in enumerate(ORDERED_PAIRS)}

PAIR_HOME = np.array([p[0] - 1 for p in ORDERED_PAIRS], dtype=np.int64)
PAIR_AWAY = np.array([p[1] - 1 for p in ORDERED_PAIRS], dtype=np.int64)

JIT_ENABLED = os.environ.get("STAKELESS_NUMBA", "1").strip().lower() not in ("0", "off", "false")

if JIT_ENABLED:
    from numba import njit as _numba_njit

    def njit(func):
        return _numba_njit(cache=True, nogil=True)(func)
else:
    def njit(func):
        return func

# scratch slab rows
_PTS, _GD, _GFT, _ORDER, _INGRP, _HP, _HG, _INSUB, _HP2, _HG2 = range(10)


def make_scratch() -> np.ndarray:
    """Workspace for the ranking kernels; one per thread of execution."""
    return np.zeros((10, 4), dtype=np.int64)


@njit
def _key_after(a, b, k1, k2):
    # True if team a sorts after team b under (k1 desc, k2 desc, index asc)
    if k1[a] != k1[b]:
        return k1[a] < k1[b]
    if k2[a] != k2[b]:
        return k2[a] < k2[b]
    return a > b


@njit
def _sort_desc2(order, lo, hi, k1, k2):
    # insertion sort of order[lo:hi] by (k1 desc, k2 desc, index asc)
    for i in range(lo + 1, hi):
        t = order[i]
        j = i - 1
        while j >= lo and _key_after(order[j], t, k1, k2):
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = t


@njit
def _resolve_overall(order, lo, hi, gd, gft):
    # last-resort chain: overall goal difference, goals for, slot index
    _sort_desc2(order, lo, hi, gd, gft)
    fallback = False
    for k in range(lo, hi - 1):
        if gd[order[k]] == gd[order[k + 1]] and gft[order[k]] == gft[order[k + 1]]:
            fallback = True
    return fallback


@njit
def _order_h2h_group(order, lo, hi, w, d, gf, gd, gft, scratch):
    # break a points tie with head-to-head records among the tied teams
    in_group = scratch[_INGRP]
    hp = scratch[_HP]
    hg = scratch[_HG]
    for t in range(4):
        in_group[t] = 0
        hp[t] = 0
        hg[t] = 0
    for k in range(lo, hi):
        in_group[order[k]] = 1
    for a in range(4):
        if in_group[a] == 0:
            continue
        for b in range(4):
            if b == a or in_group[b] == 0:
                continue
            hp[a] += 3 * w[a, b] + d[a, b]
            hg[a] += gf[a, b] - gf[b, a]
    _sort_desc2(order, lo, hi, hp, hg)

    fallback = False
    a = lo
    while a < hi:
        b = a + 1
        while b < hi and hp[order[b]] == hp[order[a]] and hg[order[b]] == hg[order[a]]:
            b += 1
        if b - a > 1:
            if b - a < hi - lo:
                # strict subset still tied: re-apply head-to-head once
                in_sub = scratch[_INSUB]
                hp2 = scratch[_HP2]
                hg2 = scratch[_HG2]
                for t in range(4):
                    in_sub[t] = 0
                    hp2[t] = 0
                    hg2[t] = 0
                for k in range(a, b):
                    in_sub[order[k]] = 1
                for x in range(4):
                    if in_sub[x] == 0:
                        continue
                    for y in range(4):
                        if y == x or in_sub[y] == 0:
                            continue
                        hp2[x] += 3 * w[x, y] + d[x, y]
                        hg2[x] += gf[x, y] - gf[y, x]
                _sort_desc2(order, a, b, hp2, hg2)
                c = a
                while c < b:
                    e = c + 1
                    while e < b and hp2[order[e]] == hp2[order[c]] and hg2[order[e]] == hg2[order[c]]:
                        e += 1
                    if e - c > 1:
                        if _resolve_overall(order, c, e, gd, gft):
                            fallback = True
                    c = e
            else:
                if _resolve_overall(order, a, b, gd, gft):
                    fallback = True
        a = b
    return fallback


@njit
def _rank_core(w, d, gf, pts, gd, gft, rule, pos, scratch):
    # rank with the per-team aggregates already computed.  Teams are
    # packed into one sortable key each: points | goal diff | goals for |
    # reversed index, so states without point ties (and the whole
    # goal-difference rule) resolve with a 5-comparator sorting network.
    k0 = (pts[0] << 51) | ((gd[0] + (1 << 24)) << 26) | (gft[0] << 2) | 3
    k1 = (pts[1] << 51) | ((gd[1] + (1 << 24)) << 26) | (gft[1] << 2) | 2
    k2 = (pts[2] << 51) | ((gd[2] + (1 << 24)) << 26) | (gft[2] << 2) | 1
    k3 = (pts[3] << 51) | ((gd[3] + (1 << 24)) << 26) | (gft[3] << 2) | 0
    if k0 < k1:
        k0, k1 = k1, k0
    if k2 < k3:
        k2, k3 = k3, k2
    if k0 < k2:
        k0, k2 = k2, k0
    if k1 < k3:
        k1, k3 = k3, k1
    if k1 < k2:
        k1, k2 = k2, k1

    p0 = k0 >> 51
    p1 = k1 >> 51
    p2 = k2 >> 51
    p3 = k3 >> 51
    if rule == RULE_GOAL_DIFF or (p0 != p1 and p1 != p2 and p2 != p3):
        pos[3 - (k0 & 3)] = 1
        pos[3 - (k1 & 3)] = 2
        pos[3 - (k2 & 3)] = 3
        pos[3 - (k3 & 3)] = 4
        return (k0 >> 2 == k1 >> 2) or (k1 >> 2 == k2 >> 2) or (k2 >> 2 == k3 >> 2)

    # head-to-head rule with at least one points tie: group walk
    order = scratch[_ORDER]
    order[0] = 3 - (k0 & 3)
    order[1] = 3 - (k1 & 3)
    order[2] = 3 - (k2 & 3)
    order[3] = 3 - (k3 & 3)
    fallback = False
    i = 0
    while i < 4:
        j = i + 1
        while j < 4 and pts[order[j]] == pts[order[i]]:
            j += 1
        if j - i > 1:
            if _order_h2h_group(order, i, j, w, d, gf, gd, gft, scratch):
                fallback = True
        i = j
    for k in range(4):
        pos[order[k]] = k + 1
    return fallback


@njit
def rank_teams(w, d, gf, rule, pos, scratch):
    """Final position (1..4) per team; returns True if the pot-order fallback decided a pair."""
    pts = scratch[_PTS]
    gd = scratch[_GD]
    gft = scratch[_GFT]
    for i in range(4):
        p = 0
        f = 0
        ga = 0
        for j in range(4):
            p += 3 * w[i, j] + d[i, j]
            f += gf[i, j]
            ga += gf[j, i]
        pts[i] = p
        gft[i] = f
        gd[i] = f - ga
    return _rank_core(w, d, gf, pts, gd, gft, rule, pos, scratch)


@njit
def _apply_match(w, d, gf, i, j, hg, ag, sign):
    gf[i, j] += sign * hg
    gf[j, i] += sign * ag
    if hg > ag:
        w[i, j] += sign
    elif hg == ag:
        d[i, j] += sign
        d[j, i] += sign
    else:
        w[j, i] += sign


@njit
def fixedness_after_md5(w, d, gf, i1, j1, i2, j2, rule, sentinel, pos, ref, fixed, scratch):
    """Scenario test for a 10-match state with remaining matches (i1,j1), (i2,j2).

    Plays the four extreme completions (each remaining match ends
    sentinel-0 or 0-sentinel) and marks a team fixed at position p iff it
    ranks p in all four.  ``fixed[t]`` is that position, or 0 when open.
    Returns True if any scenario ranking hit the pot-order fallback.
    """
    fallback_any = False
    for sc in range(4):
        h1 = sentinel if sc & 1 == 0 else 0
        a1 = 0 if sc & 1 == 0 else sentinel
        h2 = sentinel if sc & 2 == 0 else 0
        a2 = 0 if sc & 2 == 0 else sentinel
        _apply_match(w, d, gf, i1, j1, h1, a1, 1)
        _apply_match(w, d, gf, i2, j2, h2, a2, 1)
        if rank_teams(w, d, gf, rule, pos, scratch):
            fallback_any = True
        _apply_match(w, d, gf, i1, j1, h1, a1, -1)
        _apply_match(w, d, gf, i2, j2, h2, a2, -1)
        if sc == 0:
            for t in range(4):
                ref[t] = pos[t]
        else:
            for t in range(4):
                if pos[t] != ref[t]:
                    ref[t] = 0
    for t in range(4):
        fixed[t] = ref[t]
    return fallback_any


@njit
def _probe_extremes(w, d, gf, rem_i, rem_j, lo, hi, rule, ref, scratch):
    # evaluate the 2^m completions where every match ends hi-lo or lo-hi;
    # these all lie inside the full grid enumeration, so any movement they
    # reveal is final.  ref[t] = position seen so far, 0 once t has moved.
    m = rem_i.shape[0]
    pos = np.empty(4, np.int64)
    for sc in range(1 << m):
        for k in range(m):
            if sc & (1 << k):
                _apply_match(w, d, gf, rem_i[k], rem_j[k], lo, hi, 1)
            else:
                _apply_match(w, d, gf, rem_i[k], rem_j[k], hi, lo, 1)
        rank_teams(w, d, gf, rule, pos, scratch)
        for k in range(m):
            if sc & (1 << k):
                _apply_match(w, d, gf, rem_i[k], rem_j[k], lo, hi, -1)
            else:
                _apply_match(w, d, gf, rem_i[k], rem_j[k], hi, lo, -1)
        if sc == 0:
            for t in range(4):
                ref[t] = pos[t]
        else:
            for t in range(4):
                if pos[t] != ref[t]:
                    ref[t] = 0


@njit
def _apply_match_full(w, d, gf, pts, gd, gft, i, j, hg, ag, sign):
    # aggregate update including the per-team ranking keys
    _apply_match(w, d, gf, i, j, hg, ag, sign)
    gft[i] += sign * hg
    gft[j] += sign * ag
    gd[i] += sign * (hg - ag)
    gd[j] += sign * (ag - hg)
    if hg > ag:
        pts[i] += sign * 3
    elif hg == ag:
        pts[i] += sign
        pts[j] += sign
    else:
        pts[j] += sign * 3


@njit
def oracle_fixedness(w, d, gf, rem_i, rem_j, grid, rule):
    """Enumerate every grid assignment of the remaining matches.

    Returns per team its position when identical across all assignments,
    else 0.  A probe over the all-extreme completions runs first: if it
    already shows every team movable the full sweep cannot conclude
    otherwise, so enumeration stops early.  Teams the probe leaves as
    candidates are verified against the entire grid, walked with an
    odometer so that only matches whose goals changed are re-applied.
    """
    m = rem_i.shape[0]
    g = grid.shape[0]
    scratch = np.zeros((10, 4), np.int64)
    ref = np.empty(4, np.int64)
    _probe_extremes(w, d, gf, rem_i, rem_j, grid[0], grid[g - 1], rule, ref, scratch)
    all_open = True
    for t in range(4):
        if ref[t] != 0:
            all_open = False
    if all_open or m == 0:
        return ref.copy()

    pts = np.zeros(4, np.int64)
    gd = np.zeros(4, np.int64)
    gft = np.zeros(4, np.int64)
    for i in range(4):
        p = 0
        f = 0
        ga = 0
        for j in range(4):
            p += 3 * w[i, j] + d[i, j]
            f += gf[i, j]
            ga += gf[j, i]
        pts[i] = p
        gft[i] = f
        gd[i] = f - ga

    digits = np.zeros(2 * m, np.int64)
    pos = np.empty(4, np.int64)
    total = 1
    for _ in range(2 * m):
        total *= g
    for k in range(m):
        _apply_match_full(w, d, gf, pts, gd, gft, rem_i[k], rem_j[k],
                          grid[0], grid[0], 1)

    for _combo in range(total):
        _rank_core(w, d, gf, pts, gd, gft, rule, pos, scratch)
        all_open = True
        for t in range(4):
            if pos[t] != ref[t]:
                ref[t] = 0
            if ref[t] != 0:
                all_open = False
        if all_open:
            break
        # odometer increment, re-applying only the matches that change
        k = 0
        removed = -1
        advanced = False
        while k < 2 * m:
            mi = k >> 1
            if removed != mi:
                _apply_match_full(w, d, gf, pts, gd, gft, rem_i[mi], rem_j[mi],
                                  grid[digits[2 * mi]], grid[digits[2 * mi + 1]], -1)
                removed = mi
            digits[k] += 1
            if digits[k] < g:
                _apply_match_full(w, d, gf, pts, gd, gft, rem_i[mi], rem_j[mi],
                                  grid[digits[2 * mi]], grid[digits[2 * mi + 1]], 1)
                removed = -1
                advanced = True
                break
            digits[k] = 0
            if k & 1 == 1:
                _apply_match_full(w, d, gf, pts, gd, gft, rem_i[mi], rem_j[mi],
                                  grid[0], grid[0], 1)
                removed = -1
            k += 1
        if not advanced:
            break  # every assignment visited

    # restore the caller's aggregates
    for k in range(m):
        _apply_match_full(w, d, gf, pts, gd, gft, rem_i[k], rem_j[k],
                          grid[digits[2 * k]], grid[digits[2 * k + 1]], -1)
    return ref.copy()


@njit
def poisson_inverse_kernel(lam, u):
    p = math.exp(-lam)
    cdf = p
    k = 0
    while u > cdf and k < 99:
        k += 1
        p *= lam / k
        cdf += p
    return k


@njit
def sample_pair_scores(uniforms, lam_h, lam_a, lam_c, out_h, out_a):
    """Scores for the 12 ordered pairs of one run from its uniform slice."""
    stride = 3 if lam_c > 0.0 else 2
    for p in range(12):
        h = poisson_inverse_kernel(lam_h[p], uniforms[stride * p])
        a = poisson_inverse_kernel(lam_a[p], uniforms[stride * p + 1])
        if stride == 3:
            shared = poisson_inverse_kernel(lam_c, uniforms[stride * p + 2])
            h = min(h + shared, 99)
            a = min(a + shared, 99)
        out_h[p] = h
        out_a[p] = a


@njit
def md4_fixed_teams(pts, rule, double_partner, order):
    """Positions decidable from an 8-match state: the winner and the last.

    ``pts`` are the four points totals, ``double_partner[t]`` the team t
    has already met twice.  Returns (winner_team, last_team), -1 if open.
    The winner needs a 7-point lead over the second team, or under the
    head-to-head rule a 6-point lead plus a 7-point lead over the third
    when both mutual matches with the runner-up are played; the last
    place is symmetric.
    """
    for i in range(4):
        order[i] = i
    _sort_desc2(order, 0, 4, pts, pts)
    t0, t1, t2, t3 = order[0], order[1], order[2], order[3]

    fixed1 = -1
    if pts[t0] > pts[t1]:
        lead2 = pts[t0] - pts[t1]
        if lead2 >= 7:
            fixed1 = t0
        elif (rule == RULE_HEAD_TO_HEAD and lead2 == 6 and pts[t0] - pts[t2] >= 7
              and double_partner[t0] == t1):
            fixed1 = t0

    fixed4 = -1
    if pts[t3] < pts[t2]:
        gap3 = pts[t2] - pts[t3]
        if gap3 >= 7:
            fixed4 = t3
        elif (rule == RULE_HEAD_TO_HEAD and gap3 == 6 and pts[t1] - pts[t3] >= 7
              and double_partner[t3] == t2):
            fixed4 = t3

    return fixed1, fixed4


@njit
def simulate_chunk(uniforms, lam_h, lam_a, lam_c, pair_home, pair_away,
                   md5_pairs, md6_pairs, played8, double_partner, rule, sentinel,
                   counts):
    """Classify the last two matchdays of every schedule for a chunk of runs.

    One run samples all 12 ordered-pair results once; every schedule
    reuses them (common random numbers).  ``counts`` is int64 of shape
    (num_schedules, 8) accumulating, per schedule:

     0: runs with >= 1 weakly stakeless matchday-5 match
    1: weakly stakeless matchday-5 matches
    2: strongly stakeless matchday-5 matches (never, tracked as guard)
    3: runs with >= 1 weakly stakeless matchday-6 match
    4: weakly stakeless matchday-6 matches
    5: runs with >= 1 strongly stakeless matchday-6 match
    6: strongly stakeless matchday-6 matches
    7: runs where a scenario ranking needed the pot-order fallback
    """
    n = uniforms.shape[0]
    n_sched = md5_pairs.shape[0]
    h = np.empty(12, np.int64)
    a = np.empty(12, np.int64)
    w = np.zeros((4, 4), np.int64)
    d = np.zeros((4, 4), np.int64)
    gf = np.zeros((4, 4), np.int64)
    pts = np.empty(4, np.int64)
    pos = np.empty(4, np.int64)
    ref = np.empty(4, np.int64)
    fixed6 = np.empty(4, np.int64)
    scratch = np.zeros((10, 4), np.int64)

    for r in range(n):
        sample_pair_scores(uniforms[r], lam_h, lam_a, lam_c, h, a)
        for s in range(n_sched):
            # fixedness after matchday 4 needs points and pair counts only
            for t in range(4):
                pts[t] = 0
            for k in range(8):
                p = played8[s, k]
                if h[p] > a[p]:
                    pts[pair_home[p]] += 3
                elif h[p] == a[p]:
                    pts[pair_home[p]] += 1
                    pts[pair_away[p]] += 1
                else:
                    pts[pair_away[p]] += 3
            fixed1, fixed4 = md4_fixed_teams(pts, rule, double_partner[s],
                                             scratch[_ORDER])

            weak5 = 0
            strong5 = 0
            for k in range(2):
                p = md5_pairs[s, k]
                fi = pair_home[p] == fixed1 or pair_home[p] == fixed4
                fj = pair_away[p] == fixed1 or pair_away[p] == fixed4
                if fi and fj:
                    strong5 += 1
                elif fi or fj:
                    weak5 += 1
            if weak5 > 0:
                counts[s, 0] += 1
            counts[s, 1] += weak5
            counts[s, 2] += strong5

            # fixedness after matchday 5 via the four extreme completions
            for x in range(4):
                for y in range(4):
                    w[x, y] = 0
                    d[x, y] = 0
                    gf[x, y] = 0
            for k in range(8):
                p = played8[s, k]
                _apply_match(w, d, gf, pair_home[p], pair_away[p], h[p], a[p], 1)
            for k in range(2):
                p = md5_pairs[s, k]
                _apply_match(w, d, gf, pair_home[p], pair_away[p], h[p], a[p], 1)
            p1 = md6_pairs[s, 0]
            p2 = md6_pairs[s, 1]
            fb = fixedness_after_md5(w, d, gf, pair_home[p1], pair_away[p1],
                                     pair_home[p2], pair_away[p2], rule, sentinel,
                                     pos, ref, fixed6, scratch)

            weak6 = 0
            strong6 = 0
            for k in range(2):
                p = md6_pairs[s, k]
                fi = fixed6[pair_home[p]] > 0
                fj = fixed6[pair_away[p]] > 0
                if fi and fj:
                    strong6 += 1
                elif fi or fj:
                    weak6 += 1
            if weak6 > 0:
                counts[s, 3] += 1
            counts[s, 4] += weak6
            if strong6 > 0:
                counts[s, 5] += 1
            counts[s, 6] += strong6
            if fb:
                counts[s, 7] += 1
