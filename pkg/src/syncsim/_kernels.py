"""Compiled inner loops shared by the string, decoding and tree modules.

All kernels take int64 numpy arrays and return plain integers or arrays so the
pure-Python callers stay exact (no floats cross this boundary).
"""

import numpy as np
from numba import njit

INF = np.int64(1) << np.int64(60)


@njit(cache=True)
def lcs_length(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]


@njit(cache=True)
def first_sync_violation(s, num, den):
    """Lexicographically first 0-based (i, j, k) with ED(s[i:j], s[j:k]) <= (1 - num/den)(k - i).

    Returns (-1, -1, -1) when every triple satisfies the strict inequality.
    """
    n = s.shape[0]
    slack = den - num
    for i in range(n):
        for j in range(i + 1, n):
            lx = j - i
            ly = n - j
            # rows over x = s[i:j], columns over y = s[j:n]; last row gives LCS(x, y[:t])
            prev = np.zeros(ly + 1, dtype=np.int64)
            cur = np.zeros(ly + 1, dtype=np.int64)
            for a in range(lx):
                xa = s[i + a]
                cur[0] = 0
                for t in range(1, ly + 1):
                    if xa == s[j + t - 1]:
                        cur[t] = prev[t - 1] + 1
                    elif prev[t] >= cur[t - 1]:
                        cur[t] = prev[t]
                    else:
                        cur[t] = cur[t - 1]
                for t in range(ly + 1):
                    prev[t] = cur[t]
            for t in range(1, ly + 1):
                ed = lx + t - 2 * prev[t]
                if den * ed <= slack * (lx + t):
                    return i, j, j + t
    return -1, -1, -1


@njit(cache=True)
def suffix_table(c, ct, num, den, strict):
    """Backward table for the suffix-density feasibility test at threshold num/den.

    Cell (i, j) holds the smallest achievable weighted suffix sum for matching
    c[i:] against ct[j:] such that every suffix of that partial matching has
    star density at most the threshold (strictly below it when ``strict``).
    Weights, scaled by ``den``: match -num, unmatched c symbol den-num,
    unmatched ct symbol (star in the c row) den. INF marks infeasible cells.
    """
    n, m = c.shape[0], ct.shape[0]
    limit = -1 if strict else 0
    g = np.full((n + 1, m + 1), INF, dtype=np.int64)
    g[n, m] = 0
    for i in range(n, -1, -1):
        for j in range(m, -1, -1):
            if i == n and j == m:
                continue
            best = INF
            if i < n:
                v = g[i + 1, j]
                if v < INF and v + den - num < best:
                    best = v + den - num
            if j < m:
                v = g[i, j + 1]
                if v < INF and v + den < best:
                    best = v + den
            if i < n and j < m and c[i] == ct[j]:
                v = g[i + 1, j + 1]
                if v < INF and v - num < best:
                    best = v - num
            if best > limit:
                best = INF
            g[i, j] = best
    return g


@njit(cache=True)
def feasible_prefixes(received, s, num, den, candidates, strict):
    """For each candidate prefix length i, test SD(received, s[:i]) <= num/den.

    Returns a 0/1 array aligned with ``candidates``.
    """
    out = np.zeros(candidates.shape[0], dtype=np.int64)
    for idx in range(candidates.shape[0]):
        i = candidates[idx]
        g = suffix_table(received, s[:i], num, den, strict)
        if g[0, 0] < INF:
            out[idx] = 1
    return out
