"""Per-slot rate allocation over one, two, or three paths.

The slot problem: maximize the total sending rate x_1 + ... + x_P subject to
sum of x_p over paths crossing an arc <= residual bandwidth of that arc.
Arcs are aggregated by *pattern* (the subset of paths crossing them, encoded
as a bitmask; bit p set means path p+1 uses the arc), keeping only the
tightest cap per pattern. By LP duality the optimum equals the cheapest
fractional cover of the path set by patterns; for up to three paths the only
non-integral cover vertex is the half-weighted triangle of the three pairwise
patterns, so the optimum is a minimum over a small fixed list of formulas and
everything vectorizes over timeslots.

Splits are recovered constructively: the first path gets the least rate that
leaves a feasible completion for the others, which reduces the problem to the
two-path case.
"""

from __future__ import annotations

import numpy as np

RATE_EPS = 1e-12

# Minimal covers of {path1, path2, path3} by pattern bitmasks (bit0 = path 1).
# Each entry: (scale, bitmask tuple); the cover value is scale * sum of caps.
_K3_COVERS: tuple[tuple[float, tuple[int, ...]], ...] = (
    (1.0, (7,)),
    (1.0, (1, 6)),
    (1.0, (2, 5)),
    (1.0, (3, 4)),
    (1.0, (3, 5)),
    (1.0, (3, 6)),
    (1.0, (5, 6)),
    (1.0, (1, 2, 4)),
    (0.5, (3, 5, 6)),
)


def max_rate_k2(caps: np.ndarray) -> np.ndarray:
    """caps[1], caps[2]: path-exclusive mins; caps[3]: shared-arc min."""
    return np.minimum(caps[3], caps[1] + caps[2])


def split_k2(s_a: np.ndarray, s_b: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(x_a, x_b) with x_a + x_b = m given exclusive caps s_a, s_b.

    The first path is loaded as much as feasible: paths arrive sorted
    shortest-first, so among rate-optimal splits this one spends the least
    bandwidth. The joint cap is already folded into m by the caller.
    """
    x_a = np.minimum(s_a, m)
    x_b = m - x_a
    return x_a, x_b


def max_rate_k3(caps: np.ndarray) -> np.ndarray:
    m = None
    for scale, masks in _K3_COVERS:
        total = caps[masks[0]].copy()
        for bm in masks[1:]:
            total = total + caps[bm]
        if scale != 1.0:
            total = total * scale
        m = total if m is None else np.minimum(m, total)
    return m


def split_k3(caps: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Rates (3, L) achieving total m under the pattern caps, loading earlier
    (shorter) paths as heavily as feasibility allows.

    x1 may range over an interval that keeps paths 2 and 3 able to cover the
    remainder; the bounds come from the covers of {path2, path3}:
    {6}: x1 >= m - c6;  {2,4}: x1 >= m - c2 - c4;  {3,5}: x1 <= c3 + c5 - m.
    The two-path subproblem is then closed-form.
    """
    lower = np.maximum(m - caps[6], m - (caps[2] + caps[4]))
    u1 = np.minimum(np.minimum(caps[1], caps[3]), np.minimum(caps[5], caps[7]))
    upper = np.minimum(np.minimum(u1, m), caps[3] + caps[5] - m)
    x1 = np.clip(upper, 0.0, None)
    x1 = np.maximum(x1, np.clip(lower, 0.0, None))

    m2 = m - x1
    s_a = np.minimum(caps[2], caps[3] - x1)  # patterns with path2, without path3
    s_b = np.minimum(caps[4], caps[5] - x1)  # patterns with path3, without path2
    x2, x3 = split_k2(s_a, s_b, m2)
    return np.vstack([x1, x2, x3])


def max_rate_and_split(caps: np.ndarray, n_paths: int) -> tuple[np.ndarray, np.ndarray]:
    """Optimal total rate per slot and a feasible per-path split.

    caps: (2**n_paths, L) array of per-pattern residual minima, +inf where a
    pattern has no arcs. Supports n_paths in {1, 2, 3}.
    """
    if n_paths == 1:
        m = caps[1].copy()
        x = m[None, :].copy()
    elif n_paths == 2:
        m = max_rate_k2(caps)
        x_a, x_b = split_k2(caps[1], caps[2], m)
        x = np.vstack([x_a, x_b])
    elif n_paths == 3:
        m = max_rate_k3(caps)
        x = split_k3(caps, m)
    else:
        raise ValueError("closed form supports up to 3 paths")
    np.clip(x, 0.0, None, out=x)
    small = m < RATE_EPS
    if small.any():
        m = m.copy()
        m[small] = 0.0
        x[:, small] = 0.0
    return m, x


def lp_rate_and_split(usage: np.ndarray, residual: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-slot LP for more than three paths (rare; swept configs use K<=3).

    usage: (n_arcs, P) 0/1 incidence of paths on arcs; residual: (n_arcs, L).
    """
    from scipy.optimize import linprog

    n_arcs, n_paths = usage.shape
    length = residual.shape[1]
    m = np.zeros(length)
    x = np.zeros((n_paths, length))
    cost = -np.ones(n_paths)
    for j in range(length):
        b = residual[:, j]
        if b.max(initial=0.0) < RATE_EPS:
            continue
        res = linprog(cost, A_ub=usage, b_ub=b, bounds=(0, None), method="highs")
        if not res.success:
            raise RuntimeError(f"per-slot rate LP failed: {res.message}")
        xj = np.clip(res.x, 0.0, None)
        total = float(xj.sum())
        if total < RATE_EPS:
            continue
        m[j] = total
        x[:, j] = xj
    return m, x


def scalar_max_rate(caps, n_paths: int) -> float:
    """Scalar twin of max_rate_and_split's optimum (caps: list of 2**n floats)."""
    if n_paths == 1:
        return caps[1]
    if n_paths == 2:
        return min(caps[3], caps[1] + caps[2])
    best = caps[7]
    for a, b in ((1, 6), (2, 5), (3, 4), (3, 5), (3, 6), (5, 6)):
        v = caps[a] + caps[b]
        if v < best:
            best = v
    v = caps[1] + caps[2] + caps[4]
    if v < best:
        best = v
    v = 0.5 * (caps[3] + caps[5] + caps[6])
    if v < best:
        best = v
    return best


def scalar_split(caps, n_paths: int, m: float) -> tuple[float, ...]:
    """Scalar twin of the vectorized split; m must be the scalar_max_rate value."""
    if m <= RATE_EPS:
        return (0.0,) * n_paths
    if n_paths == 1:
        return (m,)
    if n_paths == 2:
        x_a = min(caps[1], m)
        return (x_a, m - x_a)
    upper = min(caps[1], caps[3], caps[5], caps[7], m, caps[3] + caps[5] - m)
    if upper < 0.0:
        upper = 0.0
    lower = max(m - caps[6], m - (caps[2] + caps[4]), 0.0)
    x1 = upper if upper >= lower else lower
    m2 = m - x1
    s_a = min(caps[2], caps[3] - x1)
    s_b = min(caps[4], caps[5] - x1)
    x2 = min(s_a, m2)
    if x2 < 0.0:
        x2 = 0.0
    return (x1, x2, m2 - x2)


def pattern_caps(residual: np.ndarray, row_groups: list[np.ndarray], n_paths: int) -> np.ndarray:
    """Per-pattern cap rows over a residual window.

    row_groups[bm] holds the residual-row indices whose arc pattern is bm
    (empty arrays for absent patterns).
    """
    length = residual.shape[1]
    caps = np.full((1 << n_paths, length), np.inf)
    for bm in range(1, 1 << n_paths):
        rows = row_groups[bm]
        if rows.size:
            caps[bm] = residual[rows].min(axis=0)
    return caps
