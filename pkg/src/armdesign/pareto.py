"""Two-objective Pareto utilities (both objectives minimized)."""

from __future__ import annotations

import numpy as np


def dominates(a, b) -> bool:
    return bool(np.all(np.asarray(a) <= np.asarray(b)) and np.any(np.asarray(a) < np.asarray(b)))


def nondominated_sort(points) -> list[list[int]]:
    """Split points into fronts of indices, best front first.

    Lexicographic sweep: every earlier point in (f1, f2) order has a smaller
    or equal f1, so a front dominates the point iff the front's lowest f2
    member does.  Those tails get worse with the front index, which allows a
    binary search.  Identical points share a front.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError("objective values must be finite")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    xs, ys = pts[:, 0].tolist(), pts[:, 1].tolist()
    fronts: list[list[int]] = []
    tails: list[int] = []  # index of the member with the lowest f2 in each front
    for i in order.tolist():
        f1, f2 = xs[i], ys[i]
        lo, hi = 0, len(tails)
        while lo < hi:
            mid = (lo + hi) // 2
            t = tails[mid]
            if ys[t] < f2 or (ys[t] == f2 and xs[t] < f1):
                lo = mid + 1
            else:
                hi = mid
        k = lo
        if k == len(fronts):
            fronts.append([])
            tails.append(i)
        fronts[k].append(int(i))
        tails[k] = i
    return [sorted(f) for f in fronts]


def front_ranks(points) -> np.ndarray:
    fronts = nondominated_sort(points)
    ranks = np.empty(sum(len(f) for f in fronts), dtype=int)
    for r, front in enumerate(fronts):
        ranks[front] = r
    return ranks


def hypervolume_2d(front, ref_point) -> float:
    """Area dominated by ``front`` and bounded by ``ref_point``."""
    pts = np.asarray(front, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref_point, dtype=float)
    for p in pts:
        if not dominates(p, ref):
            raise ValueError(f"point {p.tolist()} does not dominate reference {ref.tolist()}")
    if len(pts) == 0:
        return 0.0
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    area, best_f2 = 0.0, ref[1]
    for i, (f1, f2) in enumerate(pts):
        if f2 >= best_f2:
            continue
        # rectangle from this point to the next better-f2 point or the reference
        area += (ref[0] - f1) * (best_f2 - f2)
        best_f2 = f2
    return float(area)


def hv_contributions(front, ref_point) -> np.ndarray:
    """Exclusive hypervolume contribution of each point of a nondominated set."""
    pts = np.asarray(front, dtype=float).reshape(-1, 2)
    ref = np.asarray(ref_point, dtype=float)
    n = len(pts)
    out = np.zeros(n)
    if n == 0:
        return out
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    s = pts[order]
    right = np.append(s[1:, 0], ref[0])
    up = np.insert(s[:-1, 1], 0, ref[1])
    contrib = np.clip(right - s[:, 0], 0, None) * np.clip(up - s[:, 1], 0, None)
    out[order] = contrib
    return out


def reference_point(objectives, margin: float = 0.1) -> np.ndarray:
    """Worst observed value pushed out by ``margin`` of its magnitude.

    This is ``worst * 1.1`` for positive objectives and stays beyond the
    worst value for negative ones.
    """
    obj = np.asarray(objectives, dtype=float).reshape(-1, 2)
    worst = obj.max(axis=0)
    span = obj.max(axis=0) - obj.min(axis=0)
    pad = margin * np.abs(worst)
    pad = np.where(pad > 0, pad, np.where(span > 0, margin * span, 1.0))
    return worst + pad
