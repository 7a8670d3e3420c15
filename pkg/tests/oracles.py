"""Naive reference implementations used to cross-check the library's fast paths.

Everything here is deliberately written from the documented rules with plain
Python loops and none of the library's shared helpers, so agreement between
the two is meaningful.  Slow is fine; these run on small inputs.
"""

import math

import numpy as np


def naive_bin_counts(m, extents):
    """Bin-count rule, literal form: floor the proportional counts, then
    decrement the largest (ties to the lowest axis) until the product fits m."""
    ext = [float(e) for e in extents]
    d = len(ext)
    pos = [e for e in ext if e > 0.0]
    bins = [1] * d
    if pos:
        # same transcendental stack as the library (np.log/np.exp can differ
        # from libm in the last ulp, which matters under floor); the logic
        # around it stays independent
        g = float(np.exp(np.mean(np.log(np.array(pos)))))
        root = float(m) ** (1.0 / d)
        for i, e in enumerate(ext):
            if e > 0.0:
                bins[i] = max(1, int(math.floor(root * e / g)))

    def prod(bs):
        out = 1
        for b in bs:
            out *= b
        return out

    while prod(bins) > m:
        j = max(range(d), key=lambda i: (bins[i], -i))
        bins[j] -= 1
    return tuple(bins)


def naive_cell_index(x, lo, ext, bins):
    """Flat row-major cell index of one point, scalar arithmetic throughout."""
    flat = 0
    for i, n in enumerate(bins):
        flat *= n
        if n == 1 or ext[i] == 0.0:
            continue
        c = int(math.floor(n * (x[i] - lo[i]) / ext[i]))
        flat += min(max(c, 0), n - 1)
    return flat


def naive_kl(points):
    """Divergence from uniform of a coordinate array over its tight box."""
    pts = np.asarray(points, dtype=np.float64)
    m = pts.shape[0]
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    ext = hi - lo
    bins = naive_bin_counts(m, ext)
    n_cells = 1
    for b in bins:
        n_cells *= b
    counts = [0] * n_cells
    for row in pts:
        counts[naive_cell_index(row, lo, ext, bins)] += 1
    out = 0.0
    for c in counts:
        if c > 0:
            p = c / m
            out += p * math.log(p * n_cells)
    return max(out, 0.0)


def naive_thresholds(lo, hi, n_max):
    step = (hi - lo) / (n_max + 1)
    return [lo + i * step for i in range(1, n_max + 1)]


def naive_best_split(pts, rows, n_max):
    """Exhaustive re-evaluation of the split rule for one leaf.

    Largest-extent axis (ties to the lowest), every interior candidate, gain
    strictly better keeps the earlier (smaller) threshold.  Returns None when
    no candidate separates the points, else (axis, b, gain, lrows, rrows).
    """
    sub = pts[rows]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    ext = hi - lo
    if max(ext) <= 0.0:
        return None
    d = len(ext)
    axis = max(range(d), key=lambda i: (ext[i], -i))
    parent_kl = naive_kl(sub)
    total = len(rows)
    best = None
    for b in naive_thresholds(float(lo[axis]), float(hi[axis]), n_max):
        mask = sub[:, axis] <= b
        nl = int(mask.sum())
        nr = total - nl
        if nl == 0 or nr == 0:
            continue
        lkl = naive_kl(sub[mask])
        rkl = naive_kl(sub[~mask])
        gain = parent_kl - (nl / total) * lkl - (nr / total) * rkl
        if best is None or gain > best[2]:
            best = (axis, b, gain, rows[mask], rows[~mask])
    return best


def naive_decompose(points, n, n_max=5):
    """Greedy loop replay: split the highest count-times-divergence leaf.

    Returns (leaves, records); leaves are dicts with rows/lo/hi/unsplittable,
    records are (leaf_index, axis, threshold, gain) in execution order.
    """
    pts = np.asarray(points, dtype=np.float64)
    m = pts.shape[0]
    leaves = [
        {
            "rows": np.arange(m, dtype=np.int64),
            "kl": naive_kl(pts),
            "unsplittable": False,
        }
    ]
    records = []
    while len(leaves) < n:
        pick = -1
        pick_priority = -math.inf
        for i, leaf in enumerate(leaves):
            if leaf["unsplittable"]:
                continue
            priority = len(leaf["rows"]) * leaf["kl"]
            if priority > pick_priority:
                pick_priority = priority
                pick = i
        if pick < 0:
            break
        found = naive_best_split(pts, leaves[pick]["rows"], n_max)
        if found is None:
            leaves[pick]["unsplittable"] = True
            continue
        axis, b, gain, lrows, rrows = found
        records.append((pick, axis, b, gain))
        leaves[pick] = {"rows": lrows, "kl": naive_kl(pts[lrows]), "unsplittable": False}
        leaves.append({"rows": rrows, "kl": naive_kl(pts[rrows]), "unsplittable": False})
    for leaf in leaves:
        sub = pts[leaf["rows"]]
        leaf["lo"] = sub.min(axis=0)
        leaf["hi"] = sub.max(axis=0)
    return leaves, records


def random_cloud(rng, d=None, m=None, max_m=500, coincident_chance=0.0):
    """Fuzz-cloud generator: anisotropic scales, occasional degenerate axes
    or fully coincident points."""
    if d is None:
        d = int(rng.integers(1, 4))
    if m is None:
        m = int(rng.integers(1, max_m + 1))
    if coincident_chance and rng.random() < coincident_chance:
        return np.tile(rng.uniform(-1.0, 1.0, size=(1, d)), (m, 1))
    scales = 10.0 ** rng.uniform(-1.5, 1.5, size=d)
    pts = rng.uniform(0.0, 1.0, size=(m, d)) * scales
    if d > 1 and rng.random() < 0.15:
        pts[:, int(rng.integers(0, d))] = rng.uniform(-1.0, 1.0)
    if rng.random() < 0.3:
        # clustered rather than uniform: stack two gaussian blobs
        k = m // 2
        pts[:k] = rng.normal(0.2, 0.03, size=(k, d)) * scales
    return pts
