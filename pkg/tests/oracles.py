"""Slow, deliberately naive reference implementations used as test oracles.

Nothing here imports the package's algorithms: components are found by
breadth-first search over Python sets, histograms by counting tuples.
"""
from __future__ import annotations

from collections import deque

import numpy as np

NEIGHBOURS_8 = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def components(labels) -> dict[int, list[set[tuple[int, int]]]]:
    """Per-ID list of 8-connected pixel sets ``{(y, x)}``."""
    a = np.asarray(labels).tolist()
    h, w = len(a), len(a[0]) if a else 0
    seen = set()
    out: dict[int, list[set]] = {}
    for y in range(h):
        for x in range(w):
            v = a[y][x]
            if v == 0 or (y, x) in seen:
                continue
            comp = {(y, x)}
            seen.add((y, x))
            q = deque([(y, x)])
            while q:
                cy, cx = q.popleft()
                for dy, dx in NEIGHBOURS_8:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and (ny, nx) not in seen and a[ny][nx] == v:
                        seen.add((ny, nx))
                        comp.add((ny, nx))
                        q.append((ny, nx))
            out.setdefault(v, []).append(comp)
    return out


def regions(labels) -> dict[int, set[tuple[int, int]]]:
    a = np.asarray(labels)
    return {int(v): set(map(tuple, np.argwhere(a == v).tolist())) for v in np.unique(a) if v != 0}


def ctp(gt, dm) -> int:
    """Sum over detected regions of the best consistent intersection.

    A detected region is consistent with a gt region when it touches two or
    more of that region's components; the largest intersection wins and ties
    go to the smaller gt ID.
    """
    gt_comps = components(gt)
    total = 0
    for _, dpix in sorted(regions(dm).items()):
        best = None
        for gid in sorted(gt_comps):
            comps = gt_comps[gid]
            touched = [c for c in comps if c & dpix]
            if len(touched) < 2:
                continue
            inter = sum(len(c & dpix) for c in comps)
            if best is None or inter > best:
                best = inter
        total += best or 0
    return total


def tp(gt, dm) -> int:
    g, d = np.asarray(gt).tolist(), np.asarray(dm).tolist()
    return sum(1 for gr, dr in zip(g, d) for a, b in zip(gr, dr) if a and b)


def histogram(pixels, bins: int = 32) -> dict[tuple[int, int], int]:
    """Counts keyed by (channel, bin) for an iterable of colour tuples."""
    h: dict[tuple[int, int], int] = {}
    for px in pixels:
        for c, v in enumerate(px):
            k = (c, int(v) * bins // 256)
            h[k] = h.get(k, 0) + 1
    return h


def l1(a: dict, b: dict) -> int:
    return sum(abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b))


def exhaustive_background_search(image, objects, target_id: int, bins: int = 32, clearance: int = 1):
    """Minimum (area-scaled) L1 histogram distance over every placement of the
    target's shape lying entirely on background and at Chebyshev distance
    greater than ``clearance`` from the target, and all placements attaining it."""
    img = np.asarray(image)
    obj = np.asarray(objects)
    ys, xs = np.nonzero(obj == target_id)
    offs = list(zip((ys - ys.min()).tolist(), (xs - xs.min()).tolist()))
    hh, ww = ys.max() - ys.min() + 1, xs.max() - xs.min() + 1
    target = histogram(tuple(img[y, x]) for y, x in zip(ys.tolist(), xs.tolist()))
    H, W = obj.shape
    near = {(y + dy, x + dx) for y, x in zip(ys.tolist(), xs.tolist())
            for dy in range(-clearance, clearance + 1) for dx in range(-clearance, clearance + 1)}
    best, where = None, []
    for py in range(H - hh + 1):
        for px in range(W - ww + 1):
            cells = [(py + dy, px + dx) for dy, dx in offs]
            if any(obj[y, x] != 0 or (y, x) in near for y, x in cells):
                continue
            d = l1(histogram(tuple(img[y, x]) for y, x in cells), target)
            if best is None or d < best:
                best, where = d, [(px, py)]
            elif d == best:
                where.append((px, py))
    return best, where
