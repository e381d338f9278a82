"""Deterministic synthetic sources and templates shared by the tests."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from figforge import raster


def textured_source(seed: int, size=(160, 128), n_objects: int = 3):
    """Noisy two-gradient background with elliptical objects; returns (image, labels)."""
    rng = np.random.default_rng(seed)
    w, h = size
    yy, xx = np.mgrid[0:h, 0:w]
    base = rng.integers(60, 180, 3)
    img = base + 0.3 * xx[..., None] * rng.uniform(-1, 1, 3) + 0.3 * yy[..., None] * rng.uniform(-1, 1, 3)
    img = img + rng.normal(0, 6, (h, w, 3))
    labels = np.zeros((h, w), np.int32)
    placed = 0
    for _ in range(50):
        if placed == n_objects:
            break
        ry, rx = rng.integers(10, 18, 2)
        cy, cx = rng.integers(ry + 2, h - ry - 2), rng.integers(rx + 2, w - rx - 2)
        ell = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1
        if raster.dilate(labels > 0, 3)[ell].any():
            continue
        placed += 1
        labels[ell] = placed
        img[ell] = rng.integers(0, 256, 3) + rng.normal(0, 4, (int(ell.sum()), 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), labels


TEMPLATES = [
    {"canvas": [400, 330], "panels": [
        {"rect": [10, 10, 190, 154], "kind": "photo"}, {"rect": [210, 10, 390, 154], "kind": "photo"},
        {"rect": [10, 176, 190, 320], "kind": "photo"}, {"rect": [210, 176, 390, 320], "kind": "photo"}]},
    {"canvas": [600, 200], "panels": [
        {"rect": [10, 20, 190, 164], "kind": "photo"}, {"rect": [210, 20, 390, 164], "kind": "photo"},
        {"rect": [410, 20, 590, 164], "kind": "graph"}]},
    {"canvas": [420, 400], "panels": [
        {"rect": [10, 20, 210, 180], "kind": "photo"}, {"rect": [220, 20, 410, 180], "kind": "graph"},
        {"rect": [10, 200, 210, 360], "kind": "photo"}, {"rect": [230, 195, 390, 395], "kind": "photo"}]},
]


def write_corpus(root, n_sources: int = 20, seed: int = 0, unmasked: int = 0):
    """Write sources/, masks/ and templates/ under ``root``."""
    root = Path(root)
    (root / "sources").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(exist_ok=True)
    (root / "templates").mkdir(exist_ok=True)
    for i in range(n_sources):
        img, labels = textured_source(seed * 1000 + i)
        raster.write_raster(root / "sources" / f"src{i:02d}.png", img)
        if i >= unmasked:
            raster.write_label_map(root / "masks" / f"src{i:02d}.png", labels)
    for k, t in enumerate(TEMPLATES):
        (root / "templates" / f"t{k}.json").write_text(json.dumps(t))
    return root


def random_map_pair(rng, max_size: int = 64):
    """Random (gt, dm): up to 4 gt regions of 2-4 rectangles, up to 3 detected regions."""
    h, w = (int(v) for v in rng.integers(8, max_size + 1, 2))
    gt = np.zeros((h, w), np.int32)
    for gid in range(1, int(rng.integers(1, 5)) + 1):
        for _ in range(int(rng.integers(2, 5))):
            y0, x0 = rng.integers(0, h - 1), rng.integers(0, w - 1)
            y1, x1 = y0 + rng.integers(1, max(2, h // 4)), x0 + rng.integers(1, max(2, w // 4))
            gt[y0:y1, x0:x1] = gid
    dm = np.zeros((h, w), np.int32)
    if rng.random() < 0.5:
        # detections derived from the gt: random ID remap of a random subset
        remap = rng.integers(0, 4, int(gt.max()) + 1)
        remap[0] = 0
        keep = rng.random((h, w)) < rng.uniform(0.3, 1.0)
        dm = np.where(keep, remap[gt], 0).astype(np.int32)
    for did in range(1, int(rng.integers(0, 4)) + 1):
        for _ in range(int(rng.integers(1, 4))):
            y0, x0 = rng.integers(0, h - 1), rng.integers(0, w - 1)
            y1, x1 = y0 + rng.integers(1, max(2, h // 2)), x0 + rng.integers(1, max(2, w // 2))
            dm[y0:y1, x0:x1] = did
    return gt, dm


def small_source(seed: int, size=(64, 48), n_objects: int = 2):
    """Small textured source for sweeps: objects of radius 4-8."""
    rng = np.random.default_rng(seed)
    w, h = size
    yy, xx = np.mgrid[0:h, 0:w]
    img = rng.integers(40, 200, 3) + rng.normal(0, 10, (h, w, 3))
    labels = np.zeros((h, w), np.int32)
    placed = 0
    for _ in range(100):
        if placed == n_objects:
            break
        ry, rx = rng.integers(4, 9, 2)
        cy, cx = rng.integers(ry + 1, h - ry - 1), rng.integers(rx + 1, w - rx - 1)
        ell = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1
        if raster.dilate(labels > 0, 2)[ell].any():
            continue
        placed += 1
        labels[ell] = placed
        img[ell] = rng.integers(0, 256, 3) + rng.normal(0, 5, (int(ell.sum()), 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), labels
