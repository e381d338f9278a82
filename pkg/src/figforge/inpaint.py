"""Exemplar-based region filling (Criminisi, Perez and Toyama, 2004).

The fill front is processed one patch at a time. The front pixel with the
highest priority ``confidence * data`` is selected, where the data term
measures how well the strongest nearby isophote lines up with the front
normal. Its patch is completed from the fully-known source patch with the
lowest SSD over the already-known pixels, and the filled pixels inherit the
selected pixel's confidence. When the hole leaves no fully-known patch of
full size, the patch shrinks around the selected pixel until one exists.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage, signal

from .errors import ForgeryError
from .raster import as_raster, luminance

_ALPHA = 255.0
_CROSS = ndimage.generate_binary_structure(2, 1)
_SQUARE = np.ones((3, 3), bool)


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Sum over the (2r+1)^2 window centred on each pixel, clipped at the borders."""
    k = 2 * radius + 1
    return ndimage.uniform_filter(a.astype(np.float64), size=k, mode="constant") * (k * k)


def _priorities(gray, fill, conf, fys, fxs, radius):
    area = _box_sum(np.ones_like(conf), radius)
    c_term = (_box_sum(conf, radius) / area)[fys, fxs]

    known_grad = ~ndimage.binary_dilation(fill, structure=_CROSS)
    gy, gx = np.gradient(gray)
    gy = np.where(known_grad, gy, 0.0)
    gx = np.where(known_grad, gx, 0.0)
    mag = gx * gx + gy * gy

    ny, nx = np.gradient(fill.astype(np.float64))
    H, W = fill.shape
    d_term = np.empty(fys.size)
    for i, (y, x) in enumerate(zip(fys, fxs)):
        y0, y1 = max(y - radius, 0), min(y + radius + 1, H)
        x0, x1 = max(x - radius, 0), min(x + radius + 1, W)
        win = mag[y0:y1, x0:x1]
        j = np.unravel_index(int(np.argmax(win)), win.shape)
        ix, iy = -gy[y0:y1, x0:x1][j], gx[y0:y1, x0:x1][j]  # isophote = gradient rotated 90 degrees
        n = np.hypot(nx[y, x], ny[y, x])
        d_term[i] = abs(ix * nx[y, x] + iy * ny[y, x]) / (n * _ALPHA) if n > 0 else 0.0
    return c_term, d_term


def _best_source(work, fill, y0, y1, x0, x1):
    ph, pw = y1 - y0, x1 - x0
    H, W, C = work.shape
    known = ~fill[y0:y1, x0:x1]
    # source patches must be entirely known
    sat = np.pad(fill.astype(np.int64), ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    occupied = (sat[ph:, pw:] - sat[:-ph, pw:] - sat[ph:, :-pw] + sat[:-ph, :-pw]) > 0
    if occupied.all():
        return None
    m = known.astype(np.float64)
    target = work[y0:y1, x0:x1]
    ssd = np.zeros((H - ph + 1, W - pw + 1))
    for c in range(C):
        ch = work[:, :, c]
        t = target[:, :, c] * m
        ssd += signal.correlate(ch * ch, m, mode="valid", method="direct")
        ssd -= 2.0 * signal.correlate(ch, t, mode="valid", method="direct")
        ssd += float((t * target[:, :, c]).sum())
    ssd[occupied] = np.inf
    best = ssd.min()
    tied = ssd <= best + 1e-6 * (1.0 + abs(best))
    sy, sx = np.nonzero(tied)
    d2 = (sy - y0) ** 2 + (sx - x0) ** 2
    i = int(np.argmin(d2))
    return int(sy[i]), int(sx[i])


def criminisi_inpaint(image, target, patch_radius: int = 4) -> np.ndarray:
    """Fill the ``target`` pixels of ``image``; all other pixels are returned unchanged."""
    img = as_raster(image).copy()
    fill = np.asarray(target, dtype=bool).copy()
    if fill.shape != img.shape[:2]:
        raise ValueError("target mask out of bounds")
    if fill.all():
        raise ForgeryError("target covers the whole image")
    if patch_radius < 1:
        raise ValueError("patch_radius must be >= 1")
    r = patch_radius
    H, W = fill.shape
    work = img.astype(np.float64)
    conf = (~fill).astype(np.float64)

    while fill.any():
        front = fill & ndimage.binary_dilation(~fill, structure=_SQUARE)
        fys, fxs = np.nonzero(front)
        c_term, d_term = _priorities(luminance(img), fill, conf, fys, fxs, r)
        prio = c_term * d_term
        i = int(np.argmax(prio)) if prio.max() > 0 else int(np.argmax(c_term))
        py, px = int(fys[i]), int(fxs[i])

        # shrink the patch when no fully-known source of the full size exists
        for rr in range(r, -1, -1):
            y0, y1 = max(py - rr, 0), min(py + rr + 1, H)
            x0, x1 = max(px - rr, 0), min(px + rr + 1, W)
            src = _best_source(work, fill, y0, y1, x0, x1)
            if src is not None:
                break
        todo = fill[y0:y1, x0:x1].copy()
        if src is None or not todo.any():
            raise ForgeryError("inpaint stalled")
        sy, sx = src
        src_pix = img[sy:sy + (y1 - y0), sx:sx + (x1 - x0)]
        img[y0:y1, x0:x1][todo] = src_pix[todo]
        work[y0:y1, x0:x1][todo] = src_pix[todo]
        conf[y0:y1, x0:x1][todo] = c_term[i]
        fill[y0:y1, x0:x1][todo] = False
    return img
