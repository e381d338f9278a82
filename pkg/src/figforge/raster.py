"""Pixel-level primitives shared by every other module.

Rasters are ``uint8`` numpy arrays shaped ``(H, W, C)`` with ``C`` in {1, 3}.
Label maps are integer arrays shaped ``(H, W)`` holding region IDs in
``[0, 65535]``; 0 is background. Pixel sets are boolean masks shaped
``(H, W)``. Rectangles are half-open ``(x0, y0, x1, y1)``.
"""
from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

MAX_ID = 65535
DEFAULT_CONNECTIVITY = 8
DEFAULT_BINS = 32

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


def as_raster(image) -> np.ndarray:
    """Return ``image`` as a validated ``(H, W, C)`` uint8 array (no copy when possible)."""
    a = np.asarray(image)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ValueError(f"raster must be HxW, HxWx1 or HxWx3, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("raster must be at least 1x1")
    if a.dtype != np.uint8:
        raise ValueError(f"raster must be uint8, got {a.dtype}")
    return a


def as_label_map(labels) -> np.ndarray:
    a = np.asarray(labels)
    if a.ndim != 2:
        raise ValueError(f"label map must be 2-D, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.integer) and a.dtype != np.bool_:
        raise ValueError(f"label map must be integer, got {a.dtype}")
    a = a.astype(np.int32, copy=False)
    if a.size and (a.min() < 0 or a.max() > MAX_ID):
        raise ValueError("label IDs must lie in [0, 65535]")
    return a


def to_rgb(image) -> np.ndarray:
    img = as_raster(image)
    return np.repeat(img, 3, axis=2) if img.shape[2] == 1 else img


def luminance(image) -> np.ndarray:
    img = as_raster(image).astype(np.float64)
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114


def bbox_of(mask) -> tuple[int, int, int, int]:
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise ValueError("empty region")
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def dilate(mask, radius: int) -> np.ndarray:
    """Square (Chebyshev) dilation by ``radius`` pixels."""
    mask = np.asarray(mask, dtype=bool)
    if radius <= 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=np.ones((2 * radius + 1, 2 * radius + 1), bool))


# ---------------------------------------------------------------------------
# connected components


@dataclass(frozen=True, eq=False)
class Component:
    region_id: int
    ys: np.ndarray
    xs: np.ndarray

    @property
    def area(self) -> int:
        return int(self.ys.size)

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        return int(self.xs.min()), int(self.ys.min()), int(self.xs.max()) + 1, int(self.ys.max()) + 1

    @property
    def pixels(self) -> frozenset[tuple[int, int]]:
        return frozenset(zip(self.xs.tolist(), self.ys.tolist()))

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.ys, self.xs] = True
        return m


def label_components(labels, connectivity: int = DEFAULT_CONNECTIVITY) -> tuple[np.ndarray, np.ndarray]:
    """Label every connected component of equal nonzero IDs.

    Returns ``(comp_map, comp_region)`` where ``comp_map`` numbers components
    1..K (0 = background) and ``comp_region[k]`` is the region ID of
    component ``k`` (``comp_region[0] == 0``). Components are numbered by
    ascending region ID, then by their first pixel in row-major order.
    Pixels with different IDs never merge.
    """
    labels = as_label_map(labels)
    if connectivity not in _STRUCTURES:
        raise ValueError("connectivity must be 4 or 8")
    structure = _STRUCTURES[connectivity]
    comp_map = np.zeros(labels.shape, dtype=np.int32)
    regions = [0]
    offset = 0
    for rid in np.unique(labels):
        if rid == 0:
            continue
        lab, n = ndimage.label(labels == rid, structure=structure)
        flat = lab.ravel()
        present, first = np.unique(flat, return_index=True)
        keep = present > 0
        order = present[keep][np.argsort(first[keep], kind="stable")]
        remap = np.zeros(n + 1, dtype=np.int32)
        remap[order] = np.arange(offset + 1, offset + n + 1, dtype=np.int32)
        sel = lab > 0
        comp_map[sel] = remap[lab[sel]]
        regions.extend([int(rid)] * n)
        offset += n
    return comp_map, np.asarray(regions, dtype=np.int64)


def connected_components(labels, connectivity: int = DEFAULT_CONNECTIVITY) -> list[Component]:
    comp_map, comp_region = label_components(labels, connectivity)
    out = []
    for k, sl in enumerate(ndimage.find_objects(comp_map), start=1):
        if sl is None:
            continue
        ys, xs = np.nonzero(comp_map[sl] == k)
        out.append(Component(int(comp_region[k]), ys + sl[0].start, xs + sl[1].start))
    return out


def count_components(labels, connectivity: int = DEFAULT_CONNECTIVITY) -> dict[int, int]:
    """Number of connected components per positive region ID."""
    _, comp_region = label_components(labels, connectivity)
    ids, counts = np.unique(comp_region[1:], return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts)}


# ---------------------------------------------------------------------------
# histograms


@dataclass(frozen=True, eq=False)
class ColorHistogram:
    bins: int
    counts: np.ndarray  # (channels, bins), each row sums to 1

    @property
    def channels(self) -> int:
        return int(self.counts.shape[0])


def bin_indices(image, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Per-sample bin index over [0, 255]; same shape as the raster."""
    if bins < 1:
        raise ValueError("bins must be positive")
    return (as_raster(image).astype(np.int64) * bins) // 256


def color_histogram(image, region, bins: int = DEFAULT_BINS) -> ColorHistogram:
    img = as_raster(image)
    region = np.asarray(region, dtype=bool)
    if region.shape != img.shape[:2]:
        raise ValueError("region out of bounds")
    n = int(region.sum())
    if n == 0:
        raise ValueError("empty region")
    idx = bin_indices(img, bins)[region]
    counts = np.stack([np.bincount(idx[:, c], minlength=bins) for c in range(img.shape[2])])
    return ColorHistogram(bins, counts / n)


def histogram_distance(a: ColorHistogram, b: ColorHistogram) -> float:
    """L1 distance summed over channels."""
    if a.counts.shape != b.counts.shape:
        raise ValueError(f"histogram shape mismatch: {a.counts.shape} vs {b.counts.shape}")
    return float(np.abs(a.counts - b.counts).sum())


# ---------------------------------------------------------------------------
# geometric transforms

_KINDS = ("translation", "rotation", "flip", "scaling")


@dataclass(frozen=True)
class GeometricTransform:
    kind: str
    dx: int = 0
    dy: int = 0
    angle: float = 0.0
    flip_axis: str = "horizontal"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.flip_axis not in ("horizontal", "vertical"):
            raise ValueError(f"unknown flip axis {self.flip_axis!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @classmethod
    def translation(cls, dx: int, dy: int) -> GeometricTransform:
        return cls("translation", dx=int(dx), dy=int(dy))

    @classmethod
    def rotation(cls, angle: float) -> GeometricTransform:
        return cls("rotation", angle=float(angle))

    @classmethod
    def flip(cls, axis: str = "horizontal") -> GeometricTransform:
        return cls("flip", flip_axis=axis)

    @classmethod
    def scaling(cls, scale: float) -> GeometricTransform:
        return cls("scaling", scale=float(scale))

    @property
    def quarter_turns(self) -> int | None:
        q = self.angle / 90.0
        return int(round(q)) % 4 if abs(q - round(q)) < 1e-9 else None

    @property
    def is_lossless(self) -> bool:
        if self.kind == "rotation":
            return self.quarter_turns is not None
        return self.kind in ("translation", "flip")

    def inverse(self) -> GeometricTransform:
        if self.kind == "translation":
            return GeometricTransform.translation(-self.dx, -self.dy)
        if self.kind == "flip":
            return self
        if self.kind == "rotation":
            return GeometricTransform.rotation(-self.angle)
        return GeometricTransform.scaling(1.0 / self.scale)

    def to_dict(self) -> dict:
        if self.kind == "translation":
            return {"kind": "translation", "dx": self.dx, "dy": self.dy}
        if self.kind == "rotation":
            return {"kind": "rotation", "angle": self.angle}
        if self.kind == "flip":
            return {"kind": "flip", "flip_axis": self.flip_axis}
        return {"kind": "scaling", "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> GeometricTransform:
        return cls(**d)


def _to_pil(a: np.ndarray) -> Image.Image:
    return Image.fromarray(a[:, :, 0], "L") if a.shape[2] == 1 else Image.fromarray(a, "RGB")


def _from_pil(im: Image.Image, channels: int) -> np.ndarray:
    a = np.asarray(im, dtype=np.uint8)
    return a[:, :, None] if channels == 1 else a


def resize_raster(image, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize to ``size = (w, h)``."""
    img = as_raster(image)
    w, h = size
    if (w, h) == (img.shape[1], img.shape[0]):
        return img.copy()
    return _from_pil(_to_pil(img).resize((w, h), Image.BILINEAR), img.shape[2])


def resize_labels(labels, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour resize of a label map or mask to ``size = (w, h)``."""
    a = np.asarray(labels)
    w, h = size
    rows = np.minimum(((np.arange(h) + 0.5) * a.shape[0] / h).astype(np.int64), a.shape[0] - 1)
    cols = np.minimum(((np.arange(w) + 0.5) * a.shape[1] / w).astype(np.int64), a.shape[1] - 1)
    return a[rows[:, None], cols[None, :]]


def _centered(origin: int, old: int, new: int) -> int:
    # trunc keeps quarter-turn round trips position-exact for odd size differences
    return origin + int(math.trunc((old - new) / 2))


def transform_region(image, mask, t: GeometricTransform) -> tuple[np.ndarray, np.ndarray]:
    """Transform the masked region of ``image``.

    Returns ``(patch, patch_mask)`` in image coordinates: ``patch`` is a copy
    of ``image`` with the transformed bounding-box content written at its
    destination, and ``patch_mask`` marks the transformed region (clipped to
    the image). Flips, translations and quarter-turn rotations are
    bit-lossless; other rotations and scalings resample content bilinearly
    and the mask by nearest neighbour. Rotations and scalings keep the
    bounding-box centre fixed; positive angles turn counter-clockwise.
    """
    img = as_raster(image)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape[:2]:
        raise ValueError("mask out of bounds")
    x0, y0, x1, y1 = bbox_of(mask)
    crop = img[y0:y1, x0:x1]
    mcrop = mask[y0:y1, x0:x1]
    h, w = mcrop.shape
    ny, nx = y0, x0
    if t.kind == "translation":
        ny, nx = y0 + t.dy, x0 + t.dx
    elif t.kind == "flip":
        sl = (slice(None), slice(None, None, -1)) if t.flip_axis == "horizontal" else (slice(None, None, -1),)
        crop, mcrop = crop[sl], mcrop[sl]
    elif t.kind == "rotation":
        k = t.quarter_turns
        if k is not None:
            crop, mcrop = np.rot90(crop, k), np.rot90(mcrop, k)
        else:
            crop = _from_pil(_to_pil(np.ascontiguousarray(crop)).rotate(t.angle, Image.BILINEAR, expand=True), img.shape[2])
            m = Image.fromarray(mcrop.astype(np.uint8) * 255, "L").rotate(t.angle, Image.NEAREST, expand=True)
            mcrop = np.asarray(m) > 127
        ny, nx = _centered(y0, h, crop.shape[0]), _centered(x0, w, crop.shape[1])
    else:
        nh, nw = max(1, round(h * t.scale)), max(1, round(w * t.scale))
        crop = resize_raster(crop, (nw, nh))
        mcrop = resize_labels(mcrop, (nw, nh))
        ny, nx = _centered(y0, h, nh), _centered(x0, w, nw)

    H, W = mask.shape
    ch, cw = mcrop.shape
    dy0, dx0 = max(ny, 0), max(nx, 0)
    dy1, dx1 = min(ny + ch, H), min(nx + cw, W)
    patch = img.copy()
    patch_mask = np.zeros_like(mask)
    if dy1 <= dy0 or dx1 <= dx0:
        raise ValueError("out of bounds")
    src = (slice(dy0 - ny, dy1 - ny), slice(dx0 - nx, dx1 - nx))
    patch[dy0:dy1, dx0:dx1] = crop[src]
    patch_mask[dy0:dy1, dx0:dx1] = mcrop[src]
    if not patch_mask.any():
        raise ValueError("out of bounds")
    return patch, patch_mask


def apply_transforms(image, mask, transforms) -> tuple[np.ndarray, np.ndarray]:
    patch, patch_mask = as_raster(image), np.asarray(mask, dtype=bool)
    for t in transforms:
        patch, patch_mask = transform_region(patch, patch_mask, t)
    return patch, patch_mask


# ---------------------------------------------------------------------------
# blending


def feather_weights(mask, feather_width: int) -> np.ndarray:
    """Patch weight per pixel: 1 inside ``mask``, linear falloff with Euclidean
    distance outside it, reaching 0 at distance ``feather_width + 1``."""
    mask = np.asarray(mask, dtype=bool)
    if feather_width <= 0 or not mask.any():
        return mask.astype(np.float64)
    d = ndimage.distance_transform_edt(~mask)
    alpha = np.clip(1.0 - d / (feather_width + 1), 0.0, 1.0)
    alpha[mask] = 1.0
    return alpha


def feather_blend(base, patch, mask, feather_width: int) -> np.ndarray:
    base = as_raster(base)
    patch = as_raster(patch)
    mask = np.asarray(mask, dtype=bool)
    if base.shape != patch.shape or mask.shape != base.shape[:2]:
        raise ValueError("base, patch and mask must share dimensions")
    if feather_width < 0:
        raise ValueError("feather_width must be >= 0")
    alpha = feather_weights(mask, feather_width)[:, :, None]
    b = base.astype(np.float64)
    out = np.rint(b + alpha * (patch.astype(np.float64) - b))
    return np.clip(out, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# PNG I/O


def read_raster(path) -> np.ndarray:
    """Read an image as 3-channel uint8; grayscale and palette images are promoted."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I", "F"):
            a = np.asarray(im).astype(np.float64)
            im = Image.fromarray(np.clip(a / 257.0, 0, 255).astype(np.uint8), "L")
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def write_raster(path, image) -> None:
    _to_pil(np.ascontiguousarray(as_raster(image))).save(Path(path), format="PNG")


def read_label_map(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode == "P":
            im = im.convert("L")
        a = np.asarray(im)
    if a.ndim == 3:
        a = a[:, :, 0]
    return as_label_map(a)


def write_label_map(path, labels) -> None:
    a = as_label_map(labels)
    Image.fromarray(a.astype(np.uint16)).save(Path(path), format="PNG")


PREVIEW_BACKGROUND = (68, 1, 84)


def preview_color(region_id: int) -> tuple[int, int, int]:
    """Preview colour for an ID; 0 is dark purple, positives walk the hue circle."""
    if region_id == 0:
        return PREVIEW_BACKGROUND
    r, g, b = colorsys.hsv_to_rgb((0.13 + region_id * 0.618034) % 1.0, 0.85, 0.95)
    return round(r * 255), round(g * 255), round(b * 255)


def write_preview(path, labels) -> None:
    a = as_label_map(labels)
    ids, inv = np.unique(a, return_inverse=True)
    pal = np.array([preview_color(int(i)) for i in ids], dtype=np.uint8)
    Image.fromarray(pal[inv.reshape(a.shape)], "RGB").save(Path(path), format="PNG")
