"""Forgery operations on simple figures.

Every operation returns the forged raster together with an ID label map in
which each manipulated object carries its own ID; duplicated content shares
the ID of its source. Randomness comes only from the ``rng_seed`` argument.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage, signal

from . import raster
from .errors import ForgeryError
from .inpaint import criminisi_inpaint
from .raster import GeometricTransform, as_label_map, as_raster

DEFAULT_STRIDE = 4
DEFAULT_FEATHER = 2
DEFAULT_PATCH_RADIUS = 4


@dataclass(frozen=True)
class RetouchSpec:
    """Post-processing applied to a pasted copy or an overlap crop."""

    kind: str  # "blur" or "contrast"
    sigma: float = 2.0
    gain: float = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if self.kind not in ("blur", "contrast"):
            raise ValueError(f"unknown retouch kind {self.kind!r}")
        if self.kind == "blur" and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.kind == "contrast" and not self.gain > 0:
            raise ValueError("gain must be positive")

    def to_dict(self) -> dict:
        if self.kind == "blur":
            return {"kind": "blur", "sigma": self.sigma}
        return {"kind": "contrast", "gain": self.gain, "bias": self.bias}


@dataclass
class ForgeryOutput:
    image: np.ndarray
    gt: np.ndarray
    modality: str
    params: dict
    seed: int
    gt_secondary: np.ndarray | None = None


@dataclass
class OverlapPair:
    image_a: np.ndarray
    image_b: np.ndarray
    gt_a: np.ndarray
    gt_b: np.ndarray
    crop_a: tuple[int, int, int, int]
    crop_b: tuple[int, int, int, int]
    post_processed: str | None
    params: dict = field(default_factory=dict)
    seed: int = 0


# ---------------------------------------------------------------------------
# helpers


def _object_mask(objects: np.ndarray, oid: int) -> np.ndarray:
    m = objects == oid
    if oid <= 0 or not m.any():
        raise ForgeryError(f"unknown object id {oid}")
    return m


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(x + 0.5), 0, 255).astype(np.uint8)


def masked_blur(image: np.ndarray, mask: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur whose support is restricted to ``mask`` (normalised convolution).

    Only mask pixels change, and they only mix with other mask pixels, so a
    constant-colour object keeps its colour.
    """
    img = as_raster(image)
    out = img.copy()
    if not mask.any():
        return out
    k = gaussian_kernel(sigma)
    r = k.size // 2
    x0, y0, x1, y1 = raster.bbox_of(mask)
    ys = slice(max(y0 - r, 0), min(y1 + r, img.shape[0]))
    xs = slice(max(x0 - r, 0), min(x1 + r, img.shape[1]))
    m = mask[ys, xs].astype(np.float64)
    den = ndimage.convolve1d(ndimage.convolve1d(m, k, axis=0, mode="constant"), k, axis=1, mode="constant")
    sub = out[ys, xs]
    inside = mask[ys, xs]
    for c in range(img.shape[2]):
        v = sub[:, :, c].astype(np.float64) * m
        num = ndimage.convolve1d(ndimage.convolve1d(v, k, axis=0, mode="constant"), k, axis=1, mode="constant")
        sub[:, :, c][inside] = _round_half_up(num[inside] / den[inside])
    return out


def adjust_contrast(image: np.ndarray, mask: np.ndarray, gain: float, bias: float) -> np.ndarray:
    out = as_raster(image).copy()
    out[mask] = _round_half_up(gain * out[mask].astype(np.float64) + bias)
    return out


def apply_retouch(image: np.ndarray, mask: np.ndarray, spec: RetouchSpec) -> np.ndarray:
    if spec.kind == "blur":
        return masked_blur(image, mask, spec.sigma)
    return adjust_contrast(image, mask, spec.gain, spec.bias)


def valid_placements(forbidden: np.ndarray, shape: np.ndarray, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Top-left positions (row-major order) where the ``shape`` mask avoids ``forbidden``.

    Only positions whose coordinates are multiples of ``stride`` are kept.
    """
    H, W = forbidden.shape
    h, w = shape.shape
    if h > H or w > W:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    hits = signal.fftconvolve(forbidden.astype(np.float64), shape[::-1, ::-1].astype(np.float64), mode="valid")
    ok = hits < 0.5
    grid = np.zeros_like(ok)
    grid[::stride, ::stride] = True
    return np.nonzero(ok & grid)


def _crop_to_bbox(mask: np.ndarray):
    x0, y0, x1, y1 = raster.bbox_of(mask)
    return (x0, y0, x1, y1), mask[y0:y1, x0:x1]


def _shifted(image: np.ndarray, oy: int, ox: int) -> np.ndarray:
    """``out[y, x] = image[y + oy, x + ox]`` where defined, else ``image[y, x]``."""
    out = image.copy()
    H, W = image.shape[:2]
    ys, ye = max(0, -oy), min(H, H - oy)
    xs, xe = max(0, -ox), min(W, W - ox)
    if ys < ye and xs < xe:
        out[ys:ye, xs:xe] = image[ys + oy:ye + oy, xs + ox:xe + ox]
    return out


# ---------------------------------------------------------------------------
# retouching


def _retouch(image, objects, target_ids, modality, params, seed, edit) -> ForgeryOutput:
    img = as_raster(image)
    objects = as_label_map(objects)
    if objects.shape != img.shape[:2]:
        raise ValueError("object map and image dimensions differ")
    if not list(target_ids):
        raise ForgeryError("no target objects")
    out = img.copy()
    gt = np.zeros(objects.shape, np.int32)
    for i, oid in enumerate(target_ids, start=1):
        m = _object_mask(objects, int(oid))
        out = edit(out, m)
        gt[m] = i
    params = {"target_ids": [int(t) for t in target_ids], **params}
    return ForgeryOutput(out, gt, modality, params, int(seed))


def retouch_blur(image, objects, target_ids, sigma: float, rng_seed: int = 0) -> ForgeryOutput:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return _retouch(image, objects, target_ids, "blurring", {"sigma": float(sigma)}, rng_seed,
                    lambda img, m: masked_blur(img, m, sigma))


def retouch_contrast(image, objects, target_ids, gain: float, bias: float, rng_seed: int = 0) -> ForgeryOutput:
    if not gain > 0:
        raise ValueError("gain must be positive")
    return _retouch(image, objects, target_ids, "contrast", {"gain": float(gain), "bias": float(bias)}, rng_seed,
                    lambda img, m: adjust_contrast(img, m, gain, bias))


# ---------------------------------------------------------------------------
# cleaning


def histogram_placement_distances(image, target: np.ndarray, ys, xs, shape: np.ndarray, bins: int) -> np.ndarray:
    """Integer L1 histogram distance (times the region area) for each placement.

    Dividing by the area gives ``histogram_distance`` exactly, but keeping it
    integral makes tie detection exact.
    """
    img = as_raster(image)
    idx = raster.bin_indices(img, bins)
    kernel = shape[::-1, ::-1].astype(np.float64)
    dist = np.zeros(ys.size, dtype=np.int64)
    tgt = idx[target]
    for c in range(img.shape[2]):
        tcount = np.bincount(tgt[:, c], minlength=bins)
        for b in range(bins):
            ind = idx[:, :, c] == b
            if not ind.any():
                dist += tcount[b]
                continue
            counts = np.rint(signal.fftconvolve(ind.astype(np.float64), kernel, mode="valid")).astype(np.int64)
            dist += np.abs(counts[ys, xs] - tcount[b])
    return dist


def clean_brute_force(image, objects, target_id: int, search_stride: int = DEFAULT_STRIDE,
                      feather_width: int = DEFAULT_FEATHER, rng_seed: int = 0,
                      bins: int = raster.DEFAULT_BINS) -> ForgeryOutput:
    """Cover an object with the background region whose colour histogram is closest."""
    img = as_raster(image)
    objects = as_label_map(objects)
    target = _object_mask(objects, int(target_id))
    (x0, y0, _, _), shape = _crop_to_bbox(target)
    # the background source stays clear of the feathered band, so the two
    # regions remain separate components and feathering never alters the source
    forbidden = (objects != 0) | raster.dilate(target, feather_width + 1)
    ys, xs = valid_placements(forbidden, shape, max(1, int(search_stride)))
    if ys.size == 0:
        raise ForgeryError("no background fits object shape")
    dist = histogram_placement_distances(img, target, ys, xs, shape, bins)
    best = int(np.argmin(dist))  # first minimum = smallest (y, x)
    cy, cx = int(ys[best]), int(xs[best])

    patch = _shifted(img, cy - y0, cx - x0)
    out = raster.feather_blend(img, patch, target, feather_width)
    gt = raster.dilate(target, feather_width).astype(np.int32)
    gt2 = np.zeros_like(gt)
    h, w = shape.shape
    gt2[cy:cy + h, cx:cx + w][shape] = 2
    params = {
        "target_id": int(target_id),
        "search_stride": int(search_stride),
        "feather_width": int(feather_width),
        "bins": int(bins),
        "background_xy": [cx, cy],
        "histogram_distance": float(dist[best]) / float(target.sum()),
    }
    return ForgeryOutput(out, gt, "brute_force", params, int(rng_seed), gt_secondary=gt2)


def clean_inpaint(image, objects, target_id: int, patch_radius: int = DEFAULT_PATCH_RADIUS,
                  rng_seed: int = 0) -> ForgeryOutput:
    img = as_raster(image)
    objects = as_label_map(objects)
    target = _object_mask(objects, int(target_id))
    if target.all():
        raise ForgeryError("target covers the whole image")
    out = criminisi_inpaint(img, target, patch_radius)
    params = {"target_id": int(target_id), "patch_radius": int(patch_radius)}
    return ForgeryOutput(out, target.astype(np.int32), "inpainting", params, int(rng_seed))


# ---------------------------------------------------------------------------
# duplication


def _check_transforms(transforms) -> None:
    if not transforms:
        raise ForgeryError("transforms must be nonempty")
    if all(t.kind == "scaling" for t in transforms):
        raise ForgeryError("scaling must be combined")


def _paste_copy(img, src, patch, pmask, post, modality, params, seed) -> ForgeryOutput:
    if not (src & ~pmask).any():
        raise ForgeryError("copy fully covers the source")
    out = img.copy()
    out[pmask] = patch[pmask]
    if post is not None:
        out = apply_retouch(out, pmask, post)
        params["post"] = post.to_dict()
    gt = np.zeros(src.shape, np.int32)
    gt[src | pmask] = 1
    if raster.count_components(gt).get(1, 0) < 2:
        raise ForgeryError("copy touches its source")
    return ForgeryOutput(out, gt, modality, params, int(seed))


def copy_move(image, objects, source_id: int, transforms, post: RetouchSpec | None = None,
              rng_seed: int = 0) -> ForgeryOutput:
    """Paste a transformed copy of one object into the same image.

    Source and copy share ID 1 in the ground truth; source pixels covered by
    the copy keep that ID.
    """
    img = as_raster(image)
    objects = as_label_map(objects)
    transforms = list(transforms)
    _check_transforms(transforms)
    src = _object_mask(objects, int(source_id))
    try:
        patch, pmask = raster.apply_transforms(img, src, transforms)
    except ValueError as exc:
        raise ForgeryError(str(exc)) from exc
    params = {"source_id": int(source_id), "transforms": [t.to_dict() for t in transforms]}
    return _paste_copy(img, src, patch, pmask, post, "copy_move", params, rng_seed)


def _background_for_copy(objects: np.ndarray, src: np.ndarray) -> np.ndarray:
    # copies may not land on, or touch, the source
    return (objects != 0) | raster.dilate(src, 1)


def copy_move_placed(image, objects, source_id: int, transforms, post: RetouchSpec | None = None,
                     rng_seed: int = 0, search_stride: int = DEFAULT_STRIDE) -> ForgeryOutput:
    """Apply ``transforms`` in place, then translate the result to a random background spot."""
    img = as_raster(image)
    objects = as_label_map(objects)
    src = _object_mask(objects, int(source_id))
    transforms = list(transforms)
    try:
        _, moved = raster.apply_transforms(img, src, transforms)
    except ValueError as exc:
        raise ForgeryError(str(exc)) from exc
    (mx0, my0, _, _), shape = _crop_to_bbox(moved)
    ys, xs = valid_placements(_background_for_copy(objects, src), shape, max(1, int(search_stride)))
    if ys.size == 0:
        raise ForgeryError("no background fits the transformed object")
    i = int(np.random.default_rng(rng_seed).integers(ys.size))
    shift = GeometricTransform.translation(int(xs[i]) - mx0, int(ys[i]) - my0)
    return copy_move(img, objects, source_id, transforms + [shift], post, rng_seed)


def copy_move_random(image, objects, rng_seed: int = 0, search_stride: int = DEFAULT_STRIDE) -> ForgeryOutput:
    """Copy a random object onto a background region of the same shape."""
    img = as_raster(image)
    objects = as_label_map(objects)
    ids = np.unique(objects[objects > 0])
    if ids.size == 0:
        raise ForgeryError("object map has no objects")
    rng = np.random.default_rng(rng_seed)
    for oid in rng.permutation(ids):
        src = objects == oid
        (x0, y0, _, _), shape = _crop_to_bbox(src)
        ys, xs = valid_placements(_background_for_copy(objects, src), shape, max(1, int(search_stride)))
        if ys.size == 0:
            continue
        i = int(rng.integers(ys.size))
        shift = GeometricTransform.translation(int(xs[i]) - x0, int(ys[i]) - y0)
        out = copy_move(img, objects, int(oid), [shift], None, rng_seed)
        out.params["submodality"] = "random"
        out.params["search_stride"] = int(search_stride)
        return out
    raise ForgeryError("no background placement for any object")


def overlap_split(image, crop_size: tuple[int, int], overlap_fraction: float,
                  post: RetouchSpec | None = None, rng_seed: int = 0) -> OverlapPair:
    """Cut two distinct crops that share ``overlap_fraction`` (+-0.05) of their area."""
    img = as_raster(image)
    H, W = img.shape[:2]
    w, h = (int(v) for v in crop_size)
    if not 0 < overlap_fraction < 1:
        raise ForgeryError("overlap_fraction must lie in (0, 1)")
    if w < 1 or h < 1 or w > W or h > H:
        raise ForgeryError("crops do not fit inside the image")
    ox = np.arange(-(W - w), W - w + 1)[None, :]
    oy = np.arange(-(H - h), H - h + 1)[:, None]
    frac = np.clip(w - np.abs(ox), 0, None) * np.clip(h - np.abs(oy), 0, None) / float(w * h)
    feasible = (np.abs(frac - overlap_fraction) <= 0.05) & (frac > 0) & ((ox != 0) | (oy != 0))
    cy, cx = np.nonzero(feasible)
    if cy.size == 0:
        raise ForgeryError("infeasible overlap geometry")
    rng = np.random.default_rng(rng_seed)
    i = int(rng.integers(cy.size))
    dx, dy = int(ox[0, cx[i]]), int(oy[cy[i], 0])
    ax = int(rng.integers(max(0, -dx), W - w - max(0, dx) + 1))
    ay = int(rng.integers(max(0, -dy), H - h - max(0, dy) + 1))
    bx, by = ax + dx, ay + dy
    crop_a = (ax, ay, ax + w, ay + h)
    crop_b = (bx, by, bx + w, by + h)
    ix0, iy0, ix1, iy1 = max(ax, bx), max(ay, by), min(ax, bx) + w, min(ay, by) + h

    image_a = img[ay:ay + h, ax:ax + w].copy()
    image_b = img[by:by + h, bx:bx + w].copy()
    gt_a = np.zeros((h, w), np.int32)
    gt_b = np.zeros((h, w), np.int32)
    gt_a[iy0 - ay:iy1 - ay, ix0 - ax:ix1 - ax] = 1
    gt_b[iy0 - by:iy1 - by, ix0 - bx:ix1 - bx] = 1
    params = {
        "crop_size": [w, h],
        "overlap_fraction": float(overlap_fraction),
        "actual_fraction": float(frac[cy[i], cx[i]]),
        "crop_a": list(crop_a),
        "crop_b": list(crop_b),
    }
    post_processed = None
    if post is not None:
        image_a = apply_retouch(image_a, np.ones((h, w), bool), post)
        params["post"] = post.to_dict()
        post_processed = "a"
    return OverlapPair(image_a, image_b, gt_a, gt_b, crop_a, crop_b, post_processed, params, int(rng_seed))


def splice(host, host_objects, donor, donor_objects, donor_id: int, rng_seed: int = 0,
           search_stride: int = DEFAULT_STRIDE) -> ForgeryOutput:
    """Paste one donor object onto a background region of the host."""
    host = as_raster(host)
    donor = as_raster(donor)
    if host.shape[2] != donor.shape[2]:
        host, donor = raster.to_rgb(host), raster.to_rgb(donor)
    host_objects = as_label_map(host_objects)
    donor_objects = as_label_map(donor_objects)
    src = _object_mask(donor_objects, int(donor_id))
    (x0, y0, x1, y1), shape = _crop_to_bbox(src)
    ys, xs = valid_placements(host_objects != 0, shape, max(1, int(search_stride)))
    if ys.size == 0:
        raise ForgeryError("no background fits donor object")
    i = int(np.random.default_rng(rng_seed).integers(ys.size))
    py, px = int(ys[i]), int(xs[i])
    h, w = shape.shape
    out = host.copy()
    region = out[py:py + h, px:px + w]
    region[shape] = donor[y0:y1, x0:x1][shape]
    gt = np.zeros(host_objects.shape, np.int32)
    gt[py:py + h, px:px + w][shape] = 1
    params = {
        "donor_id": int(donor_id),
        "donor_bbox": [x0, y0, x1, y1],
        "placement_xy": [px, py],
        "search_stride": int(search_stride),
    }
    return ForgeryOutput(out, gt, "splicing", params, int(rng_seed))


# ---------------------------------------------------------------------------
# single-image recipes and the extension hook


@dataclass(frozen=True)
class ParameterRanges:
    """Sampling ranges used when generating datasets."""

    sigma: tuple[float, float] = (1.5, 4.0)
    gain: tuple[float, float] = (0.6, 1.6)
    bias: tuple[float, float] = (-40.0, 40.0)
    scale: tuple[float, float] = (0.5, 2.0)
    scale_excluded: tuple[float, float] = (0.95, 1.05)
    rotation: tuple[float, float] = (5.0, 355.0)
    feather_width: int = DEFAULT_FEATHER
    search_stride: int = DEFAULT_STRIDE
    patch_radius: int = DEFAULT_PATCH_RADIUS
    max_retouch_objects: int = 3

    @classmethod
    def from_dict(cls, d: dict) -> ParameterRanges:
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}


RecipeFn = Callable[[np.ndarray, np.ndarray, int, ParameterRanges], ForgeryOutput]
RECIPES: dict[str, RecipeFn] = {}
TAXONOMY = {"copy_move": "duplication", "splicing": "duplication", "overlap": "duplication"}
COPY_MOVE_SUBMODALITIES = ("translation", "rotation", "flip", "scaling", "random")


def register_forgery(name: str, taxonomy: str):
    """Register a single-image forgery ``fn(image, objects, seed, ranges) -> ForgeryOutput``.

    ``taxonomy`` is one of duplication, cleaning or retouching and decides
    where generated figures are filed. Registered names can be requested in
    generation configs and as the forgery of an intra-panel compound figure.
    """
    if taxonomy not in ("duplication", "cleaning", "retouching"):
        raise ValueError(f"unknown taxonomy {taxonomy!r}")

    def deco(fn: RecipeFn) -> RecipeFn:
        if name in RECIPES:
            raise ValueError(f"forgery {name!r} is already registered")
        RECIPES[name] = fn
        TAXONOMY[name] = taxonomy
        return fn
    return deco


def get_forgery(name: str) -> RecipeFn:
    try:
        return RECIPES[name]
    except KeyError:
        raise KeyError(f"unknown forgery {name!r}; registered: {sorted(RECIPES)}") from None


def _object_ids(objects) -> np.ndarray:
    ids = np.unique(np.asarray(objects)[np.asarray(objects) > 0])
    if ids.size == 0:
        raise ForgeryError("object map has no objects")
    return ids


def _pick_targets(rng, objects, limit) -> list[int]:
    ids = _object_ids(objects)
    n = int(rng.integers(1, min(limit, ids.size) + 1))
    return sorted(int(i) for i in rng.choice(ids, size=n, replace=False))


def sample_scale(rng, ranges: ParameterRanges) -> float:
    lo, hi = ranges.scale
    ex_lo, ex_hi = ranges.scale_excluded
    while True:
        s = float(rng.uniform(lo, hi))
        if not ex_lo <= s <= ex_hi:
            return s


@register_forgery("copy_move", "duplication")
def _copy_move_recipe(image, objects, seed, ranges):
    rng = np.random.default_rng(seed)
    sub = COPY_MOVE_SUBMODALITIES[int(rng.integers(len(COPY_MOVE_SUBMODALITIES)))]
    if sub == "random":
        return copy_move_random(image, objects, int(rng.integers(2**63)), ranges.search_stride)
    oid = int(rng.choice(_object_ids(objects)))
    if sub == "rotation":
        transforms = [GeometricTransform.rotation(float(rng.uniform(*ranges.rotation)))]
    elif sub == "flip":
        transforms = [GeometricTransform.flip(("horizontal", "vertical")[int(rng.integers(2))])]
    elif sub == "scaling":
        transforms = [GeometricTransform.scaling(sample_scale(rng, ranges))]
    else:
        transforms = []
    out = copy_move_placed(image, objects, oid, transforms, None, int(rng.integers(2**63)), ranges.search_stride)
    out.params["submodality"] = sub
    return out


@register_forgery("blurring", "retouching")
def _blur_recipe(image, objects, seed, ranges):
    rng = np.random.default_rng(seed)
    targets = _pick_targets(rng, objects, ranges.max_retouch_objects)
    return retouch_blur(image, objects, targets, float(rng.uniform(*ranges.sigma)), seed)


@register_forgery("contrast", "retouching")
def _contrast_recipe(image, objects, seed, ranges):
    rng = np.random.default_rng(seed)
    targets = _pick_targets(rng, objects, ranges.max_retouch_objects)
    return retouch_contrast(image, objects, targets, float(rng.uniform(*ranges.gain)),
                            float(rng.uniform(*ranges.bias)), seed)


@register_forgery("brute_force", "cleaning")
def _brute_force_recipe(image, objects, seed, ranges):
    rng = np.random.default_rng(seed)
    oid = int(rng.choice(_object_ids(objects)))
    return clean_brute_force(image, objects, oid, ranges.search_stride, ranges.feather_width, seed)


@register_forgery("inpainting", "cleaning")
def _inpaint_recipe(image, objects, seed, ranges):
    rng = np.random.default_rng(seed)
    oid = int(rng.choice(_object_ids(objects)))
    return clean_inpaint(image, objects, oid, ranges.patch_radius, seed)
