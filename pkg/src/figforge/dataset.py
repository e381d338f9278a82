"""Dataset pipeline: source ingestion, generation, verification and scoring."""
from __future__ import annotations

import hashlib
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from skimage.filters import threshold_otsu

from . import annotate, compound, forge, metrics, raster
from .annotate import DatasetManifest, ForgeryRecord, ManifestEntry
from .errors import ForgeryError, TemplateError

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp")
SOURCE_KINDS = ("microscopy", "western_blot", "other")
SIMPLE_MODALITIES = ("copy_move", "splicing", "overlap", "inpainting", "brute_force", "blurring", "contrast")
INTRA_MODALITIES = ("copy_move", "inpainting", "brute_force", "blurring", "contrast")
INTER_MODALITIES = ("copy_move", "splicing", "overlap")
AUTO_MASK_MIN_AREA = 50

# figures per modality (train + test) reported for the full benchmark
TABLE_COUNTS = {
    "simple": {"copy_move": 5390, "splicing": 878, "overlap": 660, "inpainting": 392,
               "brute_force": 1373, "blurring": 1375, "contrast": 1381},
    "intra": {"copy_move": 5390, "inpainting": 392, "brute_force": 1369, "blurring": 1375, "contrast": 1381},
    "inter": {"copy_move": 13610, "splicing": 878, "overlap": 660},
}


# ---------------------------------------------------------------------------
# sources


@dataclass
class SourceEntry:
    id: str
    image: str
    mask: str | None = None
    kind: str = "other"


@dataclass
class SourceCollection:
    entries: list[SourceEntry] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    root: Path = field(default=Path("."), repr=False)

    def resolve(self, p: str) -> Path:
        return (self.root / p).resolve()

    def to_dict(self) -> dict:
        return {"entries": [vars(e) for e in self.entries], "errors": self.errors}

    def save(self, path) -> None:
        annotate.write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> SourceCollection:
        path = Path(path)
        d = annotate.read_json(path)
        entries = [SourceEntry(**e) for e in d.get("entries", [])]
        return cls(entries, list(d.get("errors", [])), path.parent)


def auto_mask(image: np.ndarray, min_area: int = AUTO_MASK_MIN_AREA) -> np.ndarray:
    """Otsu foreground (the minority side) split into components of at least ``min_area`` pixels."""
    lum = raster.luminance(image)
    if lum.min() == lum.max():
        return np.zeros(lum.shape, np.int32)
    t = threshold_otsu(lum)
    fg = lum > t
    if fg.sum() > fg.size / 2:
        fg = ~fg
    labels = np.zeros(lum.shape, np.int32)
    next_id = 1
    for comp in raster.connected_components(fg.astype(np.int32)):
        if comp.area >= min_area:
            labels[comp.ys, comp.xs] = next_id
            next_id += 1
    return labels


def _relpath(p: Path, start: Path) -> str:
    try:
        return os.path.relpath(p.resolve(), start.resolve())
    except ValueError:
        return str(p.resolve())


def ingest(src_dir, out_collection, mask_dir=None, use_auto_mask: bool = False, kind: str = "other") -> SourceCollection:
    """Index a folder of source images (and optional object masks) into a collection file.

    Masks are matched by stem (``<stem>.png`` or ``<stem>_mask.png``).
    Unreadable images and mismatched masks are reported, not fatal.
    """
    src_dir = Path(src_dir)
    if not src_dir.is_dir():
        raise FileNotFoundError(f"source directory {src_dir} does not exist")
    if kind not in SOURCE_KINDS:
        raise ValueError(f"kind must be one of {SOURCE_KINDS}")
    out_collection = Path(out_collection)
    base = out_collection.parent
    base.mkdir(parents=True, exist_ok=True)
    coll = SourceCollection(root=base)
    files = sorted(p for p in src_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
    if not files:
        log.warning("no images found in %s", src_dir)
    for p in files:
        try:
            img = raster.read_raster(p)
        except Exception as exc:  # noqa: BLE001 - any decoder failure is reported
            coll.errors.append({"path": str(p), "reason": f"unreadable image: {exc}"})
            continue
        mask_path = None
        if mask_dir is not None:
            for cand in (Path(mask_dir) / f"{p.stem}.png", Path(mask_dir) / f"{p.stem}_mask.png"):
                if cand.exists():
                    mask_path = cand
                    break
        if mask_path is not None:
            try:
                m = raster.read_label_map(mask_path)
            except Exception as exc:  # noqa: BLE001
                coll.errors.append({"path": str(mask_path), "reason": f"unreadable mask: {exc}"})
                continue
            if m.shape != img.shape[:2]:
                coll.errors.append({"path": str(p), "reason": f"mask dimensions {m.shape[::-1]} differ from image {img.shape[1::-1]}"})
                continue
        elif use_auto_mask:
            labels = auto_mask(img)
            if labels.max() > 0:
                (base / "masks").mkdir(exist_ok=True)
                mask_path = base / "masks" / f"{p.stem}.png"
                raster.write_label_map(mask_path, labels)
        entry = SourceEntry(p.stem, _relpath(p, base), _relpath(mask_path, base) if mask_path else None, kind)
        if mask_path is None:
            log.info("%s has no object mask; only mask-free forgeries will use it", p.name)
        coll.entries.append(entry)
    coll.save(out_collection)
    return coll


# ---------------------------------------------------------------------------
# configuration


@dataclass
class GenerationConfig:
    seed: int = 0
    simple: dict[str, int] = field(default_factory=dict)
    intra: dict[str, int] = field(default_factory=dict)
    inter: dict[str, int] = field(default_factory=dict)
    ranges: forge.ParameterRanges = field(default_factory=forge.ParameterRanges)
    verbosity_levels: list[int] = field(default_factory=lambda: [1, 2, 3])
    train_fraction: float = 0.66
    min_manipulated_pixels: int = 500
    overlap_test_only: bool = True
    retries: int = 5

    def validate(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.min_manipulated_pixels < 1:
            raise ValueError("min_manipulated_pixels must be >= 1")
        allowed = {
            "simple": set(SIMPLE_MODALITIES) | set(forge.RECIPES),
            "intra": set(INTRA_MODALITIES) | set(forge.RECIPES),
            "inter": set(INTER_MODALITIES),
        }
        for group, names in allowed.items():
            for k, v in getattr(self, group).items():
                if k not in names:
                    raise ValueError(f"unknown {group} modality {k!r}")
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise ValueError(f"{group}.{k}: counts must be non-negative integers")
        if not self.verbosity_levels or any(v not in (1, 2, 3) for v in self.verbosity_levels):
            raise ValueError("verbosity_levels must be a nonempty subset of 1, 2, 3")

    def to_dict(self) -> dict:
        d = dict(vars(self))
        d["ranges"] = self.ranges.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GenerationConfig:
        d = dict(d)
        if "ranges" in d:
            d["ranges"] = forge.ParameterRanges.from_dict(d["ranges"])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> GenerationConfig:
        return cls.from_dict(annotate.read_json(path))


def table_ratio_config(scale: float = 0.001, seed: int = 0, **overrides) -> GenerationConfig:
    """Counts proportional to the published per-modality totals, at least 1 each."""
    counts = {g: {k: max(1, math.floor(v * scale + 0.5)) for k, v in m.items()} for g, m in TABLE_COUNTS.items()}
    return GenerationConfig(seed=seed, **counts, **overrides)


def derive_seed(master: int, *parts) -> int:
    h = hashlib.sha256(":".join(str(p) for p in (master, *parts)).encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


def split_sources(ids, train_fraction: float, seed: int) -> dict[str, list[str]]:
    """Disjoint train/test pools; ``round(train_fraction * n)`` sources go to train."""
    ids = sorted(ids)
    perm = np.random.default_rng(derive_seed(seed, "split")).permutation(len(ids))
    n_train = math.floor(train_fraction * len(ids) + 0.5)
    return {"train": sorted(ids[i] for i in perm[:n_train]), "test": sorted(ids[i] for i in perm[n_train:])}


def split_count(count: int, train_fraction: float, test_only: bool = False) -> dict[str, int]:
    if test_only:
        return {"train": 0, "test": count}
    n_train = math.floor(train_fraction * count + 0.5)
    return {"train": n_train, "test": count - n_train}


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class Job:
    group: str  # simple | intra | inter
    modality: str
    split: str
    index: int

    @property
    def key(self) -> str:
        return f"{self.group}/{self.modality}/{self.split}/{self.index}"


_CTX: dict = {}


def _init_worker(ctx: dict) -> None:
    _CTX.clear()
    _CTX.update(ctx)


def _write_figure(root: Path, rel_dir: str, fid: str, image, gt, gt2, record: ForgeryRecord) -> dict[str, str]:
    d = root / rel_dir
    d.mkdir(parents=True, exist_ok=True)
    paths = {"image": f"{rel_dir}/{fid}.png", "meta": f"{rel_dir}/{fid}_meta.json"}
    raster.write_raster(root / paths["image"], image)
    gt_files = []
    if gt is not None:
        paths["gt"] = f"{rel_dir}/{fid}_gt.png"
        annotate.write_ground_truth(gt, root / paths["gt"])
        gt_files.append(Path(paths["gt"]).name)
        if _CTX.get("previews"):
            raster.write_preview(d / f"{fid}_gt_preview.png", gt)
    if gt2 is not None:
        paths["gt2"] = f"{rel_dir}/{fid}_gt2.png"
        annotate.write_ground_truth(gt2, root / paths["gt2"])
        gt_files.append(Path(paths["gt2"]).name)
    record.gt_files = gt_files
    annotate.write_metadata(record, root / paths["meta"])
    return paths


def _duplication_consistent(gt) -> bool:
    counts = raster.count_components(gt)
    return bool(counts) and all(c >= 2 for c in counts.values())


def _choose(rng, items):
    return items[int(rng.integers(len(items)))]


def _run_simple(job: Job, seed: int, rng) -> list[ManifestEntry] | None:
    cfg: GenerationConfig = _CTX["config"]
    sources, pool, masked = _CTX["sources"], _CTX["pools"][job.split], _CTX["masked"][job.split]
    root = _CTX["out"]
    mod = job.modality
    fid = f"{job.split}_{mod}_{job.index:05d}"
    if mod == "overlap":
        sid = _choose(rng, pool)
        img = sources[sid][0]
        H, W = img.shape[:2]
        crop = (max(1, round(W * rng.uniform(0.55, 0.8))), max(1, round(H * rng.uniform(0.55, 0.8))))
        post = forge.RetouchSpec("contrast", gain=1.0, bias=float(rng.uniform(-40, 40))) if rng.random() < 0.5 else None
        pair = forge.overlap_split(img, crop, float(rng.uniform(0.3, 0.7)), post, int(rng.integers(2**63)))
        if (pair.gt_a > 0).sum() < cfg.min_manipulated_pixels:
            return None
        entries = []
        for side, image, gt in (("a", pair.image_a, pair.gt_a), ("b", pair.image_b, pair.gt_b)):
            sfid = f"{fid}_{side}"
            args = dict(pair.params, side=side, partner=f"{fid}_{'b' if side == 'a' else 'a'}",
                        post_processed=pair.post_processed == side)
            rec = ForgeryRecord(sfid, mod, "overlap", [sid], args, seed, job.split)
            rel = annotate.figure_dir("simple", job.split, "duplication", mod)
            paths = _write_figure(root, rel, sfid, image, gt, None, rec)
            entries.append(ManifestEntry(sfid, job.split, "simple", "duplication", mod, "overlap", 0, paths, [sid]))
        return entries

    if mod == "splicing":
        if len(masked) < 2:
            raise ForgeryError("splicing needs two masked sources")
        donor_sid, host_sid = (masked[i] for i in rng.choice(len(masked), 2, replace=False))
        (dimg, dobj), (himg, hobj) = sources[donor_sid], sources[host_sid]
        ids = np.unique(dobj[dobj > 0])
        out = None
        for oid in rng.permutation(ids):
            try:
                out = forge.splice(himg, hobj, dimg, dobj, int(oid), int(rng.integers(2**63)), cfg.ranges.search_stride)
                break
            except ForgeryError:
                continue
        if out is None:
            return None
        out.params["donor_ref"] = donor_sid
        refs = [host_sid, donor_sid]
    else:
        sid = _choose(rng, masked)
        img, objs = sources[sid]
        out = forge.get_forgery(mod)(img, objs, int(rng.integers(2**63)), cfg.ranges)
        refs = [sid]
    if (out.gt > 0).sum() < cfg.min_manipulated_pixels:
        return None
    if mod == "copy_move" and not _duplication_consistent(out.gt):
        return None
    sub = str(out.params.get("submodality", mod))
    tax = forge.TAXONOMY[mod]
    rec = ForgeryRecord(fid, mod, sub, refs, out.params, seed, job.split)
    paths = _write_figure(root, annotate.figure_dir("simple", job.split, tax, mod), fid, out.image, out.gt,
                          out.gt_secondary, rec)
    return [ManifestEntry(fid, job.split, "simple", tax, mod, sub, 0, paths, refs)]


def _fill_pool(rng, sources, pool, exclude):
    refs = [s for s in pool if s not in exclude]
    order = rng.permutation(len(refs))
    return [(refs[i], sources[refs[i]][0]) for i in order]


def _run_compound(job: Job, seed: int, rng) -> list[ManifestEntry] | None:
    cfg: GenerationConfig = _CTX["config"]
    sources, pool, masked = _CTX["sources"], _CTX["pools"][job.split], _CTX["masked"][job.split]
    templates = _CTX["templates"]
    root = _CTX["out"]
    mod = job.modality
    if job.group == "intra":
        sid = _choose(rng, masked)
        img, objs = sources[sid]
        fill = _fill_pool(rng, sources, pool, {sid})
        fig = compound.build_compound_intra(templates, img, objs, mod, fill, 0, int(rng.integers(2**63)),
                                            cfg.ranges, source_ref=sid)
        scope, sub, tax = "intra_panel", mod, forge.TAXONOMY[mod]
        refs = [sid]
        check_dup = mod == "copy_move"
    else:
        if mod == "splicing":
            if len(masked) < 2:
                raise ForgeryError("splicing needs two masked sources")
            refs = [masked[i] for i in rng.choice(len(masked), 2, replace=False)]
            srcs = [sources[r] for r in refs]
            fig_mode = "splicing"
        else:
            refs = [_choose(rng, pool)]
            srcs = [sources[refs[0]]]
            fig_mode = "panel_duplication" if mod == "copy_move" else "overlap"
        fill = _fill_pool(rng, sources, pool, set(refs))
        fig = compound.build_compound_inter(templates, srcs, fig_mode, None, 0, int(rng.integers(2**63)), fill,
                                            None, cfg.ranges, refs)
        scope, tax = "inter_panel", "duplication"
        sub = f"copy_move_{fig.params['submodality']}" if mod == "copy_move" else mod
        check_dup = True
    if (fig.gt > 0).sum() < cfg.min_manipulated_pixels:
        return None
    if check_dup and not _duplication_consistent(fig.gt):
        return None
    fillers = sorted({p.source_ref for p in fig.panel_layout if p.role == "filler" and p.source_ref})
    all_refs = refs + [f for f in fillers if f not in refs]
    base_id = f"{job.split}_{scope.split('_')[0]}_{mod}_{job.index:05d}"
    letter_seed = int(rng.integers(2**63))
    entries = []
    for level in cfg.verbosity_levels:
        lettered = compound.add_indicative_letters(fig, level, letter_seed)
        fid = f"{base_id}_v{level}"
        args = {
            "template": fig.template,
            "panels": [p.to_dict() for p in lettered.panel_layout],
            "text_boxes": [b.to_dict() for b in lettered.text_boxes],
            "forgery": fig.params,
        }
        rec = ForgeryRecord(fid, scope, sub, all_refs, args, seed, job.split,
                            panel_locations=[list(p.rect) for p in lettered.panel_layout], verbosity=level)
        rel = annotate.figure_dir("compound", job.split, tax, scope, sub, level)
        paths = _write_figure(root, rel, fid, lettered.image, lettered.gt, lettered.gt_secondary, rec)
        entries.append(ManifestEntry(fid, job.split, "compound", tax, scope, sub, level, paths, all_refs))
    return entries


def run_job(job: Job) -> tuple[list[ManifestEntry], list[str]]:
    cfg: GenerationConfig = _CTX["config"]
    for attempt in range(cfg.retries + 1):
        seed = derive_seed(cfg.seed, job.key, attempt)
        rng = np.random.default_rng(seed)
        try:
            if job.group == "simple":
                out = _run_simple(job, seed, rng)
            else:
                out = _run_compound(job, seed, rng)
        except (ForgeryError, TemplateError) as exc:
            log.debug("%s attempt %d failed: %s", job.key, attempt, exc)
            continue
        if out:
            return out, []
    return [], [f"{job.key}: skipped after {cfg.retries + 1} attempts"]


def _load_sources(coll: SourceCollection, out: Path) -> tuple[dict, dict[str, str]]:
    """Decoded sources plus their paths relative to the dataset root."""
    sources, paths = {}, {}
    for e in coll.entries:
        p = coll.resolve(e.image)
        img = raster.read_raster(p)
        objs = None
        if e.mask:
            objs = raster.read_label_map(coll.resolve(e.mask))
            if objs.shape != img.shape[:2]:
                raise ValueError(f"{e.id}: mask dimensions differ from image")
            if not objs.any():
                objs = None
        sources[e.id] = (img, objs)
        paths[e.id] = _relpath(p, out)
    return sources, paths


def plan_jobs(cfg: GenerationConfig) -> list[Job]:
    jobs = []
    for group in ("simple", "intra", "inter"):
        for mod, count in sorted(getattr(cfg, group).items()):
            split = split_count(count, cfg.train_fraction, cfg.overlap_test_only and mod == "overlap")
            for s in ("train", "test"):
                jobs.extend(Job(group, mod, s, i) for i in range(split[s]))
    return jobs


def _check_shortfall(jobs, pools, masked, templates) -> None:
    needs: dict[tuple[str, str, str], int] = {}
    for j in jobs:
        needs[(j.group, j.modality, j.split)] = needs.get((j.group, j.modality, j.split), 0) + 1
    problems = []
    for (group, mod, split), n in sorted(needs.items()):
        mask_free = mod == "overlap" or (group == "inter" and mod == "copy_move")
        need_sources = 2 if mod == "splicing" else 1
        have = len(pools[split]) if mask_free else len(masked[split])
        if have < need_sources:
            kind = "sources" if mask_free else "masked sources"
            problems.append(f"{group}/{mod} ({split}, {n} figures) needs {need_sources} {kind}, {split} pool has {have}")
        if group != "simple" and not templates:
            problems.append(f"{group}/{mod} needs compound templates, none given")
    if problems:
        raise ValueError("insufficient sources: " + "; ".join(problems))


def generate(collection: SourceCollection, templates, config: GenerationConfig, out_dir,
             jobs: int = 1, previews: bool = False) -> DatasetManifest:
    """Build the dataset tree under ``out_dir`` and write its manifest."""
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sources, source_paths = _load_sources(collection, out)
    pools = split_sources(list(sources), config.train_fraction, config.seed)
    masked = {s: [i for i in ids if sources[i][1] is not None] for s, ids in pools.items()}
    planned = plan_jobs(config)
    _check_shortfall(planned, pools, masked, templates)

    ctx = {"config": config, "sources": sources, "pools": pools, "masked": masked,
           "templates": list(templates), "out": out, "previews": previews}
    _init_worker(ctx)
    entries: list[ManifestEntry] = []
    if planned and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(ctx,)) as ex:
            results = list(ex.map(run_job, planned, chunksize=1))
    else:
        results = [run_job(j) for j in planned]
    for made, warnings in results:
        entries.extend(made)
        for w in warnings:
            log.warning(w)

    for split, ids in pools.items():
        for sid in ids:
            fid = f"pristine_{sid}"
            rec = ForgeryRecord(fid, "pristine", "pristine", [sid], {}, config.seed, split)
            rel = annotate.figure_dir("simple", split, "pristine", "pristine")
            paths = _write_figure(out, rel, fid, sources[sid][0], None, None, rec)
            entries.append(ManifestEntry(fid, split, "simple", "pristine", "pristine", "pristine", 0, paths, [sid]))

    manifest = DatasetManifest(entries, source_paths, config.min_manipulated_pixels).canonical()
    annotate.write_json(out / "config.json", config.to_dict())
    annotate.write_manifest(manifest, out)
    return manifest


# ---------------------------------------------------------------------------
# verification


def requires_duplication_pairs(e: ManifestEntry) -> bool:
    return (e.modality == "copy_move") or e.modality == "inter_panel" or (
        e.modality == "intra_panel" and e.submodality == "copy_move")


def verify(dataset_dir) -> list[str]:
    """Machine-check the generator's invariants; returns one line per violation."""
    root = Path(dataset_dir)
    violations: list[str] = []
    try:
        manifest = annotate.read_manifest(root, check_paths=False)
    except (OSError, ValueError) as exc:
        return [f"manifest: {exc}"]
    splits: dict[str, set[str]] = {}
    cache: dict[str, np.ndarray | None] = {}

    def load_source(sid):
        if sid not in cache:
            p = manifest.sources.get(sid)
            p = root / p if p else None
            cache[sid] = raster.read_raster(p) if p and p.exists() else None
        return cache[sid]

    for e in manifest.entries:
        tag = e.figure_id
        missing = [p for p in e.paths.values() if not (root / p).exists()]
        if missing:
            violations.append(f"{tag}: missing files {missing}")
            continue
        for sid in e.source_refs:
            splits.setdefault(sid, set()).add(e.split)
        try:
            annotate.read_metadata(root / e.paths["meta"])
            img = raster.read_raster(root / e.paths["image"])
            gt = annotate.read_ground_truth(root / e.paths["gt"]) if "gt" in e.paths else None
            gt2 = annotate.read_ground_truth(root / e.paths["gt2"]) if "gt2" in e.paths else None
        except Exception as exc:  # noqa: BLE001 - corrupt files are violations, not crashes
            violations.append(f"{tag}: unreadable ({exc})")
            continue
        if e.taxonomy == "pristine":
            src = load_source(e.source_refs[0])
            if src is not None and (src.shape != img.shape or not np.array_equal(src, img)):
                violations.append(f"{tag}: pristine image differs from its source")
            continue
        if gt is None:
            violations.append(f"{tag}: tampered figure without ground truth")
            continue
        if gt.shape != img.shape[:2] or (gt2 is not None and gt2.shape != gt.shape):
            violations.append(f"{tag}: ground-truth dimensions {gt.shape[::-1]} differ from figure {img.shape[1::-1]}")
            continue
        n = int((gt > 0).sum())
        if n < manifest.min_manipulated_pixels:
            violations.append(f"{tag}: {n} manipulated pixels < {manifest.min_manipulated_pixels}")
        if requires_duplication_pairs(e) and not _duplication_consistent(gt):
            violations.append(f"{tag}: duplication ground truth has an ID with fewer than 2 components")
        if e.complexity == "simple" and e.modality != "overlap":
            src = load_source(e.source_refs[0])
            if src is not None:
                marked = gt > 0
                if gt2 is not None:
                    marked |= gt2 > 0
                if src.shape != img.shape or not np.array_equal(src[~marked], img[~marked]):
                    violations.append(f"{tag}: pixels outside the ground truth differ from the source")
    for sid, s in sorted(splits.items()):
        if len(s) > 1:
            violations.append(f"source {sid}: appears in both train and test")
    return violations


# ---------------------------------------------------------------------------
# scoring


def paired_ground_truth(gt: np.ndarray, gt2: np.ndarray | None) -> np.ndarray:
    """Merge a background-source map into the primary map.

    Secondary IDs are offset by the largest primary ID, so secondary ``s``
    joins primary region ``s - max(gt)``: a cleaned object and the background
    patch copied over it become one region with two components.
    """
    if gt2 is None:
        return gt
    offset = int(gt.max())
    merged = gt.copy()
    sel = (gt2 > 0) & (gt == 0)
    merged[sel] = np.maximum(gt2[sel] - offset, 1)
    return merged


def read_detection(path) -> tuple[np.ndarray, bool]:
    """Return ``(map, is_soft)``: 16-bit PNGs are ID maps, everything else is soft."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            return raster.as_label_map(np.asarray(im)), False
        a = np.asarray(im.convert("L"))
    return a, True


def _score_entry(task) -> metrics.ScoreRecord | None:
    root, det_dir, e, mode, threshold, include_all = task
    if "gt" not in e.paths:
        if not include_all:
            return None
        img = raster.read_raster(root / e.paths["image"])
        gt = np.zeros(img.shape[:2], np.int32)
    else:
        gt = annotate.read_ground_truth(root / e.paths["gt"])
        gt2 = annotate.read_ground_truth(root / e.paths["gt2"]) if "gt2" in e.paths else None
        gt = paired_ground_truth(gt, gt2)
        if not include_all and not any(c >= 2 for c in raster.count_components(gt).values()):
            return None
    flags = []
    p = det_dir / f"{e.figure_id}.png"
    dm, soft = np.zeros_like(gt), False
    if not p.exists():
        flags.append("missing")
    else:
        try:
            dm, soft = read_detection(p)
        except Exception:  # noqa: BLE001 - any decoder failure scores as empty
            flags.append("unreadable")
            dm, soft = np.zeros_like(gt), False
        if dm.shape != gt.shape:
            flags.append(f"size {dm.shape[::-1]} != {gt.shape[::-1]}")
            dm, soft = np.zeros_like(gt), False
    return metrics.evaluate_figure(
        gt, dm, mode=mode, threshold=threshold, soft=soft, figure_id=e.figure_id, complexity=e.complexity,
        modality=e.modality, submodality=e.submodality, verbosity=e.verbosity, flags=flags)


def evaluate_dataset(dataset_dir, detections_dir, mode: str = "id", threshold: int = metrics.DEFAULT_THRESHOLD,
                     include_all: bool = False, split: str | None = None, jobs: int = 1) -> list[metrics.ScoreRecord]:
    """Score every copy-move-applicable figure against ``<detections_dir>/<figure_id>.png``.

    A figure is applicable when its (paired) ground truth has a region with
    at least two components. Missing, unreadable or mis-sized detections
    score as empty maps and are flagged. Records come back in manifest order.
    """
    root, det_dir = Path(dataset_dir), Path(detections_dir)
    manifest = annotate.read_manifest(root)
    tasks = [(root, det_dir, e, mode, threshold, include_all) for e in manifest.entries
             if not split or e.split == split]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_score_entry, tasks, chunksize=8))
    else:
        results = [_score_entry(t) for t in tasks]
    return [r for r in results if r is not None]
