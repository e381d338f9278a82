"""Serialisation of forgery outputs: label-map PNGs, per-figure metadata and the
dataset manifest. All JSON is canonical (sorted keys, UTF-8, 2-space indent,
trailing newline) so identical records always produce identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import raster

MANIFEST_NAME = "manifest.json"
SPLITS = ("train", "test")
COMPLEXITIES = ("simple", "compound")
TAXONOMIES = ("pristine", "duplication", "cleaning", "retouching")


def _plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def write_json(path, obj) -> None:
    path = Path(path)
    try:
        path.write_text(canonical_json(obj), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# ground truth


def write_ground_truth(gt, path) -> None:
    """16-bit grayscale PNG; each sample is the region ID."""
    try:
        raster.write_label_map(path, gt)
    except OSError as exc:
        raise OSError(f"cannot write ground truth {path}: {exc}") from exc


def read_ground_truth(path) -> np.ndarray:
    try:
        return raster.read_label_map(path)
    except OSError as exc:
        raise OSError(f"cannot read ground truth {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# per-figure metadata


@dataclass
class ForgeryRecord:
    figure_id: str
    modality: str
    submodality: str
    source_refs: list[str]
    method_args: dict
    seed: int
    split: str
    gt_files: list[str] = field(default_factory=list)
    panel_locations: list[list[int]] = field(default_factory=list)
    verbosity: int = 0

    def validate(self) -> None:
        if not self.figure_id:
            raise ValueError("figure_id is empty")
        if not self.source_refs:
            raise ValueError(f"{self.figure_id}: source_refs must be nonempty")
        if self.split not in SPLITS:
            raise ValueError(f"{self.figure_id}: split must be train or test, got {self.split!r}")
        if self.verbosity not in (0, 1, 2, 3):
            raise ValueError(f"{self.figure_id}: verbosity must be 0..3")
        pristine = self.modality == "pristine"
        if pristine and self.gt_files:
            raise ValueError(f"{self.figure_id}: pristine figures carry no ground truth")
        if not pristine and not self.gt_files:
            raise ValueError(f"{self.figure_id}: tampered figures need gt_files")
        if (self.verbosity >= 1) != bool(self.panel_locations):
            raise ValueError(f"{self.figure_id}: panel_locations required exactly for compound figures")

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> ForgeryRecord:
        rec = cls(**d)
        rec.validate()
        return rec


def write_metadata(rec: ForgeryRecord, path) -> None:
    rec.validate()
    write_json(path, rec.to_dict())


def read_metadata(path) -> ForgeryRecord:
    return ForgeryRecord.from_dict(read_json(path))


# ---------------------------------------------------------------------------
# dataset layout and manifest


def figure_dir(complexity: str, split: str, taxonomy: str, modality: str,
               submodality: str = "", verbosity: int = 0) -> str:
    """Relative directory for one figure.

    simple/<split>/pristine/
    simple/<split>/<taxonomy>/<modality>/
    compound/<split>/<modality>/<submodality>/verbosity_<k>/

    Compound entries use ``modality`` ``inter_panel`` or ``intra_panel`` and
    name the forgery in ``submodality``.
    """
    if complexity == "simple":
        if taxonomy == "pristine":
            return f"simple/{split}/pristine"
        return f"simple/{split}/{taxonomy}/{modality}"
    if modality not in ("inter_panel", "intra_panel"):
        raise ValueError(f"compound modality must be inter_panel or intra_panel, got {modality!r}")
    return f"compound/{split}/{modality}/{submodality}/verbosity_{verbosity}"


@dataclass
class ManifestEntry:
    figure_id: str
    split: str
    complexity: str
    taxonomy: str
    modality: str
    submodality: str
    verbosity: int
    paths: dict[str, str]
    source_refs: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"{self.figure_id}: bad split {self.split!r}")
        if self.complexity not in COMPLEXITIES:
            raise ValueError(f"{self.figure_id}: bad complexity {self.complexity!r}")
        if self.taxonomy not in TAXONOMIES:
            raise ValueError(f"{self.figure_id}: bad taxonomy {self.taxonomy!r}")
        if "image" not in self.paths:
            raise ValueError(f"{self.figure_id}: entry has no image path")


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    sources: dict[str, str] = field(default_factory=dict)
    min_manipulated_pixels: int = 500

    def canonical(self) -> DatasetManifest:
        return DatasetManifest(sorted(self.entries, key=lambda e: e.figure_id), dict(sorted(self.sources.items())),
                               self.min_manipulated_pixels)

    def by_id(self) -> dict[str, ManifestEntry]:
        return {e.figure_id: e for e in self.entries}

    def to_dict(self) -> dict:
        m = self.canonical()
        return {
            "entries": [asdict(e) for e in m.entries],
            "min_manipulated_pixels": m.min_manipulated_pixels,
            "sources": m.sources,
        }


def _check_unique(entries) -> None:
    seen = set()
    for e in entries:
        if e.figure_id in seen:
            raise ValueError(f"duplicate figure_id {e.figure_id!r}")
        seen.add(e.figure_id)


def write_manifest(manifest: DatasetManifest, root) -> Path:
    root = Path(root)
    _check_unique(manifest.entries)
    for e in manifest.entries:
        e.validate()
        for p in e.paths.values():
            if not (root / p).exists():
                raise FileNotFoundError(f"{e.figure_id}: referenced path {p} does not exist")
    path = root / MANIFEST_NAME
    write_json(path, manifest.to_dict())
    return path


def read_manifest(root, check_paths: bool = True) -> DatasetManifest:
    root = Path(root)
    data = read_json(root / MANIFEST_NAME)
    entries = [ManifestEntry(**e) for e in data.get("entries", [])]
    _check_unique(entries)
    for e in entries:
        e.validate()
        if check_paths:
            for p in e.paths.values():
                if not (root / p).exists():
                    raise FileNotFoundError(f"{e.figure_id}: referenced path {p} does not exist")
    return DatasetManifest(entries, dict(data.get("sources", {})), int(data.get("min_manipulated_pixels", 500)))
