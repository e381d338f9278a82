"""Pixel-level copy-move scoring with the consistent-true-positive rule.

A detected pixel is a *consistent* true positive only when its detected
region overlaps at least two connected components (the source and one of its
copies) of one ground-truth region. When a detected region qualifies for
several ground-truth regions, only the one with the largest intersection
counts.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annotate import canonical_json
from .raster import DEFAULT_CONNECTIVITY, as_label_map, label_components, luminance

DEFAULT_THRESHOLD = 100
SCORE_FIELDS = ("f1_tp", "f1_ctp", "precision_tp", "precision_ctp")
DEFAULT_GROUP = ("complexity", "modality", "submodality", "verbosity")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int
    ctp: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: ConfusionCounts) -> ConfusionCounts:
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn,
                               self.tn + other.tn, self.ctp + other.ctp)


@dataclass
class ScoreRecord:
    figure_id: str
    modality: str
    submodality: str
    verbosity: int
    counts: ConfusionCounts
    f1_tp: float
    f1_ctp: float
    precision_tp: float
    precision_ctp: float
    complexity: str = ""
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("figure_id", "complexity", "modality", "submodality", "verbosity", "flags")}
        d.update({k: getattr(self, k) for k in SCORE_FIELDS})
        d["counts"] = vars(self.counts)
        return d


def _check_shapes(gt, dm):
    if gt.shape != dm.shape:
        raise ValueError(f"dimension mismatch: gt {gt.shape} vs dm {dm.shape}")


def binarize_detection(soft, threshold: int = DEFAULT_THRESHOLD) -> np.ndarray:
    """Min-max normalise to [0, 255] (rounded) and mark values above ``threshold`` with ID 1."""
    a = np.asarray(soft)
    a = luminance(a) if a.ndim == 3 and a.shape[2] == 3 else np.squeeze(a).astype(np.float64)
    if a.ndim != 2:
        raise ValueError("soft map must be single-channel")
    lo, hi = float(a.min()), float(a.max())
    if hi == lo:
        return np.zeros(a.shape, np.int32)
    norm = np.rint((a - lo) * 255.0 / (hi - lo))
    return (norm > threshold).astype(np.int32)


def pixel_confusion(gt, dm) -> tuple[int, int, int, int]:
    g = np.asarray(gt) > 0
    d = np.asarray(dm) > 0
    _check_shapes(g, d)
    tp = int(np.count_nonzero(g & d))
    fp = int(np.count_nonzero(~g & d))
    fn = int(np.count_nonzero(g & ~d))
    return tp, fp, fn, g.size - tp - fp - fn


def consistent_true_positive(gt, dm, connectivity: int = DEFAULT_CONNECTIVITY) -> int:
    g = as_label_map(gt)
    d = as_label_map(dm)
    _check_shapes(g, d)
    comp_map, comp_region = label_components(g, connectivity)
    both = (d > 0) & (g > 0)
    if not both.any():
        return 0
    det = d[both].astype(np.int64)
    comp = comp_map[both].astype(np.int64)
    reg = comp_region[comp]
    base = int(comp_region.max()) + 1

    # pixels per (detected region, gt region)
    pair_keys, inter = np.unique(det * base + reg, return_counts=True)
    # distinct gt components hit per (detected region, gt region)
    dc = np.unique(det * (comp.max() + 1) + comp)
    dc_det, dc_comp = dc // (comp.max() + 1), dc % (comp.max() + 1)
    hit_keys, n_hit = np.unique(dc_det * base + comp_region[dc_comp], return_counts=True)
    consistent = n_hit[np.searchsorted(hit_keys, pair_keys)] >= 2

    ctp = 0
    best: dict[int, tuple[int, int]] = {}
    for key, n, ok in zip(pair_keys.tolist(), inter.tolist(), consistent.tolist()):
        if not ok:
            continue
        rid_dm, rid_gt = divmod(key, base)
        cur = best.get(rid_dm)
        # keys arrive with ascending gt ID, so strict > keeps the smallest ID on ties
        if cur is None or n > cur[0]:
            best[rid_dm] = (n, rid_gt)
    for n, _ in best.values():
        ctp += n
    return ctp


def f1(tp_like: int, fn: int, fp: int) -> float:
    denom = 2 * tp_like + fn + fp
    return 2.0 * tp_like / denom if denom else 0.0


def precision(tp_like: int, fp: int) -> float:
    denom = tp_like + fp
    return tp_like / denom if denom else 0.0


def scores_from_counts(c: ConfusionCounts) -> dict[str, float]:
    return {
        "f1_tp": f1(c.tp, c.fn, c.fp),
        "f1_ctp": f1(c.ctp, c.fn, c.fp),
        "precision_tp": precision(c.tp, c.fp),
        "precision_ctp": precision(c.ctp, c.fp),
    }


def evaluate_figure(gt, dm, mode: str = "id", threshold: int = DEFAULT_THRESHOLD, soft: bool = False,
                    connectivity: int = DEFAULT_CONNECTIVITY, **info) -> ScoreRecord:
    """Score one detection map.

    ``soft=True`` binarises ``dm`` first. In ``idless`` mode every detected
    and every ground-truth pixel is given ID 1, for detectors that cannot
    pair sources with copies. ``info`` fills the record's identity fields.
    """
    if mode not in ("id", "idless"):
        raise ValueError("mode must be 'id' or 'idless'")
    g = as_label_map(gt)
    d = binarize_detection(dm, threshold) if soft else as_label_map(dm)
    _check_shapes(g, d)
    if mode == "idless":
        g = (g > 0).astype(np.int32)
        d = (d > 0).astype(np.int32)
    tp, fp, fn, tn = pixel_confusion(g, d)
    counts = ConfusionCounts(tp, fp, fn, tn, consistent_true_positive(g, d, connectivity))
    return ScoreRecord(
        figure_id=str(info.get("figure_id", "")),
        modality=str(info.get("modality", "")),
        submodality=str(info.get("submodality", "")),
        verbosity=int(info.get("verbosity", 0)),
        counts=counts,
        complexity=str(info.get("complexity", "")),
        flags=list(info.get("flags", [])),
        **scores_from_counts(counts),
    )


def aggregate_scores(records: Iterable[ScoreRecord], group_by: Sequence[str] = ("modality", "verbosity"),
                     pooled: bool = False) -> list[dict]:
    """Mean score per group on the [0, 100] scale, rows sorted by group key.

    With ``pooled`` the confusion counts of a group are summed first and the
    scores computed once from the totals.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict[tuple, list[ScoreRecord]] = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, k) for k in group_by), []).append(r)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        if pooled:
            total = members[0].counts
            for m in members[1:]:
                total = total + m.counts
            means = scores_from_counts(total)
        else:
            means = {f: sum(getattr(m, f) for m in members) / len(members) for f in SCORE_FIELDS}
        row = dict(zip(group_by, key))
        row["n"] = len(members)
        row.update({f: 100.0 * v for f, v in means.items()})
        rows.append(row)
    return rows


def write_score_csv(rows: Sequence[dict], path, group_by: Sequence[str] = DEFAULT_GROUP) -> None:
    columns = list(group_by) + ["n", *SCORE_FIELDS]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([f"{r[c]:.2f}" if c in SCORE_FIELDS else r[c] for c in columns])


def read_score_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for f in SCORE_FIELDS:
            r[f] = float(r[f])
        r["n"] = int(r["n"])
    return rows


def write_score_json(rows: Sequence[dict], path) -> None:
    out = [{k: round(v, 2) if k in SCORE_FIELDS else v for k, v in r.items()} for r in rows]
    Path(path).write_text(canonical_json(out), encoding="utf-8")
