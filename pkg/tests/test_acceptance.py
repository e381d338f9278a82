"""Exit-criteria checks. Each test prints one ``PASS``/``FAIL`` line; the
lines are repeated in an "acceptance report" section at the end of any
pytest run. The file can also be executed directly.
"""
from __future__ import annotations

import filecmp
import hashlib
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import conftest  # noqa: E402
import oracles  # noqa: E402
import synth  # noqa: E402
from figforge import annotate, compound, dataset, forge, metrics, raster  # noqa: E402
from figforge.errors import ForgeryError  # noqa: E402
from figforge.inpaint import criminisi_inpaint  # noqa: E402
from figforge.raster import GeometricTransform  # noqa: E402

pytestmark = pytest.mark.acceptance


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, detail


@pytest.fixture(scope="module")
def map_pairs():
    rng = np.random.default_rng(20240501)
    return [synth.random_map_pair(rng) for _ in range(1000)]


def test_ctp_matches_brute_force_oracle(map_pairs):
    t = time.perf_counter()
    got = [metrics.consistent_true_positive(g, d) for g, d in map_pairs]
    elapsed = time.perf_counter() - t
    want = [oracles.ctp(g, d) for g, d in map_pairs]
    mismatches = sum(a != b for a, b in zip(got, want))
    report("CTP oracle equivalence", mismatches == 0 and elapsed < 10,
           f"{mismatches} mismatches in {len(map_pairs)} cases, {elapsed:.2f}s")


def test_ctp_bounded_by_tp(map_pairs):
    bad = 0
    for g, d in map_pairs:
        r = metrics.evaluate_figure(g, d)
        if not (r.counts.ctp <= r.counts.tp and r.f1_ctp <= r.f1_tp):
            bad += 1
    report("CTP <= TP and F1_CTP <= F1_TP", bad == 0, f"{bad} violations in {len(map_pairs)} cases")


def inconsistent_fixture():
    """Two duplicated pairs; each detected region covers only one member of a pair."""
    gt = np.zeros((40, 60), np.int32)
    gt[5:15, 5:15] = 1    # pair 1 source
    gt[5:15, 40:50] = 1   # pair 1 copy
    gt[25:35, 5:15] = 2   # pair 2 source
    gt[25:35, 40:50] = 2  # pair 2 copy
    dm = np.zeros_like(gt)
    dm[5:15, 5:15] = 1    # source of pair 1 ...
    dm[25:35, 40:50] = 1  # ... and the copy of pair 2, under one detected ID
    dm[25:35, 5:15] = 2   # source of pair 2 alone
    return gt, dm


def test_inconsistent_detection_scores_zero():
    gt, dm = inconsistent_fixture()
    r = metrics.evaluate_figure(gt, dm)
    report("inconsistent detection fixture", r.f1_tp > 0 and r.f1_ctp == 0.0,
           f"F1_TP={r.f1_tp:.4f} F1_CTP={r.f1_ctp}")


def test_score_spot_values():
    gt, _ = inconsistent_fixture()
    perfect = metrics.evaluate_figure(gt, gt)
    empty = metrics.evaluate_figure(gt, np.zeros_like(gt))
    vals_p = [perfect.f1_tp, perfect.f1_ctp, perfect.precision_tp, perfect.precision_ctp]
    vals_e = [empty.f1_tp, empty.f1_ctp, empty.precision_tp, empty.precision_ctp]
    ok = all(abs(v - 1.0) <= 1e-12 for v in vals_p) and all(abs(v) <= 1e-12 for v in vals_e)
    report("score spot values", ok, f"perfect={vals_p} empty={vals_e}")


def _marked(out) -> np.ndarray:
    m = out.gt > 0
    if out.gt_secondary is not None:
        m |= out.gt_secondary > 0
    return m


def test_forgery_locality_sweep():
    ranges = forge.ParameterRanges()
    failures = []
    cases = 0
    for name in sorted(forge.RECIPES):
        for seed in range(200):
            img, obj = synth.small_source(seed)
            try:
                out = forge.get_forgery(name)(img, obj, seed, ranges)
            except ForgeryError:
                continue
            cases += 1
            m = _marked(out)
            if out.image.shape != img.shape or not np.array_equal(out.image[~m], img[~m]):
                failures.append(f"{name}/{seed}")
    for seed in range(200):
        host, hobj = synth.small_source(seed)
        donor, dobj = synth.small_source(seed + 10_000)
        try:
            out = forge.splice(host, hobj, donor, dobj, 1, seed)
        except ForgeryError:
            continue
        cases += 1
        if not np.array_equal(out.image[out.gt == 0], host[out.gt == 0]):
            failures.append(f"splicing/{seed}")
    for seed in range(200):
        img, _ = synth.small_source(seed)
        pair = forge.overlap_split(img, (40, 30), 0.5, None, seed)
        cases += 1
        (ax0, ay0, ax1, ay1), (bx0, by0, bx1, by1) = pair.crop_a, pair.crop_b
        if not (np.array_equal(pair.image_a, img[ay0:ay1, ax0:ax1]) and np.array_equal(pair.image_b, img[by0:by1, bx0:bx1])):
            failures.append(f"overlap/{seed}")
    report("forgery locality", not failures and cases >= 200 * (len(forge.RECIPES) + 2) * 0.9,
           f"{cases} cases, {len(failures)} failures {failures[:5]}")


def _crop(a, mask):
    x0, y0, x1, y1 = raster.bbox_of(mask)
    return a[y0:y1, x0:x1], mask[y0:y1, x0:x1]


LOSSLESS = [
    ("translation", [], lambda a: a),
    ("flip_h", [GeometricTransform.flip("horizontal")], lambda a: a[:, ::-1]),
    ("flip_v", [GeometricTransform.flip("vertical")], lambda a: a[::-1]),
    ("rot90", [GeometricTransform.rotation(90)], lambda a: np.rot90(a, 1)),
    ("rot180", [GeometricTransform.rotation(180)], lambda a: np.rot90(a, 2)),
]


def test_lossless_duplication():
    bad, cases = [], 0
    for seed in range(100):
        name, transforms, expect = LOSSLESS[seed % len(LOSSLESS)]
        img, obj = synth.small_source(seed, size=(96, 72))
        try:
            out = forge.copy_move_placed(img, obj, 1, transforms, None, seed, search_stride=1)
        except ForgeryError:
            continue
        cases += 1
        src = obj == 1
        copy = (out.gt == 1) & ~src
        got_px, got_m = _crop(out.image, copy)
        src_px, src_m = _crop(img, src)
        want_px, want_m = expect(src_px), expect(src_m)
        if got_m.shape != want_m.shape or not np.array_equal(got_m, want_m) \
                or not np.array_equal(got_px[got_m], want_px[want_m]):
            bad.append(f"{name}/{seed}")
    report("lossless duplication", not bad and cases == 100, f"{cases} cases, failures {bad[:5]}")


def _toy_cleaning_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 33))
    img = rng.integers(0, 256, (n, n, 3)).astype(np.uint8)
    obj = np.zeros((n, n), np.int32)
    s = int(rng.integers(2, max(3, n // 3)))
    y, x = rng.integers(0, n - s, 2)
    obj[y:y + s, x:x + s] = 1
    obj[y, x] = 0 if s > 2 else 1  # non-rectangular shape
    return img, obj


def test_brute_force_optimality():
    bad, cases = [], 0
    for seed in range(40):
        img, obj = _toy_cleaning_case(seed)
        best, where = oracles.exhaustive_background_search(img, obj, 1)
        if best is None:
            continue
        cases += 1
        out = forge.clean_brute_force(img, obj, 1, search_stride=1, feather_width=0)
        area = int((obj == 1).sum())
        got = round(out.params["histogram_distance"] * area)
        if got != best or tuple(out.params["background_xy"]) not in where:
            bad.append(seed)
    report("brute-force cleaning optimality", not bad and cases >= 30, f"{cases} toy images, mismatches {bad}")


TWO_TONE_HOLES = [
    [(slice(2, 5), slice(2, 5))],
    [(slice(11, 14), slice(11, 14))],
    [(slice(2, 5), slice(2, 5)), (slice(11, 14), slice(11, 14))],
    [(slice(2, 5), slice(11, 14))],
    [(slice(6, 10), slice(6, 10))],
]


def test_inpainting_sanity():
    rng = np.random.default_rng(7)
    uniform_ok = True
    for _ in range(10):
        color = rng.integers(0, 256, 3).astype(np.uint8)
        img = np.broadcast_to(color, (24, 24, 3)).copy()
        hole = np.zeros((24, 24), bool)
        y, x = rng.integers(0, 18, 2)
        hole[y:y + int(rng.integers(1, 7)), x:x + int(rng.integers(1, 7))] = True
        out = criminisi_inpaint(img, hole, 4)
        uniform_ok &= bool((out == color).all())
    fractions = []
    for holes in TWO_TONE_HOLES:
        img = np.zeros((16, 16, 3), np.uint8)
        img[:, :8] = (200, 40, 40)
        img[:, 8:] = (30, 60, 220)
        mask = np.zeros((16, 16), bool)
        for sl in holes:
            mask[sl] = True
        out = criminisi_inpaint(img, mask, 4)
        fractions.append(float((out[mask] == img[mask]).all(axis=1).mean()))
    report("inpainting sanity", uniform_ok and min(fractions) >= 0.95,
           f"uniform exact={uniform_ok}, two-tone side-colour fractions={[round(f, 3) for f in fractions]}")


# ---------------------------------------------------------------------------
# desk-scale dataset


def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def desk_dataset(tmp_path_factory):
    base = tmp_path_factory.mktemp("desk")
    synth.write_corpus(base, n_sources=20)
    coll = dataset.ingest(base / "sources", base / "collection.json", base / "masks")
    templates = compound.load_templates(base / "templates")
    cfg = dataset.table_ratio_config(0.001, seed=11)
    t = time.perf_counter()
    dataset.generate(coll, templates, cfg, base / "run1")
    elapsed = time.perf_counter() - t
    dataset.generate(dataset.SourceCollection.load(base / "collection.json"), templates, cfg, base / "run2")
    return base, elapsed


def test_dataset_structure(desk_dataset):
    base, elapsed = desk_dataset
    root = base / "run1"
    violations = dataset.verify(root)
    manifest = annotate.read_manifest(root)
    overlap_splits = {e.split for e in manifest.entries if "overlap" in (e.modality, e.submodality)}
    small = [e.figure_id for e in manifest.entries if "gt" in e.paths
             and int((annotate.read_ground_truth(root / e.paths["gt"]) > 0).sum()) < 500]
    modalities = {(e.complexity, e.modality) for e in manifest.entries}
    cmp = filecmp.dircmp(root, base / "run2")
    identical = _tree_digest(root) == _tree_digest(base / "run2") and not cmp.diff_files
    ok = not violations and overlap_splits == {"test"} and not small and identical and elapsed < 120 \
        and len(modalities) >= 10
    report("dataset structure", ok,
           f"{len(manifest.entries)} figures, {len(violations)} violations, overlap splits {sorted(overlap_splits)}, "
           f"{len(small)} gt under 500 px, byte-identical={identical}, {elapsed:.1f}s")


def _text_box_mask(shape, boxes) -> np.ndarray:
    m = np.zeros(shape, bool)
    for b in boxes:
        x0, y0, x1, y1 = b["rect"]
        m[max(y0, 0):y1, max(x0, 0):x1] = True
    return m


def test_verbosity_effect(desk_dataset, tmp_path):
    base, _ = desk_dataset
    root = base / "run1"
    manifest = annotate.read_manifest(root)
    det = tmp_path / "detections"
    det.mkdir()
    for e in manifest.entries:
        if e.complexity != "compound":
            continue
        gt = dataset.paired_ground_truth(
            annotate.read_ground_truth(root / e.paths["gt"]),
            annotate.read_ground_truth(root / e.paths["gt2"]) if "gt2" in e.paths else None)
        dm = np.zeros_like(gt)
        for rid in np.unique(gt[gt > 0]):
            dm[raster.dilate(gt == rid, 3) & (dm == 0)] = rid
        boxes = annotate.read_metadata(root / e.paths["meta"]).method_args["text_boxes"]
        letters = _text_box_mask(gt.shape, boxes) & (dm == 0)
        dm[letters] = int(gt.max()) + 1
        raster.write_label_map(det / f"{e.figure_id}.png", dm)
    records = [r for r in dataset.evaluate_dataset(root, det) if r.verbosity > 0]
    means = {}
    for v in (1, 2, 3):
        scores = [r.f1_ctp for r in records if r.verbosity == v]
        means[v] = sum(scores) / len(scores)
    ok = means[1] >= means[2] >= means[3] and means[1] > means[3]
    report("verbosity effect", ok, ", ".join(f"V{v} mean F1_CTP={m:.4f}" for v, m in means.items()))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
