"""Compound (multi-panel) figure construction.

A template fixes the canvas size and the panel rectangles. One panel receives
the forged source; the rest are filled from a pool of pristine images or
with synthetic graphs. Indicative text is layered on top at three
verbosity levels, each a superset of the one below.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw

from . import font, forge, raster
from .errors import ForgeryError, TemplateError
from .raster import as_raster, resize_labels, resize_raster

DEFAULT_TOL = 0.25
PANEL_KINDS = ("photo", "graph")
INTER_MODES = ("panel_duplication", "splicing", "overlap")
PANEL_DUPLICATION_SUBMODALITIES = ("none", "flip", "rotation90", "rotation180", "flip+rotation90", "retouching")


def _intersects(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


@dataclass(frozen=True)
class Panel:
    rect: tuple[int, int, int, int]
    kind: str = "photo"

    @property
    def width(self) -> int:
        return self.rect[2] - self.rect[0]

    @property
    def height(self) -> int:
        return self.rect[3] - self.rect[1]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    @property
    def aspect(self) -> float:
        return self.width / self.height


@dataclass(frozen=True)
class Template:
    canvas: tuple[int, int]
    panels: tuple[Panel, ...]
    name: str = ""

    def __post_init__(self):
        w, h = self.canvas
        if w < 1 or h < 1:
            raise TemplateError("canvas must be at least 1x1")
        if not self.panels:
            raise TemplateError("template has no panels")
        for i, p in enumerate(self.panels):
            x0, y0, x1, y1 = p.rect
            if p.kind not in PANEL_KINDS:
                raise TemplateError(f"panel {i}: unknown kind {p.kind!r}")
            if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
                raise TemplateError(f"panel {i}: rect {p.rect} outside canvas {self.canvas}")
            for j in range(i):
                if _intersects(p.rect, self.panels[j].rect):
                    raise TemplateError(f"panels {j} and {i} overlap")
        if not any(p.kind == "photo" for p in self.panels):
            raise TemplateError("template needs at least one photo panel")

    def to_dict(self) -> dict:
        return {
            "canvas": list(self.canvas),
            "panels": [{"rect": list(p.rect), "kind": p.kind} for p in self.panels],
        }

    @classmethod
    def from_dict(cls, d: dict, name: str = "") -> Template:
        if not isinstance(d, dict) or "canvas" not in d or "panels" not in d:
            raise TemplateError('template must be an object with "canvas" and "panels"')
        canvas = d["canvas"]
        if not (isinstance(canvas, list) and len(canvas) == 2 and all(isinstance(v, int) for v in canvas)):
            raise TemplateError('"canvas" must be [w, h] integers')
        panels = []
        for i, p in enumerate(d["panels"]):
            rect = p.get("rect") if isinstance(p, dict) else None
            if not (isinstance(rect, list) and len(rect) == 4 and all(isinstance(v, int) for v in rect)):
                raise TemplateError(f"panel {i}: \"rect\" must be [x0, y0, x1, y1] integers")
            panels.append(Panel(tuple(rect), p.get("kind", "photo")))
        return cls(tuple(canvas), tuple(panels), name)


def load_template(path) -> Template:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateError(f"{path}: invalid JSON ({exc})") from exc
    return Template.from_dict(data, name=path.stem)


def load_templates(directory) -> list[Template]:
    return [load_template(p) for p in sorted(Path(directory).glob("*.json"))]


def template_from_mask(path) -> Template:
    """Rasterised template import: sample 1 marks photo panels, 2 graph panels.

    Each connected component becomes one panel (its bounding box).
    """
    labels = raster.read_label_map(path)
    panels = []
    for comp in raster.connected_components(labels, connectivity=4):
        if comp.region_id not in (1, 2):
            raise TemplateError(f"{path}: unexpected panel value {comp.region_id}")
        panels.append(Panel(comp.bbox, PANEL_KINDS[comp.region_id - 1]))
    panels.sort(key=lambda p: (p.rect[1], p.rect[0]))
    return Template((labels.shape[1], labels.shape[0]), tuple(panels), Path(path).stem)


@dataclass(frozen=True)
class PanelPlacement:
    rect: tuple[int, int, int, int]
    role: str  # forged | filler | graph
    source_ref: str | None = None

    def to_dict(self) -> dict:
        return {"rect": list(self.rect), "role": self.role, "source_ref": self.source_ref}


@dataclass(frozen=True)
class TextBox:
    rect: tuple[int, int, int, int]
    text: str
    level: int
    role: str  # label | word | inner
    panel: int

    def to_dict(self) -> dict:
        return {"rect": list(self.rect), "text": self.text, "level": self.level, "role": self.role, "panel": self.panel}


@dataclass
class CompoundFigure:
    image: np.ndarray
    gt: np.ndarray
    panel_layout: list[PanelPlacement]
    text_boxes: list[TextBox] = field(default_factory=list)
    verbosity: int = 0
    gt_secondary: np.ndarray | None = None
    template: str = ""
    params: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# template selection and fillers


def _log_ratio(a: float, b: float) -> float:
    return abs(math.log(a) - math.log(b))


def select_template(templates: Sequence[Template], source_aspect: float,
                    tol: float = DEFAULT_TOL) -> tuple[Template, int]:
    """Photo panel whose aspect ratio is closest (in log ratio) to ``source_aspect``."""
    if not templates:
        raise TemplateError("no templates given")
    best = None
    for t in templates:
        for i, p in enumerate(t.panels):
            if p.kind != "photo":
                continue
            d = _log_ratio(p.aspect, source_aspect)
            if best is None or d < best[0]:
                best = (d, t, i)
    if best is None or best[0] > tol:
        raise TemplateError("no fitting template")
    return best[1], best[2]


def _fits(t: Template, aspect: float, tol: float) -> bool:
    return any(p.kind == "photo" and _log_ratio(p.aspect, aspect) <= tol for p in t.panels)


_SERIES_COLORS = [(31, 119, 180), (214, 39, 40), (44, 160, 44), (148, 103, 189), (23, 23, 23), (255, 127, 14)]


def generate_fake_graph(size: tuple[int, int], rng_seed: int) -> np.ndarray:
    """A seeded bar or line chart on a white background."""
    w, h = size
    if w < 32 or h < 32:
        raise ValueError("fake graphs need at least 32x32 pixels")
    rng = np.random.default_rng(rng_seed)
    im = Image.new("RGB", (w, h), (255, 255, 255))
    d = ImageDraw.Draw(im)
    left, bottom = max(4, w // 8), h - 1 - max(4, h // 8)
    top, right = max(2, h // 16), w - 1 - max(2, w // 16)
    d.line([(left, top), (left, bottom), (right, bottom)], fill=(0, 0, 0), width=1)
    n = int(rng.integers(3, 9))
    values = rng.uniform(0.15, 0.95, n)
    color = _SERIES_COLORS[int(rng.integers(len(_SERIES_COLORS)))]
    slot = (right - left - 2) / n
    for k in range(0, 5):
        ty = bottom - round(k * (bottom - top) / 4)
        d.line([(left - 3, ty), (left, ty)], fill=(0, 0, 0))
    if rng.random() < 0.5:
        for i, v in enumerate(values):
            bx0 = left + 2 + round(i * slot + 0.2 * slot)
            bx1 = left + 2 + round((i + 1) * slot - 0.2 * slot)
            by0 = bottom - round(v * (bottom - top))
            d.rectangle([bx0, by0, max(bx0, bx1), bottom - 1], fill=color)
    else:
        pts = [(left + 2 + round((i + 0.5) * slot), bottom - round(v * (bottom - top))) for i, v in enumerate(values)]
        d.line(pts, fill=color, width=2)
        for x, y in pts:
            d.rectangle([x - 2, y - 2, x + 2, y + 2], fill=color)
    return np.asarray(im, dtype=np.uint8).copy()


# ---------------------------------------------------------------------------
# indicative letters


def _letter_scale(panel_h: int) -> int:
    return max(1, round(0.04 * panel_h / font.CELL_H))


def _panel_order(t_panels) -> list[int]:
    return sorted(range(len(t_panels)), key=lambda i: (t_panels[i][1], t_panels[i][0]))


def _tag(n: int) -> str:
    s = ""
    n += 1
    while n:
        n, r = divmod(n - 1, 26)
        s = chr(ord("a") + r) + s
    return s


def _place_outside(rect, size, canvas, panels, preferred):
    """First candidate position that stays on canvas and clear of every panel."""
    tw, th = size
    W, H = canvas
    for x, y in preferred:
        box = (x, y, x + tw, y + th)
        if box[0] >= 0 and box[1] >= 0 and box[2] <= W and box[3] <= H and not any(_intersects(box, p) for p in panels):
            return box
    return None


def _inside(rect, size, canvas):
    x0, y0, x1, y1 = rect
    tw, th = size
    bx = min(max(x0 + 1, 0), max(canvas[0] - tw, 0))
    by = min(max(y0 + 1, 0), max(canvas[1] - th, 0))
    return bx, by, bx + tw, by + th


def _text_color(base: np.ndarray, box) -> tuple[int, ...]:
    x0, y0, x1, y1 = box
    lum = raster.luminance(base[y0:y1, x0:x1])
    white = lum.size > 0 and lum.mean() < 64
    v = 255 if white else 0
    return (v,) * base.shape[2]


def plan_text_boxes(canvas: tuple[int, int], rects: Sequence[tuple[int, int, int, int]], level: int,
                    rng_seed: int) -> list[TextBox]:
    """Text boxes for ``level``; each role draws from its own seeded stream, so
    the boxes of level k are exactly the boxes of level k-1 plus new ones."""
    if level not in (0, 1, 2, 3):
        raise ValueError("verbosity level must be 0, 1, 2 or 3")
    boxes: list[TextBox] = []
    order = _panel_order(rects)
    if level >= 1:
        for n, i in enumerate(order):
            r = rects[i]
            s = _letter_scale(r[3] - r[1])
            text = f"({_tag(n)})"
            size = font.text_size(text, s)
            box = _place_outside(r, size, canvas, rects,
                                 [(r[0], r[1] - size[1] - 1), (r[0] - size[0] - 1, r[1])]) or _inside(r, size, canvas)
            boxes.append(TextBox(box, text, 1, "label", i))
    if level >= 2:
        rng = np.random.default_rng([rng_seed, 2])
        for i in order:
            r = rects[i]
            s = _letter_scale(r[3] - r[1])
            length = int(rng.integers(4, 9))
            text = "".join(chr(ord("a") + int(c)) for c in rng.integers(0, 26, length))
            size = font.text_size(text, s)
            box = _place_outside(r, size, canvas, rects,
                                 [(r[0], r[3] + 1), (r[2] - size[0], r[1] - size[1] - 1)])
            if box is None:
                bx = max(r[0] + 1, 0)
                by = max(r[3] - size[1] - 1, 0)
                box = (bx, by, bx + size[0], by + size[1])
            boxes.append(TextBox(box, text, 2, "word", i))
    if level >= 3:
        rng = np.random.default_rng([rng_seed, 3])
        for i in order:
            x0, y0, x1, y1 = rects[i]
            s = _letter_scale(y1 - y0)
            text = chr(ord("A") + int(rng.integers(26)))
            tw, th = font.text_size(text, s)
            bx = int(rng.integers(x0, max(x0, x1 - tw) + 1))
            by = int(rng.integers(y0, max(y0, y1 - th) + 1))
            boxes.append(TextBox((bx, by, bx + tw, by + th), text, 3, "inner", i))
    return boxes


def render_text_boxes(image: np.ndarray, boxes: Sequence[TextBox]) -> np.ndarray:
    base = as_raster(image)
    out = base.copy()
    for b in boxes:
        s = max(1, (b.rect[3] - b.rect[1]) // font.CELL_H)
        font.draw_text(out, b.rect[0], b.rect[1], b.text, s, _text_color(base, b.rect))
    return out


def add_indicative_letters(fig: CompoundFigure, level: int, rng_seed: int) -> CompoundFigure:
    """Overlay panel letters (level 1), random words (2) and in-panel letters (3).

    ``fig`` should be the letter-free figure; the ground truth is not touched.
    """
    rects = [p.rect for p in fig.panel_layout]
    canvas = (fig.image.shape[1], fig.image.shape[0])
    boxes = plan_text_boxes(canvas, rects, level, rng_seed)
    image = render_text_boxes(fig.image, boxes)
    return replace(fig, image=image, text_boxes=list(fig.text_boxes) + boxes, verbosity=level)


# ---------------------------------------------------------------------------
# assembly


def _normalize_pool(pool) -> list[tuple[str, np.ndarray]]:
    out = []
    for k, item in enumerate(pool or ()):
        if isinstance(item, tuple):
            out.append((str(item[0]), raster.to_rgb(item[1])))
        else:
            out.append((f"pool{k}", raster.to_rgb(item)))
    return out


def _blank_canvas(t: Template) -> np.ndarray:
    w, h = t.canvas
    canvas = np.full((h, w, 3), 255, np.uint8)
    for p in t.panels:
        x0, y0, x1, y1 = p.rect
        bx0, by0, bx1, by1 = max(x0 - 1, 0), max(y0 - 1, 0), min(x1 + 1, w), min(y1 + 1, h)
        canvas[by0:by1, bx0:bx1] = 0
    for p in t.panels:
        x0, y0, x1, y1 = p.rect
        canvas[y0:y1, x0:x1] = 255
    return canvas


def _put(canvas: np.ndarray, rect, content: np.ndarray) -> None:
    x0, y0, x1, y1 = rect
    canvas[y0:y1, x0:x1] = content


def _fill_panels(canvas, t: Template, skip: set[int], pool, rng) -> dict[int, PanelPlacement]:
    """Fill every panel not in ``skip``; photo panels take the unused pool image of
    nearest aspect ratio, graph panels and leftovers get fake graphs."""
    used: set[int] = set()
    layout = {}
    for i, p in enumerate(t.panels):
        if i in skip:
            continue
        graph_seed = int(rng.integers(2**63))
        choice = None
        if p.kind == "photo":
            free = [k for k in range(len(pool)) if k not in used]
            if free:
                choice = min(free, key=lambda k: (_log_ratio(pool[k][1].shape[1] / pool[k][1].shape[0], p.aspect), k))
        if choice is None:
            if p.width >= 32 and p.height >= 32:
                _put(canvas, p.rect, generate_fake_graph(p.size, graph_seed))
            layout[i] = PanelPlacement(p.rect, "graph", None)
        else:
            used.add(choice)
            ref, img = pool[choice]
            _put(canvas, p.rect, resize_raster(img, p.size))
            layout[i] = PanelPlacement(p.rect, "filler", ref)
    return layout


def _finish(canvas, gt, gt2, t, layout, verbosity, rng_seed, params) -> CompoundFigure:
    placements = [layout[i] for i in range(len(t.panels))]
    fig = CompoundFigure(canvas, gt, placements, [], 0, gt2, t.name, params)
    if verbosity:
        fig = add_indicative_letters(fig, verbosity, rng_seed)
    return fig


_EXCLUDED_INTRA = ("splicing", "overlap")


def build_compound_intra(templates: Sequence[Template], source, objects, forgery,
                         fill_pool=(), verbosity: int = 0, rng_seed: int = 0,
                         ranges: forge.ParameterRanges | None = None, tol: float = DEFAULT_TOL,
                         source_ref: str | None = None) -> CompoundFigure:
    """One forged panel inside an otherwise pristine compound figure.

    ``forgery`` is a registered forgery name or a callable
    ``fn(image, objects, seed, ranges) -> ForgeryOutput``.
    """
    if isinstance(forgery, str):
        if forgery in _EXCLUDED_INTRA:
            raise ForgeryError(f"{forgery} needs more than one image and cannot be intra-panel")
        name, recipe = forgery, forge.get_forgery(forgery)
    else:
        name, recipe = getattr(forgery, "__name__", "custom"), forgery
    ranges = ranges or forge.ParameterRanges()
    src = raster.to_rgb(source)
    aspect = src.shape[1] / src.shape[0]
    rng = np.random.default_rng(rng_seed)
    fitting = [t for t in templates if _fits(t, aspect, tol)]
    if not fitting:
        select_template(templates, aspect, tol)  # raises the canonical error
    t, pi = select_template([fitting[int(rng.integers(len(fitting)))]], aspect, tol)
    out = recipe(src, objects, int(rng.integers(2**63)), ranges)

    panel = t.panels[pi]
    w, h = t.canvas
    canvas = _blank_canvas(t)
    _put(canvas, panel.rect, resize_raster(out.image, panel.size))
    gt = np.zeros((h, w), np.int32)
    _put(gt, panel.rect, resize_labels(out.gt, panel.size))
    gt2 = None
    if out.gt_secondary is not None:
        gt2 = np.zeros((h, w), np.int32)
        _put(gt2, panel.rect, resize_labels(out.gt_secondary, panel.size))
    layout = _fill_panels(canvas, t, {pi}, _normalize_pool(fill_pool), rng)
    layout[pi] = PanelPlacement(panel.rect, "forged", source_ref)
    params = {"forgery": name, "forged_panel": pi, "forgery_params": out.params, "modality": out.modality}
    return _finish(canvas, gt, gt2, t, layout, verbosity, int(rng.integers(2**63)), params)


def _apart(a, b) -> bool:
    # at least one gutter pixel so the two marked panels stay separate components
    return not _intersects((a[0] - 1, a[1] - 1, a[2] + 1, a[3] + 1), b)


def _panel_pairs(t: Template, need) -> list[tuple[int, int]]:
    photos = [i for i, p in enumerate(t.panels) if p.kind == "photo"]
    return [(i, j) for i in photos for j in photos
            if i != j and _apart(t.panels[i].rect, t.panels[j].rect) and need(t.panels[i], t.panels[j])]


def _pick_pair(templates, rng, need):
    options = [(t, pair) for t in templates for pair in _panel_pairs(t, need)]
    if not options:
        raise TemplateError("no template with two compatible photo panels")
    return options[int(rng.integers(len(options)))]


def _duplicate_panel(content: np.ndarray, sub: str, post, rng, ranges) -> tuple[np.ndarray, dict]:
    info: dict = {}
    if sub == "flip":
        out = content[:, ::-1]
    elif sub == "rotation90":
        out = np.rot90(content, 1)
    elif sub == "rotation180":
        out = np.rot90(content, 2)
    elif sub == "flip+rotation90":
        out = np.rot90(content[:, ::-1], 1)
    else:
        out = content
    out = np.ascontiguousarray(out)
    if sub == "retouching" and post is None:
        if rng.random() < 0.5:
            post = forge.RetouchSpec("blur", sigma=float(rng.uniform(*ranges.sigma)))
        else:
            post = forge.RetouchSpec("contrast", gain=float(rng.uniform(*ranges.gain)), bias=float(rng.uniform(*ranges.bias)))
    if post is not None:
        out = forge.apply_retouch(out, np.ones(out.shape[:2], bool), post)
        info["post"] = post.to_dict()
    return out, info


def build_compound_inter(templates: Sequence[Template], sources, mode: str, post: forge.RetouchSpec | None = None,
                         verbosity: int = 0, rng_seed: int = 0, fill_pool=(), submodality: str | None = None,
                         ranges: forge.ParameterRanges | None = None, source_refs: Sequence[str] = ()) -> CompoundFigure:
    """A duplication spanning two panels.

    ``sources`` holds ``(image, objects)`` pairs: one for ``panel_duplication``
    and ``overlap``; donor then host for ``splicing``. Objects may be ``None``
    where unused. Both involved panels are marked with ID 1.
    """
    if mode not in INTER_MODES:
        raise ValueError(f"unknown inter-panel mode {mode!r}")
    ranges = ranges or forge.ParameterRanges()
    rng = np.random.default_rng(rng_seed)
    refs = list(source_refs) + [None] * 2
    img0 = raster.to_rgb(sources[0][0])
    params: dict = {"mode": mode}

    if mode == "panel_duplication":
        sub = submodality or PANEL_DUPLICATION_SUBMODALITIES[int(rng.integers(len(PANEL_DUPLICATION_SUBMODALITIES)))]
        if sub not in PANEL_DUPLICATION_SUBMODALITIES:
            raise ValueError(f"unknown panel duplication {sub!r}")
        turned = "rotation90" in sub
        t, (a, b) = _pick_pair(templates, rng,
                               lambda p, q: q.size == ((p.height, p.width) if turned else p.size))
        pa, pb = t.panels[a], t.panels[b]
        content_a = resize_raster(img0, pa.size)
        content_b, info = _duplicate_panel(content_a, sub, post, rng, ranges)
        params.update(submodality=sub, **info)
        gt_parts = [(pa, np.ones((pa.height, pa.width), np.int32)), (pb, np.ones((pb.height, pb.width), np.int32))]
    elif mode == "overlap":
        t, (a, b) = _pick_pair(templates, rng, lambda p, q: q.size == p.size)
        pa, pb = t.panels[a], t.panels[b]
        H, W = img0.shape[:2]
        cw = max(1, math.floor(0.7 * min(W, H * pa.aspect)))
        ch = max(1, round(cw / pa.aspect))
        pair = forge.overlap_split(img0, (cw, min(ch, H)), float(rng.uniform(0.3, 0.7)), post, int(rng.integers(2**63)))
        content_a, content_b = resize_raster(pair.image_a, pa.size), resize_raster(pair.image_b, pb.size)
        params.update(submodality="overlap", **pair.params)
        gt_parts = [(pa, resize_labels(pair.gt_a, pa.size)), (pb, resize_labels(pair.gt_b, pb.size))]
    else:
        if len(sources) < 2:
            raise ValueError("splicing needs a donor and a host source")
        t, (a, b) = _pick_pair(templates, rng, lambda p, q: True)
        pa, pb = t.panels[a], t.panels[b]
        donor_objs = resize_labels(raster.as_label_map(sources[0][1]), pa.size)
        host = resize_raster(raster.to_rgb(sources[1][0]), pb.size)
        host_objs = resize_labels(raster.as_label_map(sources[1][1]), pb.size)
        content_a = resize_raster(img0, pa.size)
        ids = np.unique(donor_objs[donor_objs > 0])
        out = None
        for oid in rng.permutation(ids):
            try:
                out = forge.splice(host, host_objs, content_a, donor_objs, int(oid), int(rng.integers(2**63)),
                                   ranges.search_stride)
                break
            except ForgeryError:
                continue
        if out is None:
            raise ForgeryError("no donor object fits the host panel background")
        content_b = out.image
        params.update(submodality="splicing", **out.params)
        gt_parts = [(pa, (donor_objs == out.params["donor_id"]).astype(np.int32)), (pb, out.gt)]

    w, h = t.canvas
    canvas = _blank_canvas(t)
    _put(canvas, pa.rect, content_a)
    _put(canvas, pb.rect, content_b)
    gt = np.zeros((h, w), np.int32)
    for p, part in gt_parts:
        _put(gt, p.rect, part)
    layout = _fill_panels(canvas, t, {a, b}, _normalize_pool(fill_pool), rng)
    layout[a] = PanelPlacement(pa.rect, "forged", refs[0])
    layout[b] = PanelPlacement(pb.rect, "forged", refs[1] if mode == "splicing" else refs[0])
    params.update(panels=[a, b])
    return _finish(canvas, gt, None, t, layout, verbosity, int(rng.integers(2**63)), params)

