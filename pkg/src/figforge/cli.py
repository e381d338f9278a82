"""Command-line entry point: ``figforge {ingest,generate,verify,evaluate,radar}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, annotate, compound, dataset, metrics, radar

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("figforge")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _cmd_ingest(args) -> int:
    coll = dataset.ingest(args.src_dir, args.out, args.masks, args.auto_mask, args.kind)
    unmasked = sum(e.mask is None for e in coll.entries)
    print(f"{len(coll.entries)} sources indexed, {unmasked} without mask, {len(coll.errors)} rejected")
    for err in coll.errors:
        print(f"rejected {err['path']}: {err['reason']}")
    return EXIT_OK


def _load_templates(path):
    if path is None:
        return []
    p = Path(path)
    if p.is_dir():
        templates = compound.load_templates(p)
        templates += [compound.template_from_mask(m) for m in sorted(p.glob("*.png"))]
        return templates
    if p.suffix.lower() == ".png":
        return [compound.template_from_mask(p)]
    return [compound.load_template(p)]


def _cmd_generate(args) -> int:
    if args.config:
        cfg = dataset.GenerationConfig.load(args.config)
    else:
        cfg = dataset.table_ratio_config(args.scale)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    coll = dataset.SourceCollection.load(args.collection)
    templates = _load_templates(args.templates)
    manifest = dataset.generate(coll, templates, cfg, args.out, jobs=args.jobs, previews=args.previews)
    print(f"{len(manifest.entries)} figures written to {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    violations = dataset.verify(args.dataset)
    for v in violations:
        print(v)
    print(f"{len(violations)} violations")
    return EXIT_INVALID if violations else EXIT_OK


def _cmd_evaluate(args) -> int:
    mode = "idless" if args.idless else "id"
    records = dataset.evaluate_dataset(args.dataset, args.detections, mode, args.threshold, args.all, args.split,
                                       args.jobs)
    if not records:
        print("no applicable figures to score", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = metrics.aggregate_scores(records, metrics.DEFAULT_GROUP, args.pooled)
    metrics.write_score_csv(rows, out / "scores.csv")
    metrics.write_score_json(rows, out / "scores.json")
    annotate.write_json(out / "per_figure.json", [r.to_dict() for r in records])
    flagged = [r for r in records if r.flags]
    for r in flagged:
        print(f"{r.figure_id}: {', '.join(r.flags)}")
    print(f"{len(records)} figures scored, {len(flagged)} flagged, {len(rows)} groups")
    return EXIT_OK


def _cmd_radar(args) -> int:
    radar.radar(args.scores, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="figforge", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="index source images and object masks")
    s.add_argument("src_dir")
    s.add_argument("--masks", help="directory of label-map masks matched by file stem")
    s.add_argument("--out", required=True, help="collection JSON to write")
    s.add_argument("--auto-mask", action="store_true", help="segment unmasked images with Otsu thresholding")
    s.add_argument("--kind", default="other", choices=dataset.SOURCE_KINDS)
    s.set_defaults(func=_cmd_ingest)

    s = sub.add_parser("generate", help="generate a forgery dataset")
    s.add_argument("--collection", required=True)
    s.add_argument("--templates", help="template JSON/PNG file or a directory of them")
    s.add_argument("--config", help="generation config JSON (default: table ratios at --scale)")
    s.add_argument("--scale", type=float, default=0.001, help="ratio-config scale when no --config is given")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--previews", action="store_true", help="also write colourised ground-truth previews")
    s.set_defaults(func=_cmd_generate)

    s = sub.add_parser("verify", help="check a generated dataset")
    s.add_argument("dataset")
    s.set_defaults(func=_cmd_verify)

    s = sub.add_parser("evaluate", help="score detection maps against a dataset")
    s.add_argument("dataset")
    s.add_argument("detections", help="directory holding <figure_id>.png detection maps")
    s.add_argument("--out", required=True)
    s.add_argument("--idless", action="store_true", help="ignore region IDs (all detections get ID 1)")
    s.add_argument("--threshold", type=int, default=metrics.DEFAULT_THRESHOLD)
    s.add_argument("--pooled", action="store_true", help="sum counts per group before scoring")
    s.add_argument("--all", action="store_true", help="also score figures without a duplicated region")
    s.add_argument("--split", choices=annotate.SPLITS)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("radar", help="plot score CSVs as an SVG radar chart")
    s.add_argument("scores", nargs="+")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_radar)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
