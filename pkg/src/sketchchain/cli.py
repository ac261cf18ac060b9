"""Command-line surface: extract, index build, query, eval, serve.

The parameter ledger comes from defaults, overridden by the file named in
``SKETCHCHAIN_CONFIG``, overridden again by explicit flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EngineConfig
from .corpus import ingest_corpus, write_chain_jsonl
from .errors import EmptyQueryError, SketchChainError
from .evaluate import eval_precision, format_report, load_sketch_file
from .extraction import extract_image_chains, trace_edge_contours
from .index import build_tree
from .model import normalize_frame
from .retrieval import retrieve, sketch_to_chains
from .serialize import load_index, save_index
from .service import create_app


def _cmd_extract(args, cfg: EngineConfig) -> int:
    chains = []
    if args.input:
        with open(args.input, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    chains.extend(
                        extract_image_chains(
                            image_id=str(rec["image_id"]),
                            polylines=rec.get("polylines", []),
                            regions=rec.get("regions", []),
                            original_size=tuple(rec["original_size"]),
                            cfg=cfg,
                        )
                    )
                except (KeyError, ValueError, TypeError, SketchChainError) as exc:
                    print(f"line {lineno}: skipped ({exc})", file=sys.stderr)
    for mask_path in args.mask or []:
        from PIL import Image
        import numpy as np

        img = np.asarray(Image.open(mask_path).convert("L"))
        polylines = trace_edge_contours(img)
        chains.extend(
            extract_image_chains(
                image_id=Path(mask_path).stem,
                polylines=polylines,
                regions=[],
                original_size=(img.shape[1], img.shape[0]),
                cfg=cfg,
            )
        )
    count = write_chain_jsonl(chains, args.output)
    print(f"wrote {count} chains to {args.output}")
    return 0


def _cmd_index_build(args, cfg: EngineConfig) -> int:
    if args.branching is not None:
        cfg = cfg.replace(branching=args.branching)
    if args.max_leaf is not None:
        cfg = cfg.replace(max_leaf=args.max_leaf)
    if args.th_ms is not None:
        cfg = cfg.replace(multi_assign_ratio=args.th_ms)
    store, report = ingest_corpus(args.corpus, cfg)
    print(report.summary(), file=sys.stderr)
    for lineno, reason in report.skipped[:20]:
        print(f"  line {lineno}: {reason}", file=sys.stderr)
    tree = build_tree(store, cfg, seed=args.seed)
    save_index(tree, args.output)
    stats = tree.stats()
    print(f"index written to {args.output}: {stats}")
    return 0


def _cmd_query(args, cfg: EngineConfig) -> int:
    tree = load_index(args.index)
    data = json.loads(Path(args.sketch).read_text(encoding="utf-8"))
    strokes = [normalize_frame(s, tuple(data["frame"])) for s in data["strokes"]]
    try:
        sketch = sketch_to_chains(strokes, cfg)
    except EmptyQueryError as exc:
        print(json.dumps({"error": exc.code, "detail": str(exc)}))
        return 2
    ranked = retrieve(tree, sketch, k=args.k, target_candidates=args.candidates, cfg=cfg)
    out = [
        {
            "image_id": r.image_id,
            "score": r.score,
            "pairs": [
                {
                    "sketch_chain_id": p.sketch_chain_id,
                    "image_chain_id": p.image_chain_id,
                    "cs": p.match.score,
                    "gc": gc,
                }
                for p, gc in zip(r.pairs, r.consistencies)
            ],
        }
        for r in ranked
    ]
    print(json.dumps({"results": out}, indent=1))
    return 0


def _cmd_eval(args, cfg: EngineConfig) -> int:
    tree = load_index(args.index)
    paths = sorted(Path(args.queries).glob("*.json")) if Path(args.queries).is_dir() else [
        Path(p) for p in sorted(args.queries.split(","))
    ]
    if not paths:
        print("no query sketches found", file=sys.stderr)
        return 2
    queries = [load_sketch_file(p) for p in paths]
    labels = json.loads(Path(args.labels).read_text(encoding="utf-8"))
    k_levels = [int(k) for k in args.at.split(",")]
    report = eval_precision(
        tree, queries, labels, k_levels, cfg, target_candidates=args.candidates
    )
    print(format_report(report))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1), encoding="utf-8")
        print(f"report written to {args.report}", file=sys.stderr)
    return 0


def _cmd_serve(args, cfg: EngineConfig) -> int:
    import uvicorn

    tree = load_index(args.index)
    app = create_app(tree, cfg)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchchain",
        description="Sketch-based shape retrieval over contour chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="polylines/regions/masks -> chain JSONL")
    p.add_argument("--input", help="raw JSONL: {image_id, original_size, polylines, regions}")
    p.add_argument("--mask", action="append", help="8-bit edge mask image (repeatable)")
    p.add_argument("--output", required=True)

    p = sub.add_parser("index", help="index operations")
    isub = p.add_subparsers(dest="index_command", required=True)
    b = isub.add_parser("build", help="chain JSONL -> index file")
    b.add_argument("--corpus", required=True)
    b.add_argument("--output", required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--branching", type=int)
    b.add_argument("--max-leaf", type=int)
    b.add_argument("--th-ms", type=float)

    p = sub.add_parser("query", help="run one sketch against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--sketch", required=True, help="JSON: {strokes, frame}")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--candidates", type=int)

    p = sub.add_parser("eval", help="precision@K over labeled sketches")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True, help="directory of sketch JSON files")
    p.add_argument("--labels", required=True, help="JSON object image_id -> category")
    p.add_argument("--at", default="5,10,25,50")
    p.add_argument("--candidates", type=int)
    p.add_argument("--report", help="also write the JSON report here")

    p = sub.add_parser("serve", help="HTTP query service")
    p.add_argument("--index", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = EngineConfig.from_env()
    except (ValueError, OSError) as exc:
        print(f"bad SKETCHCHAIN_CONFIG: {exc}", file=sys.stderr)
        return 2
    handlers = {
        "extract": _cmd_extract,
        "index": _cmd_index_build,
        "query": _cmd_query,
        "eval": _cmd_eval,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args, cfg)
    except SketchChainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
