"""Precision-at-K evaluation over labeled corpora.

Queries are sketch JSON files carrying their positive category; labels map
image ids to categories. Per-category results aggregate the best, worst and
average precision among that category's queries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EngineConfig
from .errors import EmptyQueryError, InvalidInputError
from .index import ChainTree
from .model import normalize_frame
from .retrieval import retrieve, sketch_to_chains


@dataclass(frozen=True)
class SketchFile:
    name: str
    category: str
    strokes: list
    frame: tuple[float, float]


def load_sketch_file(path: str | Path) -> SketchFile:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    for key in ("strokes", "frame"):
        if key not in data:
            raise InvalidInputError(f"sketch file {path} missing {key!r}")
    return SketchFile(
        name=path.stem,
        category=str(data.get("category", path.stem)),
        strokes=data["strokes"],
        frame=tuple(data["frame"]),
    )


def eval_precision(
    tree: ChainTree,
    queries: list[SketchFile],
    labels: dict[str, str],
    k_levels: list[int],
    cfg: EngineConfig | None = None,
    target_candidates: int | None = None,
) -> dict:
    """Per-query and per-category precision@K report.

    Retrieved images without a label count as negatives and are listed under
    ``warnings``. Queries whose sketch is too simple score 0 at every level.
    """
    cfg = cfg or tree.config
    k_levels = sorted(k_levels)
    per_query = []
    unlabeled: set[str] = set()
    for q in queries:
        strokes = [normalize_frame(s, q.frame) for s in q.strokes]
        precisions = {}
        try:
            sketch = sketch_to_chains(strokes, cfg)
            ranked = retrieve(
                tree, sketch, k=max(k_levels), target_candidates=target_candidates, cfg=cfg
            )
        except EmptyQueryError as exc:
            per_query.append(
                {
                    "query": q.name,
                    "category": q.category,
                    "error": exc.code,
                    "precision": {k: 0.0 for k in k_levels},
                }
            )
            continue
        hits = []
        for r in ranked:
            label = labels.get(r.image_id)
            if label is None:
                unlabeled.add(r.image_id)
            hits.append(label == q.category)
        for k in k_levels:
            precisions[k] = sum(hits[:k]) / k
        per_query.append(
            {"query": q.name, "category": q.category, "precision": precisions}
        )

    return {
        "k_levels": k_levels,
        "queries": per_query,
        "categories": aggregate_by_category(per_query, k_levels),
        "overall": {
            str(k): float(np.mean([q["precision"][k] for q in per_query]))
            if per_query
            else 0.0
            for k in k_levels
        },
        "warnings": sorted(unlabeled),
    }


def aggregate_by_category(per_query: list[dict], k_levels: list[int]) -> dict:
    """Best/worst/average precision per category and rank level."""
    categories = {}
    for category in sorted({q["category"] for q in per_query}):
        rows = [q["precision"] for q in per_query if q["category"] == category]
        categories[category] = {
            str(k): {
                "best": max(r[k] for r in rows),
                "worst": min(r[k] for r in rows),
                "average": float(np.mean([r[k] for r in rows])),
            }
            for k in k_levels
        }
    return categories


def format_report(report: dict) -> str:
    """Plain-text table: one category per row, B/W/A columns per K."""
    ks = report["k_levels"]
    header = ["category"] + [f"@{k} {tag}" for k in ks for tag in ("B", "W", "A")]
    rows = [header]
    for category, stats in report["categories"].items():
        row = [category]
        for k in ks:
            s = stats[str(k)]
            row += [f"{s['best']:.3f}", f"{s['worst']:.3f}", f"{s['average']:.3f}"]
        rows.append(row)
    rows.append(
        ["overall"]
        + [v for k in ks for v in ("", "", f"{report['overall'][str(k)]:.3f}")]
    )
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    if report["warnings"]:
        lines.append(f"unlabeled images treated as negatives: {len(report['warnings'])}")
    return "\n".join(lines)
