"""Procedural shape corpus for experiments and demos.

Generates chains for a few recognizable outline classes (star, mug, bottle,
swan-like) under random similarity transforms with mild joint jitter, plus
random-walk distractor chains. Used by the acceptance experiments and by
``python -m sketchchain.synth`` to produce a demo corpus with labels and
query sketches.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from .config import FRAME_SIZE

_MARGIN = 10.0


def _star() -> np.ndarray:
    pts = []
    for i in range(10):
        radius = 1.0 if i % 2 == 0 else 0.42
        ang = math.pi / 2 + i * math.pi / 5
        pts.append((radius * math.cos(ang), radius * math.sin(ang)))
    return np.array(pts)


_PROTOTYPES: dict[str, np.ndarray] = {
    "star": _star(),
    "mug": np.array(
        [
            (-0.5, 0.6), (-0.5, -0.6), (0.5, -0.6), (0.5, -0.25),
            (0.8, -0.25), (0.8, 0.25), (0.5, 0.25), (0.5, 0.6),
        ]
    ),
    "bottle": np.array(
        [
            (-0.3, -0.8), (0.3, -0.8), (0.3, 0.1), (0.12, 0.35),
            (0.12, 0.8), (-0.12, 0.8), (-0.12, 0.35), (-0.3, 0.1),
        ]
    ),
    "swan": np.array(
        [
            (-0.9, 0.1), (-0.55, -0.3), (0.0, -0.42), (0.55, -0.3),
            (0.75, 0.0), (0.55, 0.15), (0.35, 0.45), (0.42, 0.75),
            (0.25, 0.95), (0.05, 0.8), (0.18, 0.55), (0.1, 0.3),
        ]
    ),
}

SHAPE_CLASSES = tuple(_PROTOTYPES)


def shape_instance(
    cls: str,
    rng: np.random.Generator,
    noise: float = 0.008,
    scale_range: tuple[float, float] = (22.0, 60.0),
) -> np.ndarray:
    """A randomly placed, rotated, scaled and mildly jittered class outline."""
    proto = _PROTOTYPES[cls]
    angle = rng.uniform(0.0, 2.0 * math.pi)
    scale = rng.uniform(*scale_range)
    c, s = math.cos(angle), math.sin(angle)
    pts = proto @ np.array([[c, s], [-s, c]]) * scale
    size = np.ptp(pts, axis=0).max()
    pts = pts + rng.normal(0.0, noise * size, pts.shape)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    shift = np.array(
        [
            rng.uniform(_MARGIN - lo[0], FRAME_SIZE - _MARGIN - hi[0]),
            rng.uniform(_MARGIN - lo[1], FRAME_SIZE - _MARGIN - hi[1]),
        ]
    )
    return pts + shift


def random_walk_chain(
    rng: np.random.Generator,
    n_joints: int,
    step_range: tuple[float, float] = (8.0, 26.0),
    max_turn: float = 2.2,
) -> np.ndarray:
    """Distractor chain: a random open polyline with non-degenerate turns."""
    heading = rng.uniform(0.0, 2.0 * math.pi)
    turns = np.concatenate([[0.0], rng.uniform(-max_turn, max_turn, n_joints - 2)])
    headings = heading + np.cumsum(turns)
    steps = rng.uniform(*step_range, n_joints - 1)
    deltas = np.stack([steps * np.cos(headings), steps * np.sin(headings)], axis=1)
    pts = np.vstack([[0.0, 0.0], np.cumsum(deltas, axis=0)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    pts = (pts - lo) / span * min(FRAME_SIZE - 2 * _MARGIN, span.max()) + _MARGIN
    return pts


def synthetic_records(
    query_class: str,
    n_positives: int,
    n_distractors: int,
    rng: np.random.Generator,
    noise: float = 0.008,
) -> tuple[list[dict], dict[str, str]]:
    """Corpus records (one chain per image) and their category labels.

    Distractors are a mix of the other shape classes and random-walk chains.
    """
    records = []
    labels = {}

    def add(label: str, points: np.ndarray):
        image_id = f"{label}-{len(records):05d}"
        records.append(
            {
                "image_id": image_id,
                "chain_id": "c0",
                "source": "csn",
                "points": [[float(x), float(y)] for x, y in points],
                "original_size": [FRAME_SIZE, FRAME_SIZE],
            }
        )
        labels[image_id] = label

    for _ in range(n_positives):
        add(query_class, shape_instance(query_class, rng, noise))
    others = [c for c in SHAPE_CLASSES if c != query_class]
    n_other = int(n_distractors * 0.6)
    for i in range(n_other):
        cls = others[i % len(others)]
        add(cls, shape_instance(cls, rng, noise))
    for _ in range(n_distractors - n_other):
        add("random", random_walk_chain(rng, int(rng.integers(7, 16))))
    return records, labels


def sketch_for_class(cls: str, rng: np.random.Generator, noise: float = 0.008) -> dict:
    """A single-stroke sketch drawing a fresh instance outline."""
    pts = shape_instance(cls, rng, noise)
    closed = np.vstack([pts, pts[:1]])
    return {
        "category": cls,
        "strokes": [[[float(x), float(y)] for x, y in closed]],
        "frame": [FRAME_SIZE, FRAME_SIZE],
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m sketchchain.synth",
        description="Write a synthetic demo corpus: chains, labels, query sketches.",
    )
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--per-class", type=int, default=40)
    parser.add_argument("--distractors", type=int, default=80)
    parser.add_argument("--queries-per-class", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    records = []
    labels = {}
    for cls in SHAPE_CLASSES:
        recs, labs = synthetic_records(cls, args.per_class, 0, rng)
        records.extend(recs)
        labels.update(labs)
    # unlabeled random chains as background clutter
    for i in range(args.distractors):
        pts = random_walk_chain(rng, int(rng.integers(7, 16)))
        image_id = f"random-{i:05d}"
        records.append(
            {
                "image_id": image_id,
                "chain_id": "c0",
                "source": "csn",
                "points": [[float(x), float(y)] for x, y in pts],
                "original_size": [FRAME_SIZE, FRAME_SIZE],
            }
        )
        labels[image_id] = "random"

    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    (out / "labels.json").write_text(json.dumps(labels, indent=1), encoding="utf-8")
    sketches = out / "sketches"
    sketches.mkdir(exist_ok=True)
    for cls in SHAPE_CLASSES:
        for q in range(args.queries_per_class):
            payload = sketch_for_class(cls, rng)
            (sketches / f"{cls}-{q}.json").write_text(json.dumps(payload), encoding="utf-8")
    print(f"wrote {len(records)} chains, labels, and query sketches under {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
