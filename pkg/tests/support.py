"""Shared test helpers: random chain generation, transforms, the DP oracle."""

from __future__ import annotations

import itertools

import numpy as np

from sketchchain.matching import MatchParams, joint_score
from sketchchain.model import ChainDescriptor


def random_chain_points(
    rng: np.random.Generator,
    n_joints: int,
    step_range: tuple[float, float] = (2.0, 12.0),
    max_turn: float = 2.2,
) -> np.ndarray:
    """Random open polyline with no degenerate segments or straight-line folds.

    Turns stay within ``max_turn`` of straight, keeping every turn angle well
    away from the 0/2pi branch cut so tolerance-based comparisons are stable.
    """
    heading = rng.uniform(0.0, 2.0 * np.pi)
    headings = heading + np.concatenate([[0.0], np.cumsum(rng.uniform(-max_turn, max_turn, n_joints - 2))])
    steps = rng.uniform(*step_range, n_joints - 1)
    deltas = np.stack([steps * np.cos(headings), steps * np.sin(headings)], axis=1)
    pts = np.vstack([[0.0, 0.0], np.cumsum(deltas, axis=0)])
    pts += rng.uniform(20.0, 200.0, 2)
    return pts


def similarity_transform(
    pts: np.ndarray, angle: float, scale: float, translation: tuple[float, float]
) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]]) * scale
    return pts @ rot.T + np.asarray(translation)


def random_similarity(rng: np.random.Generator):
    """Rotation U[0, 2pi), scale U[0.2, 5], translation anywhere in frame."""
    return (
        rng.uniform(0.0, 2.0 * np.pi),
        rng.uniform(0.2, 5.0),
        tuple(rng.uniform(0.0, 256.0, 2)),
    )


def oracle_alignment_score(
    a: ChainDescriptor,
    b: ChainDescriptor,
    alpha_a: float,
    alpha_b: float,
    params: MatchParams = MatchParams(),
) -> float:
    """Exhaustive best almost-contiguous matching score between two descriptors.

    Enumerates every ordered matching (each a pair of equal-size index
    combinations, paired in order). For a fixed matching the best enclosing
    span is exactly the span of the matched joints, since skip weights are
    strictly positive, so unmatched joints inside that span are the skips.
    Independent of the DP recurrence.
    """
    la, lb = len(a), len(b)
    scores = np.array(
        [
            [
                joint_score(
                    a.length_ratios[i], a.turn_angles[i],
                    b.length_ratios[j], b.turn_angles[j],
                    params,
                )
                for j in range(lb)
            ]
            for i in range(la)
        ]
    )
    pref_a = np.concatenate([[0.0], np.cumsum(a.skip_weights)])
    pref_b = np.concatenate([[0.0], np.cumsum(b.skip_weights)])
    best = 0.0
    for size in range(1, min(la, lb) + 1):
        combs_a = np.array(list(itertools.combinations(range(la), size)))
        combs_b = np.array(list(itertools.combinations(range(lb), size)))
        matched = scores[combs_a[:, None, :], combs_b[None, :, :]].sum(axis=2)
        span_a = pref_a[combs_a[:, -1] + 1] - pref_a[combs_a[:, 0]]
        span_b = pref_b[combs_b[:, -1] + 1] - pref_b[combs_b[:, 0]]
        skip_a = (span_a - a.skip_weights[combs_a].sum(axis=1)) * alpha_a
        skip_b = (span_b - b.skip_weights[combs_b].sum(axis=1)) * alpha_b
        total = matched - skip_a[:, None] - skip_b[None, :]
        best = max(best, float(total.max()))
    return best
