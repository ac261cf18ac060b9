"""Pairwise chain matching.

Two descriptors are aligned by dynamic programming over their joint
sequences: matched joints contribute a similarity in (0, 1] built from the
closeness of their segment-length ratios and turn angles, skipped joints
subtract a sharpness- and length-weighted penalty, and the best
almost-contiguous span wins. The winning alignment is then weighted by how
consistently the matched joints are arranged around their centroid, which
suppresses matches that only agree locally.

Matching runs against all four flip variants of the second chain and keeps
the best, so reversed or mirrored shapes score as well as the original.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .config import EngineConfig
from .descriptor import variant_feature_stack
from .errors import InvalidInputError
from .model import ChainDescriptor, FlipVariant, MatchResult


@dataclass(frozen=True)
class MatchParams:
    """Constants of the joint-similarity and consistency scores."""

    length_ratio_penalty: float = 0.5
    angle_penalty: float = 2.0
    sketch_skip_cost: float = 0.07
    image_skip_cost: float = 0.03
    angle_consistency_penalty: float = 2.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise InvalidInputError(f"{name} must be strictly positive, got {value}")

    @classmethod
    def from_config(cls, cfg: EngineConfig) -> "MatchParams":
        return cls(
            length_ratio_penalty=cfg.length_ratio_penalty,
            angle_penalty=cfg.angle_penalty,
            sketch_skip_cost=cfg.sketch_skip_cost,
            image_skip_cost=cfg.image_skip_cost,
            angle_consistency_penalty=cfg.angle_consistency_penalty,
        )


DEFAULT_PARAMS = MatchParams()


class Alignment(NamedTuple):
    """Matched pairs and skipped joints of one DP alignment."""

    pairs: tuple[tuple[int, int], ...]
    skipped_a: tuple[int, ...]
    skipped_b: tuple[int, ...]


def ratio_similarity(a: float, b: float) -> float:
    """Relative similarity of two positive ratios: min(a/b, b/a), in (0, 1]."""
    if not (a > 0 and b > 0):
        raise InvalidInputError(f"ratios must be positive, got ({a}, {b})")
    return min(a / b, b / a)


def joint_score(
    ratio_a: float,
    angle_a: float,
    ratio_b: float,
    angle_b: float,
    params: MatchParams = DEFAULT_PARAMS,
) -> float:
    """Similarity of two joints from their feature pairs, in (0, 1].

    The angle difference is the minimal circular difference in [0, pi];
    angles just above 0 and just below 2*pi describe nearly the same bend.
    """
    s_ratio = math.exp(-params.length_ratio_penalty * (1.0 - ratio_similarity(ratio_a, ratio_b)))
    d = abs(angle_a - angle_b)
    if d > math.pi:
        d = 2.0 * math.pi - d
    s_angle = math.exp(-params.angle_penalty * d)
    return s_ratio * s_angle


def dp_match(
    a: ChainDescriptor,
    b: ChainDescriptor,
    alpha_a: float,
    alpha_b: float,
    params: MatchParams = DEFAULT_PARAMS,
) -> tuple[float, Alignment]:
    """Best almost-contiguous alignment of ``a`` against ``b`` as given.

    Returns the alignment score (max over all table cells, never negative)
    and the backtracked alignment from the first row-major maximum cell.
    Ties in the recurrence resolve diagonal, then skip-in-a, then skip-in-b.
    """
    la, lb = len(a), len(b)
    table = np.empty((la + 1, lb + 1))
    dirs = np.empty((la + 1, lb + 1), dtype=np.uint8)
    score, bi, bj = _kernels.dp_fill(
        a.length_ratios, a.turn_angles, a.skip_weights,
        b.length_ratios, b.turn_angles, b.skip_weights,
        alpha_a, alpha_b,
        params.length_ratio_penalty, params.angle_penalty,
        table, dirs,
    )
    pairs = np.empty((min(la, lb), 2), dtype=np.int64)
    skip_a = np.empty(la, dtype=np.int64)
    skip_b = np.empty(lb, dtype=np.int64)
    npairs, nskip_a, nskip_b = _kernels.backtrack(table, dirs, bi, bj, pairs, skip_a, skip_b)
    alignment = Alignment(
        pairs=tuple((int(pairs[t, 0]), int(pairs[t, 1])) for t in range(npairs)),
        skipped_a=tuple(int(skip_a[t]) for t in range(nskip_a)),
        skipped_b=tuple(int(skip_b[t]) for t in range(nskip_b)),
    )
    return float(score), alignment


def global_angle_consistency(
    a: ChainDescriptor,
    b: ChainDescriptor,
    pairs: Sequence[tuple[int, int]],
    lam: float = DEFAULT_PARAMS.angle_consistency_penalty,
) -> float:
    """Agreement of the angles matched joints subtend at their centroid.

    One matched pair (or none) defines no angles and scores 1.
    """
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return float(_kernels.angle_consistency(a.points, b.points, arr, len(arr), lam))


def chain_similarity(
    a: ChainDescriptor,
    b: ChainDescriptor,
    a_is_sketch: bool = False,
    params: MatchParams = DEFAULT_PARAMS,
) -> MatchResult:
    """Full similarity of two chains: best flip variant, consistency-weighted.

    ``a`` takes the sketch-side skip cost when ``a_is_sketch`` (sketch chains
    are cleaner, so their skips cost more); ``b`` is always the database
    side. Pair indices refer to ``a`` and to the chosen variant of ``b``.
    """
    rb4, tb4, ob4, pb4 = variant_feature_stack(b)
    alpha_a = params.sketch_skip_cost if a_is_sketch else params.image_skip_cost
    var, score, gac, pairs, npairs, skip_a, nskip_a, skip_b, nskip_b = (
        _kernels.match_all_variants(
            a.length_ratios, a.turn_angles, a.skip_weights, a.points,
            rb4, tb4, ob4, pb4,
            alpha_a, params.image_skip_cost,
            params.length_ratio_penalty, params.angle_penalty,
            params.angle_consistency_penalty,
        )
    )
    return MatchResult(
        pairs=tuple((int(pairs[t, 0]), int(pairs[t, 1])) for t in range(npairs)),
        skipped_a=tuple(int(skip_a[t]) for t in range(nskip_a)),
        skipped_b=tuple(int(skip_b[t]) for t in range(nskip_b)),
        alignment_score=float(score),
        angle_consistency=float(gac),
        score=float(gac) * float(score),
        variant_used=FlipVariant(var),
    )


def chain_score(
    a: ChainDescriptor,
    b: ChainDescriptor,
    a_is_sketch: bool = False,
    params: MatchParams = DEFAULT_PARAMS,
) -> float:
    """Like :func:`chain_similarity` but returns only the final score.

    Used on the hot paths (index construction, candidate search) where the
    alignment itself is not needed.
    """
    rb4, tb4, ob4, pb4 = variant_feature_stack(b)
    alpha_a = params.sketch_skip_cost if a_is_sketch else params.image_skip_cost
    return float(
        _kernels.score_all_variants(
            a.length_ratios, a.turn_angles, a.skip_weights, a.points,
            rb4, tb4, ob4, pb4,
            alpha_a, params.image_skip_cost,
            params.length_ratio_penalty, params.angle_penalty,
            params.angle_consistency_penalty,
        )
    )


def similarity_to_distance(score: float) -> float:
    """Monotone map from a similarity score to a bounded pseudo-distance."""
    return 1.0 / (1.0 + score)


def warm_up() -> None:
    """Force JIT compilation of the matching kernels."""
    from .descriptor import descriptor_from_joints

    pts = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [20.0, 10.0]])
    d = descriptor_from_joints(pts, 0.5)
    chain_similarity(d, d)
    chain_score(d, d)
    dp_match(d, d, 0.07, 0.03)
