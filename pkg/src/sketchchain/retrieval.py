"""Query pipeline: sketch strokes to ranked images.

Strokes are resampled, split at turns and assembled into sketch chains the
same way image contours are. Each sketch chain queries the index for
candidate images; candidates then get their full sketch-to-image chain
matching completed, and images are ranked by pairwise geometric consistency
(centroid distances and relative angles of the matched portions) weighting
each chain pair's similarity score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import EngineConfig
from .corpus import ChainStore
from .descriptor import build_descriptor
from .errors import EmptyQueryError
from .extraction import (
    build_joint_graph,
    curvature_split,
    extract_top_chains,
    max_spanning_forest,
    resample_polyline,
)
from .index import ChainTree, search
from .matching import MatchParams, chain_score, chain_similarity
from .model import (
    Chain,
    ChainDescriptor,
    ChainSource,
    FlipVariant,
    ImageRecord,
    MatchResult,
    Point2,
)

_EPS_DISTANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SketchQuery:
    """Chains and descriptors extracted from one drawn sketch."""

    strokes: tuple
    chains: tuple[Chain, ...]
    descriptors: tuple[ChainDescriptor, ...]


@dataclass(frozen=True, eq=False)
class MatchedPair:
    """One sketch chain matched to one image chain, with span geometry.

    Centroids are taken over the matched joints only; matched lengths are the
    polyline lengths of the matched spans. ``image_points`` are in the
    image's own frame (variant indexing already unfolded).
    """

    sketch_chain_id: str
    image_chain_id: str
    match: MatchResult
    sketch_points: np.ndarray
    image_points: np.ndarray
    sketch_centroid: np.ndarray
    image_centroid: np.ndarray
    matched_length_sketch: float
    matched_length_image: float
    mirrored: bool


@dataclass(frozen=True, eq=False)
class RankedRetrieval:
    image_id: str
    pairs: tuple[MatchedPair, ...]
    consistencies: tuple[float, ...]
    score: float


def sketch_to_chains(
    strokes: Sequence[np.ndarray], cfg: EngineConfig | None = None
) -> SketchQuery:
    """Turn drawn strokes (normalized frame) into sketch chains.

    Strokes are resampled to a uniform step, split at turns, and their
    endpoints merged so multi-stroke outlines join into single chains. Chains
    with fewer interior joints than the simplicity threshold are dropped;
    if nothing survives an :class:`EmptyQueryError` explains why.
    """
    cfg = cfg or EngineConfig()
    usable = []
    for stroke in strokes:
        pts = np.asarray(stroke, dtype=np.float64).reshape(-1, 2)
        keep = np.ones(len(pts), dtype=bool)
        if len(pts) > 1:
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        if len(pts) >= 3:
            usable.append(pts)
    if not usable:
        raise EmptyQueryError("no stroke has 3 or more points", code="no_usable_strokes")

    segments = []
    for stroke in usable:
        resampled = resample_polyline(stroke, cfg.resample_step)
        segments.extend(
            curvature_split(
                resampled, cfg.curvature_window, cfg.curvature_sigma, cfg.split_threshold
            )
        )
    graph = build_joint_graph(segments, cfg.merge_radius)
    forest = max_spanning_forest(graph)
    scored = extract_top_chains(
        forest,
        graph,
        n_chains=cfg.max_chains_per_image,
        overlap_threshold=cfg.chain_overlap_threshold,
        smoothness_bonus=cfg.smoothness_bonus,
        smoothness_falloff=cfg.smoothness_falloff,
        image_id="sketch",
        source=ChainSource.SKETCH,
    )
    chains = [
        sc.chain for sc in scored if len(sc.chain.joints) - 2 >= cfg.min_sketch_joints
    ]
    if not chains:
        raise EmptyQueryError(
            f"every sketch chain has fewer than {cfg.min_sketch_joints} interior joints",
            code="all_chains_too_simple",
        )
    descriptors = tuple(build_descriptor(c, cfg.skip_length_weight) for c in chains)
    return SketchQuery(
        strokes=tuple(map(tuple, (map(tuple, s) for s in usable))),
        chains=tuple(chains),
        descriptors=descriptors,
    )


def _span_length(joints: np.ndarray, first_interior: int, last_interior: int) -> float:
    """Polyline length between two interior joints of a chain."""
    lo = first_interior + 1
    hi = last_interior + 1
    if hi <= lo:
        return 0.0
    seg = joints[lo + 1 : hi + 1] - joints[lo:hi]
    return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


def build_matched_pair(
    sketch_chain_id: str,
    image_chain_id: str,
    sketch_desc: ChainDescriptor,
    image_desc: ChainDescriptor,
    match: MatchResult,
) -> MatchedPair:
    """Resolve a match's variant indexing into image-frame geometry."""
    a_idx = np.array([p[0] for p in match.pairs], dtype=np.int64)
    b_idx = np.array([p[1] for p in match.pairs], dtype=np.int64)
    if match.variant_used & FlipVariant.REVERSED:
        b_idx = (len(image_desc) - 1) - b_idx
    sketch_points = sketch_desc.points[a_idx]
    image_points = image_desc.points[b_idx]
    return MatchedPair(
        sketch_chain_id=sketch_chain_id,
        image_chain_id=image_chain_id,
        match=match,
        sketch_points=sketch_points,
        image_points=image_points,
        sketch_centroid=sketch_points.mean(axis=0),
        image_centroid=image_points.mean(axis=0),
        matched_length_sketch=_span_length(
            sketch_desc.joints, int(a_idx.min()), int(a_idx.max())
        ),
        matched_length_image=_span_length(
            image_desc.joints, int(b_idx.min()), int(b_idx.max())
        ),
        mirrored=bool(match.variant_used & FlipVariant.MIRRORED),
    )


def complete_pair_matching(
    sketch: SketchQuery,
    image: ImageRecord,
    seeded: Sequence[tuple[str, str]] = (),
    cfg: EngineConfig | None = None,
) -> list[MatchedPair]:
    """Full sketch-to-image chain pairing for a shortlisted image.

    Index hits (``seeded``) got the image shortlisted, but every pair is
    scored properly here since leaf hits only carry medoid proxies. Pairs
    below the score floor are dropped, then sketch chains take image chains
    one-to-one greedily by descending score.
    """
    cfg = cfg or EngineConfig()
    chain_ids = [c.chain_id for c in image.chains]
    return match_image_chains(
        sketch, chain_ids, list(image.descriptors), cfg, MatchParams.from_config(cfg)
    )


def match_image_chains(
    sketch: SketchQuery,
    image_chain_ids: Sequence[str],
    image_descriptors: Sequence[ChainDescriptor],
    cfg: EngineConfig,
    params: MatchParams,
) -> list[MatchedPair]:
    """Pairing core over raw (chain id, descriptor) data; see
    :func:`complete_pair_matching`. Alignments are materialized only for the
    pairs the greedy assignment keeps."""
    scored = []
    for si, sdesc in enumerate(sketch.descriptors):
        for ii, idesc in enumerate(image_descriptors):
            score = chain_score(sdesc, idesc, a_is_sketch=True, params=params)
            if score >= cfg.min_pair_score:
                scored.append((score, si, ii))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    taken_sketch: set[int] = set()
    taken_image: set[int] = set()
    out = []
    for score, si, ii in scored:
        if si in taken_sketch or ii in taken_image:
            continue
        taken_sketch.add(si)
        taken_image.add(ii)
        result = chain_similarity(
            sketch.descriptors[si], image_descriptors[ii], a_is_sketch=True, params=params
        )
        if not result.pairs:
            continue
        out.append(
            build_matched_pair(
                sketch.chains[si].chain_id,
                image_chain_ids[ii],
                sketch.descriptors[si],
                image_descriptors[ii],
                result,
            )
        )
    return out


def pair_distance_consistency(
    p: MatchedPair, p_prime: MatchedPair, lam: float = 1.0
) -> float:
    """Agreement of normalized centroid distances across the two domains.

    Centroid distances are normalized by the summed matched lengths; a
    coincident-centroid degenerate case is floored rather than zeroed.
    """
    ds = float(np.hypot(*(p.sketch_centroid - p_prime.sketch_centroid)))
    di = float(np.hypot(*(p.image_centroid - p_prime.image_centroid)))
    ls = p.matched_length_sketch + p_prime.matched_length_sketch
    li = p.matched_length_image + p_prime.matched_length_image
    nds = max(ds / ls, _EPS_DISTANCE)
    ndi = max(di / li, _EPS_DISTANCE)
    return math.exp(-lam * (1.0 - min(nds / ndi, ndi / nds)))


def _relative_angles(
    points: np.ndarray, centroid: np.ndarray, axis: np.ndarray
) -> np.ndarray:
    """Signed angle of each (point - centroid) ray relative to the axis.

    Rays shorter than the degeneracy floor get angle 0, as does a degenerate
    axis.
    """
    rays = points - centroid
    axis_angle = math.atan2(axis[1], axis[0])
    angles = np.arctan2(rays[:, 1], rays[:, 0]) - axis_angle
    tiny = np.hypot(rays[:, 0], rays[:, 1]) < _EPS_DISTANCE
    angles[tiny] = 0.0
    return angles


def pair_angular_consistency(
    p: MatchedPair,
    p_prime: MatchedPair,
    lam: float = 2.0,
    mirror_sketch: bool = False,
) -> float:
    """Agreement of matched-joint angles relative to the inter-pair axis.

    The axis runs from p's centroid to p_prime's centroid in each domain;
    differences are circular in [0, pi]. ``mirror_sketch`` flips the sketch
    side's handedness for images matched through a mirrored variant.
    """
    axis_s = p_prime.sketch_centroid - p.sketch_centroid
    axis_i = p_prime.image_centroid - p.image_centroid
    phi_s = _relative_angles(p.sketch_points, p.sketch_centroid, axis_s)
    if mirror_sketch:
        phi_s = -phi_s
    phi_i = _relative_angles(p.image_points, p.image_centroid, axis_i)
    diff = np.abs(phi_s - phi_i) % (2.0 * math.pi)
    diff = np.minimum(diff, 2.0 * math.pi - diff)
    return math.exp(-lam * float(diff.mean()))


def _majority_mirrored(pairs: Sequence[MatchedPair]) -> bool:
    return sum(1 for p in pairs if p.mirrored) * 2 > len(pairs)


def rank_images(
    candidates: dict[str, list[MatchedPair]], cfg: EngineConfig | None = None
) -> list[RankedRetrieval]:
    """Consistency-weighted image scores, best first.

    Each pair is weighted by the best geometric agreement it has with any
    other pair of the same image; a lone pair gets weight 1 since no
    cross-check exists. Ties order by image id.
    """
    cfg = cfg or EngineConfig()
    out = []
    for image_id in sorted(candidates):
        pairs = candidates[image_id]
        if not pairs:
            continue
        mirror = _majority_mirrored(pairs)
        weights = []
        for i, p in enumerate(pairs):
            if len(pairs) == 1:
                weights.append(1.0)
                continue
            best = 0.0
            for j, q in enumerate(pairs):
                if i == j:
                    continue
                g = pair_distance_consistency(
                    p, q, cfg.distance_consistency_penalty
                ) * pair_angular_consistency(
                    p, q, cfg.layout_angle_penalty, mirror_sketch=mirror
                )
                best = max(best, g)
            weights.append(best)
        score = float(sum(w * p.match.score for w, p in zip(weights, pairs)))
        out.append(
            RankedRetrieval(
                image_id=image_id,
                pairs=tuple(pairs),
                consistencies=tuple(weights),
                score=score,
            )
        )
    out.sort(key=lambda r: (-r.score, r.image_id))
    return out


def retrieve(
    tree: ChainTree,
    sketch: SketchQuery,
    k: int = 10,
    target_candidates: int | None = None,
    cfg: EngineConfig | None = None,
) -> list[RankedRetrieval]:
    """End-to-end query: index search per sketch chain, verification, ranking."""
    cfg = cfg or tree.config
    target = target_candidates or cfg.target_candidates
    params = MatchParams.from_config(cfg)
    seeds: dict[str, list[tuple[str, str]]] = {}
    for sd, schain in zip(sketch.descriptors, sketch.chains):
        for image_id, chain_id, _score in search(tree, sd, target, params):
            seeds.setdefault(image_id, []).append((schain.chain_id, chain_id))
    candidates: dict[str, list[MatchedPair]] = {}
    for image_id in seeds:
        chain_ids, descs = tree.store.image_chain_data(image_id)
        pairs = match_image_chains(sketch, chain_ids, descs, cfg, params)
        if pairs:
            candidates[image_id] = pairs
    return rank_images(candidates, cfg)[:k]
