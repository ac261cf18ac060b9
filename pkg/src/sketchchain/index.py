"""Hierarchical k-medoids index over chain descriptors.

Chain descriptors have variable length and their similarity violates the
triangle inequality, so vector or metric indexes do not apply. Instead the
store is recursively partitioned around representative chains (medoids):
k-means++-style seeding picks the medoids, every chain joins each medoid
scoring at least a fixed fraction of its best score (so one chain can live
in several clusters), and the recursion stops at small, capped-depth or
non-shrinking clusters. Search walks the tree best-bin-first on
query-to-medoid scores.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .config import EngineConfig
from .corpus import ChainStore
from .descriptor import variant_feature_stack
from .matching import MatchParams, chain_score, similarity_to_distance
from .model import ChainDescriptor


@dataclass(frozen=True, eq=False)
class IndexNode:
    """Tree node keyed by the medoid chain its parent routed it under."""

    medoid_ref: int | None
    children: tuple["IndexNode", ...]
    members: tuple[int, ...]

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(eq=False)
class ChainTree:
    root: IndexNode
    store: ChainStore
    config: EngineConfig
    seed: int

    def stats(self) -> dict:
        leaves = 0
        nodes = 0
        depth = 0
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            nodes += 1
            depth = max(depth, d)
            if node.is_leaf:
                leaves += 1
            else:
                stack.extend((c, d + 1) for c in node.children)
        return {
            "chains": len(self.store),
            "images": self.store.image_count,
            "nodes": nodes,
            "leaves": leaves,
            "depth": depth,
        }


def kpp_init(
    chains: Sequence[ChainDescriptor],
    k: int,
    rng: int | np.random.Generator,
    params: MatchParams = MatchParams(),
) -> list[int]:
    """Medoid seeding: first uniform, then proportional to squared distance
    to the nearest already-chosen medoid (distance 1/(1+score)).

    Already-chosen chains are excluded from re-sampling since the score-based
    distance never reaches zero. With ``len(chains) <= k`` every chain is a
    medoid.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = len(chains)
    if n <= k:
        return list(range(n))
    first = int(rng.integers(n))
    medoids = [first]
    dist = np.array(
        [similarity_to_distance(chain_score(c, chains[first], params=params)) for c in chains]
    )
    dist[first] = 0.0
    while len(medoids) < k:
        weights = dist * dist
        total = weights.sum()
        nxt = int(rng.choice(n, p=weights / total))
        medoids.append(nxt)
        new_dist = np.array(
            [similarity_to_distance(chain_score(c, chains[nxt], params=params)) for c in chains]
        )
        np.minimum(dist, new_dist, out=dist)
        dist[nxt] = 0.0
    return medoids


def multi_assign_from_scores(scores: Sequence[float], ratio: float) -> list[bool]:
    """Assignment mask: every medoid scoring at least ``ratio`` of the best."""
    best = max(scores)
    return [s >= ratio * best for s in scores]


def assign_multi(
    chains: Sequence[ChainDescriptor],
    medoids: Sequence[ChainDescriptor],
    ratio: float,
    params: MatchParams = MatchParams(),
) -> list[list[int]]:
    """Per-medoid chain index lists under the fraction-of-best rule.

    Every chain lands in at least the cluster of its best medoid.
    """
    clusters: list[list[int]] = [[] for _ in medoids]
    for idx, chain in enumerate(chains):
        scores = [chain_score(chain, m, params=params) for m in medoids]
        for mi, keep in enumerate(multi_assign_from_scores(scores, ratio)):
            if keep:
                clusters[mi].append(idx)
    return clusters


class _PackedSide:
    """Concatenated feature arrays of many descriptors, for batched scoring."""

    def __init__(self, descriptors: Sequence[ChainDescriptor]):
        lengths = np.array([len(d) for d in descriptors], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(lengths)])
        self.ratios = np.concatenate([d.length_ratios for d in descriptors])
        self.angles = np.concatenate([d.turn_angles for d in descriptors])
        self.skips = np.concatenate([d.skip_weights for d in descriptors])
        self.points = np.concatenate([d.points for d in descriptors])


def _scores_against(
    pack: _PackedSide, medoid: ChainDescriptor, params: MatchParams
) -> np.ndarray:
    """Score every packed chain (as the query side) against one medoid."""
    rb4, tb4, ob4, pb4 = variant_feature_stack(medoid)
    out = np.empty(len(pack.offsets) - 1)
    _kernels.score_query_against_packed(
        rb4, tb4, ob4, pb4,
        pack.ratios, pack.angles, pack.skips, pack.points, pack.offsets,
        params.image_skip_cost, params.image_skip_cost,
        params.length_ratio_penalty, params.angle_penalty,
        params.angle_consistency_penalty,
        out,
    )
    return out


def _seed_and_assign(
    descriptors: Sequence[ChainDescriptor],
    k: int,
    ratio: float,
    rng: np.random.Generator,
    params: MatchParams,
) -> tuple[list[int], list[list[int]]]:
    """Fused medoid seeding and multi-assignment for one cluster.

    Seeding follows :func:`kpp_init`; the chain-to-medoid scores it computes
    along the way are kept, so assignment costs no further matching.
    """
    n = len(descriptors)
    pack = _PackedSide(descriptors)
    if n <= k:
        medoids = list(range(n))
        columns = [_scores_against(pack, descriptors[m], params) for m in medoids]
    else:
        first = int(rng.integers(n))
        medoids = [first]
        columns = [_scores_against(pack, descriptors[first], params)]
        dist = 1.0 / (1.0 + columns[0])
        dist[first] = 0.0
        while len(medoids) < k:
            weights = dist * dist
            nxt = int(rng.choice(n, p=weights / weights.sum()))
            col = _scores_against(pack, descriptors[nxt], params)
            medoids.append(nxt)
            columns.append(col)
            np.minimum(dist, 1.0 / (1.0 + col), out=dist)
            dist[nxt] = 0.0
    scores = np.stack(columns, axis=1)
    best = scores.max(axis=1)
    clusters = [
        np.flatnonzero(scores[:, j] >= ratio * best).tolist()
        for j in range(len(medoids))
    ]
    return medoids, clusters


def _refine_medoid(
    chains: Sequence[ChainDescriptor],
    member_idx: Sequence[int],
    params: MatchParams,
) -> int:
    best_idx = member_idx[0]
    best_total = -math.inf
    for i in member_idx:
        total = sum(chain_score(chains[i], chains[j], params=params) for j in member_idx)
        if total > best_total:
            best_total = total
            best_idx = i
    return best_idx


def build_tree(store: ChainStore, cfg: EngineConfig, seed: int) -> ChainTree:
    """Build the index for a store. Deterministic for a given seed.

    Recursion on a cluster stops at ``max_leaf`` chains, at the depth cap, or
    when multi-assignment fails to shrink it (e.g. many identical chains).
    """
    params = MatchParams.from_config(cfg)
    rng = np.random.default_rng(seed)
    descriptors = [r.descriptor for r in store]

    def build(refs: list[int], depth: int, medoid_ref: int | None) -> IndexNode:
        if len(refs) <= cfg.max_leaf or depth >= cfg.max_tree_depth:
            return IndexNode(medoid_ref=medoid_ref, children=(), members=tuple(refs))
        local = [descriptors[r] for r in refs]
        med_local, clusters = _seed_and_assign(
            local, cfg.branching, cfg.multi_assign_ratio, rng, params
        )
        for _ in range(cfg.refine_iterations):
            med_local = [
                _refine_medoid(local, members, params) if members else med
                for med, members in zip(med_local, clusters)
            ]
            clusters = assign_multi(
                local, [local[m] for m in med_local], cfg.multi_assign_ratio, params
            )
        children = []
        for med, members in zip(med_local, clusters):
            if not members:
                continue
            child_refs = [refs[i] for i in members]
            if len(child_refs) >= cfg.shrink_limit * len(refs):
                # re-splitting a barely smaller cluster repeats the same work;
                # multi-assignment makes this common for weakly separated data
                child = IndexNode(
                    medoid_ref=refs[med], children=(), members=tuple(child_refs)
                )
            else:
                child = build(child_refs, depth + 1, refs[med])
            children.append(child)
        return IndexNode(medoid_ref=medoid_ref, children=tuple(children), members=())

    root = build(list(range(len(store))), 0, None)
    return ChainTree(root=root, store=store, config=cfg, seed=seed)


def search(
    tree: ChainTree,
    query: ChainDescriptor,
    target_candidates: int,
    params: MatchParams | None = None,
) -> list[tuple[str, str, float]]:
    """Best-bin-first candidate retrieval for one query chain.

    Expands the frontier node whose medoid scores highest against the query;
    leaves emit their members at the leaf medoid's score. Stops once the
    distinct retrieved images reach ``target_candidates`` or the frontier is
    exhausted. Images are deduplicated keeping their best-scoring chain.
    """
    params = params or MatchParams.from_config(tree.config)
    if len(tree.store) == 0:
        return []
    best: dict[str, tuple[str, float]] = {}
    counter = 0
    root_score = 0.0 if tree.root.is_leaf else math.inf
    frontier: list[tuple[float, int, IndexNode]] = [(-root_score, counter, tree.root)]
    while frontier and len(best) < target_candidates:
        neg_score, _, node = heapq.heappop(frontier)
        if node.is_leaf:
            score = -neg_score
            for ref in node.members:
                rec = tree.store[ref]
                seen = best.get(rec.image_id)
                if seen is None or score > seen[1]:
                    best[rec.image_id] = (rec.chain_id, score)
        else:
            for child in node.children:
                medoid = tree.store[child.medoid_ref].descriptor
                score = chain_score(query, medoid, a_is_sketch=True, params=params)
                counter += 1
                heapq.heappush(frontier, (-score, counter, child))
    out = [(image_id, chain_id, score) for image_id, (chain_id, score) in best.items()]
    out.sort(key=lambda t: (-t[2], t[0]))
    return out
