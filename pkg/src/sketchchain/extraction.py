"""From raw contours to scored chains.

Ingested polylines (edge contours, stroke paths) are split into straight
line-like segments at bends, the segment endpoints are merged into a joint
graph, a maximum spanning forest removes cycles, and leaf-to-leaf paths are
scored by length plus a smoothness bonus at junctions. The best few, mostly
non-overlapping paths become the image's chains. Region boundary polygons
contribute additional closed chains opened at their sharpest corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import EngineConfig
from .model import Chain, ChainSource, Point2

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# tracing and splitting


def _dedupe_consecutive(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return points
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    return points[keep]


def _trace_mask(mask: np.ndarray) -> list[np.ndarray]:
    """Trace a binary raster into open polylines along 8-connected runs.

    A diagonal step is ignored when a cardinal step to either shared corner
    pixel exists, so crossings split into clean runs instead of a clique of
    branch pixels. Runs end at endpoints and branch pixels; pure cycles are
    emitted starting from their smallest pixel.
    """
    on = {(int(r), int(c)) for r, c in np.argwhere(mask != 0)}
    if not on:
        return []

    def neighbors(p):
        r, c = p
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            q = (r + dr, c + dc)
            if q in on:
                out.append(q)
        for dr, dc in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
            q = (r + dr, c + dc)
            if q in on and (r + dr, c) not in on and (r, c + dc) not in on:
                out.append(q)
        return sorted(out)

    adj = {p: neighbors(p) for p in on}
    nodes = sorted(p for p, nb in adj.items() if len(nb) != 2)
    visited: set[frozenset] = set()
    runs: list[list[tuple[int, int]]] = []

    def walk(start, first):
        run = [start, first]
        visited.add(frozenset((start, first)))
        prev, cur = start, first
        while cur not in node_set and len(adj[cur]) == 2:
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            if frozenset((cur, nxt)) in visited:
                break
            visited.add(frozenset((cur, nxt)))
            run.append(nxt)
            prev, cur = cur, nxt
        if len(run) > 2 and run[-1] == run[0]:
            run.pop()  # pure cycle: leave it open, endpoint merging recloses it
        return run

    node_set = set(nodes)
    for p in nodes:
        for nb in adj[p]:
            if frozenset((p, nb)) not in visited:
                runs.append(walk(p, nb))
    # what remains are pure cycles of degree-2 pixels
    for p in sorted(on):
        for nb in adj[p]:
            if frozenset((p, nb)) not in visited:
                runs.append(walk(p, nb))

    out = []
    for run in runs:
        if len(run) == 1 and len(adj[run[0]]) == 0:
            continue
        pts = np.array([(c, r) for r, c in run], dtype=np.float64)
        if len(pts) >= 2:
            out.append(pts)
    return out


def trace_edge_contours(source) -> list[np.ndarray]:
    """Polylines from a binary edge raster, or passthrough for polyline input.

    Polyline input is deduplicated of consecutive identical points; entries
    left with fewer than two points are dropped. An empty mask yields an
    empty list.
    """
    if isinstance(source, np.ndarray) and source.ndim == 2:
        return _trace_mask(source)
    out = []
    for pl in source:
        pts = _dedupe_consecutive(np.asarray(pl, dtype=np.float64).reshape(-1, 2))
        if len(pts) >= 2:
            out.append(pts)
    return out


def resample_polyline(points: np.ndarray, step: float) -> np.ndarray:
    """Uniform arc-length resampling; endpoints are always kept."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 2:
        return pts
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    total = seg_len.sum()
    if total <= step:
        return np.vstack([pts[0], pts[-1]])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    targets = np.arange(0.0, total, step)
    if total - targets[-1] > 1e-9:
        targets = np.concatenate([targets, [total]])
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg_len) - 1)
    frac = (targets - cum[idx]) / np.where(seg_len[idx] > 0, seg_len[idx], 1.0)
    return pts[idx] + seg[idx] * frac[:, None]


def _unsigned_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Angle at b between rays to a and c, in [0, pi]; rows are independent."""
    v1 = a - b
    v2 = c - b
    cross = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    dot = (v1 * v2).sum(axis=1)
    return np.abs(np.arctan2(cross, dot))


def _bend_deviation(pts: np.ndarray, window: int, sigma: float) -> np.ndarray:
    """Gaussian-weighted deviation from straightness at every interior point.

    The window is truncated near the ends and the weights renormalized over
    the offsets actually available.
    """
    n = len(pts)
    dev = np.zeros(n)
    wsum = np.zeros(n)
    for i in range(1, window + 1):
        if 2 * i >= n:
            break
        w = math.exp(-(i * i) / (2.0 * sigma * sigma))
        sl = slice(i, n - i)
        ang = _unsigned_angle(pts[: n - 2 * i], pts[sl], pts[2 * i :])
        dev[sl] += w * np.abs(np.pi - ang)
        wsum[sl] += w
    np.divide(dev, wsum, out=dev, where=wsum > 0)
    return dev


def curvature_split(
    polyline: np.ndarray,
    window: int = 5,
    sigma: float = 2.0,
    split_threshold: float = 0.4,
) -> list[np.ndarray]:
    """Split a polyline into straight line-like pieces at its bends.

    Bends are strict local maxima of the deviation profile that exceed the
    threshold; adjacent pieces share the split point, so concatenating the
    result reproduces the input.
    """
    pts = np.asarray(polyline, dtype=np.float64)
    if len(pts) < 3:
        return [pts]
    dev = _bend_deviation(pts, window, sigma)
    cuts = [
        c
        for c in range(1, len(pts) - 1)
        if dev[c] > split_threshold and dev[c] > dev[c - 1] and dev[c] > dev[c + 1]
    ]
    bounds = [0] + cuts + [len(pts) - 1]
    return [pts[s : e + 1] for s, e in zip(bounds, bounds[1:])]


# ---------------------------------------------------------------------------
# joint graph


@dataclass(frozen=True, eq=False)
class GraphEdge:
    u: int
    v: int
    weight: float
    polyline: np.ndarray

    def other(self, vertex: int) -> int:
        return self.v if vertex == self.u else self.u


@dataclass(frozen=True, eq=False)
class JointGraph:
    """Weighted contour segment network over merged segment endpoints."""

    vertices: np.ndarray  # (V, 2)
    edges: tuple[GraphEdge, ...]
    adjacency: tuple[tuple[tuple[int, int], ...], ...] = field(init=False)

    def __post_init__(self):
        adj: list[list[tuple[int, int]]] = [[] for _ in range(len(self.vertices))]
        for idx, e in enumerate(self.edges):
            adj[e.u].append((e.v, idx))
            adj[e.v].append((e.u, idx))
        object.__setattr__(self, "adjacency", tuple(tuple(a) for a in adj))

    def neighbor_vertices(self, v: int) -> list[int]:
        seen = []
        for nb, _ in self.adjacency[v]:
            if nb not in seen:
                seen.append(nb)
        return seen

    def edge_weight(self, u: int, v: int) -> float:
        """Heaviest edge weight between two adjacent vertices."""
        best = 0.0
        for nb, idx in self.adjacency[u]:
            if nb == v:
                best = max(best, self.edges[idx].weight)
        return best


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _polyline_length(pts: np.ndarray) -> float:
    d = np.diff(pts, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def build_joint_graph(segments: Sequence[np.ndarray], merge_radius: float) -> JointGraph:
    """Merge segment endpoints into joints and connect them by the segments.

    Merging is single-linkage over endpoint distance, iterated on the cluster
    centroids until no two joints lie within the merge radius. Segments whose
    endpoints collapse into one joint are dropped as self-loops.
    """
    segs = [np.asarray(s, dtype=np.float64) for s in segments if len(s) >= 2]
    if not segs:
        return JointGraph(vertices=np.zeros((0, 2)), edges=())
    ends = np.array([s[0] for s in segs] + [s[-1] for s in segs])
    n = len(ends)

    uf = _UnionFind(n)
    d2 = ((ends[:, None, :] - ends[None, :, :]) ** 2).sum(axis=2)
    r2 = merge_radius * merge_radius
    for i in range(n):
        for j in range(i + 1, n):
            if d2[i, j] <= r2:
                uf.union(i, j)

    while True:
        roots = [uf.find(i) for i in range(n)]
        order = sorted(set(roots))
        centroids = {r: ends[[i for i in range(n) if roots[i] == r]].mean(axis=0) for r in order}
        merged_any = False
        for a in range(len(order)):
            for b in range(a + 1, len(order)):
                ca, cb = centroids[order[a]], centroids[order[b]]
                if ((ca - cb) ** 2).sum() <= r2:
                    uf.union(order[a], order[b])
                    merged_any = True
        if not merged_any:
            break

    roots = [uf.find(i) for i in range(n)]
    order = sorted(set(roots))
    index_of = {r: k for k, r in enumerate(order)}
    vertices = np.array(
        [ends[[i for i in range(n) if roots[i] == r]].mean(axis=0) for r in order]
    )
    edges = []
    nseg = len(segs)
    for k, s in enumerate(segs):
        u = index_of[roots[k]]
        v = index_of[roots[k + nseg]]
        if u == v:
            continue
        edges.append(GraphEdge(u=u, v=v, weight=_polyline_length(s), polyline=s))
    return JointGraph(vertices=vertices, edges=tuple(edges))


# ---------------------------------------------------------------------------
# spanning forest


@dataclass(frozen=True, eq=False)
class TreeComponent:
    """One spanning tree of a connected component."""

    vertices: tuple[int, ...]
    edge_ids: tuple[int, ...]
    adjacency: dict  # vertex -> tuple of (neighbor, edge id)

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if len(self.adjacency[v]) == 1)


@dataclass(frozen=True, eq=False)
class SpanningForest:
    trees: tuple[TreeComponent, ...]


def max_spanning_forest(graph: JointGraph) -> SpanningForest:
    """Per-component maximum spanning tree (Kruskal on negated weights)."""
    nv = len(graph.vertices)
    uf = _UnionFind(nv)
    chosen: list[int] = []
    order = sorted(range(len(graph.edges)), key=lambda i: (-graph.edges[i].weight, i))
    for idx in order:
        e = graph.edges[idx]
        if uf.union(e.u, e.v):
            chosen.append(idx)

    members: dict[int, list[int]] = {}
    for v in range(nv):
        members.setdefault(uf.find(v), []).append(v)
    edges_by_root: dict[int, list[int]] = {r: [] for r in members}
    for idx in chosen:
        edges_by_root[uf.find(graph.edges[idx].u)].append(idx)

    trees = []
    for root in sorted(members):
        verts = tuple(sorted(members[root]))
        eids = tuple(sorted(edges_by_root[root]))
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in verts}
        for idx in eids:
            e = graph.edges[idx]
            adj[e.u].append((e.v, idx))
            adj[e.v].append((e.u, idx))
        trees.append(
            TreeComponent(
                vertices=verts,
                edge_ids=eids,
                adjacency={v: tuple(a) for v, a in adj.items()},
            )
        )
    return SpanningForest(trees=tuple(trees))


# ---------------------------------------------------------------------------
# chain scoring


def _straightness(graph: JointGraph, a: int, b: int, c: int, falloff: float) -> float:
    """exp(-falloff * deviation from straight) of the turn a -> b -> c."""
    pa, pb, pc = graph.vertices[a], graph.vertices[b], graph.vertices[c]
    v1 = pa - pb
    v2 = pc - pb
    ang = abs(math.atan2(v1[0] * v2[1] - v1[1] * v2[0], float((v1 * v2).sum())))
    return math.exp(-falloff * abs(math.pi - ang))


def _junction_share(
    graph: JointGraph, arrive: int, joint: int, leave: int, falloff: float
) -> float:
    """Share of the joint's smoothness going to ``leave`` among all graph
    continuations after arriving from ``arrive``."""
    num = _straightness(graph, arrive, joint, leave, falloff)
    den = 0.0
    for x in graph.neighbor_vertices(joint):
        if x != arrive:
            den += _straightness(graph, arrive, joint, x, falloff)
    return num / den if den > 0 else 0.0


def _interior_bonus_ratio(
    graph: JointGraph, prev: int, joint: int, nxt: int, falloff: float
) -> float:
    """Direction-symmetric smoothness ratio of a path joint.

    The share is averaged over the two traversal directions so a chain and
    its reversal score identically even at junctions with uneven
    alternatives.
    """
    fwd = _junction_share(graph, prev, joint, nxt, falloff)
    bwd = _junction_share(graph, nxt, joint, prev, falloff)
    return 0.5 * (fwd + bwd)


def score_chain(
    path: Sequence[int],
    graph: JointGraph,
    smoothness_bonus: float = 1.0,
    smoothness_falloff: float = 2.0,
) -> float:
    """Length of a path plus smoothness bonuses at its interior joints.

    Each interior joint contributes ``bonus/2`` times the lengths of its two
    incident path segments, scaled by how dominantly straight the path runs
    through that joint compared to the other graph continuations. Boundary
    joints contribute no bonus, so a single edge scores its own length.
    """
    path = list(path)
    total = 0.0
    for u, v in zip(path, path[1:]):
        total += graph.edge_weight(u, v)
    for k in range(1, len(path) - 1):
        prev, joint, nxt = path[k - 1], path[k], path[k + 1]
        ratio = _interior_bonus_ratio(graph, prev, joint, nxt, smoothness_falloff)
        incident = graph.edge_weight(prev, joint) + graph.edge_weight(joint, nxt)
        total += 0.5 * smoothness_bonus * incident * ratio
    return total


@dataclass(frozen=True, eq=False)
class ScoredChain:
    chain: Chain
    score: float
    vertex_path: tuple[int, ...] = ()
    edge_ids: tuple[int, ...] = ()


class _TreeScorer:
    """Leaf-to-leaf path scores from root-to-node prefix aggregates.

    Rooted at an internal vertex, every vertex stores its depth, the summed
    edge weight to the root and the accumulated interior-joint bonuses of its
    root path. A leaf pair then needs only its lowest common ancestor plus
    one turn term there.
    """

    def __init__(self, tree: TreeComponent, graph: JointGraph, bonus: float, falloff: float):
        self.tree = tree
        self.graph = graph
        self.bonus = bonus
        self.falloff = falloff
        root = max(tree.vertices, key=lambda v: (len(tree.adjacency[v]), -v))
        self.root = root
        self.parent: dict[int, int] = {root: root}
        self.parent_edge: dict[int, int] = {}
        self.depth = {root: 0}
        self.depth_weight = {root: 0.0}
        order = [root]
        stack = [root]
        while stack:
            v = stack.pop()
            for nb, eid in tree.adjacency[v]:
                if nb not in self.parent:
                    self.parent[nb] = v
                    self.parent_edge[nb] = eid
                    self.depth[nb] = self.depth[v] + 1
                    self.depth_weight[nb] = self.depth_weight[v] + graph.edges[eid].weight
                    order.append(nb)
                    stack.append(nb)
        # through-term prefix: bonuses at strict ancestors of v along its root path
        self.through = {v: 0.0 for v in tree.vertices}
        for v in order:
            p = self.parent[v]
            if v == root or p == root:
                continue
            self.through[v] = self.through[p] + self._turn_bonus(v, p, self.parent[p])

    def _turn_bonus(self, arrive_from: int, joint: int, leave_to: int) -> float:
        ratio = _interior_bonus_ratio(self.graph, arrive_from, joint, leave_to, self.falloff)
        incident = self.graph.edge_weight(arrive_from, joint) + self.graph.edge_weight(
            joint, leave_to
        )
        return 0.5 * self.bonus * incident * ratio

    def _ancestor_at(self, v: int, depth: int) -> int:
        while self.depth[v] > depth:
            v = self.parent[v]
        return v

    def lca(self, a: int, b: int) -> int:
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a = self.parent[a]
            b = self.parent[b]
        return a

    def path_score(self, a: int, b: int) -> float:
        m = self.lca(a, b)
        score = self.depth_weight[a] + self.depth_weight[b] - 2.0 * self.depth_weight[m]
        if a != m:
            ca = self._ancestor_at(a, self.depth[m] + 1)
            score += self.through[a] - self.through[ca]
        if b != m:
            cb = self._ancestor_at(b, self.depth[m] + 1)
            score += self.through[b] - self.through[cb]
        if a != m and b != m:
            score += self._turn_bonus(ca, m, cb)
        return score

    def path_vertices(self, a: int, b: int) -> list[int]:
        m = self.lca(a, b)
        up = []
        v = a
        while v != m:
            up.append(v)
            v = self.parent[v]
        down = []
        v = b
        while v != m:
            down.append(v)
            v = self.parent[v]
        return up + [m] + down[::-1]

    def path_edge_ids(self, path: list[int]) -> list[int]:
        ids = []
        for u, v in zip(path, path[1:]):
            ids.append(self.parent_edge[u] if self.parent[u] == v else self.parent_edge[v])
        return ids


def extract_top_chains(
    forest: SpanningForest,
    graph: JointGraph,
    n_chains: int = 5,
    overlap_threshold: float = 0.6,
    smoothness_bonus: float = 1.0,
    smoothness_falloff: float = 2.0,
    image_id: str = "",
    source: ChainSource = ChainSource.CSN,
) -> list[ScoredChain]:
    """Best leaf-to-leaf chains across the forest, overlap-limited.

    Candidates from every tree are pooled, sorted by score, and accepted
    greedily while the shared edge length with each already-kept chain stays
    below ``overlap_threshold`` of the shorter chain's length.
    """
    candidates: list[tuple[float, int, int, _TreeScorer]] = []
    for tree in forest.trees:
        if len(tree.vertices) < 2:
            continue
        scorer = _TreeScorer(tree, graph, smoothness_bonus, smoothness_falloff)
        leaves = tree.leaves
        for i in range(len(leaves)):
            for j in range(i + 1, len(leaves)):
                candidates.append((scorer.path_score(leaves[i], leaves[j]), leaves[i], leaves[j], scorer))
    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))

    selected: list[ScoredChain] = []
    kept_edges: list[tuple[set, float]] = []
    for score, a, b, scorer in candidates:
        if len(selected) >= n_chains:
            break
        path = scorer.path_vertices(a, b)
        eids = scorer.path_edge_ids(path)
        eset = set(eids)
        length = sum(graph.edges[e].weight for e in eids)
        ok = True
        for other_set, other_len in kept_edges:
            shared = sum(graph.edges[e].weight for e in eset & other_set)
            if shared / min(length, other_len) >= overlap_threshold:
                ok = False
                break
        if not ok:
            continue
        chain = Chain(
            image_id=image_id,
            chain_id=f"{source.value}-{len(selected):03d}",
            source=source,
            joints=tuple(Point2(*graph.vertices[v]) for v in path),
        )
        selected.append(
            ScoredChain(chain=chain, score=score, vertex_path=tuple(path), edge_ids=tuple(eids))
        )
        kept_edges.append((eset, length))
    return selected


# ---------------------------------------------------------------------------
# region boundaries


def _ring_bend_deviation(ring: np.ndarray, window: int, sigma: float) -> np.ndarray:
    n = len(ring)
    dev = np.zeros(n)
    wsum = np.zeros(n)
    max_off = min(window, (n - 1) // 2)
    for i in range(1, max_off + 1):
        w = math.exp(-(i * i) / (2.0 * sigma * sigma))
        prev_pts = np.roll(ring, i, axis=0)
        next_pts = np.roll(ring, -i, axis=0)
        ang = _unsigned_angle(prev_pts, ring, next_pts)
        dev += w * np.abs(np.pi - ang)
        wsum += w
    if max_off >= 1:
        dev /= wsum
    return dev


def ingest_region_boundaries(
    polygons: Sequence[np.ndarray],
    frame: tuple[float, float],
    border_margin: float = 3.0,
    min_perimeter: float = 40.0,
    max_proposals: int = 20,
    window: int = 5,
    sigma: float = 2.0,
    split_threshold: float = 0.4,
    image_id: str = "",
) -> list[Chain]:
    """Closed region boundaries turned into open chains at their corners.

    Polygons arrive best-first; only the top ``max_proposals`` are
    considered. Boundaries hugging the frame border for more than half their
    perimeter and boundaries shorter than ``min_perimeter`` are discarded.
    Survivors keep their bend corners as joints and are opened at the
    sharpest corner; fewer than three corners cannot carry a descriptor and
    drop the region.
    """
    width, height = frame
    chains: list[Chain] = []
    for poly in list(polygons)[:max_proposals]:
        ring = _dedupe_consecutive(np.asarray(poly, dtype=np.float64).reshape(-1, 2))
        if len(ring) >= 2 and np.all(ring[0] == ring[-1]):
            ring = ring[:-1]
        if len(ring) < 3:
            continue
        closed = np.vstack([ring, ring[:1]])
        seg = np.diff(closed, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        perimeter = float(seg_len.sum())
        if perimeter < min_perimeter:
            continue
        margin_dist = np.minimum.reduce(
            [ring[:, 0], ring[:, 1], width - ring[:, 0], height - ring[:, 1]]
        )
        near = margin_dist <= border_margin
        near_next = np.roll(near, -1)
        border_len = float(seg_len[near & near_next].sum())
        if border_len > 0.5 * perimeter:
            continue

        dev = _ring_bend_deviation(ring, window, sigma)
        prev_dev = np.roll(dev, 1)
        next_dev = np.roll(dev, -1)
        corner = (dev > split_threshold) & (dev >= prev_dev) & (dev >= next_dev)
        idx = np.flatnonzero(corner)
        if len(idx) < 3:
            continue
        sharpest = idx[np.argmax(dev[idx])]
        rolled = np.sort((idx - sharpest) % len(ring))
        joints = ring[(rolled + sharpest) % len(ring)]
        chains.append(
            Chain(
                image_id=image_id,
                chain_id=f"region-{len(chains):03d}",
                source=ChainSource.REGION,
                joints=tuple(Point2(*p) for p in joints),
            )
        )
    return chains


# ---------------------------------------------------------------------------
# per-image pipeline


def extract_image_chains(
    image_id: str,
    polylines: Sequence,
    regions: Sequence,
    original_size: tuple[float, float],
    cfg: EngineConfig | None = None,
) -> list[Chain]:
    """Full extraction for one image: contours and region boundaries to chains.

    Inputs are normalized first; contour polylines are split at bends,
    chained through the joint graph and forest, and the top-scoring chains
    kept. Chains too short to carry an interior joint are not emitted.
    """
    from .model import normalize_frame

    cfg = cfg or EngineConfig()
    width, height = original_size
    scale = 256.0 / max(width, height)
    frame = (width * scale, height * scale)

    segments = []
    for pl in trace_edge_contours(polylines):
        normalized = np.asarray(normalize_frame(pl, original_size))
        # sparse vector input gets the same densification traced rasters have
        # naturally; the bend detector needs samples between corners
        resampled = resample_polyline(normalized, cfg.resample_step)
        segments.extend(
            curvature_split(
                resampled, cfg.curvature_window, cfg.curvature_sigma, cfg.split_threshold
            )
        )
    chains: list[Chain] = []
    if segments:
        graph = build_joint_graph(segments, cfg.merge_radius)
        forest = max_spanning_forest(graph)
        scored = extract_top_chains(
            forest,
            graph,
            n_chains=cfg.max_chains_per_image,
            overlap_threshold=cfg.chain_overlap_threshold,
            smoothness_bonus=cfg.smoothness_bonus,
            smoothness_falloff=cfg.smoothness_falloff,
            image_id=image_id,
            source=ChainSource.CSN,
        )
        chains.extend(sc.chain for sc in scored if len(sc.chain.joints) >= 3)

    normalized_regions = [
        np.asarray(normalize_frame(np.asarray(r, dtype=np.float64).reshape(-1, 2), original_size))
        for r in regions
    ]
    chains.extend(
        ingest_region_boundaries(
            normalized_regions,
            frame,
            border_margin=cfg.border_margin,
            min_perimeter=cfg.min_region_perimeter,
            max_proposals=cfg.max_region_proposals,
            window=cfg.curvature_window,
            sigma=cfg.curvature_sigma,
            split_threshold=cfg.split_threshold,
            image_id=image_id,
        )
    )
    return chains
