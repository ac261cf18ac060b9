"""Engine parameter ledger.

Every tunable constant of the pipeline lives in :class:`EngineConfig` so a
single file (or the ``SKETCHCHAIN_CONFIG`` environment variable pointing at
one) pins the full behaviour of extraction, matching, indexing and retrieval.
The active ledger is echoed verbatim by the service's ``/params`` endpoint
and embedded in index files for reproducibility.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

ENV_VAR = "SKETCHCHAIN_CONFIG"

FRAME_SIZE = 256.0  # longest image side after normalization, in pixels


@dataclass(frozen=True)
class EngineConfig:
    """Immutable snapshot of all engine parameters."""

    # --- descriptor / joint matching ---
    length_ratio_penalty: float = 0.5    # decay on (1 - min-ratio) of segment length ratios
    angle_penalty: float = 2.0           # decay on circular turn-angle difference
    sketch_skip_cost: float = 0.07       # skip multiplier for sketch-side joints
    image_skip_cost: float = 0.03        # skip multiplier for image-side joints
    skip_length_weight: float = 0.5      # weight of the length term in skip penalties
    angle_consistency_penalty: float = 2.0  # decay on centroid-subtended angle disagreement

    # --- chain extraction ---
    curvature_window: int = 5            # points on either side used by the bend detector
    curvature_sigma: float = 2.0         # Gaussian width of the bend detector weights
    split_threshold: float = 0.4         # radians of deviation required to split
    merge_radius: float = 3.0            # endpoint unification radius, normalized px
    smoothness_bonus: float = 1.0        # chain-score reward for straight continuations
    smoothness_falloff: float = 2.0      # decay of that reward with bend angle
    max_chains_per_image: int = 5        # retained contour-network chains per image
    chain_overlap_threshold: float = 0.6  # max shared-length fraction between kept chains
    max_region_proposals: int = 20       # region boundaries considered per image
    border_margin: float = 3.0           # frame-hugging test distance, normalized px
    min_region_perimeter: float = 40.0   # smaller region boundaries are dropped

    # --- sketch ingestion ---
    resample_step: float = 2.0           # stroke resampling step, normalized px
    min_sketch_joints: int = 5           # interior joints required of a sketch chain

    # --- indexing ---
    branching: int = 32                  # children per tree node
    max_leaf: int = 100                  # chains per leaf before splitting
    multi_assign_ratio: float = 0.8      # assign to medoids within this fraction of best
    max_tree_depth: int = 8              # hard recursion cap
    shrink_limit: float = 0.9            # children not below this fraction of the parent stop recursing
    refine_iterations: int = 0           # optional medoid refinement passes after seeding
    target_candidates: int = 1500        # images gathered per sketch-chain search

    # --- geometric verification / ranking ---
    distance_consistency_penalty: float = 1.0  # decay on centroid-distance disagreement
    layout_angle_penalty: float = 2.0          # decay on relative-angle disagreement
    min_pair_score: float = 0.5                # chain pairs scoring below are dropped

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kwargs) -> "EngineConfig":
        return dataclasses.replace(self, **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "EngineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_env(cls) -> "EngineConfig":
        """Default config, overridden by the file named in SKETCHCHAIN_CONFIG if set."""
        path = os.environ.get(ENV_VAR)
        if path:
            return cls.load(path)
        return cls()
