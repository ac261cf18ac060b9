"""Core domain types: normalized frame, chains, descriptors, match results.

All types are immutable after construction and safe to share across threads.
Coordinates are double-precision and live in the normalized image frame
(longest side scaled to 256 px); sub-pixel positions are expected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .config import FRAME_SIZE
from .errors import ChainTooShortError, InvalidInputError


class Point2(NamedTuple):
    x: float
    y: float


class ChainSource(str, enum.Enum):
    CSN = "csn"          # contour segment network
    REGION = "region"    # region-proposal boundary
    SKETCH = "sketch"    # user stroke


class FlipVariant(enum.IntEnum):
    """Traversal/reflection variants a descriptor can be matched under."""

    IDENTITY = 0
    REVERSED = 1
    MIRRORED = 2
    REVERSED_MIRRORED = 3


def normalize_frame(
    points: Sequence[Point2] | Sequence[tuple[float, float]],
    original_size: tuple[float, float],
) -> list[Point2]:
    """Scale points so the longest image side maps to the 256-px frame.

    Aspect ratio and point order are preserved; the map is the identity for
    input already in the normalized frame.
    """
    width, height = original_size
    if width <= 0 or height <= 0:
        raise InvalidInputError(f"image size must be positive, got {original_size}")
    scale = FRAME_SIZE / max(width, height)
    return [Point2(x * scale, y * scale) for x, y in points]


def _as_points_array(points: Iterable) -> np.ndarray:
    arr = np.asarray([(p[0], p[1]) for p in points], dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Chain:
    """An ordered polyline of joints; the unit of shape information.

    ``segment_lengths`` is derived from ``joints`` at construction and holds
    the Euclidean distance between consecutive joints.
    """

    image_id: str
    chain_id: str
    source: ChainSource
    joints: tuple[Point2, ...]
    segment_lengths: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        joints = tuple(Point2(float(x), float(y)) for x, y in self.joints)
        if len(joints) < 2:
            raise InvalidInputError(f"chain {self.chain_id!r} needs >= 2 joints")
        lengths = []
        for a, b in zip(joints, joints[1:]):
            d = math.hypot(b.x - a.x, b.y - a.y)
            if not (d > 0.0 and math.isfinite(d)):
                raise InvalidInputError(
                    f"chain {self.chain_id!r} has a degenerate segment at {a}"
                )
            lengths.append(d)
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "segment_lengths", tuple(lengths))

    @property
    def total_length(self) -> float:
        return float(sum(self.segment_lengths))

    def points_array(self) -> np.ndarray:
        return _as_points_array(self.joints)


class ChainDescriptor:
    """Similarity-invariant encoding of a chain.

    Per interior joint i (between segments i and i+1):

    - ``length_ratios[i]``: length of segment i over length of segment i+1
    - ``turn_angles[i]``: anticlockwise angle from the outgoing to the
      incoming segment direction, in [0, 2pi); a straight continuation is pi
    - ``skip_weights[i]``: cost of skipping the joint during matching
      (sharpness plus length share, see the matcher)

    ``joints`` keeps the full source polyline so flip variants can be rebuilt
    exactly; ``points`` exposes the interior joints used by angle-consistency
    checks and geometric verification.
    """

    __slots__ = (
        "joints",
        "length_ratios",
        "turn_angles",
        "skip_weights",
        "total_length",
        "variant",
        "skip_length_weight",
        "_variant_cache",
    )

    def __init__(
        self,
        joints: np.ndarray,
        length_ratios: np.ndarray,
        turn_angles: np.ndarray,
        skip_weights: np.ndarray,
        total_length: float,
        variant: FlipVariant = FlipVariant.IDENTITY,
        skip_length_weight: float = 0.5,
    ):
        n = len(length_ratios)
        if not (n >= 1 and len(turn_angles) == n and len(skip_weights) == n):
            raise InvalidInputError("descriptor feature arrays must share length >= 1")
        if len(joints) != n + 2:
            raise InvalidInputError("descriptor needs the full joint list (interior + ends)")
        for arr in (joints, length_ratios, turn_angles, skip_weights):
            arr.setflags(write=False)
        self.joints = joints
        self.length_ratios = length_ratios
        self.turn_angles = turn_angles
        self.skip_weights = skip_weights
        self.total_length = float(total_length)
        self.variant = variant
        self.skip_length_weight = float(skip_length_weight)
        self._variant_cache: dict = {}

    def __len__(self) -> int:
        return len(self.length_ratios)

    @property
    def points(self) -> np.ndarray:
        """Interior joint coordinates, one row per descriptor entry."""
        return self.joints[1:-1]

    def __repr__(self) -> str:
        return f"ChainDescriptor(joints={len(self)}, variant={self.variant.name})"


@dataclass(frozen=True, eq=False)
class MatchResult:
    """DP alignment between two descriptors.

    ``pairs`` holds (joint index in A, joint index in B-variant) and is
    strictly increasing in both coordinates; matched-plus-skipped indices are
    contiguous in each chain. ``score`` is ``angle_consistency *
    alignment_score``.
    """

    pairs: tuple[tuple[int, int], ...]
    skipped_a: tuple[int, ...]
    skipped_b: tuple[int, ...]
    alignment_score: float
    angle_consistency: float
    score: float
    variant_used: FlipVariant


@dataclass(frozen=True, eq=False)
class ImageRecord:
    """All retained chains of one database image, with their descriptors."""

    image_id: str
    chains: tuple[Chain, ...]
    descriptors: tuple[ChainDescriptor, ...]

    def __post_init__(self):
        if len(self.chains) != len(self.descriptors):
            raise InvalidInputError("one descriptor per retained chain")


__all__ = [
    "Chain",
    "ChainDescriptor",
    "ChainSource",
    "ChainTooShortError",
    "FlipVariant",
    "ImageRecord",
    "MatchResult",
    "Point2",
    "normalize_frame",
]
