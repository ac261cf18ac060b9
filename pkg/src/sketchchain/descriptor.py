"""Similarity-invariant chain descriptors and their flip variants.

The encoding keeps, per interior joint, the ratio of the adjacent segment
lengths and the anticlockwise angle between the adjacent segments. Both are
unchanged by rotation, translation and uniform scaling of the source chain,
so two chains can be compared without ever aligning them.

Flip variants (traversal reversal, mirror reflection, their composition) are
rebuilt from the transformed joint list through the exact same code path as
the original descriptor. That keeps every variant bit-consistent with a
fresh build and makes double reversal an exact involution.
"""

from __future__ import annotations

import numpy as np

from .errors import ChainTooShortError, InvalidInputError
from .model import Chain, ChainDescriptor, FlipVariant

TWO_PI = 2.0 * np.pi


def descriptor_from_joints(
    joints: np.ndarray,
    skip_length_weight: float,
    variant: FlipVariant = FlipVariant.IDENTITY,
) -> ChainDescriptor:
    """Build a descriptor from an (N, 2) joint array with N >= 3."""
    joints = np.ascontiguousarray(joints, dtype=np.float64)
    n = len(joints)
    if n < 3:
        raise ChainTooShortError("descriptor needs >= 2 segments (>= 3 joints)")
    seg = joints[1:] - joints[:-1]
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    if not np.all(lengths > 0.0) or not np.all(np.isfinite(lengths)):
        raise InvalidInputError("chain has a degenerate or non-finite segment")
    total = float(lengths.sum())

    ratios = lengths[:-1] / lengths[1:]

    # Turn angle at interior joint i: anticlockwise from the ray toward the
    # next joint to the ray back toward the previous one. Straight runs give
    # pi, which is where the sharpness term vanishes.
    back = joints[:-2] - joints[1:-1]
    ahead = joints[2:] - joints[1:-1]
    angles = np.arctan2(back[:, 1], back[:, 0]) - np.arctan2(ahead[:, 1], ahead[:, 0])
    angles = np.mod(angles, TWO_PI)
    # np.mod can round a tiny negative input up to exactly 2*pi; keep [0, 2pi)
    angles[angles >= TWO_PI] = 0.0

    sharpness = 1.0 - np.exp(-np.abs(np.pi - angles))
    length_share = (lengths[:-1] + lengths[1:]) / 2.0 / total
    skips = sharpness + skip_length_weight * length_share

    return ChainDescriptor(
        joints=joints,
        length_ratios=ratios,
        turn_angles=angles,
        skip_weights=skips,
        total_length=total,
        variant=variant,
        skip_length_weight=skip_length_weight,
    )


def build_descriptor(chain: Chain, skip_length_weight: float = 0.5) -> ChainDescriptor:
    """Descriptor for a chain; requires at least one interior joint."""
    if len(chain.joints) < 3:
        raise ChainTooShortError(
            f"chain {chain.chain_id!r} has {len(chain.joints)} joints, need >= 3"
        )
    return descriptor_from_joints(chain.points_array(), skip_length_weight)


def transform_joints(joints: np.ndarray, variant: FlipVariant) -> np.ndarray:
    """Joint list correspondingly transformed: reversal flips order, mirror negates y."""
    out = joints
    if variant & FlipVariant.REVERSED:
        out = out[::-1]
    if variant & FlipVariant.MIRRORED:
        out = out * np.array([1.0, -1.0])
    return np.ascontiguousarray(out)


def variant_descriptor(d: ChainDescriptor, variant: FlipVariant) -> ChainDescriptor:
    """The descriptor matched as if the source chain were flipped.

    Variants compose as a Klein four-group; applying ``REVERSED`` twice
    returns the original descriptor.
    """
    if variant == FlipVariant.IDENTITY:
        return d
    cached = d._variant_cache.get(variant)
    if cached is not None:
        return cached
    composed = FlipVariant(d.variant ^ variant)
    out = descriptor_from_joints(
        transform_joints(d.joints, variant), d.skip_length_weight, composed
    )
    d._variant_cache[variant] = out
    return out


def all_variants(d: ChainDescriptor) -> tuple[ChainDescriptor, ...]:
    """The four flip variants in enum order (identity first)."""
    return tuple(variant_descriptor(d, v) for v in FlipVariant)


def variant_feature_stack(d: ChainDescriptor):
    """Stacked per-variant feature arrays for the matcher kernels.

    Returns (ratios, angles, skips, points) with a leading axis of 4 in
    :class:`FlipVariant` order. Cached on the descriptor.
    """
    stack = d._variant_cache.get("stack")
    if stack is None:
        variants = all_variants(d)
        stack = (
            np.ascontiguousarray([v.length_ratios for v in variants]),
            np.ascontiguousarray([v.turn_angles for v in variants]),
            np.ascontiguousarray([v.skip_weights for v in variants]),
            np.ascontiguousarray([v.points for v in variants]),
        )
        d._variant_cache["stack"] = stack
    return stack
