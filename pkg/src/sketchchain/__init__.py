"""Sketch-based shape retrieval over contour chains."""

from .config import EngineConfig
from .corpus import ChainRecord, ChainStore, ingest_corpus
from .descriptor import build_descriptor, variant_descriptor
from .errors import (
    ChainTooShortError,
    EmptyQueryError,
    IndexFormatError,
    InvalidInputError,
    SketchChainError,
)
from .index import ChainTree, build_tree, search
from .matching import MatchParams, chain_score, chain_similarity, dp_match
from .model import (
    Chain,
    ChainDescriptor,
    ChainSource,
    FlipVariant,
    ImageRecord,
    MatchResult,
    Point2,
    normalize_frame,
)
from .retrieval import RankedRetrieval, SketchQuery, retrieve, sketch_to_chains
from .serialize import load_index, save_index

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "ChainDescriptor",
    "ChainRecord",
    "ChainSource",
    "ChainStore",
    "ChainTooShortError",
    "ChainTree",
    "EmptyQueryError",
    "EngineConfig",
    "FlipVariant",
    "ImageRecord",
    "IndexFormatError",
    "InvalidInputError",
    "MatchParams",
    "MatchResult",
    "Point2",
    "RankedRetrieval",
    "SketchChainError",
    "SketchQuery",
    "build_descriptor",
    "build_tree",
    "chain_score",
    "chain_similarity",
    "dp_match",
    "ingest_corpus",
    "load_index",
    "normalize_frame",
    "retrieve",
    "save_index",
    "search",
    "sketch_to_chains",
    "variant_descriptor",
]
