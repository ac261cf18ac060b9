"""Chain store and the JSONL corpus format.

One JSONL line per chain::

    {"image_id": "...", "chain_id": "...", "source": "csn|region|sketch",
     "points": [[x, y], ...], "original_size": [w, h]}

Points are normalized on ingest, so files may carry original pixel
coordinates or already-normalized ones interchangeably.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .config import FRAME_SIZE, EngineConfig
from .descriptor import build_descriptor
from .errors import InvalidInputError, SketchChainError
from .model import Chain, ChainDescriptor, ChainSource, ImageRecord, normalize_frame


@dataclass(frozen=True, eq=False)
class ChainRecord:
    image_id: str
    chain_id: str
    source: ChainSource
    descriptor: ChainDescriptor

    def chain(self) -> Chain:
        return Chain(
            image_id=self.image_id,
            chain_id=self.chain_id,
            source=self.source,
            joints=tuple(map(tuple, self.descriptor.joints)),
        )


class ChainStore:
    """All database chains, addressable by position and grouped by image."""

    def __init__(self):
        self.records: list[ChainRecord] = []
        self._by_image: dict[str, list[int]] = {}

    def add(self, record: ChainRecord) -> int:
        ref = len(self.records)
        self.records.append(record)
        self._by_image.setdefault(record.image_id, []).append(ref)
        return ref

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, ref: int) -> ChainRecord:
        return self.records[ref]

    def __iter__(self) -> Iterator[ChainRecord]:
        return iter(self.records)

    @property
    def image_count(self) -> int:
        return len(self._by_image)

    def image_ids(self) -> list[str]:
        return list(self._by_image)

    def image_refs(self, image_id: str) -> list[int]:
        return self._by_image.get(image_id, [])

    def image_record(self, image_id: str) -> ImageRecord:
        records = [self.records[r] for r in self.image_refs(image_id)]
        return ImageRecord(
            image_id=image_id,
            chains=tuple(r.chain() for r in records),
            descriptors=tuple(r.descriptor for r in records),
        )

    def image_chain_data(self, image_id: str) -> tuple[list[str], list[ChainDescriptor]]:
        """Chain ids and descriptors of one image, without materializing chains."""
        records = [self.records[r] for r in self.image_refs(image_id)]
        return [r.chain_id for r in records], [r.descriptor for r in records]


@dataclass
class IngestReport:
    total_lines: int = 0
    ingested: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)

    def summary(self) -> str:
        msg = f"{self.ingested}/{self.total_lines} chains ingested"
        if self.skipped:
            msg += f", {len(self.skipped)} skipped"
        return msg


def _record_from_json(data: dict, cfg: EngineConfig) -> ChainRecord:
    for key in ("image_id", "chain_id", "source", "points", "original_size"):
        if key not in data:
            raise InvalidInputError(f"missing field {key!r}")
    source = ChainSource(data["source"])
    points = normalize_frame(data["points"], tuple(data["original_size"]))
    deduped = [points[0]]
    for p in points[1:]:
        if p != deduped[-1]:
            deduped.append(p)
    if len(deduped) < 3:
        raise InvalidInputError("chain needs >= 3 distinct points for an interior joint")
    chain = Chain(
        image_id=str(data["image_id"]),
        chain_id=str(data["chain_id"]),
        source=source,
        joints=tuple(deduped),
    )
    descriptor = build_descriptor(chain, cfg.skip_length_weight)
    return ChainRecord(
        image_id=chain.image_id,
        chain_id=chain.chain_id,
        source=source,
        descriptor=descriptor,
    )


def ingest_corpus(
    path: str | Path, cfg: EngineConfig | None = None
) -> tuple[ChainStore, IngestReport]:
    """Read a chain JSONL file; malformed lines are reported and skipped."""
    cfg = cfg or EngineConfig()
    store = ChainStore()
    report = IngestReport()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise SketchChainError(f"cannot read corpus {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            report.total_lines += 1
            try:
                store.add(_record_from_json(json.loads(line), cfg))
                report.ingested += 1
            except (ValueError, KeyError, TypeError, SketchChainError) as exc:
                report.skipped.append((lineno, str(exc)))
    return store, report


def chain_to_json(chain: Chain, original_size: tuple[float, float] | None = None) -> dict:
    return {
        "image_id": chain.image_id,
        "chain_id": chain.chain_id,
        "source": chain.source.value,
        "points": [[p.x, p.y] for p in chain.joints],
        "original_size": list(original_size or (FRAME_SIZE, FRAME_SIZE)),
    }


def write_chain_jsonl(chains: Iterable[Chain], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for chain in chains:
            fh.write(json.dumps(chain_to_json(chain)) + "\n")
            count += 1
    return count
