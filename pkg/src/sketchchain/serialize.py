"""Binary index container.

Layout: magic ``SKCH``, format version, a JSON manifest (seed, counts, full
parameter ledger), the chain store (ids plus joint coordinates; descriptors
are rebuilt on load), then the tree with medoids and leaf members as store
references. All integers little-endian, coordinates float64, so identical
builds serialize to identical bytes.
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .config import EngineConfig
from .corpus import ChainRecord, ChainStore
from .descriptor import descriptor_from_joints
from .errors import IndexFormatError
from .index import ChainTree, IndexNode
from .model import ChainSource

MAGIC = b"SKCH"
FORMAT_VERSION = 1

_SOURCE_CODE = {ChainSource.CSN: 0, ChainSource.REGION: 1, ChainSource.SKETCH: 2}
_CODE_SOURCE = {v: k for k, v in _SOURCE_CODE.items()}


def _write_str(out: io.BufferedIOBase, s: str) -> None:
    data = s.encode("utf-8")
    if len(data) > 0xFFFF:
        raise IndexFormatError(f"identifier too long ({len(data)} bytes)")
    out.write(struct.pack("<H", len(data)))
    out.write(data)


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise IndexFormatError("index file truncated")
        out = self.raw[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def read_str(self) -> str:
        (n,) = self.unpack("<H")
        return self.take(n).decode("utf-8")


def _write_node(out: io.BufferedIOBase, node: IndexNode) -> None:
    out.write(struct.pack("<Bq", 1 if node.is_leaf else 0,
                          -1 if node.medoid_ref is None else node.medoid_ref))
    if node.is_leaf:
        out.write(struct.pack("<I", len(node.members)))
        out.write(struct.pack(f"<{len(node.members)}I", *node.members))
    else:
        out.write(struct.pack("<I", len(node.children)))
        for child in node.children:
            _write_node(out, child)


def _read_node(reader: _Reader) -> IndexNode:
    leaf, medoid = reader.unpack("<Bq")
    medoid_ref = None if medoid < 0 else int(medoid)
    (count,) = reader.unpack("<I")
    if leaf:
        members = reader.unpack(f"<{count}I") if count else ()
        return IndexNode(medoid_ref=medoid_ref, children=(), members=tuple(map(int, members)))
    children = tuple(_read_node(reader) for _ in range(count))
    return IndexNode(medoid_ref=medoid_ref, children=children, members=())


def dump_index(tree: ChainTree) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", FORMAT_VERSION))
    manifest = {
        "chains": len(tree.store),
        "images": tree.store.image_count,
        "params": tree.config.as_dict(),
        "seed": tree.seed,
    }
    blob = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out.write(struct.pack("<I", len(blob)))
    out.write(blob)

    out.write(struct.pack("<I", len(tree.store)))
    for rec in tree.store:
        _write_str(out, rec.image_id)
        _write_str(out, rec.chain_id)
        out.write(struct.pack("<B", _SOURCE_CODE[rec.source]))
        joints = rec.descriptor.joints
        out.write(struct.pack("<I", len(joints)))
        out.write(np.ascontiguousarray(joints, dtype="<f8").tobytes())

    _write_node(out, tree.root)
    return out.getvalue()


def save_index(tree: ChainTree, path: str | Path) -> None:
    Path(path).write_bytes(dump_index(tree))


def load_index_bytes(raw: bytes) -> ChainTree:
    reader = _Reader(raw)
    if reader.take(4) != MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise IndexFormatError(
            f"unsupported index format version {version} (expected {FORMAT_VERSION})"
        )
    (manifest_len,) = reader.unpack("<I")
    try:
        manifest = json.loads(reader.take(manifest_len))
        cfg = EngineConfig.from_dict(manifest["params"])
        seed = int(manifest["seed"])
    except (ValueError, KeyError, TypeError) as exc:
        raise IndexFormatError(f"bad index manifest: {exc}") from exc

    (n_records,) = reader.unpack("<I")
    store = ChainStore()
    for _ in range(n_records):
        image_id = reader.read_str()
        chain_id = reader.read_str()
        (source_code,) = reader.unpack("<B")
        try:
            source = _CODE_SOURCE[source_code]
        except KeyError as exc:
            raise IndexFormatError(f"bad chain source code {source_code}") from exc
        (n_joints,) = reader.unpack("<I")
        joints = np.frombuffer(reader.take(16 * n_joints), dtype="<f8").reshape(n_joints, 2)
        store.add(
            ChainRecord(
                image_id=image_id,
                chain_id=chain_id,
                source=source,
                descriptor=descriptor_from_joints(joints.copy(), cfg.skip_length_weight),
            )
        )
    root = _read_node(reader)
    if reader.pos != len(raw):
        raise IndexFormatError("trailing bytes after index payload")
    tree = ChainTree(root=root, store=store, config=cfg, seed=seed)
    _validate_refs(tree)
    return tree


def _validate_refs(tree: ChainTree) -> None:
    n = len(tree.store)
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node.medoid_ref is not None and not (0 <= node.medoid_ref < n):
            raise IndexFormatError("medoid reference out of range")
        for m in node.members:
            if not (0 <= m < n):
                raise IndexFormatError("leaf member reference out of range")
        stack.extend(node.children)


def load_index(path: str | Path) -> ChainTree:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IndexFormatError(f"cannot read index {path}: {exc}") from exc
    return load_index_bytes(raw)
