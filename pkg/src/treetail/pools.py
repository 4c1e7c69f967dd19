"""Sample pools and their on-disk format.

A pool is an immutable array of i.i.d.-ish samples of one tree functional
(a fixed generation's weighted sum, a partial fixed-point sum, or a
fixed-point iterate), tagged with enough provenance to refuse mixing laws.

Binary layout: a 16-byte header (8-byte magic, u32 version, u32 metadata
length), a UTF-8 JSON metadata block, then ``count`` little-endian float64
values.  CSV export is one ``value`` column.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import PoolFormatError

__all__ = ["SamplePool", "KIND_W", "KIND_R_PARTIAL", "KIND_R_STAR", "save_pool", "load_pool", "export_csv"]

KIND_W = "W"
KIND_R_PARTIAL = "R_PARTIAL"
KIND_R_STAR = "R_STAR"
_KINDS = (KIND_W, KIND_R_PARTIAL, KIND_R_STAR)

_MAGIC = b"TTPOOL\r\n"
_VERSION = 1
_HEADER = struct.Struct("<8sII")

# Below this size, tail statistics on a pool are statistically meaningless.
MIN_STATISTICAL_SIZE = 10_000


@dataclass(frozen=True)
class SamplePool:
    """Immutable samples of one tree functional under one branching law."""

    values: np.ndarray
    kind: str
    generation: int
    law_fingerprint: str
    seed_lineage: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("pool values must be a non-empty 1-d array")
        if not np.all(np.isfinite(values)):
            raise ValueError("pool values must all be finite")
        if self.kind not in _KINDS:
            raise ValueError(f"pool kind must be one of {_KINDS}, got {self.kind!r}")
        if self.generation < 0:
            raise ValueError("generation must be >= 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "seed_lineage", tuple(self.seed_lineage))
        if values.size < MIN_STATISTICAL_SIZE:
            warnings.warn(
                f"pool of size {values.size} is below {MIN_STATISTICAL_SIZE}; "
                "tail statistics on it will be noisy",
                stacklevel=2,
            )

    def __len__(self) -> int:
        return int(self.values.size)


def save_pool(pool: SamplePool, path: str | Path) -> None:
    meta = {
        "kind": pool.kind,
        "generation": pool.generation,
        "law_fingerprint": pool.law_fingerprint,
        "seed_lineage": list(pool.seed_lineage),
        "count": len(pool),
    }
    blob = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, len(blob)))
        fh.write(blob)
        fh.write(pool.values.astype("<f8").tobytes())


def load_pool(path: str | Path) -> SamplePool:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise PoolFormatError(f"{path}: truncated header")
        magic, version, meta_len = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise PoolFormatError(f"{path}: not a pool file (bad magic)")
        if version != _VERSION:
            raise PoolFormatError(f"{path}: unsupported pool version {version}")
        try:
            meta = json.loads(fh.read(meta_len).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise PoolFormatError(f"{path}: corrupt metadata block") from exc
        payload = fh.read()
    count = meta.get("count")
    if len(payload) % 8:
        raise PoolFormatError(f"{path}: value payload is truncated")
    values = np.frombuffer(payload, dtype="<f8")
    if count is None or values.size != count:
        raise PoolFormatError(f"{path}: expected {count} values, found {values.size}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return SamplePool(
            values=values.copy(),
            kind=meta["kind"],
            generation=int(meta["generation"]),
            law_fingerprint=meta["law_fingerprint"],
            seed_lineage=tuple(meta.get("seed_lineage", ())),
        )


def export_csv(pool: SamplePool, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("value\n")
        fh.writelines(f"{float(v)!r}\n" for v in pool.values)
