"""Row serialization, deterministic mock encoding and embedding-file interchange.

A tabular row is rendered as a sentence (one clause per schema column) and
paired with the task instruction; an encoder maps that pair to a vector.
Real LLM encoders are not run here: embeddings either come from the
hash-seeded :class:`MockEncoder` or from files produced elsewhere
(:class:`FileEncoder`).

CSEM binary layout (all integers little-endian u32)::

    b"CSEM" | version=1 | rows | dim | len(encoder_id) | encoder_id utf-8
            | len(source_dataset_id) | source_dataset_id utf-8
            | rows*dim little-endian f32, row-major
"""

from __future__ import annotations

import csv
import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, FormatError, InputError, IntegrityError
from ._toml import load_toml

MAGIC = b"CSEM"
VERSION = 1
DEFAULT_MOCK_DIM = 64
TEMPLATES = ("kv",)


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "numeric" | "categorical"
    description: str = ""

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ConfigError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if not self.description:
            object.__setattr__(self, "description", self.name)


@dataclass(frozen=True)
class TableSchema:
    columns: tuple[Column, ...]
    label: str = "label"
    positive: str = "1"
    instruction: str = ""
    template: str = "kv"

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate column names in schema: {names}")
        if self.label in names:
            raise ConfigError(f"label column {self.label!r} is also a feature column")

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @classmethod
    def from_dict(cls, d: Mapping) -> "TableSchema":
        try:
            cols = tuple(
                Column(c["name"], c.get("kind", "numeric"), c.get("description", ""))
                for c in d["columns"]
            )
        except KeyError as exc:
            raise ConfigError(f"schema is missing field {exc}") from None
        return cls(
            columns=cols,
            label=d.get("label", "label"),
            positive=str(d.get("positive", "1")),
            instruction=d.get("instruction", ""),
            template=d.get("template", "kv"),
        )


def load_schema(path: str | Path) -> TableSchema:
    return TableSchema.from_dict(load_toml(path))


@dataclass(frozen=True)
class SerializedRow:
    text: str
    instruction: str

    def encoder_input(self) -> str:
        return f"Instruct: {self.instruction}\nQuery: {self.text}"


def _render_value(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def serialize_row(row: Mapping[str, object], schema: TableSchema, template_id: str | None = None) -> SerializedRow:
    template_id = template_id or schema.template
    if template_id not in TEMPLATES:
        raise ConfigError(f"unknown serialization template {template_id!r}")
    missing = [c.name for c in schema.columns if c.name not in row]
    if missing:
        raise InputError(f"row is missing columns {missing}")
    text = "".join(f"The {c.description} is {_render_value(row[c.name])}. " for c in schema.columns)
    return SerializedRow(text=text, instruction=schema.instruction)


def _stream_seed(text: str, seed: int) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update((seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    h.update(text.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def mock_encode(text: str, dim: int = DEFAULT_MOCK_DIM, seed: int = 0) -> np.ndarray:
    """Unit-norm float32 vector that depends only on ``(text, dim, seed)``."""
    if dim < 1:
        raise ConfigError(f"embedding dim must be >= 1, got {dim}")
    rng = np.random.Generator(np.random.PCG64(_stream_seed(text, seed)))
    v = rng.standard_normal(dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    encoder_id: str
    rows: np.ndarray
    source_dataset_id: str = ""

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype="<f4")
        if rows.ndim != 2 or rows.shape[1] < 1:
            raise InputError(f"embedding matrix must be n x dim, got shape {rows.shape}")
        bad = ~np.isfinite(rows).all(axis=1)
        if bad.any():
            raise InputError(f"embedding row {int(np.argmax(bad))} is not finite")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def __len__(self) -> int:
        return int(self.rows.shape[0])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmbeddingMatrix)
            and self.encoder_id == other.encoder_id
            and self.source_dataset_id == other.source_dataset_id
            and self.rows.shape == other.rows.shape
            and self.rows.tobytes() == other.rows.tobytes()
        )


@dataclass(frozen=True)
class MockEncoder:
    dim: int = DEFAULT_MOCK_DIM
    seed: int = 0

    @property
    def encoder_id(self) -> str:
        return f"mock-d{self.dim}-s{self.seed}"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, t in enumerate(texts):
            out[i] = mock_encode(t, self.dim, self.seed)
        return out


@dataclass(frozen=True)
class FileEncoder:
    """Precomputed embeddings; row ``i`` must belong to row ``i`` of the table."""

    path: Path
    encoder_id_override: str | None = None
    _matrix: EmbeddingMatrix | None = field(default=None, compare=False, repr=False)

    @property
    def matrix(self) -> EmbeddingMatrix:
        if self._matrix is None:
            object.__setattr__(self, "_matrix", read_embedding_file(self.path))
        return self._matrix

    @property
    def encoder_id(self) -> str:
        return self.encoder_id_override or self.matrix.encoder_id


def encode_dataset(rows: Sequence[Mapping[str, object]], schema: TableSchema, encoder, dataset_id: str = "") -> EmbeddingMatrix:
    if isinstance(encoder, FileEncoder):
        m = encoder.matrix
        if len(m) != len(rows):
            raise IntegrityError(
                f"embedding file {encoder.path} has {len(m)} rows but dataset "
                f"{dataset_id or '<table>'} has {len(rows)}"
            )
        return EmbeddingMatrix(encoder.encoder_id, m.rows, dataset_id or m.source_dataset_id)
    texts = [serialize_row(r, schema).encoder_input() for r in rows]
    return EmbeddingMatrix(encoder.encoder_id, encoder.encode(texts), dataset_id)


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def write_embedding_file(m: EmbeddingMatrix, path: str | Path) -> None:
    path = Path(path)
    if path.suffix == ".csv":
        _write_csv(m, path)
        return
    header = MAGIC + struct.pack("<III", VERSION, len(m), m.dim)
    header += _pack_str(m.encoder_id) + _pack_str(m.source_dataset_id)
    path.write_bytes(header + m.rows.astype("<f4", copy=False).tobytes(order="C"))


def read_embedding_file(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    data = path.read_bytes()
    if data[:1] == b"#" or path.suffix == ".csv":
        return _read_csv(path)
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    off = 4

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise FormatError(f"{path}: truncated while reading {what}", off)
        chunk = data[off:off + n]
        off += n
        return chunk

    version, n_rows, dim = struct.unpack("<III", take(12, "header"))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}", 4)
    if dim < 1:
        raise FormatError(f"{path}: dim must be positive", 12)
    strings = []
    for what in ("encoder id", "source dataset id"):
        (n,) = struct.unpack("<I", take(4, what))
        start = off
        try:
            strings.append(take(n, what).decode("utf-8"))
        except UnicodeDecodeError:
            raise FormatError(f"{path}: {what} is not utf-8", start) from None
    body_start = off
    expected = n_rows * dim * 4
    available = len(data) - body_start
    if available < expected:
        full_rows = available // (dim * 4)
        raise FormatError(
            f"{path}: truncated body, header declares {n_rows} rows but only "
            f"{full_rows} complete rows present",
            body_start + full_rows * dim * 4,
        )
    if available > expected:
        raise FormatError(f"{path}: {available - expected} trailing bytes", body_start + expected)
    rows = np.frombuffer(data, dtype="<f4", count=n_rows * dim, offset=body_start).reshape(n_rows, dim)
    bad = ~np.isfinite(rows).all(axis=1)
    if bad.any():
        r = int(np.argmax(bad))
        raise FormatError(f"{path}: row {r} contains NaN or Inf", body_start + r * dim * 4)
    return EmbeddingMatrix(strings[0], rows.copy(), strings[1])


def _write_csv(m: EmbeddingMatrix, path: Path) -> None:
    lines = [f"# dim={m.dim};encoder={m.encoder_id};source={m.source_dataset_id}"]
    for row in m.rows:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _read_csv(path: Path) -> EmbeddingMatrix:
    raw = path.read_bytes()
    lines = raw.decode("utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}: missing '# dim=..;encoder=..' header line", 0)
    meta = {}
    for part in lines[0][1:].strip().split(";"):
        if "=" in part:
            k, v = part.split("=", 1)
            meta[k.strip()] = v.strip()
    try:
        dim = int(meta["dim"])
        encoder_id = meta["encoder"]
    except (KeyError, ValueError):
        raise FormatError(f"{path}: header must declare dim and encoder", 0) from None
    rows = []
    offset = len(lines[0]) + 1
    for i, line in enumerate(lines[1:]):
        if line.strip():
            try:
                vals = [float(x) for x in line.split(",")]
            except ValueError:
                raise FormatError(f"{path}: row {i} is not numeric", offset) from None
            if len(vals) != dim:
                raise FormatError(f"{path}: row {i} has {len(vals)} values, expected {dim}", offset)
            if not all(math.isfinite(v) for v in vals):
                raise FormatError(f"{path}: row {i} contains NaN or Inf", offset)
            rows.append(vals)
        offset += len(line.encode("utf-8")) + 1
    arr = np.asarray(rows, dtype="<f4").reshape(len(rows), dim)
    return EmbeddingMatrix(encoder_id, arr, meta.get("source", ""))


@dataclass(frozen=True, eq=False)
class Table:
    id: str
    schema: TableSchema
    rows: list[dict[str, object]]
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)


def table_from_records(id: str, records: Iterable[Mapping[str, object]], schema: TableSchema) -> Table:
    rows, labels = [], []
    for i, rec in enumerate(records):
        missing = [c for c in schema.names + [schema.label] if c not in rec]
        if missing:
            raise InputError(f"{id}: row {i} is missing columns {missing}")
        row = {}
        for col in schema.columns:
            v = rec[col.name]
            if col.kind == "numeric":
                try:
                    v = float(v)
                except (TypeError, ValueError):
                    raise InputError(f"{id}: row {i} column {col.name!r} is not numeric: {v!r}") from None
                if not math.isfinite(v):
                    raise InputError(f"{id}: row {i} column {col.name!r} is not finite")
            else:
                v = str(v)
            row[col.name] = v
        rows.append(row)
        labels.append(1 if str(rec[schema.label]) == schema.positive else 0)
    return Table(id, schema, rows, np.asarray(labels, dtype=np.int8))


def read_table(path: str | Path, schema: TableSchema, id: str | None = None) -> Table:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in schema.names + [schema.label] if c not in header]
        if missing:
            raise InputError(f"{path}: CSV lacks schema columns {missing}")
        return table_from_records(id or path.stem, list(reader), schema)
