"""On-disk workspace: registered datasets, embedding files and provenance.

Layout::

    <root>/workspace.toml        [datasets.<id>] csv = "...", schema = "..."
    <root>/embeddings/<dataset>__<encoder>.csem
    <root>/registry.json         provenance entries written by ``embed`` and ``sweep``
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ._toml import load_toml
from .core import LabeledTestSet
from .errors import ConfigError, InputError, IntegrityError
from .tab2text import EmbeddingMatrix, Table, TableSchema, load_schema, read_embedding_file, read_table
from .zoo.sweep import SweepData, SweepManifest

CONFIG_NAME = "workspace.toml"
REGISTRY_NAME = "registry.json"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _toml_str(s: str) -> str:
    return json.dumps(s)


@dataclass
class Workspace:
    root: Path
    datasets: dict[str, dict] = field(default_factory=dict)
    _tables: dict[str, Table] = field(default_factory=dict, repr=False)
    _schemas: dict[str, TableSchema] = field(default_factory=dict, repr=False)

    @classmethod
    def load(cls, root: str | Path, create: bool = False) -> "Workspace":
        root = Path(root)
        cfg_path = root / CONFIG_NAME
        if not cfg_path.exists():
            if not create:
                raise ConfigError(f"{root} is not a workspace (no {CONFIG_NAME})")
            root.mkdir(parents=True, exist_ok=True)
            ws = cls(root)
            ws.save()
            return ws
        cfg = load_toml(cfg_path)
        datasets = {k: dict(v) for k, v in cfg.get("datasets", {}).items()}
        for k, v in datasets.items():
            if "csv" not in v or "schema" not in v:
                raise ConfigError(f"dataset {k!r} needs both 'csv' and 'schema'")
        return cls(root, datasets)

    def save(self) -> None:
        lines = []
        for k in sorted(self.datasets):
            d = self.datasets[k]
            lines += [f"[datasets.{_toml_str(k)}]", f"csv = {_toml_str(d['csv'])}",
                      f"schema = {_toml_str(d['schema'])}", ""]
        (self.root / CONFIG_NAME).write_text("\n".join(lines), encoding="utf-8")

    def resolve(self, p: str | Path) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.root / p

    def register_dataset(self, id: str, csv: str | Path, schema: str | Path) -> None:
        rel = {}
        for key, p in (("csv", csv), ("schema", schema)):
            p = Path(p).resolve()
            try:
                rel[key] = p.relative_to(self.root.resolve()).as_posix()
            except ValueError:
                rel[key] = p.as_posix()
        if self.datasets.get(id) not in (None, rel):
            raise ConfigError(f"dataset {id!r} is already registered with different files")
        self.datasets[id] = rel
        self._tables.pop(id, None)
        self.save()

    def schema(self, id: str) -> TableSchema:
        if id not in self._schemas:
            self._schemas[id] = load_schema(self.resolve(self._entry(id)["schema"]))
        return self._schemas[id]

    def _entry(self, id: str) -> dict:
        try:
            return self.datasets[id]
        except KeyError:
            raise InputError(f"dataset {id!r} is not registered in {self.root / CONFIG_NAME}") from None

    def table(self, id: str) -> Table:
        if id not in self._tables:
            self._tables[id] = read_table(self.resolve(self._entry(id)["csv"]), self.schema(id), id)
        return self._tables[id]

    def test_set(self, id: str) -> LabeledTestSet:
        return LabeledTestSet(id, self.table(id).labels)

    def test_sets(self, ids=None) -> dict[str, LabeledTestSet]:
        return {i: self.test_set(i) for i in (ids if ids is not None else sorted(self.datasets))}

    def embedding_path(self, dataset: str, encoder_id: str) -> Path:
        return self.root / "embeddings" / f"{dataset}__{encoder_id}.csem"

    def embedding(self, dataset: str, encoder_id: str) -> EmbeddingMatrix | None:
        p = self.embedding_path(dataset, encoder_id)
        return read_embedding_file(p) if p.exists() else None

    def embedding_files(self) -> list[tuple[str, str, Path]]:
        d = self.root / "embeddings"
        out = []
        for p in sorted(d.glob("*.csem")) if d.exists() else []:
            dataset, _, encoder = p.stem.partition("__")
            out.append((dataset, encoder, p))
        return out

    def sweep_data(self, m: SweepManifest) -> SweepData:
        domains = (m.train_domain,) + m.test_domains
        tables = {d: self.table(d) for d in domains if d in self.datasets}
        embeddings = {}
        for spec in m.modalities:
            if spec.encoder_id is None:
                continue
            for d in domains:
                emb = self.embedding(d, spec.encoder_id)
                if emb is not None:
                    embeddings[(d, spec.encoder_id)] = emb
        return SweepData(tables, embeddings)

    # provenance

    def registry(self) -> dict:
        p = self.root / REGISTRY_NAME
        return json.loads(p.read_text()) if p.exists() else {}

    def record_provenance(self, section: str, key: str, entry: dict) -> None:
        reg = self.registry()
        reg.setdefault(section, {})[key] = entry
        reg = {s: dict(sorted(v.items())) for s, v in sorted(reg.items())}
        (self.root / REGISTRY_NAME).write_text(json.dumps(reg, indent=2, sort_keys=True) + "\n")

    def validate(self) -> list[str]:
        """Integrity problems found in the workspace, as human-readable lines."""
        problems = []
        for id in sorted(self.datasets):
            try:
                self.table(id)
            except (InputError, ConfigError, OSError) as exc:
                problems.append(f"dataset {id}: {exc}")
        for dataset, encoder, path in self.embedding_files():
            if dataset not in self.datasets:
                problems.append(f"{path.name}: dataset {dataset!r} is not registered")
                continue
            try:
                m = read_embedding_file(path)
            except IntegrityError as exc:
                problems.append(str(exc))
                continue
            if dataset in self._tables and len(m) != len(self._tables[dataset]):
                problems.append(f"{path.name}: {len(m)} rows, dataset {dataset} has {len(self._tables[dataset])}")
        for key, entry in self.registry().get("embeddings", {}).items():
            p = self.resolve(entry["path"])
            if not p.exists():
                problems.append(f"registry entry {key}: file {entry['path']} is missing")
            elif sha256_file(p) != entry.get("sha256"):
                problems.append(f"registry entry {key}: {entry['path']} changed since it was written")
        return problems
