"""Sweep manifests, bound-pair training and the JSONL prediction interchange."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .._toml import load_toml
from ..core import HPConfig, LabeledTestSet, Modality, SweepRecord, confusion_from_predictions
from ..errors import ConfigError, FormatError, InputError, ManifestError, TecollapseError
from ..tab2text import EmbeddingMatrix, Table
from .features import TabularFeaturizer
from .grid import HPGrid, expand_grid
from .learners import train


@dataclass(frozen=True)
class ModalitySpec:
    modality: Modality
    encoder_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        if self.modality is Modality.EMBEDDED and not self.encoder_id:
            raise ManifestError("embedded modality requires an encoder id")
        if self.modality is Modality.TABULAR:
            object.__setattr__(self, "encoder_id", None)

    @property
    def label(self) -> str:
        return self.encoder_id or self.modality.value


@dataclass(frozen=True)
class SweepManifest:
    train_domain: str
    test_domains: tuple[str, ...]
    modalities: tuple[ModalitySpec, ...]
    grids: tuple[HPGrid, ...]
    seed: int = 0
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        if not self.test_domains:
            raise ManifestError("manifest declares no test domains")
        if not self.modalities:
            raise ManifestError("manifest declares no modalities")
        if len(set(self.test_domains)) != len(self.test_domains):
            raise ManifestError("duplicate test domains in manifest")

    @property
    def id_test(self) -> str:
        """The in-distribution test set: by convention the first test domain."""
        return self.test_domains[0]

    @property
    def ood_tests(self) -> tuple[str, ...]:
        return self.test_domains[1:]

    def configs(self) -> list[HPConfig]:
        out: list[HPConfig] = []
        for g in self.grids:
            out.extend(expand_grid(g))
        ids = [c.config_id for c in out]
        if len(set(ids)) != len(ids):
            raise ManifestError("two grids produce the same config id")
        return out

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: Path | str = ".") -> "SweepManifest":
        try:
            sweep = d["sweep"]
            mods = tuple(ModalitySpec(m["kind"], m.get("encoder")) for m in d["modalities"])
            grids = tuple(HPGrid.from_dict(g) for g in d["grids"])
            return cls(
                train_domain=sweep["train"],
                test_domains=tuple(sweep["test_domains"]),
                modalities=mods,
                grids=grids,
                seed=int(d.get("seed", sweep.get("seed", 0))),
                base_dir=Path(base_dir),
            )
        except KeyError as exc:
            raise ManifestError(f"manifest is missing field {exc}") from None
        except ValueError as exc:
            if isinstance(exc, TecollapseError):
                raise
            raise ManifestError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "SweepManifest":
        path = Path(path)
        return cls.from_dict(load_toml(path), base_dir=path.parent)

    def digest(self) -> str:
        payload = {
            "train": self.train_domain,
            "tests": list(self.test_domains),
            "modalities": [[m.modality.value, m.encoder_id] for m in self.modalities],
            "configs": [c.config_id for c in self.configs()],
            "seed": self.seed,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass
class SweepData:
    """Tables keyed by domain id and embeddings keyed by ``(domain, encoder_id)``."""

    tables: Mapping[str, Table]
    embeddings: Mapping[tuple[str, str], EmbeddingMatrix] = field(default_factory=dict)

    def test_set(self, domain: str, spec: ModalitySpec | None = None) -> LabeledTestSet:
        t = self.tables[domain]
        if spec is None or spec.modality is Modality.TABULAR:
            return LabeledTestSet(domain, t.labels)
        return LabeledTestSet(domain, t.labels, Modality.EMBEDDED, spec.encoder_id)


def derive_seed(seed: int, config_id: str) -> int:
    """Per-config training seed, shared by both members of a bound pair."""
    h = hashlib.blake2b(f"{seed}:{config_id}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def validate_manifest(m: SweepManifest, data: SweepData) -> None:
    """Fail fast on anything that would otherwise break mid-sweep."""
    domains = (m.train_domain,) + m.test_domains
    for d in domains:
        if d not in data.tables:
            raise ManifestError(f"domain {d!r} is not registered")
    for spec in m.modalities:
        if spec.modality is not Modality.EMBEDDED:
            continue
        for d in domains:
            emb = data.embeddings.get((d, spec.encoder_id))
            if emb is None:
                raise ManifestError(f"no embedding for domain {d!r} with encoder {spec.encoder_id!r}")
            if len(emb) != len(data.tables[d]):
                raise ManifestError(
                    f"embedding ({d}, {spec.encoder_id}) has {len(emb)} rows, table has {len(data.tables[d])}"
                )
    for g in m.grids:
        if g.family not in ("LR", "MLP", "StumpEnsemble") and g.ingest is None:
            raise ManifestError(f"family {g.family!r} is ingest-only; give its grid an 'ingest' JSONL path")
        if g.ingest is not None and not (m.base_dir / g.ingest).exists():
            raise ManifestError(f"ingest file for {g.family} not found: {m.base_dir / g.ingest}")
    m.configs()


def _features(data: SweepData, domain: str, spec: ModalitySpec, featurizer: TabularFeaturizer | None) -> np.ndarray:
    if spec.modality is Modality.TABULAR:
        return featurizer.transform(data.tables[domain])
    return data.embeddings[(domain, spec.encoder_id)].rows.astype(np.float64)


def _train_task(config, spec, train_domain, X_train, y_train, tests, seed):
    try:
        model = train(X_train, y_train, config, seed)
        preds = [model.predict(X) for _, X, _ in tests]
        error = None
    except TecollapseError as exc:
        if isinstance(exc, ConfigError):
            raise
        preds, error = [None] * len(tests), str(exc)
    out = []
    for (domain, _, labels), p in zip(tests, preds):
        out.append(SweepRecord(
            config=config,
            modality=spec.modality,
            encoder_id=spec.encoder_id,
            train_domain=train_domain,
            test_domain=domain,
            predictions=p,
            confusion=None if p is None else confusion_from_predictions(labels, p),
            error=error,
        ))
    return out


def record_sort_key(m: SweepManifest):
    mod_index = {(s.modality, s.encoder_id): i for i, s in enumerate(m.modalities)}
    test_index = {d: i for i, d in enumerate(m.test_domains)}

    def key(r: SweepRecord):
        return (r.config_id, mod_index.get((r.modality, r.encoder_id), 99), test_index.get(r.test_domain, 99))

    return key


def run_sweep(m: SweepManifest, data: SweepData, jobs: int = 1) -> list[SweepRecord]:
    """Train every config on every modality and evaluate on every test domain.

    Returns records sorted by ``(config_id, modality order, test-domain order)``.
    Records of ingest-only families are read from their grid's JSONL.
    """
    validate_manifest(m, data)
    train_labels = data.tables[m.train_domain].labels
    featurizer = TabularFeaturizer.fit(data.tables[m.train_domain])

    tasks = []
    records: list[SweepRecord] = []
    for g in m.grids:
        configs = expand_grid(g)
        if g.ingest is not None:
            records.extend(_ingest_grid(m, data, g, configs))
            continue
        for spec in m.modalities:
            X_train = _features(data, m.train_domain, spec, featurizer)
            tests = [
                (d, _features(data, d, spec, featurizer), data.tables[d].labels)
                for d in m.test_domains
            ]
            for c in configs:
                tasks.append((c, spec, m.train_domain, X_train, train_labels, tests, derive_seed(m.seed, c.config_id)))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for recs in pool.map(_train_task, *zip(*tasks), chunksize=4):
                records.extend(recs)
    else:
        for t in tasks:
            records.extend(_train_task(*t))
    records.sort(key=record_sort_key(m))
    return records


def _ingest_grid(m: SweepManifest, data: SweepData, g: HPGrid, configs: list[HPConfig]) -> list[SweepRecord]:
    test_sets = {d: data.test_set(d) for d in m.test_domains}
    wanted = {c.config_id for c in configs}
    got = [r for r in read_records(m.base_dir / g.ingest, test_sets) if r.family == g.family]
    got = [r for r in got if r.config_id in wanted]
    have = {(r.config_id, r.modality, r.encoder_id, r.test_domain) for r in got}
    for c in configs:
        for spec in m.modalities:
            for d in m.test_domains:
                if (c.config_id, spec.modality, spec.encoder_id, d) not in have:
                    raise ManifestError(
                        f"ingest file {g.ingest} lacks {c.config_id} / {spec.label} / {d}"
                    )
    return got


def record_to_json(r: SweepRecord) -> dict:
    obj = {
        "config_id": r.config_id,
        "family": r.family,
        "params": dict(r.config.params),
        "modality": r.modality.value,
        "encoder_id": r.encoder_id,
        "train_domain": r.train_domain,
        "test_domain": r.test_domain,
        "y_pred": None if r.predictions is None else [int(v) for v in r.predictions],
    }
    if r.error is not None:
        obj["error"] = r.error
    return obj


def write_records(path: str | Path, records: Iterable[SweepRecord]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(record_to_json(r), separators=(",", ":")) + "\n")


def read_records(path: str | Path, test_sets: Mapping[str, LabeledTestSet]) -> list[SweepRecord]:
    """Parse a prediction JSONL, resolving labels against ``test_sets``."""
    path = Path(path)
    out = []
    offset = 0
    with path.open("rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})", offset) from None
                out.append(_record_from_json(obj, test_sets, f"{path}:{lineno}"))
            offset += len(raw)
    return out


def _record_from_json(obj: Mapping, test_sets: Mapping[str, LabeledTestSet], where: str) -> SweepRecord:
    try:
        config = HPConfig(obj["family"], obj.get("params", {}))
        if "config_id" in obj and obj["config_id"] != config.config_id:
            raise InputError(f"{where}: config_id {obj['config_id']!r} does not match params ({config.config_id})")
        domain = obj["test_domain"]
        modality = Modality(obj["modality"])
        encoder = obj.get("encoder_id") or None
        train_domain = obj["train_domain"]
        y_pred = obj.get("y_pred")
    except KeyError as exc:
        raise InputError(f"{where}: missing field {exc}") from None
    except ValueError as exc:
        if isinstance(exc, TecollapseError):
            raise
        raise InputError(f"{where}: {exc}") from None
    if domain not in test_sets:
        raise InputError(f"{where}: test domain {domain!r} is not a registered test set")
    if y_pred is None:
        if "error" not in obj:
            raise InputError(f"{where}: record has neither y_pred nor error")
        return SweepRecord(config, modality, encoder, train_domain, domain, None, None, str(obj["error"]))
    try:
        return SweepRecord.from_predictions(config, modality, encoder, train_domain, test_sets[domain], y_pred)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class WellDefinednessVerdict:
    family: str
    offending_configs: tuple[tuple[str, str, str], ...]

    @property
    def well_defined(self) -> bool:
        return not self.offending_configs

    @property
    def verdict(self) -> str:
        return "well-defined" if self.well_defined else "not well-defined"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "verdict": self.verdict,
            "offending_configs": [
                {"config_id": c, "test_set": s, "collapse": k} for c, s, k in self.offending_configs
            ],
        }


def check_well_defined(records: Sequence[SweepRecord], test_set_ids: Sequence[str], family: str | None = None) -> WellDefinednessVerdict:
    """List every tabular config that predicts a single class on a covered test set.

    A config whose training errored is listed with collapse class ``error``:
    it did not yield a usable single-modality baseline.
    """
    tab = [r for r in records if r.modality is Modality.TABULAR]
    families = sorted({r.family for r in tab})
    if family is None:
        if len(families) != 1:
            raise InputError(f"records span families {families}; pass family=")
        family = families[0]
    tab = [r for r in tab if r.family == family]
    by_key = {(r.config_id, r.test_domain): r for r in tab}
    configs = sorted({r.config_id for r in tab})
    if not configs:
        raise InputError(f"no tabular records for family {family!r}")
    offending = []
    for cid in configs:
        for s in test_set_ids:
            r = by_key.get((cid, s))
            if r is None:
                raise InputError(f"coverage gap: no tabular record for {cid} on {s}")
            if r.errored:
                offending.append((cid, s, "error"))
            elif r.confusion.pn == 0:
                offending.append((cid, s, "strict_positive"))
            elif r.confusion.pp == 0:
                offending.append((cid, s, "strict_negative"))
    return WellDefinednessVerdict(family, tuple(offending))
