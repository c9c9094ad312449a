"""Synthetic census-style workspace for trying the toolkit end to end.

Four domains share one feature space. ``CA_train`` and ``CA`` come from the
source population; ``PR`` and ``AL`` use a different labelling rule given the
same features (a Y|X shift) and are more skewed towards the positive class.
The positive class is the low-income label, as in the states table.
"""

from __future__ import annotations

import csv
import shutil
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .tab2text import MockEncoder, encode_dataset, write_embedding_file
from .workspace import Workspace, sha256_file

EDUCATION = ["no diploma", "high school", "some college", "associate", "bachelor", "master", "doctorate"]
OCCUPATIONS = ["service", "sales", "office", "construction", "production", "transport", "management", "professional"]
# occupation effect on the high-income logit
OCC_EFFECT = [-0.8, -0.2, -0.1, 0.0, -0.3, -0.4, 0.9, 0.8]


@dataclass(frozen=True)
class DomainSpec:
    n: int
    intercept: float
    signal: float  # scale of the feature part of the logit
    age_shift: float = 0.0


DOMAINS = {
    "CA_train": DomainSpec(1000, -0.6, 2.5),
    "CA": DomainSpec(600, -0.6, 2.5),
    "PR": DomainSpec(600, -3.0, 1.75, age_shift=3.0),
    "AL": DomainSpec(600, -1.1, 2.25),
}
DEMO_ENCODER = MockEncoder(dim=64, seed=7)


def _domain_rows(spec: DomainSpec, rng: np.random.Generator) -> list[dict]:
    n = spec.n
    age = np.clip(rng.normal(42 + spec.age_shift, 13, n), 18, 90).round()
    hours = np.clip(rng.normal(39, 10, n), 1, 99).round()
    edu = rng.choice(len(EDUCATION), n, p=[0.1, 0.25, 0.22, 0.09, 0.2, 0.1, 0.04])
    occ = rng.integers(0, len(OCCUPATIONS), n)
    sex = rng.integers(0, 2, n)
    score = (0.6 * (edu - 3) + 0.04 * (hours - 40) + 0.03 * (age - 42)
             - 0.0006 * (age - 42) ** 2 + np.asarray(OCC_EFFECT)[occ] + 0.3 * sex)
    logit = spec.intercept + spec.signal * score
    high = rng.random(n) < 1 / (1 + np.exp(-logit))
    return [
        {
            "age": int(age[i]),
            "hours": int(hours[i]),
            "education": EDUCATION[edu[i]],
            "occupation": OCCUPATIONS[occ[i]],
            "sex": "male" if sex[i] else "female",
            "income": ">50K" if high[i] else "<=50K",
        }
        for i in range(n)
    ]


def generate_tables(seed: int = 0) -> dict[str, list[dict]]:
    out = {}
    for k, (name, spec) in enumerate(sorted(DOMAINS.items())):
        out[name] = _domain_rows(spec, np.random.default_rng([seed, k]))
    return out


def _copy_data(name: str, dest: Path) -> None:
    with resources.as_file(resources.files("tecollapse") / "data" / name) as src:
        shutil.copyfile(src, dest)


def init_demo(root: str | Path, seed: int = 0) -> Workspace:
    """Write CSVs, schema, manifest and mock embeddings into a fresh workspace."""
    root = Path(root)
    ws = Workspace.load(root, create=True)
    (root / "data").mkdir(exist_ok=True)
    _copy_data("demo_schema.toml", root / "schema.toml")
    _copy_data("demo_manifest.toml", root / "manifest.toml")
    fields = ["age", "hours", "education", "occupation", "sex", "income"]
    for name, rows in generate_tables(seed).items():
        path = root / "data" / f"{name}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        ws.register_dataset(name, path, root / "schema.toml")
    (root / "embeddings").mkdir(exist_ok=True)
    for name in sorted(DOMAINS):
        table = ws.table(name)
        m = encode_dataset(table.rows, table.schema, DEMO_ENCODER, name)
        path = ws.embedding_path(name, DEMO_ENCODER.encoder_id)
        write_embedding_file(m, path)
        ws.record_provenance("embeddings", f"{name}__{DEMO_ENCODER.encoder_id}", {
            "dataset": name,
            "encoder_id": DEMO_ENCODER.encoder_id,
            "path": path.relative_to(root).as_posix(),
            "rows": len(m),
            "dim": m.dim,
            "sha256": sha256_file(path),
        })
    return ws
