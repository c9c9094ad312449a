from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tab2text import Table, TableSchema


@dataclass(frozen=True)
class TabularFeaturizer:
    """z-scores numeric columns and one-hot encodes categoricals, fitted on
    the training table. Categories unseen at fit time encode as all zeros."""

    schema: TableSchema
    means: dict
    scales: dict
    categories: dict

    @classmethod
    def fit(cls, table: Table) -> "TabularFeaturizer":
        means, scales, cats = {}, {}, {}
        for col in table.schema.columns:
            values = [r[col.name] for r in table.rows]
            if col.kind == "numeric":
                arr = np.asarray(values, dtype=np.float64)
                means[col.name] = float(arr.mean())
                sd = float(arr.std())
                scales[col.name] = sd if sd > 0 else 1.0
            else:
                cats[col.name] = sorted(set(values))
        return cls(table.schema, means, scales, cats)

    @property
    def width(self) -> int:
        return sum(1 if c.kind == "numeric" else len(self.categories[c.name]) for c in self.schema.columns)

    def transform(self, table: Table) -> np.ndarray:
        blocks = []
        for col in self.schema.columns:
            values = [r[col.name] for r in table.rows]
            if col.kind == "numeric":
                arr = (np.asarray(values, dtype=np.float64) - self.means[col.name]) / self.scales[col.name]
                blocks.append(arr[:, None])
            else:
                cats = self.categories[col.name]
                index = {c: i for i, c in enumerate(cats)}
                onehot = np.zeros((len(values), len(cats)))
                for i, v in enumerate(values):
                    j = index.get(v)
                    if j is not None:
                        onehot[i, j] = 1.0
                blocks.append(onehot)
        if not blocks:
            return np.zeros((len(table), 0))
        return np.hstack(blocks)
