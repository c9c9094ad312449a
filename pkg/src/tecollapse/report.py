"""Per-scenario analyses and the report bundle.

A scenario is one (family, encoder, S, Q) combination. The CLI subcommands
``collapse`` and ``otl`` and the ``report`` bundle all go through the
functions here, so every number in a bundle can be recomputed standalone.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .collapse import CollapseReport, collapse_report, fraction_dict, group_records, pair_records
from .core import ClassStats, LabeledTestSet, Modality, SweepRecord
from .errors import InputError
from .otl import Binding, LinearFit, PlanePoint, SpuriousAclReport, bind_pairs, ols_fit, plane_coordinates, spurious_acl_analysis
from .svg import plane_svg
from .zoo.sweep import check_well_defined

PLANE_NAMES = {"acc": "acl", "f1": "f1l"}


def scenario_collapse(records: Sequence[SweepRecord], S: str, Q: str, test_sets: Mapping[str, LabeledTestSet],
                      eps=(Fraction(1, 10), Fraction(1, 10)), mode: str = "inclusive") -> CollapseReport:
    pairs, errored = pair_records(records, S, Q)
    return collapse_report(pairs, test_sets[S].stats, test_sets[Q].stats, eps, mode, errored, (S, Q))


@dataclass
class PlaneAnalysis:
    metric: str
    S: str
    Q: str
    points: dict[str, list[PlanePoint]]  # keyed by modality value
    bindings: list[Binding]
    fits: dict[str, LinearFit]
    spurious: dict[str, SpuriousAclReport]
    n_errored: dict[str, int] = field(default_factory=dict)
    class_stats: tuple[ClassStats, ClassStats] | None = None

    def all_points(self) -> list[PlanePoint]:
        return [p for m in sorted(self.points) for p in self.points[m]]

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "S": self.S,
            "Q": self.Q,
            "n_points": {m: len(v) for m, v in self.points.items()},
            "n_errored": self.n_errored,
            "n_bindings": len(self.bindings),
            "fits": {m: f.to_dict() for m, f in self.fits.items()},
            "spurious_acl": {m: r.to_dict() for m, r in self.spurious.items()},
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config_id", "modality", "x", "y", "collapsed_S", "collapsed_Q"])
        for p in self.all_points():
            w.writerow([p.config_id, p.modality.value, repr(p.x), repr(p.y), p.collapsed_S.value, p.collapsed_Q.value])
        return buf.getvalue()

    def to_svg(self, title: str = "") -> str:
        return plane_svg(self.all_points(), self.bindings, self.fits, self.class_stats, title=title,
                         x_label=f"{self.metric} on {self.S}", y_label=f"{self.metric} on {self.Q}")


def scenario_planes(groups: Mapping[str, Sequence[SweepRecord]], S: str, Q: str,
                    test_sets: Mapping[str, LabeledTestSet], metric: str = "acc",
                    eps=(Fraction(1, 10), Fraction(1, 10)), delta_r2: float = 0.2, collapse_fraction: float = 0.1) -> PlaneAnalysis:
    """Build the plane for up to two modality groups (keys ``tabular`` / ``embedded``).

    R^2 and the spurious-fit diagnosis are computed per modality, never on the
    pooled points.
    """
    sS, sQ = test_sets[S].stats, test_sets[Q].stats
    points, fits, spurious, n_err = {}, {}, {}, {}
    for name, recs in sorted(groups.items()):
        pts = plane_coordinates(recs, S, Q, metric, sS, sQ, eps)
        n_err[name] = len({r.config_id for r in recs if r.errored and r.test_domain in (S, Q)})
        points[name] = pts
        if len(pts) >= 2:
            fits[name] = ols_fit(pts)
            spurious[name] = spurious_acl_analysis(pts, sS, sQ, delta_r2, collapse_fraction)
    bindings = []
    if "tabular" in points and "embedded" in points and points["tabular"] and points["embedded"]:
        t_ids = {p.config_id for p in points["tabular"]}
        e_ids = {p.config_id for p in points["embedded"]}
        common = t_ids & e_ids
        # configs errored in one modality cannot be bound
        bindings = bind_pairs([p for p in points["tabular"] if p.config_id in common],
                              [p for p in points["embedded"] if p.config_id in common])
    return PlaneAnalysis(metric, S, Q, points, bindings, fits, spurious, n_err, (sS, sQ))


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _safe(s: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in s)


def build_report(records: Sequence[SweepRecord], test_sets: Mapping[str, LabeledTestSet],
                 pairs: Sequence[tuple[str, str]], out_dir: str | Path,
                 eps=(Fraction(1, 10), Fraction(1, 10)), mode: str = "inclusive") -> dict:
    """Write the bundle under ``out_dir`` and return the summary it also writes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gaps: list[str] = []
    families = sorted({r.family for r in records})

    well_defined = {}
    for fam in families:
        tab = [r for r in records if r.family == fam and r.modality is Modality.TABULAR]
        if not tab:
            gaps.append(f"{fam}: no tabular records, well-definedness unknown")
            continue
        covered = sorted({r.test_domain for r in tab})
        try:
            well_defined[fam] = check_well_defined(tab, covered, fam).to_dict()
        except InputError as exc:
            gaps.append(f"{fam}: {exc}")

    scenarios = []
    for (fam, modality, encoder), recs in group_records(records, Modality.EMBEDDED).items():
        tab = [r for r in records if r.family == fam and r.modality is Modality.TABULAR]
        for S, Q in pairs:
            name = _safe(f"{fam}__{encoder}__{S}-{Q}")
            missing = [d for d in (S, Q) if not any(r.test_domain == d for r in recs)]
            if missing:
                gaps.append(f"{name}: no {encoder} records on {missing}")
                continue
            d = out_dir / name
            d.mkdir(exist_ok=True)
            try:
                cr = scenario_collapse(recs, S, Q, test_sets, eps, mode)
            except InputError as exc:
                gaps.append(f"{name}: {exc}")
                continue
            _dump(d / "collapse.json", {"family": fam, "modality": modality, "encoder_id": encoder, **cr.to_dict()})
            groups = {"embedded": recs}
            if tab:
                groups["tabular"] = tab
            else:
                gaps.append(f"{name}: no tabular records, plane has no bindings")
            planes = {}
            for metric, plane in PLANE_NAMES.items():
                try:
                    pa = scenario_planes(groups, S, Q, test_sets, metric, eps)
                except InputError as exc:
                    gaps.append(f"{name} {plane}: {exc}")
                    continue
                (d / f"{plane}.csv").write_text(pa.to_csv(), encoding="utf-8")
                (d / f"{plane}.svg").write_text(pa.to_svg(f"{fam} | {encoder}: {S} vs {Q}"), encoding="utf-8")
                _dump(d / f"{plane}.json", pa.to_dict())
                planes[plane] = pa
            spur = {p: {m: r.to_dict() for m, r in pa.spurious.items()} for p, pa in planes.items()}
            _dump(d / "spurious_acl.json", spur)
            if fam in well_defined:
                _dump(d / "well_defined.json", well_defined[fam])
            scenarios.append({
                "name": name,
                "family": fam,
                "encoder_id": encoder,
                "S": S,
                "Q": Q,
                "hp_size": cr.hp_size,
                "errored": len(cr.errored),
                "collapse": {k: fraction_dict(v) for k, v in cr.ratios().items()},
                "spurious_flagged": {p: {m: r["flagged"] for m, r in v.items()} for p, v in spur.items()},
                "r2": {p: {m: f.r2 for m, f in pa.fits.items()} for p, pa in planes.items()},
                "well_defined": well_defined.get(fam, {}).get("verdict", "unknown"),
            })

    summary = {
        "epsilon": [str(e) for e in eps],
        "mode": mode,
        "pairs": [list(p) for p in pairs],
        "families": families,
        "well_defined": {f: v["verdict"] for f, v in well_defined.items()},
        "scenarios": scenarios,
        "gaps": gaps,
    }
    _dump(out_dir / "summary.json", summary)
    return summary
