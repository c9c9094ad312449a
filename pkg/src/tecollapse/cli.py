"""Command-line entry point.

Exit codes: 0 success, 1 training failure, 2 input or configuration error,
3 integrity error (corrupt or inconsistent files).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .collapse import MODES, as_fraction, check_eps, fraction_dict, group_records
from .core import Modality
from .errors import ConfigError, InputError, IntegrityError, TecollapseError
from .otl import fraction_best, rank_methods_per_scenario
from .report import build_report, scenario_collapse, scenario_planes
from .tab2text import FileEncoder, MockEncoder, encode_dataset, write_embedding_file
from .workspace import Workspace, sha256_file
from .zoo.sweep import SweepManifest, read_records, run_sweep, write_records

log = logging.getLogger("tecollapse")


def _parse_eps(text: str | None):
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (1, 2) or not all(parts):
        raise ConfigError(f"--eps takes one value or two comma-separated values, got {text!r}")
    try:
        vals = [check_eps(as_fraction(p)) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, TecollapseError):
            raise
        raise ConfigError(f"--eps: {exc}") from None
    return (vals[0], vals[-1])


def _eps(args):
    return _parse_eps(args.eps) or _parse_eps(args.global_eps) or _parse_eps("0.1")


def _parse_pair(text: str) -> tuple[str, str]:
    S, sep, Q = text.partition(":")
    if not sep or not S or not Q:
        raise ConfigError(f"--pair expects S:Q, got {text!r}")
    return S, Q


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_records(ws: Workspace, path: str):
    if not Path(path).exists():
        raise InputError(f"prediction file not found: {path}")
    return read_records(path, ws.test_sets())


def _select(records, family: str | None, encoder: str | None):
    if family is not None:
        records = [r for r in records if r.family == family]
        if not records:
            raise InputError(f"no records for family {family!r}")
    if encoder is not None:
        records = [r for r in records if r.modality is Modality.TABULAR or r.encoder_id == encoder]
    return records


# subcommands


def cmd_init_demo(args) -> int:
    from .demo import init_demo

    root = Path(args.workspace)
    if (root / "workspace.toml").exists() and not args.force:
        raise ConfigError(f"{root} already holds a workspace; pass --force to overwrite")
    init_demo(root, seed=args.seed or 0)
    log.info("demo workspace written to %s", root)
    return 0


def cmd_embed(args) -> int:
    ws = Workspace.load(args.workspace, create=True)
    dataset = args.id or Path(args.data).stem
    if args.schema is not None:
        ws.register_dataset(dataset, args.data, args.schema)
    table = ws.table(dataset)
    seed = args.enc_seed if args.enc_seed is not None else (args.seed or 0)
    if args.encoder == "mock":
        encoder = MockEncoder(dim=args.dim, seed=seed)
    elif args.encoder.startswith("file:"):
        encoder = FileEncoder(Path(args.encoder[5:]))
    else:
        raise ConfigError(f"unknown encoder {args.encoder!r}, expected 'mock' or 'file:PATH'")
    m = encode_dataset(table.rows, table.schema, encoder, dataset)
    out = Path(args.out) if args.out else ws.embedding_path(dataset, m.encoder_id)
    if out.exists() and not args.force:
        raise ConfigError(f"{out} exists; pass --force to overwrite")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_embedding_file(m, out)
    try:
        rel = out.resolve().relative_to(ws.root.resolve()).as_posix()
    except ValueError:
        rel = out.resolve().as_posix()
    ws.record_provenance("embeddings", f"{dataset}__{m.encoder_id}", {
        "dataset": dataset,
        "encoder_id": m.encoder_id,
        "path": rel,
        "rows": len(m),
        "dim": m.dim,
        "sha256": sha256_file(out),
    })
    log.info("wrote %d x %d embeddings to %s", len(m), m.dim, out)
    return 0


def cmd_sweep(args) -> int:
    ws = Workspace.load(args.workspace)
    m = SweepManifest.load(args.manifest)
    if args.seed is not None:
        m = replace(m, seed=args.seed)
    records = run_sweep(m, ws.sweep_data(m), jobs=args.jobs)
    write_records(args.out, records)
    errored = sorted({(r.config_id, r.encoder_id or "tabular") for r in records if r.errored})
    for cid, label in errored:
        log.warning("config %s (%s) errored; logged in %s", cid, label, args.out)
    ws.record_provenance("sweeps", Path(args.out).name, {
        "manifest": str(args.manifest),
        "manifest_digest": m.digest(),
        "records": len(records),
        "errored_configs": len(errored),
        "sha256": sha256_file(args.out),
    })
    log.info("%d records written to %s", len(records), args.out)
    return 0


def cmd_collapse(args) -> int:
    ws = Workspace.load(args.workspace)
    records = _select(_load_records(ws, args.pred), args.family, args.encoder)
    S, Q = _parse_pair(args.pair)
    eps = _eps(args)
    test_sets = ws.test_sets()
    modality = None if args.modality == "all" else Modality(args.modality)
    reports = []
    for (fam, mod, enc), recs in group_records(records, modality).items():
        if not any(r.test_domain == S for r in recs) or not any(r.test_domain == Q for r in recs):
            continue
        cr = scenario_collapse(recs, S, Q, test_sets, eps, args.mode)
        reports.append({"family": fam, "modality": mod, "encoder_id": enc, **cr.to_dict()})
    if not reports:
        raise InputError(f"no records cover both {S} and {Q}")
    _write_json({"epsilon": [str(e) for e in eps], "mode": args.mode, "reports": reports}, args.out)
    return 0


def cmd_otl(args) -> int:
    ws = Workspace.load(args.workspace)
    records = _select(_load_records(ws, args.pred), args.family, args.encoder)
    families = sorted({r.family for r in records})
    if len(families) != 1:
        raise InputError(f"records span families {families}; choose one with --family")
    groups: dict[str, list] = {}
    for (_, mod, enc), recs in group_records(records).items():
        if mod in groups:
            raise InputError(f"several {mod} groups in the records; choose one with --encoder")
        groups[mod] = recs
    pa = scenario_planes(groups, args.id, args.ood, ws.test_sets(), args.metric, _eps(args))
    if args.csv:
        Path(args.csv).write_text(pa.to_csv(), encoding="utf-8")
    if args.svg:
        Path(args.svg).write_text(pa.to_svg(f"{families[0]}: {args.id} vs {args.ood}"), encoding="utf-8")
    _write_json(pa.to_dict(), args.json)
    return 0


def _read_metric_table(path: str) -> dict[tuple[str, str], float]:
    p = Path(path)
    if not p.exists():
        raise InputError(f"table not found: {path}")
    with p.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise InputError(f"{path}: need a header and at least one row")
    header = [c.strip() for c in rows[0]]
    table = {}
    try:
        if header == ["method", "scenario", "value"]:
            for r in rows[1:]:
                table[(r[0].strip(), r[1].strip())] = float(r[2])
        else:
            # wide: first column names the method, one column per scenario
            for r in rows[1:]:
                if len(r) != len(header):
                    raise InputError(f"{path}: row {r[0]!r} has {len(r)} cells, header has {len(header)}")
                for s, v in zip(header[1:], r[1:]):
                    table[(r[0].strip(), s)] = float(v)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, TecollapseError):
            raise
        raise InputError(f"{path}: {exc}") from None
    return table


def cmd_fractionbest(args) -> int:
    table = _read_metric_table(args.table)
    fb = fraction_best(table, args.delta)
    ranking = rank_methods_per_scenario(table)
    out = fb.to_dict()
    out["per_method"] = {m: {**v, **fraction_dict(fb.per_method[m])} for m, v in out["per_method"].items()}
    out["ranking"] = {s: [{"method": e.method, "score": e.score, "rank": e.rank, "tied": e.tied} for e in entries]
                      for s, entries in ranking.items()}
    _write_json(out, args.out)
    return 0


def cmd_report(args) -> int:
    ws = Workspace.load(args.workspace)
    records = _load_records(ws, args.pred)
    pairs = [_parse_pair(p) for p in args.pair or []]
    if args.manifest:
        m = SweepManifest.load(args.manifest)
        pairs += [(m.id_test, q) for q in m.ood_tests]
    if not pairs:
        raise ConfigError("report needs --pair S:Q or --manifest")
    summary = build_report(records, ws.test_sets(), pairs, args.out, _eps(args), args.mode)
    for g in summary["gaps"]:
        log.warning("gap: %s", g)
    log.info("report bundle with %d scenarios written to %s", len(summary["scenarios"]), args.out)
    return 0


def cmd_validate(args) -> int:
    ws = Workspace.load(args.workspace)
    problems = ws.validate()
    for p in args.pred or []:
        try:
            read_records(p, ws.test_sets())
        except TecollapseError as exc:
            problems.append(f"{p}: {exc}")
    for line in problems:
        print(line)
    if problems:
        raise IntegrityError(f"{len(problems)} problem(s) found")
    log.info("workspace %s is consistent", ws.root)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workspace", default=argparse.SUPPRESS, help="workspace directory (default .)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the run seed")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="tecollapse", description="Collapse and on-the-line analysis for "
                                "tabular vs embedded classifiers.")
    p.add_argument("--workspace", default=".")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eps", dest="global_eps", default=None, help="default epsilon, one value or S,Q")
    p.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init-demo", parents=[common], help="write the synthetic demo workspace")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_init_demo)

    s = sub.add_parser("embed", parents=[common], help="encode a dataset into a CSEM file")
    s.add_argument("--data", required=True, help="dataset CSV")
    s.add_argument("--schema", help="schema TOML (registers the dataset)")
    s.add_argument("--id", help="dataset id (default: CSV file stem)")
    s.add_argument("--encoder", default="mock", help="mock or file:PATH")
    s.add_argument("--dim", type=int, default=64)
    s.add_argument("--encoder-seed", dest="enc_seed", type=int, default=None,
                   help="mock encoder seed (default: --seed, else 0)")
    s.add_argument("--out", help="output path (default: workspace embeddings/)")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("sweep", parents=[common], help="train every config of a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True, help="prediction JSONL")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("collapse", parents=[common], help="collapse ratios for one test-set pair")
    s.add_argument("--pred", required=True)
    s.add_argument("--pair", required=True, help="S:Q")
    s.add_argument("--eps", default=None)
    s.add_argument("--mode", choices=MODES, default="inclusive")
    s.add_argument("--modality", choices=["all", "tabular", "embedded"], default="all")
    s.add_argument("--family")
    s.add_argument("--encoder")
    s.add_argument("--out")
    s.set_defaults(func=cmd_collapse)

    s = sub.add_parser("otl", parents=[common], help="ID/OOD plane, fits and spurious-fit check")
    s.add_argument("--pred", required=True)
    s.add_argument("--id", required=True)
    s.add_argument("--ood", required=True)
    s.add_argument("--metric", choices=["acc", "f1"], default="acc")
    s.add_argument("--eps", default=None)
    s.add_argument("--family")
    s.add_argument("--encoder")
    s.add_argument("--svg")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.set_defaults(func=cmd_otl)

    s = sub.add_parser("fractionbest", parents=[common], help="share of scenarios each method wins")
    s.add_argument("--table", required=True, help="CSV, long (method,scenario,value) or wide")
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fractionbest)

    s = sub.add_parser("report", parents=[common], help="write the full report bundle")
    s.add_argument("--pred", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--pair", action="append", help="S:Q, repeatable")
    s.add_argument("--manifest", help="take pairs from a manifest (ID test vs each OOD test)")
    s.add_argument("--eps", default=None)
    s.add_argument("--mode", choices=MODES, default="inclusive")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("validate", parents=[common], help="check workspace integrity")
    s.add_argument("--pred", action="append")
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if not hasattr(args, "eps"):
        args.eps = None
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except TecollapseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
