"""Command line front end.

Batch interface over the library: fit models, trace ambiguity curves,
write per-row flip reports, audit group selection rates, tabulate stable
points, and generate the synthetic study tables. Every output embeds a
metadata header sufficient to replay the run; apart from the timestamp
field, identical flags and seed produce byte-identical files.

Exit codes: 0 success, 2 usage error, 3 data error, 4 budget exhausted
(partial results are still written). Errors are mirrored as a one-line
JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .dataset import (
    ColumnSchema,
    DataError,
    Dataset,
    drop_columns_matching,
    load_csv,
    orthonormalize,
    write_csv,
)
from .fairness import fairness_workflow, write_fairness_csv, write_fairness_json
from .index_model import STANDARDIZATIONS, build_ensemble, flip_reports_multi
from .linear_fit import fit_on_rows
from .metrics import ambiguity_curve, curve_rows, stable_points, stable_rows
from .oracle import angle_sweep_single, simplex_sweep_k2
from .ranking import resolve_kappa
from .rashomon_single import flip_reports_single
from .reports import meta_record, write_csv_with_meta, write_reports_jsonl
from .solver import SolverConfig
from .synth import SynthConfig, generate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_BUDGET = 4

RESERVED_COLUMNS = ("row_id", "group", "split")


class UsageError(Exception):
    pass


class CertifyError(Exception):
    """An oracle cross-check disagreed with the solver."""


class _Parser(argparse.ArgumentParser):
    # argparse calls error() then exits; route through our JSON envelope.
    def error(self, message):
        raise UsageError(message)


def _emit_error(exc: Exception, exit_code: int) -> None:
    doc = {
        "error": {
            "type": type(exc).__name__,
            "message": str(exc),
            "exit_code": exit_code,
        }
    }
    print(json.dumps(doc), file=sys.stderr)


def _parse_targets(raw: str) -> tuple[str, ...]:
    names = tuple(t.strip() for t in raw.split(",") if t.strip())
    if not names:
        raise UsageError("no target names given")
    return names


def _parse_epsilons(raw: str) -> list[float]:
    try:
        eps = [float(e) for e in raw.split(",") if e.strip()]
    except ValueError as exc:
        raise UsageError(f"bad epsilon list {raw!r}: {exc}") from None
    if not eps:
        raise UsageError("no epsilon values given")
    return eps


def _parse_kappa(raw: str):
    """Integer or percent string, passed through to resolve_kappa later."""
    raw = raw.strip()
    if raw.endswith("%"):
        return raw
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"kappa must be an integer or a percent string, got {raw!r}") from None


def _load_table(path, target_names, drop_regex=None, seed: int = 0) -> Dataset:
    """Ingest a CSV, inferring features as the non-reserved columns.

    The layout is the one ``synth``/write_csv produce: an optional
    row_id column, feature columns, the named targets, and group/split
    columns. A group column is required; split and row_id are optional.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise DataError(f"{path}: empty file")
    missing = [t for t in target_names if t not in header]
    if missing:
        raise DataError(f"{path}: target column(s) {missing} not in header")
    if "group" not in header:
        raise DataError(f"{path}: expected a 'group' column")
    features = tuple(
        c for c in header if c not in target_names and c not in RESERVED_COLUMNS
    )
    if not features:
        raise DataError(f"{path}: no feature columns left after reserving {RESERVED_COLUMNS}")
    schema = ColumnSchema(
        features=features,
        targets=tuple(target_names),
        group="group",
        split="split" if "split" in header else None,
        row_id="row_id" if "row_id" in header else None,
    )
    ds = load_csv(path, schema, split_seed=seed)
    if drop_regex:
        ds = drop_columns_matching(ds, [drop_regex])
    return ds


def _phase_views(ds: Dataset):
    """(fit_rows, reference_rows, analysis_rows) masks.

    With a full train/tune/holdout tagging the analysis runs on holdout
    with tune as the standardizer reference; otherwise everything runs
    on the whole table.
    """
    masks = {tag: ds.split_mask(tag) for tag in ("train", "tune", "holdout")}
    if all(m.any() for m in masks.values()):
        return masks["train"], masks["tune"], masks["holdout"]
    every = np.ones(ds.n, dtype=bool)
    return every, every, every


def _solver_config(args) -> SolverConfig:
    kw = {}
    if args.node_budget is not None:
        kw["node_budget"] = args.node_budget
    if args.time_budget is not None:
        kw["time_budget"] = args.time_budget
    return SolverConfig(**kw)


def _base_meta(args, command: str, **extra) -> dict:
    cfg = _solver_config(args)
    return meta_record(
        command=command,
        seed=args.seed,
        node_budget=cfg.node_budget,
        time_budget=cfg.time_budget,
        **extra,
    )


# ---------------------------------------------------------------- fit


def _cmd_fit(args) -> int:
    targets = _parse_targets(args.targets)
    ds = _load_table(args.data, targets, args.drop_regex, args.seed)
    fit_rows, _, _ = _phase_views(ds)
    models = []
    for name in targets:
        model = fit_on_rows(ds.features[fit_rows], ds.target(name)[fit_rows])
        models.append(
            {
                "target": name,
                "feature_names": list(ds.feature_names),
                "coef": [float(c) for c in model.coef],
            }
        )
    meta = _base_meta(args, "fit", data=str(args.data), n_fit=int(fit_rows.sum()))
    doc = {"meta": meta, "models": models}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return EXIT_OK


# --------------------------------------------------- ambiguity-single


def _certify_single(q: Dataset, y, kappa: int, epsilons, epsilon_mode: str) -> None:
    """Cross-check flip verdicts against the disc sweep on tiny inputs."""
    if q.features.shape[1] != 2 or q.n > 60:
        return
    for eps in epsilons:
        reports, ball = flip_reports_single(
            q.features, y, eps, kappa, epsilon_mode=epsilon_mode, rank_mode="exact"
        )
        lo, hi = angle_sweep_single(q.features, ball.center, ball.radius)
        for rep, omin, omax in zip(reports, lo, hi):
            if rep.min_rank != omin or rep.max_rank != omax:
                raise CertifyError(
                    f"rank range mismatch at epsilon={eps}, row {rep.row_id}: "
                    f"solver [{rep.min_rank}, {rep.max_rank}] vs sweep [{omin}, {omax}]"
                )


def _cmd_ambiguity_single(args) -> int:
    ds = _load_table(args.data, (args.target,), args.drop_regex, args.seed)
    _, _, analysis = _phase_views(ds)
    sub = ds.subset(analysis)
    q, _basis = orthonormalize(sub)
    kappa = resolve_kappa(_parse_kappa(args.kappa), q.n)
    epsilons = _parse_epsilons(args.epsilons)
    rank_mode = "exact" if args.certify else "status"
    curve = ambiguity_curve(
        q.features,
        q.target(args.target),
        kappa,
        epsilons,
        epsilon_mode=args.epsilon_mode,
        rank_mode=rank_mode,
        config=_solver_config(args),
    )
    if args.certify:
        _certify_single(q, q.target(args.target), kappa, epsilons, args.epsilon_mode)
    meta = _base_meta(
        args,
        "ambiguity-single",
        data=str(args.data),
        target=args.target,
        kappa=str(args.kappa),
        kappa_resolved=kappa,
        epsilon_mode=args.epsilon_mode,
        mode=args.mode,
        n=q.n,
    )
    all_rows = [list(r) for r in curve_rows(curve, args.target)]
    if args.mode == "all":
        columns = ["epsilon", "ambiguity_all", "target"]
        rows = [[r[0], r[1], r[3]] for r in all_rows]
    elif args.mode == "top":
        columns = ["epsilon", "ambiguity_top", "target"]
        rows = [[r[0], r[2], r[3]] for r in all_rows]
    else:
        columns = ["epsilon", "ambiguity_all", "ambiguity_top", "target"]
        rows = all_rows
    write_csv_with_meta(args.out, meta, columns, rows)
    if any(point.n_undetermined for point in curve):
        return EXIT_BUDGET
    return EXIT_OK


# ---------------------------------------------------- ambiguity-multi


def _certify_multi(preds, kappa: int, reports) -> None:
    if preds.shape[1] != 2 or preds.shape[0] > 60:
        return
    sweep = simplex_sweep_k2(preds, kappa)
    for i, rep in enumerate(reports):
        omin, omax = int(sweep.min_ranks[i]), int(sweep.max_ranks[i])
        if rep.min_rank != omin or rep.max_rank != omax:
            raise CertifyError(
                f"rank range mismatch at row {rep.row_id}: "
                f"solver [{rep.min_rank}, {rep.max_rank}] vs sweep [{omin}, {omax}]"
            )


def _cmd_ambiguity_multi(args) -> int:
    targets = _parse_targets(args.targets)
    ds = _load_table(args.data, targets, args.drop_regex, args.seed)
    fit_rows, ref_rows, analysis = _phase_views(ds)
    Y = np.column_stack([ds.target(t) for t in targets])
    ensemble = build_ensemble(
        ds.features[fit_rows],
        Y[fit_rows],
        ds.features[ref_rows],
        standardization=args.standardize,
        target_names=targets,
    )
    sub_ids = tuple(r for r, m in zip(ds.row_ids, analysis) if m)
    kappa = resolve_kappa(_parse_kappa(args.kappa), int(analysis.sum()))
    rank_mode = "exact" if args.certify else "status"
    reports, preds = flip_reports_multi(
        ds.features[analysis],
        ensemble,
        kappa,
        row_ids=sub_ids,
        rank_mode=rank_mode,
        config=_solver_config(args),
    )
    if args.certify:
        _certify_multi(preds, kappa, reports)
    meta = _base_meta(
        args,
        "ambiguity-multi",
        data=str(args.data),
        targets=",".join(targets),
        kappa=str(args.kappa),
        kappa_resolved=kappa,
        standardization=args.standardize,
        n=int(analysis.sum()),
    )
    write_reports_jsonl(reports, args.out, meta)
    if any(rep.method == "undetermined" for rep in reports):
        return EXIT_BUDGET
    return EXIT_OK


# ----------------------------------------------------- fairness-range


def _cmd_fairness_range(args) -> int:
    targets = _parse_targets(args.targets)
    ds = _load_table(args.data, targets, args.drop_regex, args.seed)
    bundle = fairness_workflow(
        ds,
        targets,
        args.group,
        _parse_kappa(args.kappa),
        direction=args.direction,
        config=_solver_config(args),
    )
    if args.certify:
        _certify_fairness(ds, targets, args, bundle)
    meta = _base_meta(
        args,
        "fairness-range",
        data=str(args.data),
        targets=",".join(targets),
        group=args.group,
        kappa=str(args.kappa),
        direction=args.direction,
        standardization=bundle.standardization,
    )
    write_fairness_json(args.out, meta, bundle)
    table = str(args.out)
    table = table[: -len(".json")] + "_models.csv" if table.endswith(".json") else table + "_models.csv"
    write_fairness_csv(table, meta, bundle)
    statuses = (bundle.tune_report.status_min, bundle.tune_report.status_max)
    if "budget_exhausted" in statuses:
        return EXIT_BUDGET
    return EXIT_OK


def _certify_fairness(ds, targets, args, bundle) -> None:
    if len(targets) != 2:
        return
    tune = ds.split_mask("tune")
    if not tune.any() or int(tune.sum()) > 60:
        return
    fit_rows, ref_rows, _ = _phase_views(ds)
    Y = np.column_stack([ds.target(t) for t in targets])
    ensemble = build_ensemble(
        ds.features[fit_rows], Y[fit_rows], ds.features[ref_rows], target_names=targets
    )
    preds = ensemble.predictions(ds.features[tune])
    mask = ds.group_mask(args.group)[tune]
    sweep = simplex_sweep_k2(preds, bundle.kappa_tune, group_mask=mask)
    rep = bundle.tune_report
    for ours, oracle, name in (
        (rep.min_count, sweep.group_min, "min"),
        (rep.max_count, sweep.group_max, "max"),
    ):
        if ours is not None and oracle is not None and ours != int(oracle):
            raise CertifyError(f"group count {name} mismatch: solver {ours} vs sweep {int(oracle)}")


# ------------------------------------------------------ stable-points


def _stable_one_rashomon(payload):
    X, y, epsilon, epsilon_mode, kappa, cfg_kw = payload
    reports, _ball = flip_reports_single(
        X, y, epsilon, kappa, epsilon_mode=epsilon_mode, config=SolverConfig(**cfg_kw)
    )
    return stable_points(reports, kappa, "rashomon")


def _stable_one_index(payload):
    preds, kappa, cfg_kw = payload
    from .index_model import flip_search_multi

    reports = flip_search_multi(preds, kappa, config=SolverConfig(**cfg_kw))
    return stable_points(reports, kappa, "index")


def _cmd_stable_points(args) -> int:
    kappas_raw = [k.strip() for k in args.kappa_sweep.split(",") if k.strip()]
    if not kappas_raw:
        raise UsageError("empty kappa sweep")
    cfg = _solver_config(args)
    cfg_kw = {"node_budget": cfg.node_budget, "time_budget": cfg.time_budget}

    if args.family == "rashomon":
        if args.target is None:
            raise UsageError("--target is required for the rashomon family")
        ds = _load_table(args.data, (args.target,), args.drop_regex, args.seed)
        _, _, analysis = _phase_views(ds)
        q, _basis = orthonormalize(ds.subset(analysis))
        y = q.target(args.target)
        kappas = [resolve_kappa(_parse_kappa(k), q.n) for k in kappas_raw]
        payloads = [
            (q.features, y, args.epsilon, args.epsilon_mode, k, cfg_kw) for k in kappas
        ]
        worker = _stable_one_rashomon
        n_rows = q.n
    else:
        if args.targets is None:
            raise UsageError("--targets is required for the index family")
        targets = _parse_targets(args.targets)
        ds = _load_table(args.data, targets, args.drop_regex, args.seed)
        fit_rows, ref_rows, analysis = _phase_views(ds)
        Y = np.column_stack([ds.target(t) for t in targets])
        ensemble = build_ensemble(
            ds.features[fit_rows],
            Y[fit_rows],
            ds.features[ref_rows],
            standardization=args.standardize,
            target_names=targets,
        )
        preds = ensemble.predictions(ds.features[analysis])
        n_rows = int(analysis.sum())
        kappas = [resolve_kappa(_parse_kappa(k), n_rows) for k in kappas_raw]
        payloads = [(preds, k, cfg_kw) for k in kappas]
        worker = _stable_one_index

    if args.workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            sets = list(pool.map(worker, payloads))
    else:
        sets = [worker(p) for p in payloads]

    meta = _base_meta(
        args,
        "stable-points",
        data=str(args.data),
        family=args.family,
        kappa_sweep=args.kappa_sweep,
        n=n_rows,
        epsilon=args.epsilon if args.family == "rashomon" else None,
        epsilon_mode=args.epsilon_mode if args.family == "rashomon" else None,
        standardization=args.standardize if args.family == "index" else None,
    )
    write_csv_with_meta(
        args.out, meta, ["kappa", "stable_fraction", "family"], stable_rows(sets)
    )
    if any(s.undetermined for s in sets):
        return EXIT_BUDGET
    return EXIT_OK


# -------------------------------------------------------------- synth


def _cmd_synth(args) -> int:
    cfg = SynthConfig(n=args.n, b=args.b, seed=args.seed)
    write_csv(generate(cfg), args.out)
    return EXIT_OK


# ------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topkflip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--node-budget", type=int, default=None)
        p.add_argument("--time-budget", type=float, default=None)
        p.add_argument(
            "--certify",
            action="store_true",
            help="run exact rank searches and cross-check oracles on small inputs",
        )
        p.add_argument("--drop-regex", default=None, help="drop matching feature columns")
        p.add_argument(
            "--workers",
            type=int,
            default=1,
            help="fan out independent solves where applicable (kappa sweeps)",
        )

    p = sub.add_parser("fit", help="least-squares models per target")
    p.add_argument("--data", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("ambiguity-single", help="ambiguity curve over model tolerance")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--kappa", required=True)
    p.add_argument("--epsilons", required=True)
    p.add_argument("--mode", choices=("all", "top", "both"), default="both")
    p.add_argument("--epsilon-mode", choices=("relative", "absolute"), default="relative")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_ambiguity_single)

    p = sub.add_parser("ambiguity-multi", help="per-row flip reports over target blends")
    p.add_argument("--data", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--kappa", required=True)
    p.add_argument("--standardize", choices=STANDARDIZATIONS, default="zscore")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_ambiguity_multi)

    p = sub.add_parser("fairness-range", help="group selection rate range and audit")
    p.add_argument("--data", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--group", required=True)
    p.add_argument("--kappa", required=True)
    p.add_argument("--direction", choices=("min", "max", "both"), default="both")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_fairness_range)

    p = sub.add_parser("stable-points", help="stable fraction across a kappa sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--family", choices=("rashomon", "index"), required=True)
    p.add_argument("--kappa-sweep", required=True)
    p.add_argument("--target", default=None, help="target for the rashomon family")
    p.add_argument("--epsilon", type=float, default=0.1, help="tolerance for the rashomon family")
    p.add_argument("--epsilon-mode", choices=("relative", "absolute"), default="relative")
    p.add_argument("--targets", default=None, help="targets for the index family")
    p.add_argument("--standardize", choices=STANDARDIZATIONS, default="zscore")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_stable_points)

    p = sub.add_parser("synth", help="two-target age study table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _emit_error(exc, EXIT_USAGE)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        _emit_error(exc, EXIT_DATA)
        return EXIT_DATA
    except ValueError as exc:
        _emit_error(exc, EXIT_DATA)
        return EXIT_DATA
    except CertifyError as exc:
        _emit_error(exc, 1)
        return 1


if __name__ == "__main__":
    sys.exit(main())
