"""Group selection-count ranges over blend weights, and the split workflow
that tunes a rate-maximizing blend and audits it held out.

Counts are certified by the branch-and-bound solver on the weight
simplex. The workflow fits per-target models on the train rows, freezes
standardization and finds the extreme blend on the tune rows, then
evaluates that blend next to every single-target model on the holdout
rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .dataset import Dataset
from .index_model import IndexEnsemble, build_ensemble
from .ranking import rank_descending, resolve_kappa
from .reports import write_csv_with_meta
from .solver import SimplexRegion, SolverConfig, group_query, solve

DIRECTIONS = ("min", "max", "both")


class PhaseError(RuntimeError):
    """Workflow failure tagged with the phase that raised it."""

    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"phase {phase!r}: {cause}")
        self.phase = phase
        self.cause = cause


@dataclass(frozen=True)
class GroupRateReport:
    """Extreme group counts in the top set over all blend weights.

    Rates are counts over kappa. When a direction hits the solver budget
    the count field holds the best achievable incumbent and the bound
    field the proven bound on that side; they match when the status is
    optimal. One-hot counts use the deterministic index tie-break and so
    must sit inside [min_count, max_count].
    """

    group_label: str
    kappa: int
    n: int
    n_group: int
    min_count: int | None = None
    max_count: int | None = None
    min_rate: float | None = None
    max_rate: float | None = None
    alpha_at_min: NDArray | None = None
    alpha_at_max: NDArray | None = None
    status_min: str | None = None
    status_max: str | None = None
    bound_min: int | None = None
    bound_max: int | None = None
    one_hot_counts: tuple = ()
    one_hot_rates: tuple = ()

    def to_dict(self) -> dict:
        def _alpha(a):
            return None if a is None else [float(v) for v in a]

        return {
            "group_label": self.group_label,
            "kappa": self.kappa,
            "n": self.n,
            "n_group": self.n_group,
            "min_count": self.min_count,
            "max_count": self.max_count,
            "min_rate": self.min_rate,
            "max_rate": self.max_rate,
            "alpha_at_min": _alpha(self.alpha_at_min),
            "alpha_at_max": _alpha(self.alpha_at_max),
            "status_min": self.status_min,
            "status_max": self.status_max,
            "bound_min": self.bound_min,
            "bound_max": self.bound_max,
            "one_hot_counts": list(self.one_hot_counts),
            "one_hot_rates": list(self.one_hot_rates),
        }


def _normalized(alpha):
    if alpha is None:
        return None
    alpha = np.asarray(alpha, dtype=np.float64)
    total = float(alpha.sum())
    return alpha / total if total > 0 else alpha


def _simplest_attaining(P, kappa, mask, count, witness):
    """Prefer a one-hot (then uniform) blend among exact maximizer ties.

    The solver certifies the extreme count but its witness is an
    arbitrary point of the attaining cell. Any candidate whose realized
    count equals the certified extreme is an equally valid witness, and
    a vertex generalizes better and reads better than an interior blend.
    """
    if count is None:
        return _normalized(witness)
    K = P.shape[1]
    candidates = [np.eye(K)[k] for k in range(K)] + [np.full(K, 1.0 / K)]
    for alpha in candidates:
        flags = rank_descending(P @ alpha, kappa).top_flags
        if int(np.count_nonzero(flags & mask)) == count:
            return alpha
    return _normalized(witness)


def group_rate_extremes(
    preds: NDArray[np.float64],
    kappa: int,
    group_mask: NDArray[np.bool_],
    direction: str = "both",
    group_label: str = "group",
    config: SolverConfig | None = None,
) -> GroupRateReport:
    """Certified min and/or max of the group's top-set count over blends."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    P = np.asarray(preds, dtype=np.float64)
    mask = np.asarray(group_mask, dtype=bool)
    n, K = P.shape
    if mask.shape != (n,):
        raise ValueError("group_mask must have one flag per row")
    if not 1 <= kappa <= n:
        raise ValueError(f"kappa must be in [1, {n}], got {kappa}")
    cfg = config or SolverConfig()
    region = SimplexRegion(dim=K)
    group_rows = np.flatnonzero(mask)

    fields: dict = {}
    for sense in ("min", "max"):
        if direction not in (sense, "both"):
            continue
        sol = solve(group_query(sense, region, P, group_rows, kappa), cfg)
        count = None if sol.value is None else int(sol.value)
        fields[f"{sense}_count"] = count
        fields[f"{sense}_rate"] = None if count is None else count / kappa
        fields[f"alpha_at_{sense}"] = _simplest_attaining(P, kappa, mask, count, sol.witness)
        fields[f"status_{sense}"] = sol.status
        fields[f"bound_{sense}"] = None if sol.bound is None else int(sol.bound)

    one_hot_counts = []
    for k in range(K):
        flags = rank_descending(P[:, k], kappa).top_flags
        one_hot_counts.append(int(np.count_nonzero(flags & mask)))
    return GroupRateReport(
        group_label=group_label,
        kappa=kappa,
        n=n,
        n_group=int(mask.sum()),
        one_hot_counts=tuple(one_hot_counts),
        one_hot_rates=tuple(c / kappa for c in one_hot_counts),
        **fields,
    )


@dataclass(frozen=True)
class ModelEvaluation:
    """Holdout audit of one scoring rule (a blend or a single target).

    ``group_share`` is the group's fraction of the selected set,
    ``group_capture`` the selected fraction of the group, and
    ``concentration[k]`` the share of target k's holdout total carried by
    the selected rows.
    """

    label: str
    alpha: tuple
    group_count: int
    group_share: float
    group_capture: float
    concentration: tuple

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "alpha": list(self.alpha),
            "group_count": self.group_count,
            "group_share": self.group_share,
            "group_capture": self.group_capture,
            "concentration": list(self.concentration),
        }


@dataclass(frozen=True)
class FairnessBundle:
    """Everything the three-phase run produced, serializable as one JSON
    document."""

    group_label: str
    target_names: tuple
    standardization: str
    kappa_input: str
    kappa_tune: int
    kappa_holdout: int
    n_train: int
    n_tune: int
    n_holdout: int
    tune_report: GroupRateReport
    alpha_star: tuple
    evaluations: tuple

    def to_dict(self) -> dict:
        return {
            "group_label": self.group_label,
            "target_names": list(self.target_names),
            "standardization": self.standardization,
            "kappa_input": self.kappa_input,
            "kappa_tune": self.kappa_tune,
            "kappa_holdout": self.kappa_holdout,
            "n_train": self.n_train,
            "n_tune": self.n_tune,
            "n_holdout": self.n_holdout,
            "tune_report": self.tune_report.to_dict(),
            "alpha_star": list(self.alpha_star),
            "evaluations": [ev.to_dict() for ev in self.evaluations],
        }


def evaluate_selection(
    scores: NDArray[np.float64],
    kappa: int,
    group_mask: NDArray[np.bool_],
    targets: NDArray[np.float64],
    label: str,
    alpha,
) -> ModelEvaluation:
    """Audit the top-kappa set one scoring rule selects.

    Concentration divides by each target's total; a zero total yields nan
    rather than a silent zero.
    """
    flags = rank_descending(scores, kappa).top_flags
    mask = np.asarray(group_mask, dtype=bool)
    count = int(np.count_nonzero(flags & mask))
    n_group = int(mask.sum())
    conc = []
    Y = np.asarray(targets, dtype=np.float64)
    for k in range(Y.shape[1]):
        total = float(Y[:, k].sum())
        conc.append(float(Y[flags, k].sum()) / total if total != 0 else float("nan"))
    return ModelEvaluation(
        label=label,
        alpha=tuple(float(v) for v in np.asarray(alpha, dtype=np.float64)),
        group_count=count,
        group_share=count / kappa,
        group_capture=count / n_group if n_group else float("nan"),
        concentration=tuple(conc),
    )


def fairness_workflow(
    ds: Dataset,
    targets,
    group_label: str,
    kappa,
    standardization: str = "zscore",
    direction: str = "max",
    config: SolverConfig | None = None,
) -> FairnessBundle:
    """Tune a rate-maximizing blend on one split, audit it on another.

    Train rows fit the per-target models, tune rows freeze the
    standardizer and host the extreme-count search, holdout rows receive
    the witness blend next to every one-hot. The kappa argument may be
    an ``int`` or a percent string and resolves against each phase's
    size separately. The evaluated blend is the max witness when the
    direction includes max, otherwise the min witness.
    """
    target_names = tuple(targets)

    def phase(name):
        class _Ctx:
            def __enter__(self):
                return None

            def __exit__(self, exc_type, exc, tb):
                if exc is not None and not isinstance(exc, PhaseError):
                    raise PhaseError(name, exc) from exc
                return False

        return _Ctx()

    with phase("split"):
        masks = {tag: ds.split_mask(tag) for tag in ("train", "tune", "holdout")}
        for tag, m in masks.items():
            if not m.any():
                raise ValueError(f"split {tag!r} has no rows")
        Y = np.column_stack([ds.target(name) for name in target_names])
        group_all = ds.group_mask(group_label)
        if not group_all.any():
            raise ValueError(f"group {group_label!r} has no rows")

    with phase("fit"):
        tr = masks["train"]
        ensemble = build_ensemble(
            ds.features[tr],
            Y[tr],
            ds.features[masks["tune"]],
            standardization=standardization,
            target_names=target_names,
        )

    with phase("tune-extremes"):
        tu = masks["tune"]
        preds_tune = ensemble.predictions(ds.features[tu])
        kappa_tune = resolve_kappa(kappa, int(tu.sum()))
        tune_report = group_rate_extremes(
            preds_tune,
            kappa_tune,
            group_all[tu],
            direction=direction,
            group_label=group_label,
            config=config,
        )
        alpha_star = tune_report.alpha_at_max
        if alpha_star is None:
            alpha_star = tune_report.alpha_at_min
        if alpha_star is None:
            alpha_star = np.full(len(target_names), 1.0 / len(target_names))

    with phase("holdout-eval"):
        ho = masks["holdout"]
        preds_hold = ensemble.predictions(ds.features[ho])
        kappa_hold = resolve_kappa(kappa, int(ho.sum()))
        group_hold = group_all[ho]
        Y_hold = Y[ho]
        evals = [
            evaluate_selection(
                preds_hold @ alpha_star, kappa_hold, group_hold, Y_hold, "index", alpha_star
            )
        ]
        for k, name in enumerate(target_names):
            one_hot = np.zeros(len(target_names))
            one_hot[k] = 1.0
            evals.append(
                evaluate_selection(
                    preds_hold[:, k], kappa_hold, group_hold, Y_hold, name, one_hot
                )
            )

    return FairnessBundle(
        group_label=group_label,
        target_names=target_names,
        standardization=standardization,
        kappa_input=str(kappa),
        kappa_tune=kappa_tune,
        kappa_holdout=kappa_hold,
        n_train=int(tr.sum()),
        n_tune=int(tu.sum()),
        n_holdout=int(ho.sum()),
        tune_report=tune_report,
        alpha_star=tuple(float(v) for v in alpha_star),
        evaluations=tuple(evals),
    )


def write_fairness_json(path, meta: dict, report) -> None:
    """One JSON document: the metadata record plus the report payload.

    Accepts either a workflow bundle or a bare extremes report.
    """
    doc = {"meta": meta, "report": report.to_dict()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_fairness_csv(path, meta: dict, bundle: FairnessBundle) -> None:
    """Bar-chart-ready table: one row per audited model."""
    columns = ["model", "group_count", "group_share", "group_capture"] + [
        f"concentration_{name}" for name in bundle.target_names
    ]
    rows = [
        [ev.label, ev.group_count, repr(ev.group_share), repr(ev.group_capture)]
        + [repr(c) for c in ev.concentration]
        for ev in bundle.evaluations
    ]
    write_csv_with_meta(path, meta, columns, rows)
