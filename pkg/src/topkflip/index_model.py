"""Blends of per-target predictions over the weight simplex.

An index ensemble holds one fitted linear model per target plus a
standardizer frozen on a reference sample; a blend weight alpha on the
simplex turns the standardized per-target predictions into one index
score per row. Flippability here needs no baseline model: a row is
changeable when its rank range straddles the cutoff anywhere on the
simplex. The uniform blend serves as the reported reference point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .linear_fit import LinearModel, fit_on_rows
from .ranking import rank_descending
from .rashomon_single import AmbiguityResult, PruneResult, ambiguity_single, prune_from_sup_matrix
from .reports import FlipReport
from .solver import SimplexRegion, SolverConfig, rank_query, solve

STANDARDIZATIONS = ("zscore", "percentile", "none")


@dataclass(frozen=True)
class Standardizer:
    """Per-target prediction scaling with parameters frozen at fit time.

    ``zscore`` centers and scales by the reference mean and population
    standard deviation; a zero-spread prediction vector is refused since
    it cannot be put on a comparable scale. ``percentile`` maps a value
    to its average rank among the reference values divided by the
    reference size, so outputs lie in (0, 1]. ``none`` passes raw values
    through.
    """

    mode: str
    target_names: tuple[str, ...]
    means: NDArray[np.float64] | None = None
    sds: NDArray[np.float64] | None = None
    references: "tuple[NDArray[np.float64], ...] | None" = None

    def __post_init__(self):
        if self.mode not in STANDARDIZATIONS:
            raise ValueError(f"mode must be one of {STANDARDIZATIONS}, got {self.mode!r}")

    @classmethod
    def fit(cls, raw_reference: NDArray[np.float64], mode: str, target_names) -> "Standardizer":
        if mode not in STANDARDIZATIONS:
            raise ValueError(f"mode must be one of {STANDARDIZATIONS}, got {mode!r}")
        R = np.asarray(raw_reference, dtype=np.float64)
        names = tuple(target_names)
        if R.ndim != 2 or R.shape[1] != len(names):
            raise ValueError("reference must be (n, K) matching target_names")
        if mode == "zscore":
            means = R.mean(axis=0)
            sds = R.std(axis=0)
            for k, sd in enumerate(sds):
                if sd == 0:
                    raise ValueError(
                        f"target {names[k]!r} has zero-variance predictions "
                        "on the reference rows; zscore scaling is undefined"
                    )
            return cls(mode=mode, target_names=names, means=means, sds=sds)
        if mode == "percentile":
            refs = tuple(np.sort(R[:, k]) for k in range(R.shape[1]))
            return cls(mode=mode, target_names=names, references=refs)
        return cls(mode="none", target_names=names)

    def transform(self, raw: NDArray[np.float64]) -> NDArray[np.float64]:
        R = np.asarray(raw, dtype=np.float64)
        if self.mode == "none":
            return R.copy()
        if self.mode == "zscore":
            return (R - self.means) / self.sds
        out = np.empty_like(R)
        for k, ref in enumerate(self.references):
            left = np.searchsorted(ref, R[:, k], side="left")
            right = np.searchsorted(ref, R[:, k], side="right")
            # average rank scaled to [0, 1]; values beyond the reference
            # range saturate rather than extrapolate
            out[:, k] = np.clip((left + right + 1) / 2.0 / ref.shape[0], 0.0, 1.0)
        return out

    def to_dict(self) -> dict:
        doc = {"mode": self.mode, "target_names": list(self.target_names)}
        if self.mode == "zscore":
            doc["means"] = [float(v) for v in self.means]
            doc["sds"] = [float(v) for v in self.sds]
        elif self.mode == "percentile":
            doc["references"] = [[float(v) for v in ref] for ref in self.references]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Standardizer":
        mode = doc["mode"]
        names = tuple(doc["target_names"])
        if mode == "zscore":
            return cls(
                mode=mode,
                target_names=names,
                means=np.array(doc["means"], dtype=np.float64),
                sds=np.array(doc["sds"], dtype=np.float64),
            )
        if mode == "percentile":
            return cls(
                mode=mode,
                target_names=names,
                references=tuple(np.array(r, dtype=np.float64) for r in doc["references"]),
            )
        return cls(mode="none", target_names=names)


@dataclass(frozen=True)
class IndexEnsemble:
    """Per-target linear models plus the frozen standardizer."""

    models: tuple[LinearModel, ...]
    standardizer: Standardizer

    @property
    def K(self) -> int:
        return len(self.models)

    @property
    def target_names(self) -> tuple[str, ...]:
        return self.standardizer.target_names

    def raw_predictions(self, X: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.column_stack([m.predict(X) for m in self.models])

    def predictions(self, X: NDArray[np.float64]) -> NDArray[np.float64]:
        """Standardized per-target predictions, the solver's row vectors."""
        return self.standardizer.transform(self.raw_predictions(X))

    def index_scores(self, X: NDArray[np.float64], alpha) -> NDArray[np.float64]:
        alpha = np.asarray(alpha, dtype=np.float64)
        return self.predictions(X) @ alpha

    def to_dict(self) -> dict:
        return {
            "coefs": [[float(v) for v in m.coef] for m in self.models],
            "standardizer": self.standardizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IndexEnsemble":
        std = Standardizer.from_dict(doc["standardizer"])
        models = tuple(
            LinearModel(coef=np.array(c, dtype=np.float64), target_name=name)
            for c, name in zip(doc["coefs"], std.target_names)
        )
        return cls(models=models, standardizer=std)


def build_ensemble(
    X_train: NDArray[np.float64],
    Y_train: NDArray[np.float64],
    X_reference: NDArray[np.float64],
    standardization: str = "zscore",
    target_names=None,
) -> IndexEnsemble:
    """Fit one model per target on the training rows and freeze the
    standardizer on the reference rows' raw predictions."""
    Y = np.asarray(Y_train, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("Y_train must be (n, K)")
    K = Y.shape[1]
    if target_names is None:
        target_names = tuple(f"target{k}" for k in range(K))
    models = tuple(
        fit_on_rows(X_train, Y[:, k], target_name=name) for k, name in zip(range(K), target_names)
    )
    raw_ref = np.column_stack([m.predict(X_reference) for m in models])
    std = Standardizer.fit(raw_ref, standardization, target_names)
    return IndexEnsemble(models=models, standardizer=std)


def fit_index_variable(
    X: NDArray[np.float64],
    Y: NDArray[np.float64],
    alpha,
    target_name: str | None = None,
) -> LinearModel:
    """Fit one model to the blended outcome sum_k alpha_k y_k.

    For least-squares fits the prediction map is linear in the outcome, so
    this coincides with blending the per-target raw predictions by the
    same weights; the equivalence breaks once a nonlinear standardization
    sits between fit and blend.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    y_blend = np.asarray(Y, dtype=np.float64) @ alpha
    return fit_on_rows(X, y_blend, target_name=target_name)


def gap_bound_multi(
    preds: NDArray[np.float64], alpha_ref=None
) -> NDArray[np.float64]:
    """Screening bound on the blend gap: reference gap plus the L1 bound
    on how far the gap can move from the reference blend.

    Entry [i, j] bounds score(i) - score(j) from above over the simplex;
    the uniform blend is the default reference. Looser than
    :func:`gap_sup_multi` but mirrors the additive center-plus-spread
    shape of the single-target bound.
    """
    P = np.asarray(preds, dtype=np.float64)
    n, K = P.shape
    if alpha_ref is None:
        alpha_ref = np.full(K, 1.0 / K)
    ref = P @ np.asarray(alpha_ref, dtype=np.float64)
    diff_l1 = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return ref[:, None] - ref[None, :] + diff_l1


def gap_sup_multi(preds: NDArray[np.float64]) -> NDArray[np.float64]:
    """Exact supremum of score(i) - score(j) over the simplex: the gap is
    linear in alpha, so the extreme sits at a one-hot vertex."""
    P = np.asarray(preds, dtype=np.float64)
    diffs = P[:, None, :] - P[None, :, :]
    return diffs.max(axis=2)


def prune_never_top_multi(preds: NDArray[np.float64], kappa: int) -> PruneResult:
    """Membership fixed by exact vertex gap ranges, trimming the simplex
    search the same way the ball bounds trim the single-target one."""
    return prune_from_sup_matrix(gap_sup_multi(preds), kappa)


def max_prediction_alpha(pred_row: NDArray[np.float64]) -> NDArray[np.float64]:
    """One-hot weight maximizing this row's index score (lowest index on
    ties)."""
    row = np.asarray(pred_row, dtype=np.float64)
    alpha = np.zeros(row.shape[0])
    alpha[int(np.argmax(row))] = 1.0
    return alpha


def witness_pool_alphas(K: int) -> NDArray[np.float64]:
    """Deterministic blend weights worth checking: one-hots, the uniform
    blend, and every pairwise half-and-half blend."""
    pool = [np.eye(K)[k] for k in range(K)]
    pool.append(np.full(K, 1.0 / K))
    for a in range(K):
        for b in range(a + 1, K):
            mid = np.zeros(K)
            mid[a] = mid[b] = 0.5
            pool.append(mid)
    return np.vstack(pool)


def flip_search_multi(
    preds: NDArray[np.float64],
    kappa: int,
    row_ids=None,
    rank_mode: str = "status",
    config: SolverConfig | None = None,
) -> "list[FlipReport]":
    """Certify each row's top membership behavior across blend weights.

    Mirrors the single-target staging; the baseline rank is taken at the
    uniform blend and a row is flippable when its certified rank range
    straddles kappa anywhere on the simplex.
    """
    if rank_mode not in ("status", "exact"):
        raise ValueError(f"rank_mode must be status or exact, got {rank_mode!r}")
    P = np.asarray(preds, dtype=np.float64)
    n, K = P.shape
    cfg = config or SolverConfig()
    if row_ids is None:
        row_ids = [str(i) for i in range(n)]
    if not 1 <= kappa <= n:
        raise ValueError(f"kappa must be in [1, {n}], got {kappa}")

    uniform = np.full(K, 1.0 / K)
    base = rank_descending(P @ uniform, kappa)
    prune = prune_never_top_multi(P, kappa)

    pool = witness_pool_alphas(K)
    seen_min = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    seen_max = np.zeros(n, dtype=np.int64)
    enter_alpha: "list[NDArray | None]" = [None] * n
    exit_alpha: "list[NDArray | None]" = [None] * n
    scores = P @ pool.T
    for col in range(pool.shape[0]):
        ranks = rank_descending(scores[:, col], kappa).ranks
        improved_in = ranks < seen_min
        improved_out = ranks > seen_max
        np.minimum(seen_min, ranks, out=seen_min)
        np.maximum(seen_max, ranks, out=seen_max)
        for i in np.flatnonzero(improved_in & (ranks <= kappa)):
            if enter_alpha[i] is None:
                enter_alpha[i] = pool[col]
        for i in np.flatnonzero(improved_out & (ranks > kappa)):
            if exit_alpha[i] is None:
                exit_alpha[i] = pool[col]

    region = SimplexRegion(dim=K)
    reports: list[FlipReport] = []
    for i in range(n):
        b_rank = int(base.ranks[i])
        omin = int(prune.outer_min[i])
        omax = int(prune.outer_max[i])

        if rank_mode == "status":
            if prune.never_top[i] or prune.always_top[i]:
                reports.append(
                    FlipReport(
                        row_id=row_ids[i],
                        baseline_rank=b_rank,
                        min_rank=omin,
                        max_rank=omax,
                        flippable=False,
                        method="pruned_unflippable",
                    )
                )
                continue
            if seen_min[i] <= kappa < seen_max[i]:
                wit = exit_alpha[i] if b_rank <= kappa else enter_alpha[i]
                reports.append(
                    FlipReport(
                        row_id=row_ids[i],
                        baseline_rank=b_rank,
                        min_rank=omin,
                        max_rank=omax,
                        flippable=True,
                        method="closed_form_flip",
                        witness=wit,
                        witness_kind=None if wit is None else "alpha",
                    )
                )
                continue

        sol_min = solve(rank_query("min", region, P, i), cfg)
        sol_max = solve(rank_query("max", region, P, i), cfg)
        if sol_min.status == "optimal" and sol_max.status == "optimal":
            mn, mx = int(sol_min.value), int(sol_max.value)
            flippable = mn <= kappa < mx
            wit = None
            if flippable:
                wit = sol_max.witness if b_rank <= kappa else sol_min.witness
            reports.append(
                FlipReport(
                    row_id=row_ids[i],
                    baseline_rank=b_rank,
                    min_rank=mn,
                    max_rank=mx,
                    flippable=flippable,
                    method="mip_certified",
                    witness=wit,
                    witness_kind=None if wit is None else "alpha",
                )
            )
        else:
            lo = omin if sol_min.bound is None else max(omin, int(sol_min.bound))
            hi = omax if sol_max.bound is None else min(omax, int(sol_max.bound))
            can_enter = None
            if sol_min.value is not None and sol_min.value <= kappa:
                can_enter = True
            elif lo > kappa:
                can_enter = False
            can_exit = None
            if sol_max.value is not None and sol_max.value > kappa:
                can_exit = True
            elif hi <= kappa:
                can_exit = False
            if can_enter is False or can_exit is False:
                flippable: bool | None = False
            elif can_enter and can_exit:
                flippable = True
            else:
                flippable = None
            reports.append(
                FlipReport(
                    row_id=row_ids[i],
                    baseline_rank=b_rank,
                    min_rank=lo,
                    max_rank=hi,
                    flippable=flippable,
                    method="undetermined",
                )
            )
    return reports


def flip_reports_multi(
    X: NDArray[np.float64],
    ensemble: IndexEnsemble,
    kappa: int,
    row_ids=None,
    rank_mode: str = "status",
    config: SolverConfig | None = None,
) -> "tuple[list[FlipReport], NDArray[np.float64]]":
    """Standardized predictions plus the certified reports for them."""
    preds = ensemble.predictions(X)
    reports = flip_search_multi(
        preds, kappa, row_ids=row_ids, rank_mode=rank_mode, config=config
    )
    return reports, preds


def ambiguity_multi(reports, kappa: int) -> AmbiguityResult:
    """Same tallies as the single-target version; the baseline column
    refers to the uniform blend."""
    return ambiguity_single(reports, kappa)
