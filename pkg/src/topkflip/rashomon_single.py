"""Rank ranges and selection ambiguity for one target over the coefficient ball.

The solve order per row is cheap to expensive: closed-form pairwise gap
bounds prune rows whose membership cannot change, a deterministic pool of
boundary witnesses certifies most changeable rows, and only the remainder
goes to the branch-and-bound certifier. The slow-path oracle in
:mod:`topkflip.oracle` is never consulted here; witness evaluation uses
plain index-tie-break ranking so the two certification routes stay
independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist

from .linear_fit import RashomonBall, fit_ols, make_ball
from .ranking import rank_descending
from .reports import FlipReport
from .solver import BallRegion, SolverConfig, rank_query, solve

PRUNE_REL_TOL = 1e-12


def gap_bound(
    X: NDArray[np.float64], center: NDArray[np.float64], radius: float
) -> NDArray[np.float64]:
    """Supremum of score(row i) - score(row j) over the ball, as a matrix.

    The gap is linear in the coefficients, so the supremum is the center
    gap plus radius times the feature-difference norm, attained on the
    boundary. Entry [i, j] < 0 certifies that row j outranks row i at
    every model in the ball.
    """
    X = np.asarray(X, dtype=np.float64)
    scores = X @ np.asarray(center, dtype=np.float64)
    return scores[:, None] - scores[None, :] + radius * cdist(X, X)


@dataclass(frozen=True)
class PruneResult:
    """Certified outer rank bounds from pairwise gap bounds alone.

    ``outer_min[i] <= true min rank`` and ``outer_max[i] >= true max rank``
    for every row; ``never_top`` and ``always_top`` mark rows whose top
    membership is fixed across the whole ball.
    """

    never_top: NDArray[np.bool_]
    always_top: NDArray[np.bool_]
    outer_min: NDArray[np.int64]
    outer_max: NDArray[np.int64]


def prune_from_sup_matrix(sup_gap: NDArray[np.float64], kappa: int) -> PruneResult:
    """Outer rank bounds from any matrix of pairwise gap suprema.

    ``sup_gap[i, j]`` must upper-bound score(i) - score(j) over the model
    family. A row with at least kappa rows strictly above it everywhere
    can never enter the top; one with at least n - kappa rows strictly
    below it everywhere can never leave.
    """
    B = np.asarray(sup_gap, dtype=np.float64)
    n = B.shape[0]
    tol = PRUNE_REL_TOL * max(1.0, float(np.max(np.abs(B))))
    strictly_below = B < -tol  # [i, j]: i always strictly below j
    count_above = strictly_below.sum(axis=1)
    count_below = strictly_below.sum(axis=0)
    outer_min = 1 + count_above.astype(np.int64)
    outer_max = (n - count_below).astype(np.int64)
    return PruneResult(
        never_top=outer_min > kappa,
        always_top=outer_max <= kappa,
        outer_min=outer_min,
        outer_max=outer_max,
    )


def prune_unflippable(
    X: NDArray[np.float64],
    center: NDArray[np.float64],
    radius: float,
    kappa: int,
) -> PruneResult:
    """Fix top membership for rows decided by the ball's pairwise gap
    bounds."""
    return prune_from_sup_matrix(gap_bound(X, center, radius), kappa)


def max_prediction_model(
    x_row: NDArray[np.float64], center: NDArray[np.float64], radius: float
) -> NDArray[np.float64]:
    """The ball model maximizing one row's prediction: walk the radius
    along the row's feature direction. Returns the center for a zero row."""
    x = np.asarray(x_row, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    if norm == 0.0 or radius == 0.0:
        return np.asarray(center, dtype=np.float64).copy()
    return center + radius * x / norm


def min_prediction_model(
    x_row: NDArray[np.float64], center: NDArray[np.float64], radius: float
) -> NDArray[np.float64]:
    """Mirror of :func:`max_prediction_model`."""
    x = np.asarray(x_row, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    if norm == 0.0 or radius == 0.0:
        return np.asarray(center, dtype=np.float64).copy()
    return center - radius * x / norm


def witness_pool(
    X: NDArray[np.float64], center: NDArray[np.float64], radius: float
) -> NDArray[np.float64]:
    """Deterministic ball models worth checking: the center plus, per row,
    the extremizers of that row's own prediction."""
    X = np.asarray(X, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    pool = [center]
    if radius > 0:
        norms = np.linalg.norm(X, axis=1)
        for i in range(X.shape[0]):
            if norms[i] > 0:
                step = radius * X[i] / norms[i]
                pool.append(center + step)
                pool.append(center - step)
    return np.vstack(pool)


def _pool_rank_envelope(
    X: NDArray[np.float64], pool: NDArray[np.float64], kappa: int
) -> "tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.int64], NDArray[np.int64]]":
    """Attained rank envelope over the pool with index tie-breaking.

    Every evaluated rank is realizable, so the envelope certifies
    reachability one-sided; it deliberately does not exploit tie freedom,
    keeping this route independent of the enumeration oracle. Also
    returns, per row, the first pool column attaining a rank within kappa
    and the first attaining one beyond it (-1 when never).
    """
    n = X.shape[0]
    seen_min = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    seen_max = np.zeros(n, dtype=np.int64)
    enter_col = np.full(n, -1, dtype=np.int64)
    exit_col = np.full(n, -1, dtype=np.int64)
    scores = X @ pool.T  # (n, m)
    for col in range(scores.shape[1]):
        ranks = rank_descending(scores[:, col], kappa).ranks
        np.minimum(seen_min, ranks, out=seen_min)
        np.maximum(seen_max, ranks, out=seen_max)
        enter_col[(enter_col < 0) & (ranks <= kappa)] = col
        exit_col[(exit_col < 0) & (ranks > kappa)] = col
    return seen_min, seen_max, enter_col, exit_col


def flip_search(
    X: NDArray[np.float64],
    ball: RashomonBall,
    kappa: int,
    row_ids=None,
    rank_mode: str = "status",
    config: SolverConfig | None = None,
    extra_models=None,
) -> "list[FlipReport]":
    """Certify each row's top membership behavior across the ball.

    ``rank_mode="status"`` decides flippability with the cheapest
    sufficient evidence; rank fields are certified outer bounds unless the
    row went through the certifier. ``rank_mode="exact"`` solves both rank
    extremes for every row. Budget exhaustion degrades a row to method
    ``undetermined`` with outer bounds; its flippable flag stays None
    unless the surviving bounds already decide it. ``extra_models`` adds
    candidate coefficient vectors to the witness pool; non-members of the
    ball are dropped, so carrying witnesses from a smaller tolerance is
    always safe.
    """
    if rank_mode not in ("status", "exact"):
        raise ValueError(f"rank_mode must be status or exact, got {rank_mode!r}")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    cfg = config or SolverConfig()
    if row_ids is None:
        row_ids = [str(i) for i in range(n)]
    w0 = ball.center
    r = ball.radius
    if not 1 <= kappa <= n:
        raise ValueError(f"kappa must be in [1, {n}], got {kappa}")

    base = rank_descending(X @ w0, kappa)
    prune = prune_unflippable(X, w0, r, kappa)
    pool = witness_pool(X, w0, r)
    if extra_models is not None:
        members = [
            np.asarray(w, dtype=np.float64)
            for w in extra_models
            if ball.contains(np.asarray(w, dtype=np.float64))
        ]
        if members:
            pool = np.vstack([pool] + members)
    seen_min, seen_max, enter_col, exit_col = _pool_rank_envelope(X, pool, kappa)

    region = BallRegion(center=w0, radius=r)
    reports: list[FlipReport] = []
    for i in range(n):
        b_rank = int(base.ranks[i])
        in_top = bool(base.top_flags[i])
        omin = int(prune.outer_min[i])
        omax = int(prune.outer_max[i])

        if rank_mode == "status":
            if prune.never_top[i] or (in_top and prune.always_top[i]):
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
            if not in_top and seen_min[i] <= kappa:
                reports.append(
                    FlipReport(
                        row_id=row_ids[i],
                        baseline_rank=b_rank,
                        min_rank=omin,
                        max_rank=omax,
                        flippable=True,
                        method="closed_form_flip",
                        witness=pool[enter_col[i]],
                        witness_kind="coef",
                    )
                )
                continue
            if in_top and seen_max[i] > kappa:
                reports.append(
                    FlipReport(
                        row_id=row_ids[i],
                        baseline_rank=b_rank,
                        min_rank=omin,
                        max_rank=omax,
                        flippable=True,
                        method="closed_form_flip",
                        witness=pool[exit_col[i]],
                        witness_kind="coef",
                    )
                )
                continue

        sol_min = solve(rank_query("min", region, X, i), cfg)
        sol_max = solve(rank_query("max", region, X, i), cfg)
        if sol_min.status == "optimal" and sol_max.status == "optimal":
            mn, mx = int(sol_min.value), int(sol_max.value)
            flippable = mn <= kappa < mx
            wit = None
            if flippable:
                wit = sol_max.witness if in_top else sol_min.witness
            reports.append(
                FlipReport(
                    row_id=row_ids[i],
                    baseline_rank=b_rank,
                    min_rank=mn,
                    max_rank=mx,
                    flippable=flippable,
                    method="mip_certified",
                    witness=wit,
                    witness_kind=None if wit is None else "coef",
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
                flippable = False
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


def flip_reports_single(
    X: NDArray[np.float64],
    y: NDArray[np.float64],
    epsilon: float,
    kappa: int,
    epsilon_mode: str = "relative",
    row_ids=None,
    rank_mode: str = "status",
    config: SolverConfig | None = None,
) -> "tuple[list[FlipReport], RashomonBall]":
    """Fit, build the ball, and certify: the end-to-end single-target path."""
    model = fit_ols(X, y)
    ball = make_ball(model, X, y, epsilon, epsilon_mode)
    reports = flip_search(X, ball, kappa, row_ids=row_ids, rank_mode=rank_mode, config=config)
    return reports, ball


def flip_reports_from_ranks(
    row_ids,
    baseline_ranks,
    min_ranks,
    max_ranks,
    kappa: int,
    method: str = "oracle_certified",
) -> "list[FlipReport]":
    """Assemble reports from externally certified exact rank ranges."""
    reports = []
    for rid, b, lo, hi in zip(row_ids, baseline_ranks, min_ranks, max_ranks):
        reports.append(
            FlipReport(
                row_id=rid,
                baseline_rank=int(b),
                min_rank=int(lo),
                max_rank=int(hi),
                flippable=int(lo) <= kappa < int(hi),
                method=method,
            )
        )
    return reports


@dataclass(frozen=True)
class AmbiguityResult:
    """Selection ambiguity fractions over a set of row reports.

    ``all_fraction``: share of all rows whose membership can change.
    ``top_fraction``: share of the baseline top whose exit is possible,
    divided by kappa. Undetermined rows never count as changeable; their
    tally is reported so the caller can judge coverage.
    """

    all_fraction: float
    top_fraction: float
    n_rows: int
    kappa: int
    n_flippable: int
    n_top_flippable: int
    n_undetermined: int


def ambiguity_single(reports, kappa: int) -> AmbiguityResult:
    n = len(reports)
    if n == 0:
        raise ValueError("no reports")
    n_flip = sum(1 for rep in reports if rep.flippable)
    n_top_flip = sum(1 for rep in reports if rep.flippable and rep.baseline_rank <= kappa)
    n_undet = sum(1 for rep in reports if rep.flippable is None)
    return AmbiguityResult(
        all_fraction=n_flip / n,
        top_fraction=n_top_flip / kappa,
        n_rows=n,
        kappa=kappa,
        n_flippable=n_flip,
        n_top_flippable=n_top_flip,
        n_undetermined=n_undet,
    )
