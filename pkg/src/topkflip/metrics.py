"""Aggregation of per-row reports into stable sets and ambiguity curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .linear_fit import fit_ols, make_ball
from .ranking import rank_descending
from .rashomon_single import ambiguity_single, flip_search
from .solver import SolverConfig

FAMILIES = ("rashomon", "index")


@dataclass(frozen=True)
class StableSet:
    """Rows whose membership is certified constant across the family.

    A certified row sits in ``stable_selected`` when even its worst rank
    stays within kappa, in ``stable_unselected`` when even its best rank
    misses. Rows whose search ended undetermined are listed apart and
    claimed for neither side.
    """

    kappa: int
    family: str
    stable_selected: tuple
    stable_unselected: tuple
    undetermined: tuple

    @property
    def stable_fraction(self) -> float:
        return len(self.stable_selected) / self.kappa


def stable_points(reports, kappa: int, family: str) -> StableSet:
    """Split certified reports by which side of the cutoff they pin."""
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
    selected, unselected, undet = [], [], []
    for rep in reports:
        if rep.method == "undetermined":
            undet.append(rep.row_id)
        elif rep.max_rank <= kappa:
            selected.append(rep.row_id)
        elif rep.min_rank > kappa:
            unselected.append(rep.row_id)
    return StableSet(
        kappa=kappa,
        family=family,
        stable_selected=tuple(selected),
        stable_unselected=tuple(unselected),
        undetermined=tuple(undet),
    )


@dataclass(frozen=True)
class CurvePoint:
    """One tolerance setting's ambiguity fractions."""

    epsilon: float
    ambiguity_all: float
    ambiguity_top: float
    n_undetermined: int


def ambiguity_curve(
    X: NDArray[np.float64],
    y: NDArray[np.float64],
    kappa: int,
    epsilons,
    epsilon_mode: str = "relative",
    rank_mode: str = "status",
    config: SolverConfig | None = None,
) -> "list[CurvePoint]":
    """Ambiguity as the model tolerance grows.

    The tolerance list must be nonnegative and ascending; the balls are
    then nested, so each pass hands the flip witnesses it found to the
    next one's candidate pool and a row never loses a certified flip as
    the tolerance grows.
    """
    eps = [float(e) for e in epsilons]
    if any(e < 0 for e in eps):
        raise ValueError("epsilons must be nonnegative")
    if any(b < a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be ascending")

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    model = fit_ols(X, y)
    curve: list[CurvePoint] = []
    carried: list[NDArray[np.float64]] = []
    for e in eps:
        ball = make_ball(model, X, y, e, epsilon_mode=epsilon_mode)
        reports = flip_search(
            X,
            ball,
            kappa,
            rank_mode=rank_mode,
            config=config,
            extra_models=carried if carried else None,
        )
        amb = ambiguity_single(reports, kappa)
        curve.append(
            CurvePoint(
                epsilon=e,
                ambiguity_all=amb.all_fraction,
                ambiguity_top=amb.top_fraction,
                n_undetermined=amb.n_undetermined,
            )
        )
        for rep in reports:
            if rep.witness is not None and rep.witness_kind == "coef":
                carried.append(np.asarray(rep.witness, dtype=np.float64))
    return curve


def curve_rows(curve, target: str):
    """Plot-ready rows: epsilon, both fractions, and the target name."""
    return [
        [repr(pt.epsilon), repr(pt.ambiguity_all), repr(pt.ambiguity_top), target]
        for pt in curve
    ]


def stable_rows(stable_sets):
    """Plot-ready rows: kappa, stable fraction, family."""
    return [
        [s.kappa, repr(s.stable_fraction), s.family] for s in stable_sets
    ]


def baseline_overlap(scores_a, scores_b, kappa: int) -> float:
    """Fraction of the two deterministic top sets that coincide."""
    a = rank_descending(np.asarray(scores_a, dtype=np.float64), kappa).top_flags
    b = rank_descending(np.asarray(scores_b, dtype=np.float64), kappa).top_flags
    return int(np.count_nonzero(a & b)) / kappa
