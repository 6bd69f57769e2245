import numpy as np
import pytest

from topkflip.linear_fit import fit_ols, make_ball
from topkflip.oracle import angle_sweep_single
from topkflip.ranking import rank_descending
from topkflip.rashomon_single import (
    ambiguity_single,
    flip_reports_single,
    flip_search,
    gap_bound,
    max_prediction_model,
    prune_unflippable,
)
from topkflip.solver import SolverConfig

from conftest import random_design


def test_gap_bound_dominates_sampled_gaps(rng):
    X = random_design(rng, 15, 3)
    center = rng.normal(size=3)
    radius = 0.5
    sup = gap_bound(X, center, radius)
    for _ in range(300):
        u = rng.normal(size=3)
        u *= radius * rng.random() ** (1 / 3) / np.linalg.norm(u)
        s = X @ (center + u)
        gaps = s[:, None] - s[None, :]
        assert np.all(gaps <= sup + 1e-9)


def test_max_prediction_model_is_the_row_argmax(rng):
    X = random_design(rng, 10, 3)
    center = rng.normal(size=3)
    radius = 0.7
    for i in range(10):
        w = max_prediction_model(X[i], center, radius)
        assert np.linalg.norm(w - center) <= radius + 1e-12
        best = float(X[i] @ w)
        for _ in range(200):
            u = rng.normal(size=3)
            u *= radius / np.linalg.norm(u)
            assert float(X[i] @ (center + u)) <= best + 1e-9


def test_prune_is_sound_against_the_sweep(rng):
    for _ in range(10):
        X = random_design(rng, 20, 2)
        y = rng.normal(size=20)
        model = fit_ols(X, y)
        ball = make_ball(model, X, y, 0.1, "relative")
        kappa = 5
        pruned = prune_unflippable(X, ball.center, ball.radius, kappa)
        lo, hi = angle_sweep_single(X, ball.center, ball.radius)
        for i in np.flatnonzero(pruned.always_top):
            assert hi[i] <= kappa
        for i in np.flatnonzero(pruned.never_top):
            assert lo[i] > kappa
        # outer bounds bracket the exact range
        assert np.all(pruned.outer_min <= lo) and np.all(pruned.outer_max >= hi)


def test_flip_search_agrees_with_sweep_exact_mode(rng):
    X = random_design(rng, 18, 2)
    y = rng.normal(size=18)
    model = fit_ols(X, y)
    ball = make_ball(model, X, y, 0.3, "relative")
    reports = flip_search(X, ball, 4, rank_mode="exact")
    lo, hi = angle_sweep_single(X, ball.center, ball.radius)
    for i, rep in enumerate(reports):
        assert (rep.min_rank, rep.max_rank) == (int(lo[i]), int(hi[i]))
        assert rep.flippable == (rep.min_rank <= 4 < rep.max_rank)


def test_exactly_duplicated_rows_stay_solvable(rng):
    """Duplicate design rows make exactly tied pairs at every model.

    The tied pair's gap vector is numerically zero after the QR pass;
    these used to poison the feasibility cone and flip verdicts away
    from the sweep's.
    """
    age = np.concatenate([rng.uniform(20, 80, size=14), [50.0, 50.0]])
    A = np.column_stack([np.ones(16), age])
    Q, R = np.linalg.qr(A)
    X = Q * np.sign(np.diag(R))
    y = -X[:, 1] + rng.normal(0, 0.3, size=16)
    model = fit_ols(X, y)
    for eps in (0.01, 0.1, 1.0):
        ball = make_ball(model, X, y, eps, "relative")
        reports = flip_search(X, ball, 5, rank_mode="exact")
        lo, hi = angle_sweep_single(X, ball.center, ball.radius)
        for i, rep in enumerate(reports):
            assert (rep.min_rank, rep.max_rank) == (int(lo[i]), int(hi[i]))


def test_status_mode_matches_exact_verdicts(rng):
    X = random_design(rng, 25, 3)
    y = rng.normal(size=25)
    model = fit_ols(X, y)
    ball = make_ball(model, X, y, 0.2, "relative")
    fast = flip_search(X, ball, 6)
    slow = flip_search(X, ball, 6, rank_mode="exact")
    for f, s in zip(fast, slow):
        assert f.flippable == s.flippable
        # status-mode ranges are certified outer bounds
        assert f.min_rank <= s.min_rank and f.max_rank >= s.max_rank


def test_witnesses_live_in_the_ball_and_realize_flips(rng):
    """Pool witnesses realize the flip outright; MIP witnesses certify the
    extreme rank under optimistic tie counting, so only membership is
    promised for them."""
    X = random_design(rng, 20, 3)
    y = rng.normal(size=20)
    reports, ball = flip_reports_single(X, y, 0.3, 5)
    base_flags = rank_descending(X @ ball.center, 5).top_flags
    seen_closed_form = 0
    for i, rep in enumerate(reports):
        if rep.witness is None or rep.witness_kind != "coef":
            continue
        assert ball.contains(rep.witness, tol=1e-9)
        if rep.method == "closed_form_flip":
            seen_closed_form += 1
            assert rank_descending(X @ rep.witness, 5).top_flags[i] != base_flags[i]
    assert seen_closed_form > 0


def test_zero_epsilon_nothing_flips(rng):
    X = random_design(rng, 15, 2)
    y = rng.normal(size=15)
    reports, ball = flip_reports_single(X, y, 0.0, 4)
    assert ball.radius == 0.0
    assert not any(rep.flippable for rep in reports)


def test_ambiguity_counts():
    reports, _ = flip_reports_single(
        np.linalg.qr(np.column_stack([np.ones(12), np.arange(12.0)]))[0],
        np.arange(12.0) + 0.01 * np.sin(np.arange(12)),
        0.5,
        3,
    )
    amb = ambiguity_single(reports, 3)
    assert amb.all_fraction == pytest.approx(amb.n_flippable / 12)
    assert 0.0 <= amb.top_fraction <= 1.0
    assert amb.n_undetermined == 0


def test_budget_exhaustion_leaves_undetermined(rng):
    X = random_design(rng, 40, 4)
    y = rng.normal(size=40)
    model = fit_ols(X, y)
    ball = make_ball(model, X, y, 1.0, "relative")
    reports = flip_search(X, ball, 10, config=SolverConfig(node_budget=1))
    assert any(rep.method == "undetermined" for rep in reports)
    for rep in reports:
        if rep.method == "undetermined":
            assert rep.flippable is None or isinstance(rep.flippable, bool)
            assert rep.min_rank <= rep.max_rank
