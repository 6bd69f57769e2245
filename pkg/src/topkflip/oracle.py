"""Independent slow-path certifiers for rank ranges and group counts.

Nothing here touches the branch-and-bound machinery. Each routine
enumerates candidate parameter values directly (boundary angles of a
two-dimensional coefficient disc, blend breakpoints of a two-target
simplex) and scores every candidate with optimistic tie counting, which is
exactly the freedom the pairwise comparison encoding grants at ties.
Quadratic and unapologetically slow; meant for small cross-check instances.

Why boundary candidates suffice for the disc sweep: each pairwise ordering
is decided by the sign of <x_j - x_i, w>, a halfspace through the origin,
so the full sign pattern is constant along rays from the origin. Any w in
the ball therefore shares its pattern with a point where its ray exits the
ball, which lies on the boundary circle, except for w = 0 itself (the
all-ties point), which is checked separately whenever the ball covers it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

TIE_REL_TOL = 1e-9

# Tie classes larger than this would need 2^C(m,2) tournament orientations.
MAX_TIE_CLASS = 6


def _tie_tol(scores: NDArray[np.float64]) -> float:
    return TIE_REL_TOL * max(1.0, float(np.max(np.abs(scores))))


def optimistic_rank_bounds(
    scores: NDArray[np.float64], tol: float | None = None
) -> "tuple[NDArray[np.int64], NDArray[np.int64]]":
    """Best and worst attainable rank per row at one scoring of the rows.

    A tied pair can be ordered either way, independently per queried row, so
    the best rank is 1 + #(strictly higher rows) and the worst is
    1 + #(rows higher or tied). Rows closer than ``tol`` count as tied.
    """
    s = np.asarray(scores, dtype=np.float64)
    if tol is None:
        tol = _tie_tol(s)
    diff = s[None, :] - s[:, None]  # diff[i, j] = s_j - s_i
    strict = np.sum(diff > tol, axis=1)
    weak = np.sum(diff >= -tol, axis=1) - 1  # the diagonal counts itself once
    return strict + 1, weak + 1


def angle_sweep_single(
    X: NDArray[np.float64],
    center: NDArray[np.float64],
    radius: float,
) -> "tuple[NDArray[np.int64], NDArray[np.int64]]":
    """Exact per-row rank ranges over a disc of coefficient vectors.

    Requires a two-column design. Walks the boundary circle
    w(theta) = center + radius * (cos theta, sin theta), collecting every
    angle where some pair of rows ties, and evaluates optimistic rank
    bounds at those angles, at arc midpoints, at the center, and at the
    origin when the disc covers it.

    Returns
    -------
    (min_ranks, max_ranks) : int arrays of shape (n,)
    """
    X = np.asarray(X, dtype=np.float64)
    w0 = np.asarray(center, dtype=np.float64)
    n, p = X.shape
    if p != 2:
        raise ValueError(f"angle sweep needs a 2-column design, got {p}")
    if radius < 0:
        raise ValueError("radius must be nonnegative")

    candidates = [w0]
    if radius > 0:
        crit: list[float] = []
        for i, j in itertools.combinations(range(n), 2):
            d = X[j] - X[i]
            c = float(d @ w0)
            a, b = radius * d[0], radius * d[1]
            amp = float(np.hypot(a, b))
            if amp <= 1e-300:
                continue  # identical rows tie everywhere; no crossing angle
            x = -c / amp
            if abs(x) <= 1.0:
                phi = float(np.arctan2(b, a))
                delta = float(np.arccos(np.clip(x, -1.0, 1.0)))
                crit.extend((phi - delta, phi + delta))
        angles = sorted(a % (2.0 * np.pi) for a in crit)
        merged: list[float] = []
        for a in angles:
            if not merged or a - merged[-1] > 1e-12:
                merged.append(a)
        if merged:
            eval_angles = list(merged)
            for prev, nxt in zip(merged, merged[1:] + [merged[0] + 2.0 * np.pi]):
                eval_angles.append(0.5 * (prev + nxt))
        else:
            eval_angles = [0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi]
        for theta in eval_angles:
            candidates.append(w0 + radius * np.array([np.cos(theta), np.sin(theta)]))
    if float(w0 @ w0) <= radius * radius + 1e-15:
        candidates.append(np.zeros(2))

    min_ranks = np.full(n, n + 1, dtype=np.int64)
    max_ranks = np.zeros(n, dtype=np.int64)
    for w in candidates:
        lo, hi = optimistic_rank_bounds(X @ w)
        np.minimum(min_ranks, lo, out=min_ranks)
        np.maximum(max_ranks, hi, out=max_ranks)
    return min_ranks, max_ranks


def attainable_group_counts(
    group_flags: NDArray[np.bool_], allowed_losses: int
) -> NDArray[np.int64]:
    """Group-member selection counts realizable inside one tie class.

    Members of a tie class are ordered by an arbitrary orientation of each
    pair (a tournament); a member is selected when it loses at most
    ``allowed_losses`` of its in-class comparisons. Enumerates every
    tournament on the class and returns the sorted distinct counts of
    selected group members. Class size is capped at MAX_TIE_CLASS.
    """
    flags = np.asarray(group_flags, dtype=bool)
    m = flags.shape[0]
    if allowed_losses < 0:
        return np.array([0], dtype=np.int64)
    if allowed_losses >= m - 1:
        return np.array([int(flags.sum())], dtype=np.int64)
    if m > MAX_TIE_CLASS:
        raise NotImplementedError(
            f"tie class of size {m}; tournament enumeration capped at {MAX_TIE_CLASS}"
        )
    pairs = list(itertools.combinations(range(m), 2))
    n_pairs = len(pairs)
    codes = np.arange(1 << n_pairs, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n_pairs)) & 1  # 1: first member wins
    losses = np.zeros((codes.shape[0], m), dtype=np.int16)
    for p, (a, b) in enumerate(pairs):
        losses[:, b] += bits[:, p].astype(np.int16)
        losses[:, a] += (1 - bits[:, p]).astype(np.int16)
    selected = losses <= allowed_losses
    return np.unique(selected[:, flags].sum(axis=1)).astype(np.int64)


def group_count_range(
    scores: NDArray[np.float64],
    kappa: int,
    group_mask: NDArray[np.bool_],
    tol: float | None = None,
) -> "tuple[int, int]":
    """Range of group members in the top kappa at one scoring of the rows.

    Rows are partitioned into tie classes; each class straddling the
    selection boundary contributes whatever tournament orientations allow.
    Choices in different classes are independent, so the totals add.
    """
    s = np.asarray(scores, dtype=np.float64)
    gmask = np.asarray(group_mask, dtype=bool)
    n = s.shape[0]
    if not 1 <= kappa <= n:
        raise ValueError(f"kappa must be in [1, {n}], got {kappa}")
    if tol is None:
        tol = _tie_tol(s)
    order = np.argsort(-s, kind="stable")
    gmin = 0
    gmax = 0
    cum = 0
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and s[order[start]] - s[order[stop]] <= tol:
            stop += 1
        members = order[start:stop]
        m = stop - start
        g = int(gmask[members].sum())
        allowed = kappa - 1 - cum
        if allowed >= m - 1:
            gmin += g
            gmax += g
        elif allowed >= 0:
            counts = attainable_group_counts(gmask[members], allowed)
            gmin += int(counts[0])
            gmax += int(counts[-1])
        cum += m
        start = stop
    return gmin, gmax


@dataclass(frozen=True)
class SimplexSweep:
    """Result of a two-target blend sweep."""

    min_ranks: NDArray[np.int64]
    max_ranks: NDArray[np.int64]
    group_min: int | None
    group_max: int | None


def simplex_sweep_k2(
    preds: NDArray[np.float64],
    kappa: int,
    group_mask: NDArray[np.bool_] | None = None,
) -> SimplexSweep:
    """Exact rank ranges (and group count range) over two-target blends.

    The blend weight is alpha = (t, 1 - t) with t in [0, 1]; every pairwise
    gap is affine in t, so candidate values are the endpoints, each pair's
    crossing point, and interval midpoints.
    """
    P = np.asarray(preds, dtype=np.float64)
    n, K = P.shape
    if K != 2:
        raise ValueError(f"simplex sweep handles exactly 2 targets, got {K}")

    ts = [0.0, 1.0]
    for i, j in itertools.combinations(range(n), 2):
        d1 = P[i, 0] - P[j, 0]
        d2 = P[i, 1] - P[j, 1]
        if abs(d1 - d2) <= 1e-300:
            continue  # gap constant in t
        t_star = d2 / (d2 - d1)
        if 0.0 < t_star < 1.0:
            ts.append(float(t_star))
    ts = sorted(ts)
    merged = [ts[0]]
    for t in ts[1:]:
        if t - merged[-1] > 1e-12:
            merged.append(t)
    candidates = list(merged)
    candidates.extend(0.5 * (a + b) for a, b in zip(merged, merged[1:]))

    min_ranks = np.full(n, n + 1, dtype=np.int64)
    max_ranks = np.zeros(n, dtype=np.int64)
    group_lo: int | None = None
    group_hi: int | None = None
    for t in candidates:
        s = t * P[:, 0] + (1.0 - t) * P[:, 1]
        lo, hi = optimistic_rank_bounds(s)
        np.minimum(min_ranks, lo, out=min_ranks)
        np.maximum(max_ranks, hi, out=max_ranks)
        if group_mask is not None:
            glo, ghi = group_count_range(s, kappa, group_mask)
            group_lo = glo if group_lo is None else min(group_lo, glo)
            group_hi = ghi if group_hi is None else max(group_hi, ghi)
    return SimplexSweep(
        min_ranks=min_ranks, max_ranks=max_ranks, group_min=group_lo, group_max=group_hi
    )


def monte_carlo_flips(
    X: NDArray[np.float64],
    center: NDArray[np.float64],
    radius: float,
    n_samples: int = 2000,
    seed: int = 0,
) -> "tuple[NDArray[np.int64], NDArray[np.int64]]":
    """Sampled inner bound on per-row rank ranges over the coefficient ball.

    Every evaluated point lies inside the ball, so the observed range is
    contained in the true one; it certifies reachability, never absence.
    The pool always includes the center and, per row, the boundary points
    that maximize and minimize that row's own prediction.
    """
    X = np.asarray(X, dtype=np.float64)
    w0 = np.asarray(center, dtype=np.float64)
    n, p = X.shape
    rng = np.random.default_rng(seed)

    pool = [w0]
    if radius > 0:
        norms = np.linalg.norm(X, axis=1)
        for i in range(n):
            if norms[i] > 0:
                pool.append(w0 + radius * X[i] / norms[i])
                pool.append(w0 - radius * X[i] / norms[i])
        g = rng.standard_normal((n_samples, p))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.random(n_samples) ** (1.0 / p)
        pool.extend(w0 + radius * u[:, None] * g)

    min_ranks = np.full(n, n + 1, dtype=np.int64)
    max_ranks = np.zeros(n, dtype=np.int64)
    for w in pool:
        lo, hi = optimistic_rank_bounds(X @ w)
        np.minimum(min_ranks, lo, out=min_ranks)
        np.maximum(max_ranks, hi, out=max_ranks)
    return min_ranks, max_ranks


def monte_carlo_flips_multi(
    preds: NDArray[np.float64],
    n_samples: int = 2000,
    seed: int = 0,
) -> "tuple[NDArray[np.int64], NDArray[np.int64]]":
    """Sampled inner bound on rank ranges over blend weights on the simplex.

    The pool holds each one-hot weight, the uniform weight, and Dirichlet
    draws. Same one-sided guarantee as :func:`monte_carlo_flips`.
    """
    P = np.asarray(preds, dtype=np.float64)
    n, K = P.shape
    rng = np.random.default_rng(seed)
    alphas = [np.eye(K)[k] for k in range(K)]
    alphas.append(np.full(K, 1.0 / K))
    alphas.extend(rng.dirichlet(np.ones(K), size=n_samples))

    min_ranks = np.full(n, n + 1, dtype=np.int64)
    max_ranks = np.zeros(n, dtype=np.int64)
    for a in alphas:
        lo, hi = optimistic_rank_bounds(P @ a)
        np.minimum(min_ranks, lo, out=min_ranks)
        np.maximum(max_ranks, hi, out=max_ranks)
    return min_ranks, max_ranks
