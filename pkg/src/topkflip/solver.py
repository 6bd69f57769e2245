"""Branch and bound over pairwise ordering indicators.

An instance asks for the extreme rank of one row, or the extreme number of
group rows selected into the top kappa, as a scoring parameter varies over
a region: a Euclidean ball of coefficient vectors, or the simplex of blend
weights. Each pair of rows contributes a binary orientation; fixing the
orientation imposes one closed halfspace (the pairwise score gap has a
definite sign), and the objective depends only on orientations. The search
branches on orientations, checking region nonemptiness exactly:

* ball: distance from the center to the intersection of homogeneous
  halfspaces via a nonnegative least-squares projection onto the polar
  cone, with a Farkas-style certificate when infeasible;
* two-target simplex: an interval in the first blend weight;
* three targets: polygon clipping;
* more targets: small feasibility LPs.

Bounds are admissible counting arguments, incumbents come from feasibility
witnesses with a safety margin so a reported value is always attainable,
and the whole search is deterministic for a fixed node budget.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog, lsq_linear

DEFAULT_NODE_BUDGET = 1_000_000
DEFAULT_TIME_BUDGET = 60.0

# Lower edge of the soft box on the total blend weight. The pattern
# constraints are homogeneous, so any total in (0, 1] reaches the same
# orientation patterns and the optimum sits at total 1; the value is
# recorded in instance dumps for completeness.
DEFAULT_SUM_LOWER = 0.1


@dataclass(frozen=True)
class BallRegion:
    """Closed ball of coefficient vectors."""

    center: NDArray[np.float64]
    radius: float

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True)
class SimplexRegion:
    """Blend weights: alpha >= 0 summing to 1 over ``dim`` targets."""

    dim: int
    sum_lower: float = DEFAULT_SUM_LOWER


@dataclass(frozen=True)
class MipInstance:
    """One extremal ordering query.

    ``gaps[p] @ param`` is the score gap (above minus below) of pair p.
    Orientation 1 means ``above[p]`` outranks ``below[p]`` and charges a
    loss to ``below[p]``; orientation 0 is the reverse. For a rank query
    every pair has ``below == focal`` and the objective is
    1 + (losses of focal). For a group query the objective is the number
    of ``group_rows`` whose rank 1 + losses is at most ``kappa``.
    """

    sense: str  # "min" | "max"
    objective: str  # "rank" | "group_count"
    region: "BallRegion | SimplexRegion"
    gaps: NDArray[np.float64]
    above: NDArray[np.int64]
    below: NDArray[np.int64]
    n_rows: int
    focal: int | None = None
    group_rows: "tuple[int, ...] | None" = None
    kappa: int | None = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be min or max, got {self.sense!r}")
        if self.objective == "rank":
            if self.focal is None:
                raise ValueError("rank objective needs a focal row")
        elif self.objective == "group_count":
            if self.group_rows is None or self.kappa is None:
                raise ValueError("group_count objective needs group_rows and kappa")
        else:
            raise ValueError(f"unknown objective {self.objective!r}")
        P = self.gaps.shape[0]
        if self.above.shape != (P,) or self.below.shape != (P,):
            raise ValueError("above/below must align with gaps")


@dataclass(frozen=True)
class SolverConfig:
    node_budget: int = DEFAULT_NODE_BUDGET
    time_budget: float = DEFAULT_TIME_BUDGET
    feas_tol: float = 1e-9
    margin: float = 1e-9

    def __post_init__(self):
        if self.node_budget < 1:
            raise ValueError(f"node_budget must be positive, got {self.node_budget}")
        if self.time_budget <= 0:
            raise ValueError(f"time_budget must be positive, got {self.time_budget}")
        if self.feas_tol <= 0 or self.margin < 0:
            raise ValueError("tolerances must be positive (feas_tol) / nonnegative (margin)")


@dataclass(frozen=True)
class MipSolution:
    """Outcome of one query.

    ``value`` is in final units (a rank, or a selected-group count) and is
    attained by ``witness``; ``bound`` is the proven limit on the optimum
    (equal to ``value`` when status is ``optimal``). ``objective_value``
    restates the value in the formulation's objective units, including the
    half-unit blend-total term for simplex regions.
    """

    status: str  # "optimal" | "infeasible" | "budget_exhausted"
    value: int | None
    bound: int | None
    witness: NDArray[np.float64] | None
    nodes: int
    presolve_fixed: int
    free_pairs: int
    objective_value: float | None

    def __post_init__(self):
        if self.status not in ("optimal", "infeasible", "budget_exhausted"):
            raise ValueError(f"unknown status {self.status!r}")


def rank_query(
    sense: str,
    region: "BallRegion | SimplexRegion",
    row_vectors: NDArray[np.float64],
    focal: int,
) -> MipInstance:
    """Build the extreme-rank instance for one row.

    ``row_vectors`` maps each row to its score coefficients (design row for
    a ball region, per-target predictions for a simplex region).
    """
    V = np.asarray(row_vectors, dtype=np.float64)
    n = V.shape[0]
    others = np.array([i for i in range(n) if i != focal], dtype=np.int64)
    return MipInstance(
        sense=sense,
        objective="rank",
        region=region,
        gaps=V[others] - V[focal],
        above=others,
        below=np.full(others.shape[0], focal, dtype=np.int64),
        n_rows=n,
        focal=focal,
    )


def group_query(
    sense: str,
    region: "BallRegion | SimplexRegion",
    row_vectors: NDArray[np.float64],
    group_rows,
    kappa: int,
) -> MipInstance:
    """Build the extreme selected-group-count instance.

    Pairs between two non-group rows carry no indicator: they influence no
    group row's rank and no term of the objective, so omitting them loses
    nothing.
    """
    V = np.asarray(row_vectors, dtype=np.float64)
    n = V.shape[0]
    in_group = np.zeros(n, dtype=bool)
    in_group[list(group_rows)] = True
    above = []
    below = []
    for a in range(n):
        for b in range(a + 1, n):
            if in_group[a] or in_group[b]:
                above.append(a)
                below.append(b)
    above = np.array(above, dtype=np.int64)
    below = np.array(below, dtype=np.int64)
    return MipInstance(
        sense=sense,
        objective="group_count",
        region=region,
        gaps=V[above] - V[below],
        above=above,
        below=below,
        n_rows=n,
        group_rows=tuple(int(g) for g in group_rows),
        kappa=int(kappa),
    )


def gap_ranges(
    region: "BallRegion | SimplexRegion", gaps: NDArray[np.float64]
) -> "tuple[NDArray[np.float64], NDArray[np.float64]]":
    """Exact per-pair range of the gap over the whole region.

    Ball: center value plus or minus radius times the gap norm. Simplex:
    the gap is linear, so the extremes sit at vertices, which are the
    one-hot weights.
    """
    G = np.asarray(gaps, dtype=np.float64)
    if isinstance(region, BallRegion):
        mid = G @ region.center
        spread = region.radius * np.linalg.norm(G, axis=1)
        return mid - spread, mid + spread
    if isinstance(region, SimplexRegion):
        return G.min(axis=1), G.max(axis=1)
    raise TypeError(f"unknown region type {type(region)!r}")


# ---------------------------------------------------------------------------
# Region state: immutable per-node geometry with an exact feasibility test.


def _nnls_active_set(A, b, inner_cap: int = 400):
    """Lawson-Hanson nonnegative least squares, min ||A lam - b||, lam >= 0.

    Fallback for cones where the library routine mis-converges; callers
    verify the KKT certificate afterwards, so this only needs to land on a
    certifiable point, not to be fast.
    """
    m = A.shape[1]
    passive = np.zeros(m, dtype=bool)
    lam = np.zeros(m)
    steps = 0
    while steps < inner_cap:
        steps += 1
        grad = A.T @ (b - A @ lam)
        cand = np.flatnonzero(~passive)
        if cand.size == 0:
            break
        j = cand[np.argmax(grad[cand])]
        if grad[j] <= 1e-12 * max(1.0, float(np.linalg.norm(b))):
            break
        passive[j] = True
        while steps < inner_cap:
            steps += 1
            idx = np.flatnonzero(passive)
            z, *_ = np.linalg.lstsq(A[:, idx], b, rcond=None)
            if z.size == 0 or z.min() > 0:
                lam[:] = 0.0
                lam[idx] = z
                break
            neg = z <= 0
            denom = lam[idx][neg] - z[neg]
            with np.errstate(divide="ignore", invalid="ignore"):
                alphas = np.where(denom > 0, lam[idx][neg] / denom, np.inf)
            alpha = float(alphas.min())
            if not np.isfinite(alpha) or alpha <= 0:
                # degenerate subproblem: evict the most negative entry
                worst = idx[neg][int(np.argmin(z[neg]))]
                passive[worst] = False
                lam[worst] = 0.0
                continue
            lam[idx] = lam[idx] + alpha * (z - lam[idx])
            passive[idx[lam[idx] <= 0.0]] = False
            lam[lam <= 0.0] = 0.0
    return lam


class _BallGeom:
    def __init__(self, region: BallRegion, tol: float):
        self.center = np.asarray(region.center, dtype=np.float64)
        self.radius = float(region.radius)
        self.tol = tol * max(1.0, self.radius)
        # Halfspace slack in normalized-gap units; one tie-tolerance band.
        self.ktol = 1e-9 * max(1.0, float(np.linalg.norm(self.center)) + self.radius)

    def root(self):
        return ()

    def child(self, state, halfspace_row):
        return state + (halfspace_row,)

    def _certify(self, An, lam):
        """Try both one-sided certificates for a candidate multiplier.

        Returns True/False when one holds, None when neither does. The
        feasible side exhibits a ball point satisfying every halfspace
        within the tie band (the projection is pulled back to the sphere
        if it overshoots, so borderline distances still certify). The
        infeasible side is a Farkas argument that q separates the ball
        from the halfspaces, run on sum-normalized multipliers with the
        float error of forming q budgeted in.
        """
        q = An @ lam
        qnorm = float(np.linalg.norm(q))
        shrink = 1.0 if qnorm <= self.radius else self.radius / qnorm
        p = self.center - shrink * q
        viol = float(np.max(An.T @ p))
        if viol <= self.ktol:
            return True, p
        total = float(lam.sum())
        if total > 0:
            qn = q / total
            margin = float(qn @ self.center) - self.radius * float(np.linalg.norm(qn))
            fp_err = 64.0 * np.finfo(np.float64).eps * (
                float(np.linalg.norm(self.center)) + self.radius
            )
            if margin > max(fp_err, self.ktol):
                return False, None
        return None, None

    def feasible(self, state):
        """Ball-cone intersection test via polar projection, certified.

        Columns are normalized so the multipliers stay tame; BVLS is the
        fast path and a local active-set solve the fallback. Either way
        the answer is accepted only with its certificate, and a cone that
        defeats both solvers raises instead of guessing.
        """
        if not state:
            return True, self.center
        A_T = np.column_stack(state)  # (p, m)
        norms = np.linalg.norm(A_T, axis=0)
        An = A_T / np.where(norms > 0, norms, 1.0)
        res = lsq_linear(An, self.center, bounds=(0.0, np.inf), method="bvls", tol=1e-14)
        verdict, point = self._certify(An, np.maximum(res.x, 0.0))
        if verdict is None:
            lam = _nnls_active_set(An, self.center)
            verdict, point = self._certify(An, np.maximum(lam, 0.0))
        if verdict is None:
            raise RuntimeError(
                "ball-cone feasibility could not be certified either way; "
                "the halfspace system is numerically degenerate"
            )
        return verdict, point

    def free_ranges(self, state, gaps):
        return None  # no cheap exact refinement inside the cone


class _IntervalGeom:
    """Two-target simplex as an interval in the first blend weight."""

    PARAM_TOL = 1e-12  # slack in blend-weight units, distinct from gap units

    def __init__(self, region: SimplexRegion, tol_gap: float):
        self.tol_gap = tol_gap

    def root(self):
        return (0.0, 1.0)

    def child(self, state, halfspace_row):
        lo, hi = state
        g0, g1 = float(halfspace_row[0]), float(halfspace_row[1])
        a = g0 - g1  # halfspace: a * t + g1 <= 0
        if a > 1e-300:
            hi = min(hi, -g1 / a)
        elif a < -1e-300:
            lo = max(lo, -g1 / a)
        elif g1 > self.tol_gap:
            return (1.0, -1.0)  # constant violated constraint
        return (lo, hi)

    def feasible(self, state):
        lo, hi = state
        if lo > hi + self.PARAM_TOL:
            return False, None
        mid = min(1.0, max(0.0, 0.5 * (lo + hi)))
        return True, np.array([mid, 1.0 - mid])

    def free_ranges(self, state, gaps):
        lo, hi = state
        lo = max(0.0, lo)
        hi = min(1.0, hi)
        a = gaps[:, 0] - gaps[:, 1]
        v_lo = a * lo + gaps[:, 1]
        v_hi = a * hi + gaps[:, 1]
        return np.minimum(v_lo, v_hi), np.maximum(v_lo, v_hi)


class _PolyGeom:
    """Three-target simplex as a polygon in the first two weights."""

    def __init__(self, region: SimplexRegion, tol: float):
        self.tol = tol

    def root(self):
        return ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))

    @staticmethod
    def _coeffs(halfspace_row):
        g = halfspace_row
        # value at (a1, a2): c1*a1 + c2*a2 + c0 with a3 = 1 - a1 - a2
        return g[0] - g[2], g[1] - g[2], g[2]

    def child(self, state, halfspace_row):
        c1, c2, c0 = self._coeffs(halfspace_row)
        verts = state
        out = []
        m = len(verts)
        vals = [c1 * v[0] + c2 * v[1] + c0 for v in verts]
        for i in range(m):
            j = (i + 1) % m
            vi, vj = vals[i], vals[j]
            if vi <= self.tol:
                out.append(verts[i])
            if (vi <= self.tol) != (vj <= self.tol):
                t = vi / (vi - vj)
                out.append(
                    (
                        verts[i][0] + t * (verts[j][0] - verts[i][0]),
                        verts[i][1] + t * (verts[j][1] - verts[i][1]),
                    )
                )
        return tuple(out)

    def feasible(self, state):
        if not state:
            return False, None
        a1 = sum(v[0] for v in state) / len(state)
        a2 = sum(v[1] for v in state) / len(state)
        return True, np.array([a1, a2, 1.0 - a1 - a2])

    def free_ranges(self, state, gaps):
        if not state:
            return None
        V = np.asarray(state)  # (m, 2)
        c1 = gaps[:, 0] - gaps[:, 2]
        c2 = gaps[:, 1] - gaps[:, 2]
        c0 = gaps[:, 2]
        vals = V @ np.vstack([c1, c2]) + c0  # (m, P)
        return vals.min(axis=0), vals.max(axis=0)


class _LPGeom:
    """General simplex via feasibility linear programs."""

    def __init__(self, region: SimplexRegion, tol: float):
        self.K = region.dim
        self.tol = tol

    def root(self):
        return ()

    def child(self, state, halfspace_row):
        return state + (halfspace_row,)

    def feasible(self, state):
        A_eq = np.ones((1, self.K))
        if state:
            A_ub = np.stack(state)
            b_ub = np.full(len(state), self.tol)
        else:
            A_ub = None
            b_ub = None
        res = linprog(
            c=np.zeros(self.K),
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=np.array([1.0]),
            bounds=[(0.0, 1.0)] * self.K,
            method="highs",
        )
        if res.status == 0:
            return True, np.asarray(res.x)
        return False, None

    def free_ranges(self, state, gaps):
        return None


def _make_geom(region, tol):
    if isinstance(region, BallRegion):
        return _BallGeom(region, tol)
    if isinstance(region, SimplexRegion):
        if region.dim == 2:
            return _IntervalGeom(region, tol)
        if region.dim == 3:
            return _PolyGeom(region, tol)
        return _LPGeom(region, tol)
    raise TypeError(f"unknown region type {type(region)!r}")


# ---------------------------------------------------------------------------
# Search.


@dataclass
class _Node:
    assign: NDArray[np.int8]  # -1 unassigned, else orientation
    n_assigned: int
    losses: NDArray[np.int64]  # per-row loss counts from fixed orientations
    region_state: object


class _Objective:
    """Bound and value arithmetic shared by the search loop.

    Losses are tracked for every row; only the focal row (rank) or the
    group rows (group_count) feed the objective.
    """

    def __init__(self, inst: MipInstance):
        self.inst = inst
        self.n = inst.n_rows
        if inst.objective == "group_count":
            self.group_mask = np.zeros(self.n, dtype=bool)
            self.group_mask[list(inst.group_rows)] = True
            self.kappa = inst.kappa

    def value_from_losses(self, losses):
        if self.inst.objective == "rank":
            return 1 + int(losses[self.inst.focal])
        ranks = 1 + losses[self.group_mask]
        return int(np.sum(ranks <= self.kappa))

    def bound(self, losses, potential):
        """Admissible bound given fixed losses and per-row counts of
        still-unassigned pairs touching each row."""
        if self.inst.objective == "rank":
            base = 1 + int(losses[self.inst.focal])
            if self.inst.sense == "min":
                return base
            return base + int(potential[self.inst.focal])
        L = losses[self.group_mask]
        U = potential[self.group_mask]
        if self.inst.sense == "max":
            return int(np.sum(L + 1 <= self.kappa))
        return int(np.sum(L + U + 1 <= self.kappa))


def solve(inst: MipInstance, config: SolverConfig | None = None) -> MipSolution:
    """Run the query to optimality or budget exhaustion.

    Deterministic for a fixed node budget; the time budget is a coarse
    safety valve checked every few hundred nodes.
    """
    cfg = config or SolverConfig()
    obj = _Objective(inst)
    sense = inst.sense
    n = inst.n_rows
    G = np.asarray(inst.gaps, dtype=np.float64).copy()
    P = G.shape[0]
    if P:
        # Gap components at rounding-noise level (exactly tied pairs seen
        # through upstream factorizations) would otherwise turn halfspace
        # intersections into ill-conditioned slivers; snap them to zero so
        # an exact tie is represented exactly.
        g_scale = float(np.max(np.abs(G)))
        if g_scale > 0:
            G[np.abs(G) <= 1e-13 * g_scale] = 0.0

    glo, ghi = gap_ranges(inst.region, G)
    scale = max(1.0, float(np.max(np.abs(glo), initial=0.0)), float(np.max(np.abs(ghi), initial=0.0)))
    tol_forced = 1e-12 * scale
    mtol = cfg.margin * scale
    # Ball feasibility compares distances in parameter units; the simplex
    # geometries compare constraint values in gap units.
    geom_tol = cfg.feas_tol if isinstance(inst.region, BallRegion) else cfg.feas_tol * scale
    geom = _make_geom(inst.region, geom_tol)

    # Root presolve: orientations forced by a sign-definite gap range.
    forced1 = glo > tol_forced
    forced0 = ghi < -tol_forced
    gap_norm = np.max(np.abs(G), axis=1) if P else np.zeros(0)
    wild = gap_norm <= 1e-12 * scale  # identical score vectors; never constrains

    base_losses = np.zeros(n, dtype=np.int64)
    np.add.at(base_losses, inst.below[forced1], 1)
    np.add.at(base_losses, inst.above[forced0], 1)

    free = ~(forced1 | forced0)
    if inst.objective == "rank":
        # A wild pair never constrains the region and only the focal row's
        # count matters, so resolve it greedily by sense.
        if sense == "max":
            np.add.at(base_losses, inst.below[free & wild], 1)
        free = free & ~wild
    else:
        # A wild pair touching exactly one group row is also greedy: charge
        # the loss off the group for max, onto it for min. Group-group wild
        # pairs are genuinely combinatorial and stay branchable.
        gm = obj.group_mask
        mixed_wild = free & wild & (gm[inst.above] != gm[inst.below])
        if mixed_wild.any():
            a_in = gm[inst.above[mixed_wild]]
            target_rows = np.where(
                a_in == (sense == "min"), inst.above[mixed_wild], inst.below[mixed_wild]
            )
            np.add.at(base_losses, target_rows, 1)
            free = free & ~mixed_wild
    free_idx = np.flatnonzero(free)
    F = free_idx.shape[0]
    n_fixed = P - F

    # Static branch order: most evenly split gap range first, then larger
    # reach, then index for determinism.
    if F:
        fr_lo = glo[free_idx]
        fr_hi = ghi[free_idx]
        span = fr_hi - fr_lo
        # Zero-span (wild) pairs carry no geometry; branch them last.
        fracdev = np.where(
            span > 1e-12 * scale,
            np.abs(fr_hi / np.where(span > 0, span, 1.0) - 0.5),
            np.inf,
        )
        order = np.lexsort((free_idx, -np.abs(fr_hi), fracdev))
        branch_order = free_idx[order]
    else:
        branch_order = free_idx

    free_touch = np.zeros(n, dtype=np.int64)
    np.add.at(free_touch, inst.above[free_idx], 1)
    np.add.at(free_touch, inst.below[free_idx], 1)

    better = min if sense == "min" else max
    incumbent_value: int | None = None
    incumbent_witness: NDArray[np.float64] | None = None

    def witness_update(node: _Node, param):
        """Turn a feasibility witness into an attained objective value.

        Unassigned pairs orient by the gap sign at the witness with a
        safety margin; ambiguous pairs resolve pessimistically so the
        claimed value is always attainable.
        """
        nonlocal incumbent_value, incumbent_witness
        losses = node.losses.copy()
        open_idx = branch_order[np.flatnonzero(node.assign[branch_order] < 0)]
        if open_idx.shape[0]:
            vals = G[open_idx] @ param
            ab = inst.above[open_idx]
            be = inst.below[open_idx]
            if inst.objective == "rank":
                if sense == "min":
                    np.add.at(losses, be[vals > -mtol], 1)
                else:
                    np.add.at(losses, be[vals >= mtol], 1)
            else:
                gm = obj.group_mask
                sure_above = vals >= mtol
                sure_below = vals <= -mtol
                amb = ~(sure_above | sure_below)
                np.add.at(losses, be[sure_above], 1)
                np.add.at(losses, ab[sure_below], 1)
                if sense == "max":
                    # phantom losses onto group endpoints: only understates
                    np.add.at(losses, ab[amb & gm[ab]], 1)
                    np.add.at(losses, be[amb & gm[be]], 1)
                # min: ambiguous pairs charge nobody, which only overstates
        v = obj.value_from_losses(losses)
        if incumbent_value is None or better(incumbent_value, v) == v:
            if incumbent_value is None or v != incumbent_value:
                incumbent_value = v
                incumbent_witness = np.asarray(param, dtype=np.float64).copy()

    def node_bound(node: _Node) -> int:
        open_mask = node.assign < 0
        open_ids = free_idx[open_mask[free_idx]] if F else free_idx
        potential = np.zeros(n, dtype=np.int64)
        if open_ids.shape[0]:
            np.add.at(potential, inst.above[open_ids], 1)
            np.add.at(potential, inst.below[open_ids], 1)
        return obj.bound(node.losses, potential)

    def prunable(bound_val: int) -> bool:
        if incumbent_value is None:
            return False
        if sense == "min":
            return bound_val >= incumbent_value
        return bound_val <= incumbent_value

    def preferred_orientation(pidx: int) -> int:
        if inst.objective == "rank":
            return 0 if sense == "min" else 1
        gm = obj.group_mask
        a_in = gm[inst.above[pidx]]
        b_in = gm[inst.below[pidx]]
        if a_in and not b_in:
            want_loss_on_above = sense == "min"
            return 0 if want_loss_on_above else 1
        if b_in and not a_in:
            want_loss_on_below = sense == "min"
            return 1 if want_loss_on_below else 0
        return 0

    def make_child(node: _Node, pidx: int, orientation: int) -> _Node:
        assign = node.assign.copy()
        assign[pidx] = orientation
        losses = node.losses.copy()
        loser = inst.below[pidx] if orientation == 1 else inst.above[pidx]
        losses[loser] += 1
        if wild[pidx]:
            state = node.region_state  # trivial halfspace; geometry unchanged
        else:
            row = -G[pidx] if orientation == 1 else G[pidx]
            state = geom.child(node.region_state, row)
        return _Node(assign=assign, n_assigned=node.n_assigned + 1, losses=losses, region_state=state)

    def propagate(node: _Node) -> None:
        """Force orientations whose gap became sign-definite on the current
        region. Forced halfspaces are redundant there, so the region state
        stays put and one pass suffices."""
        open_mask = node.assign < 0
        open_ids = free_idx[open_mask[free_idx]]
        if not open_ids.shape[0]:
            return
        ranges = geom.free_ranges(node.region_state, G[open_ids])
        if ranges is None:
            return
        r_lo, r_hi = ranges
        force1 = r_lo > tol_forced
        force0 = r_hi < -tol_forced
        for k in np.flatnonzero(force1):
            pidx = int(open_ids[k])
            node.assign[pidx] = 1
            node.losses[inst.below[pidx]] += 1
            node.n_assigned += 1
        for k in np.flatnonzero(force0):
            pidx = int(open_ids[k])
            node.assign[pidx] = 0
            node.losses[inst.above[pidx]] += 1
            node.n_assigned += 1

    root_assign = np.full(P, -1, dtype=np.int8)
    root_assign[forced1] = 1
    root_assign[forced0] = 0
    if inst.objective == "rank":
        root_assign[wild & ~(forced1 | forced0)] = 1 if sense == "max" else 0
    else:
        still = (root_assign < 0) & wild & ~free
        root_assign[still] = 0  # mixed wild pairs resolved above; mark assigned
    root = _Node(
        assign=root_assign,
        n_assigned=P - F,
        losses=base_losses.copy(),
        region_state=geom.root(),
    )

    stack = [root]
    nodes = 0
    start = time.monotonic()
    exhausted = False
    while stack:
        if nodes >= cfg.node_budget:
            exhausted = True
            break
        if nodes % 256 == 0 and time.monotonic() - start > cfg.time_budget:
            exhausted = True
            break
        node = stack.pop()
        nodes += 1
        ok, param = geom.feasible(node.region_state)
        if not ok:
            continue
        propagate(node)
        witness_update(node, param)
        if node.n_assigned == P:
            continue  # leaf; witness_update already recorded its exact value
        if prunable(node_bound(node)):
            continue
        pidx = None
        for cand in branch_order:
            if node.assign[cand] < 0:
                pidx = int(cand)
                break
        if pidx is None:
            continue
        pref = preferred_orientation(pidx)
        stack.append(make_child(node, pidx, 1 - pref))
        stack.append(make_child(node, pidx, pref))

    if not exhausted:
        status = "optimal"
        bound = incumbent_value
    else:
        open_bounds = [node_bound(nd) for nd in stack]
        if sense == "min":
            outer = min(open_bounds) if open_bounds else incumbent_value
            if incumbent_value is not None and outer is not None and outer >= incumbent_value:
                status, bound = "optimal", incumbent_value
            else:
                status, bound = "budget_exhausted", outer
        else:
            outer = max(open_bounds) if open_bounds else incumbent_value
            if incumbent_value is not None and outer is not None and outer <= incumbent_value:
                status, bound = "optimal", incumbent_value
            else:
                status, bound = "budget_exhausted", outer

    if incumbent_value is None:
        # The root region is never empty for the supported region types, so
        # this would mean the budget died before the first feasibility call.
        status = "budget_exhausted" if exhausted else "infeasible"

    objective_value = None
    if incumbent_value is not None:
        if inst.objective == "rank":
            raw = float(incumbent_value - 1)
        else:
            raw = float(incumbent_value)
        if isinstance(inst.region, SimplexRegion):
            raw += -0.5 if sense == "min" else 0.5
        objective_value = raw

    return MipSolution(
        status=status,
        value=incumbent_value,
        bound=bound if incumbent_value is not None or bound is not None else None,
        witness=incumbent_witness,
        nodes=nodes,
        presolve_fixed=int(n_fixed),
        free_pairs=int(F),
        objective_value=objective_value,
    )


# ---------------------------------------------------------------------------
# Instance dumps.


def dump_instance(inst: MipInstance, path) -> None:
    """Write the query as JSON, including certified per-pair link constants.

    ``big_m_above`` bounds the gap from above over the region (slack of the
    orientation-1 link), ``big_m_below`` bounds its negation; both come
    from the exact gap ranges rather than a norm product.
    """
    glo, ghi = gap_ranges(inst.region, inst.gaps)
    if isinstance(inst.region, BallRegion):
        region = {
            "kind": "ball",
            "center": [float(v) for v in inst.region.center],
            "radius": float(inst.region.radius),
        }
    else:
        region = {
            "kind": "simplex",
            "dim": int(inst.region.dim),
            "sum_lower": float(inst.region.sum_lower),
        }
    doc = {
        "sense": inst.sense,
        "objective": inst.objective,
        "n_rows": int(inst.n_rows),
        "focal": None if inst.focal is None else int(inst.focal),
        "group_rows": None if inst.group_rows is None else [int(g) for g in inst.group_rows],
        "kappa": None if inst.kappa is None else int(inst.kappa),
        "region": region,
        "pairs": [
            {
                "above": int(inst.above[p]),
                "below": int(inst.below[p]),
                "gap": [float(v) for v in inst.gaps[p]],
                "big_m_above": max(0.0, float(ghi[p])),
                "big_m_below": max(0.0, float(-glo[p])),
            }
            for p in range(inst.gaps.shape[0])
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_instance(path) -> MipInstance:
    """Inverse of :func:`dump_instance`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc["region"]["kind"] == "ball":
        region = BallRegion(
            center=np.array(doc["region"]["center"], dtype=np.float64),
            radius=float(doc["region"]["radius"]),
        )
    else:
        region = SimplexRegion(dim=int(doc["region"]["dim"]), sum_lower=float(doc["region"]["sum_lower"]))
    pairs = doc["pairs"]
    dim = region.dim if isinstance(region, SimplexRegion) else region.center.shape[0]
    gaps = np.array([p["gap"] for p in pairs], dtype=np.float64).reshape(len(pairs), dim)
    return MipInstance(
        sense=doc["sense"],
        objective=doc["objective"],
        region=region,
        gaps=gaps,
        above=np.array([p["above"] for p in pairs], dtype=np.int64),
        below=np.array([p["below"] for p in pairs], dtype=np.int64),
        n_rows=int(doc["n_rows"]),
        focal=doc["focal"],
        group_rows=None if doc["group_rows"] is None else tuple(doc["group_rows"]),
        kappa=doc["kappa"],
    )
