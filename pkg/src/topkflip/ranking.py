"""Deterministic descending ranking and top-k indicators.

Scores are ranked 1..n with 1 assigned to the largest score. Ties are broken
by ascending row index so that repeated runs and independent implementations
agree bit for bit. Ties are never silently merged: the count of tied rows is
carried on the result so callers can surface a warning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class RankVector:
    """Ranks and top-k flags for one score vector.

    Attributes
    ----------
    ranks : ndarray of int
        Permutation of 1..n; 1 is the largest score.
    kappa : int
        Resource cap used to cut the top set.
    top_flags : ndarray of bool
        ``top_flags[i]`` is True iff ``ranks[i] <= kappa``.
    tie_count : int
        Number of rows that share their score with at least one other row.
        Deterministic index order resolved them; nonzero values deserve a
        warning upstream because rank extremes at ties depend on convention.
    """

    ranks: NDArray[np.int64]
    kappa: int
    top_flags: NDArray[np.bool_]
    tie_count: int

    @property
    def n(self) -> int:
        return int(self.ranks.shape[0])

    def boundary_tied(self, scores: NDArray[np.float64]) -> bool:
        """True when the kappa-th and (kappa+1)-th scores are equal.

        A tie exactly at the cut means membership of the boundary rows in the
        top set is an artifact of the index tie-break.
        """
        if self.kappa >= self.n:
            return False
        order = np.argsort(self.ranks)
        return bool(scores[order[self.kappa - 1]] == scores[order[self.kappa]])


def rank_descending(scores: NDArray[np.float64], kappa: int) -> RankVector:
    """Rank scores in descending order with index tie-break.

    Parameters
    ----------
    scores : array of shape (n,)
        Finite prediction values.
    kappa : int
        Cap, 1 <= kappa <= n.

    Returns
    -------
    RankVector

    Raises
    ------
    ValueError
        If kappa is out of range or any score is not finite.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError(f"scores must be 1-d, got shape {scores.shape}")
    n = scores.shape[0]
    if not (1 <= kappa <= n):
        raise ValueError(f"kappa must be in [1, {n}], got {kappa}")
    if not np.all(np.isfinite(scores)):
        bad = int(np.flatnonzero(~np.isfinite(scores))[0])
        raise ValueError(f"non-finite score at row {bad}")

    # lexsort uses the last key as primary: sort by -score, then by index.
    order = np.lexsort((np.arange(n), -scores))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(1, n + 1)

    sorted_scores = scores[order]
    tied = np.zeros(n, dtype=bool)
    same_as_next = sorted_scores[:-1] == sorted_scores[1:]
    tied[:-1] |= same_as_next
    tied[1:] |= same_as_next

    return RankVector(
        ranks=ranks,
        kappa=int(kappa),
        top_flags=ranks <= kappa,
        tie_count=int(tied.sum()),
    )


def resolve_kappa(kappa: "int | str", n: int) -> int:
    """Resolve an integer or percentile cap against a sample of size n.

    Accepts either an integer (returned unchanged after validation) or a
    string of the form ``"top 3%"`` / ``"3%"``. Percentile caps round up so
    that a nonempty selection is made even on small samples.
    """
    if isinstance(kappa, (int, np.integer)):
        k = int(kappa)
    else:
        text = str(kappa).strip().lower()
        if text.startswith("top"):
            text = text[3:].strip()
        if not text.endswith("%"):
            raise ValueError(f"cannot parse kappa {kappa!r}; expected int or 'top P%'")
        try:
            pct = float(text[:-1])
        except ValueError as exc:
            raise ValueError(f"cannot parse kappa {kappa!r}") from exc
        if not (0.0 < pct <= 100.0):
            raise ValueError(f"kappa percentile must be in (0, 100], got {pct}")
        k = int(np.ceil(pct / 100.0 * n))
    if not (1 <= k <= n):
        raise ValueError(f"kappa {k} out of range for n={n}")
    return k
