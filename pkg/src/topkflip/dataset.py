"""Tabular ingestion, validation, and design-matrix transforms.

A Dataset is an immutable table of features (with a leading intercept column
of ones), one or more named target vectors, a categorical group label per
row, opaque row ids, and a train/tune/holdout split tag per row. Columns can
be removed by regex, and the feature block can be orthonormalized with a
column-pivoted QR that pins the intercept and drops rank-deficient columns.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

INTERCEPT_NAME = "intercept"
SPLIT_VALUES = ("train", "tune", "holdout")

# Columns with pivot magnitude below this fraction of the largest pivot are
# treated as collinear and dropped.
PIVOT_DROP_REL_TOL = 1e-10


class DataError(Exception):
    """Base class for ingestion and validation failures."""


class SchemaError(DataError):
    """A required column is missing or the schema is inconsistent."""


class ParseError(DataError):
    """A cell could not be parsed; carries the first offending row."""

    def __init__(self, message: str, row_index: int, bad_count: int):
        super().__init__(message)
        self.row_index = row_index
        self.bad_count = bad_count


class EmptyDesignError(DataError):
    """All feature columns were removed."""


@dataclass(frozen=True)
class ColumnSchema:
    """Column-role mapping for CSV ingestion.

    ``split`` and ``row_id`` are optional; when absent, split tags are
    assigned deterministically from a seed and row ids default to the row
    position.
    """

    features: tuple[str, ...]
    targets: tuple[str, ...]
    group: str
    split: str | None = None
    row_id: str | None = None

    def __post_init__(self):
        if len(self.features) < 1:
            raise SchemaError("schema needs at least one feature column")
        if len(self.targets) < 1:
            raise SchemaError("schema needs at least one target column")
        if INTERCEPT_NAME in self.features:
            raise SchemaError(f"{INTERCEPT_NAME!r} is a reserved feature name")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature/target/group table.

    Attributes
    ----------
    feature_names : tuple of str
        Names for the feature columns; position 0 is always ``intercept``.
    features : ndarray, shape (n, d+1)
        Design matrix including the intercept column of ones.
    target_names : tuple of str
    targets : ndarray, shape (n, K)
    groups : ndarray of str, shape (n,)
    row_ids : tuple of str
    split_tags : ndarray of str, shape (n,)
        Each entry is one of ``train``, ``tune``, ``holdout``.
    """

    feature_names: tuple[str, ...]
    features: NDArray[np.float64]
    target_names: tuple[str, ...]
    targets: NDArray[np.float64]
    groups: NDArray
    row_ids: tuple[str, ...]
    split_tags: NDArray

    def __post_init__(self):
        n, p = self.features.shape
        if n < 2:
            raise DataError(f"need at least 2 rows, got {n}")
        if len(self.feature_names) != p:
            raise DataError("feature_names length does not match features")
        if self.feature_names[0] != INTERCEPT_NAME:
            raise DataError("feature column 0 must be the intercept")
        if self.targets.shape != (n, len(self.target_names)):
            raise DataError("targets shape does not match target_names")
        if len(self.target_names) < 1:
            raise DataError("need at least one target")
        for arr, what in ((self.features, "features"), (self.targets, "targets")):
            if not np.all(np.isfinite(arr)):
                raise DataError(f"non-finite values in {what}")
        col0 = self.features[:, 0]
        # Ones on ingestion; the orthonormalized design carries 1/sqrt(n).
        if col0[0] <= 0 or not np.allclose(col0, col0[0]):
            raise DataError("intercept column must be a positive constant")
        if len(self.row_ids) != n or self.groups.shape[0] != n or self.split_tags.shape[0] != n:
            raise DataError("row-aligned columns must all have length n")
        bad = set(np.unique(self.split_tags)) - set(SPLIT_VALUES)
        if bad:
            raise DataError(f"unknown split tags: {sorted(bad)}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        """Number of non-intercept feature columns."""
        return self.features.shape[1] - 1

    @property
    def K(self) -> int:
        return self.targets.shape[1]

    def target(self, name: str) -> NDArray[np.float64]:
        try:
            j = self.target_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown target {name!r}; have {self.target_names}") from None
        return self.targets[:, j]

    def group_mask(self, label: str) -> NDArray[np.bool_]:
        return self.groups == label

    def split_mask(self, tag: str) -> NDArray[np.bool_]:
        if tag not in SPLIT_VALUES:
            raise ValueError(f"split tag must be one of {SPLIT_VALUES}")
        return self.split_tags == tag

    def subset(self, mask: NDArray[np.bool_]) -> "Dataset":
        """Row subset in original order."""
        mask = np.asarray(mask, dtype=bool)
        return dataclasses.replace(
            self,
            features=self.features[mask],
            targets=self.targets[mask],
            groups=self.groups[mask],
            row_ids=tuple(r for r, m in zip(self.row_ids, mask) if m),
            split_tags=self.split_tags[mask],
        )


@dataclass(frozen=True)
class OrthoBasis:
    """Change of basis produced by :func:`orthonormalize`.

    ``transform`` maps the original (d+1)-column design to the retained
    orthonormal columns: ``X_orth = X @ transform``. ``dropped_columns``
    holds original column indices removed for rank deficiency.
    """

    transform: NDArray[np.float64]
    rank: int
    dropped_columns: tuple[int, ...]
    retained_columns: tuple[int, ...]
    source_names: tuple[str, ...]


def assign_splits(row_ids: "tuple[str, ...] | list[str]", seed: int) -> NDArray:
    """Deterministic 1/3 train/tune/holdout assignment by hash of row id.

    The hash covers the seed, so different seeds give different partitions
    while any one (seed, row_id) pair is stable across platforms and runs.
    """
    tags = np.empty(len(row_ids), dtype="<U7")
    for i, rid in enumerate(row_ids):
        digest = hashlib.sha256(f"{seed}:{rid}".encode()).digest()
        tags[i] = SPLIT_VALUES[int.from_bytes(digest[:8], "big") % 3]
    return tags


def _parse_numeric_block(rows, header_index, names, kind):
    """Parse named columns to float; collect offending row indices."""
    out = np.empty((len(rows), len(names)), dtype=np.float64)
    bad_rows = []
    for i, row in enumerate(rows):
        ok = True
        for j, name in enumerate(names):
            cell = row[header_index[name]]
            if cell == "":
                ok = False
                break
            try:
                out[i, j] = float(cell)
            except ValueError:
                ok = False
                break
        if not ok:
            bad_rows.append(i)
    if bad_rows:
        raise ParseError(
            f"{len(bad_rows)} row(s) with missing or non-numeric {kind} cells; "
            f"first at data row {bad_rows[0]}",
            row_index=bad_rows[0],
            bad_count=len(bad_rows),
        )
    return out


def load_csv(path, schema: ColumnSchema, split_seed: int = 0) -> Dataset:
    """Load a UTF-8 CSV with a header row into a Dataset.

    Parameters
    ----------
    path : str or Path
    schema : ColumnSchema
        Names of feature/target/group columns, plus optional split and
        row-id columns.
    split_seed : int
        Seed for the deterministic split assignment used when the schema
        names no split column.

    Raises
    ------
    SchemaError
        A named column is absent from the header.
    ParseError
        A feature or target cell is empty or non-numeric; the error names
        the first offending data row and the total count of bad rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [row for row in reader if row]

    header_index = {name: j for j, name in enumerate(header)}
    needed = list(schema.features) + list(schema.targets) + [schema.group]
    if schema.split is not None:
        needed.append(schema.split)
    if schema.row_id is not None:
        needed.append(schema.row_id)
    missing = [c for c in needed if c not in header_index]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")

    short = [i for i, row in enumerate(rows) if len(row) != len(header)]
    if short:
        raise ParseError(
            f"{path}: {len(short)} row(s) with wrong field count; first at data row {short[0]}",
            row_index=short[0],
            bad_count=len(short),
        )

    n = len(rows)
    if n < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {n}")

    raw_features = _parse_numeric_block(rows, header_index, schema.features, "feature")
    targets = _parse_numeric_block(rows, header_index, schema.targets, "target")

    groups = np.array([row[header_index[schema.group]] for row in rows], dtype=object)
    blank_groups = [i for i, g in enumerate(groups) if g == ""]
    if blank_groups:
        raise ParseError(
            f"{path}: {len(blank_groups)} row(s) with blank group; "
            f"first at data row {blank_groups[0]}",
            row_index=blank_groups[0],
            bad_count=len(blank_groups),
        )

    if schema.row_id is not None:
        row_ids = tuple(row[header_index[schema.row_id]] for row in rows)
    else:
        row_ids = tuple(str(i) for i in range(n))

    if schema.split is not None:
        split_tags = np.array([row[header_index[schema.split]] for row in rows], dtype="<U7")
    else:
        split_tags = assign_splits(row_ids, split_seed)

    features = np.hstack([np.ones((n, 1)), raw_features])
    return Dataset(
        feature_names=(INTERCEPT_NAME,) + tuple(schema.features),
        features=features,
        target_names=tuple(schema.targets),
        targets=targets,
        groups=groups,
        row_ids=row_ids,
        split_tags=split_tags,
    )


def write_csv(ds: Dataset, path) -> None:
    """Write a Dataset back to CSV in the layout load_csv expects.

    The intercept column is omitted (load_csv re-adds it), so
    ``load_csv(write_csv(ds))`` is the identity on contents for ingested
    tables. An orthonormalized design reloads with a unit intercept in
    place of its scaled constant column.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["row_id"]
            + list(ds.feature_names[1:])
            + list(ds.target_names)
            + ["group", "split"]
        )
        for i in range(ds.n):
            writer.writerow(
                [ds.row_ids[i]]
                + [repr(float(v)) for v in ds.features[i, 1:]]
                + [repr(float(v)) for v in ds.targets[i]]
                + [ds.groups[i], ds.split_tags[i]]
            )


def schema_for(ds: Dataset) -> ColumnSchema:
    """Schema that reads back a file produced by :func:`write_csv`."""
    return ColumnSchema(
        features=tuple(ds.feature_names[1:]),
        targets=tuple(ds.target_names),
        group="group",
        split="split",
        row_id="row_id",
    )


def drop_columns_matching(ds: Dataset, patterns) -> Dataset:
    """Remove feature columns whose name matches any regex in patterns.

    Matching uses ``re.search``. The intercept is never dropped. Targets and
    groups are untouched.
    """
    compiled = [re.compile(p) for p in patterns]
    keep = [0] + [
        j
        for j in range(1, len(ds.feature_names))
        if not any(c.search(ds.feature_names[j]) for c in compiled)
    ]
    if len(keep) == 1:
        raise EmptyDesignError("all non-intercept feature columns removed")
    return dataclasses.replace(
        ds,
        feature_names=tuple(ds.feature_names[j] for j in keep),
        features=ds.features[:, keep],
    )


def keep_columns_matching(ds: Dataset, patterns) -> Dataset:
    """Keep only feature columns whose name matches any regex in patterns.

    Complement of :func:`drop_columns_matching`; the intercept always stays.
    """
    compiled = [re.compile(p) for p in patterns]
    keep = [0] + [
        j
        for j in range(1, len(ds.feature_names))
        if any(c.search(ds.feature_names[j]) for c in compiled)
    ]
    if len(keep) == 1:
        raise EmptyDesignError("no non-intercept feature column matched the keep patterns")
    return dataclasses.replace(
        ds,
        feature_names=tuple(ds.feature_names[j] for j in keep),
        features=ds.features[:, keep],
    )


def orthonormalize(ds: Dataset) -> "tuple[Dataset, OrthoBasis]":
    """Orthonormalize the design with the intercept pinned first.

    Runs a column-pivoted QR on the non-intercept columns after projecting
    out the intercept direction. Columns whose pivot magnitude falls below
    ``PIVOT_DROP_REL_TOL`` times the largest pivot are dropped as collinear.
    Returns the transformed Dataset (features satisfy X^T X = I) and the
    OrthoBasis carrying the transform and the dropped column indices.
    """
    X = ds.features
    n, p = X.shape
    sqrt_n = np.sqrt(float(n))
    q0 = X[:, :1] / sqrt_n

    if p == 1:
        raise EmptyDesignError("design has no non-intercept columns")

    rest = X[:, 1:]
    rest_proj = rest - q0 @ (q0.T @ rest)

    # Column-pivoted QR orders columns by residual norm, exposing collinear
    # ones at the tail of the R diagonal.
    Q_r, R_r, piv = scipy.linalg.qr(rest_proj, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R_r))
    largest = max(float(diag.max(initial=0.0)), sqrt_n)
    keep_count = int(np.sum(diag >= PIVOT_DROP_REL_TOL * largest))

    retained_rest = piv[:keep_count]
    dropped = tuple(sorted(int(j) + 1 for j in piv[keep_count:]))
    rank = keep_count + 1

    # Solve for the transform: X @ T = [q0, Q_r[:, :keep_count]].
    # The rest block satisfies (X_rest[:, piv_keep] - q0 q0^T X_rest[:, piv_keep])
    # = Q_r R_r[:keep, :keep], so T is assembled from R^{-1} and the
    # intercept projection coefficients.
    T = np.zeros((p, rank))
    T[0, 0] = 1.0 / sqrt_n
    if keep_count > 0:
        R_keep = R_r[:keep_count, :keep_count]
        inv_R = scipy.linalg.solve_triangular(R_keep, np.eye(keep_count))
        proj_coef = (q0.T @ rest[:, retained_rest]) / sqrt_n  # shape (1, keep)
        T[0, 1:] = -(proj_coef @ inv_R)[0]
        for out_col in range(keep_count):
            T[1 + retained_rest[: out_col + 1], 1 + out_col] = inv_R[: out_col + 1, out_col]

    X_orth = X @ T
    # Column 0 comes out as 1/sqrt(n): constant, so still a valid intercept
    # direction, just rescaled.
    X_orth[:, 0] = 1.0 / sqrt_n
    new_names = (INTERCEPT_NAME,) + tuple(f"q{j}" for j in range(1, rank))
    new_ds = dataclasses.replace(
        ds,
        feature_names=new_names,
        features=X_orth,
    )
    basis = OrthoBasis(
        transform=T,
        rank=rank,
        dropped_columns=dropped,
        retained_columns=(0,) + tuple(int(j) + 1 for j in sorted(retained_rest)),
        source_names=ds.feature_names,
    )
    return new_ds, basis
