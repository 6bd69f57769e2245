"""Shared fixtures.

The clinical stand-in table is expensive enough to build once per
session; everything dataset-dependent pins its seed so failures
reproduce. Set TOPKFLIP_HEALTHCARE_CSV to a CSV with the same column
layout to run the dataset-dependent tests against a real extract
instead.
"""

import os

import numpy as np
import pytest

from topkflip.dataset import keep_columns_matching, load_csv, schema_for
from topkflip.synth import generate_clinical

CLINICAL_SEED = 20240117

# lagged-cost, chronic-count, and demographic blocks; the analysis
# subset every dataset-dependent criterion runs on
SUBSET_PATTERNS = (
    r"gagne_sum_tm1",
    r"hypertension_elixhauser_tm1",
    r"^dem_",
    r"cost.*tm1",
)


@pytest.fixture(scope="session")
def clinical():
    path = os.environ.get("TOPKFLIP_HEALTHCARE_CSV")
    if path:
        probe = generate_clinical(n=50, seed=0)
        return load_csv(path, schema_for(probe))
    return generate_clinical(seed=CLINICAL_SEED)


@pytest.fixture(scope="session")
def clinical_subset(clinical):
    return keep_columns_matching(clinical, list(SUBSET_PATTERNS))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_design(rng, n, d):
    """Orthonormalized random design with an intercept flavour column."""
    A = rng.normal(size=(n, d))
    A[:, 0] = 1.0
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs
