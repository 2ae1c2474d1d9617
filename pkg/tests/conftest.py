import numpy as np
import pytest
import scipy.sparse as sp

from oscgmrf import (
    ModelSpec,
    NoiseSpec,
    OperatorSpec,
    assemble,
    build_regular_mesh,
)


def table1_model(**overrides) -> ModelSpec:
    """The reference parameter set used throughout the simulation tests."""
    op = dict(variant="L1", b11=0.5, b21=0.25, b22=1.0, h11=0.25, h22=0.36, h21=0.0)
    op.update({k: v for k, v in overrides.items() if k in op})
    return ModelSpec(
        operator=OperatorSpec(**op),
        noise1=overrides.get("noise1", NoiseSpec(kind="matern", kappa_n=0.5)),
        noise2=overrides.get("noise2", NoiseSpec(kind="oscillating", kappa_n=0.6, omega=0.95)),
        lock1=overrides.get("lock1", True),
        lock2=overrides.get("lock2", False),
    )


@pytest.fixture(scope="session")
def small_mesh():
    return build_regular_mesh(5, 4, extent=(0.0, 2.0, 0.0, 1.5))


@pytest.fixture(scope="session")
def small_fem(small_mesh):
    return assemble(small_mesh)


@pytest.fixture(scope="session")
def table1():
    return table1_model()


def spd_csc(n: int, seed: int, density: float = 0.15) -> sp.csc_matrix:
    """Random sparse SPD matrix (diagonally dominant) in canonical csc."""
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng, format="coo")
    A = (A + A.T).tocsc()
    A = A - sp.diags(A.diagonal())
    row_sums = np.asarray(np.abs(A).sum(axis=0)).ravel()
    A = A + sp.diags(row_sums + rng.uniform(0.5, 1.5, n))
    A = A.tocsc()
    A.sum_duplicates()
    A.sort_indices()
    return A
