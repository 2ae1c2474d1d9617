"""Sampling from sparse-precision Gaussian fields.

Draws are produced the standard way: factor Q = L L^T under a fill-reducing
permutation, draw z ~ N(0, I), back-substitute L^T v = z and undo the
permutation.  Conditional sampling on noisy point observations adds the
observation information to the precision and corrects the mean.

Randomness comes from counter-based Philox streams keyed by (seed, draw
index), so any draw can be regenerated independently of the others and a
draw's value never depends on how many draws were requested -- useful both
for reproducibility and for generating draws in parallel worker threads.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError
from .observations import ObservationSet
from .precision import Gmrf, _symmetrize

logger = logging.getLogger(__name__)

# noise synthesis uses a key offset so it can never collide with draw streams
NOISE_STREAM_OFFSET = 2**63


def _draw_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one draw."""
    return np.random.Generator(np.random.Philox(key=[seed, index]))


@dataclass(frozen=True)
class SampleBatch:
    """A batch of field draws; row j holds draw j, fields concatenated."""

    draws: np.ndarray  # (count, size)
    seed: int

    @property
    def count(self) -> int:
        return self.draws.shape[0]

    def field(self, index: int) -> np.ndarray:
        """Draws of one field (1 or 2) as a (count, n) view."""
        if index not in (1, 2):
            raise InvalidInputError(f"field index must be 1 or 2, got {index!r}")
        n = self.draws.shape[1] // 2
        return self.draws[:, (index - 1) * n : index * n]


def _standard_normals(size: int, count: int, seed: int, threads: int) -> np.ndarray:
    """(size, count) matrix whose column j comes from the stream (seed, j)."""
    Z = np.empty((count, size))

    def fill(lo: int, hi: int) -> None:
        for j in range(lo, hi):
            Z[j] = _draw_stream(seed, j).standard_normal(size)

    if threads > 1 and count >= 4 * threads:
        bounds = np.linspace(0, count, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda t: fill(bounds[t], bounds[t + 1]), range(threads)))
    else:
        fill(0, count)
    return np.ascontiguousarray(Z.T)


def _apply_sample_transform(factor, Z: np.ndarray, threads: int) -> np.ndarray:
    """P^T L^{-T} Z column-block-parallel; (size, count) in, (count, size) out."""
    if threads > 1 and Z.shape[1] >= 4 * threads:
        bounds = np.linspace(0, Z.shape[1], threads + 1).astype(int)
        parts = [None] * threads

        def run(t: int) -> None:
            parts[t] = factor.sample_transform(Z[:, bounds[t] : bounds[t + 1]])

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(threads)))
        V = np.concatenate(parts, axis=1)
    else:
        V = factor.sample_transform(Z)
    return np.ascontiguousarray(V.T)


def sample(
    gmrf: Gmrf,
    count: int,
    seed: int,
    ordering: str = "mindeg",
    threads: int = 1,
) -> SampleBatch:
    """Draw ``count`` zero-mean samples with covariance Q^{-1}."""
    if count < 1:
        raise InvalidInputError(f"count must be positive, got {count}")
    if seed < 0:
        raise InvalidInputError(f"seed must be nonnegative, got {seed}")
    factor = gmrf.factor(ordering)
    Z = _standard_normals(gmrf.size, count, seed, threads)
    draws = _apply_sample_transform(factor, Z, threads)
    logger.info("drew %d samples of size %d (seed %d)", count, gmrf.size, seed)
    return SampleBatch(draws=draws, seed=seed)


def conditional(
    gmrf: Gmrf,
    obs: ObservationSet,
    ordering: str = "mindeg",
) -> tuple[np.ndarray, Gmrf]:
    """Posterior mean and posterior GMRF given noisy point observations.

    The posterior precision is Q_c = Q + A^T Q_n A and the mean solves
    Q_c mu = A^T Q_n y.  With an empty observation set this reduces to the
    prior (zero mean).
    """
    if obs.size != gmrf.size:
        raise InvalidInputError(
            f"observations built for size {obs.size}, field has size {gmrf.size}"
        )
    AtQn = obs.A.T.multiply(obs.noise_precision[None, :]).tocsc()
    Qc = _symmetrize(gmrf.Q + (AtQn @ obs.A))
    post = Gmrf(Q=Qc, model=gmrf.model)
    rhs = np.asarray(AtQn @ obs.values).ravel()
    mean = post.factor(ordering).solve(rhs)
    return mean, post


def sample_conditional(
    gmrf: Gmrf,
    obs: ObservationSet,
    count: int,
    seed: int,
    ordering: str = "mindeg",
    threads: int = 1,
) -> tuple[np.ndarray, SampleBatch]:
    """Posterior mean plus draws from the posterior field."""
    mean, post = conditional(gmrf, obs, ordering)
    batch = sample(post, count, seed, ordering, threads)
    return mean, SampleBatch(draws=batch.draws + mean[None, :], seed=seed)


def synthesize_observations(
    x: np.ndarray,
    A: sp.spmatrix,
    noise_precision: np.ndarray,
    seed: int,
) -> np.ndarray:
    """Observation values A x + e with e ~ N(0, diag(1/noise_precision))."""
    gen = _draw_stream(seed, NOISE_STREAM_OFFSET)
    x = np.asarray(x, dtype=np.float64)
    qn = np.asarray(noise_precision, dtype=np.float64)
    return A @ x + gen.standard_normal(A.shape[0]) / np.sqrt(qn)
