"""Seeded random states for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .bipartite import DensityMatrix, PureEnsemble, product_pure_ensemble


def random_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator, dims: tuple[int, int], rank: int | None = None) -> DensityMatrix:
    """Induced (Ginibre) measure: ``G G^* / Tr`` with ``G`` of shape ``D x rank``."""
    d = dims[0] * dims[1]
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, dims)


def random_ppt_mixture(rng: np.random.Generator, dims: tuple[int, int]) -> DensityMatrix:
    """Random state mixed with white noise; a random fraction of samples is PPT."""
    rho = random_density(rng, dims, rank=int(rng.integers(1, dims[0] * dims[1] + 1)))
    p = rng.uniform()
    d = rho.dim
    return DensityMatrix(p * rho.matrix + (1 - p) * np.eye(d) / d, dims)


def random_separable(
    rng: np.random.Generator, dims: tuple[int, int], terms: int | None = None
) -> tuple[DensityMatrix, PureEnsemble]:
    """Mixture of random product pure states, with its defining ensemble."""
    d1, d2 = dims
    n = terms or int(rng.integers(1, d1 * d2 + 2))
    w = rng.dirichlet(np.ones(n))
    return product_pure_ensemble(
        w, [random_vector(rng, d1) for _ in range(n)], [random_vector(rng, d2) for _ in range(n)]
    )
