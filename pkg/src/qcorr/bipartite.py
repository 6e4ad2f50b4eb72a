"""Bipartite states, reductions, and pure-state ensembles.

Subsystem ordering: basis index ``i1 * d2 + i2``, subsystem 1 is the slow
index. Every partial operation and every Kronecker product in the package
follows this convention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadBasis,
    BadWeights,
    InvalidState,
    LengthMismatch,
    MissingDims,
    NegativeSpectrum,
    NotIsometry,
)
from .numerics import HermitianOperator, hermiticity_defect, psd_floor, trace_norm

logger = logging.getLogger(__name__)

TRACE_TOL = 1e-10
RANK_RTOL = 1e-10
GNS_DROP = 1e-12
BARYCENTER_TOL = 1e-8
UNIT_TOL = 1e-10

Dims = tuple[int, int]


def _check_dims(dims, n: int) -> Dims | None:
    if dims is None:
        return None
    d1, d2 = int(dims[0]), int(dims[1])
    if d1 < 1 or d2 < 1 or d1 * d2 != n:
        raise MissingDims(f"dims {dims} do not factor dimension {n}")
    return (d1, d2)


@dataclass(frozen=True)
class DensityMatrix:
    """Positive semidefinite, unit-trace matrix, optionally tagged ``(d1, d2)``.

    Tiny negative eigenvalues (within the PSD floor) are clamped to zero and
    the trace renormalized; anything worse is rejected.
    """

    matrix: np.ndarray = field(repr=False)
    dims: Dims | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidState(f"density matrix must be square, got shape {m.shape}")
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if hermiticity_defect(m) > 1e-9 * scale:
            raise InvalidState("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace {tr!r} differs from 1 by more than {TRACE_TOL}")
        w, v = np.linalg.eigh(m)
        floor = psd_floor()
        if w[0] < -floor:
            raise NegativeSpectrum(f"eigenvalue {w[0]:.3e} below -psd_floor ({floor:.1e})")
        if w[0] < 0:
            logger.debug("clamping eigenvalue %.3e and renormalizing", w[0])
            w = np.clip(w, 0.0, None)
            w = w / w.sum()
            m = (v * w) @ v.conj().T
            m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", _check_dims(self.dims, m.shape[0]))

    @classmethod
    def from_vector(cls, psi, dims: Dims | None = None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims)

    @classmethod
    def from_unnormalized(cls, m, dims: Dims | None = None) -> "DensityMatrix":
        m = np.asarray(m, dtype=complex)
        return cls(m / np.trace(m).real, dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def with_dims(self, dims: Dims | None) -> "DensityMatrix":
        return DensityMatrix(self.matrix, dims)

    def require_dims(self) -> Dims:
        if self.dims is None:
            raise MissingDims("state carries no bipartite (d1, d2) tag")
        return self.dims

    def expect(self, op) -> float:
        """Tr(rho A) for Hermitian ``A``."""
        return float(np.real(np.einsum("ij,ji->", self.matrix, np.asarray(op))))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True)
class PureEnsemble:
    """Finite list of weights and unit vectors averaging to ``barycenter``."""

    weights: np.ndarray
    components: np.ndarray = field(repr=False)
    barycenter: DensityMatrix = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        c = np.array(self.components, dtype=complex, copy=True)
        if c.ndim == 1:
            c = c[None, :]
        if c.shape[0] != w.size:
            raise LengthMismatch(f"{w.size} weights but {c.shape[0]} components")
        if c.shape[1] != self.barycenter.dim:
            raise LengthMismatch(f"components have dimension {c.shape[1]}, barycenter {self.barycenter.dim}")
        if w.size == 0 or np.any(w < -1e-15) or abs(w.sum() - 1.0) > TRACE_TOL:
            raise BadWeights("weights must be nonnegative and sum to 1")
        norms = np.linalg.norm(c, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise InvalidState("ensemble components must be unit vectors")
        w = np.clip(w, 0.0, None)
        gap = trace_norm(_mixture(w, c) - self.barycenter.matrix)
        if gap > BARYCENTER_TOL:
            raise InvalidState(f"ensemble average misses the barycenter by {gap:.3e} in trace norm")
        w.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", c)

    @classmethod
    def from_unnormalized(cls, vectors, barycenter: DensityMatrix, drop: float = 1e-14) -> "PureEnsemble":
        """Build from rows ``psi_i~`` whose outer products sum to the barycenter."""
        vectors = np.asarray(vectors, dtype=complex)
        weights = np.einsum("ij,ij->i", vectors.conj(), vectors).real
        keep = weights > drop
        weights, vectors = weights[keep], vectors[keep]
        comps = vectors / np.sqrt(weights)[:, None]
        return cls(weights / weights.sum(), comps, barycenter)

    def __len__(self) -> int:
        return self.weights.size

    def mixture(self) -> np.ndarray:
        return _mixture(self.weights, self.components)

    def unnormalized(self) -> np.ndarray:
        return self.components * np.sqrt(self.weights)[:, None]

    def projector(self, i: int) -> DensityMatrix:
        return DensityMatrix.from_vector(self.components[i], self.barycenter.dims)


def _mixture(weights, comps) -> np.ndarray:
    return np.einsum("k,ki,kj->ij", weights, comps, comps.conj())


def ptrace_matrix(m, dims: Dims, keep: int) -> np.ndarray:
    """Partial trace of a raw matrix, keeping subsystem ``keep`` (1 or 2)."""
    d1, d2 = dims
    t = np.asarray(m).reshape(d1, d2, d1, d2)
    if keep == 1:
        return np.einsum("ajbj->ab", t)
    if keep == 2:
        return np.einsum("iaib->ab", t)
    raise ValueError(f"keep must be 1 or 2, got {keep!r}")


def ptranspose_matrix(m, dims: Dims) -> np.ndarray:
    """Transpose the second tensor factor of a raw matrix."""
    d1, d2 = dims
    t = np.asarray(m).reshape(d1, d2, d1, d2)
    return t.transpose(0, 3, 2, 1).reshape(d1 * d2, d1 * d2)


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of subsystem ``keep``."""
    dims = rho.require_dims()
    return DensityMatrix(ptrace_matrix(rho.matrix, dims, keep))


def partial_transpose(rho: DensityMatrix) -> HermitianOperator:
    """Transpose on the second factor, in the computational basis."""
    dims = rho.require_dims()
    return HermitianOperator(ptranspose_matrix(rho.matrix, dims))


def product_state(*factors: DensityMatrix) -> DensityMatrix:
    a, b = factors
    return DensityMatrix(np.kron(a.matrix, b.matrix), (a.dim, b.dim))


def max_entangled(n: int, singlet: bool = False) -> DensityMatrix:
    """Projector onto ``(1/sqrt n) sum_i e_i (x) e_i``.

    With ``singlet=True`` (``n == 2`` only) the vector is
    ``(|10> - |01>)/sqrt 2`` instead.
    """
    if n < 2:
        raise ValueError("max_entangled needs n >= 2")
    psi = np.zeros(n * n, dtype=complex)
    if singlet:
        if n != 2:
            raise ValueError("the singlet variant exists for n == 2 only")
        psi[2] = 1.0  # |10>
        psi[1] = -1.0  # |01>
    else:
        psi[np.arange(n) * (n + 1)] = 1.0
    return DensityMatrix.from_vector(psi, (n, n))


def bell_state() -> DensityMatrix:
    return max_entangled(2)


def singlet_state() -> DensityMatrix:
    return max_entangled(2, singlet=True)


def separable_from_ensemble(
    weights: Sequence[float],
    left_states: Sequence[DensityMatrix],
    right_states: Sequence[DensityMatrix],
) -> DensityMatrix:
    """sum_i w_i rho1_i (x) rho2_i."""
    if not (len(weights) == len(left_states) == len(right_states)) or len(weights) == 0:
        raise LengthMismatch("weights, left_states and right_states must have equal nonzero length")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > TRACE_TOL:
        raise BadWeights("weights must form a probability vector")
    d1, d2 = left_states[0].dim, right_states[0].dim
    if any(s.dim != d1 for s in left_states) or any(s.dim != d2 for s in right_states):
        raise LengthMismatch("all factor states on one side must share a dimension")
    m = sum(wi * np.kron(a.matrix, b.matrix) for wi, a, b in zip(w, left_states, right_states))
    return DensityMatrix(m, (d1, d2))


def product_pure_ensemble(weights, left_vectors, right_vectors) -> tuple[DensityMatrix, PureEnsemble]:
    """Separable state from product pure vectors, with its defining ensemble."""
    w = np.asarray(weights, dtype=float)
    if not (len(w) == len(left_vectors) == len(right_vectors)):
        raise LengthMismatch("weights and vector lists must have equal length")
    comps = []
    for a, b in zip(left_vectors, right_vectors):
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        comps.append(np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b)))
    comps = np.array(comps)
    dims = (len(left_vectors[0]), len(right_vectors[0]))
    rho = DensityMatrix(_mixture(w, comps), dims)
    return rho, PureEnsemble(w, comps, rho)


def support(rho: DensityMatrix, rtol: float = RANK_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues above ``rtol * max`` and their eigenvectors (as columns)."""
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > rtol * w[-1]
    return w[keep], v[:, keep]


def spectral_ensemble(rho: DensityMatrix) -> PureEnsemble:
    w, v = support(rho)
    return PureEnsemble(w / w.sum(), v.T, rho)


def _merge_parallel(weights, comps, tol=1e-12):
    """Fuse components equal up to a global phase."""
    out_w, out_c = [], []
    for w, c in zip(weights, comps):
        for j, oc in enumerate(out_c):
            if abs(abs(np.vdot(oc, c)) - 1.0) < tol:
                out_w[j] += w
                break
        else:
            out_w.append(w)
            out_c.append(c)
    return np.array(out_w), np.array(out_c)


def gns_orthogonal_decomposition(rho: DensityMatrix, basis) -> PureEnsemble:
    """Decompose ``rho`` along an orthonormal basis ``{e_i}``.

    Components are ``rho^(1/2) e_i`` normalized, with weights
    ``<e_i|rho|e_i>``; vanishing weights are dropped, and components that
    coincide up to phase are merged into one.

    Args:
        rho: state to decompose.
        basis: orthonormal vectors, either a sequence of vectors or a matrix
            whose *columns* are the basis vectors.
    """
    e = _basis_columns(basis, rho.dim)
    gram = e.conj().T @ e
    if e.shape[1] != rho.dim or np.max(np.abs(gram - np.eye(rho.dim))) > 1e-10:
        raise BadBasis("basis must be orthonormal and span the space")
    lam, vecs = support(rho)
    root = (vecs * np.sqrt(lam)) @ vecs.conj().T
    # |rho^(1/2) e_i|^2 = <e_i|rho|e_i>, computed from the root so the
    # ensemble reproduces its own square exactly
    images = (root @ e).T
    weights = np.einsum("ij,ij->i", images.conj(), images).real
    keep = weights > GNS_DROP
    comps = images[keep] / np.sqrt(weights[keep])[:, None]
    weights, comps = _merge_parallel(weights[keep], comps)
    return PureEnsemble(weights / weights.sum(), comps, rho)


def _basis_columns(basis, n: int) -> np.ndarray:
    if isinstance(basis, np.ndarray) and basis.ndim == 2 and basis.shape[0] == n:
        return basis.astype(complex)
    cols = [np.asarray(b, dtype=complex).ravel() for b in basis]
    if any(c.size != n for c in cols):
        raise BadBasis(f"basis vectors must have dimension {n}")
    return np.array(cols).T


def ensemble_from_isometry(rho: DensityMatrix, mix) -> PureEnsemble:
    """Ensemble ``psi_i~ = sum_j mix[i, j] sqrt(lambda_j) v_j`` of ``rho``.

    Every ensemble of ``rho`` with ``m`` members arises this way from some
    ``m x r`` isometry, ``r`` being the numerical rank.
    """
    lam, vecs = support(rho)
    mix = np.asarray(mix, dtype=complex)
    if mix.ndim != 2 or mix.shape[1] != lam.size or mix.shape[0] < lam.size:
        raise NotIsometry(f"mix must be m x {lam.size} with m >= {lam.size}, got shape {mix.shape}")
    if np.max(np.abs(mix.conj().T @ mix - np.eye(lam.size))) > 1e-8:
        raise NotIsometry("mix^* mix differs from the identity")
    tilde = mix @ (vecs * np.sqrt(lam)).T
    return PureEnsemble.from_unnormalized(tilde, rho)


def isometry_from_ensemble(rho: DensityMatrix, ensemble: PureEnsemble) -> np.ndarray:
    """Inverse of :func:`ensemble_from_isometry` for the given spectral data."""
    lam, vecs = support(rho)
    tilde = ensemble.unnormalized()
    return (tilde @ vecs.conj()) / np.sqrt(lam)
