"""Classical and quantum correlation coefficients, and the coefficient of
quantum correlations ``d(omega, A)``.

``d(omega, A)`` compares a state with its *separable shadow*: the state
obtained from an ensemble by replacing every member with the product of its
two reductions.  It is an infimum over ensembles; the value returned here is
the best found by :mod:`qcorr.ensemble_search`, i.e. an upper bound, exact
for pure states (whose only ensemble is the state itself).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .bipartite import DensityMatrix, PureEnsemble, ptrace_matrix
from .ensemble_search import OptimizerSettings, ProbeFn, minimize_over_ensembles
from .errors import DegenerateVariance, DimensionMismatch, InvalidState, MissingDims
from .numerics import as_hermitian, operator_norm, pauli_word

VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint law of two discrete random variables.

    ``grid[i, j]`` is ``P(X = xvals[i], Y = yvals[j])``.  It may be a dense
    array or a ``scipy.sparse`` matrix, which keeps sample-based joints of
    size ``n x n`` cheap.
    """

    grid: object
    xvals: np.ndarray
    yvals: np.ndarray

    def __post_init__(self):
        g = self.grid
        xv = np.asarray(self.xvals, dtype=float).ravel()
        yv = np.asarray(self.yvals, dtype=float).ravel()
        if g.shape != (xv.size, yv.size):
            raise ValueError(f"grid shape {g.shape} does not match {xv.size} x {yv.size} values")
        entries = g.data if sp.issparse(g) else np.asarray(g)
        if np.any(entries < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(entries.sum()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "xvals", xv)
        object.__setattr__(self, "yvals", yv)

    @classmethod
    def from_samples(cls, xs, ys, weights=None) -> "DiscreteJoint":
        """Joint law of ``(X, Y) = (xs[k], ys[k])`` with probability ``weights[k]``."""
        xs = np.asarray(xs, dtype=float).ravel()
        ys = np.asarray(ys, dtype=float).ravel()
        n = xs.size
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        grid = sp.csr_matrix((w, (np.arange(n), np.arange(n))), shape=(n, n))
        return cls(grid, xs, ys)

    @classmethod
    def product(cls, px, xvals, py, yvals) -> "DiscreteJoint":
        return cls(np.outer(px, py), xvals, yvals)


@dataclass(frozen=True)
class CorrelationReport:
    value: float
    numerator: float
    variances: tuple[float, float]


def _report(cov, var_x, var_y) -> CorrelationReport:
    if var_x <= VARIANCE_FLOOR or var_y <= VARIANCE_FLOOR:
        raise DegenerateVariance(f"variance below floor: ({var_x:.3e}, {var_y:.3e})")
    return CorrelationReport(float(cov / np.sqrt(var_x * var_y)), float(cov), (float(var_x), float(var_y)))


def classical_correlation(joint: DiscreteJoint) -> CorrelationReport:
    """Pearson correlation ``(E[XY] - E[X]E[Y]) / sqrt(Var X Var Y)``."""
    g, x, y = joint.grid, joint.xvals, joint.yvals
    px = np.asarray(g.sum(axis=1)).ravel()
    py = np.asarray(g.sum(axis=0)).ravel()
    ex, ey = px @ x, py @ y
    # centred moments avoid cancellation when the means are large
    xc, yc = x - ex, y - ey
    cov = float(xc @ (g @ yc))
    return _report(cov, float(px @ xc**2), float(py @ yc**2))


def gridded_function_correlation(f: Callable, g: Callable, n: int, a: float = 0.0, b: float = 1.0) -> CorrelationReport:
    """Correlation of ``f(U)`` and ``g(U)`` for ``U`` uniform on ``[a, b]``.

    Uses the ``n``-point midpoint rule, i.e. ``U`` uniform on the grid
    midpoints.
    """
    u = a + (np.arange(n) + 0.5) * (b - a) / n
    return classical_correlation(DiscreteJoint.from_samples(f(u), g(u)))


def _factor_dims(rho: DensityMatrix):
    if rho.dims is None:
        raise MissingDims("state carries no bipartite (d1, d2) tag")
    return rho.dims


def quantum_correlation_coefficient(rho: DensityMatrix, a, a2) -> CorrelationReport:
    """C_q for ``A = a (x) 1`` and ``A' = 1 (x) a2`` under ``rho``.

    Raises:
        DegenerateVariance: if either observable is sharp in ``rho``.
    """
    d1, d2 = _factor_dims(rho)
    a = as_hermitian(a).matrix
    a2 = as_hermitian(a2).matrix
    if a.shape[0] != d1 or a2.shape[0] != d2:
        raise DimensionMismatch(f"observables of size {a.shape[0]}, {a2.shape[0]} for dims {(d1, d2)}")
    big_a = np.kron(a, np.eye(d2))
    big_b = np.kron(np.eye(d1), a2)
    ea, eb = rho.expect(big_a), rho.expect(big_b)
    ca = big_a - ea * np.eye(d1 * d2)
    cb = big_b - eb * np.eye(d1 * d2)
    # A and A' commute, so <(A-<A>)(A'-<A'>)> is real
    cov = float(np.real(np.trace(rho.matrix @ ca @ cb)))
    return _report(cov, rho.expect(ca @ ca), rho.expect(cb @ cb))


def separable_shadow(ensemble: PureEnsemble) -> DensityMatrix:
    """sum_i w_i Tr_2(P_i) (x) Tr_1(P_i) for the ensemble members ``P_i``."""
    dims = _factor_dims(ensemble.barycenter)
    out = np.zeros((ensemble.barycenter.dim,) * 2, dtype=complex)
    for w, psi in zip(ensemble.weights, ensemble.components):
        p = np.outer(psi, psi.conj())
        out += w * np.kron(ptrace_matrix(p, dims, 1), ptrace_matrix(p, dims, 2))
    return DensityMatrix(out, dims)


def shadow_from_vectors(x: np.ndarray, dims) -> np.ndarray:
    """Separable shadow of unnormalized ensemble rows, as a raw matrix."""
    d1, d2 = dims
    m = x.reshape(-1, d1, d2)
    n = np.einsum("kab,kab->k", m.conj(), m).real
    keep = n > 0
    m, n = m[keep], n[keep]
    r1 = np.einsum("kab,kcb->kac", m, m.conj())
    r2 = np.einsum("kab,kac->kbc", m, m.conj())
    return np.einsum("k,kac,kbd->abcd", 1.0 / n, r1, r2).reshape(d1 * d2, d1 * d2)


def shadow_term(a_matrix: np.ndarray, dims) -> Callable[[np.ndarray], np.ndarray]:
    """Row term ``Tr[(R1 (x) R2) A] / |x|^2`` for unnormalized rows ``x``."""
    d1, d2 = dims
    a4 = a_matrix.reshape(d1, d2, d1, d2)

    def term(x):
        m = x.reshape(-1, d1, d2)
        n = np.einsum("kab,kab->k", m.conj(), m).real
        r1 = np.einsum("kab,kcb->kac", m, m.conj())
        r2 = np.einsum("kab,kac->kbc", m, m.conj())
        num = np.einsum("kac,kbd,cdab->k", r1, r2, a4).real
        return np.where(n > 1e-300, num / np.where(n > 1e-300, n, 1.0), 0.0)

    return term


@dataclass
class DqcResult:
    value: float
    best_shadow: DensityMatrix = field(repr=False)
    best_ensemble: PureEnsemble = field(repr=False)
    restarts_used: int
    converged: bool
    observable_norm: float = 1.0

    @property
    def normalized_value(self) -> float:
        """``value`` for the observable rescaled to unit operator norm."""
        return self.value / self.observable_norm if self.observable_norm > 0 else 0.0


def quantum_correlation_distance(
    rho: DensityMatrix,
    a,
    opts: OptimizerSettings,
    warm_start: PureEnsemble | None = None,
    probe: ProbeFn | None = None,
) -> DqcResult:
    """Best-found ``|Tr(rho A) - Tr(shadow(mu) A)|`` over ensembles ``mu`` of ``rho``.

    Args:
        rho: bipartite state.
        a: Hermitian observable on the composite space.
        opts: search budget and seed.
        warm_start: optional known ensemble, e.g. the defining product-pure
            decomposition of a separable state.
        probe: forwarded to the search; receives every visited ensemble.
    """
    dims = _factor_dims(rho)
    am = as_hermitian(a).matrix
    if am.shape[0] != rho.dim:
        raise DimensionMismatch(f"observable of size {am.shape[0]} for a state of size {rho.dim}")
    # both states have unit trace, so only the traceless part of A matters;
    # dropping the identity part makes d(omega, c 1) vanish exactly
    a0 = am - (np.trace(am).real / rho.dim) * np.eye(rho.dim)
    target = rho.expect(a0)
    res = minimize_over_ensembles(
        rho, shadow_term(a0, dims), lambda s: abs(target - s), opts, warm_start=warm_start, probe=probe
    )
    ens = res.ensemble(rho)
    shadow = separable_shadow(ens)
    value = abs(target - shadow.expect(a0))
    return DqcResult(float(value), shadow, ens, res.restarts_used, res.converged, operator_norm(am))


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Identity plus the ``d**2 - 1`` generalized Gell-Mann matrices."""
    mats = [np.eye(d, dtype=complex)]
    for j, k in itertools.combinations(range(d), 2):
        s = np.zeros((d, d), dtype=complex)
        s[j, k] = s[k, j] = 1.0
        mats.append(s)
        t = np.zeros((d, d), dtype=complex)
        t[j, k], t[k, j] = -1j, 1j
        mats.append(t)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    return mats


def _local_basis(d: int) -> list[np.ndarray]:
    q = d.bit_length() - 1
    if d == 1 << q:
        return [pauli_word("".join(w)) for w in itertools.product("IXYZ", repeat=q)]
    return gell_mann_basis(d)


def pauli_product_family(dims) -> list[np.ndarray]:
    """All products ``B1 (x) B2`` of local Pauli words.

    A factor whose dimension is not a power of two uses the generalized
    Gell-Mann basis instead.
    """
    d1, d2 = dims
    return [np.kron(b1, b2) for b1 in _local_basis(d1) for b2 in _local_basis(d2)]


def quantum_correlation_profile(
    rho: DensityMatrix,
    family: Sequence | None = None,
    opts: OptimizerSettings | None = None,
    warm_start: PureEnsemble | None = None,
) -> list[DqcResult]:
    """One :class:`DqcResult` per observable; default family is
    :func:`pauli_product_family`."""
    dims = _factor_dims(rho)
    if opts is None:
        raise ValueError("OptimizerSettings with an explicit seed are required")
    family = pauli_product_family(dims) if family is None else list(family)
    for a in family:
        if np.asarray(a).shape != (rho.dim, rho.dim):
            raise DimensionMismatch(f"observable of shape {np.asarray(a).shape} for a state of size {rho.dim}")
    return [quantum_correlation_distance(rho, a, opts, warm_start=warm_start) for a in family]


def profile_score(results: Sequence[DqcResult]) -> float:
    """Largest norm-normalized ``d`` over a profile."""
    if not results:
        raise InvalidState("empty profile")
    return max(r.normalized_value for r in results)
