"""Entanglement of formation, the decomposition-free bound M^a, and the two
PPT tests: direct partial transpose, and positivity of the entanglement
mapping's Choi matrices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .bipartite import DensityMatrix, PureEnsemble, ptrace_matrix, ptranspose_matrix
from .ensemble_search import OptimizerSettings, ProbeFn, minimize_over_ensembles
from .errors import MissingDims
from .numerics import psd_floor


class EntropyFunctional(enum.Enum):
    VON_NEUMANN = "von-neumann"
    LINEAR = "linear"

    @classmethod
    def parse(cls, value) -> "EntropyFunctional":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower().replace("_", "-"))


def entropy_of_spectrum(p: np.ndarray, f: EntropyFunctional) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    if f is EntropyFunctional.LINEAR:
        return float(1.0 - np.sum(p * p))
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def entropy(rho: DensityMatrix, f=EntropyFunctional.VON_NEUMANN) -> float:
    """Von Neumann entropy (nats) or linear entropy ``1 - Tr rho^2``."""
    f = EntropyFunctional.parse(f)
    if f is EntropyFunctional.LINEAR:
        return max(0.0, 1.0 - rho.purity)
    return max(0.0, entropy_of_spectrum(np.linalg.eigvalsh(rho.matrix), f))


def _dims(rho: DensityMatrix):
    if rho.dims is None:
        raise MissingDims("state carries no bipartite (d1, d2) tag")
    return rho.dims


def m_a(sigma: DensityMatrix) -> float:
    """``Tr_2[(Tr_1 sigma) - (Tr_1 sigma)^2]``: linear entropy of the second
    reduction, with no infimum over decompositions."""
    red = ptrace_matrix(sigma.matrix, _dims(sigma), 2)
    return max(0.0, float(np.real(np.trace(red) - np.vdot(red, red))))


def formation_term(dims, f: EntropyFunctional):
    """Row term ``|x|^2 F(Tr_2 |x><x| / |x|^2)``."""
    d1, d2 = dims

    def linear(x):
        m = x.reshape(-1, d1, d2)
        r = np.einsum("kab,kcb->kac", m, m.conj()) if d1 <= d2 else np.einsum("kab,kac->kbc", m, m.conj())
        n = np.einsum("kaa->k", r).real
        sq = np.einsum("kab,kab->k", r.conj(), r).real
        return np.where(n > 1e-300, n - sq / np.where(n > 1e-300, n, 1.0), 0.0)

    def von_neumann(x):
        m = x.reshape(-1, d1, d2)
        s2 = np.linalg.svd(m, compute_uv=False) ** 2
        n = s2.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            plogp = np.where(s2 > 0, s2 * np.log(np.where(s2 > 0, s2, 1.0)), 0.0)
            out = n * np.log(np.where(n > 0, n, 1.0)) - plogp.sum(axis=1)
        return np.clip(out, 0.0, None)

    return linear if f is EntropyFunctional.LINEAR else von_neumann


@dataclass
class EofResult:
    value: float
    best_ensemble: PureEnsemble = field(repr=False)
    restarts_used: int
    converged: bool


def ensemble_formation_value(ensemble: PureEnsemble, f=EntropyFunctional.LINEAR) -> float:
    """sum_i w_i F(Tr_2 P_i) for a given ensemble."""
    f = EntropyFunctional.parse(f)
    dims = _dims(ensemble.barycenter)
    total = 0.0
    for w, psi in zip(ensemble.weights, ensemble.components):
        red = ptrace_matrix(np.outer(psi, psi.conj()), dims, 1)
        total += w * entropy_of_spectrum(np.linalg.eigvalsh(0.5 * (red + red.conj().T)), f)
    return float(total)


def eof(
    rho: DensityMatrix,
    f=EntropyFunctional.LINEAR,
    opts: OptimizerSettings | None = None,
    warm_start: PureEnsemble | None = None,
    probe: ProbeFn | None = None,
) -> EofResult:
    """Entanglement of formation: best-found average entropy of the first
    reductions over pure-state ensembles of ``rho``.

    The result is an upper bound on the true infimum; it is exact for pure
    states, and reaches zero for separable states when their product-pure
    decomposition is passed as ``warm_start``.
    """
    f = EntropyFunctional.parse(f)
    dims = _dims(rho)
    if opts is None:
        raise ValueError("OptimizerSettings with an explicit seed are required")
    res = minimize_over_ensembles(rho, formation_term(dims, f), None, opts, warm_start=warm_start, probe=probe)
    ens = res.ensemble(rho)
    return EofResult(ensemble_formation_value(ens, f), ens, res.restarts_used, res.converged)


def product_warm_start(rho: DensityMatrix, tol: float = 1e-10) -> PureEnsemble | None:
    """Product-pure ensemble of ``rho`` if it equals the product of its
    reductions, else ``None``."""
    dims = _dims(rho)
    r1 = DensityMatrix(ptrace_matrix(rho.matrix, dims, 1))
    r2 = DensityMatrix(ptrace_matrix(rho.matrix, dims, 2))
    if np.max(np.abs(np.kron(r1.matrix, r2.matrix) - rho.matrix)) > tol:
        return None
    w1, v1 = np.linalg.eigh(r1.matrix)
    w2, v2 = np.linalg.eigh(r2.matrix)
    weights, comps = [], []
    for i in range(w1.size):
        for j in range(w2.size):
            w = w1[i] * w2[j]
            if w > 1e-14:
                weights.append(w)
                comps.append(np.kron(v1[:, i], v2[:, j]))
    weights = np.array(weights)
    return PureEnsemble(weights / weights.sum(), np.array(comps), rho)


@dataclass(frozen=True)
class PptVerdict:
    """Outcome of a PPT test.

    Fields a given test does not compute are ``nan``: :func:`ppt_direct`
    fills only ``min_pt_eigenvalue``; :func:`cp_cocp_verdict` fills the two
    Choi minima and reports the partial-transpose side as
    ``min_pt_eigenvalue``.
    """

    is_ppt: bool
    min_pt_eigenvalue: float
    choi_cp_min: float = float("nan")
    choi_cocp_min: float = float("nan")


def ppt_direct(rho: DensityMatrix) -> PptVerdict:
    lowest = float(np.linalg.eigvalsh(ptranspose_matrix(rho.matrix, _dims(rho)))[0])
    return PptVerdict(lowest >= -psd_floor(), lowest)


@dataclass(frozen=True)
class EntanglementMap:
    """Linear map ``B -> phi(B)`` from operators on factor 2 to operators on
    factor 1, with ``Tr[rho (A (x) B)] = Tr_1[A phi(B)]``.

    ``action`` is ``(d1**2, d2**2)`` and acts on row-major vectorized
    operators.
    """

    dims: tuple[int, int]
    action: np.ndarray = field(repr=False)

    def __call__(self, b) -> np.ndarray:
        d1, d2 = self.dims
        return (self.action @ np.asarray(b, dtype=complex).reshape(d2 * d2)).reshape(d1, d1)


def entanglement_mapping(rho: DensityMatrix) -> EntanglementMap:
    """Solve the duality ``omega(A (x) B) = Tr_1[A phi(B)]`` on matrix units.

    With ``A = E_ij`` the right side is ``phi(B)[j, i]``, so each entry of
    ``phi(E_kl)`` is one expectation value of ``rho``.
    """
    d1, d2 = _dims(rho)
    action = np.zeros((d1 * d1, d2 * d2), dtype=complex)
    e1 = np.eye(d1)
    e2 = np.eye(d2)
    for k in range(d2):
        for l in range(d2):
            ekl = np.outer(e2[k], e2[l])
            phi = np.empty((d1, d1), dtype=complex)
            for i in range(d1):
                for j in range(d1):
                    unit = np.kron(np.outer(e1[i], e1[j]), ekl)
                    phi[j, i] = np.einsum("ab,ba->", rho.matrix, unit)
            action[:, k * d2 + l] = phi.reshape(-1)
    return EntanglementMap((d1, d2), action)


def choi_matrices(phi: EntanglementMap) -> tuple[np.ndarray, np.ndarray]:
    """``C = sum_kl E_kl (x) phi(E_kl)`` and its partial transpose on the
    first (input) factor."""
    d1, d2 = phi.dims
    c = np.zeros((d2 * d1, d2 * d1), dtype=complex)
    co = np.zeros_like(c)
    for k in range(d2):
        for l in range(d2):
            image = phi.action[:, k * d2 + l].reshape(d1, d1)
            c[k * d1:(k + 1) * d1, l * d1:(l + 1) * d1] = image
            co[l * d1:(l + 1) * d1, k * d1:(k + 1) * d1] = image
    return c, co


def cp_cocp_verdict(phi: EntanglementMap) -> PptVerdict:
    """PPT iff the entanglement mapping is both CP and co-CP."""
    c, co = choi_matrices(phi)
    cp_min = float(np.linalg.eigvalsh(0.5 * (c + c.conj().T))[0])
    cocp_min = float(np.linalg.eigvalsh(0.5 * (co + co.conj().T))[0])
    floor = psd_floor()
    # with the computational-basis transpose convention the CP side carries
    # the partial-transpose spectrum; the co-CP side carries that of rho
    return PptVerdict(cp_min >= -floor and cocp_min >= -floor, cp_min, cp_min, cocp_min)
