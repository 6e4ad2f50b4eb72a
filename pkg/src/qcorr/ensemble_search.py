"""Minimization over finite pure-state ensembles of a fixed density matrix.

An ensemble of ``rho`` with ``m`` members is a matrix ``X`` (``m x D``) of
unnormalized rows with ``sum_i |x_i><x_i| = rho``.  All such matrices are
``U X0`` for unitary ``U``, so the search moves by Givens rotations of row
pairs, which keeps the barycenter fixed exactly.

Objectives must be *row-additive*: ``outer(sum_i term(x_i))``.  A rotation
touching rows ``i`` and ``k`` then only needs two fresh term evaluations.
Both d(omega, A) and the entanglement of formation have this form.

Search schedule: an optional warm start, the spectral ensemble, then
``restarts`` seeded random isometries (QR of a complex Gaussian matrix).
Each start is refined by coordinate line searches over rotation angles
until a sweep improves the value by a relative amount below ``tol``.  Restart ``k`` depends only on
``(seed, k)``, and the result is the minimum over restarts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .bipartite import DensityMatrix, PureEnsemble, support
from .numerics import trace_norm

TermFn = Callable[[np.ndarray], np.ndarray]
OuterFn = Callable[[float], float]
ProbeFn = Callable[[np.ndarray], None]


@dataclass(frozen=True)
class OptimizerSettings:
    """Budget and reproducibility knobs for the ensemble search.

    ``max_size`` defaults to ``r**2`` for a rank-``r`` state.  ``max_iter``
    caps the number of full rotation sweeps per restart.  The search stops
    early once the objective is within ``atol`` of zero, its global lower
    bound for every objective used here.
    """

    seed: int
    restarts: int = 64
    max_size: Optional[int] = None
    max_iter: int = 2000
    tol: float = 1e-10
    atol: float = 1e-13
    grid: int = 8

    def __post_init__(self):
        if self.restarts < 0 or self.max_iter < 1 or self.grid < 2:
            raise ValueError("restarts >= 0, max_iter >= 1 and grid >= 2 required")
        if self.max_size is not None and self.max_size < 1:
            raise ValueError("max_size must be positive")


@dataclass
class SearchResult:
    value: float
    vectors: np.ndarray
    restarts_used: int
    converged: bool
    evaluations: int = 0

    def ensemble(self, rho: DensityMatrix) -> PureEnsemble:
        return PureEnsemble.from_unnormalized(self.vectors, rho)


def random_isometry(rng: np.random.Generator, m: int, r: int) -> np.ndarray:
    g = rng.standard_normal((m, r)) + 1j * rng.standard_normal((m, r))
    q, rr = np.linalg.qr(g)
    phases = np.diag(rr) / np.abs(np.diag(rr))
    return q * phases


def size_schedule(k: int, r: int, m_max: int) -> int:
    """Ensemble size used by restart ``k``: cycles through ``r .. m_max``."""
    m_max = max(m_max, r)
    return r + (k % (m_max - r + 1))


class _Search:
    def __init__(self, term: TermFn, outer: OuterFn, settings: OptimizerSettings, probe: ProbeFn | None):
        self.term = term
        self.outer = outer
        self.settings = settings
        self.probe = probe
        self.evaluations = 0
        angles = np.linspace(-np.pi / 2, np.pi / 2, settings.grid, endpoint=False)
        self.angles = angles + (angles[1] - angles[0]) / 2

    def terms(self, x: np.ndarray) -> np.ndarray:
        self.evaluations += x.shape[0]
        return np.asarray(self.term(x), dtype=float)

    def _emit(self, x):
        if self.probe is not None:
            self.probe(x.copy())

    def refine(self, x: np.ndarray) -> tuple[float, np.ndarray, bool]:
        s = self.settings
        t = self.terms(x)
        total = float(t.sum())
        value = self.outer(total)
        self._emit(x)
        m = x.shape[0]
        if m < 2 or value <= s.atol:
            return value, x, True
        for _ in range(s.max_iter):
            start = value
            for i in range(m - 1):
                for k in range(i + 1, m):
                    for phase in (1.0, 1j):
                        improved = self._line_search(x, t, i, k, phase, total - t[i] - t[k], value)
                        if improved is not None:
                            value, xi, xk, ti, tk = improved
                            x[i], x[k] = xi, xk
                            t[i], t[k] = ti, tk
                            total = float(t.sum())
                            self._emit(x)
                            if value <= s.atol:
                                return value, x, True
            if start - value <= s.tol * max(abs(start), 1e-300):
                return value, x, True
        return value, x, False

    def _rotated(self, xi, xk, theta, phase):
        c = np.cos(theta)[:, None]
        sn = np.sin(theta)[:, None]
        return c * xi - phase * sn * xk, np.conj(phase) * sn * xi + c * xk

    def _line_search(self, x, t, i, k, phase, rest, current):
        xi, xk = x[i], x[k]

        def batch(thetas):
            a, b = self._rotated(xi, xk, np.atleast_1d(thetas), phase)
            tt = self.terms(np.concatenate([a, b]))
            n = a.shape[0]
            vals = np.array([self.outer(rest + tt[j] + tt[n + j]) for j in range(n)])
            return vals, a, b, tt[:n], tt[n:]

        vals, *_ = batch(self.angles)
        j = int(np.argmin(vals))
        center = self.angles[j] if vals[j] < current else 0.0
        half = (self.angles[1] - self.angles[0])
        res = minimize_scalar(
            lambda th: batch(th)[0][0],
            bounds=(center - half, center + half),
            method="bounded",
            options={"xatol": 1e-9},
        )
        cands = [(float(res.fun), float(res.x)), (float(vals[j]), float(self.angles[j]))]
        best_val, best_theta = min(cands)
        if not best_val < current:
            return None
        val, a, b, ta, tb = batch(best_theta)
        return float(val[0]), a[0], b[0], float(ta[0]), float(tb[0])


def minimize_over_ensembles(
    rho: DensityMatrix,
    term: TermFn,
    outer: OuterFn | None = None,
    settings: OptimizerSettings | None = None,
    warm_start: PureEnsemble | None = None,
    probe: ProbeFn | None = None,
) -> SearchResult:
    """Minimize ``outer(sum_i term(x_i))`` over ensembles ``X`` of ``rho``.

    For rank-one ``rho`` with the default size cap the only ensemble is the
    state itself and no restarts are run.

    Args:
        rho: the barycenter.
        term: maps a batch of unnormalized vectors ``(k, D)`` to ``(k,)``
            real contributions; must return 0 for zero rows.
        outer: scalar post-processing of the summed terms (identity if
            omitted).  Must be nonnegative for the ``atol`` early exit to be
            meaningful.
        settings: search budget; ``seed`` is mandatory.
        warm_start: an ensemble of ``rho`` evaluated (and refined) before
            the random restarts.
        probe: called with a copy of ``X`` at every accepted move.
    """
    if settings is None:
        raise ValueError("OptimizerSettings with an explicit seed are required")
    outer = outer or (lambda s: s)
    search = _Search(term, outer, settings, probe)
    lam, vecs = support(rho)
    r = lam.size
    root = (vecs * np.sqrt(lam)).T  # r x D, rows sqrt(lambda_j) v_j^T
    m_max = settings.max_size if settings.max_size is not None else r * r

    best: tuple[float, np.ndarray, bool] | None = None

    def consider(cand):
        nonlocal best
        if best is None or cand[0] < best[0]:
            best = cand

    if warm_start is not None:
        if warm_start.barycenter.dim != rho.dim:
            raise ValueError("warm start lives in a different dimension")
        gap = trace_norm(warm_start.mixture() - rho.matrix)
        if gap > 1e-8:
            raise ValueError(f"warm start is not an ensemble of rho (trace-norm gap {gap:.2e})")
        consider(search.refine(warm_start.unnormalized().astype(complex)))

    # the spectral ensemble is always a candidate, so adding restarts can
    # only lower the result
    if best is None or best[0] > settings.atol:
        consider(search.refine(root.astype(complex)))
    used = 0
    if m_max > 1:
        for k in range(settings.restarts):
            if best[0] <= settings.atol:
                break
            rng = np.random.default_rng([settings.seed, k])
            m = size_schedule(k, r, m_max)
            x = random_isometry(rng, m, r) @ root
            consider(search.refine(x))
            used += 1
    value, x, converged = best
    return SearchResult(float(value), x, used, bool(converged), search.evaluations)
