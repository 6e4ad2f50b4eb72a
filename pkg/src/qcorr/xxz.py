"""Jump-type dynamics of the open XXZ spin-1/2 chain and entanglement
production along it.

Sites are ``0 .. sites-1``; site 0 is the slowest tensor index.  The
generator is ``L = E - id`` with ``E(A) = tau(g^* A g)``, where
``tau = (id + psi)/2`` averages over the exchange ``psi`` of two sites and
``g = rho^(1/2) (tau rho)^(1/2)`` is built from the Gibbs state ``rho``.
States evolve under the dual ``E^d(s) = g tau(s) g^*``.

``E`` is not unital in general (``E(1) = tau(g^* g)``), so ``E^d`` does not
preserve the trace.  Evolutions therefore renormalize by default and record
the trace drift they removed.

Superoperators act on row-major vectorized matrices:
``vec(A X B) = (A (x) B^T) vec(X)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .bipartite import DensityMatrix, PureEnsemble
from .entanglement import EntropyFunctional, eof, m_a
from .ensemble_search import OptimizerSettings
from .errors import BadPair, DimensionCap, DimensionMismatch, StepTooLarge
from .numerics import PAULI, HermitianOperator, clamp_spectrum, kron_all

logger = logging.getLogger(__name__)

MAX_SITES = 6


@dataclass(frozen=True)
class ChainConfig:
    """Chain length, temperature, anisotropy, exchanged pair and bipartition.

    ``cut`` puts sites ``0 .. cut-1`` in the first subsystem; it defaults to
    ``ceil(sites / 2)``.
    """

    sites: int = 5
    beta: float = 1.0
    delta: float = 0.5
    swap_pair: tuple[int, int] = (1, 3)
    cut: int | None = None

    def __post_init__(self):
        if self.sites < 2:
            raise DimensionCap("the chain needs at least 2 sites")
        if self.sites > MAX_SITES:
            raise DimensionCap(f"2**{self.sites} exceeds the 2**{MAX_SITES} dimension cap")
        if not self.beta >= 0 or not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        k, l = (int(v) for v in self.swap_pair)
        if not 0 <= k < l < self.sites:
            raise BadPair(f"swap pair {self.swap_pair} needs 0 <= k < l < {self.sites}")
        object.__setattr__(self, "swap_pair", (k, l))
        cut = math.ceil(self.sites / 2) if self.cut is None else int(self.cut)
        if not 0 < cut < self.sites:
            raise ValueError(f"cut {cut} must be strictly inside 1..{self.sites - 1}")
        object.__setattr__(self, "cut", cut)

    @property
    def dim(self) -> int:
        return 2**self.sites

    @property
    def dims(self) -> tuple[int, int]:
        return (2**self.cut, 2 ** (self.sites - self.cut))


def _site_op(op, site: int, sites: int) -> np.ndarray:
    return kron_all(*(op if n == site else PAULI["I"] for n in range(sites)))


def xxz_hamiltonian(cfg: ChainConfig) -> HermitianOperator:
    """``H = -sum_n (X_{n-1} X_n + Y_{n-1} Y_n + delta Z_{n-1} Z_n)``, open ends."""
    h = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for n in range(1, cfg.sites):
        for name, coeff in (("X", 1.0), ("Y", 1.0), ("Z", cfg.delta)):
            h -= coeff * _site_op(PAULI[name], n - 1, cfg.sites) @ _site_op(PAULI[name], n, cfg.sites)
    return HermitianOperator.from_matrix(h)


def total_magnetization(sites: int) -> np.ndarray:
    return sum(_site_op(PAULI["Z"], n, sites) for n in range(sites))


def gibbs_state(h, beta: float, dims: tuple[int, int] | None = None) -> DensityMatrix:
    """``exp(-beta H) / Tr exp(-beta H)``, via a shifted spectrum."""
    m = np.asarray(h.matrix if isinstance(h, HermitianOperator) else h, dtype=complex)
    if beta == 0:
        return DensityMatrix(np.eye(m.shape[0]) / m.shape[0], dims)
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    p = np.exp(-beta * (w - w[0]))
    p /= p.sum()
    return DensityMatrix((v * p) @ v.conj().T, dims)


@dataclass(frozen=True)
class SuperOperator:
    action: np.ndarray = field(repr=False)
    dim: int
    meta: str

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return (self.action @ x.reshape(-1)).reshape(self.dim, self.dim)

    def compose(self, other: "SuperOperator", meta: str) -> "SuperOperator":
        return SuperOperator(self.action @ other.action, self.dim, meta)


def _left_right(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Action of ``X -> a X b``."""
    return np.kron(a, b.T)


def swap_unitary(sites: int, k: int, l: int) -> np.ndarray:
    """Permutation matrix exchanging tensor slots ``k`` and ``l``."""
    dim = 2**sites
    idx = np.arange(dim)
    bits = (idx[:, None] >> (sites - 1 - np.arange(sites))) & 1
    bits[:, [k, l]] = bits[:, [l, k]]
    target = (bits << (sites - 1 - np.arange(sites))).sum(axis=1)
    s = np.zeros((dim, dim))
    s[target, idx] = 1.0
    return s


def swap_superop(cfg: ChainConfig) -> SuperOperator:
    """``psi(A) = S A S`` with ``S`` exchanging the sites of ``cfg.swap_pair``."""
    k, l = cfg.swap_pair
    if not 0 <= k < l < cfg.sites:
        raise BadPair(f"bad swap pair {cfg.swap_pair}")
    s = swap_unitary(cfg.sites, k, l)
    return SuperOperator(_left_right(s, s), cfg.dim, "psi_swap")


def tau_superop(cfg: ChainConfig) -> SuperOperator:
    psi = swap_superop(cfg)
    return SuperOperator(0.5 * (np.eye(cfg.dim**2) + psi.action), cfg.dim, "tau")


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(clamp_spectrum(w))) @ v.conj().T


def gamma_operator(rho_gibbs: DensityMatrix, tau: SuperOperator) -> np.ndarray:
    """``rho^(1/2) (tau rho)^(1/2)``; generally not Hermitian."""
    if tau.dim != rho_gibbs.dim:
        raise DimensionMismatch(f"tau acts on dimension {tau.dim}, state has {rho_gibbs.dim}")
    return _psd_sqrt(rho_gibbs.matrix) @ _psd_sqrt(tau(rho_gibbs.matrix))


@dataclass(frozen=True)
class JumpMaps:
    E: SuperOperator
    Ed: SuperOperator
    L: SuperOperator
    Ld: SuperOperator
    gamma: np.ndarray = field(repr=False)
    gibbs: DensityMatrix = field(repr=False)
    _steps: dict = field(default_factory=dict, repr=False, compare=False)

    def __iter__(self):
        return iter((self.E, self.Ed, self.L, self.Ld))

    def step_map(self, h: float, mode: str) -> np.ndarray:
        """One-step action on vectorized states; cached per ``(h, mode)``."""
        key = (float(h), mode)
        if key not in self._steps:
            if mode == "exact":
                self._steps[key] = scipy.linalg.expm(h * self.Ld.action)
            else:
                self._steps[key] = (1.0 - h) * np.eye(self.Ed.action.shape[0]) + h * self.Ed.action
        return self._steps[key]


def jump_maps(cfg: ChainConfig) -> JumpMaps:
    """``E``, its dual ``E^d``, and the generators ``L = E - id``, ``L^d = E^d - id``."""
    rho = gibbs_state(xxz_hamiltonian(cfg), cfg.beta, cfg.dims)
    tau = tau_superop(cfg)
    g = gamma_operator(rho, tau)
    e = tau.action @ _left_right(g.conj().T, g)
    ed = _left_right(g, g.conj().T) @ tau.action
    eye = np.eye(cfg.dim**2)
    return JumpMaps(
        SuperOperator(e, cfg.dim, "heisenberg_E"),
        SuperOperator(ed, cfg.dim, "dual_Ed"),
        SuperOperator(e - eye, cfg.dim, "generator_L"),
        SuperOperator(ed - eye, cfg.dim, "dual_generator"),
        g,
        rho,
    )


def propagate(ld: SuperOperator, sigma, t: float) -> np.ndarray:
    """Raw (unrenormalized) ``exp(t L^d) sigma``."""
    return SuperOperator(scipy.linalg.expm(t * ld.action), ld.dim, "propagator")(np.asarray(sigma))


@dataclass
class ProductionSeries:
    times: np.ndarray
    ea_values: np.ndarray
    ma_values: np.ndarray
    trace_drift: np.ndarray
    mode: str
    states: list = field(default_factory=list, repr=False)

    def to_csv(self) -> str:
        from .qmat import format_real

        rows = ["t,ea,ma,trace_drift"]
        for t, ea, ma, dr in zip(self.times, self.ea_values, self.ma_values, self.trace_drift):
            rows.append(",".join(format_real(v) for v in (t, ea, ma, dr)))
        return "\n".join(rows) + "\n"


MODES = {"exact": "exact-semigroup", "euler": "euler-first-order"}


def product_basis_state(bits: str | Sequence[int], dims: tuple[int, int] | None = None) -> DensityMatrix:
    """Computational basis state ``|b_0 b_1 ...>`` (pure and fully product)."""
    bits = [int(b) for b in bits]
    idx = int("".join(map(str, bits)), 2)
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[idx] = 1.0
    return DensityMatrix.from_vector(psi, dims)


DEFAULT_INITIAL = "01000"


def default_initial_state(cfg: ChainConfig) -> DensityMatrix:
    """One flipped spin at site 1 on an all-up chain (``|0100...>``)."""
    bits = ["0"] * cfg.sites
    bits[1] = "1"
    return product_basis_state("".join(bits), cfg.dims)


def evolve(
    cfg: ChainConfig,
    sigma0: DensityMatrix,
    tmax: float,
    steps: int,
    mode: str = "exact",
    renormalize: bool = True,
    maps: JumpMaps | None = None,
) -> ProductionSeries:
    """Sample ``sigma_t`` on ``steps + 1`` equally spaced times in ``[0, tmax]``.

    ``mode="exact"`` applies ``exp(h L^d)`` per step; ``mode="euler"`` applies
    the first-order map ``s -> (1 - h) s + h E^d(s)``.  With ``renormalize``
    the state is rescaled to unit trace after each step; ``trace_drift``
    holds ``|Tr s - 1|`` just before that rescaling (cumulative when not
    renormalizing).

    Raises:
        StepTooLarge: euler mode with ``h >= 1``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {sorted(MODES)}, got {mode!r}")
    if steps < 1 or not tmax > 0:
        raise ValueError("steps >= 1 and tmax > 0 required")
    if sigma0.dim != cfg.dim:
        raise DimensionMismatch(f"initial state has dimension {sigma0.dim}, chain needs {cfg.dim}")
    h = tmax / steps
    if mode == "euler" and h >= 1:
        raise StepTooLarge(f"euler step h = {h} must be < 1")
    maps = maps or jump_maps(cfg)
    step = maps.step_map(h, mode)
    dims = cfg.dims
    s0 = sigma0.with_dims(dims)
    ma0 = m_a(s0)
    vec = s0.matrix.reshape(-1).copy()
    times, ma, drift, states = [0.0], [ma0], [0.0], [s0.matrix.copy()]
    for n in range(1, steps + 1):
        vec = step @ vec
        mat = vec.reshape(cfg.dim, cfg.dim)
        tr = float(np.trace(mat).real)
        drift.append(abs(tr - 1.0))
        if renormalize:
            vec = vec / tr
            mat = vec.reshape(cfg.dim, cfg.dim)
        mat = 0.5 * (mat + mat.conj().T)
        states.append(mat.copy())
        ma.append(_m_a_raw(mat / np.trace(mat).real, dims))
        times.append(n * h)
    ma = np.array(ma)
    return ProductionSeries(np.array(times), ma - ma0, ma, np.array(drift), MODES[mode], states)


def _m_a_raw(m: np.ndarray, dims) -> float:
    d1, d2 = dims
    red = np.einsum("iaib->ab", m.reshape(d1, d2, d1, d2))
    return float(np.real(np.trace(red) - np.vdot(red, red)))


@dataclass(frozen=True)
class Schedule:
    """Time grid and optional EoF sampling for :func:`production_experiment`."""

    tmax: float = 0.1
    steps: int = 100
    mode: str = "exact"
    renormalize: bool = True
    t_star: float = 0.01
    eof_every: int = 0
    eof_settings: OptimizerSettings | None = None


@dataclass
class EofCheck:
    t: float
    production: float
    production_bound: float
    formation: float
    ma: float

    @property
    def holds(self) -> bool:
        return self.formation <= self.ma + 1e-10 and self.production <= self.production_bound + 1e-6


@dataclass
class ProductionSummary:
    sites: int
    beta: float
    delta: float
    swap_pair: tuple[int, int]
    cut: int
    mode: str
    first_time: float
    first_slope: float
    slope_sign: int
    t_star: float
    ea_at_t_star: float
    max_trace_drift: float
    eof_checks: list = field(default_factory=list)

    @property
    def inequalities_hold(self) -> bool:
        return all(c.holds for c in self.eof_checks)


def production_experiment(
    cfg: ChainConfig,
    sigma0: DensityMatrix | None = None,
    schedule: Schedule | None = None,
    maps: JumpMaps | None = None,
) -> tuple[ProductionSeries, ProductionSummary]:
    """Run :func:`evolve` and summarize entanglement production.

    ``E_a(t) = M^a(sigma_t) - M^a(sigma_0)``.  When ``schedule.eof_every``
    is positive and ``sigma_0`` is pure, every ``eof_every``-th sample also
    gets the linear-entropy EoF ``M(sigma_t)`` and the checks
    ``M <= M^a`` and ``M(sigma_t) - M(sigma_0) <= E_a(t)``.
    """
    schedule = schedule or Schedule()
    sigma0 = default_initial_state(cfg) if sigma0 is None else sigma0
    series = evolve(cfg, sigma0, schedule.tmax, schedule.steps, schedule.mode, schedule.renormalize, maps)
    t1 = float(series.times[1])
    slope = float(series.ea_values[1] / t1)
    istar = int(np.argmin(np.abs(series.times - schedule.t_star)))
    checks = []
    if schedule.eof_every > 0:
        opts = schedule.eof_settings or OptimizerSettings(seed=0, restarts=2, max_iter=50)
        dims = cfg.dims
        pure = sigma0.purity > 1 - 1e-10
        m0 = m_a(sigma0.with_dims(dims)) if pure else float("nan")
        for i in range(schedule.eof_every, series.times.size, schedule.eof_every):
            st = DensityMatrix.from_unnormalized(series.states[i], dims)
            form = eof(st, EntropyFunctional.LINEAR, opts).value
            checks.append(EofCheck(float(series.times[i]), form - m0, float(series.ea_values[i]), form, m_a(st)))
    summary = ProductionSummary(
        cfg.sites, cfg.beta, cfg.delta, cfg.swap_pair, cfg.cut, series.mode,
        t1, slope, int(np.sign(slope)), float(series.times[istar]), float(series.ea_values[istar]),
        float(np.max(series.trace_drift)), checks,
    )
    return series, summary
