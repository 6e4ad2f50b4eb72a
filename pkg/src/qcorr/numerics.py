"""Dense complex Hermitian linear algebra.

Everything here works on plain ``numpy`` arrays; :class:`HermitianOperator`
is a thin immutable wrapper that records how far the input was from being
self-adjoint before it was symmetrized.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import NegativeSpectrum, NonHermitian

logger = logging.getLogger(__name__)

DEFAULT_PSD_FLOOR = 1e-10
HERMITICITY_RTOL = 1e-9


def psd_floor() -> float:
    """Tolerance below zero still accepted as a nonnegative eigenvalue.

    Read from ``QCORR_PSD_FLOOR`` on every call so tests and the CLI can
    override it without reloading the module.
    """
    raw = os.environ.get("QCORR_PSD_FLOOR")
    if raw is None or raw.strip() == "":
        return DEFAULT_PSD_FLOOR
    value = float(raw)
    if not value >= 0:
        raise ValueError(f"QCORR_PSD_FLOOR must be a nonnegative number, got {raw!r}")
    return value


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def hermiticity_defect(m: np.ndarray) -> float:
    """max |M_ij - conj(M_ji)|."""
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


@dataclass(frozen=True)
class HermitianOperator:
    """Self-adjoint matrix, symmetrized on construction.

    ``defect`` keeps the pre-symmetrization value of
    ``max |M_ij - conj(M_ji)|``.
    """

    matrix: np.ndarray
    defect: float = 0.0

    @classmethod
    def from_matrix(cls, m, rtol: float = HERMITICITY_RTOL) -> "HermitianOperator":
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise NonHermitian(f"expected a nonempty square matrix, got shape {m.shape}")
        defect = hermiticity_defect(m)
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        if defect > rtol * max(scale, np.finfo(float).tiny):
            raise NonHermitian(f"hermiticity defect {defect:.3e} exceeds {rtol:.1e} x max|entry| ({scale:.3e})")
        return cls(_frozen(0.5 * (m + m.conj().T)), defect)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


OperatorLike = Union[HermitianOperator, np.ndarray]


def as_hermitian(op) -> HermitianOperator:
    if isinstance(op, HermitianOperator):
        return op
    if hasattr(op, "matrix") and not isinstance(op, np.ndarray):
        # DensityMatrix and friends carry an already-symmetrized matrix
        return HermitianOperator.from_matrix(op.matrix)
    return HermitianOperator.from_matrix(op)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(op: OperatorLike) -> SpectralDecomposition:
    """Eigendecomposition with ascending real eigenvalues.

    Raises:
        NonHermitian: if ``op`` is a raw array that is not self-adjoint
            within tolerance.
    """
    h = as_hermitian(op)
    w, v = np.linalg.eigh(h.matrix)
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


def _apply_to_spectrum(h: HermitianOperator, f) -> HermitianOperator:
    w, v = np.linalg.eigh(h.matrix)
    fw = f(w)
    out = (v * fw) @ v.conj().T
    return HermitianOperator(_frozen(0.5 * (out + out.conj().T)))


def clamp_spectrum(w: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Zero eigenvalues in ``[-floor, 0)``; raise below ``-floor``."""
    floor = psd_floor() if floor is None else floor
    lowest = float(np.min(w))
    if lowest < -floor:
        raise NegativeSpectrum(f"eigenvalue {lowest:.3e} below -psd_floor ({floor:.1e})")
    if lowest < 0:
        logger.debug("clamping eigenvalues down to %.3e to zero", lowest)
    return np.clip(w, 0.0, None)


def matrix_function(op: OperatorLike, kind: str, beta: float = 1.0) -> HermitianOperator:
    """Apply a scalar function to the spectrum of a Hermitian operator.

    ``kind`` is one of ``"sqrt"``, ``"exp"`` or ``"neg_exp"``; the last one
    computes ``exp(-beta * op)``.
    """
    h = as_hermitian(op)
    if kind == "sqrt":
        return _apply_to_spectrum(h, lambda w: np.sqrt(clamp_spectrum(w)))
    if kind == "exp":
        return _apply_to_spectrum(h, np.exp)
    if kind == "neg_exp":
        return _apply_to_spectrum(h, lambda w: np.exp(-beta * w))
    raise ValueError(f"unknown matrix function {kind!r}")


def kron(a, b) -> np.ndarray:
    """Kronecker product; the first factor is the slow index."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(*factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, np.asarray(f))
    return out


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"trace norm needs a square matrix, got shape {m.shape}")
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def operator_norm(m) -> float:
    m = np.asarray(m)
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _p in PAULI.values():
    _p.setflags(write=False)


def pauli_word(word: str) -> np.ndarray:
    """Tensor product of Pauli matrices, e.g. ``"XZ"`` -> X (x) Z."""
    word = word.upper()
    try:
        return kron_all(*(PAULI[c] for c in word))
    except KeyError as exc:
        raise ValueError(f"bad Pauli word {word!r}") from exc
