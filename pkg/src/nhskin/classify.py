"""Gauge transformation, spectral class prediction and pseudo-Hermiticity checks.

For an open chain with every product ``t_j * t'_j > 0`` the diagonal gauge
``d_{j+1}/d_j = sqrt(t'_j / t_j)`` maps ``H`` onto a real symmetric matrix,
so the spectrum is real.  With every product negative the same magnitudes
give an anti-Hermitian matrix and a purely imaginary spectrum.  Anything in
between (mixed signs) is generically complex.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .eig import Spectrum, symmetric_tridiagonal_eigen
from .lattice import Boundary, HoppingChain, assemble

__all__ = [
    "NoGaugeError",
    "SpectrumClass",
    "GaugeTransform",
    "Hermitianized",
    "predict_class",
    "numeric_class",
    "gauge",
    "pseudo_hermiticity_residual",
    "hermitianize",
    "gauge_eigenpairs",
]

REAL, IMAGINARY, COMPLEX = "real", "imaginary", "complex"


class NoGaugeError(ValueError):
    def __init__(self, bond: int, reason: str):
        super().__init__(f"no real diagonal gauge at bond {bond}: {reason}")
        self.bond = bond


@dataclass(frozen=True)
class SpectrumClass:
    kind: str
    degenerate: bool
    first_mixed_bond: int | None
    signs: np.ndarray

    def to_dict(self) -> dict:
        return {
            "class": self.kind,
            "degenerate": self.degenerate,
            "first_mixed_bond": self.first_mixed_bond,
        }


def _require_obc(chain: HoppingChain):
    if chain.boundary is not Boundary.OBC:
        raise ValueError("the similarity-transform criterion applies to open chains only")


def _onsite_kind(chain: HoppingChain) -> str:
    if not np.any(chain.onsite):
        return "zero"
    return IMAGINARY if chain.imaginary_onsite else REAL


def _first_negative(signs) -> int:
    """1-based index of the first bond with a negative product."""
    return int(np.flatnonzero(signs < 0)[0]) + 1


def predict_class(chain: HoppingChain) -> SpectrumClass:
    """Real / imaginary / complex from the sign pattern of ``t_j * t'_j``.

    With mixed signs, ``first_mixed_bond`` names the first bond with a
    negative product (the first place the real-spectrum condition fails).
    A zero product splits the matrix into triangular blocks, so the verdict is
    taken over the nonzero products and the result is flagged ``degenerate``.
    """
    _require_obc(chain)
    signs = np.sign(chain.products).astype(int)
    nonzero = np.flatnonzero(signs)
    first_mixed = _first_negative(signs) if len(np.unique(signs[nonzero])) > 1 else None
    onsite = _onsite_kind(chain)
    nz = signs[nonzero]
    if np.all(nz > 0) and onsite in ("zero", REAL):
        kind = REAL
    elif np.all(nz < 0) and onsite in ("zero", IMAGINARY):
        kind = IMAGINARY
    else:
        kind = COMPLEX
    if len(nonzero) == 0 and onsite == IMAGINARY:
        kind = IMAGINARY
    return SpectrumClass(kind, bool(np.any(signs == 0)), first_mixed, signs)


def numeric_class(evals, scale: float = 1.0, rtol: float = 1e-8) -> str:
    """Class of a computed spectrum: |Im E| (or |Re E|) <= rtol * max(1, scale)."""
    evals = np.asarray(evals, dtype=complex)
    thresh = rtol * max(1.0, scale)
    if np.max(np.abs(evals.imag)) <= thresh:
        return REAL
    if np.max(np.abs(evals.real)) <= thresh:
        return IMAGINARY
    return COMPLEX


@dataclass(frozen=True)
class GaugeTransform:
    """Diagonal gauge ``D`` stored as ``log d_j`` (``d_1 = 1``).

    ``sign`` is the common sign of the hopping products: +1 makes
    ``D^-1 H D`` Hermitian, -1 makes it anti-Hermitian.
    """

    log_entries: np.ndarray
    sign: int = 1

    @property
    def entries(self) -> np.ndarray:
        return np.exp(self.log_entries)

    @property
    def metric(self) -> np.ndarray:
        """Diagonal of ``eta = D**2``."""
        return np.exp(2 * self.log_entries)


def gauge(chain: HoppingChain) -> GaugeTransform:
    _require_obc(chain)
    prod = chain.products
    zero = np.flatnonzero(prod == 0)
    if len(zero):
        raise NoGaugeError(int(zero[0]) + 1, "zero hopping product")
    if len(prod) == 0:
        return GaugeTransform(np.zeros(chain.L), 1)
    signs = np.sign(prod).astype(int)
    if len(np.unique(signs)) > 1:
        j = _first_negative(signs)
        k = int(np.flatnonzero(signs > 0)[0]) + 1
        raise NoGaugeError(
            j, f"mixed product signs (bond {j}: {prod[j - 1]:.4g}, bond {k}: {prod[k - 1]:.4g})"
        )
    sign = int(signs[0])
    step = 0.5 * (np.log(np.abs(chain.forward)) - np.log(np.abs(chain.backward)))
    return GaugeTransform(np.concatenate(([0.0], np.cumsum(step))), sign)


def pseudo_hermiticity_residual(M, g: GaugeTransform) -> float:
    """``||eta M^dagger eta^-1 - sign * M||_F / ||M||_F`` with ``eta = D**2``.

    ``sign`` comes from the gauge: for negative hopping products the chain is
    pseudo-anti-Hermitian and the reference is ``-M``.
    """
    M = np.asarray(M)
    if M.shape != (len(g.log_entries),) * 2:
        raise ValueError("gauge and matrix dimensions differ")
    Mt = M.conj().T
    rows, cols = np.nonzero(Mt)
    conj_m = np.zeros_like(M, dtype=complex)
    ld = g.log_entries
    conj_m[rows, cols] = np.exp(2 * (ld[rows] - ld[cols])) * Mt[rows, cols]
    norm = np.linalg.norm(M)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(conj_m - g.sign * M) / norm)


class Hermitianized(NamedTuple):
    """Real symmetric tridiagonal form; the spectrum of H is ``factor * spec``."""

    diag: np.ndarray
    offdiag: np.ndarray
    factor: complex


def hermitianize(chain: HoppingChain) -> Hermitianized:
    g = gauge(chain)
    prod = chain.products
    if g.sign > 0:
        if chain.imaginary_onsite and np.any(chain.onsite):
            raise NoGaugeError(0, "positive products with imaginary onsite terms")
        off = np.sign(chain.backward) * np.sqrt(prod)
        return Hermitianized(chain.onsite.copy(), off, 1.0)
    if np.any(chain.onsite) and not chain.imaginary_onsite:
        raise NoGaugeError(0, "negative products with real onsite terms")
    return Hermitianized(chain.onsite.copy(), np.sqrt(np.abs(prod)), 1j)


def gauge_eigenpairs(chain: HoppingChain) -> Spectrum:
    """Eigenpairs of ``H`` through the gauge fast path.

    Right eigenvectors are ``D S phi`` where ``phi`` are eigenvectors of the
    symmetric form and ``S`` a diagonal of unit-modulus phases (identity for
    positive products).  Built in log space so long chains do not overflow.
    """
    g = gauge(chain)
    h = hermitianize(chain)
    sym = symmetric_tridiagonal_eigen(h.diag, h.offdiag)
    phi = sym.eigenvectors.astype(complex)
    if g.sign < 0:
        # s_{j+1} = s_j * i * sgn(t_j) relates D^-1 H D to i * H_R
        step = 1j * np.sign(chain.backward)
        phase = np.concatenate(([1.0 + 0j], np.cumprod(step)))
        phi = phi * phase[:, None]
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(phi)) + g.log_entries[:, None]
    top = np.max(logmag, axis=0)
    V = np.exp(1j * np.angle(phi)) * np.exp(logmag - top)
    V /= np.linalg.norm(V, axis=0)
    idx = np.argmax(np.abs(V), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    V = V * (np.abs(piv) / piv)
    evals = h.factor * sym.eigenvalues.astype(complex)
    H = assemble(chain)
    res = np.linalg.norm(H @ V - V * evals[None, :], axis=0)
    return Spectrum(evals, V, res)
