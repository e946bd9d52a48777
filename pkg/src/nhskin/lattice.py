"""Hamiltonian construction for 1D nonreciprocal nearest-neighbour lattices.

Conventions
-----------
Sites and bonds are numbered from 1.  Bond ``j`` couples site ``j`` to site
``j + 1``; its *backward* amplitude ``t_j`` sits at matrix entry ``(j, j+1)``
(upper diagonal) and its *forward* amplitude ``t'_j`` at ``(j+1, j)``.

Nonreciprocity is added only on the mosaic bonds ``j = s * kappa``
(s = 1, 2, ...): backward becomes ``base + gamma``, forward ``base - gamma``.
Getting the 1-based indexing wrong shifts the mosaic pattern by one bond and
silently flips phase diagrams, hence the explicit ``bond_indices`` helpers.

With ``gamma > 0`` and positive hopping the bulk states pile up at the LEFT
end of an open chain.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
import warnings
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

__all__ = [
    "Family",
    "Boundary",
    "ModelSpec",
    "HoppingChain",
    "CommensurabilityError",
    "build_chain",
    "assemble",
    "cell_hoppings",
    "bloch_matrix",
    "bloch_stack",
    "mosaic_bonds",
]


class CommensurabilityError(ValueError):
    """Lattice size incompatible with the mosaic period and unit cell."""


class Family(str, enum.Enum):
    HN = "hn"
    MOSAIC_DIMER = "mosaic_dimer"
    MOSAIC_TRIMER = "mosaic_trimer"
    MOSAIC_AAH = "mosaic_aah"


class Boundary(str, enum.Enum):
    OBC = "obc"
    PBC = "pbc"


# JSON key -> dataclass attribute
_PARAM_KEYS = {"t": "t", "gamma": "gamma", "u": "u", "v": "v", "w": "w", "lambda": "lam"}
_FAMILY_PARAMS = {
    Family.HN: ("t", "gamma"),
    Family.MOSAIC_DIMER: ("u", "v", "gamma"),
    Family.MOSAIC_TRIMER: ("u", "v", "w", "gamma"),
    Family.MOSAIC_AAH: ("t", "lambda", "gamma"),
}


def _parse_alpha(value: Any) -> tuple[int, int]:
    if isinstance(value, str):
        p, _, q = value.partition("/")
        p, q = int(p), int(q or 1)
    else:
        p, q = (int(x) for x in value)
    return p, q


@dataclass(frozen=True)
class ModelSpec:
    """A named lattice family with its parameters, size and boundary condition.

    ``L`` is always the number of sites.  For the dimer and trimer families it
    must equal ``2 * cells`` and ``3 * cells`` respectively.
    """

    family: Family
    gamma: float = 0.0
    t: float = 1.0
    u: float = 1.0
    v: float = 1.0
    w: float = 1.0
    lam: float = 0.0
    alpha: tuple[int, int] = (1, 4)
    kappa: int = 1
    L: int = 100
    boundary: Boundary = Boundary.OBC

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "alpha", _parse_alpha(self.alpha))
        for name in ("gamma", "t", "u", "v", "w", "lam"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise ValueError(f"mosaic period kappa must be a positive integer, got {self.kappa}")
        object.__setattr__(self, "kappa", int(self.kappa))
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"lattice needs at least 2 sites, got L={self.L}")
        object.__setattr__(self, "L", int(self.L))

        p, q = self.alpha
        if self.family is Family.MOSAIC_AAH:
            if p <= 0 or q <= 0:
                raise ValueError(f"alpha = p/q needs positive p and q, got {p}/{q}")
            if math.gcd(p, q) != 1:
                raise ValueError(f"alpha = {p}/{q}: p and q must be coprime")
        if self.family in (Family.MOSAIC_DIMER, Family.MOSAIC_TRIMER):
            c = self.cell_length
            if self.L % c:
                raise ValueError(f"{self.family.value} needs L = {c} * cells, got L={self.L}")

        cell = self.unit_cell
        if self.L % cell:
            msg = (
                f"L={self.L} is not a multiple of lcm(kappa={self.kappa}, "
                f"cell={self.cell_length}) = {cell}"
            )
            if self.boundary is Boundary.PBC:
                raise CommensurabilityError(msg + "; required for periodic boundaries")
            warnings.warn(msg + "; mosaic pattern is truncated at the open end", stacklevel=3)

    @property
    def cell_length(self) -> int:
        """Period of the reciprocal hopping pattern."""
        if self.family is Family.HN:
            return 1
        if self.family is Family.MOSAIC_DIMER:
            return 2
        if self.family is Family.MOSAIC_TRIMER:
            return 3
        return self.alpha[1]

    @property
    def unit_cell(self) -> int:
        """Sites per unit cell once the mosaic period is included."""
        return math.lcm(self.kappa, self.cell_length)

    @property
    def cells(self) -> int:
        return self.L // self.cell_length

    def base_hopping(self, bonds) -> np.ndarray:
        """Reciprocal hopping amplitude on the given 1-based bond indices."""
        j = np.asarray(bonds)
        if self.family is Family.HN:
            return np.full(j.shape, self.t)
        if self.family is Family.MOSAIC_DIMER:
            return np.where(j % 2 == 1, self.u, self.v)
        if self.family is Family.MOSAIC_TRIMER:
            return np.array([self.u, self.v, self.w])[(j - 1) % 3]
        p, q = self.alpha
        # reduce the phase exactly before taking the cosine
        return self.t + self.lam * np.cos(2 * np.pi * ((p * j) % q) / q)

    def replace(self, **changes) -> "ModelSpec":
        """Copy with changed fields; accepts ``lambda`` and ``cells`` aliases."""
        changes = dict(changes)
        if "lambda" in changes:
            changes["lam"] = changes.pop("lambda")
        if "cells" in changes:
            changes["L"] = int(changes.pop("cells")) * self.cell_length
        return dataclasses.replace(self, **changes)

    def param(self, name: str) -> float:
        return getattr(self, _PARAM_KEYS[name])

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"family": self.family.value}
        for key in _FAMILY_PARAMS[self.family]:
            d[key] = self.param(key)
        if self.family is Family.MOSAIC_AAH:
            d["alpha"] = f"{self.alpha[0]}/{self.alpha[1]}"
        d["kappa"] = self.kappa
        if self.family in (Family.MOSAIC_DIMER, Family.MOSAIC_TRIMER):
            d["cells"] = self.cells
        else:
            d["L"] = self.L
        d["boundary"] = self.boundary.value
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelSpec":
        data = dict(data)
        family = Family(data.pop("family"))
        kwargs: dict[str, Any] = {"family": family}
        for key, attr in _PARAM_KEYS.items():
            if key in data:
                kwargs[attr] = data.pop(key)
        for key in ("alpha", "kappa", "boundary"):
            if key in data:
                kwargs[key] = data.pop(key)
        cell = {Family.HN: 1, Family.MOSAIC_DIMER: 2, Family.MOSAIC_TRIMER: 3}.get(family)
        if cell is None:
            cell = _parse_alpha(kwargs.get("alpha", (1, 4)))[1]
        if "cells" in data and "L" in data:
            raise ValueError("give either 'cells' or 'L', not both")
        if "cells" in data:
            kwargs["L"] = int(data.pop("cells")) * cell
        elif "L" in data:
            kwargs["L"] = data.pop("L")
        data.pop("schema", None)
        if data:
            raise ValueError(f"unknown model fields: {sorted(data)}")
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class HoppingChain:
    """Onsite terms and backward/forward amplitudes of a nearest-neighbour chain.

    ``backward[j-1]`` is ``t_j`` and ``forward[j-1]`` is ``t'_j``.  For PBC the
    final bond wraps site ``L`` to site 1.  ``imaginary_onsite`` marks the
    onsite terms as ``i * V_j``.
    """

    onsite: np.ndarray
    backward: np.ndarray
    forward: np.ndarray
    boundary: Boundary = Boundary.OBC
    imaginary_onsite: bool = False

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        for name in ("onsite", "backward", "forward"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        L = len(self.onsite)
        nb = L if self.boundary is Boundary.PBC else L - 1
        if L < 1:
            raise ValueError("chain needs at least one site")
        if len(self.backward) != nb or len(self.forward) != nb:
            raise ValueError(
                f"{self.boundary.value} chain with L={L} needs {nb} bonds, got "
                f"{len(self.backward)} backward / {len(self.forward)} forward"
            )

    @property
    def L(self) -> int:
        return len(self.onsite)

    @property
    def products(self) -> np.ndarray:
        return self.backward * self.forward


def mosaic_bonds(kappa: int, nbonds: int) -> np.ndarray:
    """1-based indices of the nonreciprocal bonds ``s * kappa <= nbonds``."""
    return np.arange(kappa, nbonds + 1, kappa)


def _hoppings(spec: ModelSpec, nbonds: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(1, nbonds + 1)
    base = spec.base_hopping(j).astype(float)
    shift = np.where(j % spec.kappa == 0, spec.gamma, 0.0)
    return base + shift, base - shift


def build_chain(spec: ModelSpec) -> HoppingChain:
    nbonds = spec.L if spec.boundary is Boundary.PBC else spec.L - 1
    backward, forward = _hoppings(spec, nbonds)
    return HoppingChain(np.zeros(spec.L), backward, forward, spec.boundary)


def assemble(chain: HoppingChain) -> np.ndarray:
    """Dense Hamiltonian matrix (real unless the onsite terms are imaginary)."""
    L = chain.L
    dtype = complex if chain.imaginary_onsite else float
    H = np.zeros((L, L), dtype=dtype)
    H[np.diag_indices(L)] = 1j * chain.onsite if chain.imaginary_onsite else chain.onsite
    idx = np.arange(L - 1)
    H[idx, idx + 1] = chain.backward[: L - 1]
    H[idx + 1, idx] = chain.forward[: L - 1]
    if chain.boundary is Boundary.PBC:
        # += so that L = 2 keeps both the bulk bond and the wrap bond
        H[L - 1, 0] += chain.backward[-1]
        H[0, L - 1] += chain.forward[-1]
    return H


def cell_hoppings(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Backward and forward amplitudes over bonds 1..q of one unit cell."""
    return _hoppings(spec, spec.unit_cell)


def bloch_stack(spec: ModelSpec, beta) -> np.ndarray:
    """Generalized Bloch matrices for an array of ``beta`` values, shape (..., q, q)."""
    beta = np.asarray(beta, dtype=complex)
    if np.any(beta == 0):
        raise ValueError("beta = 0 is not allowed (beta**-1 undefined)")
    t, tp = cell_hoppings(spec)
    q = len(t)
    M = np.zeros(beta.shape + (q, q), dtype=complex)
    a = np.arange(q - 1)
    M[..., a, a + 1] = t[:-1]
    M[..., a + 1, a] = tp[:-1]
    M[..., 0, q - 1] += tp[-1] / beta
    M[..., q - 1, 0] += t[-1] * beta
    return M


def bloch_matrix(spec: ModelSpec, beta: complex) -> np.ndarray:
    """q x q Bloch matrix with ``t'_q / beta`` top-right and ``t_q * beta`` bottom-left."""
    return bloch_stack(spec, np.asarray(beta))
