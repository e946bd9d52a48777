"""Directional IPR diagnostics for the skin effect.

dIPR(psi) = P(psi) * sum_j |psi_j|^4 / <psi|psi>^2 with
P(psi) = sgn(sum_j (j - L/2 - delta) |psi_j|), j = 1..L.

Positive values mean weight on the right half, negative on the left.  Note
that sum_j (j - L/2 - delta) = L (1/2 - delta) > 0, so a perfectly uniform
state comes out with a small positive value.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .eig import Spectrum

__all__ = [
    "SkinConfig",
    "SkinProfile",
    "Side",
    "dipr",
    "dipr_columns",
    "dmipr",
    "skin_profile",
    "localization_side",
    "write_state_csv",
]


@dataclass(frozen=True)
class SkinConfig:
    delta: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    EXTENDED = "extended"
    MIXED = "mixed"


def dipr_columns(V, delta: float = 0.25) -> np.ndarray:
    """dIPR of every column of ``V``."""
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, None]
    L = V.shape[0]
    if L < 2:
        raise ValueError("dIPR needs at least two sites")
    a = np.abs(V)
    norm2 = np.sum(a**2, axis=0)
    if np.any(norm2 == 0):
        raise ValueError("dIPR of a zero vector is undefined")
    ipr = np.sum(a**4, axis=0) / norm2**2
    j = np.arange(1, L + 1)
    pol = np.sign((j - L / 2 - delta) @ a)
    return pol * ipr


def dipr(psi, cfg: SkinConfig | float = SkinConfig()) -> float:
    delta = cfg.delta if isinstance(cfg, SkinConfig) else SkinConfig(cfg).delta
    return float(dipr_columns(np.asarray(psi).reshape(-1), delta)[0])


def dmipr(spec: Spectrum, cfg: SkinConfig = SkinConfig()) -> float:
    """Mean dIPR over every eigenstate (edge modes included)."""
    if spec.eigenvectors is None:
        raise ValueError("dMIPR needs eigenvectors")
    return float(np.mean(dipr_columns(spec.eigenvectors, cfg.delta)))


@dataclass
class SkinProfile:
    dipr: np.ndarray
    dmipr: float
    sides: list = field(default_factory=list)
    threshold: float = 0.0


def _state_side(x, thr):
    if x < -thr:
        return Side.LEFT
    if x > thr:
        return Side.RIGHT
    return Side.EXTENDED


def skin_profile(spec: Spectrum, cfg: SkinConfig = SkinConfig(), threshold: float | None = None) -> SkinProfile:
    if spec.eigenvectors is None:
        raise ValueError("skin profile needs eigenvectors")
    values = dipr_columns(spec.eigenvectors, cfg.delta)
    L = spec.eigenvectors.shape[0]
    thr = 2.0 / L if threshold is None else threshold
    return SkinProfile(values, float(values.mean()), [_state_side(x, thr) for x in values], thr)


def localization_side(profile: SkinProfile, threshold: float | None = None) -> Side:
    """Single label for a whole spectrum.

    Default threshold is ``2/L``: twice the IPR of a uniform state.
    """
    thr = profile.threshold if threshold is None else threshold
    if thr <= 0:
        raise ValueError("threshold must be positive")
    d = profile.dipr
    if np.all(d < -thr):
        return Side.LEFT
    if np.all(d > thr):
        return Side.RIGHT
    if np.all(np.abs(d) <= thr):
        return Side.EXTENDED
    return Side.MIXED


def write_state_csv(path, spec: Spectrum, cfg: SkinConfig = SkinConfig()) -> None:
    values = dipr_columns(spec.eigenvectors, cfg.delta)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "Re(E)", "Im(E)", "dipr"])
        for n, (e, d) in enumerate(zip(np.asarray(spec.eigenvalues, dtype=complex), values), start=1):
            writer.writerow([n, repr(float(e.real)), repr(float(e.imag)), repr(float(d))])
