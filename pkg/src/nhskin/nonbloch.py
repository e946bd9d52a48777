"""Non-Bloch deformation magnitude |beta| and the skin-effect critical manifolds.

For a periodic chain with q sites per cell and no onsite terms

    |beta| = sqrt(| t'_1 ... t'_q / (t_1 ... t_q) |)

and bulk states sit at the left end for |beta| < 1, at the right end for
|beta| > 1.  Only the mosaic bonds contribute (reciprocal bonds cancel), so
the result depends on kappa only through a residue class of the period:
kappa mod 2 (dimer), mod 3 (trimer), mod 4 (AAH with alpha = 1/4).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .lattice import Boundary, Family, ModelSpec, cell_hoppings

__all__ = [
    "DisconnectedError",
    "UnsupportedFamilyError",
    "SkinSide",
    "BetaResult",
    "beta_magnitude",
    "beta_closed_form",
    "kappa_class",
    "CriticalCurve",
    "critical_manifold",
    "closed_form_roots",
    "solve_beta_unity",
    "dimer_dispersion",
]

CRITICAL_TOL = 1e-9


class DisconnectedError(ValueError):
    """A hopping amplitude in the unit cell vanishes."""


class UnsupportedFamilyError(ValueError):
    pass


class SkinSide(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    CRITICAL = "critical"


@dataclass(frozen=True)
class BetaResult:
    r: float
    log_r: float
    side: SkinSide
    backward: np.ndarray
    forward: np.ndarray

    def to_dict(self) -> dict:
        return {"r": self.r, "side": self.side.value}


def _log_r(backward, forward) -> float:
    if np.any(backward == 0) or np.any(forward == 0):
        bad = int(np.flatnonzero((backward == 0) | (forward == 0))[0]) + 1
        raise DisconnectedError(f"hopping vanishes on bond {bad} of the unit cell")
    return 0.5 * float(np.sum(np.log(np.abs(forward))) - np.sum(np.log(np.abs(backward))))


def _side(log_r: float, tol: float) -> SkinSide:
    r = math.exp(log_r)
    if abs(r - 1.0) <= tol:
        return SkinSide.CRITICAL
    return SkinSide.LEFT if r < 1.0 else SkinSide.RIGHT


def beta_magnitude(spec: ModelSpec, tol: float = CRITICAL_TOL) -> BetaResult:
    """|beta| from the product formula over one unit cell (computed in log space)."""
    b, f = cell_hoppings(spec)
    lr = _log_r(b, f)
    return BetaResult(math.exp(lr), lr, _side(lr, tol), b, f)


def kappa_class(family: Family, kappa: int, alpha: tuple[int, int] = (1, 4)) -> int:
    """Residue of kappa that fixes the |beta| expression for the family."""
    family = Family(family)
    if family is Family.HN:
        return 0
    if family is Family.MOSAIC_DIMER:
        return kappa % 2
    if family is Family.MOSAIC_TRIMER:
        return kappa % 3
    if tuple(alpha) != (1, 4):
        raise UnsupportedFamilyError(f"closed forms exist only for alpha = 1/4, got {alpha[0]}/{alpha[1]}")
    return kappa % 4


def _sqrt_ratio(num, den) -> float:
    return math.sqrt(abs(num / den))


def beta_closed_form(spec: ModelSpec) -> float:
    """|beta| from the family-specific closed-form expressions."""
    g = spec.gamma
    cls = kappa_class(spec.family, spec.kappa, spec.alpha)
    if spec.family is Family.HN:
        return _sqrt_ratio(spec.t - g, spec.t + g)
    if spec.family is Family.MOSAIC_DIMER:
        u, v = spec.u, spec.v
        if cls == 1:
            return _sqrt_ratio((u - g) * (v - g), (u + g) * (v + g))
        return _sqrt_ratio(v - g, v + g)
    if spec.family is Family.MOSAIC_TRIMER:
        u, v, w = spec.u, spec.v, spec.w
        if cls in (1, 2):
            return _sqrt_ratio((u - g) * (v - g) * (w - g), (u + g) * (v + g) * (w + g))
        return _sqrt_ratio(w - g, w + g)
    t, lam = spec.t, spec.lam
    if cls in (1, 3):
        num = (t - g) * (t - lam - g) * (t - g) * (t + lam - g)
        den = (t + g) * (t - lam + g) * (t + g) * (t + lam + g)
        return _sqrt_ratio(num, den)
    if cls == 2:
        return _sqrt_ratio((t - lam - g) * (t + lam - g), (t - lam + g) * (t + lam + g))
    return _sqrt_ratio(t + lam - g, t + lam + g)


@dataclass(frozen=True)
class CriticalCurve:
    """``solve_for = fn(free)`` inside the plane of the two parameters."""

    label: str
    solve_for: str
    free: str
    fn: Callable[[np.ndarray], np.ndarray]
    precluded: bool = False

    def __call__(self, x):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.fn(np.asarray(x, dtype=float))

    def sample(self, free_values) -> np.ndarray:
        """Polyline of (free, solved) points; undefined points dropped."""
        x = np.asarray(free_values, dtype=float)
        y = np.broadcast_to(self(x), x.shape)
        ok = np.isfinite(y)
        return np.column_stack([x[ok], y[ok]])


def _const(c):
    return lambda x: np.full_like(x, c, dtype=float)


def critical_manifold(
    family,
    kappa: int,
    params: dict | None = None,
    alpha: tuple[int, int] = (1, 4),
    include_precluded: bool = False,
) -> list[CriticalCurve]:
    """Closed-form |beta| = 1 curves in the family's natural parameter plane.

    Planes: HN (t, gamma); dimer (u, gamma) at fixed v; trimer (w, gamma) at
    fixed u, v; AAH (lambda, gamma) at fixed t.
    """
    family = Family(family)
    p = dict(params or {})
    cls = kappa_class(family, kappa, alpha)
    flat_gamma = lambda free: CriticalCurve("gamma=0", "gamma", free, _const(0.0))  # noqa: E731
    if family is Family.HN:
        return [flat_gamma("t"), CriticalCurve("t=0", "t", "gamma", _const(0.0))]
    if family is Family.MOSAIC_DIMER:
        v = float(p.get("v", 1.0))
        curves = [flat_gamma("u")]
        if cls == 1:
            curves += [
                CriticalCurve("u=-v", "u", "gamma", _const(-v)),
                CriticalCurve("u=-gamma^2/v", "u", "gamma", lambda g: -(g**2) / v),
            ]
        return curves
    if family is Family.MOSAIC_TRIMER:
        u, v = float(p.get("u", 1.0)), float(p.get("v", 2.0))
        curves = [flat_gamma("w")]
        if cls in (1, 2):
            curves += [
                CriticalCurve("w=-(uv+gamma^2)/(u+v)", "w", "gamma", lambda g: -(u * v + g**2) / (u + v)),
                CriticalCurve("w=-(u+v)gamma^2/(uv+gamma^2)", "w", "gamma", lambda g: -(u + v) * g**2 / (u * v + g**2)),
            ]
        else:
            curves.append(CriticalCurve("w=0", "w", "gamma", _const(0.0)))
        return curves
    t = float(p.get("t", 1.0))
    curves = [flat_gamma("lambda")]
    if cls in (1, 3):
        outer = lambda g: np.sqrt(2 * (t**2 + g**2))  # noqa: E731
        inner = lambda g: np.sqrt(((t + g) ** 4 + (t - g) ** 4) / (2 * (t**2 + g**2)))  # noqa: E731
        curves += [
            CriticalCurve("lambda=+sqrt(2(t^2+gamma^2))", "lambda", "gamma", outer),
            CriticalCurve("lambda=-sqrt(2(t^2+gamma^2))", "lambda", "gamma", lambda g: -outer(g)),
            CriticalCurve("lambda=+sqrt(((t+gamma)^4+(t-gamma)^4)/(2(t^2+gamma^2)))", "lambda", "gamma", inner),
            CriticalCurve("lambda=-sqrt(((t+gamma)^4+(t-gamma)^4)/(2(t^2+gamma^2)))", "lambda", "gamma", lambda g: -inner(g)),
        ]
    elif cls == 2:
        mid = lambda g: np.sqrt(t**2 + g**2)  # noqa: E731
        curves += [
            CriticalCurve("lambda=+sqrt(t^2+gamma^2)", "lambda", "gamma", mid),
            CriticalCurve("lambda=-sqrt(t^2+gamma^2)", "lambda", "gamma", lambda g: -mid(g)),
        ]
    elif include_precluded:
        # disconnects the lattice, so it is not a physical transition line
        curves.append(CriticalCurve("lambda=-t", "lambda", "gamma", _const(-t), precluded=True))
    return curves


def _pm_sqrt(x) -> list[float]:
    if not math.isfinite(x) or x < 0:
        return []
    s = math.sqrt(x)
    return [-s, s] if s > 0 else [0.0]


def closed_form_roots(spec: ModelSpec, param: str = "gamma") -> list[float]:
    """Values of ``param`` with |beta| = 1 predicted by the closed forms.

    The other parameters are taken from ``spec``.  Precluded solutions are
    included since they still satisfy |beta| = 1.
    """
    fam = spec.family
    cls = kappa_class(fam, spec.kappa, spec.alpha)
    if param == "gamma":
        roots = [0.0]
        if fam is Family.MOSAIC_DIMER and cls == 1:
            roots += _pm_sqrt(-spec.u * spec.v)
        elif fam is Family.MOSAIC_TRIMER and cls in (1, 2):
            u, v, w = spec.u, spec.v, spec.w
            roots += _pm_sqrt(-(u * v + w * (u + v)))
            if u + v + w != 0:
                roots += _pm_sqrt(-u * v * w / (u + v + w))
        elif fam is Family.MOSAIC_AAH and cls in (1, 3):
            t, lam = spec.t, spec.lam
            roots += _pm_sqrt(lam**2 / 2 - t**2)
            # lambda^2 (t^2 + x) = t^4 + 6 t^2 x + x^2 with x = gamma^2
            for x in np.roots([1.0, 6 * t**2 - lam**2, t**4 - lam**2 * t**2]):
                if abs(x.imag) <= 1e-12 * max(1.0, abs(x)):
                    roots += _pm_sqrt(float(x.real))
        elif fam is Family.MOSAIC_AAH and cls == 2:
            roots += _pm_sqrt(spec.lam**2 - spec.t**2)
        return sorted(set(roots))

    curves = critical_manifold(
        fam, spec.kappa, {"t": spec.t, "u": spec.u, "v": spec.v}, spec.alpha, include_precluded=True
    )
    out = []
    for c in curves:
        if c.solve_for == param and c.free == "gamma":
            val = float(c(np.array([spec.gamma]))[0])
            if math.isfinite(val):
                out.append(val)
    if not out and not any(c.solve_for == param for c in curves):
        raise UnsupportedFamilyError(f"no closed-form manifold in parameter {param!r} for {fam.value}")
    return sorted(set(out))


def _periodic_template(spec: ModelSpec) -> ModelSpec:
    return spec.replace(L=max(spec.unit_cell, 2), boundary=Boundary.OBC)


def solve_beta_unity(
    spec: ModelSpec,
    param: str,
    interval: tuple[float, float],
    samples: int = 4001,
    xtol: float = 1e-13,
    validate: bool = True,
) -> list[float]:
    """All roots of log|beta| = 0 for ``param`` swept over ``interval``.

    Hopping amplitudes are affine in every model parameter, so the poles
    (vanishing hoppings) are located exactly and excluded; sign changes of
    log|beta| between poles are then bracketed and refined with Brent's method.
    """
    a, b = map(float, interval)
    if not a < b:
        raise ValueError("interval must be increasing")
    base = _periodic_template(spec)
    at = lambda x: cell_hoppings(base.replace(**{param: x}))  # noqa: E731
    b0, f0 = at(0.0)
    b1, f1 = at(1.0)
    h0 = np.concatenate([b0, f0])
    slope = np.concatenate([b1, f1]) - h0
    dead = (slope == 0) & (h0 == 0)
    if np.any(dead):
        raise DisconnectedError(f"a hopping vanishes for every value of {param}")
    moving = slope != 0
    poles = np.unique(-h0[moving] / slope[moving])
    poles = poles[(poles > a) & (poles < b)]

    def f(x):
        bb, ff = at(x)
        return _log_r(bb, ff)

    edges = np.concatenate([[a], poles, [b]])
    roots: list[float] = []
    width = b - a
    for lo, hi in zip(edges[:-1], edges[1:]):
        margin = 1e-12 * max(1.0, abs(lo), abs(hi))
        lo_in = lo + margin if lo in poles else lo
        hi_in = hi - margin if hi in poles else hi
        if hi_in <= lo_in:
            continue
        n = max(16, int(samples * (hi - lo) / width))
        x = np.linspace(lo_in, hi_in, n)
        B = b0[None, :] + x[:, None] * (b1 - b0)[None, :]
        F = f0[None, :] + x[:, None] * (f1 - f0)[None, :]
        with np.errstate(divide="ignore"):
            y = 0.5 * (np.sum(np.log(np.abs(F)), axis=1) - np.sum(np.log(np.abs(B)), axis=1))
        finite = np.isfinite(y)
        if finite.any() and np.max(np.abs(y[finite])) <= 1e-12:
            warnings.warn(f"|beta| = 1 on the whole sub-interval [{lo:.6g}, {hi:.6g}] of {param}", stacklevel=2)
            continue
        for i in range(n):
            if y[i] == 0.0:
                roots.append(float(x[i]))
        for i in range(n - 1):
            if np.isfinite(y[i]) and np.isfinite(y[i + 1]) and y[i] * y[i + 1] < 0:
                roots.append(float(brentq(f, x[i], x[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)))
    roots.sort()
    deduped: list[float] = []
    for r in roots:
        if not deduped or abs(r - deduped[-1]) > 1e-9:
            deduped.append(r)
    if validate:
        try:
            expected = closed_form_roots(spec, param)
        except UnsupportedFamilyError:
            expected = None
        if expected is not None:
            for r in deduped:
                dist = min((abs(r - e) for e in expected), default=math.inf)
                if dist > 1e-8:
                    warnings.warn(f"root {param}={r:.12g} is {dist:.3g} from every closed-form solution", stacklevel=2)
    return deduped


def dimer_dispersion(u, v, gamma, k):
    """Both PBC bands E+ and E- = -E+ of the kappa = 1 dimer."""
    k = np.asarray(k, dtype=float)
    rad = (
        u**2 + v**2 - 2 * gamma**2
        + 2 * u * v * np.cos(k)
        + 2 * gamma**2 * np.cos(k)
        + 2j * gamma * (u + v) * np.sin(k)
    )
    e = np.sqrt(rad.astype(complex))
    return e, -e
