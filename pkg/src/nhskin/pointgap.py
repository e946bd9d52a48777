"""Point gaps of PBC spectra: spectral winding numbers and gap-closing scans.

The winding number around a reference energy E0 is the total change of
arg det(H(k) - E0) over one Brillouin zone divided by 2 pi, evaluated on the
q x q Bloch matrix with beta = exp(ik).  The PBC spectral curve is the same
as that of the L-site periodic chain, at a fraction of the cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .eig import eigenvalues
from .lattice import Boundary, ModelSpec, assemble, bloch_matrix, bloch_stack, build_chain
from .nonbloch import DisconnectedError, solve_beta_unity

__all__ = [
    "OnSpectrumError",
    "WindingError",
    "WindingResult",
    "winding_number",
    "spectral_curve",
    "curve_distance",
    "interior_reference",
    "pbc_obc_distance",
    "hausdorff",
    "ScanPoint",
    "Closing",
    "GapScan",
    "gap_transition_scan",
]

ON_CURVE_TOL = 1e-8
MAX_NK = 1 << 16


class OnSpectrumError(ValueError):
    """The reference energy lies on the PBC spectral curve."""


class WindingError(RuntimeError):
    pass


@dataclass
class WindingResult:
    reference: complex
    winding: int
    k_samples: int
    phase_track: np.ndarray = field(repr=False)
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "reference": [self.reference.real, self.reference.imag],
            "winding": self.winding,
            "k_samples": self.k_samples,
            "residual": self.residual,
        }


def _kgrid(nk):
    return 2 * np.pi * np.arange(nk) / nk


def spectral_curve(spec: ModelSpec, nk: int = 256) -> np.ndarray:
    """PBC band energies, shape (nk, q), at k = 2 pi m / nk."""
    mats = bloch_stack(spec, np.exp(1j * _kgrid(nk)))
    return np.linalg.eigvals(mats)


def _det(spec, e0, k):
    mats = bloch_stack(spec, np.exp(1j * np.asarray(k, dtype=float)))
    return np.linalg.det(mats - e0 * np.eye(mats.shape[-1]))


def _foot_points(spec, e0):
    """k values where the PBC curve passes closest to ``e0``.

    ``beta * det(H(beta) - e0)`` is a quadratic in beta for a nearest-neighbour
    chain; its roots near the unit circle sit at the foot points, since a
    radial step in beta maps to a step normal to the curve.
    """
    roots3 = np.exp(2j * np.pi * np.arange(3) / 3)
    vals = roots3 * _det(spec, e0, np.angle(roots3))
    coeffs = np.array([np.mean(vals * roots3 ** (-j)) for j in range(3)])
    poly = coeffs[::-1]
    scale = np.max(np.abs(poly))
    if scale == 0:
        return np.array([])
    poly = np.where(np.abs(poly) > 1e-14 * scale, poly, 0)
    beta = np.roots(poly)
    return np.angle(beta[beta != 0])


def curve_distance(spec: ModelSpec, e0: complex, nk: int = 256) -> float:
    """Distance from ``e0`` to the PBC spectral curve (polished grid minimum plus exact foot points)."""
    e0 = complex(e0)
    gap = np.min(np.abs(spectral_curve(spec, nk) - e0), axis=1)
    i = int(np.argmin(gap))
    best = float(gap[i])
    h = 2 * np.pi / nk

    def band_gap(k):
        return float(np.min(np.abs(np.linalg.eigvals(bloch_matrix(spec, np.exp(1j * k))) - e0)))

    polished = minimize_scalar(band_gap, bounds=(i * h - h, i * h + h), method="bounded", options={"xatol": 1e-13})
    best = min(best, float(polished.fun))
    k = _foot_points(spec, e0)
    if len(k):
        bands = np.linalg.eigvals(bloch_stack(spec, np.exp(1j * k)))
        best = min(best, float(np.min(np.abs(bands - e0))))
    return best


def _refine(spec, e0, k0, k1, d0, d1, depth):
    """Phase change over [k0, k1], bisecting until each step is below pi/4."""
    step = float(np.angle(d1 / d0))
    if abs(step) < np.pi / 4:
        return step
    if depth == 0:
        raise WindingError(f"phase of det(H(k) - E0) not resolved near k = {k0:.15g}")
    km = 0.5 * (k0 + k1)
    dm = _det(spec, e0, [km])[0]
    if dm == 0:
        raise OnSpectrumError(f"E0 = {e0} is an eigenvalue of the Bloch matrix at k = {km:.15g}")
    return _refine(spec, e0, k0, km, d0, dm, depth - 1) + _refine(spec, e0, km, k1, dm, d1, depth - 1)


def _phase_steps(spec, e0, nk):
    k = _kgrid(nk)
    det = _det(spec, e0, k)
    if np.any(det == 0):
        raise OnSpectrumError(f"E0 = {e0} is an eigenvalue of the Bloch matrix")
    nxt = np.roll(det, -1)
    steps = np.angle(nxt / det)
    h = 2 * np.pi / nk
    for i in np.flatnonzero(np.abs(steps) >= np.pi / 4):
        steps[i] = _refine(spec, e0, k[i], k[i] + h, det[i], nxt[i], 60)
    return steps


def winding_number(spec: ModelSpec, e0: complex, nk: int = 256, max_nk: int = MAX_NK) -> WindingResult:
    """Spectral winding of the PBC bands around ``e0``.

    Steps of arg det(H(k) - E0) larger than pi/4 are bisected locally; the
    grid is then doubled until the winding is unchanged.
    """
    if nk < 64:
        raise ValueError("need at least 64 k samples")
    e0 = complex(e0)
    dist = curve_distance(spec, e0, nk)
    if dist <= ON_CURVE_TOL:
        raise OnSpectrumError(f"E0 = {e0} lies within {dist:.2g} of the PBC spectrum")
    previous = None
    while True:
        steps = _phase_steps(spec, e0, nk)
        total = steps.sum() / (2 * np.pi)
        w = int(round(total))
        resid = abs(total - w)
        if resid >= 0.1:
            raise WindingError(f"accumulated phase around {e0} is {total:.4f} turns, not an integer")
        if previous == w:
            break
        if nk >= max_nk:
            raise WindingError(f"winding around {e0} not stable up to {nk} k points")
        previous = w
        nk *= 2
    return WindingResult(e0, w, nk, np.cumsum(steps), resid)


def _windings_many(spec, points, nk):
    """Coarse winding numbers for many reference points at once."""
    bands = spectral_curve(spec, nk)
    # char poly per k from its roots: det(E - H(k)) = prod_b (E - E_b(k))
    vals = np.ones((len(points), nk), dtype=complex)
    for b in range(bands.shape[1]):
        vals *= points[:, None] - bands[None, :, b]
    with np.errstate(divide="ignore", invalid="ignore"):
        steps = np.angle(np.roll(vals, -1, axis=1) / vals)
    total = steps.sum(axis=1) / (2 * np.pi)
    w = np.rint(total)
    ok = np.isfinite(total) & (np.abs(total - w) < 0.1) & (np.max(np.abs(steps), axis=1) < np.pi / 2)
    return np.where(ok, w, 0).astype(int)


def interior_reference(spec: ModelSpec, nk: int = 256, subsample: int = 160, tries: int = 8):
    """Reference energy deepest inside a PBC loop, or ``None`` if there is no point gap.

    Candidates are midpoints of pairs of points on the spectral curve; the one
    with nonzero winding that lies farthest from the curve wins.  Thin loops
    are handled because a midpoint of two points on opposite sides of a
    strip lies inside it.
    """
    curve = spectral_curve(spec, nk).ravel()
    tree = cKDTree(np.column_stack([curve.real, curve.imag]))
    pick = curve[np.linspace(0, len(curve) - 1, min(subsample, len(curve))).astype(int)]
    i, j = np.triu_indices(len(pick), 1)
    cand = 0.5 * (pick[i] + pick[j])
    dist, _ = tree.query(np.column_stack([cand.real, cand.imag]))
    keep = dist > max(ON_CURVE_TOL, 1e-12 * np.max(np.abs(curve), initial=1.0))
    cand, dist = cand[keep], dist[keep]
    if len(cand) == 0:
        return None
    coarse = _windings_many(spec, cand, nk)
    nz = np.flatnonzero(coarse)
    if len(nz) == 0:
        return None
    order = nz[np.argsort(-dist[nz])]
    for idx in order[:tries]:
        try:
            res = winding_number(spec, cand[idx], nk)
        except (OnSpectrumError, WindingError):
            continue
        if res.winding != 0:
            return res
    return None


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two point sets in the complex plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return math.inf
    ta = cKDTree(np.column_stack([a.real, a.imag]))
    tb = cKDTree(np.column_stack([b.real, b.imag]))
    d_ab, _ = tb.query(np.column_stack([a.real, a.imag]))
    d_ba, _ = ta.query(np.column_stack([b.real, b.imag]))
    return float(max(d_ab.max(), d_ba.max()))


def pbc_obc_distance(spec: ModelSpec, zero_mode_cutoff: float = 0.05, backend: str = "qr") -> float:
    """Hausdorff distance between OBC and PBC eigenvalues of the same L-site chain.

    OBC eigenvalues with |E| < ``zero_mode_cutoff`` (topological zero modes)
    are dropped before the comparison.
    """
    obc = eigenvalues(assemble(build_chain(spec.replace(boundary=Boundary.OBC))), backend=backend).eigenvalues
    pbc = eigenvalues(assemble(build_chain(spec.replace(boundary=Boundary.PBC))), backend=backend).eigenvalues
    obc = obc[np.abs(obc) >= zero_mode_cutoff]
    return hausdorff(obc, pbc)


@dataclass
class ScanPoint:
    value: float
    winding: int
    reference: complex | None
    distance: float | None = None


@dataclass
class Closing:
    value: float
    kind: str
    beta_root: float | None
    beta_root_distance: float | None


@dataclass
class GapScan:
    param: str
    points: list
    closings: list
    beta_roots: list


def _winding_closings(values, windings):
    out = []
    n = len(values)
    i = 0
    while i < n:
        if windings[i] == 0:
            j = i
            while j + 1 < n and windings[j + 1] == 0:
                j += 1
            out.append(0.5 * (values[i] + values[j]))
            i = j + 1
            continue
        if i + 1 < n and windings[i + 1] != 0 and windings[i + 1] != windings[i]:
            out.append(0.5 * (values[i] + values[i + 1]))
        i += 1
    return out


def gap_transition_scan(
    spec: ModelSpec,
    param: str,
    grid,
    nk: int = 256,
    distance_threshold: float | None = None,
    zero_mode_cutoff: float = 0.05,
) -> GapScan:
    """Parameter values where the point gap closes.

    Each grid point gets the winding around its deepest interior reference
    energy (0 without a point gap).  A closing is reported wherever that
    winding changes sign or drops to zero; with ``distance_threshold`` set,
    local minima of the OBC/PBC Hausdorff distance below it are reported too.
    Every closing carries the nearest |beta| = 1 root for cross-checking.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    points = []
    for x in grid:
        s = spec.replace(**{param: float(x)})
        ref = interior_reference(s, nk)
        dist = None
        if distance_threshold is not None:
            dist = pbc_obc_distance(s, zero_mode_cutoff)
        points.append(ScanPoint(float(x), ref.winding if ref else 0, ref.reference if ref else None, dist))

    values = [p.value for p in points]
    found = [(v, "winding") for v in _winding_closings(values, [p.winding for p in points])]
    if distance_threshold is not None:
        d = [p.distance for p in points]
        step = np.min(np.diff(grid)) if len(grid) > 1 else 0.0
        for k in range(len(d)):
            left = d[k - 1] if k > 0 else math.inf
            right = d[k + 1] if k + 1 < len(d) else math.inf
            if d[k] < distance_threshold and d[k] <= left and d[k] <= right:
                if all(abs(values[k] - v) > 1.5 * step for v, _ in found):
                    found.append((values[k], "distance"))
    found.sort()

    try:
        roots = solve_beta_unity(spec, param, (grid[0], grid[-1]), validate=False)
    except DisconnectedError:
        roots = []
    closings = []
    for v, kind in found:
        if roots:
            near = min(roots, key=lambda r: abs(r - v))
            closings.append(Closing(v, kind, near, abs(near - v)))
        else:
            closings.append(Closing(v, kind, None, None))
    return GapScan(param, points, closings, roots)
