"""Acceptance criteria as runnable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`; ``run_all`` runs the
full list.  Oracles are kept independent of the code under test wherever
possible (symmetric tridiagonal solver vs general QR, mpmath characteristic
polynomials vs Hessenberg QR, closed forms vs product formulas).
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .classify import gauge, hermitianize, numeric_class, predict_class, pseudo_hermiticity_residual
from .eig import eigenpairs, eigenvalues, symmetric_tridiagonal_eigen
from .lattice import Boundary, Family, HoppingChain, ModelSpec, assemble, build_chain
from .nonbloch import beta_closed_form, beta_magnitude, closed_form_roots, solve_beta_unity
from .pointgap import interior_reference, pbc_obc_distance, winding_number
from .skin import SkinConfig, dmipr
from .sweep import Axis, SweepConfig, overlays_for, run_sweep

__all__ = ["CriterionResult", "CRITERIA", "run_all", "match_multisets", "charpoly_roots"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.1f} s) {self.detail}"


def match_multisets(a, b) -> float:
    """Largest distance in the optimal one-to-one pairing of two point sets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if len(a) != len(b):
        return math.inf
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(a) else 0.0


def charpoly_roots(M, dps: int = 50):
    """Roots and determinant of ``M`` from its Faddeev-LeVerrier characteristic polynomial."""
    with mpmath.workdps(dps):
        n = len(M)
        A = mpmath.matrix([[mpmath.mpc(complex(x)) for x in row] for row in M])
        I = mpmath.eye(n)
        coeffs = [mpmath.mpc(1)]
        Mk = mpmath.zeros(n, n)
        for k in range(1, n + 1):
            Mk = A * Mk + coeffs[-1] * I
            AM = A * Mk
            coeffs.append(-sum(AM[i, i] for i in range(n)) / k)
        roots = mpmath.polyroots(coeffs, maxsteps=400, extraprec=4 * dps)
        det = (-1) ** n * coeffs[-1]
        return np.array([complex(r) for r in roots]), complex(det)


def _timed(number, name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # report, never crash the suite
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0)


def criterion_1(**_):
    def run():
        t0 = time.perf_counter()
        notes, ok = [], True
        for g in (0.2, 0.5, 0.9, 1.1, 1.5):
            ev = eigenvalues(assemble(build_chain(ModelSpec("hn", t=1.0, gamma=g, L=100)))).eigenvalues
            if g < 1:
                err = np.max(np.abs(ev.imag))
                notes.append(f"g={g}: max|Im|={err:.1e}")
            else:
                err = np.max(np.abs(ev.real))
                notes.append(f"g={g}: max|Re|={err:.1e}")
            ok &= err <= 1e-8
        dt = time.perf_counter() - t0
        ok &= dt < 5.0
        return ok, "; ".join(notes) + f"; {dt:.2f} s"

    return _timed(1, "HN real-imaginary transition", run)


def criterion_2(**_):
    def run():
        ok, notes = True, []
        expect = {0.3: "real", 0.7: "complex", 1.2: "imaginary"}
        for g, want in expect.items():
            chain = build_chain(ModelSpec("mosaic_dimer", u=-0.5, v=1.0, kappa=1, gamma=g, L=100))
            ev = eigenvalues(assemble(chain)).eigenvalues
            im, re = np.max(np.abs(ev.imag)), np.max(np.abs(ev.real))
            if want == "real":
                got = "real" if im <= 1e-8 else "complex"
            elif want == "imaginary":
                got = "imaginary" if re <= 1e-8 else "complex"
            else:
                got = "complex" if (im > 1e-3 and re > 1e-3) else "ambiguous"
            pred = predict_class(chain).kind
            ok &= got == want and pred == want
            notes.append(f"g={g}: numeric={got} predicted={pred} (max|Im|={im:.1e}, max|Re|={re:.1e})")
        return ok, "; ".join(notes)

    return _timed(2, "dimer three-phase spectrum", run)


def criterion_3(seed=0, **_):
    def run():
        rng = np.random.default_rng(seed)
        worst_ev, worst_res = 0.0, 0.0
        for _ in range(100):
            L = 40
            b = rng.uniform(0.2, 2.0, L - 1) * rng.choice([-1.0, 1.0], L - 1)
            f = rng.uniform(0.2, 2.0, L - 1) * np.sign(b)
            chain = HoppingChain(rng.uniform(-1.0, 1.0, L), b, f, Boundary.OBC)
            M = assemble(chain)
            h = hermitianize(chain)
            sym = symmetric_tridiagonal_eigen(h.diag, h.offdiag, vectors=False).eigenvalues * h.factor
            # norm balancing keeps the general route independent of the gauge
            gen = eigenvalues(M, balance="norm").eigenvalues
            worst_ev = max(worst_ev, match_multisets(sym, gen))
            worst_res = max(worst_res, pseudo_hermiticity_residual(M, gauge(chain)))
        ok = worst_ev <= 1e-9 and worst_res <= 1e-12
        return ok, f"max eigenvalue mismatch {worst_ev:.1e}, max residual {worst_res:.1e}"

    return _timed(3, "gauge equivalence oracle", run)


def criterion_4(**_):
    def run():
        ok, notes = True, []
        base = ModelSpec("mosaic_dimer", u=-0.5, v=1.0, kappa=1, L=100)
        cfg = SkinConfig()
        for spec in (base, base.replace(kappa=3, L=120)):
            a = dmipr(eigenpairs(assemble(build_chain(spec.replace(gamma=-0.70)))), cfg)
            b = dmipr(eigenpairs(assemble(build_chain(spec.replace(gamma=-0.71)))), cfg)
            flip = a * b < 0
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                roots = solve_beta_unity(spec, "gamma", (-1.5, 1.5), validate=False)
            want = [-1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)]
            match = len(roots) == 3 and all(abs(r - w) <= 1e-8 for r, w in zip(roots, want))
            ok &= flip and match
            notes.append(
                f"kappa={spec.kappa} L={spec.L}: dMIPR(-0.70)={a:+.4f}, dMIPR(-0.71)={b:+.4f}, "
                f"roots={[f'{r:.10f}' for r in roots]}"
            )
        return ok, "; ".join(notes)

    return _timed(4, "skin-transition location", run)


def criterion_5(**_):
    def run():
        base = ModelSpec("mosaic_dimer", u=-0.5, v=1.0, kappa=1, L=120)
        ref = interior_reference(base.replace(gamma=-0.70))
        if ref is None:
            return False, "no point gap found at gamma=-0.70"
        closed = winding_number(base.replace(gamma=-0.7071), ref.reference)
        d_crit = pbc_obc_distance(base.replace(gamma=-0.7071), zero_mode_cutoff=0.05)
        d_away = pbc_obc_distance(base.replace(gamma=-0.5), zero_mode_cutoff=0.05)
        ok = ref.winding != 0 and closed.winding == 0 and d_crit <= 0.08 and d_away > 0.2
        detail = (
            f"E0={ref.reference:.4f}: winding {ref.winding} at -0.70, {closed.winding} at -0.7071; "
            f"Hausdorff {d_crit:.4f} at -0.7071, {d_away:.4f} at -0.5"
        )
        return ok, detail

    return _timed(5, "point-gap closing", run)


def sign_boundary_mismatches(pd, samples: int = 20001):
    """Cells more than one grid cell from every analytic curve whose dMIPR sign
    disagrees with sign(log r).  Disconnected cells (undefined r) are skipped."""
    a1, a2 = pd.axis1, pd.axis2
    d1 = (a1.max - a1.min) / (a1.n - 1)
    d2 = (a2.max - a2.min) / (a2.n - 1)
    U, G = np.meshgrid(a1.values, a2.values, indexing="ij")
    curves = overlays_for(pd.config.template, a1, a2, samples=samples)
    if curves:
        pts = np.vstack([np.asarray(c["points"]) for c in curves])
        dist, _ = cKDTree(pts / [d1, d2]).query(np.column_stack([U.ravel() / d1, G.ravel() / d2]))
        dist = dist.reshape(U.shape)
    else:
        dist = np.full(U.shape, np.inf)
    far = (dist > 1.0) & np.isfinite(pd.r)
    with np.errstate(divide="ignore"):
        predicted = np.sign(np.log(pd.r))
    bad = far & (np.sign(pd.dmipr) != predicted)
    return int(far.sum()), int(bad.sum()), int((~np.isfinite(pd.r)).sum())


def criterion_6(threads=1, **_):
    def run():
        t0 = time.perf_counter()
        ok, notes = True, []
        for kappa in (1, 2, 3, 4):
            cfg = SweepConfig(
                ModelSpec("mosaic_dimer", v=1.0, kappa=kappa, L=60),
                Axis("u", -2.0, 2.0, 41),
                Axis("gamma", -1.5, 1.5, 31),
            )
            pd = run_sweep(cfg, threads=threads)
            checked, bad, skipped = sign_boundary_mismatches(pd)
            ok &= bad == 0
            notes.append(f"kappa={kappa}: {bad}/{checked} mismatches ({skipped} disconnected cells skipped)")
        dt = time.perf_counter() - t0
        ok &= dt < 180.0
        return ok, "; ".join(notes) + f"; {dt:.1f} s"

    return _timed(6, "phase-diagram structure", run)


def _random_spec(rng, family):
    kappa = int(rng.integers(1, 9))
    if family is Family.MOSAIC_TRIMER:
        u, v, w, g = rng.uniform(-2.0, 2.0, 4)
        return ModelSpec(family, u=u, v=v, w=w, gamma=g, kappa=kappa, L=3 * math.lcm(kappa, 3))
    t, lam, g = rng.uniform(-2.0, 2.0, 3)
    return ModelSpec(family, t=t, lam=lam, gamma=g, kappa=kappa, L=math.lcm(kappa, 4))


def criterion_7(seed=0, **_):
    def run():
        rng = np.random.default_rng(seed + 7)
        worst_rel, worst_root, nroots = 0.0, 0.0, 0
        for family in (Family.MOSAIC_TRIMER, Family.MOSAIC_AAH):
            for i in range(1000):
                spec = _random_spec(rng, family)
                num = beta_magnitude(spec).r
                cf = beta_closed_form(spec)
                worst_rel = max(worst_rel, abs(num - cf) / max(1.0, cf))
                if i % 20:
                    continue
                other = "w" if family is Family.MOSAIC_TRIMER else "lambda"
                for param, lo, hi in (("gamma", -3.0, 3.0), (other, -4.0, 4.0)):
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        roots = solve_beta_unity(spec, param, (lo, hi), validate=False)
                    expected = closed_form_roots(spec, param)
                    for r in roots:
                        nroots += 1
                        worst_root = max(worst_root, min((abs(r - e) for e in expected), default=math.inf))
        ok = worst_rel <= 1e-12 and worst_root <= 1e-8
        return ok, f"max |beta| rel. error {worst_rel:.1e} (2000 samples); {nroots} roots, max distance {worst_root:.1e}"

    return _timed(7, "trimer and AAH critical formulas", run)


def criterion_8(seed=0, sizes=(10, 50, 200, 600), **_):
    def run():
        rng = np.random.default_rng(seed + 8)
        worst_root, worst_tr, worst_det = 0.0, 0.0, 0.0
        for _ in range(500):
            n = int(rng.integers(1, 9))
            M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            ev = eigenvalues(M).eigenvalues
            oracle, det = charpoly_roots(M)
            worst_root = max(worst_root, match_multisets(ev, oracle))
            worst_tr = max(worst_tr, abs(ev.sum() - np.trace(M)) / max(1.0, abs(np.trace(M))))
            worst_det = max(worst_det, abs(np.prod(ev) - det) / max(1.0, abs(det)))
        res_notes, res_ok = [], True
        for n in sizes:
            M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            sp = eigenpairs(M)
            rel = sp.residual_max / np.linalg.norm(M)
            unit = np.max(np.abs(np.linalg.norm(sp.eigenvectors, axis=0) - 1.0))
            res_ok &= rel <= 1e-12 and unit <= 1e-12
            res_notes.append(f"n={n}: {rel:.1e}")
        ok = worst_root <= 1e-8 and worst_tr <= 1e-10 and worst_det <= 1e-10 and res_ok
        return ok, (
            f"root error {worst_root:.1e}, trace {worst_tr:.1e}, det {worst_det:.1e}; "
            f"residual/||M||_F " + ", ".join(res_notes)
        )

    return _timed(8, "eigensolver correctness", run)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def run_all(seed: int = 0, threads: int = 1, only=None) -> list[CriterionResult]:
    chosen = sorted(CRITERIA) if only is None else sorted(only)
    return [CRITERIA[k](seed=seed, threads=threads) for k in chosen]
