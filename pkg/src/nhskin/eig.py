"""Dense non-Hermitian eigensolver.

The default ``"qr"`` backend is self-contained: diagonal balancing, Householder
reduction to Hessenberg form, implicitly single-shifted complex QR with
Wilkinson shifts, then inverse iteration for right eigenvectors.  The
``"lapack"`` backend runs ``numpy.linalg.eig`` on the same balanced matrix
and is used where throughput matters (phase-diagram sweeps).

Balancing matters a lot here.  Open nonreciprocal chains are extremely
non-normal, and norm-based (Parlett-Reinsch) balancing leaves a Toeplitz
chain untouched because its row and column norms already agree.  For strictly
tridiagonal input the balancing step instead uses the symmetrizing scaling
``d_{j+1}/d_j = sqrt|t'_j / t_j|``, which makes every bond pair equal in
magnitude.  The scaling is kept in log form since it spans hundreds of
decades for long chains.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Spectrum",
    "ConvergenceError",
    "InverseIterationError",
    "balance",
    "hessenberg",
    "eigenvalues",
    "eigenpairs",
    "symmetric_tridiagonal_eigen",
    "write_eigenvectors",
    "read_eigenvectors",
]

EPS = np.finfo(float).eps
DEFAULT_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """QR iteration hit the iteration cap.

    ``partial`` holds the eigenvalues deflated so far and ``window`` the
    unreduced Hessenberg block that did not converge.
    """

    def __init__(self, msg, partial, window):
        super().__init__(msg)
        self.partial = partial
        self.window = window


class InverseIterationError(RuntimeError):
    def __init__(self, eigenvalue, residual):
        super().__init__(
            f"inverse iteration stagnated for eigenvalue {eigenvalue:.6g} "
            f"(relative residual {residual:.3g})"
        )
        self.eigenvalue = eigenvalue
        self.residual = residual


@dataclass
class Spectrum:
    """Eigenvalues, optional unit-norm right eigenvectors (columns) and residuals."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    iterations: int = 0

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def residual_max(self) -> float:
        if self.residuals is None or len(self.residuals) == 0:
            return 0.0
        return float(np.max(self.residuals))

    def to_dict(self) -> dict:
        ev = np.asarray(self.eigenvalues, dtype=complex)
        return {
            "schema": 1,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
            "residual_max": self.residual_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Spectrum":
        ev = np.array([complex(re, im) for re, im in data["eigenvalues"]])
        return cls(ev)


# ---------------------------------------------------------------- balancing


def _is_tridiagonal(M: np.ndarray) -> bool:
    n = len(M)
    if n < 3:
        return True
    return not np.any(np.triu(M, 2)) and not np.any(np.tril(M, -2))


def _symmetrize_scaling(M):
    n = len(M)
    b = np.diag(M, 1)
    f = np.diag(M, -1)
    ok = (b != 0) & (f != 0)
    step = np.zeros(n - 1)
    with np.errstate(divide="ignore"):
        step[ok] = 0.5 * (np.log(np.abs(f[ok])) - np.log(np.abs(b[ok])))
    log_s = np.concatenate(([0.0], np.cumsum(step)))
    B = np.array(M, dtype=complex if np.iscomplexobj(M) else float)
    idx = np.arange(n - 1)
    # entries recomputed from the geometric mean to avoid overflow in exp(log_s)
    mag = np.sqrt(np.abs(b[ok] * f[ok]))
    B[idx[ok], idx[ok] + 1] = b[ok] / np.abs(b[ok]) * mag
    B[idx[ok] + 1, idx[ok]] = f[ok] / np.abs(f[ok]) * mag
    return B, log_s


def _norm_balance(M, max_sweeps=100):
    B = np.array(M, dtype=complex if np.iscomplexobj(M) else float)
    n = len(B)
    log2s = np.zeros(n)
    for _ in range(max_sweeps):
        done = True
        for i in range(n):
            c = math.sqrt(float(np.sum(np.abs(B[:, i]) ** 2) - abs(B[i, i]) ** 2))
            r = math.sqrt(float(np.sum(np.abs(B[i, :]) ** 2) - abs(B[i, i]) ** 2))
            if c == 0.0 or r == 0.0:
                continue
            e = round(0.5 * math.log2(r / c))
            if e == 0:
                continue
            f = 2.0**e
            if (c * f) ** 2 + (r / f) ** 2 < 0.95 * (c * c + r * r):
                B[:, i] *= f
                B[i, :] /= f
                log2s[i] += e
                done = False
        if done:
            break
    return B, log2s * math.log(2.0)


def balance(M, method: str = "auto"):
    """Diagonal similarity ``B = S^-1 M S``; returns ``(B, log(diag S))``.

    ``method``: ``"auto"`` (symmetrizing for tridiagonal input, norm balancing
    otherwise), ``"symmetrize"``, ``"norm"`` or ``"none"``.
    """
    M = np.asarray(M)
    n = len(M)
    if method == "auto":
        method = "symmetrize" if _is_tridiagonal(M) else "norm"
    if method == "none" or n < 2:
        return np.array(M), np.zeros(n)
    if method == "symmetrize":
        if not _is_tridiagonal(M):
            raise ValueError("symmetrizing balance needs a tridiagonal matrix")
        return _symmetrize_scaling(M)
    if method == "norm":
        return _norm_balance(M)
    raise ValueError(f"unknown balancing method {method!r}")


# ---------------------------------------------------------------- Hessenberg


def hessenberg(A) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity, no Q returned)."""
    H = np.array(A, dtype=complex)
    n = len(H)
    for k in range(n - 2):
        x = H[k + 1 :, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0 or np.all(x[1:] == 0):
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        x[0] += phase * alpha
        v = x / np.linalg.norm(x)
        H[k + 1 :, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1 :, k:])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v.conj())
        H[k + 2 :, k] = 0.0
    return H


def _givens(x: complex, y: complex):
    """(c, s) with c real and [[c, s], [-conj(s), c]] @ [x, y] = [r, 0]."""
    ax = abs(x)
    ay = abs(y)
    if ay == 0.0:
        return 1.0, 0j
    if ax == 0.0:
        return 0.0, y.conjugate() / ay
    nrm = math.hypot(ax, ay)
    return ax / nrm, (x / ax) * y.conjugate() / nrm


def _eig2(a, b, c, d):
    half_tr = 0.5 * (a + d)
    disc = np.sqrt(complex(0.25 * (a - d) ** 2 + b * c))
    return half_tr + disc, half_tr - disc


def _hqr(H: np.ndarray, max_iter: int):
    """Eigenvalues of an upper Hessenberg matrix by implicit single-shift QR."""
    H = np.array(H, dtype=complex)
    n = len(H)
    w = np.empty(n, dtype=complex)
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    hi = n - 1
    total = 0
    since_deflation = 0
    while hi >= 0:
        # find the top of the unreduced block ending at hi
        lo = hi
        while lo > 0:
            s = abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])
            if s == 0.0:
                s = scale
            if abs(H[lo, lo - 1]) <= EPS * s:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            w[hi] = H[hi, hi]
            hi -= 1
            since_deflation = 0
            continue
        if lo == hi - 1:
            w[hi - 1], w[hi] = _eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
            hi -= 2
            since_deflation = 0
            continue

        total += 1
        since_deflation += 1
        if total > max_iter:
            raise ConvergenceError(
                f"QR iteration did not converge within {max_iter} iterations",
                partial=w[hi + 1 :].copy(),
                window=H[lo : hi + 1, lo : hi + 1].copy(),
            )
        if since_deflation % 10 == 0:
            # exceptional shift breaks cycling
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) + abs(H[hi - 1, hi - 2])
        else:
            e1, e2 = _eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
            mu = e1 if abs(e1 - H[hi, hi]) <= abs(e2 - H[hi, hi]) else e2

        x = H[lo, lo] - mu
        y = H[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            c, s = _givens(complex(x), complex(y))
            G = np.array([[c, s], [-s.conjugate(), c]])
            j0 = lo if k == lo else k - 1
            H[k : k + 2, j0 : hi + 1] = G @ H[k : k + 2, j0 : hi + 1]
            if k > lo:
                H[k + 1, k - 1] = 0.0
            i1 = min(k + 3, hi + 1)
            H[lo:i1, k : k + 2] = H[lo:i1, k : k + 2] @ G.conj().T
    return w, total


# ---------------------------------------------------------------- eigenvectors


def _lu_hessenberg_solver(B):
    """Solve with (B - mu I) for a dense or tridiagonal balanced matrix."""
    n = len(B)
    if n >= 3 and _is_tridiagonal(B):
        up = np.diag(B, 1)
        lo = np.diag(B, -1)
        d = np.diag(B)

        def solve(mu, rhs):
            ab = np.zeros((3, n), dtype=complex)
            ab[0, 1:] = up
            ab[1] = d - mu
            ab[2, :-1] = lo
            return sla.solve_banded((1, 1), ab, rhs, check_finite=False)

        return solve

    def solve(mu, rhs):
        # an exactly singular shift is expected here and handled by the caller
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(B - mu * np.eye(n), check_finite=False)
            return sla.lu_solve((lu, piv), rhs, check_finite=False)

    return solve


def _inverse_iteration(B, evals, tol, cluster_tol, max_steps=4):
    n = len(B)
    normB = max(np.linalg.norm(B), np.finfo(float).tiny)
    solve = _lu_hessenberg_solver(B)
    rng = np.random.default_rng(12345)
    X = np.zeros((n, n), dtype=complex)
    # cluster membership: indices of earlier eigenvalues within cluster_tol
    for i, mu in enumerate(evals):
        peers = [j for j in range(i) if abs(evals[j] - mu) <= cluster_tol]
        best = None
        for orthogonalize in ((True, False) if peers else (False,)):
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x /= np.linalg.norm(x)
            shift = mu
            res = np.inf
            for step in range(max_steps):
                try:
                    y = solve(shift, x)
                except (np.linalg.LinAlgError, ValueError):
                    y = None
                if y is None or not np.all(np.isfinite(y)):
                    # exactly singular: nudge the shift off the eigenvalue
                    shift = mu + EPS * normB * (1 + 1j) * (step + 1)
                    continue
                if orthogonalize:
                    P = X[:, peers]
                    y = y - P @ (P.conj().T @ y)
                nrm = np.linalg.norm(y)
                if nrm == 0.0:
                    break
                x = y / nrm
                res = np.linalg.norm(B @ x - mu * x) / normB
                if res <= tol:
                    break
            if best is None or res < best[1]:
                best = (x, res)
            if res <= tol:
                break
        x, res = best
        if not res <= max(tol, 1e3 * EPS):
            raise InverseIterationError(complex(mu), res)
        X[:, i] = x
    return X


def _unscale(X, log_s):
    """Columns of S @ X, normalized, computed without overflow."""
    X = np.asarray(X, dtype=complex)
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(X)) + log_s[:, None]
    top = np.max(logmag, axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    # unit phases via angle(): dividing by a subnormal |X| can overflow
    V = np.exp(1j * np.angle(X)) * np.exp(logmag - top)
    V /= np.linalg.norm(V, axis=0)
    return V


def _fix_phase(V):
    idx = np.argmax(np.abs(V), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(piv) / np.where(piv != 0, piv, 1.0))


def _residuals(M, evals, V):
    return np.linalg.norm(M @ V - V * evals[None, :], axis=0)


def _solve(M, *, vectors, tol, max_iter, balance_method, backend):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    n = len(M)
    if n == 0:
        raise ValueError("empty matrix")
    B, log_s = balance(M, balance_method)
    if backend == "lapack":
        if vectors:
            evals, X = np.linalg.eig(B)
        else:
            evals, X = np.linalg.eigvals(B), None
        evals = evals.astype(complex)
        iters = 0
    elif backend == "qr":
        if max_iter is None:
            max_iter = 60 * n
        Hh = B if _is_tridiagonal(B) else hessenberg(B)
        evals, iters = _hqr(Hh, max_iter)
        X = None
        if vectors:
            cluster_tol = 1e-8 * np.linalg.norm(M)
            X = _inverse_iteration(np.asarray(B, dtype=complex), evals, tol, cluster_tol)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if not vectors:
        return Spectrum(evals, iterations=iters)
    V = _fix_phase(_unscale(X, log_s))
    return Spectrum(evals, V, _residuals(M, evals, V), iters)


def eigenvalues(M, *, tol=DEFAULT_TOL, max_iter=None, balance="auto", backend="qr") -> Spectrum:
    """All eigenvalues of a square matrix (with algebraic multiplicity)."""
    return _solve(M, vectors=False, tol=tol, max_iter=max_iter, balance_method=balance, backend=backend)


def eigenpairs(M, *, tol=DEFAULT_TOL, max_iter=None, balance="auto", backend="qr") -> Spectrum:
    """Eigenvalues with unit-norm right eigenvectors and per-pair residuals.

    The largest-magnitude component of every eigenvector is made real positive.
    """
    return _solve(M, vectors=True, tol=tol, max_iter=max_iter, balance_method=balance, backend=backend)


def symmetric_tridiagonal_eigen(diag, offdiag, vectors=True) -> Spectrum:
    """Real symmetric tridiagonal eigenproblem (LAPACK ``stemr`` via scipy)."""
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    if len(e) != max(len(d) - 1, 0):
        raise ValueError("offdiag must have len(diag) - 1 entries")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise ValueError("non-finite input")
    if len(d) == 1:
        vals = d.copy()
        vecs = np.ones((1, 1))
    elif vectors:
        vals, vecs = sla.eigh_tridiagonal(d, e)
    else:
        vals, vecs = sla.eigh_tridiagonal(d, e, eigvals_only=True), None
    if vecs is None:
        return Spectrum(vals)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    return Spectrum(vals, vecs, _residuals(T, vals, vecs))


# ---------------------------------------------------------------- binary vectors


def write_eigenvectors(path, V) -> None:
    """Binary column-major complex128 array preceded by a one-line JSON header."""
    V = np.asarray(V, dtype="<c16")
    payload = V.tobytes(order="F")
    header = {
        "schema": 1,
        "dimension": V.shape[0],
        "columns": V.shape[1],
        "dtype": "complex128",
        "byteorder": "little",
        "layout": "column-major",
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(payload)


def read_eigenvectors(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    line, _, payload = raw.partition(b"\n")
    header = json.loads(line)
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise ValueError(f"{path}: checksum mismatch")
    shape = (header["dimension"], header["columns"])
    return np.frombuffer(payload, dtype="<c16").reshape(shape, order="F").copy()
