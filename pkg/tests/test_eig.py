import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nhskin.acceptance import charpoly_roots
from nhskin.classify import gauge
from nhskin.eig import (
    ConvergenceError,
    Spectrum,
    balance,
    eigenpairs,
    eigenvalues,
    hessenberg,
    read_eigenvectors,
    symmetric_tridiagonal_eigen,
    write_eigenvectors,
)
from nhskin.lattice import ModelSpec, assemble, build_chain
from tests.helpers import match_multisets


def rand_complex(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_two_by_two():
    ev = eigenvalues(np.array([[0, 1.5], [0.5, 0]])).eigenvalues
    assert match_multisets(ev, [np.sqrt(0.75), -np.sqrt(0.75)]) < 1e-14


def test_one_by_one():
    sp = eigenpairs(np.array([[3 - 1j]]))
    assert sp.eigenvalues[0] == 3 - 1j
    assert abs(abs(sp.eigenvectors[0, 0]) - 1) < 1e-15


def test_hn_strong_nonreciprocity_is_imaginary():
    ev = eigenvalues(assemble(build_chain(ModelSpec("hn", t=1, gamma=1.5, L=8)))).eigenvalues
    assert np.max(np.abs(ev.real)) <= 1e-12


def test_random_6x6_against_charpoly(rng):
    M = rand_complex(rng, 6)
    roots, det = charpoly_roots(M)
    ev = eigenvalues(M).eigenvalues
    assert match_multisets(ev, roots) < 1e-8
    assert abs(np.prod(ev) - det) < 1e-10 * max(1, abs(det))


@pytest.mark.parametrize("n", [3, 12, 40, 90])
def test_against_lapack(rng, n):
    M = rand_complex(rng, n)
    assert match_multisets(eigenvalues(M).eigenvalues, np.linalg.eigvals(M)) < 1e-9 * np.linalg.norm(M)


def test_real_input_conjugate_pairs(rng):
    M = rng.normal(size=(25, 25))
    ev = eigenvalues(M).eigenvalues
    assert match_multisets(ev, ev.conj()) < 1e-9 * np.linalg.norm(M)


@given(st.integers(2, 14), st.integers(0, 10**6))
def test_diagonal_similarity_invariance(n, seed):
    rng = np.random.default_rng(seed)
    M = rand_complex(rng, n)
    d = np.exp(rng.uniform(-3, 3, n))
    S = (M / d[:, None]) * d[None, :]
    a = eigenvalues(M).eigenvalues
    b = eigenvalues(S).eigenvalues
    assert match_multisets(a, b) <= 1e-9 * np.linalg.norm(M)


@given(st.integers(1, 16), st.integers(0, 10**6))
def test_trace_det_and_residuals(n, seed):
    rng = np.random.default_rng(seed)
    M = rand_complex(rng, n)
    sp = eigenpairs(M)
    assert len(sp) == n
    assert abs(sp.eigenvalues.sum() - np.trace(M)) <= 1e-10 * max(1, np.linalg.norm(M))
    det = np.linalg.det(M)
    assert abs(np.prod(sp.eigenvalues) - det) <= 1e-9 * max(1, abs(det))
    np.testing.assert_allclose(np.linalg.norm(sp.eigenvectors, axis=0), 1.0, atol=1e-13)
    assert sp.residual_max <= 1e-12 * np.linalg.norm(M)


def test_phase_convention(rng):
    sp = eigenpairs(rand_complex(rng, 10))
    V = sp.eigenvectors
    idx = np.argmax(np.abs(V), axis=0)
    piv = V[idx, np.arange(10)]
    assert np.all(np.abs(piv.imag) < 1e-15) and np.all(piv.real > 0)


def test_jordan_block():
    J = np.array([[0.0, 1.0], [0.0, 0.0]])
    sp = eigenpairs(J)
    np.testing.assert_allclose(sp.eigenvalues, [0, 0], atol=1e-12)
    assert sp.residual_max <= 1e-12 * np.linalg.norm(J)


def test_degenerate_eigenspace_gets_independent_vectors():
    M = np.diag([1.0, 1.0, 1.0, 2.0])
    sp = eigenpairs(M)
    ones = np.flatnonzero(np.abs(sp.eigenvalues - 1) < 1e-12)
    assert len(ones) == 3
    assert np.linalg.matrix_rank(sp.eigenvectors[:, ones], tol=1e-8) == 3


def test_sine_modes():
    L = 10
    sp = eigenpairs(assemble(build_chain(ModelSpec("hn", t=1, gamma=0, L=L))))
    j = np.arange(1, L + 1)
    for e, v in zip(sp.eigenvalues, sp.eigenvectors.T):
        n = int(round(np.arccos(np.clip(e.real / 2, -1, 1)) * (L + 1) / np.pi))
        mode = np.sin(n * j * np.pi / (L + 1))
        mode /= np.linalg.norm(mode)
        assert min(np.linalg.norm(v - mode), np.linalg.norm(v + mode)) < 1e-10


def test_hn_eigenvectors_follow_gauge():
    ch = build_chain(ModelSpec("hn", t=1, gamma=0.5, L=20))
    sp = eigenpairs(assemble(ch))
    d = gauge(ch).entries
    j = np.arange(1, 21)
    for e, v in zip(sp.eigenvalues, sp.eigenvectors.T):
        n = int(round(np.arccos(np.clip(e.real / (2 * np.sqrt(0.75)), -1, 1)) * 21 / np.pi))
        prof = d * np.abs(np.sin(n * j * np.pi / 21))
        prof /= np.linalg.norm(prof)
        np.testing.assert_allclose(np.abs(v), prof, atol=1e-9)
    np.testing.assert_allclose(d[1:] / d[:-1], np.sqrt(0.5 / 1.5))


def test_symmetric_tridiagonal():
    sp = symmetric_tridiagonal_eigen([0, 0, 0], [1, 1])
    np.testing.assert_allclose(sp.eigenvalues, [-np.sqrt(2), 0, np.sqrt(2)], atol=1e-14)
    np.testing.assert_allclose(sp.eigenvectors.T @ sp.eigenvectors, np.eye(3), atol=1e-14)
    assert symmetric_tridiagonal_eigen([5.0], []).eigenvalues[0] == 5.0
    with pytest.raises(ValueError):
        symmetric_tridiagonal_eigen([1, 2], [1, 2])


def test_backends_agree(rng):
    H = assemble(build_chain(ModelSpec("mosaic_dimer", u=-0.5, v=1, gamma=0.7, kappa=1, L=60)))
    a = eigenvalues(H).eigenvalues
    b = eigenvalues(H, backend="lapack").eigenvalues
    assert match_multisets(a, b) < 1e-9


def test_balancing_is_similarity(rng):
    M = rand_complex(rng, 8) * np.exp(rng.uniform(-4, 4, 8))[None, :]
    for method in ("norm", "none"):
        B, log_s = balance(M, method)
        s = np.exp(log_s)
        np.testing.assert_allclose(B, (M * s[None, :]) / s[:, None], rtol=1e-12, atol=1e-12 * np.abs(M).max())
    T = assemble(build_chain(ModelSpec("hn", t=1, gamma=0.6, L=12)))
    B, log_s = balance(T, "symmetrize")
    np.testing.assert_allclose(B, B.T, atol=1e-15)
    with pytest.raises(ValueError):
        balance(M, "symmetrize")


def test_hessenberg_preserves_spectrum(rng):
    M = rand_complex(rng, 12)
    H = hessenberg(M)
    assert np.all(np.tril(H, -2) == 0)
    assert match_multisets(np.linalg.eigvals(H), np.linalg.eigvals(M)) < 1e-10


def test_iteration_cap():
    rng = np.random.default_rng(1)
    with pytest.raises(ConvergenceError) as info:
        eigenvalues(rand_complex(rng, 30), max_iter=3)
    assert info.value.window is not None


def test_input_validation():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        eigenvalues(np.eye(2), backend="magic")


def test_spectrum_json_and_binary(tmp_path, rng):
    sp = eigenpairs(rand_complex(rng, 7))
    d = sp.to_dict()
    assert set(d) >= {"eigenvalues", "residual_max"}
    back = Spectrum.from_dict(d)
    np.testing.assert_array_equal(back.eigenvalues, sp.eigenvalues)
    path = tmp_path / "v.bin"
    write_eigenvectors(path, sp.eigenvectors)
    np.testing.assert_array_equal(read_eigenvectors(path), sp.eigenvectors)
    raw = bytearray(path.read_bytes())
    raw[-1] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="checksum"):
        read_eigenvectors(path)
