import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from nhskin.eig import eigenpairs
from nhskin.lattice import Family, ModelSpec, assemble, build_chain
from nhskin.nonbloch import (
    DisconnectedError,
    SkinSide,
    UnsupportedFamilyError,
    beta_closed_form,
    beta_magnitude,
    closed_form_roots,
    critical_manifold,
    dimer_dispersion,
    kappa_class,
    solve_beta_unity,
)
from nhskin.skin import dmipr

S2 = 1 / math.sqrt(2)
reals = st.floats(-2, 2, allow_nan=False)


def dimer(**kw):
    base = dict(u=-0.5, v=1.0, kappa=1, L=100)
    base.update(kw)
    return ModelSpec("mosaic_dimer", **base)


def test_dimer_critical_value():
    res = beta_magnitude(dimer(gamma=-S2))
    assert res.r == pytest.approx(1, abs=1e-12)
    assert res.side is SkinSide.CRITICAL
    assert res.to_dict() == {"r": res.r, "side": "critical"}


@given(st.floats(-1.4, 1.4))
def test_odd_kappa_share_expression(g):
    assume(abs(abs(g) - 0.5) > 1e-6 and abs(abs(g) - 1) > 1e-6)
    r1 = beta_magnitude(dimer(gamma=g, kappa=1, L=6)).r
    for kappa in (3, 5, 7):
        assert beta_magnitude(dimer(gamma=g, kappa=kappa, L=2 * kappa)).r == pytest.approx(r1, rel=1e-12)
    expr = math.sqrt(abs((-0.5 - g) * (1 - g) / ((-0.5 + g) * (1 + g))))
    assert r1 == pytest.approx(expr, rel=1e-12)


def test_reciprocal_gives_one():
    for fam in Family:
        assert beta_magnitude(ModelSpec(fam, gamma=0.0, t=1, u=0.3, v=1.2, w=-0.8, lam=0.4, kappa=3, L=36)).r == 1.0


def test_trimer_expression():
    for g, w in [(0.3, -0.8), (1.7, 0.4), (-0.6, 2.2)]:
        r = beta_magnitude(ModelSpec("mosaic_trimer", u=1, v=2, w=w, gamma=g, kappa=1, L=3)).r
        want = math.sqrt(abs((1 - g) * (2 - g) * (w - g) / ((1 + g) * (2 + g) * (w + g))))
        assert r == pytest.approx(want, rel=1e-13)


def test_sides():
    assert beta_magnitude(ModelSpec("hn", t=1, gamma=0.5, L=10)).side is SkinSide.LEFT
    assert beta_magnitude(ModelSpec("hn", t=1, gamma=-0.5, L=10)).side is SkinSide.RIGHT


def test_disconnected():
    with pytest.raises(DisconnectedError):
        beta_magnitude(ModelSpec("hn", t=1, gamma=1, L=10))
    with pytest.raises(DisconnectedError):
        beta_magnitude(dimer(u=0.0, gamma=0.3, kappa=2, L=40))


def _random_spec(draw_fam, p, kappa):
    return ModelSpec(draw_fam, t=p[0], u=p[1], v=p[2], w=p[3], lam=p[3], gamma=p[4], kappa=kappa, L=12 * kappa)


@given(st.sampled_from(list(Family)), st.lists(reals, min_size=5, max_size=5), st.integers(1, 8))
def test_symmetry_under_gamma_flip(fam, p, kappa):
    spec = _random_spec(fam, p, kappa)
    try:
        a = beta_magnitude(spec).log_r
        b = beta_magnitude(spec.replace(gamma=-spec.gamma)).log_r
    except DisconnectedError:
        return
    assert a + b == pytest.approx(0, abs=1e-12)


def test_product_formula_matches_closed_forms():
    rng = np.random.default_rng(5)
    for fam in Family:
        for _ in range(1000):
            p = rng.uniform(-2, 2, 5)
            spec = _random_spec(fam, p, int(rng.integers(1, 9)))
            try:
                a = beta_magnitude(spec).r
            except DisconnectedError:
                continue
            assert beta_closed_form(spec) == pytest.approx(a, rel=1e-11)


def test_kappa_class():
    assert [kappa_class("mosaic_dimer", k) for k in (1, 2, 3, 4)] == [1, 0, 1, 0]
    assert [kappa_class("mosaic_trimer", k) for k in (1, 2, 3, 6)] == [1, 2, 0, 0]
    assert [kappa_class("mosaic_aah", k) for k in (1, 2, 3, 4, 5)] == [1, 2, 3, 0, 1]
    with pytest.raises(UnsupportedFamilyError):
        kappa_class("mosaic_aah", 1, (1, 3))


def test_critical_manifold_sets():
    labels = lambda *a, **k: sorted(c.label for c in critical_manifold(*a, **k))  # noqa: E731
    assert labels("mosaic_dimer", 3) == sorted(["gamma=0", "u=-v", "u=-gamma^2/v"])
    assert labels("mosaic_dimer", 2) == ["gamma=0"]
    assert len(labels("mosaic_trimer", 2)) == 3
    assert labels("mosaic_trimer", 3) == sorted(["gamma=0", "w=0"])
    assert len(labels("mosaic_aah", 1)) == 5
    assert len(labels("mosaic_aah", 2)) == 3
    assert labels("mosaic_aah", 4) == ["gamma=0"]
    assert "lambda=-t" in labels("mosaic_aah", 4, include_precluded=True)


def test_critical_manifold_examples():
    curves = {c.label: c for c in critical_manifold("mosaic_dimer", 1, {"v": 1})}
    g = curves["u=-gamma^2/v"]
    assert g(np.array([S2]))[0] == pytest.approx(-0.5)
    assert closed_form_roots(dimer(gamma=0.0), "gamma") == pytest.approx([-S2, 0, S2])

    tri = {c.label: c for c in critical_manifold("mosaic_trimer", 1, {"u": 1, "v": 2})}
    assert tri["w=-(uv+gamma^2)/(u+v)"](np.array([1.0]))[0] == pytest.approx(-1)

    aah = critical_manifold("mosaic_aah", 1, {"t": 1})
    vals = sorted(float(c(np.array([0.0]))[0]) for c in aah if c.solve_for == "lambda")
    assert vals == pytest.approx([-math.sqrt(2), -1, 1, math.sqrt(2)])


@given(st.sampled_from(list(Family)), st.lists(reals, min_size=5, max_size=5), st.integers(1, 8))
def test_closed_form_roots_give_unit_beta(fam, p, kappa):
    spec = _random_spec(fam, p, kappa)
    for g in closed_form_roots(spec, "gamma"):
        try:
            assert beta_magnitude(spec.replace(gamma=g)).log_r == pytest.approx(0, abs=1e-9)
        except DisconnectedError:
            pass


def test_curve_sampling_drops_undefined():
    aah = {c.label: c for c in critical_manifold("mosaic_aah", 2, {"t": 1})}
    pts = aah["lambda=+sqrt(t^2+gamma^2)"].sample(np.linspace(-1, 1, 5))
    assert pts.shape == (5, 2)
    tri = critical_manifold("mosaic_trimer", 1, {"u": 1, "v": -1})
    for c in tri:
        assert np.all(np.isfinite(c.sample(np.linspace(-1, 1, 7))))


def test_solve_examples():
    assert solve_beta_unity(dimer(), "gamma", (-1.5, 1.5)) == pytest.approx([-S2, 0, S2], abs=1e-10)
    assert solve_beta_unity(dimer(u=0.5), "gamma", (-1.5, 1.5)) == pytest.approx([0], abs=1e-10)
    aah = ModelSpec("mosaic_aah", t=1, lam=0.5, kappa=2, L=8)
    assert solve_beta_unity(aah, "gamma", (-2, 2)) == pytest.approx([0], abs=1e-10)
    assert solve_beta_unity(dimer(u=0.5), "gamma", (0.1, 0.4)) == []
    with pytest.raises(ValueError):
        solve_beta_unity(dimer(), "gamma", (1, -1))


def test_solve_in_other_parameters():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        roots = solve_beta_unity(dimer(gamma=0.5), "u", (-2, 2))
    assert roots == pytest.approx([-1, -0.25], abs=1e-10)
    tri = ModelSpec("mosaic_trimer", u=1, v=2, gamma=0.5, kappa=1, L=3)
    assert solve_beta_unity(tri, "w", (-3, 3)) == pytest.approx([-0.75, -1 / 3], abs=1e-10)


def test_solve_flat_region_warns():
    with pytest.warns(UserWarning, match="whole"):
        assert solve_beta_unity(dimer(gamma=0.0, kappa=2, L=8), "u", (-2, 2)) == []


def test_roots_cross_validate():
    rng = np.random.default_rng(3)
    for _ in range(60):
        fam = [Family.MOSAIC_DIMER, Family.MOSAIC_TRIMER, Family.MOSAIC_AAH][rng.integers(3)]
        spec = _random_spec(fam, rng.uniform(-2, 2, 5), int(rng.integers(1, 9)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                roots = solve_beta_unity(spec, "gamma", (-2.5, 2.5), validate=False)
            except DisconnectedError:
                continue
        expected = closed_form_roots(spec, "gamma")
        for r in roots:
            assert min(abs(r - e) for e in expected) < 1e-8


def test_dimer_dispersion():
    k = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    ep, em = dimer_dispersion(0.0, 0.0, 0.0, k)
    # u = -v: the radicand is real for every k
    rad = dimer_dispersion(-0.8, 0.8, 0.4, k)[0] ** 2
    assert np.max(np.abs(rad.imag)) < 1e-14
    # u = -gamma^2/v: no cos k dependence in the radicand
    g = 0.6
    rad = dimer_dispersion(-(g**2), 1.0, g, k)[0] ** 2
    np.testing.assert_allclose(rad.real, rad.real[0], atol=1e-13)
    p, m = dimer_dispersion(0.3, 1.1, 0.0, 0.0)
    assert sorted([p.real, m.real]) == pytest.approx([-1.4, 1.4])
    np.testing.assert_allclose(ep, -em)


def test_prediction_consistency():
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 200:
        fam = [Family.HN, Family.MOSAIC_DIMER, Family.MOSAIC_TRIMER][rng.integers(3)]
        kappa = int(rng.integers(1, 5))
        spec = _random_spec(fam, rng.uniform(-1.5, 1.5, 5), kappa)
        spec = spec.replace(L=spec.unit_cell * math.ceil(60 / spec.unit_cell))
        try:
            lr = beta_magnitude(spec).log_r
        except DisconnectedError:
            continue
        if abs(lr) < 0.05 or np.min(np.abs(build_chain(spec).products)) < 0.01:
            continue
        H = assemble(build_chain(spec))
        d = dmipr(eigenpairs(H, backend="lapack"))
        assert np.sign(d) == np.sign(lr), (spec, d, lr)
        checked += 1
