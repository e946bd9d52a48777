import io
import json
import time
from pathlib import Path

import numpy as np
import pytest

from nhskin import sweep as sweep_mod
from nhskin.eig import ConvergenceError
from nhskin.lattice import ModelSpec
from nhskin.sweep import (
    CSV_HEADER,
    Axis,
    SweepConfig,
    export_csv,
    export_json,
    load_csv,
    load_json,
    run_sweep,
    write_csv,
)

DATA = Path(__file__).parent / "data"


def dimer_config(kappa=1, n1=5, n2=4, L=40, **kw):
    template = ModelSpec("mosaic_dimer", u=-0.5, v=1.0, kappa=kappa, L=L)
    return SweepConfig(template, Axis("u", -2, 2, n1), Axis("gamma", -1.5, 1.5, n2), **kw)


def test_two_by_two_csv():
    pd = run_sweep(dimer_config(n1=2, n2=2))
    buf = io.StringIO()
    write_csv(pd, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 5
    assert pd.meta["L"] == 40 and pd.meta["delta"] == 0.25 and "engine_version" in pd.meta


def test_csv_round_trip(tmp_path):
    pd = run_sweep(dimer_config(compute_winding=True, L=20))
    path = tmp_path / "pd.csv"
    export_csv(pd, path)
    back = load_csv(path)
    np.testing.assert_array_equal(back["dmipr"], pd.dmipr.ravel())
    np.testing.assert_array_equal(back["r"], pd.r.ravel())
    np.testing.assert_array_equal(back["class"], pd.kind.ravel())
    np.testing.assert_array_equal(back["winding"], pd.winding.ravel())
    np.testing.assert_array_equal(back["axis1_value"], np.repeat(pd.axis1.values, pd.shape[1]))
    export_csv(pd, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == path.read_bytes()


def test_json_round_trip(tmp_path):
    pd = run_sweep(dimer_config(n1=5, n2=5))
    path = tmp_path / "pd.json"
    export_json(pd, path)
    back = load_json(path)
    np.testing.assert_array_equal(back.dmipr, pd.dmipr)
    np.testing.assert_array_equal(back.r, pd.r)
    np.testing.assert_array_equal(back.kind, pd.kind)
    assert back.config.to_dict() == pd.config.to_dict()
    assert back.meta == pd.meta
    assert back.overlays == pd.overlays
    doc = json.loads(path.read_text())
    assert doc["schema"] == 1


def test_export_error_names_path(tmp_path):
    pd = run_sweep(dimer_config(n1=2, n2=2, L=10))
    bad = tmp_path / "missing" / "pd.csv"
    with pytest.raises(OSError, match="missing"):
        export_csv(pd, bad)


def test_golden_file():
    cfg = SweepConfig.load(DATA / "dimer_kappa1_sweep.json")
    assert (cfg.axis1.n, cfg.axis2.n, cfg.sites) == (41, 31, 60)
    pd = run_sweep(cfg)
    golden = load_csv(DATA / "dimer_kappa1_golden.csv")
    assert len(golden["dmipr"]) == 41 * 31
    np.testing.assert_allclose(pd.dmipr.ravel(), golden["dmipr"], atol=1e-9, rtol=0)
    np.testing.assert_allclose(pd.r.ravel(), golden["r"], atol=1e-9, rtol=0)
    np.testing.assert_array_equal(pd.kind.ravel(), golden["class"])


def test_thread_count_does_not_change_results():
    cfg = dimer_config(n1=6, n2=5)
    a = run_sweep(cfg, threads=1)
    b = run_sweep(cfg, threads=2)
    np.testing.assert_allclose(a.dmipr, b.dmipr, atol=1e-12, rtol=0)
    np.testing.assert_array_equal(a.kind, b.kind)


def test_near_linear_scaling():
    def wall(n):
        cfg = dimer_config(n1=n, n2=n, L=60)
        t0 = time.perf_counter()
        run_sweep(cfg)
        return time.perf_counter() - t0

    wall(3)
    small = min(wall(6) for _ in range(2))
    large = wall(12)
    assert large <= 1.5 * 4 * small


@pytest.mark.parametrize("kappa, L", [(1, 100), (2, 100), (3, 120)])
def test_mirror_cells_have_opposite_dmipr(kappa, L):
    pd = run_sweep(dimer_config(kappa=kappa, n1=9, n2=7, L=L))
    mirrored = pd.dmipr[:, ::-1]
    # cells with a vanishing hopping are defective, their eigenvectors carry no orientation
    ok = np.isfinite(pd.r) & np.isfinite(pd.r[:, ::-1])
    assert ok.sum() > 30
    assert np.max(np.abs(pd.dmipr + mirrored)[ok]) <= 5e-2


def test_even_kappa_sign_follows_gamma():
    pd = run_sweep(dimer_config(kappa=2, n1=9, n2=8, L=60))
    gamma = pd.axis2.values
    ok = np.isfinite(pd.r)
    signs = np.sign(pd.dmipr)
    want = np.broadcast_to(-np.sign(gamma), signs.shape)
    assert np.all(signs[ok] == want[ok])


def test_trimer_kappa3_two_quadrants():
    template = ModelSpec("mosaic_trimer", u=1, v=2, kappa=3, L=60)
    cfg = SweepConfig(template, Axis("w", -2, 2, 8), Axis("gamma", -1.5, 1.5, 8))
    pd = run_sweep(cfg)
    w, g = np.meshgrid(pd.axis1.values, pd.axis2.values, indexing="ij")
    ok = np.isfinite(pd.r)
    # same structure as a uniform chain in (w, gamma): left for w * gamma > 0
    assert np.all(np.sign(pd.dmipr[ok]) == -np.sign(w * g)[ok])
    labels = {o["label"] for o in pd.overlays}
    assert labels == {"gamma=0", "w=0"}


def test_overlays_are_clipped_to_box():
    pd = run_sweep(dimer_config(n1=2, n2=2, L=10))
    labels = {o["label"] for o in pd.overlays}
    assert labels == {"gamma=0", "u=-v", "u=-gamma^2/v"}
    for o in pd.overlays:
        pts = np.array(o["points"])
        assert np.all((pts[:, 0] >= -2) & (pts[:, 0] <= 2))
        assert np.all((pts[:, 1] >= -1.5) & (pts[:, 1] <= 1.5))


def test_failed_cells_are_marked(monkeypatch):
    real = sweep_mod.eigenpairs

    def flaky(H, **kw):
        if abs(H[1, 0] - 0.5) < 1e-12 or abs(H[0, 1] - 0.5) < 1e-12:
            raise ConvergenceError("stalled", None, (0, 1))
        return real(H, **kw)

    monkeypatch.setattr(sweep_mod, "eigenpairs", flaky)
    cfg = SweepConfig(ModelSpec("hn", t=1, L=20), Axis("t", 0.5, 1.5, 3), Axis("gamma", -0.5, 0.5, 3))
    pd = run_sweep(cfg)
    bad = pd.errors != None  # noqa: E711
    assert bad.any() and not bad.all()
    assert np.all(np.isnan(pd.dmipr[bad]))
    assert np.all(np.isfinite(pd.dmipr[~bad]))
    assert all(e.startswith("ConvergenceError") for e in pd.errors[bad])


def test_config_validation():
    template = ModelSpec("hn", t=1, L=20)
    with pytest.raises(ValueError):
        Axis("gamma", 1, 0, 5)
    with pytest.raises(ValueError):
        Axis("gamma", 0, 1, 1)
    with pytest.raises(ValueError):
        Axis("kappa", 0, 1, 3)
    with pytest.raises(ValueError):
        SweepConfig(template, Axis("gamma", 0, 1, 2), Axis("gamma", 0, 1, 2))
    good = SweepConfig(template, Axis("t", 0.5, 1, 2), Axis("gamma", 0, 1, 2)).to_dict()
    assert SweepConfig.from_dict(good).to_dict() == good
    with pytest.raises(ValueError, match="unknown"):
        SweepConfig.from_dict({**good, "colour": "red"})
    with pytest.raises(ValueError, match="schema"):
        SweepConfig.from_dict({**good, "schema": 2})
