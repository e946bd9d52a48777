"""Phase-diagram sweeps over two model parameters.

Each cell builds its own OBC chain, so cells are independent and can be
farmed out to worker processes; results are always assembled by cell index.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .classify import predict_class
from .eig import ConvergenceError, InverseIterationError, eigenpairs
from .lattice import Boundary, ModelSpec, assemble, build_chain
from .nonbloch import DisconnectedError, UnsupportedFamilyError, beta_magnitude, critical_manifold
from .pointgap import WindingError, interior_reference
from .skin import SkinConfig, dipr_columns

__all__ = [
    "Axis",
    "SweepConfig",
    "PhaseDiagram",
    "run_sweep",
    "compute_cell",
    "overlays_for",
    "export_csv",
    "write_csv",
    "export_json",
    "load_json",
    "load_csv",
    "CSV_HEADER",
]

SCHEMA = 1
CSV_HEADER = ["axis1_value", "axis2_value", "dmipr", "class", "r", "winding"]
_SWEEPABLE = {"t", "gamma", "u", "v", "w", "lambda"}


@dataclass(frozen=True)
class Axis:
    param: str
    min: float
    max: float
    n: int

    def __post_init__(self):
        if self.param not in _SWEEPABLE:
            raise ValueError(f"cannot sweep {self.param!r}; choose one of {sorted(_SWEEPABLE)}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"axis {self.param} needs at least 2 samples, got {self.n}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or self.max <= self.min:
            raise ValueError(f"axis {self.param}: need finite min < max, got [{self.min}, {self.max}]")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, int(self.n))

    def to_dict(self) -> dict:
        return {"param": self.param, "min": self.min, "max": self.max, "n": int(self.n)}

    @classmethod
    def from_dict(cls, d) -> "Axis":
        return cls(str(d["param"]), float(d["min"]), float(d["max"]), int(d["n"]))


@dataclass(frozen=True)
class SweepConfig:
    template: ModelSpec
    axis1: Axis
    axis2: Axis
    compute_winding: bool = False
    delta: float = 0.25
    L: int | None = None
    backend: str = "lapack"
    tol: float = 1e-9
    nk: int = 256

    def __post_init__(self):
        if self.axis1.param == self.axis2.param:
            raise ValueError("the two axes must sweep different parameters")
        SkinConfig(self.delta)
        if self.backend not in ("lapack", "qr"):
            raise ValueError(f"unknown backend {self.backend!r}")
        # fail early on a template that cannot be built at the requested size
        self.cell_spec(self.axis1.min, self.axis2.min)

    @property
    def sites(self) -> int:
        return self.template.L if self.L is None else int(self.L)

    def cell_spec(self, x1: float, x2: float) -> ModelSpec:
        return self.template.replace(
            L=self.sites, boundary=Boundary.OBC, **{self.axis1.param: float(x1), self.axis2.param: float(x2)}
        )

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "template": self.template.to_dict(),
            "axis1": self.axis1.to_dict(),
            "axis2": self.axis2.to_dict(),
            "compute_winding": self.compute_winding,
            "delta": self.delta,
            "L": self.sites,
            "backend": self.backend,
            "tol": self.tol,
            "nk": self.nk,
        }

    @classmethod
    def from_dict(cls, d) -> "SweepConfig":
        d = dict(d)
        schema = d.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ValueError(f"unsupported sweep config schema {schema}")
        known = {"template", "axis1", "axis2", "compute_winding", "delta", "L", "backend", "tol", "nk"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown sweep config fields: {sorted(extra)}")
        return cls(
            template=ModelSpec.from_dict(d["template"]),
            axis1=Axis.from_dict(d["axis1"]),
            axis2=Axis.from_dict(d["axis2"]),
            compute_winding=bool(d.get("compute_winding", False)),
            delta=float(d.get("delta", 0.25)),
            L=None if d.get("L") is None else int(d["L"]),
            backend=str(d.get("backend", "lapack")),
            tol=float(d.get("tol", 1e-9)),
            nk=int(d.get("nk", 256)),
        )

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def compute_cell(cfg: SweepConfig, x1: float, x2: float) -> dict:
    """dMIPR, predicted class, |beta| and optionally winding for one grid point."""
    spec = cfg.cell_spec(x1, x2)
    chain = build_chain(spec)
    cls = predict_class(chain)
    out = {"dmipr": math.nan, "class": cls.kind, "degenerate": cls.degenerate, "r": math.nan, "winding": None, "error": None}
    try:
        out["r"] = beta_magnitude(spec, cfg.tol).r
    except DisconnectedError:
        pass
    try:
        sp = eigenpairs(assemble(chain), backend=cfg.backend)
        out["dmipr"] = float(np.mean(dipr_columns(sp.eigenvectors, cfg.delta)))
    except (ConvergenceError, InverseIterationError, np.linalg.LinAlgError) as exc:
        out["error"] = f"{type(exc).__name__}: {exc}"
    if cfg.compute_winding:
        try:
            ref = interior_reference(spec, cfg.nk)
            out["winding"] = 0 if ref is None else ref.winding
        except WindingError as exc:
            out["error"] = f"{type(exc).__name__}: {exc}"
    return out


def _row_worker(args):
    cfg_dict, i = args
    cfg = SweepConfig.from_dict(cfg_dict)
    x1 = cfg.axis1.values[i]
    return [compute_cell(cfg, x1, x2) for x2 in cfg.axis2.values]


def overlays_for(template: ModelSpec, axis1: Axis, axis2: Axis, samples: int = 401) -> list[dict]:
    """Analytic critical curves lying in the (axis1, axis2) plane, clipped to its box."""
    params = {k: template.param(k) for k in ("t", "u", "v", "w", "lambda")}
    try:
        curves = critical_manifold(template.family, template.kappa, params, template.alpha)
    except UnsupportedFamilyError:
        return []
    plane = {axis1.param, axis2.param}
    out = []
    for c in curves:
        if {c.solve_for, c.free} != plane:
            continue
        free_axis = axis1 if c.free == axis1.param else axis2
        solved_axis = axis2 if free_axis is axis1 else axis1
        pts = c.sample(np.linspace(free_axis.min, free_axis.max, samples))
        inside = (pts[:, 1] >= solved_axis.min) & (pts[:, 1] <= solved_axis.max)
        pts = pts[inside]
        if free_axis is axis2:
            pts = pts[:, ::-1]
        if len(pts):
            out.append({"label": c.label, "points": pts.tolist()})
    return out


@dataclass
class PhaseDiagram:
    config: SweepConfig
    dmipr: np.ndarray
    kind: np.ndarray
    degenerate: np.ndarray
    r: np.ndarray
    winding: np.ndarray | None
    errors: np.ndarray
    overlays: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def axis1(self) -> Axis:
        return self.config.axis1

    @property
    def axis2(self) -> Axis:
        return self.config.axis2

    @property
    def shape(self):
        return self.dmipr.shape

    def rows(self):
        """(axis1_value, axis2_value, dmipr, class, r, winding) with axis2 varying fastest."""
        a1, a2 = self.axis1.values, self.axis2.values
        for i in range(len(a1)):
            for j in range(len(a2)):
                w = None if self.winding is None else int(self.winding[i, j])
                yield float(a1[i]), float(a2[j]), float(self.dmipr[i, j]), str(self.kind[i, j]), float(self.r[i, j]), w


def run_sweep(config: SweepConfig, threads: int = 1) -> PhaseDiagram:
    """Evaluate every cell of the grid; rows of axis1 are the unit of work."""
    n1, n2 = config.axis1.n, config.axis2.n
    if threads is None or threads < 1:
        threads = os.cpu_count() or 1
    cfg_dict = config.to_dict()
    jobs = [(cfg_dict, i) for i in range(n1)]
    if threads == 1:
        rows = [_row_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_row_worker, jobs))
    dm = np.array([[c["dmipr"] for c in row] for row in rows], dtype=float).reshape(n1, n2)
    kind = np.array([[c["class"] for c in row] for row in rows], dtype=object).reshape(n1, n2)
    deg = np.array([[c["degenerate"] for c in row] for row in rows], dtype=bool).reshape(n1, n2)
    r = np.array([[c["r"] for c in row] for row in rows], dtype=float).reshape(n1, n2)
    errs = np.array([[c["error"] for c in row] for row in rows], dtype=object).reshape(n1, n2)
    wind = None
    if config.compute_winding:
        wind = np.array([[c["winding"] if c["winding"] is not None else 0 for c in row] for row in rows], dtype=int)
    meta = {
        "template": config.template.to_dict(),
        "L": config.sites,
        "delta": config.delta,
        "tol": config.tol,
        "backend": config.backend,
        "nk": config.nk,
        "compute_winding": config.compute_winding,
        "engine_version": __version__,
    }
    return PhaseDiagram(config, dm, kind, deg, r, wind, errs, overlays_for(config.template, config.axis1, config.axis2), meta)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(pd: PhaseDiagram, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in pd.rows():
        writer.writerow([_fmt(x) for x in row])


def export_csv(pd: PhaseDiagram, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            write_csv(pd, fh)
    except OSError as exc:
        raise OSError(f"cannot write phase diagram to {path}: {exc}") from exc


def load_csv(path) -> dict:
    """Columns of an exported CSV as arrays (winding is ``None`` when absent)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = list(reader)
    cols = list(zip(*rows)) if rows else [()] * len(CSV_HEADER)
    out = {
        "axis1_value": np.array([float(s) for s in cols[0]]),
        "axis2_value": np.array([float(s) for s in cols[1]]),
        "dmipr": np.array([float(s) for s in cols[2]]),
        "class": np.array(cols[3], dtype=object),
        "r": np.array([float(s) for s in cols[4]]),
        "winding": None,
    }
    if rows and all(s != "" for s in cols[5]):
        out["winding"] = np.array([int(s) for s in cols[5]])
    return out


def _nan_to_none(a):
    return [[None if (isinstance(x, float) and math.isnan(x)) else x for x in row] for row in a.tolist()]


def _none_to_nan(a):
    return np.array([[math.nan if x is None else x for x in row] for row in a], dtype=float)


def export_json(pd: PhaseDiagram, path) -> None:
    doc = {
        "schema": SCHEMA,
        "config": pd.config.to_dict(),
        "axis1": pd.axis1.to_dict(),
        "axis2": pd.axis2.to_dict(),
        "dmipr": _nan_to_none(pd.dmipr),
        "class": pd.kind.tolist(),
        "degenerate": pd.degenerate.tolist(),
        "r": _nan_to_none(pd.r),
        "winding": None if pd.winding is None else pd.winding.tolist(),
        "errors": pd.errors.tolist(),
        "overlays": pd.overlays,
        "meta": pd.meta,
    }
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write phase diagram to {path}: {exc}") from exc


def load_json(path) -> PhaseDiagram:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"{path}: unsupported schema {doc.get('schema')}")
    cfg = SweepConfig.from_dict(doc["config"])
    wind = None if doc["winding"] is None else np.array(doc["winding"], dtype=int)
    return PhaseDiagram(
        cfg,
        _none_to_nan(doc["dmipr"]),
        np.array(doc["class"], dtype=object),
        np.array(doc["degenerate"], dtype=bool),
        _none_to_nan(doc["r"]),
        wind,
        np.array(doc["errors"], dtype=object),
        doc["overlays"],
        doc["meta"],
    )
