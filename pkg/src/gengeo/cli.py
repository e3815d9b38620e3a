"""Scenario-driven command line front end.

    gengeo verify|flow|cohomology|bundle --scenario FILE [--seed N] [--out DIR] [--dt X] [--t-end X]

A scenario is a JSON object (or {"scenarios": [...]} for a batch run concurrently, one
process per scenario):

    {
      "schema": "gengeo-scenario/1",          optional
      "name": "su2-identities",               optional, used for batch sub-directories
      "task": "verify",                        optional, must match the sub-command if given
      "seed": 4670799,                         optional, overridden by --seed
      "backend": {...},
      "params": {...}
    }

Backend keys by kind (unknown keys are rejected):

    torus  n, g, b, three_form, h, order
    lie    algebra ("su2" | "su2xsu2" | "abelian"), n, kappa, kappa_gamma, g, b, h, order
    chart  n, metric, two_form, three_form, box, h, order

``g`` and ``b`` are constant matrices; ``metric``, ``two_form`` and ``three_form`` are
catalogue references {"name": ..., "params": {...}} (see gengeo.backends).

Exit codes: 0 all checks pass, 1 some check failed, 2 schema error, 3 numerical abort.
GENGEO_TOL_SCALE multiplies every tolerance.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import bundles as bd
from .backends import (
    CHART_METRICS,
    CHART_THREE_FORMS,
    CHART_TWO_FORMS,
    Backend,
    ConstantField,
    Field,
    InvariantTorusBackend,
    LieGroupBackend,
    abelian_structure_constants,
    chart_from_catalogue,
    direct_sum_structure_constants,
    su2_structure_constants,
    volume_three_form,
)
from .connections import default_tol, lift_field, phib_connection, phib_standard_apply
from .curvature import (
    classical_bianchi_residuals,
    double_switch,
    first_bianchi_residual,
    jacobiator,
    jacobiator_closed_form,
    phib_route_gap,
    ricci_phib,
    riemann,
)
from .flows import (
    FlowTrajectory,
    bismut_ricci_lax,
    grf_flow,
    ricci_lax_flow,
    sorted_spectrum,
)
from .gck import GenHermitian, standard_complex_structure
from .gt_linalg import antisymmetrize
from .laplace_cohomology import (
    RankInstability,
    ce_cohomology,
    h1_phib,
    invariant_complex,
    pseudo_cohomology_check,
    reduced_cohomology,
    weitzenbock_residual,
)

SCENARIO_SCHEMA = "gengeo-scenario/1"
REPORT_SCHEMA = "gengeo-report/1"
DEFAULT_SEED = 0x47454F
TASKS = ("verify", "flow", "cohomology", "bundle")

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_ABORT = 0, 1, 2, 3


class SchemaError(ValueError):
    pass


class NumericalAbort(RuntimeError):
    pass


def tol_scale() -> float:
    raw = os.environ.get("GENGEO_TOL_SCALE", "1")
    try:
        v = float(raw)
    except ValueError:
        raise SchemaError(f"GENGEO_TOL_SCALE is not a number: {raw!r}") from None
    if not v > 0:
        raise SchemaError("GENGEO_TOL_SCALE must be positive")
    return v


# ---------------------------------------------------------------------------
# schema


TOP_KEYS = {"schema", "name", "task", "seed", "backend", "params"}
BACKEND_KEYS = {
    "torus": {"kind", "n", "g", "b", "three_form", "h", "order"},
    "lie": {"kind", "algebra", "n", "kappa", "kappa_gamma", "g", "b", "h", "order"},
    "chart": {"kind", "n", "metric", "two_form", "three_form", "box", "h", "order"},
}
PARAM_KEYS = {
    "verify": {"suites", "draws", "forms_per_degree"},
    "flow": {"flow", "t_end", "dt", "every", "dual_route"},
    "cohomology": {"basis"},
    "bundle": {"structure", "k", "c", "rescale", "quadrature"},
}
FLOWS = {"ricci_lax": ricci_lax_flow, "bismut_lax": bismut_ricci_lax, "grf": grf_flow}


def _keys(obj: Any, allowed: set, where: str) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise SchemaError(f"{where}: unknown keys {extra}")
    return obj


def _num(obj: dict, key: str, where: str, default=None, kind=float, positive: bool = False):
    v = obj.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
        raise SchemaError(f"{where}.{key}: expected {kind.__name__}")
    if positive and not v > 0:
        raise SchemaError(f"{where}.{key}: must be positive")
    return kind(v)


def _matrix(v: Any, n: int, where: str, symmetric: bool) -> np.ndarray:
    try:
        M = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: not a numeric matrix") from None
    if M.shape != (n, n) or not np.all(np.isfinite(M)):
        raise SchemaError(f"{where}: expected a finite {n}x{n} matrix")
    if symmetric:
        if np.abs(M - M.T).max() > 1e-12:
            raise SchemaError(f"{where}: metric is not symmetric")
        if np.linalg.eigvalsh(M).min() <= 0:
            raise SchemaError(f"{where}: metric is not positive definite")
    elif np.abs(M + M.T).max() > 1e-12:
        raise SchemaError(f"{where}: 2-form is not antisymmetric")
    return M


def _catalogue(ref: Any, table: dict, where: str) -> tuple[str, dict]:
    ref = _keys(ref, {"name", "params"}, where)
    name = ref.get("name")
    if name not in table:
        raise SchemaError(f"{where}.name: one of {sorted(table)}")
    params = ref.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError(f"{where}.params: expected an object")
    return name, params


def build_backend(spec: Any) -> Backend:
    if not isinstance(spec, dict) or spec.get("kind") not in BACKEND_KEYS:
        raise SchemaError(f"backend.kind: one of {sorted(BACKEND_KEYS)}")
    kind = spec["kind"]
    _keys(spec, BACKEND_KEYS[kind], "backend")
    common = {}
    if "h" in spec:
        common["h"] = _num(spec, "h", "backend", positive=True)
    if "order" in spec:
        common["order"] = _num(spec, "order", "backend", kind=int)
        if common["order"] not in (2, 4, 6):
            raise SchemaError("backend.order: one of [2, 4, 6]")
    try:
        if kind == "lie":
            algebra = spec.get("algebra", "su2")
            if algebra == "su2":
                c = su2_structure_constants()
            elif algebra == "su2xsu2":
                c = direct_sum_structure_constants(su2_structure_constants(), su2_structure_constants())
            elif algebra == "abelian":
                c = abelian_structure_constants(_num(spec, "n", "backend", 3, int, True))
            else:
                raise SchemaError("backend.algebra: one of ['abelian', 'su2', 'su2xsu2']")
            n = c.shape[0]
            if "n" in spec and spec["n"] != n:
                raise SchemaError(f"backend.n: the algebra has dimension {n}")
            kw = dict(kappa=_num(spec, "kappa", "backend", 1.0, positive=True), kappa_gamma=_num(spec, "kappa_gamma", "backend", 1.0))
            if "g" in spec:
                kw["g0"] = _matrix(spec["g"], n, "backend.g", True)
            if "b" in spec:
                kw["b0"] = _matrix(spec["b"], n, "backend.b", False)
            return LieGroupBackend(n=n, c=c, **kw, **common)
        n = _num(spec, "n", "backend", None, int, True)
        if n is None:
            raise SchemaError("backend.n: required")
        if kind == "torus":
            kw = {}
            if "g" in spec:
                kw["g0"] = _matrix(spec["g"], n, "backend.g", True)
            if "b" in spec:
                kw["b0"] = _matrix(spec["b"], n, "backend.b", False)
            if "three_form" in spec:
                name, params = _catalogue(spec["three_form"], CHART_THREE_FORMS, "backend.three_form")
                if name == "volume":
                    if n != 3 or set(params) - {"c"}:
                        raise SchemaError("backend.three_form: volume needs n = 3 and only the parameter c")
                    kw["gamma0"] = volume_three_form(float(params.get("c", 1.0)))
            return InvariantTorusBackend(n=n, **kw, **common)
        names = {}
        for key, table in (("metric", CHART_METRICS), ("two_form", CHART_TWO_FORMS), ("three_form", CHART_THREE_FORMS)):
            if key in spec:
                names[key], names[key + "_params"] = _catalogue(spec[key], table, f"backend.{key}")
        if "box" in spec:
            common["box"] = _num(spec, "box", "backend", positive=True)
        bk = chart_from_catalogue(n, **names, **common)
        bk.g(bk.sample_point(np.random.default_rng(0)))
        return bk
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"backend: {exc}") from None


@dataclass
class Scenario:
    task: str
    backend_spec: dict
    params: dict
    name: str = "scenario"
    seed: int = DEFAULT_SEED

    def backend(self) -> Backend:
        return build_backend(self.backend_spec)


def parse_scenario(obj: Any, task: str) -> Scenario:
    obj = _keys(obj, TOP_KEYS, "scenario")
    if obj.get("schema", SCENARIO_SCHEMA) != SCENARIO_SCHEMA:
        raise SchemaError(f"scenario.schema: expected {SCENARIO_SCHEMA!r}")
    if obj.get("task", task) != task:
        raise SchemaError(f"scenario.task is {obj['task']!r} but the command is {task!r}")
    if "backend" not in obj:
        raise SchemaError("scenario.backend: required")
    params = _keys(obj.get("params", {}), PARAM_KEYS[task], "params")
    seed = _num(obj, "seed", "scenario", DEFAULT_SEED, int)
    name = obj.get("name", "scenario")
    if not isinstance(name, str) or not name or "/" in name:
        raise SchemaError("scenario.name: a non-empty string without '/'")
    sc = Scenario(task, obj["backend"], params, name, seed)
    sc.backend()
    return sc


def load_scenarios(path: Path, task: str) -> list[Scenario]:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario file is not valid JSON: {exc}") from None
    if isinstance(raw, dict) and set(raw) == {"scenarios"}:
        items = raw["scenarios"]
        if not isinstance(items, list) or not items:
            raise SchemaError("scenarios: expected a non-empty list")
        out = [parse_scenario(s, task) for s in items]
        if len({s.name for s in out}) != len(out):
            raise SchemaError("scenarios: names must be distinct")
        return out
    return [parse_scenario(raw, task)]


# ---------------------------------------------------------------------------
# reports


def clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dump_report(report: dict, out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(json.dumps(clean(report), indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class Check:
    name: str
    residual: float
    tol: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def as_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tol": self.tol, "pass": self.passed, **self.detail}


# ---------------------------------------------------------------------------
# verify


def _random_section(bk: Backend, rng: np.random.Generator) -> Callable:
    m = 2 * bk.n
    v0 = rng.normal(size=m)
    if bk.invariant:
        return ConstantField(v0)
    v1 = rng.normal(size=m)
    w = rng.integers(-1, 2, size=bk.n).astype(float) * 2 * np.pi
    ph = rng.uniform(0, 2 * np.pi)
    return Field(
        lambda q: v0 + v1 * math.sin(float(w @ q) + ph),
        lambda q: np.outer(w, v1) * math.cos(float(w @ q) + ph),
    )


def check_phib_routes(bk, rng, draws, scale) -> Check:
    D = phib_connection(bk)
    worst = 0.0
    for _ in range(draws):
        p = bk.sample_point(rng)
        x = rng.normal(size=2 * bk.n)
        y = _random_section(bk, rng)
        r1 = D.apply(x, y, p)
        r2 = phib_standard_apply(bk, x, y, p)
        worst = max(worst, float(np.abs(r1 - r2).max()) / max(1.0, float(np.abs(r1).max())))
    return Check("phib_dual_route", worst, default_tol(bk) * scale, {"draws": draws})


def check_curvature_blocks(bk, rng, draws, scale) -> Check:
    worst = 0.0
    for _ in range(draws):
        _, gap, sc = phib_route_gap(bk, bk.sample_point(rng))
        worst = max(worst, gap / sc)
    return Check("curvature_block_assembly", worst, default_tol(bk) * scale, {"draws": draws})


def check_jacobiator(bk, rng, draws, scale) -> Check:
    D = phib_connection(bk)
    worst = 0.0
    for _ in range(draws):
        p = bk.sample_point(rng)
        signs = tuple(int(s) for s in rng.choice([1, -1], size=3))
        vecs = [rng.normal(size=bk.n) for _ in range(3)]
        fields = [lift_field(bk, ConstantField(v), s) for v, s in zip(vecs, signs)]
        lhs = jacobiator(D, *fields, p)
        rhs = jacobiator_closed_form(bk, p, signs, *vecs)
        worst = max(worst, float(np.abs(lhs - rhs).max()) / max(1.0, float(np.abs(rhs).max())))
    return Check("jacobiator_closed_form", worst, default_tol(bk) * scale, {"draws": draws})


def check_first_bianchi(bk, rng, draws, scale) -> Check:
    worst = max(first_bianchi_residual(bk, bk.sample_point(rng)) for _ in range(draws))
    return Check("first_bianchi", worst, (1e-9 if bk.invariant else 5e-5) * scale, {"draws": draws})


def check_classical_bianchi(bk, rng, draws, scale) -> Check:
    worst = max(max(classical_bianchi_residuals(bk, bk.sample_point(rng))) for _ in range(draws))
    return Check("levi_civita_bianchi", worst, (1e-9 if bk.invariant else 5e-5) * scale, {"draws": draws})


def check_double_switch(bk, rng, draws, scale) -> Check:
    worst = max(double_switch(bk, bk.sample_point(rng)) for _ in range(draws))
    return Check("bismut_double_switch", worst, (1e-9 if bk.invariant else 5e-5) * scale, {"draws": draws})


def check_weitzenbock(bk, rng, per_degree, scale) -> Check:
    if not bk.invariant:
        raise SchemaError("the weitzenbock suite needs an invariant backend")
    p = bk.sample_point(rng)
    m = 2 * bk.n
    worst = 0.0
    for k in range(m + 1):
        for _ in range(per_degree):
            c = antisymmetrize(rng.normal(size=(m,) * k)) if k else np.array(rng.normal())
            worst = max(worst, weitzenbock_residual(bk, ConstantField(c), k, p))
    return Check("weitzenbock", worst, 1e-9 * scale, {"forms_per_degree": per_degree})


def _lie_only(bk):
    if not isinstance(bk, LieGroupBackend):
        raise SchemaError("this suite needs a Lie group backend")


def check_lie_table(bk, rng, draws, scale) -> Check:
    """D_{x_u^+} x_v^+ = -1/2 x^+_{[u,v]}, D_{x_u^-} x_v^- = 1/2 x^-_{[u,v]}, mixed terms zero;
    x_u^+ lifts the right-invariant field, x_v^- the left-invariant one."""
    _lie_only(bk)
    D = phib_connection(bk)
    n = bk.n
    worst = 0.0
    xp = lambda u: lift_field(bk, bk.right_invariant(u), 1)
    xm = lambda u: lift_field(bk, ConstantField(u), -1)
    for _ in range(draws):
        p = bk.sample_point(rng)
        for u in np.eye(n):
            for v in np.eye(n):
                w = bk.bracket(u, v)
                for r in (
                    D.apply(xp(u), xp(v), p) + 0.5 * xp(w)(p),
                    D.apply(xm(u), xm(v), p) - 0.5 * xm(w)(p),
                    D.apply(xp(u), xm(v), p),
                    D.apply(xm(u), xp(v), p),
                ):
                    worst = max(worst, float(np.abs(r).max()))
    return Check("lie_connection_table", worst, 1e-10 * scale, {"draws": draws})


def check_lie_einstein(bk, rng, draws, scale) -> Check:
    _lie_only(bk)
    p = bk.sample_point(rng)
    Rc = ricci_phib(bk, p)
    return Check("lie_einstein_quarter", float(np.abs(Rc.tensor - 0.25 * Rc.metric.bilinear).max()), 1e-10 * scale)


def check_lie_flat(bk, rng, draws, scale) -> Check:
    _lie_only(bk)
    p = bk.sample_point(rng)
    return Check("lie_bismut_flat", max(float(np.abs(riemann(bk, p, s)).max()) for s in (1, -1)), 1e-10 * scale)


def check_lie_jacobiator_zero(bk, rng, draws, scale) -> Check:
    _lie_only(bk)
    D = phib_connection(bk)
    p = bk.sample_point(rng)
    m = 2 * bk.n
    E = [ConstantField(e) for e in np.eye(m)]
    worst = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            for c in range(b + 1, m):
                worst = max(worst, float(np.abs(jacobiator(D, E[a], E[b], E[c], p)).max()))
    return Check("lie_jacobiator_zero", worst, 1e-10 * scale)


def check_lie_betti(bk, rng, draws, scale) -> Check:
    _lie_only(bk)
    reduced = reduced_cohomology(bk)
    ce = ce_cohomology(bk.c)
    gap = float(sum(abs(a - b) for a, b in zip(reduced, ce)) + abs(len(reduced) - len(ce)))
    return Check("lie_betti", gap, 0.0, {"reduced": reduced, "chevalley_eilenberg": ce})


SUITES = {
    "phib_dual_route": check_phib_routes,
    "curvature_blocks": check_curvature_blocks,
    "jacobiator": check_jacobiator,
    "first_bianchi": check_first_bianchi,
    "levi_civita_bianchi": check_classical_bianchi,
    "double_switch": check_double_switch,
    "weitzenbock": check_weitzenbock,
    "lie_table": check_lie_table,
    "lie_einstein": check_lie_einstein,
    "lie_flat": check_lie_flat,
    "lie_jacobiator": check_lie_jacobiator_zero,
    "lie_betti": check_lie_betti,
}
LIE_SUITES = ("lie_table", "lie_einstein", "lie_flat", "lie_jacobiator", "lie_betti")


def default_suites(bk: Backend) -> list[str]:
    out = ["phib_dual_route", "curvature_blocks", "jacobiator", "first_bianchi", "levi_civita_bianchi", "double_switch"]
    if bk.invariant:
        out.append("weitzenbock")
    if isinstance(bk, LieGroupBackend):
        out.extend(LIE_SUITES)
    return out


def run_verify(sc: Scenario, out: Path) -> tuple[int, dict]:
    bk = sc.backend()
    scale = tol_scale()
    suites = sc.params.get("suites", default_suites(bk))
    if not isinstance(suites, list) or any(s not in SUITES for s in suites):
        raise SchemaError(f"params.suites: a list drawn from {sorted(SUITES)}")
    draws = _num(sc.params, "draws", "params", None, int, True)
    per_degree = _num(sc.params, "forms_per_degree", "params", 20, int, True)
    rng = np.random.default_rng(sc.seed)
    checks = []
    for name in suites:
        if name == "weitzenbock":
            arg = per_degree
        elif name == "phib_dual_route":
            arg = draws or 100
        else:
            arg = draws or 3
        try:
            checks.append(SUITES[name](bk, rng, arg, scale))
        except (np.linalg.LinAlgError, FloatingPointError) as exc:
            raise NumericalAbort(f"{name}: {exc}") from None
    ok = all(c.passed for c in checks)
    report = {"checks": [c.as_dict() for c in checks], "status": "pass" if ok else "fail"}
    return (EXIT_OK if ok else EXIT_FAIL), report


# ---------------------------------------------------------------------------
# flow


def vech(M: np.ndarray, strict: bool = False) -> list[float]:
    n = M.shape[0]
    return [float(M[i, j]) for i in range(n) for j in range(i + (1 if strict else 0), n)]


def trajectory_rows(traj: FlowTrajectory, spectrum0: np.ndarray, gaps: list[float] | None):
    n = traj.g[0].shape[0]
    header = ["t"]
    header += [f"g_{i}{j}" for i in range(n) for j in range(i, n)]
    header += [f"b_{i}{j}" for i in range(n) for j in range(i + 1, n)]
    header += ["gb_squared_drift", "self_adjoint", "reconstruction", "spectrum_drift", "min_eig_g"]
    if gaps is not None:
        header.append("equivalence_gap")
    rows = []
    for i, (t, g, b, d, M) in enumerate(zip(traj.times, traj.g, traj.b, traj.diagnostics, traj.operators())):
        drift = float(np.abs(sorted_spectrum(M) - spectrum0).max())
        row = [t] + vech(g) + vech(b, strict=True)
        row += [d["involution"], d["self_adjoint"], d["reconstruction"], drift, d["min_eig_g"]]
        if gaps is not None:
            row.append(gaps[i] if i < len(gaps) else float("nan"))
        rows.append(row)
    return header, rows


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def conformal_fit(traj: FlowTrajectory) -> dict | None:
    """Least-squares slope of a(t)^3 when g stays a multiple of the identity."""
    g = traj.g
    n = g[0].shape[0]
    if any(np.abs(x - x[0, 0] * np.eye(n)).max() > 1e-12 * abs(x[0, 0]) for x in g):
        return None
    t = np.asarray(traj.times)
    a3 = np.asarray([x[0, 0] for x in g]) ** 3
    if len(t) < 2:
        return None
    slope, icpt = np.polyfit(t, a3, 1)
    return {"slope": float(slope), "intercept": float(icpt), "max_fit_residual": float(np.abs(slope * t + icpt - a3).max())}


def run_flow(sc: Scenario, out: Path, dt: float | None = None, t_end: float | None = None) -> tuple[int, dict]:
    bk = sc.backend()
    if not bk.invariant:
        raise SchemaError("flows need an invariant backend")
    name = sc.params.get("flow", "ricci_lax")
    if name not in FLOWS:
        raise SchemaError(f"params.flow: one of {sorted(FLOWS)}")
    dt = dt if dt is not None else _num(sc.params, "dt", "params", 1e-3, positive=True)
    t_end = t_end if t_end is not None else _num(sc.params, "t_end", "params", 1.0, positive=True)
    every = _num(sc.params, "every", "params", 1, int, True)
    dual = sc.params.get("dual_route", False)
    if not isinstance(dual, bool):
        raise SchemaError("params.dual_route: expected a boolean")
    if dual and name == "grf":
        raise SchemaError("params.dual_route compares an operator flow with the tensor flow; pick ricci_lax")
    scale = tol_scale()
    traj = FLOWS[name](bk, t_end=t_end, dt=dt, every=every)
    gaps = None
    if dual:
        other = grf_flow(bk, t_end=t_end, dt=dt, every=every)
        ops = other.operators()
        gaps = [float(np.abs(a - c).max()) for a, c in zip(traj.operators(), ops)]
        if other.status != "ok" and traj.status == "ok":
            traj.status = other.status
    spectrum0 = sorted_spectrum(traj.operators()[0])
    header, rows = trajectory_rows(traj, spectrum0, gaps)
    write_csv(out / "trajectory.csv", header, rows)
    summary = {
        "flow": name,
        "dt": dt,
        "t_end": t_end,
        "samples": len(rows),
        "status": "ok" if traj.status == "ok" else "aborted",
        "final": {"t": traj.times[-1], "g": traj.g[-1], "b": traj.b[-1]},
        "max_gb_squared_drift": max(r[header.index("gb_squared_drift")] for r in rows),
        "max_spectrum_drift": max(r[header.index("spectrum_drift")] for r in rows),
        "min_eig_g": min(r[header.index("min_eig_g")] for r in rows),
    }
    checks = [Check("spectrum_drift", summary["max_spectrum_drift"], 1e-9 * scale)]
    if gaps is not None:
        summary["max_equivalence_gap"] = max(gaps) if gaps else float("nan")
        checks.append(Check("equivalence_gap", summary["max_equivalence_gap"], 1e-7 * scale))
    fit = conformal_fit(traj)
    if fit is not None:
        summary["conformal_fit"] = fit
    summary["checks"] = [c.as_dict() for c in checks]
    if traj.status != "ok":
        return EXIT_ABORT, summary
    return (EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL), summary


# ---------------------------------------------------------------------------
# cohomology


def run_cohomology(sc: Scenario, out: Path) -> tuple[int, dict]:
    bk = sc.backend()
    if not bk.invariant:
        raise SchemaError("cohomology needs an invariant backend")
    basis = sc.params.get("basis", False)
    if not isinstance(basis, bool):
        raise SchemaError("params.basis: expected a boolean")
    warnings = []
    # only left-invariant forms enter the complex, so the dims are of invariant cohomology
    report: dict = {"complex": "invariant"}
    try:
        cx = invariant_complex(bk)
        report["dims"] = reduced_cohomology(bk, cx)
        h1, P = h1_phib(bk)
        report["h1_parallel_route"] = h1
        check, lap, inside = pseudo_cohomology_check(bk, cx)
        report["pseudo_cohomology_1"] = {"check": check, "laplacian_kernel": lap, "inclusion": inside}
        if basis:
            report["parallel_basis"] = P.T
    except RankInstability as exc:
        warnings.append(f"rank threshold ambiguous: {exc}")
    if isinstance(bk, LieGroupBackend):
        report["chevalley_eilenberg"] = ce_cohomology(bk.c)
    report["warnings"] = warnings
    return EXIT_OK, report


# ---------------------------------------------------------------------------
# bundle


def _hermitian_structure(bk: Backend, structure: str) -> GenHermitian:
    if not isinstance(bk, InvariantTorusBackend) or bk.n % 2:
        raise SchemaError("bundle scenarios need an even-dimensional torus backend")
    if np.abs(bk.g0 - np.eye(bk.n)).max() or np.abs(bk.b0).max() or np.abs(bk.gamma0).max():
        raise SchemaError("bundle scenarios use the flat torus with g = identity, b = 0, gamma = 0")
    Ip = standard_complex_structure(bk.n)
    Im = Ip.copy()
    if structure == "bihermitian":
        if bk.n < 4:
            raise SchemaError("params.structure: bihermitian needs n >= 4")
        Im[2:4, 2:4] = -Im[2:4, 2:4]
    elif structure != "kahler":
        raise SchemaError("params.structure: one of ['bihermitian', 'kahler']")
    return GenHermitian(bk, ConstantField(Ip), ConstantField(Im))


def run_bundle(sc: Scenario, out: Path) -> tuple[int, dict]:
    bk = sc.backend()
    hs = _hermitian_structure(bk, sc.params.get("structure", "kahler"))
    n = bk.n
    ks = sc.params.get("k", [0] * (n // 2))
    if not isinstance(ks, list) or len(ks) != n // 2 or any(isinstance(k, bool) or not isinstance(k, int) for k in ks):
        raise SchemaError(f"params.k: a list of {n // 2} integers")
    m = _num(sc.params, "quadrature", "params", 32, int, True)
    scale = tol_scale()
    V = bd.constant_curvature_bundle(hs, ks)
    rng = np.random.default_rng(sc.seed)
    pts = [bk.sample_point(rng) for _ in range(3)]
    deg = bd.degree(V, m=m, dims=(0,))
    dp, dm = bd.classical_degrees(V, m=m, dims=(0,))
    c_star = bd.einstein_constant(V, m=m, dims=(0,))
    c = _num(sc.params, "c", "params", c_star)
    he = bd.he_residual(V, c, pts)
    hit = bd.hitchin_form_residual(V, c, pts)
    tol = 1e-8 * scale
    checks = [
        Check("flatness", max(bd.flatness_residual(V, p) for p in pts), tol),
        Check("curvature_type_11", max(bd.type_residual(V, p) for p in pts), tol),
        Check("chern_decomposition", max(bd.chern_decomposition_residual(V, p) for p in pts), tol),
        Check("degree_halving", abs(deg - 0.5 * (dp + dm)), tol),
        Check("contraction_split", max(bd.contraction_split_residual(V, p) for p in pts), tol),
    ]
    report = {
        "degree": deg,
        "classical_degrees": [dp, dm],
        "slope": deg / V.rank,
        "einstein_constant": c_star,
        "c": c,
        "he_residual": he,
        "hitchin_residual": hit,
        "he_hitchin_agree": (he <= tol) == (hit <= tol),
    }
    checks.append(Check("he_hitchin_covanishing", 0.0 if report["he_hitchin_agree"] else 1.0, 0.0))
    rescale = sc.params.get("rescale")
    if rescale is not None:
        try:
            f = bd.trig_polynomial([(a, k, ph) for a, k, ph in rescale], n)
        except (TypeError, ValueError):
            raise SchemaError("params.rescale: a list of [amplitude, wave vector, phase]") from None
        dims = sorted({i for _, k, _ in rescale for i, ki in enumerate(k) if ki}) or [0]
        d2 = bd.degree(V.rescaled(f), m=m, dims=tuple(dims))
        report["rescaled_degree"] = d2
        checks.append(Check("degree_metric_invariance", abs(d2 - deg), 1e-7 * scale))
    if n == 2:
        report["chern_number"] = bd.chern_number_T2(V)
        checks.append(Check("chern_integrality", abs(report["chern_number"] - round(report["chern_number"])), tol))
    report["checks"] = [ch.as_dict() for ch in checks]
    ok = all(ch.passed for ch in checks)
    return (EXIT_OK if ok else EXIT_FAIL), report


RUNNERS = {"verify": run_verify, "flow": run_flow, "cohomology": run_cohomology, "bundle": run_bundle}


# ---------------------------------------------------------------------------
# entry point


def execute(sc: Scenario, out: Path, dt: float | None = None, t_end: float | None = None) -> int:
    """Run one scenario and write its report; returns the exit code."""
    base = {"schema_version": REPORT_SCHEMA, "task": sc.task, "name": sc.name, "seed": sc.seed, "tol_scale": tol_scale()}
    try:
        if sc.task == "flow":
            code, body = run_flow(sc, out, dt, t_end)
        else:
            code, body = RUNNERS[sc.task](sc, out)
    except SchemaError as exc:
        code, body = EXIT_SCHEMA, {"status": "schema_error", "error": str(exc)}
    except (NumericalAbort, np.linalg.LinAlgError, FloatingPointError) as exc:
        code, body = EXIT_ABORT, {"status": "aborted", "error": str(exc)}
    body.setdefault("status", {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_ABORT: "aborted"}.get(code, "error"))
    dump_report({**base, **body, "exit_code": code}, out)
    return code


def _execute_star(args) -> int:
    return execute(*args)


def combine_codes(codes: list[int]) -> int:
    for c in (EXIT_SCHEMA, EXIT_ABORT, EXIT_FAIL):
        if c in codes:
            return c
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gengeo", description="Generalized-geometry identity checks, flows, cohomology and bundles.")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    ap.add_argument("--seed", type=int, default=None, help=f"seed for random draws (default {DEFAULT_SEED:#x})")
    ap.add_argument("--out", type=Path, default=Path("gengeo-out"), help="output directory")
    ap.add_argument("--dt", type=float, default=None, help="flow step")
    ap.add_argument("--t-end", type=float, default=None, dest="t_end", help="flow end time")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol_scale()
        scenarios = load_scenarios(args.scenario, args.task)
        for x, flag in ((args.dt, "--dt"), (args.t_end, "--t-end")):
            if x is not None and not (math.isfinite(x) and x > 0):
                raise SchemaError(f"{flag} must be positive")
    except SchemaError as exc:
        print(f"gengeo: schema error: {exc}", file=sys.stderr)
        args.out.mkdir(parents=True, exist_ok=True)
        dump_report({"schema_version": REPORT_SCHEMA, "task": args.task, "status": "schema_error", "error": str(exc), "exit_code": EXIT_SCHEMA}, args.out)
        return EXIT_SCHEMA
    if args.seed is not None:
        for sc in scenarios:
            sc.seed = args.seed
    if len(scenarios) == 1:
        code = execute(scenarios[0], args.out, args.dt, args.t_end)
    else:
        jobs = [(sc, args.out / sc.name, args.dt, args.t_end) for sc in scenarios]
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
            codes = list(pool.map(_execute_star, jobs))
        code = combine_codes(codes)
        dump_report(
            {"schema_version": REPORT_SCHEMA, "task": args.task, "scenarios": {sc.name: c for sc, c in zip(scenarios, codes)}, "exit_code": code},
            args.out,
        )
    status = {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_SCHEMA: "schema error", EXIT_ABORT: "aborted"}[code]
    print(f"gengeo {args.task}: {status} ({args.out / 'report.json'})")
    return code


if __name__ == "__main__":
    sys.exit(main())
