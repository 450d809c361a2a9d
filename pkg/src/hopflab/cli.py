"""Batch experiment runner: ``hopf-lab <experiment> --config <path> [--out <dir>] [--seed <int>]``.

The config is a flat ``key = value`` file with ``#`` comments.  Values are
numbers, names, booleans or comma-separated lists (optionally in brackets).
``n`` and ``alpha`` lists are swept as a product; ``lambda`` and ``Lambda``
lists are zipped into ellipticity pairs.  The key schema lives in
docs/config.md.

Every experiment writes ``summary.json`` (sorted keys, no timings), one or
more CSV tables whose rows carry the config digest, and ``metadata.json``
with the timestamp and runtime.  Exit codes: 0 pass, 1 check failure,
2 usage or config error, 3 solver divergence.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import itertools
import json
import math
import os
import platform
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .barrier import BarrierSpec, certify_barrier
from .freeboundary import (DEFAULT_EPSILONS, FBProblem, FlameProblem, fb_lipschitz_check, flame_sweep,
                           glue, random_glue_input)
from .grid import CartesianGrid2D, GridFunction, RadialGrid
from .operators import EllipticParams, OperatorSpec, radial_controls
from .regularity import (ModulusOfContinuity, c1omega_constants_check, campanato_seminorm,
                         dyadic_expansion, expansion_hypothesis)
from .solver import (BVPProblem, SolverConfig, convergence_study, solve_2d_wide_stencil,
                     solve_radial)
from .verify import (SweepConfig, counterexample_audit, harnack_sweep, hopf_growth_check,
                     hopf_sweep, ledger_csv, normal_derivative, weak_harnack_sweep)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config parsing

def _tuple(kind):
    def parse(text):
        body = text.strip()
        if body.startswith("[") and body.endswith("]"):
            body = body[1:-1]
        items = [t.strip() for t in body.split(",") if t.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(kind(t) for t in items)
    return parse


def _number(text):
    """Floats, with a/b fractions and 2^-k powers allowed."""
    t = text.strip()
    if "^" in t:
        base, exp = t.split("^", 1)
        return float(base) ** float(exp)
    if "/" in t:
        a, b = t.split("/", 1)
        return float(a) / float(b)
    return float(t)


INTS = _tuple(int)
FLOATS = _tuple(_number)

# key -> (parser, default); "experiment", "seed" and "out" are accepted everywhere
_ELLIPTIC = {"n": (INTS, (2,)), "lambda": (FLOATS, (1.0,)), "Lambda": (FLOATS, (2.0,)),
             "alpha": (FLOATS, (0.0,))}
_OPERATOR = {"operator": (str, "pucci_minus")}
_SOLVER = {"residual_tol": (_number, 1e-8), "max_iters": (int, 100),
           "delta_ladder": (FLOATS, (1e-1, 1e-2, 1e-3, 1e-4))}
_SWEEP = {**_ELLIPTIC, "alpha": (FLOATS, (0.0, 1.0, 2.0)), "n": (INTS, (2, 3)), **_OPERATOR,
          "runs": (int, 50), "grid_m": (int, 201), "rhs_amp": (_number, 1.0)}

SCHEMAS = {
    "barrier-certify": {"n": (INTS, (2, 3, 5)), "lambda": (FLOATS, (1.0, 1.0, 0.5)),
                        "Lambda": (FLOATS, (1.0, 2.0, 4.0)), "alpha": (FLOATS, (0.0, 1.0, 2.0)),
                        "M": (_number, 1.0), "R": (_number, 1.0), "samples": (int, 10_000),
                        "tol": (_number, 1e-10)},
    "solve": {**_ELLIPTIC, **_OPERATOR, **_SOLVER, "domain": (str, "ball"), "R": (_number, 1.0),
              "rhs": (_number, 0.0), "outer": (_number, 0.0), "inner": (_number, 0.0),
              "grid_m": (int, 401), "directions": (int, 4)},
    "convergence": {**_ELLIPTIC, **_OPERATOR, **_SOLVER, "profile": (str, "gauss"), "levels": (int, 4),
                    "m0": (int, 101), "min_slope": (_number, 1.5), "max_error": (_number, 1e-4)},
    "harnack-sweep": {**_SWEEP, "scale_tol": (_number, 1e-8)},
    "weak-harnack-sweep": {**_SWEEP, "epsilons": (FLOATS, (0.25, 0.5, 1.0))},
    "hopf-sweep": {**_SWEEP, "A2": (_number, 1.0), "epsilon_exp": (_number, 0.5),
                   "cone_m": (int, 2001), "cone_tol": (_number, 1e-3)},
    "counterexample": {"n": (INTS, (2, 3, 5)), "grid_m": (int, 1025)},
    "flame-sweep": {**_ELLIPTIC, "operator": (str, "laplacian"), "Lambda": (FLOATS, (1.0,)),
                    "alpha": (FLOATS, (0.0, 1.0)), "r0": (_number, 0.2),
                    "epsilons": (FLOATS, DEFAULT_EPSILONS),
                    "grid_m": (int, 4097), "max_slope": (_number, 0.1)},
    "fb-check": {**_ELLIPTIC, "operator": (str, "laplacian"), "Lambda": (FLOATS, (1.0,)),
                 "h": (_number, 1.0), "r0": (_number, 0.3), "grid_m": (int, 2001),
                 "rtol": (_number, 1e-6)},
    "glue-test": {"runs": (int, 200), "grid_m": (int, 41), "radial_m": (int, 201),
                  "eta": (_number, 0.05), "s": (_number, 0.1), "rtol": (_number, 1e-8)},
    "campanato": {"field": (str, "quadratic"), "gamma": (_number, 1.0),
                  "radii": (FLOATS, (0.5, 0.25, 0.125)), "k_max": (int, 10), "tol": (_number, 1e-3)},
    "constants-check": {"field": (str, "quadratic"), "gamma": (_number, 1.0), "T": (_number, 0.0),
                        "rho": (_number, 0.5), "sigma": (_number, 0.5), "R": (_number, 1.0)},
}
COMMON = {"experiment": (str, None), "seed": (int, 0), "out": (str, None)}
EXPERIMENTS = tuple(SCHEMAS)


def parse_config_text(text: str) -> dict:
    """Raw ``key -> value string`` pairs; later duplicates are an error."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def resolve_config(raw: dict, experiment: str) -> dict:
    """Typed config with defaults filled in; unknown keys raise ConfigError naming the key."""
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}; valid experiments: {', '.join(EXPERIMENTS)}")
    schema = {**COMMON, **SCHEMAS[experiment]}
    cfg = {}
    for key, text in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for experiment {experiment}")
        parser = schema[key][0]
        try:
            cfg[key] = parser(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    for key, (_, default) in schema.items():
        cfg.setdefault(key, default)
    cfg["experiment"] = experiment
    return cfg


def config_digest(cfg: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical resolved config (out excluded)."""
    lines = [f"{k}={cfg[k]!r}" for k in sorted(cfg) if k != "out"]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def _pairs(cfg):
    lam, Lam = cfg["lambda"], cfg["Lambda"]
    if len(lam) != len(Lam):
        raise ConfigError("lambda and Lambda lists must have equal length")
    for a, b in zip(lam, Lam):
        if not (0 < a <= b):
            raise ConfigError(f"need 0 < lambda <= Lambda, got ({a}, {b})")
    return list(zip(lam, Lam))


def _param_grid(cfg):
    for n, (lam, Lam), alpha in itertools.product(cfg["n"], _pairs(cfg), cfg["alpha"]):
        try:
            yield EllipticParams(n, lam, Lam, alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _operator(name: str, params: EllipticParams) -> OperatorSpec:
    if name in ("pucci_minus", "pucci_plus"):
        return OperatorSpec(name, params)
    if name == "laplacian":
        if params.lam > 1 or params.Lam < 1:
            raise ConfigError("the Laplacian needs lambda <= 1 <= Lambda")
        return OperatorSpec.laplacian(params)
    raise ConfigError(f"unknown operator {name!r}; expected pucci_minus, pucci_plus or laplacian")


def _solver_config(cfg) -> SolverConfig:
    try:
        return SolverConfig(residual_tol=cfg["residual_tol"], max_iters=cfg["max_iters"],
                            delta_ladder=tuple(cfg["delta_ladder"]), seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _single(cfg, key):
    vals = cfg[key]
    if len(vals) != 1:
        raise ConfigError(f"{key!r} must be a single value for this experiment")
    return vals[0]


# ------------------------------------------------------------------ output

class Outcome:
    """Collected artifacts of one experiment run."""

    def __init__(self, digest: str):
        self.digest = digest
        self.summary = {}
        self.tables = {}
        self.files = {}
        self.passed = True
        self.diverged = False

    def table(self, name: str, header, rows):
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(header) + ["config_digest"])
        for row in rows:
            w.writerow([_cell(v) for v in row] + [self.digest])
        self.tables[name] = buf.getvalue()

    def raw_table(self, name: str, text: str):
        self.tables[name] = text


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write_atomic(path: str, text: str):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ------------------------------------------------------------------ experiments

def run_barrier_certify(cfg, out: Outcome):
    rows, certs = [], {}
    for p in _param_grid(cfg):
        cert = certify_barrier(BarrierSpec(cfg["M"], cfg["R"], p), cfg["samples"], cfg["tol"])
        c = cert.constants
        key = f"n{p.n}_lam{p.lam:g}_Lam{p.Lam:g}_alpha{p.alpha:g}"
        out.files[f"certificates/{key}.json"] = _dumps(cert.as_dict())
        certs[key] = cert.passed
        rows.append([p.n, p.lam, p.Lam, p.alpha, c.beta, c.c0, c.A1, c.A2, c.A3, c.A4,
                     min(cert.margins.values()), cert.passed])
        out.passed &= cert.passed
    out.table("barrier.csv", ["n", "lambda", "Lambda", "alpha", "beta", "c0", "A1", "A2", "A3", "A4",
                              "min_margin", "pass"], rows)
    out.summary["certificates"] = certs


def run_solve(cfg, out: Outcome):
    p = EllipticParams(_single(cfg, "n"), _single(cfg, "lambda"), _single(cfg, "Lambda"),
                       _single(cfg, "alpha"))
    spec = _operator(cfg["operator"], p)
    try:
        prob = BVPProblem(spec, cfg["domain"], cfg["R"], cfg["rhs"], cfg["outer"], cfg["inner"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    scfg = _solver_config(cfg)
    if prob.domain == "disk":
        sol = solve_2d_wide_stencil(prob, scfg, m=cfg["grid_m"], directions=cfg["directions"])
    else:
        sol = solve_radial(prob, scfg, m=cfg["grid_m"])
    names = sol.u.grid.coord_names()
    X = sol.u.grid.coords()
    out.table("solution.csv", list(names) + ["u"],
              [list(x) + [u] for x, u in zip(X, sol.u.values)])
    out.summary["solve"] = sol.metadata()
    out.diverged = not sol.converged


_PROFILES = {
    "gauss": (lambda r: np.exp(-2 * r * r), lambda r: -4 * r * np.exp(-2 * r * r),
              lambda r: (16 * r * r - 4) * np.exp(-2 * r * r)),
    "cosine": (lambda r: np.cos(np.pi * r), lambda r: -np.pi * np.sin(np.pi * r),
               lambda r: -np.pi**2 * np.cos(np.pi * r)),
}


def run_convergence(cfg, out: Outcome):
    if cfg["profile"] not in _PROFILES:
        raise ConfigError(f"unknown profile {cfg['profile']!r}; expected one of {sorted(_PROFILES)}")
    u, du, d2u = _PROFILES[cfg["profile"]]
    rows, studies = [], {}
    for p in _param_grid(cfg):
        spec = _operator(cfg["operator"], p)
        st = convergence_study(spec, u, du, d2u, cfg["levels"], cfg["m0"], _solver_config(cfg))
        ok = st.slope >= cfg["min_slope"] and st.max_error[-1] <= cfg["max_error"]
        key = f"n{p.n}_lam{p.lam:g}_Lam{p.Lam:g}_alpha{p.alpha:g}"
        studies[key] = {"slope": st.slope, "finest_error": st.max_error[-1], "pass": ok,
                        "converged": st.converged}
        rows += [[p.n, p.lam, p.Lam, p.alpha, h, e] for h, e in zip(st.h, st.max_error)]
        out.passed &= ok
        out.diverged |= not st.converged
    out.table("convergence.csv", ["n", "lambda", "Lambda", "alpha", "h", "max_error"], rows)
    out.summary["studies"] = studies


def _sweep_configs(cfg, **extra):
    for lam, Lam in _pairs(cfg):
        try:
            yield SweepConfig(runs=cfg["runs"], seed=cfg["seed"], alphas=tuple(cfg["alpha"]),
                              ns=tuple(cfg["n"]), lam=lam, Lam=Lam, operator=cfg["operator"],
                              m=cfg["grid_m"], rhs_amp=cfg["rhs_amp"], **extra)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _check_sweep_operator(cfg):
    if cfg["operator"] not in ("pucci_minus", "pucci_plus", "laplacian"):
        raise ConfigError(f"unknown operator {cfg['operator']!r}")


def run_harnack_sweep(cfg, out: Outcome):
    _check_sweep_operator(cfg)
    reports, maxima, dev = [], {}, 0.0
    for sc in _sweep_configs(cfg):
        res = harnack_sweep(sc)
        reports += [rep for rep, _ in res["rows"]]
        out.diverged |= not all(mem.converged for _, mem in res["rows"])
        for (n, a), v in res["maxima"].items():
            maxima[f"n={n},lambda={sc.lam:g},Lambda={sc.Lam:g},alpha={a:g}"] = v
        dev = max(dev, res["scale_deviation"])
    finite = all(math.isfinite(r.measured_constant) for r in reports)
    out.passed = finite and dev <= cfg["scale_tol"]
    out.raw_table("harnack.csv", ledger_csv(reports, out.digest))
    out.summary.update({"maxima": maxima, "scale_deviation": dev, "all_finite": finite,
                        "members": len(reports)})


def run_weak_harnack_sweep(cfg, out: Outcome):
    _check_sweep_operator(cfg)
    reports, maxima = [], {}
    for sc in _sweep_configs(cfg, epsilons=tuple(cfg["epsilons"])):
        res = weak_harnack_sweep(sc)
        reports += [rep for rep, _ in res["rows"]]
        out.diverged |= not all(mem.converged for _, mem in res["rows"])
        for (n, a, e), v in res["maxima"].items():
            maxima[f"n={n},lambda={sc.lam:g},Lambda={sc.Lam:g},alpha={a:g},epsilon={e:g}"] = v
    finite = all(math.isfinite(r.measured_constant) for r in reports)
    out.passed = finite
    out.raw_table("weak_harnack.csv", ledger_csv(reports, out.digest))
    out.summary.update({"maxima": maxima, "all_finite": finite, "members": len(reports)})


def cone_check(m: int = 2001, epsilon_exp: float = 0.5) -> dict:
    """A1 ||u||_{L^eps} and the inner normal derivative for u = 1 - |x| on B_1, n = 2."""
    g = RadialGrid(0.0, 1.0, m, 2)
    cone = GridFunction(g, 1 - g.r)
    rep = hopf_growth_check(cone, 0.0, EllipticParams(2), 1.0, epsilon_exp)
    return {"A1_times_norm": rep.measured_constant * rep.extra["norm"],
            "normal_derivative": normal_derivative(cone, [1.0]).value}


def run_hopf_sweep(cfg, out: Outcome):
    _check_sweep_operator(cfg)
    rows, n_pos, bad = [], 0, 0
    for sc in _sweep_configs(cfg):
        res = hopf_sweep(sc, cfg["A2"], cfg["epsilon_exp"])
        for row in res["rows"]:
            mem, g, c = row["member"], row["growth"], row["consistency"]
            out.diverged |= not mem.converged
            positive = row["inf_half"] > 0
            ok = (g.measured_constant > 0 or not positive) and c.passed
            n_pos += positive
            bad += not ok
            rows.append([mem.n, sc.lam, sc.Lam, mem.alpha, mem.seed, g.measured_constant,
                         row["inf_half"], row["dnu"], c.passed, ok])
    cone = cone_check(cfg["cone_m"], cfg["epsilon_exp"])
    cone_ok = abs(cone["A1_times_norm"] - 1) <= cfg["cone_tol"]
    out.passed = bad == 0 and cone_ok
    out.table("hopf.csv", ["n", "lambda", "Lambda", "alpha", "run", "A1", "inf_half", "d_nu",
                           "consistent", "pass"], rows)
    out.summary.update({"members": len(rows), "positive_members": n_pos, "failures": bad,
                        "cone": cone, "cone_pass": cone_ok})


def run_counterexample(cfg, out: Outcome):
    reports = []
    for n in cfg["n"]:
        rep = counterexample_audit(n, cfg["grid_m"])
        reports.append(rep)
        out.files[f"audit_n{n}.json"] = _dumps(rep.as_dict())
        out.passed &= rep.passed
    out.raw_table("counterexample.csv", ledger_csv(reports, out.digest))
    out.summary["audits"] = {f"n={r.inputs['n']}": r.passed for r in reports}


def run_flame_sweep(cfg, out: Outcome):
    rows, reports = [], {}
    cols = ("epsilon", "sup_u", "lip_norm", "beta_sup", "f_sup", "measured_C", "fb_quotient_max",
            "u_center", "lip_quarter", "sharp_C", "converged")
    for p in _param_grid(cfg):
        spec = _operator(cfg["operator"], p)
        try:
            fp = FlameProblem.from_free_boundary_radius(spec, cfg["r0"], epsilons=tuple(cfg["epsilons"]),
                                                        m=cfg["grid_m"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rep = flame_sweep(fp, max_slope=cfg["max_slope"])
        for row in rep.rows:
            rows.append([p.n, p.alpha] + [getattr(row, c) for c in cols])
        reports[f"n={p.n},alpha={p.alpha:g}"] = {k: v for k, v in rep.as_dict().items() if k != "rows"}
        out.passed &= rep.passed
        out.diverged |= not all(r.converged for r in rep.rows)
    out.table("flame.csv", ["n", "alpha"] + list(cols), rows)
    out.summary["sweeps"] = reports


def one_phase_profile(spec: OperatorSpec, slope: float, r0: float):
    """Radial u >= 0 vanishing on B_r0 and solving c1 u'' + c2 u'/r = 0 outside, u'(r0) = slope."""
    ctrl, sense = radial_controls(spec)
    probe = -ctrl[:, 0] + 1e-3 * ctrl[:, 1]
    c1, c2 = ctrl[int(np.argmin(probe) if sense == "min" else np.argmax(probe))]
    k = c2 / c1

    def u(r):
        r = np.maximum(np.asarray(r, dtype=float), r0)
        if abs(k - 1) < 1e-14:
            return slope * r0 * np.log(r / r0)
        return slope * r0**k * (r ** (1 - k) - r0 ** (1 - k)) / (1 - k)

    return u


def run_fb_check(cfg, out: Outcome):
    rows = []
    for p in _param_grid(cfg):
        spec = _operator(cfg["operator"], p)
        g = RadialGrid(0.0, 1.0, cfg["grid_m"], p.n)
        u = GridFunction(g, one_phase_profile(spec, cfg["h"], cfg["r0"])(g.r))
        rep = fb_lipschitz_check(FBProblem(spec, 0.0, cfg["h"]), u, cfg["rtol"])
        rows.append([p.n, p.lam, p.Lam, p.alpha, rep.lhs, rep.rhs, rep.measured_constant,
                     rep.extra.get("fb_quotient_max", 0.0), rep.passed])
        out.passed &= rep.passed
    out.table("fb_check.csv", ["n", "lambda", "Lambda", "alpha", "lip", "bound", "measured_C",
                               "fb_quotient_max", "pass"], rows)
    out.summary["checks"] = len(rows)


def run_glue_test(cfg, out: Outcome):
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 9]))
    disk = CartesianGrid2D(1.0, cfg["grid_m"])
    radial = RadialGrid(0.0, 1.0, cfg["radial_m"], 2)
    rows, fails = [], 0
    for k in range(cfg["runs"]):
        grid = disk if k % 2 else radial
        v_zero = k % 3 == 0
        res = glue(random_glue_input(rng, grid, v_zero), cfg["eta"], cfg["s"], rtol=cfg["rtol"])
        for key, nm in sorted(res.norms.items()):
            rows.append([k, grid.kind, v_zero, key, nm["w"], nm["u_A"] + nm["v_B"], nm["grad_w"],
                         nm["grad_u_A"] + nm["grad_v_B"], res.passed])
        fails += not res.passed
    out.passed = fails == 0
    out.table("glue.csv", ["run", "grid", "v_zero", "p", "norm_w", "norm_sum", "grad_norm_w",
                           "grad_norm_sum", "pass"], rows)
    out.summary.update({"runs": cfg["runs"], "failures": fails})


def _field(name: str, gamma: float):
    """(u, Du, expected Campanato A at gamma = 1 or None, expected p(0))."""
    if name == "quadratic":
        return (lambda x: np.sum(x * x, axis=1), lambda x: 2 * x, 0.5, np.zeros(2))
    if name == "affine":
        a = np.array([2.0, -1.0])
        return (lambda x: 0.5 + x @ a, lambda x: np.broadcast_to(a, x.shape), 0.0, a)
    if name == "power":
        e = 1 + gamma

        def grad(x):
            r = np.linalg.norm(x, axis=1, keepdims=True)
            return np.where(r > 0, e * np.where(r > 0, r, 1.0) ** (e - 2), 0.0) * x

        return (lambda x: np.linalg.norm(x, axis=1) ** e, grad, None, np.zeros(2))
    raise ConfigError(f"unknown field {name!r}; expected quadratic, affine or power")


def run_campanato(cfg, out: Outcome):
    u, _, expected, p0 = _field(cfg["field"], cfg["gamma"])
    centers = [np.zeros(2), np.array([0.25, 0.0])]
    try:
        rep = campanato_seminorm(u, centers, cfg["radii"], cfg["gamma"])
        dy = dyadic_expansion(u, np.zeros(2), cfg["gamma"], cfg["k_max"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    a_ok = expected is None or cfg["gamma"] != 1 or abs(rep.seminorm - expected) <= cfg["tol"]
    p_err = float(np.linalg.norm(dy.gradient - p0))
    out.passed = a_ok and dy.passed and p_err <= 1e-6
    out.table("campanato.csv", ["center", "radius", "fit_error", "scaled_error"],
              [[" ".join(repr(float(x)) for x in c), r, e, s] for c, r, e, s in rep.per_scale])
    out.table("dyadic.csv", ["k", "r_k", "p_k", "c_k", "fit_error"],
              [[k, r, " ".join(repr(float(x)) for x in p), c, e] for k, r, p, c, e in dy.trace])
    out.summary.update({"seminorm": rep.seminorm, "expected": expected, "seminorm_pass": a_ok,
                        "dyadic_gradient": dy.gradient, "gradient_error": p_err,
                        "dyadic_pass": dy.passed, "remainder_constant": dy.remainder_constant,
                        "truncated": dy.truncated})


def run_constants_check(cfg, out: Outcome):
    u, du, _, _ = _field(cfg["field"], cfg["gamma"])
    try:
        omega = ModulusOfContinuity("power", cfg["gamma"])
        T = cfg["T"]
        if T <= 0:
            probe = expansion_hypothesis(u, du, cfg["sigma"], cfg["rho"], omega, 1.0)
            T = max(probe.T_measured * (1 + 1e-9), 1e-12)
        hyp = expansion_hypothesis(u, du, cfg["sigma"], cfg["rho"], omega, T)
        rep = c1omega_constants_check(u, du, cfg["rho"], cfg["sigma"], cfg["R"], omega, T,
                                      hypothesis=hyp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    checks = rep.extra["checks"]
    out.passed = rep.passed
    out.table("constants.csv", ["check", "lhs", "rhs", "pass"],
              [[k, v["lhs"], v["rhs"], v["lhs"] <= v["rhs"] + 1e-10] for k, v in sorted(checks.items())])
    out.summary.update({"T": T, "T_measured": hyp.T_measured, "failed": rep.extra["failed"]})


RUNNERS = {
    "barrier-certify": run_barrier_certify, "solve": run_solve, "convergence": run_convergence,
    "harnack-sweep": run_harnack_sweep, "weak-harnack-sweep": run_weak_harnack_sweep,
    "hopf-sweep": run_hopf_sweep, "counterexample": run_counterexample,
    "flame-sweep": run_flame_sweep, "fb-check": run_fb_check, "glue-test": run_glue_test,
    "campanato": run_campanato, "constants-check": run_constants_check,
}


# ------------------------------------------------------------------ driver

def run(config_path: str | None, experiment: str | None = None, out_dir: str | None = None,
        seed: int | None = None, stderr=None) -> int:
    """Run one experiment and write its artifacts; returns the exit code."""
    stderr = stderr or sys.stderr
    try:
        raw = {}
        if config_path is not None:
            try:
                with open(config_path, encoding="utf-8") as fh:
                    raw = parse_config_text(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        named = raw.get("experiment")
        if experiment in (None, "run"):
            if named is None:
                raise ConfigError(f"no experiment given; valid experiments: {', '.join(EXPERIMENTS)}")
            experiment = named
        elif named is not None and named != experiment:
            raise ConfigError(f"config names experiment {named!r} but {experiment!r} was requested")
        cfg = resolve_config(raw, experiment)
        if seed is not None:
            cfg["seed"] = seed
        out_dir = out_dir or cfg["out"] or os.path.join("hopf-lab-out", experiment)
        digest = config_digest(cfg)
        outcome = Outcome(digest)
        t0 = time.perf_counter()
        started = datetime.datetime.now(datetime.timezone.utc).isoformat()
        try:
            RUNNERS[experiment](cfg, outcome)
        except ConfigError:
            raise
        except ValueError as exc:
            # out-of-range parameters surface from the dataclass validators
            raise ConfigError(f"invalid parameters: {exc}") from None
    except ConfigError as exc:
        print(f"hopf-lab: config error: {exc}", file=stderr)
        return EXIT_CONFIG
    elapsed = time.perf_counter() - t0
    code = EXIT_DIVERGED if outcome.diverged else (EXIT_PASS if outcome.passed else EXIT_FAIL)
    os.makedirs(out_dir, exist_ok=True)
    summary = {"experiment": experiment, "config_digest": digest, "passed": outcome.passed,
               "diverged": outcome.diverged, "exit_code": code,
               "config": {k: v for k, v in cfg.items() if k != "out"}, "results": outcome.summary,
               "tables": sorted(outcome.tables)}
    for name, text in outcome.tables.items():
        _write_atomic(os.path.join(out_dir, name), text)
    for name, text in outcome.files.items():
        path = os.path.join(out_dir, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        _write_atomic(path, text)
    summary_path = os.path.join(out_dir, "summary.json")
    _write_atomic(summary_path, _dumps(summary))
    meta = {"started_utc": started, "elapsed_seconds": elapsed, "version": __version__,
            "python": platform.python_version(), "numpy": np.__version__,
            "config_path": os.path.abspath(config_path) if config_path else None,
            "config_digest": digest}
    _write_atomic(os.path.join(out_dir, "metadata.json"), _dumps(meta))
    if code == EXIT_FAIL:
        print(f"hopf-lab: {experiment} failed; report: {summary_path}", file=stderr)
    elif code == EXIT_DIVERGED:
        print(f"hopf-lab: {experiment}: solver diverged; report: {summary_path}", file=stderr)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hopf-lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}, or 'run' to use the config's experiment key")
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--out", help="output directory (default hopf-lab-out/<experiment>)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    args = ap.parse_args(argv)
    if args.experiment != "run" and args.experiment not in SCHEMAS:
        print(f"hopf-lab: unknown experiment {args.experiment!r}; valid experiments: "
              f"{', '.join(EXPERIMENTS)}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.config, args.experiment, args.out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
