"""Empirical checks of weak Harnack, Harnack and boundary-growth inequalities.

Every check returns an :class:`InequalityReport`.  Measured constants are
ratios of the two sides with the unknown universal constant set to one, so
they are empirical upper envelopes, not proofs.  The weak-Harnack exponent
``epsilon_exp`` is an input (default 0.5): its true value is not explicit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .grid import (Ball, GridFunction, RadialGrid, discrete_hessian, dist_to_boundary, gradient_norm,
                   inf_sup, lp_norm)
from .operators import EllipticParams, OperatorSpec, pucci_minus, radial_F
from .solver import BVPProblem, SolverConfig, solve_radial

ABS_TOL = 1e-8

LEDGER_COLUMNS = ("name", "n", "lambda", "Lambda", "alpha", "epsilon", "constant", "pass",
                  "seed", "grid_m", "residual")


def report_inputs(params: EllipticParams, epsilon=None, seed=None, grid_m=None, residual=None) -> dict:
    return {**params.as_dict(), "epsilon": epsilon, "seed": seed, "grid_m": grid_m, "residual": residual}


@dataclass
class InequalityReport:
    """lhs <= rhs (+ tolerance) with the measured constant lhs / (rhs without C)."""

    name: str
    lhs: float
    rhs: float
    measured_constant: float
    passed: bool
    inputs: dict
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "measured_constant": self.measured_constant, "pass": self.passed,
                "inputs": dict(self.inputs), "notes": self.notes, "extra": dict(self.extra)}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=float)

    def ledger_row(self) -> list:
        i = self.inputs
        vals = [self.name, i.get("n"), i.get("lambda"), i.get("Lambda"), i.get("alpha"),
                i.get("epsilon"), self.measured_constant, self.passed, i.get("seed"),
                i.get("grid_m"), i.get("residual")]
        return ["" if v is None else (repr(float(v)) if isinstance(v, float) else str(v)) for v in vals]


def ledger_csv(reports, digest: str | None = None, header: bool = True) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(list(LEDGER_COLUMNS) + (["config_digest"] if digest else []))
    for rep in reports:
        w.writerow(rep.ledger_row() + ([digest] if digest else []))
    return buf.getvalue()


def append_ledger(path, reports, digest: str | None = None) -> None:
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        fh.write(ledger_csv(reports, digest, header=new))


# ------------------------------------------------------------------ helpers

def _radius(grid) -> float:
    return grid.r_max if grid.kind == "radial" else grid.L


def _field(f, grid) -> np.ndarray:
    if isinstance(f, GridFunction):
        return np.asarray(f.values)
    if callable(f):
        return np.asarray(GridFunction.from_callable(grid, f).values)
    if np.ndim(f) > 0:
        vals = np.asarray(f, dtype=float).reshape(-1)
        if vals.size != grid.size:
            raise ValueError("rhs array does not match the grid")
        return vals
    return np.full(grid.size, float(f))


def _f_term(f, grid, alpha: float, positive_only: bool = False) -> float:
    vals = _field(f, grid)
    if positive_only:
        vals = np.maximum(vals, 0.0)
    return float(np.max(np.abs(vals))) ** (1 / (1 + alpha)) if vals.size else 0.0


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num <= 0 else math.inf


def _require_nonnegative(u: GridFunction, tol: float):
    worst = float(u.values.min())
    if worst < -tol:
        k = int(np.argmin(u.values))
        raise ValueError(f"u must be nonnegative: u = {worst:.3e} at node {k}")


# ------------------------------------------------------------------ Harnack

def weak_harnack_ratio(u: GridFunction, f, params: EllipticParams, epsilon_exp: float = 0.5,
                       tol: float = ABS_TOL, seed=None, residual=None) -> InequalityReport:
    """||u||_{L^{eps/2}(B_{R/2})} against inf_{B_{R/2}} u + ||f||_inf^{1/(1+alpha)}."""
    _require_nonnegative(u, tol)
    grid = u.grid
    half = Ball(_radius(grid) / 2)
    lhs = lp_norm(u.with_values(np.maximum(u.values, 0.0)), epsilon_exp / 2, half)
    lo, _ = inf_sup(u, half)
    rhs = max(lo, 0.0) + _f_term(f, grid, params.alpha)
    C = _ratio(lhs, rhs)
    notes = "0/0 reported as constant 0" if lhs == 0 and rhs == 0 else ""
    return InequalityReport("weak_harnack", lhs, rhs, C, math.isfinite(C),
                            report_inputs(params, epsilon_exp, seed, grid.size, residual), notes)


def harnack_ratio(u: GridFunction, f, params: EllipticParams, tol: float = ABS_TOL, seed=None,
                  residual=None) -> InequalityReport:
    """sup_{B_{R/2}} u against inf_{B_{R/2}} u + ||f||_inf^{1/(1+alpha)}."""
    _require_nonnegative(u, tol)
    grid = u.grid
    lo, hi = inf_sup(u, Ball(_radius(grid) / 2))
    rhs = max(lo, 0.0) + _f_term(f, grid, params.alpha)
    C = _ratio(hi, rhs)
    return InequalityReport("harnack", hi, rhs, C, math.isfinite(C),
                            report_inputs(params, None, seed, grid.size, residual))


# ------------------------------------------------------------------ boundary growth

def _growth_nodes(grid) -> np.ndarray:
    if grid.kind == "radial":
        mask = np.ones(grid.m, dtype=bool)
        mask[-1] = False
        return mask
    return grid.interior.copy()


def hopf_growth_check(u: GridFunction, f, params: EllipticParams, A2: float = 1.0,
                      epsilon_exp: float = 0.5, tol: float = ABS_TOL, seed=None,
                      residual=None, norm: str = "lp") -> InequalityReport:
    """Largest A1 with u >= (A1 ||u||_{L^eps(B_{R/2})} - A2 ||f^+||^{1/(1+alpha)}) dist(x, dB_R).

    A1 = min over nodes off the boundary of (u/dist + A2 ||f^+||^{1/(1+alpha)}) / ||u||.
    ``norm="sup"`` uses sup_{B_{R/2}} u instead of the L^eps quasi-norm (the
    two-sided variant).  Passes when A1 > 0; a zero norm is a vacuous pass.
    """
    _require_nonnegative(u, tol)
    grid = u.grid
    R = _radius(grid)
    half = Ball(R / 2)
    if norm == "lp":
        N = lp_norm(u.with_values(np.maximum(u.values, 0.0)), epsilon_exp, half)
    elif norm == "sup":
        N = inf_sup(u, half)[1]
    else:
        raise ValueError("norm must be 'lp' or 'sup'")
    inputs = report_inputs(params, epsilon_exp, seed, grid.size, residual)
    F = _f_term(f, grid, params.alpha, positive_only=True)
    if N <= 0:
        return InequalityReport("hopf_growth", 0.0, 0.0, 0.0, True, inputs, "vacuous: zero norm",
                                {"A1": 0.0, "A2": A2, "norm": N, "f_term": F})
    d = dist_to_boundary(grid, Ball(R)).values
    mask = _growth_nodes(grid) & (d > 0)
    q = u.values[mask] / d[mask] + A2 * F
    k = int(np.argmin(q))
    A1 = float(q[k] / N)
    where = grid.coords()[np.flatnonzero(mask)[k]].tolist()
    return InequalityReport("hopf_growth", A1 * N, float(q[k]), A1, A1 > 0, inputs, "",
                            {"A1": A1, "A2": A2, "norm": N, "norm_kind": norm, "f_term": F,
                             "argmin": where})


@dataclass
class NormalDerivative:
    value: float
    quotients: np.ndarray
    offsets: np.ndarray
    richardson: np.ndarray

    @property
    def raw(self) -> float:
        return float(self.quotients[-1])


def _sampler(u, n: int):
    """Point evaluator for a GridFunction (interpolated) or a callable of points."""
    if not isinstance(u, GridFunction):
        return lambda pts: np.asarray(u(np.atleast_2d(pts)), dtype=float).reshape(-1)
    grid = u.grid
    if grid.kind == "radial":
        return lambda pts: np.interp(np.linalg.norm(np.atleast_2d(pts), axis=1), grid.r, u.values)
    from scipy.interpolate import CloughTocher2DInterpolator
    interp = CloughTocher2DInterpolator(grid.points, u.values)
    return lambda pts: np.asarray(interp(np.atleast_2d(pts)), dtype=float).reshape(-1)


def normal_derivative(u, boundary_point, offsets=None, R: float | None = None,
                      tol: float = 1e-8) -> NormalDerivative:
    """Inner normal derivative at x0 on dB_R from quotients (u(x0 + t nu) - u(x0)) / t.

    ``u`` is a GridFunction or a callable of an (k, n) point array.  Offsets
    default to dyadic multiples of the grid spacing (or 2^-3 .. 2^-7 for
    callables).  Successive quotients are Richardson-extrapolated assuming an
    O(t) error; ``value`` is the last extrapolant.
    """
    x0 = np.atleast_1d(np.asarray(boundary_point, dtype=float))
    if isinstance(u, GridFunction):
        grid = u.grid
        R = _radius(grid) if R is None else R
        if grid.kind == "radial" and x0.size == 1:
            x0 = np.array([x0[0], 0.0])
        h = grid.h
        default = h * 2.0 ** np.arange(4, -1, -1)
    else:
        R = 1.0 if R is None else R
        default = 2.0 ** -np.arange(3, 8)
    n = x0.size
    if abs(np.linalg.norm(x0) - R) > 1e-12 * max(1.0, R):
        raise ValueError(f"point {x0.tolist()} is not on the sphere of radius {R}")
    t = np.asarray(default if offsets is None else offsets, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) >= 0):
        raise ValueError("offsets must be positive and strictly decreasing")
    nu = -x0 / np.linalg.norm(x0)
    ev = _sampler(u, n)
    u0 = float(ev(x0[None, :])[0])
    if abs(u0) > tol:
        raise ValueError(f"u does not vanish at the boundary point (u = {u0:.3e})")
    vals = ev(x0[None, :] + t[:, None] * nu[None, :])
    q = (vals - u0) / t
    if len(t) > 1:
        ratio = t[:-1] / t[1:]
        rich = (ratio * q[1:] - q[:-1]) / (ratio - 1)
    else:
        rich = q.copy()
    return NormalDerivative(float(rich[-1]), q, t, rich)


def hopf_consistency(growth: InequalityReport, dnu: float, A2: float = 1.0, tol: float = ABS_TOL,
                     slack: float = 0.0) -> InequalityReport:
    """A1 <= (d_nu u + A2 ||f^+||^{1/(1+alpha)}) / ||u|| + tolerance, the boundary limit of (A)."""
    ex = growth.extra
    N = ex.get("norm", 0.0)
    if N <= 0:
        return InequalityReport("hopf_consistency", 0.0, 0.0, 0.0, True, growth.inputs, "vacuous")
    bound = (dnu + A2 * ex["f_term"]) / N
    A1 = ex["A1"]
    return InequalityReport("hopf_consistency", A1, bound, _ratio(A1, bound),
                            A1 <= bound + tol + slack, growth.inputs, "",
                            {"dnu": dnu, "slack": slack})


# ------------------------------------------------------------------ large gradients

def _pucci_minus_field(u: GridFunction, params: EllipticParams) -> np.ndarray:
    H = discrete_hessian(u)
    if u.grid.kind == "radial":
        return radial_F(OperatorSpec.pucci_minus(params), H[:, 0], H[:, 1])
    return np.array([pucci_minus(Hk, params) for Hk in H])


def large_gradient_reduction_check(u: GridFunction, f, params: EllipticParams, gamma: float,
                                   tol: float = ABS_TOL, residual: float = 0.0, seed=None,
                                   margin: float = 2.0) -> InequalityReport:
    """M^-(D^2 u) <= gamma^-alpha ||f||_inf wherever |Du| >= gamma.

    Nodes within ``margin * h`` of a node with |Du| < gamma, and domain boundary
    nodes, are excluded (their discrete gradients are ambiguous at stencil scale).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    grid = u.grid
    gn = gradient_norm(u)
    big = gn >= gamma
    keep = big.copy()
    if grid.kind == "radial":
        keep[-1] = False
        if not grid.is_ball:
            keep[0] = False
    else:
        keep &= grid.interior
    if np.any(~big):
        d = dist_to_boundary(grid, grid.coords()[~big]).values
        keep &= d > margin * grid.h
    fmax = float(np.max(np.abs(_field(f, grid))))
    rhs = gamma ** (-params.alpha) * fmax
    inputs = report_inputs(params, None, seed, grid.size, residual)
    if not keep.any():
        return InequalityReport("large_gradient", -math.inf, rhs, 0.0, True, inputs,
                                "no nodes in the large-gradient set", {"nodes": 0})
    Mm = _pucci_minus_field(u, params)[keep]
    lhs = float(Mm.max())
    passed = lhs <= rhs + tol + residual
    return InequalityReport("large_gradient", lhs, rhs, _ratio(max(lhs, 0.0), rhs), bool(passed),
                            inputs, "", {"nodes": int(keep.sum()), "gamma": gamma})


# ------------------------------------------------------------------ counterexample

def counterexample_field(n: int):
    """u(x) = (1 - |x|)^2 with |Du| = 2 (1 - r) and Laplacian 2n - 2(n-1)/r."""
    def u(pts):
        return (1 - np.linalg.norm(np.atleast_2d(pts), axis=1)) ** 2

    def lap(r):
        return 2 * n - 2 * (n - 1) / np.asarray(r, dtype=float)

    def grad(r):
        return 2 * (1 - np.asarray(r, dtype=float))

    return u, lap, grad


def counterexample_audit(n: int, m: int = 1025, offsets=None) -> InequalityReport:
    """Closed-form audit of a nonnegative supersolution in the large-gradient regime
    whose inner normal derivative vanishes on the boundary.

    Checks on a radial grid of ``m`` nodes: (i) Laplacian <= 0 wherever |Du| >= 1
    (r <= 1/2, r > 0); (ii) boundary quotients u(x0 + t nu)/t equal t, so their
    slope in t is 1 and the normal derivative is 0; (iii) u >= 0 with u = 0 on
    the unit sphere.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    params = EllipticParams(n, 1.0, 1.0, 0.0)
    u, lap, grad = counterexample_field(n)
    grid = RadialGrid(0.0, 1.0, m, n)
    r = grid.r[grid.r > 0]
    sel = grad(r) >= 1
    lap_vals = lap(r[sel])
    lhs = float(lap_vals.max())
    t = np.asarray(2.0 ** -np.arange(2, 12) if offsets is None else offsets, dtype=float)
    x0 = np.zeros(n)
    x0[0] = 1.0
    nd = normal_derivative(u, x0, t)
    slope = float(np.polyfit(t, nd.quotients, 1)[0])
    quot_exact = float(np.max(np.abs(nd.quotients - t)))
    vals = (1 - grid.r) ** 2
    boundary_val = float(u(x0[None, :])[0])
    checks = {
        "laplacian_nonpositive": lhs <= 0.0,
        "quotients_equal_t": quot_exact == 0.0,
        "slope_one": abs(slope - 1) <= 0.05,
        "nonnegative": bool(np.all(vals >= 0)),
        "boundary_zero": boundary_val == 0.0,
        "normal_derivative_zero": abs(nd.value) <= 1e-12,
    }
    extra = {"checks": checks, "laplacian_at_half": float(lap(0.5)), "grad_at_half": float(grad(0.5)),
             "quotient_slope": slope, "quotient_max_error": quot_exact, "normal_derivative": nd.value,
             "nodes_checked": int(sel.sum())}
    return InequalityReport("counterexample", lhs, 0.0, 0.0, all(checks.values()),
                            report_inputs(params, None, None, m, 0.0),
                            "Hopf fails: d_nu u = 0 although Laplacian <= 0 where |Du| >= 1", extra)


# ------------------------------------------------------------------ comparison

def _region_boundary(grid, region) -> np.ndarray:
    if grid.kind == "radial":
        mask = np.zeros(grid.m, dtype=bool)
        inside = np.flatnonzero(grid.region_mask(region))
        mask[inside[-1]] = True
        if grid.r[inside[0]] > 0:
            mask[inside[0]] = True
        return mask
    inside = grid.region_mask(region)
    if region is None:
        return grid.boundary & inside
    # region nodes with an axis neighbor outside the region
    edge = np.zeros(grid.size, dtype=bool)
    for k, (i, j) in enumerate(grid.ij):
        if not inside[k]:
            continue
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = grid.node_at(i + di, j + dj)
            if nb < 0 or not inside[nb]:
                edge[k] = True
                break
    return edge


def comparison_check(u: GridFunction, lower: GridFunction, region=None,
                     tol: float = ABS_TOL) -> InequalityReport:
    """lower <= u + tol at every region node, given the ordering on the region boundary."""
    if u.grid is not lower.grid and u.grid.size != lower.grid.size:
        raise ValueError("fields live on different grids")
    grid = u.grid
    bmask = _region_boundary(grid, region)
    gap = u.values - lower.values
    if np.any(gap[bmask] < -tol):
        k = np.flatnonzero(bmask)[int(np.argmin(gap[bmask]))]
        raise ValueError(f"boundary ordering violated at node {k}: u - lower = {gap[k]:.3e}")
    mask = grid.region_mask(region)
    margin = float(gap[mask].min())
    dim = grid.dim
    params = EllipticParams(dim)
    return InequalityReport("comparison", float(-margin), 0.0, margin, margin >= -tol,
                            report_inputs(params, grid_m=grid.size), "", {"margin": margin})


def comparison_sweep(spec: OperatorSpec, pairs: int = 100, seed: int = 0, m: int = 101,
                     tol: float = 1e-10, config: SolverConfig | None = None) -> dict:
    """Solve random ordered data pairs (f1 <= f2, g1 >= g2) and check u1 >= u2.

    f2 = f1 + a nonnegative bump field and g1 = g2 + a nonnegative shift; one
    pair in ten has identical data.  Returns the per-pair margins min(u1 - u2),
    the violation count beyond ``tol`` and the worst residual.
    """
    config = config or SolverConfig(residual_tol=1e-10)
    p = spec.params
    margins, residuals, converged = [], [], []
    for k in range(pairs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, p.n, int(round(p.alpha * 1000)), k]))
        f1 = random_radial_rhs(rng, rng.uniform(0, 2))
        bump = random_radial_rhs(rng, rng.uniform(0, 1), "nonnegative")
        g2 = float(rng.uniform(-1, 1))
        same = k % 10 == 9
        shift = 0.0 if same else float(rng.uniform(0, 1))
        f2 = f1 if same else (lambda r, f1=f1, b=bump: f1(r) + b(r))
        s1 = solve_radial(BVPProblem(spec, "ball", 1.0, f1, g2 + shift), config, m=m)
        s2 = solve_radial(BVPProblem(spec, "ball", 1.0, f2, g2), config, m=m)
        rep = comparison_check(s1.u, s2.u, tol=tol)
        margins.append(rep.extra["margin"])
        residuals.append(max(s1.residual_norm, s2.residual_norm))
        converged.append(s1.converged and s2.converged)
    margins = np.asarray(margins)
    return {"margins": margins, "violations": int(np.sum(margins < -tol)),
            "worst_margin": float(margins.min()), "max_residual": float(max(residuals)),
            "converged": bool(all(converged)), "pairs": pairs}


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepConfig:
    """Random radial family: Dirichlet data in ``outer_range``, smooth rhs with
    amplitude up to ``rhs_amp`` (sign set by ``rhs_sign``), per (n, alpha)."""

    runs: int = 50
    seed: int = 0
    alphas: tuple = (0.0, 1.0, 2.0)
    ns: tuple = (2, 3)
    lam: float = 1.0
    Lam: float = 2.0
    operator: str = "pucci_minus"
    m: int = 201
    outer_range: tuple = (0.5, 2.0)
    rhs_amp: float = 1.0
    rhs_sign: str = "any"
    epsilons: tuple = (0.25, 0.5, 1.0)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("run count must be >= 1")
        if self.rhs_sign not in ("any", "nonpositive", "nonnegative"):
            raise ValueError("rhs_sign must be any, nonpositive or nonnegative")


def random_radial_rhs(rng: np.random.Generator, amp: float, sign: str = "any", R: float = 1.0):
    """Smooth radial rhs: a sum of three Gaussian bumps with random centers, widths and weights."""
    c = rng.uniform(0, R, 3)
    w = rng.uniform(0.1, 0.5, 3) * R
    a = rng.uniform(-1, 1, 3)
    if sign == "nonpositive":
        a = -np.abs(a)
    elif sign == "nonnegative":
        a = np.abs(a)
    a = amp * a / max(np.abs(a).sum(), 1e-12)

    def f(r):
        r = np.asarray(r, dtype=float)[..., None]
        return np.sum(a * np.exp(-(((r - c) / w) ** 2)), axis=-1)

    return f


@dataclass
class SweepMember:
    n: int
    alpha: float
    outer: float
    u: GridFunction
    f: np.ndarray
    residual: float
    converged: bool
    seed: int


def solve_family(cfg: SweepConfig, n: int, alpha: float, index_seed: int = 0):
    """Yield solved random family members for one (n, alpha)."""
    params = EllipticParams(n, cfg.lam, cfg.Lam, alpha)
    spec = OperatorSpec(cfg.operator, params) if cfg.operator in ("pucci_minus", "pucci_plus") \
        else OperatorSpec.laplacian(params)
    scfg = SolverConfig(residual_tol=1e-9, delta_ladder=(1e-1, 1e-2, 1e-3), seed=cfg.seed)
    for k in range(cfg.runs):
        s = np.random.SeedSequence([cfg.seed, n, int(round(alpha * 1000)), k, index_seed])
        rng = np.random.default_rng(s)
        g = float(rng.uniform(*cfg.outer_range))
        f = random_radial_rhs(rng, cfg.rhs_amp * rng.uniform(0, 1), cfg.rhs_sign)
        prob = BVPProblem(spec, "ball", 1.0, f, g)
        sol = solve_radial(prob, scfg, m=cfg.m)
        fv = f(sol.u.grid.r)
        yield SweepMember(n, alpha, g, sol.u, fv, sol.residual_norm, sol.converged, k), params


def scaled_constant(check, u: GridFunction, f: np.ndarray, params: EllipticParams, c: float, **kw):
    """Measured constant after u -> c u, f -> c^(1+alpha) f."""
    rep = check(u * c, u.with_values(c ** (1 + params.alpha) * f), params, **kw)
    return rep.measured_constant


def harnack_sweep(cfg: SweepConfig, scales=(0.1, 1.0, 10.0)) -> dict:
    """Harnack ratios over random nonnegative families, per (n, alpha), with a scaling audit."""
    rows = []
    maxima = {}
    scale_dev = 0.0
    for n in cfg.ns:
        for alpha in cfg.alphas:
            worst = 0.0
            for mem, params in solve_family(cfg, n, alpha):
                if mem.u.values.min() < 0:
                    continue
                fgf = mem.u.with_values(mem.f)
                rep = harnack_ratio(mem.u, fgf, params, seed=mem.seed, residual=mem.residual)
                consts = [scaled_constant(harnack_ratio, mem.u, mem.f, params, c) for c in scales]
                dev = max(abs(x - rep.measured_constant) for x in consts) / max(1.0, rep.measured_constant)
                scale_dev = max(scale_dev, dev)
                rows.append((rep, mem))
                worst = max(worst, rep.measured_constant)
            maxima[(n, alpha)] = worst
    return {"rows": rows, "maxima": maxima, "scale_deviation": scale_dev}


def weak_harnack_sweep(cfg: SweepConfig) -> dict:
    """Weak-Harnack constants per (n, alpha, epsilon) over random nonnegative families."""
    rows = []
    maxima = {}
    for n in cfg.ns:
        for alpha in cfg.alphas:
            for mem, params in solve_family(cfg, n, alpha):
                if mem.u.values.min() < 0:
                    continue
                fgf = mem.u.with_values(mem.f)
                for eps in cfg.epsilons:
                    rep = weak_harnack_ratio(mem.u, fgf, params, eps, seed=mem.seed, residual=mem.residual)
                    rows.append((rep, mem))
                    key = (n, alpha, eps)
                    maxima[key] = max(maxima.get(key, 0.0), rep.measured_constant)
    return {"rows": rows, "maxima": maxima}


def hopf_sweep(cfg: SweepConfig, A2: float = 1.0, epsilon_exp: float = 0.5) -> dict:
    """Boundary growth over families vanishing on the sphere with f <= 0.

    Each member gets the growth report, its inner normal derivative at e_1, and
    the growth-versus-derivative consistency check with an O(h) slack of
    h max|u''| / ||u||.
    """
    cfg = SweepConfig(**{**cfg.__dict__, "outer_range": (0.0, 0.0), "rhs_sign": "nonpositive"})
    rows = []
    for n in cfg.ns:
        for alpha in cfg.alphas:
            for mem, params in solve_family(cfg, n, alpha):
                fgf = mem.u.with_values(mem.f)
                u = mem.u.with_values(np.maximum(mem.u.values, 0.0))
                growth = hopf_growth_check(u, fgf, params, A2, epsilon_exp, seed=mem.seed,
                                           residual=mem.residual)
                lo = inf_sup(u, Ball(0.5))[0]
                dnu = normal_derivative(u, [1.0], tol=1e-7).value
                d2 = np.abs(discrete_hessian(u)[:, 0]).max()
                N = growth.extra.get("norm", 0.0)
                slack = u.grid.h * d2 / N if N > 0 else 0.0
                cons = hopf_consistency(growth, dnu, A2, slack=slack)
                rows.append({"member": mem, "growth": growth, "consistency": cons,
                             "inf_half": lo, "dnu": dnu})
    return {"rows": rows}
