"""Minimax affine fits, Campanato seminorms, dyadic affine expansions and the
explicit constants of the pointwise-expansion to C^{1,omega} passage.

Fields are callables of an (k, n) point array or GridFunctions on the disk.
Balls are sampled by deterministic point sets (a cubic lattice of spacing
radius/8 clipped to the ball, plus points on the bounding sphere); on a grid
the nodes inside the ball are used instead.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import pdist

from .grid import GridFunction
from .operators import EllipticParams
from .verify import InequalityReport, report_inputs


# ------------------------------------------------------------------ moduli

@dataclass(frozen=True)
class ModulusOfContinuity:
    """omega(t) = t^gamma (kind "power") or piecewise-linear through a table."""

    kind: str = "power"
    gamma: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind == "power":
            if not (0 < self.gamma <= 1):
                raise ValueError("power modulus needs gamma in (0, 1]")
        elif self.kind == "tabulated":
            t = np.asarray([p[0] for p in self.table], dtype=float)
            w = np.asarray([p[1] for p in self.table], dtype=float)
            if len(t) < 2 or t[0] != 0 or w[0] != 0:
                raise ValueError("tabulated modulus needs >= 2 points starting at (0, 0)")
            if np.any(np.diff(t) <= 0) or np.any(np.diff(w) < 0):
                raise ValueError("tabulated modulus must be nondecreasing on increasing t")
        else:
            raise ValueError(f"unknown modulus kind {self.kind!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return np.maximum(t, 0.0) ** self.gamma
        ts = np.array([p[0] for p in self.table])
        ws = np.array([p[1] for p in self.table])
        slope = (ws[-1] - ws[-2]) / (ts[-1] - ts[-2])
        return np.where(t <= ts[-1], np.interp(t, ts, ws), ws[-1] + slope * (t - ts[-1]))

    def check(self, t_max: float = 1.0, samples: int = 200, tol: float = 1e-12) -> dict:
        """Monotonicity, omega(0) = 0, subadditivity and positivity on sample pairs."""
        t = np.linspace(0, t_max, samples)
        w = self(t)
        a, b = np.meshgrid(t, t)
        sub = self(a + b) - self(a) - self(b)
        return {"zero_at_zero": abs(float(self(0.0))) <= tol,
                "nondecreasing": bool(np.all(np.diff(w) >= -tol)),
                "subadditive": bool(sub.max() <= tol),
                "strictly_positive": bool(np.all(w[1:] > 0))}


# ------------------------------------------------------------------ affine fits

@dataclass
class AffineMap:
    value: float  # value at the anchor
    gradient: np.ndarray
    anchor: np.ndarray

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.value + (pts - self.anchor) @ self.gradient

    def shifted(self, other: "AffineMap") -> "AffineMap":
        return AffineMap(self.value + float(other(self.anchor[None, :])[0]),
                         self.gradient + other.gradient, self.anchor)


class DegenerateSamplesError(ValueError):
    pass


def minimax_affine_fit(points, values, anchor=None) -> tuple[AffineMap, float]:
    """Chebyshev (sup-norm) best affine approximation on a finite sample set.

    Solved as the linear program: minimize t subject to |v_i - c - p.(x_i - a)| <= t.
    The LP answer is polished by solving the equioscillation system on its
    active set exactly; the polished map is kept when it is no worse.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(values, dtype=float).reshape(-1)
    k, n = X.shape
    if k != v.size:
        raise ValueError("points and values differ in length")
    if k < n + 2:
        raise DegenerateSamplesError(f"need at least n + 2 = {n + 2} samples, got {k}")
    a = X.mean(axis=0) if anchor is None else np.asarray(anchor, dtype=float)
    scale = max(float(np.max(np.abs(X - a))), 1e-300)
    Y = (X - a) / scale
    design = np.column_stack([np.ones(k), Y])
    if np.linalg.matrix_rank(design) < n + 1:
        raise DegenerateSamplesError("sample points lie in a hyperplane")
    vs = max(float(np.max(np.abs(v))), 1e-300)
    w = v / vs
    # variables (c, p_1..p_n, t)
    A_ub = np.vstack([np.column_stack([-design, -np.ones(k)]), np.column_stack([design, -np.ones(k)])])
    b_ub = np.concatenate([-w, w])
    cost = np.zeros(n + 2)
    cost[-1] = 1.0
    bounds = [(None, None)] * (n + 1) + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise ArithmeticError(f"minimax linear program failed: {res.message}")
    coef = res.x[: n + 1]
    best = coef
    err = float(np.max(np.abs(w - design @ coef)))
    # polish on the active set
    r = w - design @ coef
    act = np.abs(r) >= err - 1e-7 * max(1.0, err)
    if act.sum() >= n + 2 or err < 1e-7:
        sel = act if err >= 1e-7 else np.ones(k, dtype=bool)
        sig = np.sign(r[sel]) if err >= 1e-7 else np.zeros(sel.sum())
        M = np.column_stack([design[sel], sig])
        sol, *_ = np.linalg.lstsq(M, w[sel], rcond=None)
        cand = sol[: n + 1]
        cerr = float(np.max(np.abs(w - design @ cand)))
        if cerr <= err:
            best, err = cand, cerr
    fit = AffineMap(float(best[0] * vs), best[1:] * vs / scale, a)
    return fit, float(np.max(np.abs(v - fit(X))))


# ------------------------------------------------------------------ sampling

def ball_points(center, radius: float, k: int = 8) -> np.ndarray:
    """Deterministic samples of the closed ball: lattice of spacing radius/k and sphere points."""
    c = np.atleast_1d(np.asarray(center, dtype=float))
    n = c.size
    ax = np.arange(-k, k + 1) / k
    grid = np.array(list(itertools.product(ax, repeat=n))) if n <= 3 else None
    if grid is None:
        raise ValueError("ball sampling supports n <= 3")
    grid = grid[np.linalg.norm(grid, axis=1) <= 1 + 1e-12]
    if n == 2:
        th = 2 * np.pi * np.arange(8 * k) / (8 * k)
        sphere = np.column_stack([np.cos(th), np.sin(th)])
    else:
        dirs = [d for d in itertools.product((-1, 0, 1), repeat=n) if any(d)]
        sphere = np.array(dirs, dtype=float)
        sphere /= np.linalg.norm(sphere, axis=1, keepdims=True)
    return c + radius * np.vstack([grid, sphere])


def _evaluator(u):
    if isinstance(u, GridFunction):
        if u.grid.kind == "radial":
            g = u.grid
            return lambda pts: np.interp(np.linalg.norm(np.atleast_2d(pts), axis=1), g.r, u.values)
        return None
    return lambda pts: np.asarray(u(np.atleast_2d(pts)), dtype=float).reshape(-1)


def _ball_samples(u, center, radius, k=8):
    """(points, values) of u on B_radius(center)."""
    if isinstance(u, GridFunction) and u.grid.kind != "radial":
        g = u.grid
        d = np.linalg.norm(g.points - np.asarray(center, dtype=float), axis=1)
        sel = d <= radius * (1 + 1e-12)
        return g.points[sel], u.values[sel]
    pts = ball_points(center, radius, k)
    return pts, _evaluator(u)(pts)


# ------------------------------------------------------------------ Campanato

@dataclass
class CampanatoReport:
    seminorm: float
    per_scale: list  # (center, radius, fit error, scaled error)
    gamma: float
    notes: str = "finite samples attain the infimum; the value may undercut the continuum seminorm"

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["center", "radius", "fit_error", "scaled_error"])
        for c, r, e, s in self.per_scale:
            w.writerow([" ".join(repr(float(x)) for x in c), repr(r), repr(e), repr(s)])
        return buf.getvalue()


def campanato_seminorm(u, centers, radii, gamma: float = 1.0, k: int = 8) -> CampanatoReport:
    """max over (center, radius) of the minimax affine error on the ball / radius^(1+gamma)."""
    if not (0 < gamma <= 1):
        raise ValueError("gamma must lie in (0, 1]")
    rows = []
    A = 0.0
    for c in centers:
        for r in radii:
            if r <= 0:
                raise ValueError("radii must be positive")
            pts, vals = _ball_samples(u, c, r, k)
            _, err = minimax_affine_fit(pts, vals, anchor=c)
            s = err / r ** (1 + gamma)
            rows.append((tuple(np.atleast_1d(c).tolist()), float(r), err, s))
            A = max(A, s)
    return CampanatoReport(float(A), rows, gamma)


# ------------------------------------------------------------------ dyadic expansion

@dataclass
class DyadicReport:
    gradient: np.ndarray  # limit p(x0)
    value: float  # limit c(x0)
    u_x0: float
    remainder_constant: float
    A: float
    trace: list  # (k, r_k, p_k, c_k, fit error)
    telescoping: list  # (k, |p_k - p_k+1|, 8 A r_k^gamma, |c_k - c_k+1|, 4 A r_k^(1+gamma))
    passed: bool
    k_used: int
    truncated: bool
    failures: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "r_k", "p_k", "c_k", "fit_error"])
        for k, r, p, c, e in self.trace:
            w.writerow([k, repr(r), " ".join(repr(float(x)) for x in p), repr(c), repr(e)])
        return buf.getvalue()


def dyadic_expansion(u, x0, gamma: float = 1.0, k_max: int = 10, r0: float = 1.0,
                     A: float | None = None, tol: float = 1e-10, k_samples: int = 8) -> DyadicReport:
    """Minimax fits on B_{r_k}(x0), r_k = r0 2^-k, k = 0..k_max, and their telescoping bounds.

    ``A`` defaults to the largest scaled fit error over the dyadic balls (the
    Campanato seminorm restricted to them).  Asserts |p_k - p_{k+1}| <= 8 A r_k^gamma
    and |c_k - c_{k+1}| <= 4 A r_k^(1+gamma).  On a grid, scales whose ball
    diameter holds fewer than 8 nodes are dropped and flagged as truncated.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    truncated = False
    k_last = k_max
    if isinstance(u, GridFunction) and u.grid.kind != "radial":
        h = u.grid.h
        while k_last > 0 and 2 * r0 * 2.0**-k_last / h < 8:
            k_last -= 1
            truncated = True
    trace = []
    samples = []
    for k in range(k_last + 1):
        r = r0 * 2.0**-k
        pts, vals = _ball_samples(u, x0, r, k_samples)
        fit, err = minimax_affine_fit(pts, vals, anchor=x0)
        trace.append((k, r, fit.gradient.copy(), float(fit.value), err))
        samples.append((pts, vals))
    if A is None:
        A = max(e / r ** (1 + gamma) for _, r, _, _, e in trace)
    tele = []
    failures = []
    for (k, r, p, c, _), (_, _, p1, c1, _) in zip(trace, trace[1:]):
        dp, dc = float(np.linalg.norm(p - p1)), abs(c - c1)
        bp, bc = 8 * A * r**gamma, 4 * A * r ** (1 + gamma)
        tele.append((k, dp, bp, dc, bc))
        if dp > bp + tol or dc > bc + tol:
            failures.append({"k": k, "dp": dp, "bound_p": bp, "dc": dc, "bound_c": bc})
    p_lim, c_lim = trace[-1][2], trace[-1][3]
    ev = _evaluator(u)
    if ev is not None:
        u_x0 = float(ev(x0[None, :])[0])
    else:
        g = u.grid
        u_x0 = float(u.values[np.argmin(np.linalg.norm(g.points - x0, axis=1))])
    r_last = trace[-1][1]
    if abs(c_lim - u_x0) > A * r_last ** (1 + gamma) + tol:
        failures.append({"check": "limit_value", "c": c_lim, "u_x0": u_x0})
    rem = 0.0
    for pts, vals in samples:
        d = np.linalg.norm(pts - x0, axis=1)
        sel = d > 1e-14
        lin = u_x0 + (pts[sel] - x0) @ p_lim
        rem = max(rem, float(np.max(np.abs(vals[sel] - lin) / d[sel] ** (1 + gamma))))
    return DyadicReport(p_lim, c_lim, u_x0, rem, float(A), trace, tele, not failures, k_last,
                        truncated, failures)


# ------------------------------------------------------------------ C^{1,omega} constants

def _seminorm(points, grads, omega: ModulusOfContinuity) -> float:
    if len(points) < 2:
        return 0.0
    d = pdist(points)
    dg = np.sqrt(sum(pdist(grads[:, [j]]) ** 2 for j in range(grads.shape[1])))
    w = omega(d)
    ok = w > 0
    return float(np.max(dg[ok] / w[ok])) if ok.any() else 0.0


@dataclass
class ExpansionHypothesis:
    T_measured: float
    T: float
    passed: bool
    centers: int


def expansion_hypothesis(u, grad_u, sigma: float, rho: float, omega: ModulusOfContinuity, T: float,
                         n: int = 2, k: int = 6, tol: float = 1e-10) -> ExpansionHypothesis:
    """Check |u(x) - u(x0) - Du(x0).(x - x0)| <= T |x - x0| omega(|x - x0|) on B_rho(x0), x0 in B_sigma."""
    ev = _evaluator(u)
    centers = ball_points(np.zeros(n), sigma, 4)
    worst = 0.0
    for x0 in centers:
        pts = ball_points(x0, rho, k)
        d = np.linalg.norm(pts - x0, axis=1)
        sel = d > 1e-14
        u0 = ev(x0[None, :])[0]
        p0 = np.asarray(grad_u(x0[None, :]), dtype=float).reshape(-1)
        err = np.abs(ev(pts[sel]) - u0 - (pts[sel] - x0) @ p0)
        bound = d[sel] * omega(d[sel])
        worst = max(worst, float(np.max(err / bound)))
    return ExpansionHypothesis(worst, T, worst <= T + tol, len(centers))


def c1omega_constants_check(u, grad_u, rho: float, sigma: float, R: float,
                            omega: ModulusOfContinuity, T: float, n: int = 2,
                            hypothesis: ExpansionHypothesis | None = None,
                            tol: float = 1e-10, k: int = 6) -> InequalityReport:
    """Measure the gradient sup and C^{0,omega} seminorms against their explicit bounds.

    Bounds: ||Du||_{B_sigma} <= 2||u||_{B_R}/rho + T omega(rho/2);
    [Du]_{B_{rho/2}} <= 8T when rho/2 <= sigma;
    [Du]_{B_sigma} <= 8T + 2S/omega(rho) with S the measured gradient sup;
    [Du]_{B_sigma} <= 10T + 4||u||_{B_R}/(rho omega(rho)); for power moduli also
    the forms 8(1 + rho^-gamma)(T + S) and 10(1 + rho^-(1+gamma))(T + ||u||).
    Refuses to run unless the expansion hypothesis holds with this T.
    """
    if not (0 < rho < R and 0 < sigma <= R - rho + 1e-12 and T > 0):
        raise ValueError("need 0 < rho < R, 0 < sigma <= R - rho and T > 0")
    if hypothesis is None:
        hypothesis = expansion_hypothesis(u, grad_u, sigma, rho, omega, T, n)
    if not hypothesis.passed or hypothesis.T != T:
        raise ValueError(f"expansion hypothesis not established for T = {T} "
                         f"(measured {hypothesis.T_measured:.6g})")
    ev = _evaluator(u)
    big = ball_points(np.zeros(n), R, 3 * k)
    u_sup = float(np.max(np.abs(ev(big))))
    pts_s = ball_points(np.zeros(n), sigma, 2 * k)
    g_s = np.asarray(grad_u(pts_s), dtype=float).reshape(len(pts_s), n)
    S = float(np.max(np.linalg.norm(g_s, axis=1)))
    semi_s = _seminorm(pts_s, g_s, omega)
    w_rho = float(omega(rho))
    checks = {"grad_sup": (S, 2 * u_sup / rho + T * float(omega(rho / 2))),
              "global_with_S": (semi_s, 8 * T + 2 * S / w_rho),
              "global_without_S": (semi_s, 10 * T + 4 * u_sup / (rho * w_rho))}
    if rho / 2 <= sigma:
        pts_h = ball_points(np.zeros(n), rho / 2, 2 * k)
        g_h = np.asarray(grad_u(pts_h), dtype=float).reshape(len(pts_h), n)
        checks["local_seminorm"] = (_seminorm(pts_h, g_h, omega), 8 * T)
    if omega.kind == "power":
        gm = omega.gamma
        checks["power_with_S"] = (semi_s, 8 * (1 + rho**-gm) * (T + S))
        checks["power_without_S"] = (semi_s, 10 * (1 + rho ** -(1 + gm)) * (T + u_sup))
    failed = [name for name, (l, r) in checks.items() if l > r + tol]
    worst = max(checks.values(), key=lambda lr: lr[0] / lr[1] if lr[1] > 0 else math.inf)
    return InequalityReport("c1omega_constants", worst[0], worst[1],
                            worst[0] / worst[1] if worst[1] > 0 else math.inf, not failed,
                            report_inputs(EllipticParams(n)), "",
                            {"checks": {k_: {"lhs": l, "rhs": r} for k_, (l, r) in checks.items()},
                             "failed": failed, "u_sup": u_sup, "S": S,
                             "T_measured": hypothesis.T_measured})
