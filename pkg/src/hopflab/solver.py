"""Solvers for (|Du|^2 + delta^2)^(alpha/2) F(D^2 u) = f + s(u) with Dirichlet data.

Both discretizations reduce F to an extremum (min or max) over a finite set of
monotone linear difference operators.  The nonlinear system is solved by
policy iteration: freeze the extremal control at every node, take a Newton
step for the frozen system (including the derivative of the gradient factor
and of the semilinear source), re-optimize the control, repeat.  For
``alpha = 0`` and no source this is exactly Howard's algorithm.  The gradient
degeneracy is regularized by ``delta`` and removed by continuation along
``SolverConfig.delta_ladder``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .grid import CartesianGrid2D, GridFunction, RadialGrid, discrete_gradient, discrete_hessian
from .operators import (BELLMAN_MIN, LINEAR_TRACE, PUCCI_MINUS, PUCCI_PLUS, OperatorSpec,
                        apply_F, radial_F, radial_controls)

log = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    """The requested discretization is not monotone or the problem is ill-posed."""


@dataclass(frozen=True)
class SolverConfig:
    residual_tol: float = 1e-8
    max_iters: int = 100
    delta_ladder: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    damping: float = 1.0
    seed: int = 0
    intermediate_tol: float = 1e-6
    max_bisections: int = 4

    def __post_init__(self):
        lad = tuple(float(d) for d in self.delta_ladder)
        if not lad:
            raise ValueError("delta_ladder must be nonempty")
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("delta_ladder must be strictly decreasing")
        if lad[-1] < 0:
            raise ValueError("delta_ladder entries must be nonnegative")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")
        object.__setattr__(self, "delta_ladder", lad)

    def as_dict(self) -> dict:
        return {"residual_tol": self.residual_tol, "max_iters": self.max_iters,
                "delta_ladder": list(self.delta_ladder), "damping": self.damping,
                "seed": self.seed}


@dataclass
class BVPProblem:
    """Dirichlet problem on a ball, an annulus R/2 < |x| < R, or the 2D disk.

    ``rhs`` and ``outer`` may be constants, callables (of r for radial domains,
    of (x, y) on the disk) or GridFunctions.  ``inner`` is the value on
    |x| = R/2 for the annulus.  ``source`` is an optional semilinear term
    s(u) added to the right-hand side, with derivative ``source_derivative``.
    """

    spec: OperatorSpec
    domain: str = "ball"
    R: float = 1.0
    rhs: object = 0.0
    outer: object = 0.0
    inner: float = 0.0
    source: Callable | None = None
    source_derivative: Callable | None = None

    def __post_init__(self):
        if self.domain not in ("ball", "annulus", "disk"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.domain == "disk" and self.spec.params.n != 2:
            raise ValueError("the disk domain requires n = 2")

    @property
    def params(self):
        return self.spec.params

    def radial_grid(self, m: int) -> RadialGrid:
        if self.domain == "disk":
            raise ValueError("disk problems have no radial grid")
        r0 = 0.0 if self.domain == "ball" else self.R / 2
        return RadialGrid(r0, self.R, m, self.params.n)

    def describe(self) -> dict:
        def fmt(v):
            return v if isinstance(v, (int, float)) else type(v).__name__
        return {"domain": self.domain, "R": self.R, "operator": self.spec.kind,
                **self.params.as_dict(), "rhs": fmt(self.rhs), "outer": fmt(self.outer),
                "inner": self.inner, "source": self.source is not None}


@dataclass
class Solution:
    u: GridFunction
    residual_norm: float
    iterations: int
    delta_final: float
    converged: bool
    history: list = field(default_factory=list)
    problem: BVPProblem | None = None
    config: SolverConfig | None = None

    def metadata(self) -> dict:
        return {"residual_norm": self.residual_norm, "iterations": self.iterations,
                "delta_final": self.delta_final, "converged": self.converged,
                "grid_m": self.u.grid.size, "history": self.history,
                "config": self.config.as_dict() if self.config else None,
                "problem": self.problem.describe() if self.problem else None}

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), indent=2, sort_keys=True)


def _sample(obj, grid, what: str) -> np.ndarray:
    if isinstance(obj, GridFunction):
        if obj.grid.size != grid.size:
            raise ValueError(f"{what} lives on a different grid")
        return np.asarray(obj.values, dtype=float)
    if callable(obj):
        if grid.kind == "radial":
            vals = obj(np.asarray(grid.r))
        else:
            vals = obj(grid.points[:, 0], grid.points[:, 1])
        vals = np.broadcast_to(np.asarray(vals, dtype=float), (grid.size,)).copy()
    else:
        vals = np.full(grid.size, float(obj))
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{what} must be finite")
    return vals


# ------------------------------------------------------------------ discretizations

class _Discretization:
    """Control operators, gradient operators and row classification."""

    grid = None
    controls: list  # sparse (N, N) per control, rows of the frozen operators
    sense: str
    gradients: list  # sparse (N, N) per gradient component
    dirichlet: np.ndarray  # bool mask
    plain: np.ndarray  # rows solving F = 0 without gradient factor and rhs
    g: np.ndarray  # Dirichlet values (where dirichlet)
    f: np.ndarray


def _pucci_pairs(lam, Lam):
    return [(a, b) for a in (lam, Lam) for b in (lam, Lam)]


class RadialDiscretization(_Discretization):

    def __init__(self, problem: BVPProblem, m: int, alpha: float):
        grid = problem.radial_grid(m)
        self.grid = grid
        N, h, r = grid.m, grid.h, grid.r
        ctrl, self.sense = radial_controls(problem.spec)
        if np.any(ctrl[:, 0] <= 0):
            raise ConfigurationError("radial coefficient must be positive for a monotone scheme")
        self.control_pairs = ctrl
        self.dirichlet = np.zeros(N, dtype=bool)
        self.dirichlet[-1] = True
        self.g = np.zeros(N)
        self.g[-1] = _sample(problem.outer, grid, "outer boundary data")[-1]
        if problem.domain == "annulus":
            self.dirichlet[0] = True
            self.g[0] = float(problem.inner)
        self.plain = np.zeros(N, dtype=bool)
        if grid.is_ball and alpha > 0:
            self.plain[0] = True
        self.f = _sample(problem.rhs, grid, "rhs")

        idx = np.arange(1, N - 1)
        rr = r[idx]
        self.controls = []
        self.upwinded = np.zeros((len(ctrl), N), dtype=bool)
        off_lo = np.zeros((len(ctrl), N))
        off_hi = np.zeros((len(ctrl), N))
        for k, (c1, c2) in enumerate(ctrl):
            lo = np.zeros(N)
            di = np.zeros(N)
            up = np.zeros(N)
            lo[idx] = c1 / h**2
            di[idx] = -2 * c1 / h**2
            up[idx] = c1 / h**2
            central_ok = c1 / h**2 >= abs(c2) / (2 * h * rr)
            t = np.where(central_ok, 0.0, 1.0)
            # central: +-c2/(2 h r); upwind keeps the neighbor weights nonnegative
            lo[idx] += np.where(central_ok, -c2 / (2 * h * rr), 0.0 if c2 >= 0 else -c2 / (h * rr))
            up[idx] += np.where(central_ok, c2 / (2 * h * rr), c2 / (h * rr) if c2 >= 0 else 0.0)
            di[idx] += t * np.where(c2 >= 0, -c2 / (h * rr), c2 / (h * rr))
            self.upwinded[k, idx] = ~central_ok
            if grid.is_ball:
                # even extension at r = 0: u'' = u'/r = 2 (u_1 - u_0) / h^2
                di[0] = -2 * (c1 + c2) / h**2
                up[0] = 2 * (c1 + c2) / h**2
            L = sp.diags([lo[1:], di, up[:-1]], [-1, 0, 1], shape=(N, N), format="csr")
            self.controls.append(L)
            off_lo[k, idx] = lo[idx]
            off_hi[k, idx] = up[idx]
        self.off_lo, self.off_hi = [off_lo], [off_hi]
        e = np.zeros(N)
        e[idx] = 1 / h
        self.gradients = [sp.diags([-e[1:] / 2, e[:-1] / 2], [-1, 1], shape=(N, N), format="csr")]
        self.forward = [sp.diags([-e, e[:-1]], [0, 1], shape=(N, N), format="csr")]
        self.backward = [sp.diags([-e[1:], e], [-1, 0], shape=(N, N), format="csr")]


def _stencil_pairs(directions: int):
    base = [((1, 0), (0, 1)), ((1, 1), (-1, 1)), ((2, 1), (-1, 2)), ((1, 2), (-2, 1)),
            ((3, 1), (-1, 3)), ((1, 3), (-3, 1)), ((3, 2), (-2, 3)), ((2, 3), (-3, 2))]
    k = directions // 2
    if k > len(base):
        raise ConfigurationError(f"at most {2 * len(base)} directions are supported")
    return base[:k]


class DiskDiscretization(_Discretization):
    """Monotone wide-stencil scheme on the disk of radius R (n = 2)."""

    def __init__(self, problem: BVPProblem, m: int, directions: int):
        if directions < 4:
            raise ConfigurationError("the wide-stencil scheme needs at least 4 directions")
        grid = CartesianGrid2D(problem.R, m)
        self.grid = grid
        self.upwind_floor = True
        N, h = grid.size, grid.h
        self.dirichlet = grid.boundary.copy()
        self.plain = np.zeros(N, dtype=bool)
        self.f = _sample(problem.rhs, grid, "rhs")
        outer = problem.outer
        self._outer = outer
        self.g = np.where(self.dirichlet, _sample(outer, grid, "boundary data"), 0.0)
        pairs = _stencil_pairs(directions)
        self._bvals = {}
        dd = {}
        for pair in pairs:
            for v in pair:
                dd[v] = self._second_difference(v)
        spec = problem.spec
        p = spec.params
        self.controls = []
        if spec.kind in (PUCCI_MINUS, PUCCI_PLUS):
            for v, w in pairs:
                for a, b in _pucci_pairs(p.lam, p.Lam):
                    self.controls.append(a * dd[v][0] + b * dd[w][0])
            self.sense = "min" if spec.kind == PUCCI_MINUS else "max"
        else:
            if len(pairs) < 2:
                raise ConfigurationError("linear operators need the diagonal directions (directions >= 4)")
            for A in spec.matrices:
                a11, a22, a12 = A[0, 0], A[1, 1], A[0, 1]
                s = abs(a12)
                if a11 < s or a22 < s:
                    raise ConfigurationError("coefficient matrix is not diagonally dominant; "
                                             "no monotone 5/9-point decomposition")
                diag = (1, 1) if a12 >= 0 else (-1, 1)
                # (1,1)(1,1)^T = 2 e e^T with e the unit diagonal
                Lk = (a11 - s) * dd[(1, 0)][0] + (a22 - s) * dd[(0, 1)][0] + 2 * s * dd[diag][0]
                self.controls.append(Lk)
            self.sense = "min"
        self.rhs_bc = [np.zeros(N) for _ in self.controls]
        self._assemble_boundary_terms(pairs, dd, spec)
        inter = np.flatnonzero(grid.interior)
        ij = grid.ij[inter]
        self.gradients, self.forward, self.backward = [], [], []
        self.off_lo, self.off_hi = [], []
        for axis in (0, 1):
            shift = np.zeros(2, dtype=int)
            shift[axis] = 1
            hi = grid.index[ij[:, 0] + shift[0], ij[:, 1] + shift[1]]
            lo = grid.index[ij[:, 0] - shift[0], ij[:, 1] - shift[1]]
            ones = np.ones(len(inter))

            def op(cols_w):
                rows = np.concatenate([inter] * len(cols_w))
                cols = np.concatenate([c for c, _ in cols_w])
                vals = np.concatenate([w * ones for _, w in cols_w])
                return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))

            self.gradients.append(op([(hi, 1 / (2 * h)), (lo, -1 / (2 * h))]))
            self.forward.append(op([(hi, 1 / h), (inter, -1 / h)]))
            self.backward.append(op([(inter, 1 / h), (lo, -1 / h)]))
            olo = np.zeros((len(self.controls), N))
            ohi = np.zeros((len(self.controls), N))
            for k, L in enumerate(self.controls):
                olo[k, inter] = np.asarray(L[inter, lo]).ravel()
                ohi[k, inter] = np.asarray(L[inter, hi]).ravel()
            self.off_lo.append(olo)
            self.off_hi.append(ohi)

    def _second_difference(self, v):
        """Sparse directional second difference along v plus boundary contributions.

        Returns (matrix, boundary_vector_fn) where out-of-disk neighbors are
        replaced by the boundary crossing with weight moved to the rhs.
        """
        grid = self.grid
        N, h, R = grid.size, grid.h, grid.L
        vv = np.array(v, dtype=float)
        length = np.linalg.norm(vv) * h
        e = vv / np.linalg.norm(vv)
        rows, cols, vals = [], [], []
        bnd = np.zeros(N)
        for k in np.flatnonzero(grid.interior):
            i, j = grid.ij[k]
            x = grid.points[k]
            ts, us = [], []
            for s_ in (1, -1):
                q = grid.node_at(i + s_ * v[0], j + s_ * v[1])
                if q >= 0:
                    ts.append(1.0)
                    us.append(("node", q))
                else:
                    d = s_ * e
                    # |x + t d| = R, t > 0
                    bq = np.dot(x, d)
                    t = -bq + np.sqrt(bq * bq - (np.dot(x, x) - R * R))
                    ts.append(t / length)
                    us.append(("bdry", x + t * d))
            tp, tm = ts
            scale = 2.0 / ((tp + tm) * length**2)
            wp, wm = scale / tp, scale / tm
            rows.append(k)
            cols.append(k)
            vals.append(-(wp + wm))
            for w, (kind, ref) in ((wp, us[0]), (wm, us[1])):
                if kind == "node":
                    rows.append(k)
                    cols.append(ref)
                    vals.append(w)
                else:
                    bnd[k] += w * self._boundary_value(ref)
        return sp.csr_matrix((vals, (rows, cols)), shape=(N, N)), bnd

    def _boundary_value(self, pt):
        g = self._outer
        if isinstance(g, GridFunction):
            _, q = self.grid.tree().query(pt)
            return float(g.values[q])
        if callable(g):
            return float(g(np.array([pt[0]]), np.array([pt[1]]))[0])
        return float(g)

    def _assemble_boundary_terms(self, pairs, dd, spec):
        p = spec.params
        k = 0
        if spec.kind in (PUCCI_MINUS, PUCCI_PLUS):
            for v, w in pairs:
                for a, b in _pucci_pairs(p.lam, p.Lam):
                    self.rhs_bc[k] = a * dd[v][1] + b * dd[w][1]
                    k += 1
        else:
            for A in spec.matrices:
                a11, a22, a12 = A[0, 0], A[1, 1], A[0, 1]
                s = abs(a12)
                diag = (1, 1) if a12 >= 0 else (-1, 1)
                self.rhs_bc[k] = (a11 - s) * dd[(1, 0)][1] + (a22 - s) * dd[(0, 1)][1] + 2 * s * dd[diag][1]
                k += 1


# ------------------------------------------------------------------ engine

class _System:
    """Residual and Jacobian of the discrete equation at a fixed delta.

    The gradient factor uses central differences wherever that keeps the
    scheme monotone (the derivative of W(Du) F through the neighbors does not
    outweigh the operator's own neighbor weights) and a Godunov-type upwind
    |Du|^2 elsewhere, oriented by the sign of F so the row stays monotone.
    """

    def __init__(self, disc: _Discretization, alpha: float, delta: float,
                 source=None, source_derivative=None):
        self.d = disc
        self.alpha = alpha
        self.delta = delta
        self.source = source
        self.dsource = source_derivative
        self.N = disc.grid.size
        self.bc = getattr(disc, "rhs_bc", None)
        self.free = ~(disc.dirichlet | disc.plain)

    def control_values(self, u):
        vals = np.vstack([L @ u for L in self.d.controls])
        if self.bc is not None:
            vals = vals + np.vstack(self.bc)
        return vals

    def _gradient_factor(self, u, Fu, pol):
        """W = (|Du|^2 + delta^2)^(alpha/2), dW/d|Du|^2 and the stencil choice."""
        d = self.d
        N = self.N
        idx = np.arange(N)
        cen = [G @ u for G in d.gradients]
        qc = sum(c * c for c in cen)
        base = qc + self.delta**2
        with np.errstate(divide="ignore"):
            Wc = np.where(base > 0, base ** (self.alpha / 2), 0.0)
            Wq = np.where(base > 0, 0.5 * self.alpha * base ** (self.alpha / 2 - 1), 0.0)
        h = d.grid.h
        offmin = np.full(N, np.inf)
        for lo, hi in zip(d.off_lo, d.off_hi):
            offmin = np.minimum(offmin, np.minimum(lo[pol, idx], hi[pol, idx]))
        C = np.vstack(cen)
        amax = np.argmax(np.abs(C), axis=0)
        gmax = np.abs(C[amax, idx])
        # rho > 1 means central differences would break monotonicity; blending
        # theta * central + (1 - theta) * upwind with theta = min(1, 1/rho) keeps
        # the scheme monotone and the residual continuous in u
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.abs(Fu) * Wq * gmax / (h * Wc * offmin)
        rho = np.where(np.isnan(rho), 0.0, rho)
        blend = rho > 1
        theta = np.where(blend, 1.0 / np.where(blend, rho, 1.0), 1.0)
        axes = []
        qu = np.zeros(N)
        for c, Dp, Dm in zip(cen, d.forward, d.backward):
            up_, dn_ = Dp @ u, Dm @ u
            # F > 0: |Du|^2 must not decrease when a neighbor rises; F < 0: the reverse
            a = np.where(Fu > 0, np.minimum(dn_, 0), np.maximum(dn_, 0))
            b = np.where(Fu > 0, np.maximum(up_, 0), np.minimum(up_, 0))
            use_b = b * b > a * a
            qu_ax = np.where(use_b, b * b, a * a)
            qu += qu_ax
            axes.append((c, a, b, use_b, qu_ax))
        floor = np.zeros(N, dtype=bool)
        if getattr(d, "upwind_floor", False):
            # a symmetric spike has zero central gradient; flooring |Du|^2 by its
            # upwind value keeps the factor consistent at discrete extrema
            q_blend = sum(theta * c * c + (1 - theta) * qa for c, _, _, _, qa in axes)
            floor = qu > q_blend
        th = np.where(floor, 0.0, theta)
        blend = blend & ~floor
        q = np.zeros(N)
        picks = []
        for c, a, b, use_b, qu_ax in axes:
            q += th * c * c + (1 - th) * qu_ax
            picks.append((th * 2 * c,
                          np.where(use_b, (1 - th) * 2 * b, 0.0),
                          np.where(~use_b, (1 - th) * 2 * a, 0.0)))
        base = q + self.delta**2
        if self.alpha == 0:
            W = np.ones(N)
            Wq = np.zeros(N)
        else:
            with np.errstate(divide="ignore"):
                W = np.where(base > 0, base ** (self.alpha / 2), 0.0)
                Wq = np.where(base > 0, 0.5 * self.alpha * base ** (self.alpha / 2 - 1), 0.0)
        blend_info = {"mask": blend, "theta": th, "gap": qc - qu, "amax": amax,
                      "sign": np.sign(C[amax, idx]), "gmax": gmax, "cen": cen,
                      "base_c": qc + self.delta**2}
        return W, Wq, picks, blend_info

    def evaluate(self, u):
        vals = self.control_values(u)
        pol = np.argmin(vals, axis=0) if self.d.sense == "min" else np.argmax(vals, axis=0)
        Fu = vals[pol, np.arange(self.N)]
        if self.alpha == 0:
            W, Wq, picks, blend = np.ones(self.N), np.zeros(self.N), None, None
        else:
            W, Wq, picks, blend = self._gradient_factor(u, Fu, pol)
        s = self.source(u) if self.source is not None else 0.0
        R = W * Fu - self.d.f - s
        # alpha > 0 at the origin: the equation is void where u' = 0; the row
        # F(D^2 u)(0) = 0 of the even extension is the monotone condition u_1 = u_0
        R = np.where(self.d.plain, Fu, R)
        R = np.where(self.d.dirichlet, u - self.d.g, R)
        return R, (pol, Fu, W, Wq, picks, blend)

    def residual(self, u):
        return self.evaluate(u)[0]

    def jacobian(self, u, state):
        pol, Fu, W, Wq, picks, blend = state
        N = self.N
        J = sp.csr_matrix((N, N))
        Lpol = sp.csr_matrix((N, N))
        for k, L in enumerate(self.d.controls):
            sel = (pol == k) & ~self.d.dirichlet
            if not sel.any():
                continue
            wk = np.where(self.d.plain, 1.0, W) * sel
            J = J + sp.diags(wk) @ L
            Lpol = Lpol + sp.diags(sel.astype(float)) @ L
        if picks is not None:
            scale = self.free * Fu * Wq
            for (cc, cb, ca), G, Dp, Dm in zip(picks, self.d.gradients, self.d.forward, self.d.backward):
                J = J + sp.diags(scale * cc) @ G + sp.diags(scale * cb) @ Dp + sp.diags(scale * ca) @ Dm
            m = blend["mask"] & self.free
            if m.any():
                # theta = 1/rho with log rho = log|F| + log|Du|_max - log(|Du|^2 + delta^2) + const
                th = blend["theta"]
                with np.errstate(divide="ignore", invalid="ignore"):
                    invF = np.where(m, 1.0 / Fu, 0.0)
                    invg = np.where(m, blend["sign"] / blend["gmax"], 0.0)
                    invb = np.where(m, 1.0 / blend["base_c"], 0.0)
                dlog = sp.diags(invF) @ Lpol
                for ax, (c, G) in enumerate(zip(blend["cen"], self.d.gradients)):
                    sel_ax = (blend["amax"] == ax).astype(float)
                    dlog = dlog + sp.diags(invg * sel_ax - 2 * c * invb) @ G
                coef = np.where(m, scale * blend["gap"] * (-th), 0.0)
                J = J + sp.diags(coef) @ dlog
        if self.dsource is not None:
            J = J - sp.diags(self.free * self.dsource(u))
        J = J + sp.diags(self.d.dirichlet.astype(float))
        return J.tocsc()


def _newton(system: _System, u0: np.ndarray, tol: float, max_iters: int, damping: float):
    u = u0.copy()
    u[system.d.dirichlet] = system.d.g[system.d.dirichlet]
    hist = []
    R, state = system.evaluate(u)
    rn = float(np.max(np.abs(R)))
    it = 0
    stalls = 0
    recent = []
    while rn > tol and it < max_iters:
        it += 1
        J = system.jacobian(u, state)
        try:
            du = spsolve(J, -R)
        except Exception as exc:  # pragma: no cover - singular frozen system
            log.warning("linear solve failed: %s", exc)
            break
        if not np.all(np.isfinite(du)):
            break
        # nonmonotone Armijo backtracking on the merit ||R||_2^2 against the
        # worst of the last few merits: full semismooth Newton steps may raise
        # the residual transiently when nodes cross a kink of the nonlinearity
        phi = float(R @ R)
        recent.append(phi)
        ref = max(recent[-8:])
        t = damping
        best = None
        while t >= 2.0**-20:
            cand = u + t * du
            Rc, rc = system.evaluate(cand)
            if float(Rc @ Rc) <= (1 - 1e-4 * t) * ref:
                best = (cand, Rc, rc, float(np.max(np.abs(Rc))))
                break
            t /= 2
        if best is None:
            stalls += 1
            cand = u + damping * du
            Rc, rc = system.evaluate(cand)
            best = (cand, Rc, rc, float(np.max(np.abs(Rc))))
            if stalls > 20:
                u, R, state, rn = best
                hist.append(rn)
                break
        u, R, state, rn = best
        hist.append(rn)
    return u, rn, it, hist


def _ladder(alpha: float, config: SolverConfig):
    if alpha == 0:
        return (config.delta_ladder[-1],)
    return config.delta_ladder


def _solve(disc, problem: BVPProblem, config: SolverConfig, initial):
    alpha = problem.params.alpha
    grid = disc.grid
    if initial is None:
        u = np.zeros(grid.size)
        if grid.kind == "radial":
            if problem.domain == "annulus":
                r = grid.r
                u = disc.g[0] + (disc.g[-1] - disc.g[0]) * (r - r[0]) / (r[-1] - r[0])
            else:
                u[:] = disc.g[-1]
        else:
            u[:] = np.mean(disc.g[disc.dirichlet])
    else:
        u = np.array(initial.values if isinstance(initial, GridFunction) else initial, dtype=float)
    ladder = _ladder(alpha, config)
    history = []
    total = 0

    def attempt(u_start, delta, tol):
        nonlocal total
        system = _System(disc, alpha, delta, problem.source, problem.source_derivative)
        u_new, res, its, _ = _newton(system, u_start, tol, config.max_iters, config.damping)
        total += its
        ok_ = res <= tol
        history.append({"delta": float(delta), "iterations": its, "residual": res, "converged": bool(ok_)})
        return u_new, res, ok_

    def reach(u_start, d_from, d_to, tol, depth):
        u_new, res, ok_ = attempt(u_start, d_to, tol)
        if ok_ or d_from is None or depth >= config.max_bisections:
            return u_new, res, ok_
        # insert a geometric midpoint rung and retry from the last converged state
        mid = np.sqrt(d_from * d_to) if d_to > 0 else d_from / 10
        inter = max(config.intermediate_tol, config.residual_tol)
        u_mid, res, ok_ = reach(u_start, d_from, mid, inter, depth + 1)
        if not ok_:
            return u_mid, res, ok_
        return reach(u_mid, mid, d_to, tol, depth + 1)

    rn = np.inf
    ok = False
    d_prev = None
    for level, delta in enumerate(ladder):
        last = level == len(ladder) - 1
        tol = config.residual_tol if last else max(config.intermediate_tol, config.residual_tol)
        u_next, rn, ok = reach(u, d_prev, delta, tol, 0)
        u = u_next
        if ok:
            d_prev = delta
        else:
            log.info("delta level %g did not converge (residual %.3e)", delta, rn)
    sol = Solution(GridFunction(grid, u), float(rn), total, float(ladder[-1]),
                   bool(ok), history, problem, config)
    return sol


def solve_radial(problem: BVPProblem, config: SolverConfig | None = None, m: int = 401,
                 initial=None) -> Solution:
    """Solve a radial Dirichlet problem on a ball (symmetry at r = 0) or annulus."""
    config = config or SolverConfig()
    if problem.domain == "disk":
        raise ValueError("solve_radial needs a ball or annulus domain")
    disc = RadialDiscretization(problem, m, problem.params.alpha)
    return _solve(disc, problem, config, initial)


def solve_2d_wide_stencil(problem: BVPProblem, config: SolverConfig | None = None, m: int = 41,
                          directions: int = 4, initial=None) -> Solution:
    """Policy iteration for the monotone wide-stencil scheme on the disk."""
    config = config or SolverConfig()
    if problem.domain != "disk":
        raise ValueError("solve_2d_wide_stencil needs the disk domain")
    disc = DiskDiscretization(problem, m, directions)
    return _solve(disc, problem, config, initial)


# ------------------------------------------------------------------ flame

class BetaProfile:
    """Bounded reaction profile supported in [0, 1]; default 6 t (1 - t)."""

    def __init__(self, fn: Callable | None = None, derivative: Callable | None = None):
        self._fn = fn
        self._der = derivative

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0) & (t < 1)
        if self._fn is None:
            return np.where(inside, 6 * t * (1 - t), 0.0)
        return np.where(inside, self._fn(np.clip(t, 0, 1)), 0.0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0) & (t < 1)
        if self._fn is None:
            return np.where(inside, 6 - 12 * t, 0.0)
        if self._der is not None:
            return np.where(inside, self._der(np.clip(t, 0, 1)), 0.0)
        eps = 1e-6
        return (self(t + eps) - self(t - eps)) / (2 * eps)

    def sup(self, samples: int = 10001) -> float:
        return float(np.max(np.abs(self(np.linspace(0, 1, samples)))))

    def mass(self, samples: int = 20001) -> float:
        t = np.linspace(0, 1, samples)
        return float(np.trapezoid(self(t), t))


def flame_problem(problem: BVPProblem, beta: BetaProfile, epsilon: float) -> BVPProblem:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    def source(u):
        return beta(u / epsilon) / epsilon

    def dsource(u):
        return beta.derivative(u / epsilon) / epsilon**2

    return replace(problem, source=source, source_derivative=dsource)


def solve_flame(problem: BVPProblem, beta_profile: BetaProfile | None, epsilon: float,
                config: SolverConfig | None = None, m: int = 801, initial=None) -> Solution:
    """Radial solve of |Du|^alpha F(D^2u) = beta_eps(u) + f.

    The reaction term is coupled into the same Newton/policy iteration as the
    operator (its derivative enters the frozen Jacobian); a good ``initial``
    guess selects the solution branch.
    """
    beta = beta_profile or BetaProfile()
    fp = flame_problem(problem, beta, epsilon)
    return solve_radial(fp, config, m=m, initial=initial)


# ------------------------------------------------------------------ residual & rescaling

def residual(problem: BVPProblem, u: GridFunction, delta: float = 0.0) -> GridFunction:
    """Pointwise (|Du|^2 + delta^2)^(alpha/2) F(D^2 u) - f - s(u) from grid calculus.

    Uses the central differences of :mod:`hopflab.grid` (independent of the
    solver's upwinding).  Boundary nodes of the domain are set to zero.
    """
    grid = u.grid
    alpha = problem.params.alpha
    f = _sample(problem.rhs, grid, "rhs")
    s = problem.source(u.values) if problem.source is not None else 0.0
    if grid.kind == "radial":
        H = discrete_hessian(u)
        Fu = radial_F(problem.spec, H[:, 0], H[:, 1])
        gn = np.abs(discrete_gradient(u))
    else:
        H = discrete_hessian(u)
        Fu = np.array([apply_F(problem.spec, Hk) for Hk in H])
        g = discrete_gradient(u)
        gn = np.hypot(g[:, 0], g[:, 1])
    W = (gn**2 + delta**2) ** (alpha / 2) if alpha else np.ones_like(gn)
    res = W * Fu - f - s
    if grid.kind == "radial":
        res[-1] = 0.0
        if not grid.is_ball:
            res[0] = 0.0
    else:
        res[grid.boundary] = 0.0
    return GridFunction(grid, res)


def rescale_solution(sol: Solution, a: float, b: float) -> tuple[Solution, BVPProblem]:
    """v(x) = a u(b x) on the ball of radius R / b, with the transformed problem.

    For positively homogeneous F the transformed operator equals F; the rhs is
    a^(alpha+1) b^(alpha+2) f(b x) and the regularization delta becomes a b delta,
    so the discrete residual scales by exactly a^(alpha+1) b^(alpha+2).
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    prob = sol.problem
    if prob is None:
        raise ValueError("solution carries no problem description")
    grid = sol.u.grid
    if grid.kind != "radial":
        raise ValueError("rescaling is implemented for radial solutions")
    alpha = prob.params.alpha
    factor = a ** (alpha + 1) * b ** (alpha + 2)
    new_grid = RadialGrid(grid.r_min / b, grid.r_max / b, grid.m, grid.dim)
    v = GridFunction(new_grid, a * sol.u.values)
    f_old = _sample(prob.rhs, grid, "rhs")
    new_rhs = GridFunction(new_grid, factor * f_old)

    outer = prob.outer
    if callable(outer) and not isinstance(outer, GridFunction):
        new_outer = lambda r, _o=outer: a * np.asarray(_o(b * np.asarray(r)))  # noqa: E731
    elif isinstance(outer, GridFunction):
        new_outer = GridFunction(new_grid, a * outer.values)
    else:
        new_outer = a * float(outer)
    src = dsrc = None
    if prob.source is not None:
        s0, d0 = prob.source, prob.source_derivative

        def src(w):
            return factor * s0(np.asarray(w) / a)

        def dsrc(w):
            return factor / a * d0(np.asarray(w) / a)

    new_prob = BVPProblem(prob.spec, prob.domain, prob.R / b, new_rhs, new_outer,
                          a * prob.inner, src, dsrc if prob.source is not None else None)
    delta = a * b * sol.delta_final
    new_cfg = sol.config
    if new_cfg is not None:
        new_cfg = replace(new_cfg, delta_ladder=tuple(a * b * d for d in new_cfg.delta_ladder))
    new_sol = Solution(v, sol.residual_norm * factor, sol.iterations, delta, sol.converged,
                       list(sol.history), new_prob, new_cfg)
    return new_sol, new_prob


def scheme_residual(sol: Solution) -> np.ndarray:
    """Residual of the solver's own scheme at the final delta."""
    prob = sol.problem
    grid = sol.u.grid
    if grid.kind == "radial":
        disc = RadialDiscretization(prob, grid.m, prob.params.alpha)
    else:
        raise ValueError("scheme_residual is available for radial solutions")
    system = _System(disc, prob.params.alpha, sol.delta_final, prob.source, prob.source_derivative)
    return system.residual(sol.u.values)


# ------------------------------------------------------------------ manufactured solutions

def manufactured_rhs(spec: OperatorSpec, du: Callable, d2u: Callable) -> Callable:
    """f(r) = |u'|^alpha F_rad(u'', u'/r) for a smooth radial profile with u'(0) = 0.

    At r = 0 the tangential eigenvalue u'/r is replaced by its limit u''(0).
    """
    a = spec.params.alpha

    def f(r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        tang = np.where(r > 0, du(safe) / safe, d2u(r))
        return np.abs(du(r)) ** a * radial_F(spec, d2u(r), tang)

    return f


@dataclass
class ConvergenceStudy:
    h: list
    max_error: list
    slope: float
    converged: bool
    solutions: list = field(default_factory=list, repr=False)

    def to_csv(self, digest: str | None = None) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "max_error"] + (["config_digest"] if digest else []))
        for h, e in zip(self.h, self.max_error):
            w.writerow([repr(float(h)), repr(float(e))] + ([digest] if digest else []))
        return buf.getvalue()


def convergence_study(spec: OperatorSpec, u: Callable, du: Callable, d2u: Callable,
                      levels: int = 4, m0: int = 101, config: SolverConfig | None = None,
                      R: float = 1.0) -> ConvergenceStudy:
    """Solve the manufactured ball problem on ``levels`` dyadic grids starting at m0 nodes.

    The slope is the least-squares fit of log(error) against log(h).
    """
    if levels < 2:
        raise ValueError("a convergence study needs at least two levels")
    f = manufactured_rhs(spec, du, d2u)
    prob = BVPProblem(spec, "ball", R, f, float(u(R)))
    hs, errs, sols = [], [], []
    for k in range(levels):
        m = (m0 - 1) * 2**k + 1
        s = solve_radial(prob, config, m=m)
        r = s.u.grid.r
        hs.append(float(s.u.grid.h))
        errs.append(float(np.max(np.abs(s.u.values - u(r)))))
        sols.append(s)
    return _study(hs, errs, sols)


def _study(hs, errs, sols) -> ConvergenceStudy:
    errs_pos = np.maximum(errs, 1e-300)
    slope = float(np.polyfit(np.log(hs), np.log(errs_pos), 1)[0])
    return ConvergenceStudy(hs, errs, slope, all(s.converged for s in sols), sols)


def manufactured_rhs_2d(spec: OperatorSpec, grad: Callable, hess: Callable) -> Callable:
    """f(x, y) = |Du|^alpha F(D^2 u) from the exact gradient (k, 2) and Hessian (k, 2, 2)."""
    a = spec.params.alpha

    def f(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        g = np.asarray(grad(x.ravel(), y.ravel()), dtype=float).reshape(-1, 2)
        H = np.asarray(hess(x.ravel(), y.ravel()), dtype=float).reshape(-1, 2, 2)
        vals = np.linalg.norm(g, axis=1) ** a * np.array([apply_F(spec, Hk) for Hk in H])
        return vals.reshape(x.shape)

    return f


def convergence_study_disk(spec: OperatorSpec, u: Callable, f: Callable, levels: int = 4,
                           m0: int = 21, config: SolverConfig | None = None,
                           directions: int = 4) -> ConvergenceStudy:
    """Manufactured disk problem with exact solution u(x, y) and rhs f(x, y) on dyadic grids."""
    if levels < 2:
        raise ValueError("a convergence study needs at least two levels")
    prob = BVPProblem(spec, "disk", 1.0, f, u)
    hs, errs, sols = [], [], []
    for k in range(levels):
        m = (m0 - 1) * 2**k + 1
        s = solve_2d_wide_stencil(prob, config, m=m, directions=directions)
        P = s.u.grid.points
        hs.append(float(s.u.grid.h))
        errs.append(float(np.max(np.abs(s.u.values - u(P[:, 0], P[:, 1])))))
        sols.append(s)
    return _study(hs, errs, sols)
