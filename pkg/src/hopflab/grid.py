"""Radial and 2D Cartesian grids with discrete calculus and quadrature.

Radial grids carry the ambient dimension ``dim`` so that integrals use the
surface weight ``|S^{dim-1}| r^{dim-1}``.  Quadrature on radial grids is
product integration of the piecewise-linear interpolant against that weight,
which is second order and exact for constants.  On the disk, each node owns its
grid cell clipped to the integration region (areas computed in closed form).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int, r: float) -> float:
    return sphere_area(n) * r**n / n


@dataclass(frozen=True)
class Ball:
    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float

    def __post_init__(self):
        if not (0 <= self.inner < self.outer):
            raise ValueError("annulus needs 0 <= inner < outer")


class RadialGrid:
    """Uniform nodes on [r_min, r_max] for radial profiles in dimension ``dim``."""

    kind = "radial"

    def __init__(self, r_min: float, r_max: float, m: int, dim: int = 2):
        if not (0 <= r_min < r_max):
            raise ValueError(f"need 0 <= r_min < r_max, got {r_min}, {r_max}")
        if m < 3:
            raise ValueError("radial grid needs at least 3 nodes")
        if dim < 2:
            raise ValueError("dimension must be >= 2")
        self.r_min, self.r_max, self.m, self.dim = float(r_min), float(r_max), int(m), int(dim)
        self.r = np.linspace(self.r_min, self.r_max, self.m)
        self.r.setflags(write=False)
        self.h = (self.r_max - self.r_min) / (self.m - 1)

    @property
    def size(self) -> int:
        return self.m

    @property
    def radii(self) -> np.ndarray:
        return self.r

    @property
    def is_ball(self) -> bool:
        return self.r_min == 0.0

    def coords(self) -> np.ndarray:
        return self.r[:, None]

    def coord_names(self) -> list[str]:
        return ["r"]

    def region_mask(self, region) -> np.ndarray:
        tol = 1e-12 * max(1.0, self.r_max)
        if region is None:
            return np.ones(self.m, dtype=bool)
        if isinstance(region, Ball):
            if np.any(np.asarray(region.center, dtype=float) != 0):
                raise ValueError("radial grids only support balls centered at the origin")
            return self.r <= region.radius + tol
        if isinstance(region, Annulus):
            return (self.r >= region.inner - tol) & (self.r <= region.outer + tol)
        raise TypeError(f"unsupported region {region!r}")

    def _interval(self, region) -> tuple[float, float]:
        if region is None:
            return self.r_min, self.r_max
        if isinstance(region, Ball):
            self.region_mask(region)
            a, b = self.r_min, min(region.radius, self.r_max)
        else:
            a, b = max(region.inner, self.r_min), min(region.outer, self.r_max)
        if b <= a:
            raise ValueError("empty integration region")
        return a, b

    def integrate(self, g: np.ndarray, region=None) -> float:
        """Integral over the region of the radial function with nodal values g."""
        a, b = self._interval(region)
        inner = self.r[(self.r > a) & (self.r < b)]
        s = np.concatenate([[a], inner, [b]])
        gv = np.interp(s, self.r, g)
        n = self.dim
        s0, s1 = s[:-1], s[1:]
        g0, g1 = gv[:-1], gv[1:]
        Pn = (s1**n - s0**n) / n
        Pn1 = (s1 ** (n + 1) - s0 ** (n + 1)) / (n + 1)
        slope = (g1 - g0) / (s1 - s0)
        return float(sphere_area(n) * np.sum(g0 * Pn + slope * (Pn1 - s0 * Pn)))

    def nearest_index(self, r: float) -> int:
        return int(np.argmin(np.abs(self.r - r)))


def _square_disk_area(x0, x1, y0, y1, R) -> float:
    """Exact area of [x0,x1] x [y0,y1] intersected with the disk |x| <= R."""
    a, b = max(x0, -R), min(x1, R)
    if b <= a:
        return 0.0
    pts = {a, b}
    for y in (y0, y1):
        if abs(y) < R:
            xs = math.sqrt(R * R - y * y)
            for x in (-xs, xs):
                if a < x < b:
                    pts.add(x)
    pts = sorted(pts)

    def S(x):
        x = min(max(x, -R), R)
        return 0.5 * (x * math.sqrt(max(R * R - x * x, 0.0)) + R * R * math.asin(x / R))

    area = 0.0
    for xl, xr in zip(pts[:-1], pts[1:]):
        xm = 0.5 * (xl + xr)
        s = math.sqrt(max(R * R - xm * xm, 0.0))
        up_s = s < y1
        lo_s = -s > y0
        if min(y1, s) - max(y0, -s) <= 0:
            continue
        seg = 0.0
        seg += (S(xr) - S(xl)) if up_s else y1 * (xr - xl)
        seg += (S(xr) - S(xl)) if lo_s else -y0 * (xr - xl)
        area += seg
    return area


class CartesianGrid2D:
    """Square lattice on [-L, L]^2 restricted to the closed disk of radius L.

    ``m`` (odd) is the number of lattice points per axis.  Nodes with
    ``|x| > L - h`` are boundary nodes and carry Dirichlet data.
    """

    kind = "cartesian2d"
    dim = 2

    def __init__(self, L: float, m: int):
        if L <= 0:
            raise ValueError("half-width must be positive")
        if m < 3 or m % 2 == 0:
            raise ValueError("m must be odd and >= 3")
        self.L, self.m = float(L), int(m)
        self.h = 2 * self.L / (self.m - 1)
        ax = np.linspace(-self.L, self.L, self.m)
        self.axis = ax
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        rr = np.hypot(X, Y)
        inside = rr <= self.L * (1 + 1e-12)
        self.index = -np.ones((self.m, self.m), dtype=int)
        self.ij = np.argwhere(inside)
        self.index[inside] = np.arange(len(self.ij))
        self.points = np.column_stack([X[inside], Y[inside]])
        self.points.setflags(write=False)
        self._r = np.hypot(self.points[:, 0], self.points[:, 1])
        self.boundary = self._r > self.L - self.h * (1 - 1e-9)
        self.interior = ~self.boundary
        self._tree = None
        self._outside = None

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def radii(self) -> np.ndarray:
        return self._r

    def coords(self) -> np.ndarray:
        return self.points

    def coord_names(self) -> list[str]:
        return ["x", "y"]

    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def node_at(self, i: int, j: int) -> int:
        if 0 <= i < self.m and 0 <= j < self.m:
            return int(self.index[i, j])
        return -1

    def region_mask(self, region) -> np.ndarray:
        if region is None:
            return np.ones(self.size, dtype=bool)
        tol = 1e-12 * max(1.0, self.L)
        if isinstance(region, Ball):
            d = np.hypot(self.points[:, 0] - region.center[0], self.points[:, 1] - region.center[1])
            return d <= region.radius + tol
        if isinstance(region, Annulus):
            return (self._r >= region.inner - tol) & (self._r <= region.outer + tol)
        raise TypeError(f"unsupported region {region!r}")

    def _lattice_outside(self):
        # lattice nodes outside the disk, paired with their nearest disk node
        if self._outside is None:
            X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
            out = self.index < 0
            pts = np.column_stack([X[out], Y[out]])
            _, near = self.tree().query(pts)
            self._outside = (pts, near)
        return self._outside

    def _ball_weights(self, cx, cy, R) -> np.ndarray:
        h = self.h
        pts_out, near = self._lattice_outside()
        allpts = np.vstack([self.points, pts_out])
        owner = np.concatenate([np.arange(self.size), near])
        dx = allpts[:, 0] - cx
        dy = allpts[:, 1] - cy
        half = h / 2
        far = np.hypot(np.maximum(np.abs(dx) - half, 0), np.maximum(np.abs(dy) - half, 0))
        near_c = np.hypot(np.abs(dx) + half, np.abs(dy) + half)
        w = np.zeros(len(allpts))
        w[near_c <= R] = h * h
        partial = np.flatnonzero((near_c > R) & (far < R))
        for k in partial:
            w[k] = _square_disk_area(dx[k] - half, dx[k] + half, dy[k] - half, dy[k] + half, R)
        return np.bincount(owner, weights=w, minlength=self.size)

    def weights(self, region=None) -> np.ndarray:
        if region is None:
            region = Ball(self.L)
        if isinstance(region, Ball):
            return self._ball_weights(region.center[0], region.center[1], region.radius)
        if isinstance(region, Annulus):
            w = self._ball_weights(0.0, 0.0, region.outer)
            if region.inner > 0:
                w = w - self._ball_weights(0.0, 0.0, region.inner)
            return w
        raise TypeError(f"unsupported region {region!r}")

    def integrate(self, g: np.ndarray, region=None) -> float:
        w = self.weights(region)
        if not np.any(w > 0):
            raise ValueError("empty integration region")
        return float(np.dot(w, g))


class GridFunction:
    """Immutable nodal values attached to a grid."""

    def __init__(self, grid, values):
        v = np.array(values, dtype=float).reshape(-1)
        if v.shape[0] != grid.size:
            raise ValueError(f"value length {v.shape[0]} does not match grid size {grid.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        self.grid = grid
        self.values = v

    @classmethod
    def from_callable(cls, grid, fn) -> "GridFunction":
        """Sample ``fn``; radial grids pass r, Cartesian grids pass (x, y)."""
        if grid.kind == "radial":
            return cls(grid, fn(np.asarray(grid.r)))
        return cls(grid, fn(grid.points[:, 0], grid.points[:, 1]))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other) -> "GridFunction":
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + other)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __sub__(self, other) -> "GridFunction":
        return self + (-other)

    def __len__(self):
        return self.grid.size

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.grid.coord_names() + ["value"])
        for c, v in zip(self.grid.coords(), self.values):
            w.writerow([repr(float(x)) for x in c] + [repr(float(v))])
        return buf.getvalue()


def lp_norm(u: GridFunction, p: float, region=None) -> float:
    """(integral of |u|^p)^(1/p) over the region; quasi-norm for p < 1, sup for p = inf."""
    if not (p > 0):
        raise ValueError("p must be positive")
    grid = u.grid
    mask = grid.region_mask(region)
    if not mask.any():
        raise ValueError("empty region")
    a = np.abs(u.values)
    if math.isinf(p):
        return float(a[mask].max())
    total = grid.integrate(a**p, region)
    return float(max(total, 0.0) ** (1.0 / p))


def inf_sup(u: GridFunction, region=None) -> tuple[float, float]:
    mask = u.grid.region_mask(region)
    if not mask.any():
        raise ValueError("empty region")
    vals = u.values[mask]
    return float(vals.min()), float(vals.max())


# ---------------------------------------------------------------- radial calculus

def radial_derivatives(values: np.ndarray, grid: RadialGrid):
    """Return (u', u'', u'/r) on a radial grid.

    Interior nodes use central differences.  At r = 0 the even extension gives
    u'(0) = 0, u''(0) = 2 (u_1 - u_0) / h^2 and u'/r -> u''(0).  Other end
    points use second-order one-sided formulas.
    """
    u = np.asarray(values, dtype=float)
    h, m = grid.h, grid.m
    d1 = np.empty(m)
    d2 = np.empty(m)
    d1[1:-1] = (u[2:] - u[:-2]) / (2 * h)
    d2[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    d1[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    d2[-1] = _one_sided_second(u[::-1], h)
    if grid.is_ball:
        d1[0] = 0.0
        d2[0] = 2 * (u[1] - u[0]) / h**2
    else:
        d1[0] = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h)
        d2[0] = _one_sided_second(u, h)
    tang = np.empty(m)
    r = grid.r
    nz = r > 0
    tang[nz] = d1[nz] / r[nz]
    tang[~nz] = d2[~nz]
    return d1, d2, tang


def _one_sided_second(u, h):
    if len(u) >= 4:
        return (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
    return (u[0] - 2 * u[1] + u[2]) / h**2


# ---------------------------------------------------------------- 2D calculus

def _lsq_quadratic(grid: CartesianGrid2D, u: np.ndarray, k: int):
    """Gradient and Hessian at node k from a local least-squares quadratic."""
    nb = min(grid.size, 13)
    _, idx = grid.tree().query(grid.points[k], k=nb)
    d = grid.points[idx] - grid.points[k]
    A = np.column_stack([np.ones(len(idx)), d[:, 0], d[:, 1],
                         0.5 * d[:, 0] ** 2, d[:, 0] * d[:, 1], 0.5 * d[:, 1] ** 2])
    coef, *_ = np.linalg.lstsq(A, u[idx], rcond=None)
    return coef[1:3], np.array([[coef[3], coef[4]], [coef[4], coef[5]]])


def _axis_derivative(grid: CartesianGrid2D, u: np.ndarray, axis: int, order: int):
    h = grid.h
    n = grid.size
    out = np.full(n, np.nan)
    ij = grid.ij
    step = np.array([1, 0]) if axis == 0 else np.array([0, 1])

    def nb(s):
        q = ij + s * step
        ok = (q[:, 0] >= 0) & (q[:, 0] < grid.m) & (q[:, 1] >= 0) & (q[:, 1] < grid.m)
        res = -np.ones(n, dtype=int)
        res[ok] = grid.index[q[ok, 0], q[ok, 1]]
        return res

    m1, p1, m2, p2, m3, p3 = nb(-1), nb(1), nb(-2), nb(2), nb(-3), nb(3)
    c = (m1 >= 0) & (p1 >= 0)
    if order == 1:
        out[c] = (u[p1[c]] - u[m1[c]]) / (2 * h)
        f = ~c & (p1 >= 0) & (p2 >= 0)
        out[f] = (-3 * u[f] + 4 * u[p1[f]] - u[p2[f]]) / (2 * h)
        b = ~c & ~f & (m1 >= 0) & (m2 >= 0)
        out[b] = (3 * u[b] - 4 * u[m1[b]] + u[m2[b]]) / (2 * h)
    else:
        out[c] = (u[p1[c]] - 2 * u[c] + u[m1[c]]) / h**2
        f = ~c & (p1 >= 0) & (p2 >= 0) & (p3 >= 0)
        out[f] = (2 * u[f] - 5 * u[p1[f]] + 4 * u[p2[f]] - u[p3[f]]) / h**2
        b = ~c & ~f & (m1 >= 0) & (m2 >= 0) & (m3 >= 0)
        out[b] = (2 * u[b] - 5 * u[m1[b]] + 4 * u[m2[b]] - u[m3[b]]) / h**2
    return out


def _cartesian_derivatives(grid: CartesianGrid2D, u: np.ndarray):
    gx = _axis_derivative(grid, u, 0, 1)
    gy = _axis_derivative(grid, u, 1, 1)
    hxx = _axis_derivative(grid, u, 0, 2)
    hyy = _axis_derivative(grid, u, 1, 2)
    bad = np.isnan(gx) | np.isnan(gy) | np.isnan(hxx) | np.isnan(hyy)
    for k in np.flatnonzero(bad):
        g, H = _lsq_quadratic(grid, u, k)
        gx[k], gy[k], hxx[k], hyy[k] = g[0], g[1], H[0, 0], H[1, 1]
    hxy = _axis_derivative(grid, gy, 0, 1)
    hyx = _axis_derivative(grid, gx, 1, 1)
    mixed = 0.5 * (hxy + hyx)
    nan = np.isnan(hxy) & np.isnan(hyx)
    one = np.isnan(mixed) & ~nan
    mixed[one] = np.where(np.isnan(hxy[one]), hyx[one], hxy[one])
    for k in np.flatnonzero(nan):
        _, H = _lsq_quadratic(grid, u, k)
        mixed[k] = H[0, 1]
    grad = np.column_stack([gx, gy])
    hess = np.empty((grid.size, 2, 2))
    hess[:, 0, 0], hess[:, 1, 1] = hxx, hyy
    hess[:, 0, 1] = hess[:, 1, 0] = mixed
    return grad, hess


def discrete_gradient(u: GridFunction) -> np.ndarray:
    """Radial grids: signed radial derivative, shape (m,).  Disk: shape (N, 2)."""
    if u.grid.kind == "radial":
        return radial_derivatives(u.values, u.grid)[0]
    return _cartesian_derivatives(u.grid, u.values)[0]


def discrete_hessian(u: GridFunction) -> np.ndarray:
    """Radial grids: eigenpairs (u'', u'/r), shape (m, 2).  Disk: shape (N, 2, 2)."""
    if u.grid.kind == "radial":
        _, d2, tang = radial_derivatives(u.values, u.grid)
        return np.column_stack([d2, tang])
    return _cartesian_derivatives(u.grid, u.values)[1]


def gradient_norm(u: GridFunction) -> np.ndarray:
    g = discrete_gradient(u)
    return np.abs(g) if g.ndim == 1 else np.hypot(g[:, 0], g[:, 1])


def dist_to_boundary(grid, region=None) -> GridFunction:
    """Distance to the boundary of a ball, or to a finite node set.

    ``region`` is a :class:`Ball` (exact ``R - |x - c|``) or an array of points
    (nearest-point distance).
    """
    if region is None:
        region = Ball(grid.r_max if grid.kind == "radial" else grid.L)
    if isinstance(region, Ball):
        if grid.kind == "radial":
            grid.region_mask(region)
            return GridFunction(grid, region.radius - grid.r)
        d = np.hypot(grid.points[:, 0] - region.center[0], grid.points[:, 1] - region.center[1])
        return GridFunction(grid, region.radius - d)
    pts = np.atleast_2d(np.asarray(region, dtype=float))
    coords = grid.coords()
    if pts.shape[1] != coords.shape[1]:
        raise ValueError("node set dimension does not match the grid")
    d, _ = cKDTree(pts).query(coords)
    return GridFunction(grid, d)
