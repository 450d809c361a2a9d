"""Closed-form annular barrier and its pointwise certification.

On the annulus R/2 < |x| < R the function

    Gamma_{M,R}(x) = M ((|x|/R)^(-beta) - 1) / (2^beta - 1),   beta = (n-1) Lam/lam + 2

equals M on the inner sphere, 0 on the outer sphere, and satisfies
|D Gamma|^alpha M^-(D^2 Gamma) >= c0 M^(1+alpha) / R^(2+alpha).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .operators import EllipticParams, OperatorSpec, radial_F

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class BarrierSpec:
    M: float
    R: float
    params: EllipticParams

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("barrier height M must be nonnegative")
        if self.R <= 0:
            raise ValueError("outer radius R must be positive")

    @property
    def beta(self) -> float:
        p = self.params
        return (p.n - 1) * p.Lam / p.lam + 2


def _radii(spec: BarrierSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("x must be a point (or an array of points), not a scalar")
    if x.shape[-1] != spec.params.n:
        raise ValueError(f"point dimension {x.shape[-1]} does not match n={spec.params.n}")
    r = np.linalg.norm(x, axis=-1)
    lo, hi = spec.R / 2, spec.R
    tol = _EDGE_TOL * spec.R
    if np.any(r < lo - tol) or np.any(r > hi + tol):
        raise ValueError(f"point outside the closed annulus {lo} <= |x| <= {hi}")
    return np.clip(r, lo, hi)


def barrier_profile(spec: BarrierSpec, r):
    """Gamma_{M,R} as a function of the radius."""
    b = spec.beta
    t = np.asarray(r, dtype=float) / spec.R
    return spec.M * (t ** (-b) - 1) / (2**b - 1)


def barrier_eval(spec: BarrierSpec, x):
    """Gamma_{M,R}(x) for a point or an array of points (last axis = coordinates)."""
    r = _radii(spec, x)
    out = barrier_profile(spec, r)
    return float(out) if np.ndim(out) == 0 else out


def _profile_derivatives(spec: BarrierSpec, r):
    """(|grad|, radial eigenvalue, tangential eigenvalue) of the Hessian at radius r."""
    b = spec.beta
    k = spec.M / (2**b - 1)
    t = np.asarray(r, dtype=float) / spec.R
    grad = k * b * t ** (-(b + 1)) / spec.R
    mu1 = k * b * (b + 1) * t ** (-(b + 2)) / spec.R**2
    mu2 = -k * b * t ** (-(b + 2)) / spec.R**2
    return grad, mu1, mu2


def barrier_grad_norm(spec: BarrierSpec, x):
    grad, _, _ = _profile_derivatives(spec, _radii(spec, x))
    return float(grad) if np.ndim(grad) == 0 else grad


def barrier_hessian_eigs(spec: BarrierSpec, x):
    """Radial (multiplicity 1) and tangential (multiplicity n-1) Hessian eigenvalues."""
    _, mu1, mu2 = _profile_derivatives(spec, _radii(spec, x))
    return mu1, mu2


@dataclass
class BarrierConstants:
    beta: float
    c0: float
    A1: float
    A2: float
    A3: float
    A4: float


def barrier_constants(spec: BarrierSpec) -> BarrierConstants:
    """Explicit constants for the unit barrier (M = R = 1).

    c0 uses the smallest value of the |x|^(-...) factors on the annulus, which
    is attained on the outer sphere, so the inequality is sharp there.
    """
    p = spec.params
    b = spec.beta
    k = b / (2**b - 1)
    c0 = k ** (1 + p.alpha) * ((b + 1) * p.lam - (p.n - 1) * p.Lam)
    return BarrierConstants(beta=b, c0=c0, A1=k, A2=k * 2 ** (b + 1), A3=k, A4=k * 2 ** (b + 1))


@dataclass
class BarrierCertificate:
    spec: BarrierSpec
    constants: BarrierConstants
    margins: dict
    samples: int
    passed: bool
    tol: float
    failures: list = field(default_factory=list)

    @property
    def c0(self):
        return self.constants.c0

    def as_dict(self) -> dict:
        p = self.spec.params
        c = self.constants
        return {"n": p.n, "lambda": p.lam, "Lambda": p.Lam, "alpha": p.alpha,
                "M": self.spec.M, "R": self.spec.R, "beta": c.beta, "c0": c.c0,
                "A1": c.A1, "A2": c.A2, "A3": c.A3, "A4": c.A4,
                "margins": dict(self.margins), "samples": self.samples,
                "passed": self.passed, "tol": self.tol, "failures": list(self.failures)}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def annulus_samples(spec: BarrierSpec, samples: int) -> np.ndarray:
    """Deterministic radius x angle tensor grid, both boundary spheres included.

    For n > 2 the angles sweep the planes spanned by e_1 and e_j, j = 2..n, in turn.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = spec.params.n
    n_ang = 1 if samples < 100 else 10
    n_rad = max(2, math.ceil(samples / n_ang))
    radii = np.linspace(spec.R / 2, spec.R, n_rad)
    radii[0], radii[-1] = spec.R / 2, spec.R
    pts = []
    for j in range(n_ang):
        theta = 2 * np.pi * j / n_ang
        d = np.zeros(n)
        d[0] = math.cos(theta)
        d[1 + j % (n - 1)] = math.sin(theta)
        pts.append(radii[:, None] * d[None, :])
    return np.concatenate(pts, axis=0)


def certify_barrier(spec: BarrierSpec, samples: int = 10_000, tol: float = 1e-10) -> BarrierCertificate:
    """Check every inequality of the barrier at deterministic annulus points.

    Margins (all must be >= -tol):
      pucci          |grad|^alpha M^-(D^2 Gamma) - c0 M^(1+alpha) / R^(2+alpha)
      lower_growth   Gamma - A1 (M/R) dist(x, dB_R)
      upper_growth   A2 (M/R) dist(x, dB_R) - Gamma
      grad_lower     |grad| - A3 M/R
      grad_upper     A4 M/R - |grad|
      outer_value    -|Gamma| on |x| = R
      inner_value    -|Gamma - M| on |x| = R/2
    """
    p = spec.params
    const = barrier_constants(spec)
    M, R = spec.M, spec.R
    pts = annulus_samples(spec, samples)
    r = np.clip(np.linalg.norm(pts, axis=1), R / 2, R)
    gamma = barrier_profile(spec, r)
    grad, mu1, mu2 = _profile_derivatives(spec, r)
    pucci = radial_F(OperatorSpec.pucci_minus(p), mu1, mu2)
    lhs = grad**p.alpha * pucci if p.alpha else pucci
    scale = M ** (1 + p.alpha) / R ** (2 + p.alpha)
    dist = R - r
    checks = {
        "pucci": lhs - const.c0 * scale,
        "lower_growth": gamma - const.A1 * M / R * dist,
        "upper_growth": const.A2 * M / R * dist - gamma,
        "grad_lower": grad - const.A3 * M / R,
        "grad_upper": const.A4 * M / R - grad,
    }
    outer = np.isclose(r, R, rtol=0, atol=_EDGE_TOL * R)
    inner = np.isclose(r, R / 2, rtol=0, atol=_EDGE_TOL * R)
    checks["outer_value"] = -np.abs(gamma[outer])
    checks["inner_value"] = -np.abs(gamma[inner] - M)
    margins = {}
    failures = []
    for name, vals in checks.items():
        if vals.size == 0:
            margins[name] = 0.0
            continue
        i = int(np.argmin(vals))
        margins[name] = float(vals[i])
        if vals[i] < -tol:
            where = pts if name not in ("outer_value", "inner_value") else pts[outer if name == "outer_value" else inner]
            failures.append({"property": name, "margin": float(vals[i]), "witness": where[i].tolist()})
    return BarrierCertificate(spec, const, margins, int(len(pts)), not failures, tol, failures)


def extended_barrier(spec: BarrierSpec, r):
    """Gamma_{M,R} on the annulus, continued by M on the inner ball B_{R/2}."""
    r = np.asarray(r, dtype=float)
    out = np.where(r <= spec.R / 2, spec.M, barrier_profile(spec, np.clip(r, spec.R / 2, spec.R)))
    return np.where(r > spec.R, 0.0, out)
