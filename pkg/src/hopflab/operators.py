"""Pucci extremal operators, (lambda, Lambda)-elliptic families and the
degenerate operator |p|^alpha F(X).

All functions are pure. Matrices are plain ``numpy`` arrays; a small amount of
asymmetry (``SYM_TOL``) is symmetrized away, anything larger is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SYM_TOL = 1e-10

PUCCI_MINUS = "pucci_minus"
PUCCI_PLUS = "pucci_plus"
LINEAR_TRACE = "linear_trace"
BELLMAN_MIN = "bellman_min"
KINDS = (PUCCI_MINUS, PUCCI_PLUS, LINEAR_TRACE, BELLMAN_MIN)


class NonSymmetricError(ValueError):
    pass


class NumericalDegeneracyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EllipticParams:
    """Dimension ``n``, ellipticity pair ``(lam, Lam)`` and degeneracy ``alpha``."""

    n: int = 2
    lam: float = 1.0
    Lam: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n}")
        if not (0 < self.lam <= self.Lam):
            raise ValueError(f"need 0 < lam <= Lam, got lam={self.lam}, Lam={self.Lam}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")

    def as_dict(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "Lambda": self.Lam, "alpha": self.alpha}


def as_symmetric(X, tol: float = SYM_TOL) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {X.shape}")
    asym = np.max(np.abs(X - X.T)) if X.size else 0.0
    if asym > tol:
        raise NonSymmetricError(f"matrix is not symmetric: max |X - X^T| = {asym:.3e} > {tol:.1e}")
    return 0.5 * (X + X.T)


def eigenvalues(X, tol: float = SYM_TOL) -> np.ndarray:
    Xs = as_symmetric(X, tol)
    if not np.all(np.isfinite(Xs)):
        raise NumericalDegeneracyError("non-finite matrix entries")
    try:
        return np.linalg.eigvalsh(Xs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalDegeneracyError(str(exc)) from exc


def _check_order(X, params: EllipticParams):
    if np.shape(X)[0] != params.n:
        raise ValueError(f"matrix order {np.shape(X)[0]} does not match n={params.n}")


def pucci_plus(X, params: EllipticParams) -> float:
    _check_order(X, params)
    mu = eigenvalues(X)
    return float(params.Lam * mu[mu > 0].sum() + params.lam * mu[mu < 0].sum())


def pucci_minus(X, params: EllipticParams) -> float:
    _check_order(X, params)
    mu = eigenvalues(X)
    return float(params.lam * mu[mu > 0].sum() + params.Lam * mu[mu < 0].sum())


@dataclass(frozen=True)
class OperatorSpec:
    """An x-independent operator F with F(0) = 0.

    ``matrices`` is empty for the Pucci kinds, holds one coefficient matrix for
    ``linear_trace`` and the finite control set for ``bellman_min``.
    """

    kind: str
    params: EllipticParams
    matrices: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")
        mats = tuple(as_symmetric(A) for A in self.matrices)
        for A in mats:
            if A.shape != (self.params.n, self.params.n):
                raise ValueError(f"coefficient matrix shape {A.shape} does not match n={self.params.n}")
        if self.kind == LINEAR_TRACE and len(mats) != 1:
            raise ValueError("linear_trace needs exactly one coefficient matrix")
        if self.kind == BELLMAN_MIN and len(mats) == 0:
            raise ValueError("bellman_min needs a nonempty set of coefficient matrices")
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def pucci_minus(cls, params: EllipticParams) -> "OperatorSpec":
        return cls(PUCCI_MINUS, params)

    @classmethod
    def pucci_plus(cls, params: EllipticParams) -> "OperatorSpec":
        return cls(PUCCI_PLUS, params)

    @classmethod
    def linear_trace(cls, A, params: EllipticParams) -> "OperatorSpec":
        return cls(LINEAR_TRACE, params, (np.asarray(A, dtype=float),))

    @classmethod
    def laplacian(cls, params: EllipticParams) -> "OperatorSpec":
        return cls.linear_trace(np.eye(params.n), params)

    @classmethod
    def bellman_min(cls, matrices: Sequence, params: EllipticParams) -> "OperatorSpec":
        return cls(BELLMAN_MIN, params, tuple(np.asarray(A, dtype=float) for A in matrices))

    def is_elliptic(self, tol: float = 1e-12) -> bool:
        """True when every coefficient matrix has spectrum inside [lam, Lam]."""
        p = self.params
        for A in self.matrices:
            mu = np.linalg.eigvalsh(A)
            if mu.min() < p.lam - tol or mu.max() > p.Lam + tol:
                return False
        return True

    def label(self) -> str:
        return self.kind


def apply_F(spec: OperatorSpec, X) -> float:
    if spec.kind == PUCCI_MINUS:
        return pucci_minus(X, spec.params)
    if spec.kind == PUCCI_PLUS:
        return pucci_plus(X, spec.params)
    _check_order(X, spec.params)
    Xs = as_symmetric(X)
    vals = [float(np.sum(A * Xs)) for A in spec.matrices]
    # lowest index wins ties; min() keeps the first minimizer
    return min(vals)


def degenerate_op(spec: OperatorSpec, p, X) -> float:
    """|p|^alpha F(X); zero at p = 0 when alpha > 0."""
    p = np.asarray(p, dtype=float)
    norm = float(np.linalg.norm(p))
    if not np.isfinite(norm):
        raise ValueError("gradient must be finite")
    alpha = spec.params.alpha
    if alpha == 0:
        return apply_F(spec, X)
    if norm == 0.0:
        return 0.0
    return norm**alpha * apply_F(spec, X)


def radial_pucci(second_deriv: float, first_deriv_over_r: float, params: EllipticParams,
                 sign: str = "minus") -> float:
    """Pucci operator of the Hessian of a radial profile.

    The radial eigenvalue ``second_deriv`` has multiplicity one, the tangential
    eigenvalue ``first_deriv_over_r`` has multiplicity ``n - 1``.
    """
    lam, Lam, k = params.lam, params.Lam, params.n - 1
    if sign == "minus":
        pos, neg = lam, Lam
    elif sign == "plus":
        pos, neg = Lam, lam
    else:
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")

    def weight(mu):
        return pos * mu if mu > 0 else neg * mu

    return float(weight(second_deriv) + k * weight(first_deriv_over_r))


def radial_controls(spec: OperatorSpec) -> tuple[np.ndarray, str]:
    """Coefficient pairs (c_radial, c_tangential) for the radial reduction.

    A radial profile has Hessian diag(u'', u'/r, ..., u'/r) in a frame whose
    first axis is x/|x|.  Pucci operators and linear or Bellman operators with
    scalar coefficient matrices (the rotation-invariant ones) then become an extremum of
    ``c1 * u'' + c2 * u'/r`` over a finite control set.  Returns the controls and
    ``"min"`` or ``"max"``.
    """
    p = spec.params
    k = p.n - 1
    if spec.kind in (PUCCI_MINUS, PUCCI_PLUS):
        ctrl = np.array([[a, k * b] for a in (p.lam, p.Lam) for b in (p.lam, p.Lam)])
        return ctrl, ("min" if spec.kind == PUCCI_MINUS else "max")
    for A in spec.matrices:
        # tr(A D^2 u) of a radial u depends on the direction unless A = c I
        if not np.allclose(A, A[0, 0] * np.eye(len(A)), rtol=0, atol=1e-12 * max(1.0, abs(A[0, 0]))):
            raise ValueError("radial reduction needs coefficient matrices that are multiples of the identity")
    ctrl = np.array([[A[0, 0], np.trace(A) - A[0, 0]] for A in spec.matrices])
    return ctrl, "min"


def radial_F(spec: OperatorSpec, second_deriv, first_deriv_over_r):
    """Vectorized radial reduction of ``apply_F``."""
    ctrl, sense = radial_controls(spec)
    a = np.asarray(second_deriv, dtype=float)
    b = np.asarray(first_deriv_over_r, dtype=float)
    vals = ctrl[:, 0, None] * a.reshape(1, -1) + ctrl[:, 1, None] * b.reshape(1, -1)
    out = vals.min(axis=0) if sense == "min" else vals.max(axis=0)
    return out.reshape(a.shape)


@dataclass
class EllipticityReport:
    passed: bool
    worst_margin: float
    samples: int
    witness: dict | None = None

    def as_dict(self) -> dict:
        return {"passed": self.passed, "worst_margin": self.worst_margin,
                "samples": self.samples, "witness": self.witness}


def _random_sym(rng, n, scale=1.0):
    G = rng.normal(scale=scale, size=(n, n))
    return 0.5 * (G + G.T)


def check_ellipticity(spec: OperatorSpec, sample_count: int = 200, seed: int = 0,
                      tol: float = 1e-9) -> EllipticityReport:
    """Random audit of the (lam, Lam)-ellipticity sandwich.

    Checks M^-(X - Y) <= F(X) - F(Y) <= M^+(X - Y) on random pairs and
    lam Tr N <= F(X + N) - F(X) <= Lam Tr N on random N >= 0.  The rank-one
    perturbations e_i e_i^T are always included because they expose a
    coefficient matrix with an eigenvalue outside [lam, Lam] along a coordinate axis.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    p = spec.params
    rng = np.random.default_rng(seed)
    worst = np.inf
    witness = None

    def record(margin, kind, X, Y):
        nonlocal worst, witness
        if margin < worst:
            worst = margin
            witness = {"check": kind, "X": X.tolist(), "Y": Y.tolist(), "margin": margin}

    for _ in range(sample_count):
        X = _random_sym(rng, p.n)
        Y = _random_sym(rng, p.n)
        d = apply_F(spec, X) - apply_F(spec, Y)
        record(d - pucci_minus(X - Y, p), "sandwich_lower", X, Y)
        record(pucci_plus(X - Y, p) - d, "sandwich_upper", X, Y)

    for i in range(p.n + sample_count):
        X = _random_sym(rng, p.n)
        if i < p.n:
            N = np.zeros((p.n, p.n))
            N[i, i] = 1.0
        else:
            G = rng.normal(size=(p.n, p.n))
            N = G @ G.T
        d = apply_F(spec, X + N) - apply_F(spec, X)
        tr = np.trace(N)
        record(d - p.lam * tr, "monotone_lower", X, X + N)
        record(p.Lam * tr - d, "monotone_upper", X, X + N)

    passed = bool(worst >= -tol)
    return EllipticityReport(passed, float(worst), sample_count, None if passed else witness)
