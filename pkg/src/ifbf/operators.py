"""Monotone operators accessed through resolvents or forward evaluations.

Set-valued maximally monotone operators are represented only by their
resolvent ``J_{gamma A} = (id + gamma A)^{-1}``; single-valued monotone
Lipschitz operators by a callable and a Lipschitz upper bound. Linear maps
between spaces carry an adjoint and an operator-norm bound.

Declared properties (monotonicity, Lipschitz constants, firm
nonexpansiveness of resolvents) are trusted by the solvers; :func:`certify`
audits them on random samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, ParameterError

DEFAULT_TOL = 1e-9


def _as_input(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DimensionError(f"expected a vector of dimension {dim}, got shape {x.shape}")
    return x


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0:
        raise ParameterError(f"{name} must be positive, got {value}")
    return value


class MaxMonotoneOp:
    """Maximally monotone operator given by its resolvent.

    Parameters
    ----------
    resolvent_fn : callable ``(gamma, x) -> p``
        Evaluates ``J_{gamma A} x`` for ``gamma > 0``.
    dim : int
        Dimension of the underlying space.
    name : str
        Label used in reports.
    value : callable, optional
        When ``A`` is the subdifferential of a convex function ``f``, an
        evaluator of ``f`` (may return ``inf`` off the domain). Used only by
        verification code.
    """

    def __init__(self, resolvent_fn: Callable, dim: int, name: str = "A",
                 value: Optional[Callable] = None, metadata: Optional[dict] = None):
        self._resolvent = resolvent_fn
        self.dim = int(dim)
        self.name = name
        self.value = value
        self.metadata = dict(metadata or {})

    def resolvent(self, gamma: float, x) -> np.ndarray:
        gamma = _positive("resolvent parameter", gamma)
        return np.asarray(self._resolvent(gamma, _as_input(x, self.dim)), dtype=float)

    def __repr__(self):
        return f"MaxMonotoneOp({self.name!r}, dim={self.dim})"


class ForwardOp:
    """Single-valued monotone operator with a Lipschitz upper bound."""

    def __init__(self, fn: Callable, lipschitz: float, dim: int, name: str = "B",
                 metadata: Optional[dict] = None):
        lipschitz = float(lipschitz)
        if not lipschitz >= 0 or not math.isfinite(lipschitz):
            raise ParameterError(f"Lipschitz constant must be finite and >= 0, got {lipschitz}")
        self._fn = fn
        self.lipschitz = lipschitz
        self.dim = int(dim)
        self.name = name
        self.metadata = dict(metadata or {})

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self._fn(_as_input(x, self.dim)), dtype=float)

    def __repr__(self):
        return f"ForwardOp({self.name!r}, dim={self.dim}, lipschitz={self.lipschitz})"


def resolvent(A: MaxMonotoneOp, gamma: float, x) -> np.ndarray:
    """``J_{gamma A} x``."""
    return A.resolvent(gamma, x)


def inverse_resolvent(A: MaxMonotoneOp, sigma: float, y) -> np.ndarray:
    """``J_{sigma A^{-1}} y`` computed from the resolvent of ``A``.

    Uses ``J_{sigma A^{-1}}(y) = y - sigma * J_{A/sigma}(y / sigma)``.
    """
    sigma = _positive("inverse resolvent parameter", sigma)
    y = _as_input(y, A.dim)
    return y - sigma * A.resolvent(1.0 / sigma, y / sigma)


def inverse(A: MaxMonotoneOp) -> MaxMonotoneOp:
    """The operator ``A^{-1}``, with resolvent obtained by :func:`inverse_resolvent`."""
    return MaxMonotoneOp(lambda g, y: inverse_resolvent(A, g, y), A.dim, name=f"{A.name}^-1")


# --- linear maps -----------------------------------------------------------

def spectral_norm(M) -> float:
    """Largest singular value of a dense matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def power_iteration_norm(apply: Callable, adjoint: Callable, in_dim: int,
                         iters: int = 50, inflate: float = 1.01, seed: int = 0) -> float:
    """Upper estimate of ``||L||`` by power iteration on ``L^* L``.

    The Rayleigh estimate after ``iters`` steps is multiplied by
    ``inflate`` so that the returned value bounds the true norm in practice.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(in_dim)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = adjoint(apply(x))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        est = math.sqrt(ny)
        x = y / ny
    return inflate * est


class LinearMap:
    """Bounded linear map ``L: R^in_dim -> R^out_dim`` with its adjoint.

    When ``norm_bound`` is omitted it is estimated by
    :func:`power_iteration_norm` (50 iterations, inflated by 1%).
    """

    def __init__(self, apply: Callable, adjoint: Callable, in_dim: int, out_dim: int,
                 norm_bound: Optional[float] = None, name: str = "L", matrix=None):
        self._apply = apply
        self._adjoint = adjoint
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.name = name
        self.matrix = matrix
        if norm_bound is None:
            norm_bound = power_iteration_norm(apply, adjoint, self.in_dim)
        self.op_norm_bound = float(norm_bound)

    @classmethod
    def from_matrix(cls, M, name: str = "L") -> "LinearMap":
        """Dense matrix map; the norm bound is the exact spectral norm."""
        M = np.array(M, dtype=float)
        if M.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got shape {M.shape}")
        M.setflags(write=False)
        return cls(lambda x: M @ x, lambda y: M.T @ y, M.shape[1], M.shape[0],
                   norm_bound=spectral_norm(M), name=name, matrix=M)

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "LinearMap":
        scale = float(scale)
        return cls(lambda x: scale * x, lambda y: scale * y, dim, dim,
                   norm_bound=abs(scale), name="id" if scale == 1.0 else f"{scale:g}*id",
                   matrix=scale * np.eye(dim))

    def apply(self, x) -> np.ndarray:
        return np.asarray(self._apply(_as_input(x, self.in_dim)), dtype=float)

    def adjoint_apply(self, y) -> np.ndarray:
        return np.asarray(self._adjoint(_as_input(y, self.out_dim)), dtype=float)

    __call__ = apply

    def __repr__(self):
        return f"LinearMap({self.name!r}, {self.in_dim}->{self.out_dim}, norm<={self.op_norm_bound:g})"


# --- convex sets -----------------------------------------------------------

class ConvexSet:
    """Nonempty closed convex subset of ``R^dim`` with an exact projection."""

    dim: int

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.project(x)) <= tol)

    def support(self, u) -> float:
        """Support function ``sup_{c in S} <u, c>`` (conjugate of the indicator)."""
        raise NotImplementedError


class Box(ConvexSet):
    def __init__(self, lower, upper):
        lower = np.array(lower, dtype=float)
        upper = np.array(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionError("box bounds must be 1-D arrays of equal length")
        if np.any(lower > upper):
            raise ValueError("empty box: some lower bound exceeds its upper bound")
        self.lower, self.upper = lower, upper
        self.dim = lower.shape[0]

    @classmethod
    def cube(cls, dim: int, lo: float = 0.0, hi: float = 1.0) -> "Box":
        return cls(np.full(dim, lo), np.full(dim, hi))

    def project(self, x):
        return np.clip(_as_input(x, self.dim), self.lower, self.upper)

    def support(self, u):
        u = _as_input(u, self.dim)
        with np.errstate(invalid="ignore"):
            terms = np.where(u > 0, u * self.upper, np.where(u < 0, u * self.lower, 0.0))
        return float(np.sum(terms))

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(ConvexSet):
    """Closed Euclidean ball."""

    def __init__(self, center, radius: float):
        self.center = np.array(center, dtype=float)
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        self.dim = self.center.shape[0]

    def project(self, x):
        d = _as_input(x, self.dim) - self.center
        nd = np.linalg.norm(d)
        if nd <= self.radius:
            return self.center + d
        return self.center + (self.radius / nd) * d

    def support(self, u):
        u = _as_input(u, self.dim)
        return float(np.dot(u, self.center) + self.radius * np.linalg.norm(u))


class Hyperplane(ConvexSet):
    """Affine hyperplane ``{x : <a, x> = b}``."""

    def __init__(self, a, b: float):
        self.a = np.array(a, dtype=float)
        self.b = float(b)
        self._aa = float(np.dot(self.a, self.a))
        if self._aa == 0:
            raise ValueError("hyperplane normal must be nonzero")
        self.dim = self.a.shape[0]

    def project(self, x):
        x = _as_input(x, self.dim)
        return x - ((np.dot(self.a, x) - self.b) / self._aa) * self.a

    def support(self, u):
        u = _as_input(u, self.dim)
        # finite only for u parallel to a
        t = np.dot(u, self.a) / self._aa
        if np.linalg.norm(u - t * self.a) > DEFAULT_TOL * max(1.0, np.linalg.norm(u)):
            return math.inf
        return float(t * self.b)


class WholeSpace(ConvexSet):
    def __init__(self, dim: int):
        self.dim = int(dim)

    def project(self, x):
        return _as_input(x, self.dim).copy()

    def support(self, u):
        u = _as_input(u, self.dim)
        return 0.0 if np.linalg.norm(u) <= DEFAULT_TOL else math.inf


class Singleton(ConvexSet):
    def __init__(self, point):
        self.point = np.array(point, dtype=float)
        self.dim = self.point.shape[0]

    def project(self, x):
        _as_input(x, self.dim)
        return self.point.copy()

    def support(self, u):
        return float(np.dot(_as_input(u, self.dim), self.point))


def indicator(S: ConvexSet, tol: float = DEFAULT_TOL) -> Callable:
    """Evaluator of ``delta_S``: 0 on ``S`` (within ``tol``), ``inf`` elsewhere."""
    return lambda x: 0.0 if S.contains(x, tol) else math.inf


# --- library of operators --------------------------------------------------

def zero_operator(dim: int) -> MaxMonotoneOp:
    """``A = 0``; its resolvent is the identity for every ``gamma``."""
    return MaxMonotoneOp(lambda g, x: x.copy(), dim, name="zero", value=lambda x: 0.0)


def identity_operator(dim: int) -> MaxMonotoneOp:
    """``A = id``, the gradient of ``||x||^2 / 2``; ``J_{gamma A} x = x / (1 + gamma)``."""
    return MaxMonotoneOp(lambda g, x: x / (1.0 + g), dim, name="identity",
                         value=lambda x: 0.5 * float(np.dot(x, x)))


def soft_threshold(x, t: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def l1_subdifferential(dim: int, tau: float = 1.0) -> MaxMonotoneOp:
    """``A = d(tau ||.||_1)``; the resolvent is soft thresholding at ``gamma * tau``."""
    tau = float(tau)
    return MaxMonotoneOp(lambda g, x: soft_threshold(x, g * tau), dim, name=f"d({tau:g}|.|_1)",
                         value=lambda x: tau * float(np.sum(np.abs(x))))


def normal_cone(S: ConvexSet) -> MaxMonotoneOp:
    """``N_S``; its resolvent is the projection onto ``S`` for every ``gamma``."""
    return MaxMonotoneOp(lambda g, x: S.project(x), S.dim, name=f"N_{type(S).__name__}",
                         value=indicator(S))


def linear_monotone(M, shift=None) -> MaxMonotoneOp:
    """Affine operator ``x -> M x - shift`` with ``M`` positive semidefinite in the monotone sense.

    The resolvent solves ``(I + gamma M) p = x + gamma * shift``.
    """
    M = np.array(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionError("linear operator must be square")
    if np.linalg.eigvalsh(0.5 * (M + M.T)).min() < -1e-12:
        raise ValueError("operator is not monotone: symmetric part has a negative eigenvalue")
    c = np.zeros(n) if shift is None else np.array(shift, dtype=float)
    eye = np.eye(n)
    value = None
    if np.allclose(M, M.T, atol=1e-12):
        value = lambda x: 0.5 * float(x @ M @ x) - float(np.dot(c, x))
    return MaxMonotoneOp(lambda g, x: np.linalg.solve(eye + g * M, x + g * c), n,
                         name="linear", value=value)


def zero_forward(dim: int) -> ForwardOp:
    return ForwardOp(lambda x: np.zeros_like(x), 0.0, dim, name="zero")


def linear_forward(M, shift=None, lipschitz: Optional[float] = None, name: str = "linear") -> ForwardOp:
    """Affine forward operator ``x -> M x - shift``; must be monotone."""
    M = np.array(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionError("forward operator matrix must be square")
    if np.linalg.eigvalsh(0.5 * (M + M.T)).min() < -1e-12:
        raise ValueError("operator is not monotone: symmetric part has a negative eigenvalue")
    c = np.zeros(n) if shift is None else np.array(shift, dtype=float)
    M.setflags(write=False)
    L = spectral_norm(M) if lipschitz is None else lipschitz
    if shift is None:
        return ForwardOp(lambda x: M @ x, L, n, name=name, metadata={"matrix": M})
    return ForwardOp(lambda x: M @ x - c, L, n, name=name, metadata={"matrix": M})


def make_skew(M, tol: float = 1e-12) -> ForwardOp:
    """Skew linear operator ``x -> M x`` with ``M^T = -M``."""
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"skew operator needs a square matrix, got shape {M.shape}")
    if np.max(np.abs(M + M.T), initial=0.0) > tol:
        raise ValueError("matrix is not skew-symmetric")
    M.setflags(write=False)
    return ForwardOp(lambda x: M @ x, spectral_norm(M), M.shape[0], name="skew",
                     metadata={"matrix": M})


# --- randomized certification ---------------------------------------------

@dataclass
class Violation:
    kind: str
    x: np.ndarray
    y: np.ndarray
    lhs: float
    rhs: float
    gamma: Optional[float] = None

    def __str__(self):
        g = "" if self.gamma is None else f" (gamma={self.gamma:g})"
        return f"{self.kind}{g}: {self.lhs:.6g} vs {self.rhs:.6g}"


@dataclass
class CertificationReport:
    operator: str
    samples: int
    seed: int
    checks: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def certify(op, samples: int = 100, seed: int = 0, scale: float = 1.0,
            gammas=(0.1, 1.0, 10.0), tol: float = 1e-10) -> CertificationReport:
    """Check declared properties of ``op`` on seeded random pairs.

    For a :class:`ForwardOp`: monotonicity and the declared Lipschitz bound.
    For a :class:`MaxMonotoneOp`: firm nonexpansiveness of ``J_{gamma A}``
    for each ``gamma`` in ``gammas``. Violations are collected, never raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    report = CertificationReport(getattr(op, "name", repr(op)), samples, seed)
    pairs = [(scale * rng.standard_normal(op.dim), scale * rng.standard_normal(op.dim))
             for _ in range(samples)]

    if isinstance(op, ForwardOp):
        report.checks = ["monotone", "lipschitz"]
        for x, y in pairs:
            d, Bd = x - y, op(x) - op(y)
            mono = float(np.dot(d, Bd))
            nd = float(np.linalg.norm(d))
            slack = tol * max(1.0, nd * float(np.linalg.norm(Bd)))
            if mono < -slack:
                report.violations.append(Violation("monotone", x, y, mono, 0.0))
            lhs, rhs = float(np.linalg.norm(Bd)), op.lipschitz * nd
            if lhs > rhs + tol * max(1.0, rhs):
                report.violations.append(Violation("lipschitz", x, y, lhs, rhs))
    elif isinstance(op, MaxMonotoneOp):
        report.checks = [f"firmly_nonexpansive(gamma={g:g})" for g in gammas]
        for g in gammas:
            for x, y in pairs:
                dJ = op.resolvent(g, x) - op.resolvent(g, y)
                lhs = float(np.dot(dJ, dJ))
                rhs = float(np.dot(x - y, dJ))
                if lhs > rhs + tol * max(1.0, lhs):
                    report.violations.append(Violation("firmly_nonexpansive", x, y, lhs, rhs, g))
    else:
        raise TypeError(f"cannot certify {type(op).__name__}")
    return report
