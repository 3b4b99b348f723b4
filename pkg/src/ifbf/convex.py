"""Proximal calculus and the convex primal-dual pair.

Primal problem::

    min_x  f(x) + sum_i (g_i [] l_i)(L_i x - r_i) + h(x) - <x, z>

Dual problem::

    max_v  -(f^* [] h^*)(z - sum_i L_i^* v_i) - sum_i (g_i^*(v_i) + l_i^*(v_i) + <v_i, r_i>)

with ``f, g_i`` proximable, ``h`` smooth with ``mu``-Lipschitz gradient and
``l_i`` either the indicator of ``{0}`` (so ``g_i [] l_i = g_i``) or given
through the gradient of its conjugate, which must be ``nu_i``-Lipschitz.
Solving goes through :mod:`ifbf.primal_dual` with ``A = df``, ``C = grad h``,
``B_i = dg_i`` and ``D_i^{-1} = grad l_i^*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, ParameterError
from .fbf import FbfParams, SolveReport
from .operators import (DEFAULT_TOL, Ball, Box, ConvexSet, ForwardOp, Hyperplane, LinearMap,
                        MaxMonotoneOp, indicator, soft_threshold, spectral_norm)
from .primal_dual import (Block, PrimalDualProblem, PrimalDualSolution, PrimalDualState,
                          pd_solve)


class ProxFunction:
    """Convex function available through its proximity operator.

    ``value`` and ``conj_value`` are optional evaluators of ``f`` and
    ``f^*``; both may return ``inf``.
    """

    def __init__(self, prox_fn: Callable, dim: int, label: str, value: Optional[Callable] = None,
                 conj_value: Optional[Callable] = None, is_zero: bool = False):
        self._prox = prox_fn
        self.dim = int(dim)
        self.label = label
        self.value = value
        self.conj_value = conj_value
        self.is_zero = is_zero

    def prox(self, gamma: float, x) -> np.ndarray:
        if not gamma > 0:
            raise ParameterError(f"prox parameter must be > 0, got {gamma}")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected dimension {self.dim}, got shape {x.shape}")
        return np.asarray(self._prox(float(gamma), x), dtype=float)

    def __repr__(self):
        return f"ProxFunction({self.label!r}, dim={self.dim})"


def prox(fn: ProxFunction, gamma: float, x) -> np.ndarray:
    """``argmin_y f(y) + ||y - x||^2 / (2 gamma)``."""
    return fn.prox(gamma, x)


def conjugate_prox(fn: ProxFunction, gamma: float, x) -> np.ndarray:
    """``prox_{gamma f^*}(x) = x - gamma prox_{f/gamma}(x / gamma)``."""
    if not gamma > 0:
        raise ParameterError(f"prox parameter must be > 0, got {gamma}")
    x = np.asarray(x, dtype=float)
    return x - gamma * fn.prox(1.0 / gamma, x / gamma)


def _ball_indicator(radius_inf: float, tol: float = DEFAULT_TOL):
    return lambda u: 0.0 if np.max(np.abs(u), initial=0.0) <= radius_inf + tol else math.inf


def zero_function(dim: int) -> ProxFunction:
    return ProxFunction(lambda g, x: x.copy(), dim, "0", value=lambda x: 0.0,
                        conj_value=_ball_indicator(0.0), is_zero=True)


def l1_norm(dim: int, tau: float = 1.0) -> ProxFunction:
    """``tau * ||x||_1``; conjugate is the indicator of the sup-norm ball of radius ``tau``."""
    tau = float(tau)
    return ProxFunction(lambda g, x: soft_threshold(x, g * tau), dim, f"{tau:g}*l1",
                        value=lambda x: tau * float(np.sum(np.abs(x))),
                        conj_value=_ball_indicator(tau))


def squared_l2(dim: int, scale: float = 1.0, shift=None) -> ProxFunction:
    """``(scale / 2) ||x - shift||^2``."""
    s = float(scale)
    if not s > 0:
        raise ValueError("scale must be positive")
    c = np.zeros(dim) if shift is None else np.array(shift, dtype=float)
    return ProxFunction(lambda g, x: (x + g * s * c) / (1.0 + g * s), dim, f"{s:g}/2*sq_l2",
                        value=lambda x: 0.5 * s * float(np.sum((x - c) ** 2)),
                        conj_value=lambda u: float(np.dot(u, u)) / (2.0 * s) + float(np.dot(u, c)))


def indicator_function(S: ConvexSet, label: Optional[str] = None) -> ProxFunction:
    """``delta_S``; its prox is the projection onto ``S`` for every ``gamma``."""
    return ProxFunction(lambda g, x: S.project(x), S.dim, label or f"delta_{type(S).__name__}",
                        value=indicator(S), conj_value=S.support)


def box_indicator(lower, upper) -> ProxFunction:
    return indicator_function(Box(lower, upper), "delta_box")


def ball_indicator(center, radius: float) -> ProxFunction:
    return indicator_function(Ball(center, radius), "delta_ball")


def hyperplane_indicator(a, b: float) -> ProxFunction:
    return indicator_function(Hyperplane(a, b), "delta_hyperplane")


class SmoothFunction:
    """Convex differentiable function with a Lipschitz gradient."""

    def __init__(self, grad: Callable, lipschitz_grad: float, dim: int, label: str = "h",
                 value: Optional[Callable] = None, conj_value: Optional[Callable] = None,
                 is_zero: bool = False):
        self._grad = grad
        self.lipschitz_grad = float(lipschitz_grad)
        self.dim = int(dim)
        self.label = label
        self.value = value
        self.conj_value = conj_value
        self.is_zero = is_zero

    def grad(self, x) -> np.ndarray:
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def __repr__(self):
        return f"SmoothFunction({self.label!r}, dim={self.dim}, L={self.lipschitz_grad:g})"


def zero_smooth(dim: int) -> SmoothFunction:
    return SmoothFunction(lambda x: np.zeros_like(x), 0.0, dim, "0", value=lambda x: 0.0,
                          conj_value=_ball_indicator(0.0), is_zero=True)


def quadratic(dim: int, scale: float = 1.0, shift=None) -> SmoothFunction:
    """``(scale / 2) ||x - shift||^2``."""
    s = float(scale)
    b = np.zeros(dim) if shift is None else np.array(shift, dtype=float)
    return SmoothFunction(lambda x: s * (x - b), s, dim, f"{s:g}/2*|x-b|^2",
                          value=lambda x: 0.5 * s * float(np.sum((x - b) ** 2)),
                          conj_value=lambda u: float(np.dot(u, u)) / (2.0 * s) + float(np.dot(u, b)))


def quadratic_form(P, q=None) -> SmoothFunction:
    """``x^T P x / 2 - <q, x>`` with ``P`` symmetric positive semidefinite."""
    P = np.array(P, dtype=float)
    if not np.allclose(P, P.T, atol=1e-12):
        raise ValueError("P must be symmetric")
    if np.linalg.eigvalsh(P).min() < -1e-12:
        raise ValueError("P must be positive semidefinite")
    n = P.shape[0]
    q = np.zeros(n) if q is None else np.array(q, dtype=float)
    conj = None
    if np.linalg.eigvalsh(P).min() > 1e-12:
        Pinv = np.linalg.inv(P)
        conj = lambda u: 0.5 * float((u + q) @ Pinv @ (u + q))
    return SmoothFunction(lambda x: P @ x - q, spectral_norm(P), n, "quadratic_form",
                          value=lambda x: 0.5 * float(x @ P @ x) - float(np.dot(q, x)),
                          conj_value=conj)


def subdifferential(fn: ProxFunction) -> MaxMonotoneOp:
    """``df`` as a maximally monotone operator: ``J_{gamma df} = prox_{gamma f}``."""
    return MaxMonotoneOp(fn.prox, fn.dim, name=f"d[{fn.label}]", value=fn.value)


def gradient_operator(h: SmoothFunction) -> ForwardOp:
    return ForwardOp(h.grad, h.lipschitz_grad, h.dim, name=f"grad[{h.label}]")


@dataclass
class ConvexBlock:
    """Term ``(g [] l)(L x - r)``.

    ``l_conj=None`` selects ``l = delta_{0}``; otherwise ``l_conj`` is the
    smooth conjugate ``l^*`` whose gradient Lipschitz constant plays the role
    of ``nu``. ``infconv_value`` evaluates ``g [] l`` in that case.
    """

    g: ProxFunction
    L: LinearMap
    r: Optional[np.ndarray] = None
    l_conj: Optional[SmoothFunction] = None
    infconv_value: Optional[Callable] = None

    def __post_init__(self):
        self.r = np.zeros(self.g.dim) if self.r is None else np.asarray(self.r, dtype=float).reshape(-1)


@dataclass
class ConvexProblem:
    f: ProxFunction
    h: SmoothFunction
    blocks: Sequence[ConvexBlock]
    z: Optional[np.ndarray] = None
    fh_conj_value: Optional[Callable] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z = np.zeros(self.f.dim) if self.z is None else np.asarray(self.z, dtype=float).reshape(-1)
        self.blocks = tuple(self.blocks)
        if self.h.dim != self.f.dim or self.z.shape != (self.f.dim,):
            raise DimensionError("f, h and z must share the primal dimension")


def to_inclusion(problem: ConvexProblem) -> PrimalDualProblem:
    """Monotone inclusion with ``A = df``, ``C = grad h``, ``B_i = dg_i``, ``D_i^{-1} = grad l_i^*``."""
    blocks = [Block(b.r, subdifferential(b.g), b.L,
                    None if b.l_conj is None else gradient_operator(b.l_conj))
              for b in problem.blocks]
    return PrimalDualProblem(problem.z, subdifferential(problem.f), gradient_operator(problem.h),
                             blocks, metadata=dict(problem.metadata))


def solve_convex(problem: ConvexProblem, params: FbfParams, init: Optional[PrimalDualState] = None,
                 tol: float = 1e-8, max_iters: int = 10000,
                 **kwargs) -> tuple[PrimalDualSolution, SolveReport]:
    """Solve the primal-dual pair with :func:`ifbf.primal_dual.pd_solve`.

    The dual-block resolvent ``J_{lam dg_i^*}`` is computed from ``prox_g``
    exactly as :func:`conjugate_prox` does.
    """
    return pd_solve(to_inclusion(problem), params, init, tol=tol, max_iters=max_iters, **kwargs)


def _adjoint_sum(problem: ConvexProblem, v) -> np.ndarray:
    out = np.zeros(problem.f.dim)
    for b, vi in zip(problem.blocks, v):
        out = out + b.L.adjoint_apply(vi)
    return out


def primal_objective(problem: ConvexProblem, x) -> Optional[float]:
    """Primal objective at ``x``, or ``None`` if an evaluator is missing."""
    x = np.asarray(x, dtype=float)
    if problem.f.value is None or problem.h.value is None:
        return None
    total = problem.f.value(x) + problem.h.value(x) - float(np.dot(x, problem.z))
    for b in problem.blocks:
        if b.l_conj is None:
            ev = b.g.value
        else:
            ev = b.infconv_value
        if ev is None:
            return None
        total += ev(b.L.apply(x) - b.r)
    return float(total)


def _fh_conj(problem: ConvexProblem) -> Optional[Callable]:
    if problem.fh_conj_value is not None:
        return problem.fh_conj_value
    # delta_{0} is the neutral element of infimal convolution
    if problem.f.is_zero:
        return problem.h.conj_value
    if problem.h.is_zero:
        return problem.f.conj_value
    return None


def dual_objective(problem: ConvexProblem, v) -> Optional[float]:
    """Dual objective at ``v = (v_1, ..., v_m)``, or ``None`` if an evaluator is missing."""
    fh = _fh_conj(problem)
    if fh is None:
        return None
    v = [np.asarray(vi, dtype=float) for vi in v]
    total = -fh(problem.z - _adjoint_sum(problem, v))
    for b, vi in zip(problem.blocks, v):
        if b.g.conj_value is None:
            return None
        if b.l_conj is None:
            lval = 0.0
        elif b.l_conj.value is None:
            return None
        else:
            lval = b.l_conj.value(vi)
        total -= b.g.conj_value(vi) + lval + float(np.dot(vi, b.r))
    return float(total)


@dataclass
class OptimalityCheck:
    ok: bool
    primal: float
    dual: tuple

    def __bool__(self):
        return self.ok


def check_optimality(problem: ConvexProblem, x, v, tol: float = 1e-6) -> OptimalityCheck:
    """Test both optimality inclusions through prox fixed-point residuals.

    ``z - sum_i L_i^* v_i - grad h(x) in df(x)`` iff
    ``x = prox_f(x + z - sum_i L_i^* v_i - grad h(x))``, and
    ``L_i x - r_i - grad l_i^*(v_i) in dg_i^*(v_i)`` iff
    ``v_i = prox_{g_i^*}(v_i + L_i x - r_i - grad l_i^*(v_i))``.
    """
    x = np.asarray(x, dtype=float)
    v = [np.asarray(vi, dtype=float) for vi in v]
    step = problem.z - _adjoint_sum(problem, v) - problem.h.grad(x)
    primal = float(np.linalg.norm(x - problem.f.prox(1.0, x + step)))
    dual = []
    for b, vi in zip(problem.blocks, v):
        w = vi + b.L.apply(x) - b.r
        if b.l_conj is not None:
            w = w - b.l_conj.grad(vi)
        dual.append(float(np.linalg.norm(vi - conjugate_prox(b.g, 1.0, w))))
    ok = primal <= tol and all(d <= tol for d in dual)
    return OptimalityCheck(ok, primal, tuple(dual))
