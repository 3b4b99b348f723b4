"""Inertial primal-dual FBF for linearly composed and parallel-sum inclusions.

Solves::

    find x with  z in A x + sum_i L_i^* ((B_i [] D_i)(L_i x - r_i)) + C x

together with its dual, where ``B_i [] D_i = (B_i^{-1} + D_i^{-1})^{-1}``
is the parallel sum. ``A`` and ``B_i`` are maximally monotone, ``C`` and
``D_i^{-1}`` are monotone and Lipschitz, and the ``L_i`` are nonzero
linear maps.

On the product space ``K = H x G_1 x ... x G_m`` the problem is
``0 in M u + Q u`` with::

    M(x, v)  = (-z + A x) x (r_1 + B_1^{-1} v_1) x ... x (r_m + B_m^{-1} v_m)
    Q(x, v)  = (C x + sum_i L_i^* v_i, -L_1 x + D_1^{-1} v_1, ..., -L_m x + D_m^{-1} v_m)

and :func:`pd_step` is the inertial FBF step for ``(M, Q)`` written out
block by block. Resolvents of ``B_i^{-1}`` come from those of ``B_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, NonFiniteError, ParameterError
from .fbf import FbfParams, SolveReport, Termination, _SeriesRecorder, relative_residual
from .hilbert import ProductSpace, ProductVector, product_norm
from .operators import (ForwardOp, LinearMap, MaxMonotoneOp, inverse_resolvent,
                        zero_forward)

EXTRAPOLATED_BOUND_NOTE = ("step bound uses the alpha2 = 0 improvement proven for the "
                           "single-operator scheme, extrapolated to the product space")


@dataclass(frozen=True)
class Block:
    """One dual block ``(r_i, B_i, D_i^{-1}, L_i)``; ``D_inv=None`` means ``D_i^{-1} = 0``."""

    r: np.ndarray
    B: MaxMonotoneOp
    L: LinearMap
    D_inv: Optional[ForwardOp] = None

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).reshape(-1))
        if self.D_inv is None:
            object.__setattr__(self, "D_inv", zero_forward(self.B.dim))

    @property
    def dim(self) -> int:
        return self.B.dim


@dataclass
class PrimalDualProblem:
    z: np.ndarray
    A: MaxMonotoneOp
    C: ForwardOp
    blocks: Sequence[Block]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float).reshape(-1)
        self.blocks = tuple(self.blocks)
        n = self.A.dim
        if not self.blocks:
            raise ValueError("at least one block is required")
        if self.z.shape != (n,) or self.C.dim != n:
            raise DimensionError("z, A and C must share the primal dimension")
        for i, b in enumerate(self.blocks, start=1):
            if b.L.in_dim != n or b.L.out_dim != b.dim or b.D_inv.dim != b.dim or b.r.shape != (b.dim,):
                raise DimensionError(f"block {i} has inconsistent dimensions")
            if not b.L.op_norm_bound > 0:
                raise ValueError(f"block {i}: L must be nonzero")

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def space(self) -> ProductSpace:
        return ProductSpace(self.A.dim, tuple(b.dim for b in self.blocks))


def beta_of(problem: PrimalDualProblem) -> float:
    """``max(mu, nu_1, ..., nu_m) + sqrt(sum_i ||L_i||^2)``."""
    lip = max([problem.C.lipschitz] + [b.D_inv.lipschitz for b in problem.blocks])
    return lip + math.sqrt(sum(b.L.op_norm_bound ** 2 for b in problem.blocks))


def _adjoint_sum(problem: PrimalDualProblem, vs) -> np.ndarray:
    # fixed block order keeps the reduction bit-reproducible
    out = np.zeros(problem.A.dim)
    for b, v in zip(problem.blocks, vs):
        out = out + b.L.adjoint_apply(v)
    return out


def product_resolvent(problem: PrimalDualProblem, lam: float, u: ProductVector) -> ProductVector:
    """``J_{lam M}(x, v) = (J_{lam A}(x + lam z), J_{lam B_i^{-1}}(v_i - lam r_i))``."""
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    head = problem.A.resolvent(lam, u.head + lam * problem.z)
    blocks = tuple(inverse_resolvent(b.B, lam, v - lam * b.r) for b, v in zip(problem.blocks, u.blocks))
    return ProductVector(head, blocks)


def product_forward(problem: PrimalDualProblem, u: ProductVector) -> ProductVector:
    """``Q(x, v) = (C x + sum_i L_i^* v_i, -L_i x + D_i^{-1} v_i)``."""
    head = problem.C(u.head) + _adjoint_sum(problem, u.blocks)
    blocks = tuple(-b.L.apply(u.head) + b.D_inv(v) for b, v in zip(problem.blocks, u.blocks))
    return ProductVector(head, blocks)


def product_operators(problem: PrimalDualProblem) -> tuple[MaxMonotoneOp, ForwardOp]:
    """``M`` and ``Q`` as operators on the flattened product space."""
    space = problem.space
    M = MaxMonotoneOp(lambda g, u: product_resolvent(problem, g, space.split(u)).flatten(),
                      space.size, name="M")
    Q = ForwardOp(lambda u: product_forward(problem, space.split(u)).flatten(),
                  beta_of(problem), space.size, name="Q")
    return M, Q


@dataclass(frozen=True)
class PrimalDualState:
    n: int
    x: np.ndarray
    v: tuple
    x_prev: np.ndarray
    v_prev: tuple
    p1: Optional[np.ndarray] = None
    p2: Optional[tuple] = None
    alphas: Optional[tuple[float, float]] = None

    @classmethod
    def start(cls, x, v, x_prev=None, v_prev=None) -> "PrimalDualState":
        x = np.array(x, dtype=float).reshape(-1)
        v = tuple(np.array(vi, dtype=float).reshape(-1) for vi in v)
        xp = x.copy() if x_prev is None else np.array(x_prev, dtype=float).reshape(-1)
        vp = tuple(vi.copy() for vi in v) if v_prev is None else tuple(
            np.array(vi, dtype=float).reshape(-1) for vi in v_prev)
        return cls(1, x, v, xp, vp)

    @classmethod
    def zeros(cls, problem: PrimalDualProblem) -> "PrimalDualState":
        s = problem.space
        return cls.start(np.zeros(s.head_dim), [np.zeros(d) for d in s.block_dims])

    def current(self) -> ProductVector:
        return ProductVector(self.x, self.v)

    def previous(self) -> ProductVector:
        return ProductVector(self.x_prev, self.v_prev)

    def p(self) -> Optional[ProductVector]:
        return None if self.p1 is None else ProductVector(self.p1, self.p2)


def pd_step(problem: PrimalDualProblem, params: FbfParams, state: PrimalDualState) -> PrimalDualState:
    """One explicit inertial primal-dual step.

    Per step: one resolvent of ``A``, one of each ``B_i^{-1}``, two
    evaluations of ``C`` and of each ``D_i^{-1}``, two applications of each
    ``L_i`` and of each ``L_i^*``.
    """
    n = state.n
    lam, a1, a2 = params.coefficients(n, beta_of(problem), state.alphas)
    x, dx = state.x, state.x - state.x_prev
    Cx = problem.C(x)
    p1 = problem.A.resolvent(lam, x - lam * (Cx + _adjoint_sum(problem, state.v) - problem.z) + a1 * dx)
    p2, v_next = [], []
    for b, v, vp in zip(problem.blocks, state.v, state.v_prev):
        dv = v - vp
        Dv = b.D_inv(v)
        q = inverse_resolvent(b.B, lam, v + lam * (b.L.apply(x) - Dv - b.r) + a1 * dv)
        p2.append(q)
        v_next.append(lam * b.L.apply(p1 - x) + lam * (Dv - b.D_inv(q)) + q + a2 * dv)
    x_next = (lam * _adjoint_sum(problem, [v - q for v, q in zip(state.v, p2)])
              + lam * (Cx - problem.C(p1)) + p1 + a2 * dx)
    for arr in [p1, x_next] + p2 + v_next:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"iteration {n}: non-finite iterate", index=n)
    return PrimalDualState(n + 1, x_next, tuple(v_next), x, state.v, p1, tuple(p2), (a1, a2))


@dataclass
class OptimalityResidual:
    primal: float
    dual: tuple
    total: float


@dataclass
class PrimalDualSolution:
    x: np.ndarray
    v: tuple
    residuals: Optional[OptimalityResidual] = None


def optimality_residual(problem: PrimalDualProblem, candidate, lam: float = 1.0) -> OptimalityResidual:
    """Fixed-point residual ``||u - J_{lam M}(u - lam Q u)||`` split by block.

    ``candidate`` is a :class:`PrimalDualSolution` or an ``(x, v)`` pair.
    Zero exactly at primal-dual solutions.
    """
    if isinstance(candidate, PrimalDualSolution):
        x, v = candidate.x, candidate.v
    else:
        x, v = candidate
    u = ProductVector(np.asarray(x, dtype=float), tuple(np.asarray(vi, dtype=float) for vi in v))
    if u.space != problem.space:
        raise DimensionError(f"candidate signature {u.space} does not match {problem.space}")
    w = product_resolvent(problem, lam, u - lam * product_forward(problem, u))
    d = u - w
    return OptimalityResidual(float(np.linalg.norm(d.head)),
                              tuple(float(np.linalg.norm(b)) for b in d.blocks),
                              product_norm(d))


def pd_solve(problem: PrimalDualProblem, params: FbfParams, init: Optional[PrimalDualState] = None,
             tol: float = 1e-8, max_iters: int = 10000, keep_iterates: bool = False,
             callback: Optional[Callable] = None,
             residual_lam: float = 1.0) -> tuple[PrimalDualSolution, SolveReport]:
    """Iterate :func:`pd_step` until ``||u_n - p_n|| / max(1, ||u_n||) <= tol`` in ``K``.

    The returned solution is the last ``(p_{1,n}, p_{2,i,n})``, which lies in
    the domains of ``A`` and ``B_i^{-1}`` by construction. ``report.x`` and
    ``report.p`` hold flattened product vectors.
    """
    state = PrimalDualState.zeros(problem) if init is None else init
    beta = beta_of(problem)
    bound = params.step_bound(beta)
    if state.current().space != problem.space or state.previous().space != problem.space:
        raise DimensionError("initial state does not match the problem signature")
    if params.equal_start and not np.array_equal(state.current().flatten(), state.previous().flatten()):
        raise ParameterError("equal_start requires the two starting points to coincide")
    if params.lambda_min is not None and params.lambda_min > bound:
        raise ParameterError(f"lambda_min {params.lambda_min:g} exceeds the {params.bound_kind} "
                             f"step bound {bound:.12g}")

    names = ["x"] + [f"v{i}" for i in range(1, problem.m + 1)]
    rec = _SeriesRecorder(names)
    residuals = []
    iterates = [state.current().flatten()] if keep_iterates else None
    report = SolveReport(Termination.MAX_ITERS, 0, state.current().flatten(), None, residuals,
                         rec.step, rec.gap, iterates, step_bound=bound, bound_kind=params.bound_kind,
                         component_series=rec.components)
    if params.bound_kind == "no_inertia2":
        report.notes.append(EXTRAPOLATED_BOUND_NOTE)
    best = (state.x, state.v)
    for _ in range(max_iters):
        try:
            new = pd_step(problem, params, state)
        except ParameterError as exc:
            report.termination = Termination.PARAMETER_VIOLATION
            report.violation, report.violation_index = str(exc), exc.index
            break
        u, p, u_next = state.current(), new.p(), new.current()
        parts = {"x": (float(np.sum((u_next.head - u.head) ** 2)), float(np.sum((u.head - p.head) ** 2)))}
        for i, (a, b, c) in enumerate(zip(u.blocks, p.blocks, u_next.blocks), start=1):
            parts[f"v{i}"] = (float(np.sum((c - a) ** 2)), float(np.sum((a - b) ** 2)))
        rec.add(sum(s for s, _ in parts.values()), sum(g for _, g in parts.values()), parts)
        uf, pf = u.flatten(), p.flatten()
        residuals.append(relative_residual(uf, pf, new.n - 1))
        if keep_iterates:
            iterates.append(u_next.flatten())
        if callback is not None:
            callback(new.n - 1, new)
        state = new
        best = (new.p1, new.p2)
        report.iterations, report.x, report.p = new.n - 1, u_next.flatten(), pf
        if residuals[-1] <= tol:
            report.termination = Termination.CONVERGED
            break
    sol = PrimalDualSolution(best[0], tuple(best[1]))
    sol.residuals = optimality_residual(problem, sol, residual_lam)
    return sol, report
