"""Test problems with solutions known at construction time."""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import convex as cvx
from .operators import (Box, ForwardOp, LinearMap, MaxMonotoneOp, l1_subdifferential,
                        linear_forward, linear_monotone, make_skew, normal_cone, soft_threshold,
                        zero_forward, zero_operator)
from .primal_dual import Block, PrimalDualProblem, beta_of


@dataclass
class InclusionProblem:
    """``0 in A x + B x``."""

    A: MaxMonotoneOp
    B: ForwardOp


@dataclass
class ZooProblem:
    name: str
    kind: str  # "inclusion", "primal_dual" or "convex"
    problem: Any
    solution: np.ndarray
    start: np.ndarray
    dual_solution: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    @property
    def beta(self) -> float:
        if self.kind == "inclusion":
            return self.problem.B.lipschitz
        if self.kind == "convex":
            return beta_of(cvx.to_inclusion(self.problem))
        return beta_of(self.problem)

    def inclusion(self) -> PrimalDualProblem:
        """Primal-dual inclusion form (convex and primal-dual kinds only)."""
        if self.kind == "convex":
            return cvx.to_inclusion(self.problem)
        if self.kind == "primal_dual":
            return self.problem
        raise TypeError(f"{self.name} is a plain inclusion problem")


def skew_rotation(scale: float = 1.0, start=(1.0, 0.0)) -> ZooProblem:
    """``A = 0`` and ``B`` the 2x2 rotation generator; the only zero is the origin."""
    B = make_skew([[0.0, scale], [-scale, 0.0]])
    return ZooProblem("skew-rotation", "inclusion", InclusionProblem(zero_operator(2), B),
                      np.zeros(2), np.array(start, dtype=float))


def box_shift(shift: float = 2.0, start: float = 0.0) -> ZooProblem:
    """``A = N_[0,1]``, ``B x = x - shift`` on the line; zero at ``clip(shift, 0, 1)``."""
    A = normal_cone(Box([0.0], [1.0]))
    B = linear_forward([[1.0]], shift=[shift])
    return ZooProblem("box-shift", "inclusion", InclusionProblem(A, B),
                      np.clip([shift], 0.0, 1.0), np.array([start]))


def prox_quadratic(n: int = 3, seed: int = 0) -> ZooProblem:
    """``A x = x - c`` with ``B = 0``; a proximal-point test with zero at ``c``."""
    c = np.random.default_rng(seed).standard_normal(int(n))
    A = linear_monotone(np.eye(int(n)), shift=c)
    return ZooProblem("prox-quadratic", "inclusion", InclusionProblem(A, zero_forward(int(n))),
                      c, np.zeros(int(n)))


def _lasso(name: str, b, tau: float) -> ZooProblem:
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    problem = cvx.ConvexProblem(
        f=cvx.zero_function(n), h=cvx.quadratic(n, shift=b),
        blocks=[cvx.ConvexBlock(cvx.l1_norm(n, tau), LinearMap.identity(n))])
    x = soft_threshold(b, tau)
    return ZooProblem(name, "convex", problem, x, np.zeros(n), dual_solution=(b - x,))


def lasso2d(b=(3.0, 0.2), tau: float = 1.0) -> ZooProblem:
    """``min ||x - b||^2 / 2 + tau ||x||_1`` in the plane; solution is soft thresholding of ``b``."""
    return _lasso("lasso2d", b, tau)


def lassoN(n: int = 10, seed: int = 0, tau: float = 1.0, spread: float = 3.0) -> ZooProblem:
    """Lasso denoising in ``R^n`` with a random Gaussian ``b``."""
    b =spread * np.random.default_rng(seed).standard_normal(int(n))
    return _lasso("lassoN", b, tau)


def box_ls(n: int = 4, seed: int = 0, spread: float = 1.5) -> ZooProblem:
    """``min ||x - b||^2 / 2`` over ``[0, 1]^n``; solution ``clip(b, 0, 1)``.

    A dummy block with ``g = 0`` and ``L = id`` fills the required dual slot.
    """
    n = int(n)
    b = 0.5 + spread * np.random.default_rng(seed).standard_normal(n)
    box = Box.cube(n)

    def fh_conj(u):
        # (delta_box + h)^* is attained at clip(u + b)
        x = box.project(u + b)
        return float(np.dot(u, x) - 0.5 * np.sum((x - b) ** 2))

    problem = cvx.ConvexProblem(
        f=cvx.indicator_function(box, "delta_box"), h=cvx.quadratic(n, shift=b),
        blocks=[cvx.ConvexBlock(cvx.zero_function(n), LinearMap.identity(n))],
        fh_conj_value=fh_conj)
    return ZooProblem("box-ls", "convex", problem, box.project(b), np.zeros(n),
                      dual_solution=(np.zeros(n),))


def _l1_selection(rng, point, weight):
    """Element of ``d(weight ||.||_1)(point)`` strictly inside the subdifferential on zero coordinates."""
    s = weight * np.sign(point)
    zero = point == 0
    s[zero] = rng.uniform(-0.5 * weight, 0.5 * weight, zero.sum())
    return s


def _sparse(rng, n, zero_frac):
    x = rng.standard_normal(n)
    x[rng.random(n) < zero_frac] = 0.0
    return x


def pd_random(seed: int = 0, n: int = 4, m: int = 2, block_dims=None, strong: float = 0.5,
              zero_frac: float = 0.3) -> ZooProblem:
    """Random primal-dual instance with a planted solution.

    ``A = d(kappa ||.||_1)``, ``C`` linear and ``strong``-strongly monotone
    (which makes the primal solution unique), ``B_i = d(tau_i ||.||_1)`` and
    ``D_i^{-1}`` linear positive semidefinite. The planted ``(x, v)`` is
    made optimal by back-solving ``r_i`` and ``z``.
    """
    rng = np.random.default_rng(seed)
    n, m = int(n), int(m)
    dims = [int(d) for d in block_dims] if block_dims is not None else [int(d) for d in rng.integers(1, 5, m)]
    if len(dims) != m:
        raise ValueError(f"block_dims has {len(dims)} entries for m={m}")

    x_bar = _sparse(rng, n, zero_frac)
    kappa = rng.uniform(0.2, 1.0)
    A = l1_subdifferential(n, kappa)
    a = _l1_selection(rng, x_bar, kappa)

    G = rng.standard_normal((n, n)) / np.sqrt(n)
    K = rng.standard_normal((n, n)) / np.sqrt(n)
    S = 0.5 * G @ G.T + strong * np.eye(n) + 0.5 * (K - K.T)
    C = linear_forward(S, name="C")

    blocks, v_bar = [], []
    z = a + S @ x_bar
    for d in dims:
        L = LinearMap.from_matrix(rng.standard_normal((d, n)) / np.sqrt(n))
        tau = rng.uniform(0.2, 1.0)
        b = _sparse(rng, d, zero_frac)
        v = _l1_selection(rng, b, tau)
        E = rng.standard_normal((d, d)) / np.sqrt(d)
        Dinv = linear_forward(0.2 * E @ E.T, name="Dinv")
        r = L.apply(x_bar) - b - Dinv(v)
        blocks.append(Block(r, l1_subdifferential(d, tau), L, Dinv))
        v_bar.append(v)
        z = z + L.adjoint_apply(v)
    problem = PrimalDualProblem(z, A, C, blocks, metadata={"strongly_monotone_C": strong})
    return ZooProblem("pd-random", "primal_dual", problem, x_bar, np.zeros(n),
                      dual_solution=tuple(v_bar))


ZOO: dict[str, Callable[..., ZooProblem]] = {
    "skew-rotation": skew_rotation,
    "box-shift": box_shift,
    "prox-quadratic": prox_quadratic,
    "lasso2d": lasso2d,
    "lassoN": lassoN,
    "box-ls": box_ls,
    "pd-random": pd_random,
}


def zoo(name: str, **params) -> ZooProblem:
    """Build the named problem; unknown names or parameters raise ``ValueError``."""
    try:
        builder = ZOO[name]
    except KeyError:
        raise ValueError(f"unknown zoo problem {name!r}; known: {', '.join(ZOO)}") from None
    accepted = inspect.signature(builder).parameters
    unknown = set(params) - set(accepted)
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {', '.join(sorted(unknown))}")
    zp = builder(**params)
    zp.params = dict(params)
    return zp


def describe() -> list[tuple[str, str]]:
    return [(name, ((fn.__doc__ or "").strip().splitlines() or [""])[0]) for name, fn in ZOO.items()]
