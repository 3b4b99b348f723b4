"""Inertial forward-backward-forward splitting for ``0 in A x + B x``.

``A`` is maximally monotone (accessed through its resolvent) and ``B`` is
monotone and ``beta``-Lipschitz (accessed through forward evaluations).
For ``n >= 1``::

    p_n     = J_{lam_n A}[x_n - lam_n B x_n + a1_n (x_n - x_{n-1})]
    x_{n+1} = p_n + lam_n (B x_n - B p_n) + a2_n (x_n - x_{n-1})

Convergence requires ``12 a2^2 + 9 (a1 + a2) + 4 sigma < 1`` for the
inertia caps ``a1, a2`` and a margin ``sigma > 0``, and step sizes bounded
above by :func:`step_bound_general` (or :func:`step_bound_no_inertia2`
when ``a2 = 0``). With both caps zero the scheme is Tseng's method.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteError, ParameterError
from .operators import ForwardOp, MaxMonotoneOp, zero_forward

HYPOTHESIS = "12*alpha2**2 + 9*(alpha1 + alpha2) + 4*sigma < 1"
NO_INERTIA2_HYPOTHESIS = "5*alpha1 + 2*sigma < 1"


def hypothesis_margin(alpha1: float, alpha2: float, sigma: float) -> float:
    """``1 - 12 a2^2 - 9 (a1 + a2) - 4 sigma``; admissible iff positive."""
    return 1.0 - 12.0 * alpha2 ** 2 - 9.0 * (alpha1 + alpha2) - 4.0 * sigma


def check_hypothesis(alpha1: float, alpha2: float, sigma: float) -> None:
    if alpha1 < 0 or alpha2 < 0:
        raise ParameterError(f"inertia caps must be >= 0 (alpha1={alpha1}, alpha2={alpha2})")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not hypothesis_margin(alpha1, alpha2, sigma) > 0:
        lhs = 12.0 * alpha2 ** 2 + 9.0 * (alpha1 + alpha2) + 4.0 * sigma
        raise ParameterError(
            f"parameter hypothesis violated: {HYPOTHESIS} "
            f"(alpha1={alpha1:g}, alpha2={alpha2:g}, sigma={sigma:g} give {lhs:.12g})")


def check_no_inertia2_hypothesis(alpha1: float, sigma: float) -> None:
    if alpha1 < 0 or not sigma > 0:
        raise ParameterError(f"need alpha1 >= 0 and sigma > 0 (alpha1={alpha1}, sigma={sigma})")
    if not 1.0 - 5.0 * alpha1 - 2.0 * sigma > 0:
        raise ParameterError(f"parameter hypothesis violated: {NO_INERTIA2_HYPOTHESIS} "
                             f"(alpha1={alpha1:g}, sigma={sigma:g})")


def step_bound_general(beta: float, alpha1: float, alpha2: float, sigma: float) -> float:
    """Largest admissible step for a ``beta``-Lipschitz forward operator."""
    if not beta > 0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    check_hypothesis(alpha1, alpha2, sigma)
    num = 1.0 - 12.0 * alpha2 ** 2 - 9.0 * (alpha1 + alpha2) - 4.0 * sigma
    den = 12.0 * alpha2 ** 2 + 8.0 * (alpha1 + alpha2) + 4.0 * sigma + 2.0
    return math.sqrt(num / den) / beta


def step_bound_no_inertia2(beta: float, alpha1: float, sigma: float) -> float:
    """Improved step bound valid when the second inertia cap is zero."""
    if not beta > 0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    check_no_inertia2_hypothesis(alpha1, sigma)
    num = 1.0 - 5.0 * alpha1 - 2.0 * sigma
    return math.sqrt(num / (4.0 * alpha1 + 2.0 * sigma + 1.0)) / beta


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    PARAMETER_VIOLATION = "parameter_violation"


@dataclass(frozen=True)
class FbfParams:
    """Parameters of the inertial FBF iteration.

    ``lambda_schedule`` and the ``alpha*_schedule`` callables map the
    iteration index ``n >= 1`` to ``lam_n`` and ``a_{i,n}``. When omitted,
    ``lam_n`` is ``lambda_factor`` times the active step bound and each
    ``a_{i,n}`` ramps linearly from 0 at ``n = 1`` to its cap at
    ``n = ramp + 1``.

    With ``equal_start`` the solver requires ``x0 == x1`` and the first
    inertial coefficients may be nonzero; otherwise ``a_{i,1} = 0`` is
    enforced. ``relaxed_monotonicity`` only requires ``a_{1,n} + a_{2,n}``
    to be nondecreasing instead of each sequence separately.
    ``improved_bound`` selects :func:`step_bound_no_inertia2` whenever
    ``alpha2 == 0``.

    ``condition`` picks the admissibility test: ``"general"`` (default)
    requires ``12 a2^2 + 9 (a1 + a2) + 4 sigma < 1``; ``"no_inertia2"``
    requires ``a2 = 0`` and only ``5 a1 + 2 sigma < 1``, the weaker
    condition under which the improved bound is meaningful. The classical
    Tseng parameters need the latter when ``eps`` is large.
    """

    sigma: float
    alpha1: float = 0.0
    alpha2: float = 0.0
    lambda_min: Optional[float] = None
    lambda_schedule: Optional[Callable[[int], float]] = None
    lambda_factor: float = 0.99
    alpha1_schedule: Optional[Callable[[int], float]] = None
    alpha2_schedule: Optional[Callable[[int], float]] = None
    ramp: int = 10
    equal_start: bool = True
    relaxed_monotonicity: bool = False
    improved_bound: bool = True
    condition: str = "general"

    def __post_init__(self):
        if self.condition == "general":
            check_hypothesis(self.alpha1, self.alpha2, self.sigma)
        elif self.condition == "no_inertia2":
            if self.alpha2 != 0 or not self.improved_bound:
                raise ParameterError("condition 'no_inertia2' needs alpha2 = 0 and improved_bound")
            check_no_inertia2_hypothesis(self.alpha1, self.sigma)
        else:
            raise ParameterError(f"condition must be 'general' or 'no_inertia2', got {self.condition!r}")
        if self.lambda_min is not None and not self.lambda_min > 0:
            raise ParameterError(f"lambda_min must be > 0, got {self.lambda_min}")
        if not 0 < self.lambda_factor <= 1:
            raise ParameterError(f"lambda_factor must lie in (0, 1], got {self.lambda_factor}")
        if self.ramp < 1:
            raise ParameterError(f"ramp must be >= 1, got {self.ramp}")

    @property
    def bound_kind(self) -> str:
        return "no_inertia2" if (self.improved_bound and self.alpha2 == 0) else "general"

    def step_bound(self, beta: float) -> float:
        """Active upper bound on ``lam_n``; infinite when ``beta == 0``."""
        if beta == 0:
            return math.inf
        if self.bound_kind == "no_inertia2":
            return step_bound_no_inertia2(beta, self.alpha1, self.sigma)
        return step_bound_general(beta, self.alpha1, self.alpha2, self.sigma)

    def lam(self, n: int, beta: float) -> float:
        if self.lambda_schedule is not None:
            return float(self.lambda_schedule(n))
        bound = self.step_bound(beta)
        if math.isinf(bound):
            return 1.0 if self.lambda_min is None else self.lambda_min
        return self.lambda_factor * bound

    def alphas(self, n: int) -> tuple[float, float]:
        ramp = min(1.0, (n - 1) / self.ramp)
        a1 = float(self.alpha1_schedule(n)) if self.alpha1_schedule else self.alpha1 * ramp
        a2 = float(self.alpha2_schedule(n)) if self.alpha2_schedule else self.alpha2 * ramp
        return a1, a2

    def coefficients(self, n: int, beta: float, previous=None) -> tuple[float, float, float]:
        """Validated ``(lam_n, a1_n, a2_n)``; raises :class:`ParameterError` with ``index=n``."""
        lam = self.lam(n, beta)
        bound = self.step_bound(beta)
        lo = 0.0 if self.lambda_min is None else self.lambda_min
        if not (lam > 0 and lam >= lo):
            raise ParameterError(f"iteration {n}: step {lam:.12g} below lower bound {lo:.12g}", index=n)
        if lam > bound:
            raise ParameterError(
                f"iteration {n}: step {lam:.12g} exceeds the {self.bound_kind} step bound "
                f"{bound:.12g}", index=n)
        a1, a2 = self.alphas(n)
        for i, (a, cap) in enumerate(((a1, self.alpha1), (a2, self.alpha2)), start=1):
            if not 0 <= a <= cap:
                raise ParameterError(f"iteration {n}: alpha{i}_n = {a:g} outside [0, {cap:g}]", index=n)
        if n == 1 and not self.equal_start and (a1 != 0 or a2 != 0):
            raise ParameterError("iteration 1: alpha_{i,1} must be 0 unless x0 == x1", index=n)
        if previous is not None:
            p1, p2 = previous
            if self.relaxed_monotonicity:
                if a1 + a2 < p1 + p2:
                    raise ParameterError(f"iteration {n}: alpha1_n + alpha2_n decreased", index=n)
            elif a1 < p1 or a2 < p2:
                raise ParameterError(f"iteration {n}: inertial schedule decreased", index=n)
        return lam, a1, a2


def classical_tseng_params(beta: float, epsilon: float, **kwargs) -> FbfParams:
    """Parameters reducing the scheme to Tseng's method with steps in ``[eps, (1-eps)/beta]``."""
    if not beta > 0:
        raise ParameterError(f"beta must be > 0, got {beta}")
    if not 0 < epsilon < 1.0 / (beta + 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1/(beta+1)) = (0, {1.0 / (beta + 1.0):g}), "
                             f"got {epsilon}")
    q = (1.0 - epsilon) ** 2
    sigma = (1.0 - q) / (2.0 * (1.0 + q))
    kwargs.setdefault("condition", "no_inertia2")
    return FbfParams(sigma=sigma, alpha1=0.0, alpha2=0.0, lambda_min=epsilon, **kwargs)


@dataclass(frozen=True)
class FbfState:
    n: int
    x_prev: np.ndarray
    x_curr: np.ndarray
    p_last: Optional[np.ndarray] = None
    alphas: Optional[tuple[float, float]] = None


def _finite(v: np.ndarray, what: str, n: int) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"iteration {n}: non-finite {what}", index=n)
    return v


def fbf_step(A: MaxMonotoneOp, B: ForwardOp, params: FbfParams, state: FbfState) -> FbfState:
    """One inertial FBF step: one resolvent and two evaluations of ``B``."""
    n = state.n
    lam, a1, a2 = params.coefficients(n, B.lipschitz, state.alphas)
    x, d = state.x_curr, state.x_curr - state.x_prev
    Bx = B(x)
    p = _finite(A.resolvent(lam, x - lam * Bx + a1 * d), "resolvent output", n)
    x_next = _finite(p + lam * (Bx - B(p)) + a2 * d, "iterate", n)
    return FbfState(n + 1, x, x_next, p, (a1, a2))


@dataclass
class SolveReport:
    """Outcome and convergence traces of a run.

    ``sq_step_partial_sums[k]`` and ``sq_gap_partial_sums[k]`` are the
    running sums of ``||x_{j+1} - x_j||^2`` and ``||x_j - p_j||^2`` over the
    first ``k + 1`` iterations. ``component_series`` holds the same sums per
    block for primal-dual runs.
    """

    termination: Termination
    iterations: int
    x: np.ndarray
    p: Optional[np.ndarray]
    residual_history: list = field(default_factory=list)
    sq_step_partial_sums: list = field(default_factory=list)
    sq_gap_partial_sums: list = field(default_factory=list)
    iterates: Optional[list] = None
    violation: Optional[str] = None
    violation_index: Optional[int] = None
    step_bound: float = math.nan
    bound_kind: str = "general"
    notes: list = field(default_factory=list)
    component_series: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.termination is Termination.CONVERGED

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.nan


class _SeriesRecorder:
    """Running sums of squared step and gap norms, overall and per component."""

    def __init__(self, names=()):
        self.step, self.gap = [], []
        self._s = self._g = 0.0
        self.components = {k: {"step": [], "gap": []} for k in names}
        self._cs = {k: [0.0, 0.0] for k in names}

    def add(self, step_sq: float, gap_sq: float, parts=None):
        self._s += step_sq
        self._g += gap_sq
        self.step.append(self._s)
        self.gap.append(self._g)
        for k, (s, g) in (parts or {}).items():
            acc = self._cs[k]
            acc[0] += s
            acc[1] += g
            self.components[k]["step"].append(acc[0])
            self.components[k]["gap"].append(acc[1])


def relative_residual(x: np.ndarray, p: np.ndarray, n: Optional[int] = None) -> float:
    """``||x - p|| / max(1, ||x||)``.

    With an iteration index ``n``, an overflowing residual raises
    :class:`NonFiniteError` naming that iteration.
    """
    r = float(np.linalg.norm(x - p)) / max(1.0, float(np.linalg.norm(x)))
    if n is not None and not math.isfinite(r):
        raise NonFiniteError(f"iteration {n}: non-finite residual", index=n)
    return r


def _start_checks(params: FbfParams, x0, x1, dim: int, beta: float):
    x0 = np.array(x0, dtype=float).reshape(-1)
    x1 = x0.copy() if x1 is None else np.array(x1, dtype=float).reshape(-1)
    if x0.shape != (dim,) or x1.shape != (dim,):
        raise ParameterError(f"starting points must have dimension {dim}")
    if not (np.all(np.isfinite(x0)) and np.all(np.isfinite(x1))):
        raise NonFiniteError("non-finite starting point", index=0)
    if params.equal_start and not np.array_equal(x0, x1):
        raise ParameterError("equal_start requires x0 == x1")
    bound = params.step_bound(beta)
    if params.lambda_min is not None and params.lambda_min > bound:
        raise ParameterError(f"lambda_min {params.lambda_min:g} exceeds the {params.bound_kind} "
                             f"step bound {bound:.12g}")
    return x0, x1, bound


def solve(A: MaxMonotoneOp, B: ForwardOp, params: FbfParams, x0, x1=None, tol: float = 1e-8,
          max_iters: int = 10000, keep_iterates: bool = False,
          callback: Optional[Callable] = None) -> SolveReport:
    """Run inertial FBF from ``(x0, x1)`` until the relative residual ``||x_n - p_n|| / max(1, ||x_n||)`` drops to ``tol``.

    ``x1`` defaults to ``x0``. A schedule violation stops the run with
    termination ``parameter_violation``; non-finite values raise
    :class:`NonFiniteError`. ``callback(n, state)`` is called after every
    step with the new state.
    """
    if A.dim != B.dim:
        raise ParameterError(f"operator dimensions differ: {A.dim} vs {B.dim}")
    x0, x1, bound = _start_checks(params, x0, x1, A.dim, B.lipschitz)
    state = FbfState(1, x0, x1)
    rec = _SeriesRecorder()
    residuals = []
    iterates = [x1] if keep_iterates else None
    report = SolveReport(Termination.MAX_ITERS, 0, x1, None, residuals, rec.step, rec.gap,
                         iterates, step_bound=bound, bound_kind=params.bound_kind)
    for _ in range(max_iters):
        try:
            new = fbf_step(A, B, params, state)
        except ParameterError as exc:
            report.termination = Termination.PARAMETER_VIOLATION
            report.violation, report.violation_index = str(exc), exc.index
            return report
        x, p, x_next = state.x_curr, new.p_last, new.x_curr
        rec.add(float(np.sum((x_next - x) ** 2)), float(np.sum((x - p) ** 2)))
        residuals.append(relative_residual(x, p, new.n - 1))
        if keep_iterates:
            iterates.append(x_next)
        if callback is not None:
            callback(new.n - 1, new)
        state = new
        report.iterations, report.x, report.p = state.n - 1, x_next, p
        if residuals[-1] <= tol:
            report.termination = Termination.CONVERGED
            break
    return report


def inertial_proximal_point(A: MaxMonotoneOp, params: FbfParams, x0, x1=None, tol: float = 1e-8,
                            max_iters: int = 10000, **kwargs) -> SolveReport:
    """:func:`solve` with the zero forward operator."""
    return solve(A, zero_forward(A.dim), params, x0, x1, tol=tol, max_iters=max_iters, **kwargs)


@dataclass
class SeriesSummary:
    total: float
    tail_fraction: float
    consistent: bool


@dataclass
class SummabilityDiagnostics:
    series: dict
    threshold: float

    @property
    def consistent(self) -> bool:
        return all(s.consistent for s in self.series.values())


def tail_fraction(partial_sums) -> float:
    """Share of the total contributed by the last ``floor(n/2)`` terms."""
    n = len(partial_sums)
    if n == 0:
        return 0.0
    total = partial_sums[-1]
    k = n // 2
    if k == 0 or total == 0:
        return 0.0
    return (total - partial_sums[n - k - 1]) / total


def summability_diagnostics(report: SolveReport, threshold: float = 0.05) -> SummabilityDiagnostics:
    """Check that the monitored squared-norm series look summable.

    A series counts as consistent with summability when its last half of
    terms contributes less than ``threshold`` of the total.
    """
    out = {}
    named = {"step": report.sq_step_partial_sums, "gap": report.sq_gap_partial_sums}
    for comp, sums in report.component_series.items():
        named[f"{comp}.step"] = sums["step"]
        named[f"{comp}.gap"] = sums["gap"]
    for name, sums in named.items():
        frac = tail_fraction(sums)
        out[name] = SeriesSummary(sums[-1] if sums else 0.0, frac, frac < threshold)
    return SummabilityDiagnostics(out, threshold)
