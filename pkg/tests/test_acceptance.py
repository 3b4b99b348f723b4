"""Acceptance suite: ten end-to-end criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the report lines.
Every criterion is timed end to end, including the oracle work it needs.
"""

import math
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

import oracles as orc
from library import (prox_library, random_problem, random_state, resolvent_library, run_equivalence,
                     scalar_library, scalar_oracle)
from ifbf import convex as cvx
from ifbf import runner
from ifbf.errors import ParameterError
from ifbf.fbf import (HYPOTHESIS, FbfParams, Termination, classical_tseng_params, solve,
                      step_bound_general)
from ifbf.operators import inverse_resolvent, make_skew, zero_operator
from ifbf.primal_dual import pd_solve
from ifbf.zoo import lassoN, pd_random

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
INERTIAL = dict(sigma=0.05, alpha1=0.01, alpha2=0.01)
ROT = [[0.0, 1.0], [-1.0, 0.0]]
_runs = {}


def verdict(k, title, checks, elapsed, budget=None):
    """Print the report line for criterion ``k`` and fail the test if any check failed."""
    failed = [name for name, ok in checks if not ok]
    if budget is not None and elapsed >= budget:
        failed.append(f"runtime {elapsed:.4f}s >= {budget}s")
    limit = f", budget {budget}s" if budget is not None else ""
    status = "PASS" if not failed else "FAIL"
    print(f"\n[{status}] criterion {k}: {title} ({elapsed:.4f}s{limit})"
          + ("" if not failed else f" failed: {'; '.join(failed)}"))
    assert not failed, failed


def tail_share(partial_sums):
    """Share of the last floor(n/2) terms in the total, computed from the partial sums."""
    n = len(partial_sums)
    k = n // 2
    total = partial_sums[-1]
    if k == 0 or total == 0:
        return 0.0
    return (total - partial_sums[n - k - 1]) / total


# --- shared converged runs (also used by the summability criterion) ---------------------------

def skew_run():
    if "skew" not in _runs:
        p = FbfParams(sigma=0.1, lambda_schedule=lambda n: 0.5)
        _runs["skew"] = solve(zero_operator(2), make_skew(ROT), p, [1.0, 0.0], tol=1e-8,
                              max_iters=1000, keep_iterates=True)
    return _runs["skew"]


def lasso_run():
    if "lassoN" not in _runs:
        zp = lassoN(n=10)
        sol, rep = cvx.solve_convex(zp.problem, FbfParams(**INERTIAL), tol=1e-10, max_iters=20000)
        _runs["lassoN"] = (zp, sol, rep)
    return _runs["lassoN"]


def pd_run(seed):
    key = f"pd{seed}"
    if key not in _runs:
        zp = pd_random(seed=seed)
        sol, rep = pd_solve(zp.problem, FbfParams(**INERTIAL), tol=1e-10, max_iters=50000)
        _runs[key] = (zp, sol, rep)
    return _runs[key]


def compare_run():
    if "compare" not in _runs:
        out = Path(tempfile.mkdtemp(prefix="ifbf-acceptance-"))
        a = runner.load_config(CONFIGS / "lasso2d_inertial.toml").with_overrides(trace_path=str(out / "a.csv"))
        b = runner.load_config(CONFIGS / "lasso2d_classical.toml").with_overrides(trace_path=str(out / "b.csv"))
        _runs["compare"] = runner.compare(a, b)
    return _runs["compare"]


# --- criteria ----------------------------------------------------------------------------------------

def test_01_classical_reduction():
    t0 = time.perf_counter()
    p = classical_tseng_params(1.0, 0.1)
    bound = p.step_bound(1.0)
    elapsed = time.perf_counter() - t0
    sigma = (1 - 0.81) / (2 * 1.81)
    verdict(1, "classical parameters from beta=1, eps=0.1", [
        (f"sigma {p.sigma!r} vs {sigma!r}", abs(p.sigma - sigma) <= 1e-15),
        (f"upper bound {bound!r} vs 0.9", abs(bound - 0.9) <= 1e-15),
        (f"lower bound {p.lambda_min!r} vs 0.1", abs(p.lambda_min - 0.1) <= 1e-15),
        ("no inertia", p.alpha1 == 0.0 and p.alpha2 == 0.0),
    ], elapsed, budget=1e-3)


def test_02_skew_rotation_contraction():
    t0 = time.perf_counter()
    rep = skew_run()
    norms = [np.linalg.norm(x) for x in rep.iterates]
    elapsed = time.perf_counter() - t0
    r = math.sqrt(1 - 0.5 ** 2 + 0.5 ** 4)
    assert r == math.sqrt(0.8125)
    worst = max(abs(norms[k + 1] / norms[k] - r) for k in range(50))
    predicted = orc.rotation_prediction(0.5, 1.0, 1e-8)
    verdict(2, "skew rotation, lambda=0.5", [
        (f"ratio deviation {worst:.2e} over 50 steps", len(norms) > 50 and worst <= 1e-10),
        ("converged", rep.termination is Termination.CONVERGED),
        (f"{rep.iterations} iterations vs predicted {predicted}", abs(rep.iterations - predicted) <= 1),
    ], elapsed, budget=0.1)


def test_03_moreau_suite():
    t0 = time.perf_counter()
    worst_sum = worst_inv = 0.0
    cases = 0
    rng = np.random.default_rng(3)
    pairs = [(e, e.obj.resolvent, inverse_resolvent) for e in resolvent_library()]
    pairs += [(e, e.obj.prox, cvx.conjugate_prox) for e in prox_library()]
    for gamma in (0.1, 1.0, 10.0):
        for e, forward, conj in pairs:
            X = 5 * rng.standard_normal((1000, e.obj.dim))
            Q = np.array([e.conj(1.0 / gamma, x / gamma) for x in X])
            P = np.array([forward(gamma, x) for x in X])
            R = np.array([conj(e.obj, 1.0 / gamma, x / gamma) for x in X])
            worst_sum = max(worst_sum, float(np.max(np.abs(P + gamma * Q - X))))
            worst_inv = max(worst_inv, float(np.max(np.abs(R - Q))))
            cases += 1
    elapsed = time.perf_counter() - t0
    verdict(3, f"Moreau decomposition, {cases} operator/gamma cases x 1000 points", [
        (f"reconstruction error {worst_sum:.2e}", worst_sum <= 1e-10),
        (f"inverse-resolvent error {worst_inv:.2e}", worst_inv <= 1e-10),
    ], elapsed, budget=1.0)


def test_04_prox_oracle_agreement():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst, names = 0.0, []
    for s in scalar_library():
        for _ in range(100):
            gamma = float(np.exp(rng.uniform(math.log(0.1), math.log(10.0))))
            x = float(rng.uniform(-8.0, 8.0))
            err = abs(s.prox(gamma, x) - scalar_oracle(s, gamma, x))
            worst = max(worst, err)
            if err > 1e-7:
                names.append(s.name)
    elapsed = time.perf_counter() - t0
    verdict(4, f"golden-section agreement, {len(scalar_library())} one-dimensional operators x 100 pairs", [
        (f"max deviation {worst:.2e} ({sorted(set(names))})", worst <= 1e-7),
    ], elapsed, budget=1.0)


def test_05_scheme_equivalence():
    t0 = time.perf_counter()
    worst, shapes = 0.0, []
    for seed in range(10):
        p = random_problem(seed)
        shapes.append((p.space.head_dim, p.space.block_dims))
        worst = max(worst, run_equivalence(p, FbfParams(**INERTIAL, equal_start=False), random_state(p, seed)))
    elapsed = time.perf_counter() - t0
    verdict(5, "primal-dual step equals FBF on the product space, 10 instances x 100 iterations", [
        (f"max coordinate gap {worst:.2e}", worst <= 1e-12),
        ("m <= 3 and dims <= 8", all(len(b) <= 3 and h <= 8 and max(b) <= 8 for h, b in shapes)),
    ], elapsed, budget=2.0)


def test_06_lasso_n10():
    t0 = time.perf_counter()
    zp, sol, rep = lasso_run()
    gap = cvx.primal_objective(zp.problem, sol.x) - cvx.dual_objective(zp.problem, sol.v)
    opt = cvx.check_optimality(zp.problem, sol.x, sol.v, tol=1e-6)
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(sol.x - zp.solution)))
    verdict(6, "lassoN (n=10) against soft thresholding", [
        (f"error {err:.2e}", err <= 1e-6),
        (f"{rep.iterations} iterations", rep.termination is Termination.CONVERGED and rep.iterations <= 20000),
        (f"objective gap {gap:.2e}", abs(gap) <= 1e-6),
        (f"optimality residuals {opt.primal:.1e}, {max(opt.dual):.1e}", bool(opt)),
    ], elapsed, budget=2.0)


@pytest.mark.parametrize("seed", range(5))
def test_07_planted_pd_random(seed):
    t0 = time.perf_counter()
    zp, sol, rep = pd_run(seed)
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(sol.x - zp.solution)))
    verdict(7, f"pd-random seed {seed}", [
        ("unique by construction", zp.problem.metadata.get("strongly_monotone_C", 0) > 0),
        (f"optimality residual {sol.residuals.total:.2e}", sol.residuals.total <= 1e-6),
        (f"primal error {err:.2e}", err <= 1e-5),
        (f"{rep.iterations} iterations", rep.termination is Termination.CONVERGED),
    ], elapsed, budget=5.0)


def test_09_validation_completeness():
    t0 = time.perf_counter()
    checks = []
    messages_ok = True

    def accepted(a1, a2, s):
        nonlocal messages_ok
        try:
            FbfParams(sigma=s, alpha1=a1, alpha2=a2)
            return True
        except ParameterError as exc:
            messages_ok &= HYPOTHESIS in str(exc)
            return False

    # dyadic grid: every quantity is exact in binary, so the boundary itself is representable
    wrong = []
    for i in range(0, 8):
        for j in range(0, 8):
            a1, a2 = i / 128, j / 128
            edge = (1 - 12 * a2 ** 2 - 9 * (a1 + a2)) / 4
            if edge <= 2.0 ** -20:
                if accepted(a1, a2, 2.0 ** -20):
                    wrong.append((a1, a2, "no sigma"))
                continue
            assert 12 * a2 ** 2 + 9 * (a1 + a2) + 4 * edge == 1.0
            for s, want in ((edge - 2.0 ** -20, True), (edge, False), (edge + 2.0 ** -20, False)):
                if accepted(a1, a2, s) != want:
                    wrong.append((a1, a2, s))
    checks.append((f"dyadic boundary grid, {len(wrong)} misclassified", not wrong))
    # random points straddling the boundary by a relative margin of 1e-9
    rng = np.random.default_rng(9)
    wrong = []
    for _ in range(500):
        a1, a2 = rng.uniform(0, 0.05, 2)
        edge = (1 - 12 * a2 ** 2 - 9 * (a1 + a2)) / 4
        if accepted(a1, a2, edge * (1 - 1e-9)) is not True or accepted(a1, a2, edge * (1 + 1e-9)):
            wrong.append((a1, a2))
    checks.append((f"random straddling grid, {len(wrong)} misclassified", not wrong))
    checks.append(("rejections name the inequality", messages_ok))
    # a step above the general bound at iteration 7
    params = dict(INERTIAL)
    bound = step_bound_general(1.0, params["alpha1"], params["alpha2"], params["sigma"])
    sched = lambda n: 0.5 * bound if n < 7 else bound * (1 + 1e-9)
    rep = solve(zero_operator(2), make_skew(ROT), FbfParams(**params, lambda_schedule=sched),
                [1.0, 0.0], tol=0.0, max_iters=50)
    checks.append((f"step violation at iteration {rep.violation_index}",
                   rep.termination is Termination.PARAMETER_VIOLATION and rep.violation_index == 7
                   and rep.iterations == 6 and "general step bound" in (rep.violation or "")))
    elapsed = time.perf_counter() - t0
    verdict(9, "validation at the hypothesis boundary and step-size rejection", checks, elapsed)


def test_10_inertial_vs_classical():
    t0 = time.perf_counter()
    cmp = compare_run()
    elapsed = time.perf_counter() - t0
    report = cmp.as_dict()
    verdict(10, "inertial vs classical on lasso2d", [
        (f"final distance {cmp.final_distance:.2e}", cmp.final_distance is not None and cmp.final_distance <= 1e-5),
        (f"iterations {report['iterations']}", all(isinstance(k, int) and k > 0 for k in report["iterations"])),
        ("both converged", cmp.a.termination == cmp.b.termination == "converged"),
        ("both traces written", all(Path(t).exists() for t in report["traces"])),
        ("classical run uses eps=0.1", cmp.b.config.classical_epsilon == 0.1),
    ], elapsed)


# summability runs last so the criteria above time their own solves
def test_08_summability():
    t0 = time.perf_counter()
    reports = {"skew-rotation": skew_run(), "lassoN": lasso_run()[2]}
    for seed in range(5):
        reports[f"pd-random/{seed}"] = pd_run(seed)[2]
    cmp = compare_run()
    reports["lasso2d/inertial"], reports["lasso2d/classical"] = cmp.a.report, cmp.b.report
    elapsed = time.perf_counter() - t0
    checks = []
    for name, rep in reports.items():
        assert rep.termination is Termination.CONVERGED, name
        step, gap = tail_share(rep.sq_step_partial_sums), tail_share(rep.sq_gap_partial_sums)
        checks.append((f"{name}: tail shares {step:.1e}, {gap:.1e}", step < 0.05 and gap < 0.05))
    verdict(8, f"last-half share of both series on {len(reports)} converged runs", checks, elapsed)
