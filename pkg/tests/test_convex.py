import math

import numpy as np
import pytest

import oracles as orc
from library import prox_library, scalar_library, scalar_oracle
from ifbf import convex as cvx
from ifbf.errors import DimensionError, ParameterError
from ifbf.fbf import FbfParams
from ifbf.operators import LinearMap, certify, soft_threshold
from ifbf.primal_dual import pd_solve
from ifbf.zoo import box_ls, lasso2d

GAMMAS = (0.1, 1.0, 10.0)
PARAMS = FbfParams(sigma=0.05, alpha1=0.01, alpha2=0.01)


# --- prox -------------------------------------------------------------------------------

def test_prox_l1_example_against_golden_section():
    oracle = orc.prox_oracle_1d(lambda y: abs(y), 1.0, 3.0, -5.0, 5.0)
    assert cvx.prox(cvx.l1_norm(1, 1.0), 1.0, [3.0])[0] == pytest.approx(oracle, abs=1e-7)
    assert cvx.prox(cvx.l1_norm(1, 1.0), 1.0, [3.0])[0] == 2.0


def test_prox_box_is_clamp_and_zero_is_identity():
    f = cvx.box_indicator([0.0, 0.0], [1.0, 1.0])
    for g in GAMMAS:
        np.testing.assert_array_equal(cvx.prox(f, g, [2.0, -0.5]), [1.0, 0.0])
        np.testing.assert_array_equal(cvx.prox(cvx.zero_function(2), g, [2.0, -0.5]), [2.0, -0.5])


def test_prox_errors():
    with pytest.raises(ParameterError):
        cvx.prox(cvx.l1_norm(1), 0.0, [1.0])
    with pytest.raises(ParameterError):
        cvx.conjugate_prox(cvx.l1_norm(1), -1.0, [1.0])
    with pytest.raises(DimensionError):
        cvx.prox(cvx.l1_norm(2), 1.0, [1.0])
    with pytest.raises(ValueError):
        cvx.squared_l2(2, scale=0.0)


def test_conjugate_prox_examples():
    assert cvx.conjugate_prox(cvx.l1_norm(1), 1.0, [3.0])[0] == 1.0
    assert 3.0 - cvx.prox(cvx.l1_norm(1), 1.0, [3.0])[0] == 1.0
    for g in GAMMAS:
        np.testing.assert_array_equal(cvx.conjugate_prox(cvx.zero_function(2), g, [4.0, -1.0]), [0.0, 0.0])
    assert cvx.conjugate_prox(cvx.squared_l2(1), 1.0, [4.0])[0] == 2.0


LIB = prox_library()


@pytest.mark.parametrize("entry", LIB, ids=lambda e: e.name)
@pytest.mark.parametrize("gamma", GAMMAS)
def test_moreau_decomposition(entry, gamma):
    rng = np.random.default_rng(41)
    f = entry.obj
    worst = 0.0
    for _ in range(1000):
        x = 5 * rng.standard_normal(f.dim)
        p = cvx.prox(f, gamma, x)
        q = entry.conj(1.0 / gamma, x / gamma)  # prox_{f*/gamma}(x/gamma), closed form
        worst = max(worst, np.max(np.abs(p + gamma * q - x)))
        # conjugate_prox(f, gamma, x) is prox_{gamma f*}(x); compare with the closed form too
        np.testing.assert_allclose(cvx.conjugate_prox(f, gamma, x), entry.conj(gamma, x), rtol=0, atol=1e-10)
    assert worst <= 1e-10


@pytest.mark.parametrize("entry", LIB, ids=lambda e: e.name)
def test_prox_firmly_nonexpansive(entry):
    assert certify(cvx.subdifferential(entry.obj), samples=200, seed=2, scale=3.0).ok


@pytest.mark.parametrize("s", scalar_library(), ids=lambda s: s.name)
def test_prox_matches_golden_section(s):
    rng = np.random.default_rng(43)
    for _ in range(100):
        gamma = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        x = float(rng.uniform(-8, 8))
        assert s.prox(gamma, x) == pytest.approx(scalar_oracle(s, gamma, x), abs=1e-7)


def test_conjugate_values():
    f = cvx.l1_norm(2, 0.5)
    assert f.conj_value([0.5, -0.2]) == 0.0
    assert f.conj_value([0.6, 0.0]) == math.inf
    q = cvx.squared_l2(2, 2.0, [1.0, 0.0])
    u = np.array([0.4, -1.0])
    # f*(u) = sup_x <u, x> - f(x), evaluated at the maximizer x = c + u / a
    xs = np.array([1.0, 0.0]) + u / 2.0
    assert q.conj_value(u) == pytest.approx(np.dot(u, xs) - q.value(xs), abs=1e-14)


# --- smooth functions ----------------------------------------------------------------------

SMOOTH = [
    cvx.quadratic(3, 2.0, [1.0, -1.0, 0.5]),
    cvx.quadratic_form([[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 3.0]], [1.0, 0.0, -2.0]),
    cvx.zero_smooth(3),
]


@pytest.mark.parametrize("h", SMOOTH, ids=lambda h: h.label)
def test_gradient_matches_central_differences(h):
    rng = np.random.default_rng(47)
    for _ in range(100):
        x = 3 * rng.standard_normal(3)
        fd = orc.central_gradient(h.value, x, 1e-5)
        g = h.grad(x)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_quadratic_form_validation_and_constants():
    with pytest.raises(ValueError):
        cvx.quadratic_form([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        cvx.quadratic_form([[-1.0, 0.0], [0.0, 1.0]])
    h = cvx.quadratic_form([[4.0, 0.0], [0.0, 1.0]])
    assert h.lipschitz_grad == pytest.approx(4.0)
    assert h.conj_value([4.0, 1.0]) == pytest.approx(0.5 * (16 / 4 + 1))
    assert cvx.quadratic_form([[1.0, 0.0], [0.0, 0.0]]).conj_value is None


# --- to_inclusion --------------------------------------------------------------------------

def test_to_inclusion_examples():
    b = np.array([0.3, 2.0])
    prob = cvx.ConvexProblem(cvx.box_indicator([0.0, 0.0], [1.0, 1.0]), cvx.quadratic(2, shift=b),
                             [cvx.ConvexBlock(cvx.l1_norm(2), LinearMap.identity(2))])
    inc = cvx.to_inclusion(prob)
    for g in GAMMAS:
        np.testing.assert_array_equal(inc.A.resolvent(g, [2.0, -1.0]), [1.0, 0.0])
    x = np.array([1.5, -0.5])
    np.testing.assert_array_equal(inc.C(x), x - b)
    assert inc.C.lipschitz == 1.0
    D = inc.blocks[0].D_inv
    assert D.lipschitz == 0.0
    np.testing.assert_array_equal(D(np.array([3.0, 1.0])), [0.0, 0.0])
    np.testing.assert_array_equal(inc.z, [0.0, 0.0])
    np.testing.assert_array_equal(inc.blocks[0].r, [0.0, 0.0])


def test_problem_dimension_checks():
    with pytest.raises(DimensionError):
        cvx.ConvexProblem(cvx.zero_function(2), cvx.quadratic(3), [])
    with pytest.raises(DimensionError):
        cvx.ConvexProblem(cvx.zero_function(2), cvx.quadratic(2), [], z=np.zeros(3))


# --- solving ----------------------------------------------------------------------------------

def test_solve_lasso2d():
    zp = lasso2d()
    sol, rep = cvx.solve_convex(zp.problem, PARAMS, tol=1e-10, max_iters=20000)
    assert rep.converged
    np.testing.assert_allclose(sol.x, [2.0, 0.0], atol=1e-7)
    np.testing.assert_allclose(sol.v[0], [1.0, 0.2], atol=1e-7)


def test_solve_box_least_squares():
    zp = box_ls(n=5, seed=3)
    b = zp.problem.h.grad(np.zeros(5)) * -1.0
    sol, rep = cvx.solve_convex(zp.problem, PARAMS, tol=1e-10, max_iters=20000)
    assert rep.converged
    np.testing.assert_allclose(sol.x, np.clip(b, 0.0, 1.0), atol=1e-7)
    assert np.any(b < 0) and np.any(b > 1)


def test_z_shift_relocates_minimizer():
    b = np.array([1.0, -2.0])
    target = np.array([0.5, 0.75])
    h = cvx.quadratic(2, 2.0, b)
    z = h.grad(target)  # then target minimizes h(x) - <x, z>
    prob = cvx.ConvexProblem(cvx.zero_function(2), h, [cvx.ConvexBlock(cvx.zero_function(2), LinearMap.identity(2))],
                             z=z)
    sol, rep = cvx.solve_convex(prob, PARAMS, tol=1e-11, max_iters=20000)
    assert rep.converged
    np.testing.assert_allclose(sol.x, target, atol=1e-8)
    assert cvx.check_optimality(prob, sol.x, sol.v, tol=1e-8)
    assert not cvx.check_optimality(prob, b, sol.v, tol=1e-3)


def test_smoothed_block_huber():
    """``g = tau |.|_1`` smoothed by ``l = ||.||^2 / (2 eps)`` gives the Huber penalty."""
    tau, eps = 1.0, 0.5
    b = np.array([3.0, 0.4, -0.2, -2.5])
    n = b.size

    def huber(u):
        a = np.abs(u)
        return float(np.sum(np.where(a <= tau * eps, a ** 2 / (2 * eps), tau * a - tau ** 2 * eps / 2)))

    block = cvx.ConvexBlock(cvx.l1_norm(n, tau), LinearMap.identity(n), l_conj=cvx.quadratic(n, eps),
                            infconv_value=huber)
    prob = cvx.ConvexProblem(cvx.zero_function(n), cvx.quadratic(n, shift=b), [block])
    # closed form: shrink by tau where |b| > tau (1 + eps), otherwise scale by eps / (1 + eps)
    expected = np.where(np.abs(b) > tau * (1 + eps), b - tau * np.sign(b), b * eps / (1 + eps))
    sol, rep = cvx.solve_convex(prob, PARAMS, tol=1e-11, max_iters=50000)
    assert rep.converged
    np.testing.assert_allclose(sol.x, expected, atol=1e-8)
    assert cvx.to_inclusion(prob).blocks[0].D_inv.lipschitz == eps
    gap = cvx.primal_objective(prob, sol.x) - cvx.dual_objective(prob, sol.v)
    assert abs(gap) <= 1e-7
    assert cvx.check_optimality(prob, sol.x, sol.v, tol=1e-7)


def test_solve_convex_is_pd_solve_bitwise():
    zp = lasso2d()
    a_sol, a = cvx.solve_convex(zp.problem, PARAMS, tol=1e-9, keep_iterates=True)
    b_sol, b = pd_solve(cvx.to_inclusion(zp.problem), PARAMS, tol=1e-9, keep_iterates=True)
    assert a.iterations == b.iterations
    for u, w in zip(a.iterates, b.iterates):
        np.testing.assert_array_equal(u, w)
    np.testing.assert_array_equal(a_sol.x, b_sol.x)
    assert a.residual_history == b.residual_history


# --- objectives and optimality -----------------------------------------------------------------

def test_primal_objective_lasso():
    zp = lasso2d()
    assert cvx.primal_objective(zp.problem, [2.0, 0.0]) == pytest.approx(0.5 * (1 + 0.04) + 2, abs=1e-14)
    assert cvx.primal_objective(zp.problem, [2.0, 0.0]) == pytest.approx(2.52, abs=1e-14)
    assert cvx.dual_objective(zp.problem, [np.array([1.0, 0.2])]) == pytest.approx(2.52, abs=1e-14)


def test_duality_gap_at_converged_pair():
    zp = lasso2d()
    sol, rep = cvx.solve_convex(zp.problem, PARAMS, tol=1e-10)
    gap = cvx.primal_objective(zp.problem, sol.x) - cvx.dual_objective(zp.problem, sol.v)
    assert 0 <= gap <= 1e-6 or abs(gap) <= 1e-12


def test_weak_duality_on_random_points():
    zp = lasso2d()
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = 3 * rng.standard_normal(2)
        v = [rng.uniform(-1, 1, 2)]
        assert cvx.primal_objective(zp.problem, x) >= cvx.dual_objective(zp.problem, v) - 1e-12


def test_objectives_unavailable():
    prob = cvx.ConvexProblem(cvx.l1_norm(2), cvx.quadratic(2), [cvx.ConvexBlock(cvx.l1_norm(2), LinearMap.identity(2))])
    assert cvx.dual_objective(prob, [np.zeros(2)]) is None
    no_value = cvx.ProxFunction(lambda g, x: x.copy(), 2, "opaque")
    prob = cvx.ConvexProblem(no_value, cvx.quadratic(2), [cvx.ConvexBlock(cvx.l1_norm(2), LinearMap.identity(2))])
    assert cvx.primal_objective(prob, np.zeros(2)) is None
    smoothed = cvx.ConvexBlock(cvx.l1_norm(2), LinearMap.identity(2), l_conj=cvx.quadratic(2))
    prob = cvx.ConvexProblem(cvx.zero_function(2), cvx.quadratic(2), [smoothed])
    assert cvx.primal_objective(prob, np.zeros(2)) is None


def test_box_ls_registered_dual():
    zp = box_ls(n=4, seed=1)
    sol, _ = cvx.solve_convex(zp.problem, PARAMS, tol=1e-10)
    gap = cvx.primal_objective(zp.problem, sol.x) - cvx.dual_objective(zp.problem, sol.v)
    assert abs(gap) <= 1e-6


def test_check_optimality_examples():
    zp = lasso2d()
    x, v = np.array([2.0, 0.0]), [np.array([1.0, 0.2])]
    res = cvx.check_optimality(zp.problem, x, v, tol=1e-10)
    assert res.ok and res.primal <= 1e-10 and max(res.dual) <= 1e-10
    rng = np.random.default_rng(1)
    assert not cvx.check_optimality(zp.problem, rng.standard_normal(2), [rng.standard_normal(2)])
    assert cvx.check_optimality(zp.problem, rng.standard_normal(2), [rng.standard_normal(2)], tol=math.inf)


def test_soft_threshold_solution_of_lasso_family():
    rng = np.random.default_rng(9)
    for _ in range(5):
        b, tau = 3 * rng.standard_normal(3), rng.uniform(0.2, 2)
        prob = cvx.ConvexProblem(cvx.zero_function(3), cvx.quadratic(3, shift=b),
                                 [cvx.ConvexBlock(cvx.l1_norm(3, tau), LinearMap.identity(3))])
        x = soft_threshold(b, tau)
        assert cvx.check_optimality(prob, x, [b - x], tol=1e-12)
