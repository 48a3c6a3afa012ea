import numpy as np
import pytest

from mfgcontrols.errors import StepSizeViolation
from mfgcontrols.grid import Grid, grad_values
from mfgcontrols.instances import uniform_instance
from mfgcontrols.model import ProblemSpec
from mfgcontrols.varsolve import (
    SolverOptions,
    aggregate_flux,
    eval_B,
    eval_D,
    fp_adjoint,
    fp_constraint,
    solve_primal_dual,
)


@pytest.fixture(scope="module")
def spec8():
    g = Grid(d=1, nx=8, nt=4, T=1.0)
    return ProblemSpec(grid=g, q=2, r=2, s=2, m0=np.ones(8))


def exact_uniform_fields(spec):
    g = spec.grid
    t = g.times()
    u = np.tile((g.T - t)[:, None], (1, g.nx))
    m = np.ones(g.scalar_shape)
    w = np.zeros(g.vector_shape)
    P = np.zeros((g.nt + 1, spec.k))
    gamma = np.ones(g.scalar_shape)
    return u, m, w, P, gamma


# -- functionals ---------------------------------------------------------------


def test_eval_B_uniform_value(spec8):
    _, m, w, _, _ = exact_uniform_fields(spec8)
    assert eval_B(m, w, spec8) == pytest.approx(0.5)  # T/2 with theta = 1, q = 2


def test_eval_B_perspective_violation_is_inf(spec8):
    _, m, w, _, _ = exact_uniform_fields(spec8)
    m[2, 3] = 0.0
    w[2, 0, 3] = 0.5
    assert eval_B(m, w, spec8) == np.inf
    m[1, 1] = -1e-3
    assert eval_B(m, w, spec8) == np.inf


def test_eval_B_terminal_cost():
    g = Grid(d=1, nx=8, nt=4, T=1.0)
    spec = ProblemSpec(grid=g, q=2, r=2, s=2, m0=np.ones(8), uT=3.0)
    m = np.ones(g.scalar_shape)
    w = np.zeros(g.vector_shape)
    assert eval_B(m, w, spec) == pytest.approx(0.5 + 3.0)


def test_eval_D_values(spec8):
    g = spec8.grid
    u = np.zeros(g.scalar_shape)
    P = np.zeros((g.nt + 1, 1))
    gamma = np.zeros(g.scalar_shape)
    assert eval_D(u, P, gamma, spec8) == 0.0
    u1 = np.ones(g.scalar_shape)
    assert eval_D(u1, P, gamma, spec8) == pytest.approx(-1.0)
    gamma1 = np.ones(g.scalar_shape)
    assert eval_D(u, P, gamma1, spec8) == pytest.approx(0.5)  # F*(1) = 1/2 over the cylinder


def test_duality_gap_zero_at_exact_uniform(spec8):
    u, m, w, P, gamma = exact_uniform_fields(spec8)
    assert abs(eval_B(m, w, spec8) + eval_D(u, P, gamma, spec8)) <= 1e-14


# -- transport constraint --------------------------------------------------------


def test_fp_constraint_stationary(spec8):
    g = spec8.grid
    m = np.broadcast_to(spec8.m0, g.scalar_shape).copy()
    w = np.zeros(g.vector_shape)
    assert np.max(np.abs(fp_constraint(m, w, spec8))) == 0.0


def test_fp_constraint_linearity_in_divergence(spec8):
    g = spec8.grid
    rng = np.random.default_rng(0)
    m = np.broadcast_to(spec8.m0, g.scalar_shape).copy()
    pot = rng.standard_normal(g.scalar_shape)
    w = grad_values(g, pot)
    R = fp_constraint(m, w, spec8)
    from mfgcontrols.grid import div_values

    assert np.allclose(R[1:], div_values(g, w[1:]))
    assert np.all(R[0] == 0.0)


def test_fp_adjoint_identity(spec8):
    g = spec8.grid
    rng = np.random.default_rng(1)
    m = rng.standard_normal(g.scalar_shape)
    w = rng.standard_normal(g.vector_shape)
    U = rng.standard_normal(g.scalar_shape)
    R = fp_constraint(m, w, spec8)
    gm, gw = fp_adjoint(U, spec8)
    lhs = float(np.sum(R * U))
    rhs = float(np.sum(gm * m) + np.sum(gw * w)) - float(np.sum(U[0] * spec8.m0))
    scale = np.linalg.norm(U) * (np.linalg.norm(m) + np.linalg.norm(w))
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_fp_adjoint_identity_with_diffusion():
    g = Grid(d=2, nx=6, nt=3, T=1.0)
    spec = ProblemSpec(grid=g, q=2, r=2, s=2, A=np.array([[0.4, 0.1], [0.1, 0.2]]),
                       m0=np.ones((6, 6)))
    rng = np.random.default_rng(2)
    m = rng.standard_normal(g.scalar_shape)
    w = rng.standard_normal(g.vector_shape)
    U = rng.standard_normal(g.scalar_shape)
    R = fp_constraint(m, w, spec)
    gm, gw = fp_adjoint(U, spec)
    lhs = float(np.sum(R * U))
    rhs = float(np.sum(gm * m) + np.sum(gw * w)) - float(np.sum(U[0] * spec.m0))
    scale = np.linalg.norm(U) * (np.linalg.norm(m) + np.linalg.norm(w))
    assert abs(lhs - rhs) <= 1e-12 * scale


# -- aggregation ----------------------------------------------------------------


def test_aggregate_flux_zero_and_unit(spec8):
    g = spec8.grid
    assert np.all(aggregate_flux(np.zeros(g.vector_shape), spec8) == 0.0)
    w = np.ones(g.vector_shape)
    z = aggregate_flux(w, spec8)
    assert np.allclose(z, 1.0)  # unit-volume torus, phi = 1


def test_aggregate_flux_mean_zero_kernel():
    # s = 1.25 keeps 1/s + 1/(p r) >= 1, so a varying kernel is admissible
    g = Grid(d=1, nx=16, nt=4, T=1.0)
    x = g.axis_coords()
    phi = np.sin(2 * np.pi * x).reshape(1, 1, 16)
    spec = ProblemSpec(grid=g, q=2, r=2, s=1.25, phi=phi, m0=np.ones(16))
    from mfgcontrols.model import check_assumptions

    assert check_assumptions(spec).passed
    z = aggregate_flux(np.ones(g.vector_shape), spec)
    assert np.max(np.abs(z)) <= 1e-12


# -- the saddle-point loop --------------------------------------------------------


def test_uniform_instance_converges():
    spec = uniform_instance(nx=16, nt=16)
    sol, log = solve_primal_dual(spec, SolverOptions(max_iter=20000, tol_gap=1e-8))
    assert log.converged
    g = spec.grid
    t = g.times()
    assert np.max(np.abs(sol.m - 1.0)) <= 1e-6
    assert np.max(np.abs(sol.w)) <= 1e-6
    assert np.max(np.abs(sol.P)) <= 1e-6
    assert np.max(np.abs(sol.u - (g.T - t)[:, None])) <= 1e-5
    assert np.max(np.abs(sol.gamma - 1.0)) <= 1e-6


def test_warm_start_is_fixed_point(uniform_solved, uniform_spec):
    sol, _ = uniform_solved
    sol2, log2 = solve_primal_dual(uniform_spec, SolverOptions(max_iter=50, tol_gap=1e-10), init=sol)
    assert log2.converged
    assert log2.iterations <= 10


def test_gap_envelope_monotone(uniform_spec):
    _, log = solve_primal_dual(uniform_spec, SolverOptions(max_iter=500, tol_gap=0.0))
    env = np.minimum.accumulate(np.abs(log.gap))
    assert np.all(np.diff(env) <= 0.0 + 1e-30)


def test_m_min_nonnegative_along_iterates(uniform_spec):
    _, log = solve_primal_dual(uniform_spec, SolverOptions(max_iter=300, tol_gap=0.0))
    assert log.m_min >= -1e-12


def test_step_size_violation():
    spec = uniform_instance(nx=8, nt=4)
    with pytest.raises(StepSizeViolation):
        solve_primal_dual(spec, SolverOptions(tau=1.0, sigma_step=1.0, max_iter=5))


def test_uniform_instance_2d():
    g = Grid(d=2, nx=8, nt=4, T=1.0)
    spec = ProblemSpec(grid=g, q=2, r=2, s=2, m0=np.ones((8, 8)))
    sol, log = solve_primal_dual(spec, SolverOptions(max_iter=20000, tol_gap=1e-9))
    assert log.converged
    t = g.times()
    assert np.max(np.abs(sol.m - 1.0)) <= 1e-6
    assert np.max(np.abs(sol.u - (1.0 - t)[:, None, None])) <= 1e-5


def test_solver_with_two_price_components():
    g = Grid(d=1, nx=16, nt=8, T=1.0)
    x = g.axis_coords()
    phi = np.array([[1.0], [-0.5]])
    spec = ProblemSpec(grid=g, q=2, r=2, s=2, phi=phi, k=2,
                       m0=1.0 + 0.3 * np.sin(2 * np.pi * x), uT=0.2 * np.cos(2 * np.pi * x))
    sol, log = solve_primal_dual(spec, SolverOptions(max_iter=30000, tol_gap=1e-7))
    assert log.converged
    assert sol.P.shape == (g.nt + 1, 2)
    # the second kernel row is -1/2 of the first, so P tracks that ratio
    z = aggregate_flux(sol.w, spec)
    assert np.allclose(z[:, 1], -0.5 * z[:, 0], atol=1e-12)


def test_weak_duality_feasible_pairs(uniform_spec):
    # D evaluated at any duals with a finalized gamma dominates -B of any
    # transport-feasible pair
    spec = uniform_spec
    g = spec.grid
    rng = np.random.default_rng(3)
    m = np.broadcast_to(spec.m0, g.scalar_shape).copy()
    w = np.zeros(g.vector_shape)
    B = eval_B(m, w, spec)
    for _ in range(5):
        u = rng.standard_normal(g.scalar_shape)
        P = rng.standard_normal((g.nt + 1, 1))
        m_other = np.abs(rng.standard_normal(g.scalar_shape)) + 0.1
        gamma = spec.coupling_f(m_other)
        assert B + eval_D(u, P, gamma, spec) >= -1e-8
