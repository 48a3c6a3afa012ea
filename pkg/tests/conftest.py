import numpy as np
import pytest

from mfgcontrols.instances import bump_instance, uniform_instance
from mfgcontrols.picard import PicardOptions, picard_iterate
from mfgcontrols.varsolve import SolverOptions, solve_primal_dual


@pytest.fixture(scope="session")
def uniform_spec():
    return uniform_instance()


@pytest.fixture(scope="session")
def bump_spec():
    return bump_instance()


@pytest.fixture(scope="session")
def uniform_solved(uniform_spec):
    sol, log = solve_primal_dual(uniform_spec, SolverOptions(max_iter=20000, tol_gap=1e-13))
    assert log.converged
    return sol, log


@pytest.fixture(scope="session")
def bump_solved(bump_spec):
    sol, log = solve_primal_dual(bump_spec, SolverOptions(max_iter=60000, tol_gap=1e-6))
    assert log.converged
    return sol, log


@pytest.fixture(scope="session")
def bump_picard_solved(bump_spec):
    result = picard_iterate(bump_spec, PicardOptions(damping=0.05, max_outer=900, tol_fixed_point=1e-10))
    assert result.converged
    return result


def l1_Q(grid, a):
    """L1 norm over the cylinder with interval quadrature on node-slotted fields."""
    return float(np.sum(np.abs(a[1:])) * grid.ht * grid.cell_volume)


def l1_T(grid, a):
    return float(np.sum(np.abs(a[:-1])) * grid.ht)
