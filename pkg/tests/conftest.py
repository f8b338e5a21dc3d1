"""Shared fixtures: meshes and solves are expensive, so everything reusable
is session-scoped and computed once."""

import numpy as np
import pytest

from plapd.eigen import first_eigenpair
from plapd.existence import HomotopyConfig, fixed_point_solve
from plapd.fem import InnerProblem, inner_solve
from plapd.geometry import mesh_disc, mesh_polygon, refine
from plapd.nonlinearity import power


@pytest.fixture(scope="session")
def disc_coarse():
    return mesh_disc(1.0, 0.1)


@pytest.fixture(scope="session")
def disc_fine():
    return mesh_disc(1.0, 0.05)


@pytest.fixture(scope="session")
def disc_refined(disc_fine):
    return refine(disc_fine)


@pytest.fixture(scope="session")
def square_mesh():
    return mesh_polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)], 0.15)


@pytest.fixture(scope="session")
def eigenpair_p2(disc_fine):
    return first_eigenpair(2.0, disc_fine, tol=1e-8)


@pytest.fixture(scope="session")
def cubic_solution(disc_fine):
    """Positive solution of -Delta u = u^3 on the unit disc (criterion 9
    workhorse, shared by the identity and acceptance tests)."""
    f = power(3.0)
    cfg = HomotopyConfig(Lambda=0.0, lambda0=0.0, max_outer=200)
    bp = fixed_point_solve(f, 2.0, cfg, disc_fine, t=0.0)
    assert bp.converged and bp.solution is not None
    return bp


@pytest.fixture(scope="session")
def torsion_solves(disc_fine):
    """FEM torsion solutions (g = 1) on the fine disc for p in {1.5, 2, 3}."""
    out = {}
    for p in (1.5, 2.0, 3.0):
        rep = inner_solve(InnerProblem(disc_fine, p, 1.0, tol=1e-10))
        assert rep.converged
        out[p] = rep
    return out


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260824)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-gate lines where capture cannot swallow them."""
    import _gate
    if _gate.LINES:
        terminalreporter.section("acceptance gate")
        for line in _gate.LINES:
            terminalreporter.write_line(line)
