"""Simplex utilities and the projected penalty descent."""

import numpy as np
import pytest

from config import SolverConfig
from solvers.penalty import PenaltyDescent, SimplexBlock, fd_gradient, project
from utils.tables import lattice_size, simplex_lattice, simplex_project, total_variation


def test_projection_keeps_distributions():
    rows = np.array([[0.2, 0.3, 0.5], [1.0, 0.0, 0.0]])
    assert np.allclose(simplex_project(rows), rows)


def test_projection_of_outside_points():
    assert np.allclose(simplex_project(np.array([2.0, 0.0])), [1.0, 0.0])
    assert np.allclose(simplex_project(np.array([0.5, 0.5, 0.5])), [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(simplex_project(np.array([-1.0, 0.2, 0.4])), [0.0, 0.4, 0.6])


def test_projection_of_random_rows():
    rows = np.random.default_rng(0).normal(size=(50, 4))
    projected = simplex_project(rows)
    assert np.all(projected >= 0)
    assert np.allclose(projected.sum(axis=-1), 1.0)


def test_lattice():
    points = simplex_lattice(3, 2)
    assert points.shape == (lattice_size(3, 2), 3) == (6, 3)
    assert np.allclose(points.sum(axis=1), 1.0)
    assert points[0].tolist() == [0.0, 0.0, 1.0]
    assert lattice_size(2, 10) == 11


def test_total_variation():
    assert total_variation(np.array([[1.0, 0.0]]), np.array([[0.5, 0.5]])) == pytest.approx(0.5)


def test_block_projection_is_per_block():
    blocks = [SimplexBlock(0, 4, 2), SimplexBlock(4, 7, 3)]
    x = np.array([2.0, 0.0, 0.3, 0.3, 1.0, 1.0, 1.0])
    out = project(x, blocks)
    assert np.allclose(out, [1.0, 0.0, 0.5, 0.5, 1 / 3, 1 / 3, 1 / 3])


def _distance(target):
    def objective(X, rho):
        return rho * ((X - target) ** 2).sum(axis=-1)
    return objective


def test_central_differences():
    target = np.array([0.1, 0.7, 0.2])
    x = np.array([0.3, 0.3, 0.4])
    gradient = fd_gradient(_distance(target), x, rho=2.0, h=1e-6)
    assert np.allclose(gradient, 4.0 * (x - target), atol=1e-6)


def test_descent_reaches_an_interior_minimizer():
    target = np.array([0.2, 0.8, 0.5, 0.25, 0.25])
    blocks = [SimplexBlock(0, 2, 2), SimplexBlock(2, 5, 3)]
    descent = PenaltyDescent(_distance(target), blocks, SolverConfig(max_iters=300))
    x, trace = descent.run(np.array([1.0, 0.0, 1.0, 0.0, 0.0]))
    assert np.allclose(x, target, atol=1e-3)
    assert [rho for rho, _ in trace.rounds] == SolverConfig().penalty_schedule()
    assert trace.iterations > 0


def test_descent_stops_at_the_floor():
    target = np.array([0.5, 0.5])
    descent = PenaltyDescent(_distance(target), [SimplexBlock(0, 2, 2)], SolverConfig())
    x, trace = descent.run(target.copy())
    assert np.array_equal(x, target)
    assert trace.iterations == 0


def test_penalty_schedule():
    assert SolverConfig().penalty_schedule() == [1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]
    assert SolverConfig(penalty_max=1e2).penalty_schedule() == [1.0, 10.0, 100.0]
