from __future__ import annotations

import math

import numpy as np
import pytest

from calor import DomainError
from calor import MeshTangled
from calor import PositivityLost
from calor.group import apply_point
from calor.group import GroupElement
from calor.group import PointTXU
from calor.interpolation import invariant_linear
from calor.interpolation import invariant_quadratic
from calor.interpolation import InterpolationMethod
from calor.interpolation import joint_invariant
from calor.interpolation import linear
from calor.interpolation import locate
from calor.interpolation import project
from calor.interpolation import quadratic
from calor.mesh import MeshState
from calor.mesh import TWO_PI
from calor.mesh import uniform_lattice
from calor.mesh import uniform_mesh
from calor.mesh import wrap
from tests import random_element

INTERIOR_TARGETS = np.linspace(1.0, 5.0, 9)


def _perturbed_mesh(N: int, u_of_x) -> MeshState:
    xi = uniform_lattice(N)
    x = xi + 0.3 * (TWO_PI / N) * np.sin(xi)
    return MeshState(tau=0.0, period=TWO_PI, x=x, u=u_of_x(x))


def test_method_values():
    assert InterpolationMethod('invariant_quadratic') is InterpolationMethod.INVARIANT_QUADRATIC
    assert [method.invariant for method in InterpolationMethod] == [False, False, True, True, True]
    with pytest.raises(ValueError):
        InterpolationMethod('cubic')


def test_locate_uniform():
    m = uniform_mesh(4, np.cos)
    assert locate(m, 0.0) == 0
    assert locate(m, m.x[2]) == 2
    assert locate(m, -1e-9) == 3
    assert locate(m, TWO_PI + 0.1) == 0
    np.testing.assert_array_equal(locate(m, np.array([0.1, 1.7, 3.2, 6.0])), [0, 1, 2, 3])


def test_locate_across_the_seam():
    x = wrap(uniform_lattice(8) + 5.0, TWO_PI)
    m = MeshState(tau=0.0, period=TWO_PI, x=x, u=np.ones(8))
    assert locate(m, 5.1) == 0
    assert locate(m, 0.0) == 1
    assert locate(m, x[2] + 0.01) == 2


def test_locate_tangled_mesh():
    m = MeshState(tau=0.0, period=TWO_PI, x=[0.0, 2.0, 1.0, 3.0], u=np.ones(4))
    with pytest.raises(MeshTangled):
        locate(m, 0.5)


def test_linear_midpoint():
    assert linear(0.5, (0.0, 1.0), (1.0, 3.0)) == 2.0


def test_linear_reproduces_nodes():
    left, right = (0.2, 1.5), (0.9, 0.7)
    assert linear(0.2, left, right) == pytest.approx(1.5)
    assert linear(0.9, left, right) == pytest.approx(0.7)


def test_invariant_linear_without_slope_is_linear():
    left, right = (0.2, 1.5), (0.9, 0.7)
    assert invariant_linear(0.4, left, right, 0.0) == pytest.approx(linear(0.4, left, right))


def test_invariant_quadratic_without_slope_is_quadratic():
    nodes = [(0.0, 1.0), (1.0, 2.0), (2.0, 5.0)]
    assert invariant_quadratic(1.5, nodes, 0.0) == pytest.approx(quadratic(1.5, nodes))


def test_invariant_methods_exact_on_exponentials():
    A, s = 1.3, -0.8
    xs = [0.1, 0.45, 0.9]
    nodes = [(x, A * math.exp(s * x)) for x in xs]
    y = np.linspace(0.1, 0.9, 7)
    expected = A * np.exp(s * y)
    np.testing.assert_allclose(invariant_linear(y, nodes[0], nodes[1], s), expected, rtol=1e-12)
    np.testing.assert_allclose(invariant_quadratic(y, nodes, s), expected, rtol=1e-12)
    np.testing.assert_allclose(joint_invariant(y, nodes[1], s), expected, rtol=1e-12)


def test_quadratic_docs_example():
    assert quadratic(1.5, [(0.0, 1.0), (1.0, 2.0), (2.0, 5.0)]) == pytest.approx(3.25)


def test_quadratic_exact_on_parabolas():
    nodes = [(x, 2 - x + 0.5 * x ** 2) for x in (-0.3, 0.2, 1.1)]
    y = np.linspace(-1.0, 2.0, 7)
    np.testing.assert_allclose(quadratic(y, nodes), 2 - y + 0.5 * y ** 2, rtol=1e-12)


def test_quadratic_needs_three_nodes():
    with pytest.raises(ValueError) as exception:
        quadratic(0.5, [(0.0, 1.0), (1.0, 2.0)])
    assert exception.value.args[0] == 'Quadratic interpolation needs 3 nodes, got 2'


def test_joint_invariant():
    assert joint_invariant(2.0, (1.0, 2.0), math.log(3)) == pytest.approx(6.0)


def test_invariant_methods_domain_error():
    with pytest.raises(DomainError):
        invariant_linear(0.5, (0.0, -1.0), (1.0, 1.0), 0.2)
    with pytest.raises(DomainError):
        invariant_quadratic(0.5, [(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)], 0.2)
    with pytest.raises(DomainError):
        joint_invariant(0.5, (0.0, 0.0), 0.2)


@pytest.mark.parametrize('method', list(InterpolationMethod))
def test_project_onto_own_nodes(method):
    level = uniform_mesh(16, lambda x: 2 + np.sin(x - 1))
    np.testing.assert_allclose(project(level, level.x, method), level.u, rtol=1e-12)


@pytest.mark.parametrize('method', ['invariant_linear', 'invariant_quadratic', 'joint_invariant'])
def test_project_invariant_methods_exact_on_exponentials(method):
    level = _perturbed_mesh(16, lambda x: 0.7 * np.exp(0.4 * x))
    provided = project(level, INTERIOR_TARGETS, method)
    np.testing.assert_allclose(provided, 0.7 * np.exp(0.4 * INTERIOR_TARGETS), rtol=1e-12)


def test_project_quadratic_exact_on_parabolas():
    level = _perturbed_mesh(16, lambda x: 1 + 0.1 * (x - 3) ** 2)
    provided = project(level, INTERIOR_TARGETS, InterpolationMethod.QUADRATIC)
    np.testing.assert_allclose(provided, 1 + 0.1 * (INTERIOR_TARGETS - 3) ** 2, rtol=1e-12)


def test_project_linear_exact_on_lines():
    level = _perturbed_mesh(16, lambda x: 1 + 0.1 * x)
    provided = project(level, INTERIOR_TARGETS, 'linear')
    np.testing.assert_allclose(provided, 1 + 0.1 * INTERIOR_TARGETS, rtol=1e-12)


@pytest.mark.parametrize('method', list(InterpolationMethod))
def test_project_second_order(method):
    errors = []
    for N in (32, 64, 128):
        level = _perturbed_mesh(N, lambda x: 2 + np.sin(x - 1))
        targets = uniform_lattice(N)
        errors.append(np.max(np.abs(project(level, targets, method) - (2 + np.sin(targets - 1)))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.8)


def test_project_positivity_lost():
    level = MeshState(tau=0.0, period=6.0, x=np.arange(6.0), u=[1.0, 0.01, 10.0, 10.0, 10.0, 10.0])
    with pytest.raises(PositivityLost) as exception:
        project(level, np.array([0.6]), InterpolationMethod.QUADRATIC)
    assert exception.value.args[0].startswith('quadratic projection produced -0.91')


def test_project_unknown_method():
    level = uniform_mesh(8, lambda x: 2 + np.sin(x))
    with pytest.raises(ValueError):
        project(level, level.x, 'spline')


def _moved(g, tau, nodes):
    points = [apply_point(g, PointTXU(tau, x, u)) for x, u in nodes]
    return [(float(p.x), float(p.u)) for p in points]


def test_invariant_interpolation_commutes_with_the_group():
    rng = np.random.default_rng(5)
    tau = 0.3
    nodes = [(0.1, 1.2), (0.5, 0.8), (0.8, 1.9)]
    s = (math.log(nodes[2][1]) - math.log(nodes[0][1])) / (nodes[2][0] - nodes[0][0])
    y = 0.62
    for _ in range(50):
        g = random_element(rng)
        moved = _moved(g, tau, nodes)
        s_moved = (math.log(moved[2][1]) - math.log(moved[0][1])) / (moved[2][0] - moved[0][0])
        y_moved = float(apply_point(g, PointTXU(tau, y, 1.0)).x)
        for before, after in (
            (invariant_quadratic(y, nodes, s), invariant_quadratic(y_moved, moved, s_moved)),
            (invariant_linear(y, nodes[1], nodes[2], s), invariant_linear(y_moved, moved[1], moved[2], s_moved)),
            (joint_invariant(y, nodes[1], s), joint_invariant(y_moved, moved[1], s_moved)),
        ):
            expected = float(apply_point(g, PointTXU(tau, y, before)).u)
            assert after == pytest.approx(expected, rel=1e-10)


def test_plain_quadratic_breaks_under_a_boost():
    g = GroupElement(eps5=0.5)
    tau = 0.3
    nodes = [(0.1, 1.2), (0.5, 0.8), (0.8, 1.9)]
    y = 0.62
    moved = _moved(g, tau, nodes)
    y_moved = float(apply_point(g, PointTXU(tau, y, 1.0)).x)
    expected = float(apply_point(g, PointTXU(tau, y, quadratic(y, nodes))).u)
    assert abs(quadratic(y_moved, moved) - expected) / expected > 1e-3
