from __future__ import annotations

from enum import Enum
from typing import Sequence
from typing import Tuple

import numpy as np

from calor import PositivityLost
from calor._schemes import _require_positive
from calor.frame import _hat_log_slopes
from calor.group import Real
from calor.mesh import gaps
from calor.mesh import MeshState
from calor.mesh import signed_offset
from calor.mesh import validate

Node = Tuple[Real, Real]


class InterpolationMethod(str, Enum):
    LINEAR = 'linear'
    QUADRATIC = 'quadratic'
    INVARIANT_LINEAR = 'invariant_linear'
    INVARIANT_QUADRATIC = 'invariant_quadratic'
    JOINT_INVARIANT = 'joint_invariant'

    @property
    def invariant(self) -> bool:
        return self.value.startswith('invariant') or self is InterpolationMethod.JOINT_INVARIANT


def _unwrapped_positions(m: MeshState) -> np.ndarray:
    h = gaps(m)
    return m.x[0] + np.concatenate([[0.0], np.cumsum(h[:-1])])


def locate(m: MeshState, y: Real) -> int | np.ndarray:
    """

    Finds the periodic cell :math:`[x_i, x_{i+1})` containing ``y``. Cells are closed on the left, and a point just
    below ``x[0]`` falls into the last cell.

    :param m: A valid mesh
    :param y: Query point(s), any real value
    :return: Cell index, or an array of indices for an array of queries
    :raises MeshTangled: if the mesh is not valid
    """
    validate(m)
    unwrapped = _unwrapped_positions(m)
    shifted = m.x[0] + np.mod(np.asarray(y, dtype=float) - m.x[0], m.period)
    index = np.clip(np.searchsorted(unwrapped, shifted, side='right') - 1, 0, m.N - 1)
    if np.ndim(index) == 0:
        return int(index)
    return index


def linear(y: Real, left: Node, right: Node) -> Real:
    """Linear interpolation between ``left = (x_i, u_i)`` and ``right = (x_{i+1}, u_{i+1})``."""
    (x_i, u_i), (x_ip1, u_ip1) = left, right
    return u_i + (y - x_i) * (u_ip1 - u_i) / (x_ip1 - x_i)


def _invariant_weights(y: Real, x_j: Real, u_j: Real, s: Real) -> Real:
    return np.exp(s * (y - x_j)) * u_j


def invariant_linear(y: Real, left: Node, right: Node, s: Real) -> Real:
    """

    Linear interpolation invariantized with the interpolation frame: the node values are replaced by
    :math:`U_j = e^{s (y - x_j)} u_j` before interpolating. It reproduces node values and is exact on
    :math:`A e^{s x}`.

    :param y: Query point(s)
    :param left: ``(x_i, u_i)``
    :param right: ``(x_{i+1}, u_{i+1})``
    :param s: Centred log slope of the level, see :func:`calor.frame.hat_log_slope`
    :return: Interpolated value(s)
    """
    (x_i, u_i), (x_ip1, u_ip1) = left, right
    _require_positive(u_i, u_ip1)
    weighted_left = (x_i, _invariant_weights(y, x_i, u_i, s))
    weighted_right = (x_ip1, _invariant_weights(y, x_ip1, u_ip1, s))
    return linear(y, weighted_left, weighted_right)


def _lagrange_basis(y: Real, abscissas: Sequence[Real]) -> list[Real]:
    basis = []
    for j, x_j in enumerate(abscissas):
        factor = 1.0
        for k, x_k in enumerate(abscissas):
            if k != j:
                factor = factor * (y - x_k) / (x_j - x_k)
        basis.append(factor)
    return basis


def quadratic(y: Real, nodes: Sequence[Node]) -> Real:
    """

    Lagrange quadratic interpolation through three nodes ``[(x_{i-1}, u_{i-1}), (x_i, u_i), (x_{i+1}, u_{i+1})]``.

    Example
    -----

    .. code-block:: python

        quadratic(1.5, [(0.0, 1.0), (1.0, 2.0), (2.0, 5.0)])

    .. code-block:: python

        3.25

    """
    if len(nodes) != 3:
        raise ValueError(f'Quadratic interpolation needs 3 nodes, got {len(nodes)}')
    abscissas = [x for x, _ in nodes]
    return sum(u * basis for (_, u), basis in zip(nodes, _lagrange_basis(y, abscissas)))


def invariant_quadratic(y: Real, nodes: Sequence[Node], s: Real) -> Real:
    """

    Lagrange quadratic interpolation of the weighted values :math:`U_j = e^{s (y - x_j)} u_j`. Invariant under the
    symmetry group acting at a fixed time level, and exact on :math:`A e^{s x}`.

    :param y: Query point(s)
    :param nodes: Three ``(x_j, u_j)`` pairs with positive values
    :param s: Centred log slope at the middle node
    :return: Interpolated value(s)
    """
    _require_positive(*[u for _, u in nodes])
    weighted = [(x, _invariant_weights(y, x, u, s)) for x, u in nodes]
    return quadratic(y, weighted)


def joint_invariant(target: Real, node: Node, s: Real) -> Real:
    """

    Single-node interpolation assembled from joint invariants, :math:`u(\\xi) = e^{s(\\xi - x_i)} u_i`.

    :param target: Target position(s)
    :param node: ``(x_i, u_i)`` with positive value
    :param s: Centred log slope at the node
    :return: Value(s) at the target
    """
    x_i, u_i = node
    _require_positive(u_i)
    return _invariant_weights(target, x_i, u_i, s)


def project(level: MeshState, targets: np.ndarray, method: InterpolationMethod | str) -> np.ndarray:
    """

    Interpolates a level onto target positions, normally the uniform lattice of the run.

    A target in cell :math:`[x_j, x_{j+1})` is assigned to the nearer of the two nodes (ties go left). That node is
    the middle of the quadratic stencil, the anchor of the log slope used by the invariant methods, and the single
    node of ``joint_invariant``. Abscissas are unwrapped to a chart around each target.

    :param level: The level to project, typically at :math:`\\tau^{n+1}` on the moved mesh
    :param targets: Target positions
    :param method: One of :class:`InterpolationMethod`
    :return: Values at the targets
    :raises MeshTangled: if the level is not a valid mesh
    :raises PositivityLost: if an interpolated value is non-positive
    """
    method = InterpolationMethod(method)
    targets = np.asarray(targets, dtype=float)
    cell = locate(level, targets)
    h = gaps(level)
    offset = np.mod(targets - level.x[cell], level.period)
    take_left = offset <= h[cell] / 2
    centre = np.where(take_left, cell, (cell + 1) % level.N)
    x_centre = targets - signed_offset(targets, level.x[centre], level.period)
    u = level.u

    if method in (InterpolationMethod.LINEAR, InterpolationMethod.INVARIANT_LINEAR):
        x_left = targets - offset
        left = (x_left, u[cell])
        right = (x_left + h[cell], u[(cell + 1) % level.N])
        if method is InterpolationMethod.LINEAR:
            values = linear(targets, left, right)
        else:
            values = invariant_linear(targets, left, right, _hat_log_slopes(level)[centre])
    elif method is InterpolationMethod.JOINT_INVARIANT:
        values = joint_invariant(targets, (x_centre, u[centre]), _hat_log_slopes(level)[centre])
    else:
        nodes = [
            (x_centre - h[(centre - 1) % level.N], u[(centre - 1) % level.N]),
            (x_centre, u[centre]),
            (x_centre + h[centre], u[(centre + 1) % level.N]),
        ]
        if method is InterpolationMethod.QUADRATIC:
            values = quadratic(targets, nodes)
        else:
            values = invariant_quadratic(targets, nodes, _hat_log_slopes(level)[centre])

    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        worst = int(np.argmin(values))
        raise PositivityLost(f'{method.value} projection produced {values[worst]} at target {targets[worst]}')
    return values
