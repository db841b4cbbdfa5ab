from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction

import numpy as np

from calor import PositivityLost
from calor._schemes import _exponent
from calor._schemes import _ftcs_diffusion
from calor._schemes import _ftcs_space_derivative
from calor._schemes import _grid_velocity
from calor._schemes import _invariant_diffusion
from calor._schemes import _log_slope
from calor._schemes import _previous_grid_velocity
from calor._schemes import _require_positive
from calor._schemes import _require_valid
from calor.group import Real
from calor.group import Stencil
from calor.mesh import MeshState
from calor.mesh import stencils


class SchemeKind(str, Enum):
    FTCS = 'ftcs'
    INVARIANT_FTCS = 'invariant_ftcs'
    INVARIANT_LEAPFROG = 'invariant_leapfrog'


def residual_ftcs(z: Stencil) -> Real:
    """

    Residual of the forward-in-time, centred-in-space scheme for the heat equation in computational coordinates,

    .. math::

        u_t^d - \\frac{4}{(h^+ + h^-)^2}\\left(u_{i+1}^n + u_{i-1}^n - 2u_i^n - (h^+ - h^-) u_x^d\\right)

    with :math:`u_t^d = (u_i^{n+1} - u_i^n)/\\Delta\\tau - x_\\tau^d u_x^d` and :math:`u_x^d = (u_{i+1}^n -
    u_{i-1}^n)/(h^+ + h^-)`. The scheme is not invariant under Galilean boosts.

    :param z: A valid stencil
    :return: The residual
    """
    _require_valid(z)
    space_derivative = _ftcs_space_derivative(z)
    time_derivative = (z.u_i_np1 - z.u_i) / z.dtau - _grid_velocity(z) * space_derivative
    return time_derivative - _ftcs_diffusion(z)


def residual_invariant_ftcs(z: Stencil) -> Real:
    """

    Residual of the invariantized FTCS scheme,

    .. math::

        S = \\frac{e^{-\\Delta\\tau(x_\\tau^d (\\ln u)_x^d + ((\\ln u)_x^d)^2)} u_i^{n+1} - u_i^n}{\\Delta\\tau}
        - \\frac{4}{(h^+ + h^-)^2}\\left(u_{i+1}^n r^{-h^+/(h^+ + h^-)} + u_{i-1}^n r^{h^-/(h^+ + h^-)}
        - 2u_i^n\\right), \\qquad r = u_{i+1}^n / u_{i-1}^n.

    Each group element rescales the residual by a positive factor, so its zero set is preserved. The scheme is
    first order in time and second order in space, and vanishes identically on :math:`A e^{ax + a^2 t}`.

    :param z: A valid stencil with positive values
    :return: The residual
    :raises DomainError: on a non-positive value
    """
    _require_positive(z.u_im1, z.u_i, z.u_ip1, z.u_i_np1)
    _require_valid(z)
    decay = np.exp(-_exponent(_grid_velocity(z), _log_slope(z), z.dtau))
    return (decay * z.u_i_np1 - z.u_i) / z.dtau - _invariant_diffusion(z)


def residual_invariant_leapfrog(z: Stencil) -> Real:
    """

    Residual of the invariantized leapfrog scheme,

    .. math::

        \\frac{e^{-\\Delta\\tau(\\hat x_\\tau^d (\\ln u)_x^d + ((\\ln u)_x^d)^2)} u_i^{n+1}
        - e^{\\Delta\\tau(\\check x_\\tau^d (\\ln u)_x^d + ((\\ln u)_x^d)^2)} u_i^{n-1}}{2\\Delta\\tau} - D_i

    where :math:`D_i` is the diffusion term of :func:`residual_invariant_ftcs`,
    :math:`\\hat x_\\tau^d = (x_i^{n+1} - x_i^n)/\\Delta\\tau` and :math:`\\check x_\\tau^d = (x_i^n - x_i^{n-1})/\\Delta\\tau`.
    Second order in time and space.

    :param z: A stencil carrying the level n-1 centre node
    :return: The residual
    """
    if not z.has_previous_level:
        raise ValueError('Leapfrog residual needs a stencil with the n-1 level')
    _require_positive(z.u_im1, z.u_i, z.u_ip1, z.u_i_np1, z.u_i_nm1)
    _require_valid(z)
    slope = _log_slope(z)
    forward = np.exp(-_exponent(_grid_velocity(z), slope, z.dtau)) * z.u_i_np1
    backward = np.exp(_exponent(_previous_grid_velocity(z), slope, z.dtau)) * z.u_i_nm1
    return (forward - backward) / (2 * z.dtau) - _invariant_diffusion(z)


def _check_positive_update(base: np.ndarray, level_n: MeshState, scheme: SchemeKind) -> None:
    if np.any(base <= 0):
        worst = int(np.argmin(base))
        raise PositivityLost(
            f'{scheme.value} step lost positivity at node {worst} (value {base[worst]}) at tau={level_n.tau}; '
            'reduce the time step',
        )


def step_invariant_ftcs(level_n: MeshState, x_np1: np.ndarray, dtau: float) -> np.ndarray:
    """

    Solves the invariant FTCS scheme for :math:`u^{n+1}` once the new node positions are known,

    .. math::

        u_i^{n+1} = e^{\\Delta\\tau(x_\\tau^d (\\ln u)_x^d + ((\\ln u)_x^d)^2)} (u_i^n + \\Delta\\tau D_i).

    :param level_n: Level n, positive values
    :param x_np1: Positions at level n+1 from a grid step, or ``level_n.x`` for a fixed grid
    :param dtau: Time step
    :return: Values at level n+1
    :raises PositivityLost: if :math:`u_i^n + \\Delta\\tau D_i \\le 0` at some node

    Example
    -----

    .. code-block:: python

        m = uniform_mesh(64, np.exp)
        u_next = step_invariant_ftcs(m, m.x, 1e-3)

    Away from the periodic seam ``u_next`` equals :math:`e^{x_i + 10^{-3}}` to round-off.
    """
    _require_positive(level_n.u)
    z = stencils(level_n, x_np1, np.ones(level_n.N), dtau)
    _require_valid(z)
    base = level_n.u + dtau * _invariant_diffusion(z)
    _check_positive_update(base, level_n, SchemeKind.INVARIANT_FTCS)
    return np.exp(_exponent(_grid_velocity(z), _log_slope(z), dtau)) * base


def step_ftcs(level_n: MeshState, x_np1: np.ndarray, dtau: float) -> np.ndarray:
    """

    Solves the FTCS scheme in computational coordinates for :math:`u^{n+1}`. On a fixed uniform grid this is the
    textbook update :math:`u_i + \\frac{\\Delta\\tau}{h^2}(u_{i+1} + u_{i-1} - 2u_i)`.

    :param level_n: Level n
    :param x_np1: Positions at level n+1
    :param dtau: Time step
    :return: Values at level n+1
    """
    z = stencils(level_n, x_np1, np.ones(level_n.N), dtau)
    _require_valid(z)
    return level_n.u + dtau * (_grid_velocity(z) * _ftcs_space_derivative(z) + _ftcs_diffusion(z))


def step_invariant_leapfrog(level_n: MeshState, x_np1: np.ndarray, dtau: float, previous: MeshState) -> np.ndarray:
    """

    Solves the invariant leapfrog scheme for :math:`u^{n+1}`,

    .. math::

        u_i^{n+1} = e^{\\Delta\\tau(\\hat x_\\tau^d (\\ln u)_x^d + ((\\ln u)_x^d)^2)}
        \\left(e^{\\Delta\\tau(\\check x_\\tau^d (\\ln u)_x^d + ((\\ln u)_x^d)^2)} u_i^{n-1} + 2\\Delta\\tau D_i\\right).

    :param level_n: Level n
    :param x_np1: Positions at level n+1
    :param dtau: Time step, equal to the previous one
    :param previous: Level n-1
    :return: Values at level n+1
    :raises PositivityLost: if the bracket is non-positive at some node
    """
    _require_positive(level_n.u, previous.u)
    z = stencils(level_n, x_np1, np.ones(level_n.N), dtau, previous=previous)
    _require_valid(z)
    slope = _log_slope(z)
    base = np.exp(_exponent(_previous_grid_velocity(z), slope, dtau)) * previous.u + 2 * dtau * _invariant_diffusion(z)
    _check_positive_update(base, level_n, SchemeKind.INVARIANT_LEAPFROG)
    return np.exp(_exponent(_grid_velocity(z), slope, dtau)) * base


def _check_order(p: int) -> int:
    if isinstance(p, bool) or not isinstance(p, (int, np.integer)) or p < 2 or p % 2:
        raise ValueError(f'Order `p` must be an even integer >= 2, got {p}')
    return int(p)


def _first_derivative_weight(p: int, j: int) -> Fraction:
    half = p // 2
    if j == 0:
        return Fraction(0)
    sign = (-1) ** ((j + 1) % 2)
    numerator = sign * math.factorial(half) ** 2
    return Fraction(numerator, j * math.factorial(half + j) * math.factorial(half - j))


def centered_weights(p: int, k: int) -> np.ndarray:
    """

    Weights :math:`c^k_{p,j}`, :math:`j = -p/2, \\dots, p/2`, of the order-``p`` centred difference for the
    ``k``-th derivative on a unit-spaced lattice:

    .. math::

        c^1_{p,j} = \\frac{(-1)^{j+1} (p/2)!^2}{j (p/2+j)! (p/2-j)!}, \\quad c^2_{p,j} = \\frac{2 c^1_{p,j}}{j},
        \\quad c^2_{p,0} = -2\\sum_{i=1}^{p/2} \\frac{1}{i^2}.

    :param p: Even order of accuracy
    :param k: Derivative, 1 or 2
    :return: ``p + 1`` weights

    Example
    -----

    .. code-block:: python

        centered_weights(4, 2)

    .. code-block:: python

        array([-0.08333333,  1.33333333, -2.5       ,  1.33333333, -0.08333333])

    """
    p = _check_order(p)
    if k not in (1, 2):
        raise ValueError(f'Derivative `k` must be 1 or 2, got {k}')
    half = p // 2
    offsets = range(-half, half + 1)
    if k == 1:
        weights = [_first_derivative_weight(p, j) for j in offsets]
    else:
        centre = -2 * sum(Fraction(1, i ** 2) for i in range(1, half + 1))
        weights = [centre if j == 0 else 2 * _first_derivative_weight(p, j) / j for j in offsets]
    return np.array([float(w) for w in weights])


def invariantized_spatial_p(u: np.ndarray, hx: float, p: int) -> float:
    """

    Order-``p`` invariantized second-derivative operator on ``p + 1`` uniformly spaced nodes centred on node ``p/2``,

    .. math::

        \\frac{1}{h_x^2}\\sum_j c^2_{p,j} e^{-\\varepsilon_5 j h_x} u_j, \\qquad
        \\varepsilon_5 = \\frac{1}{h_x}\\sum_j c^1_{p,j} \\ln u_j.

    It approximates :math:`u_{xx} - u_x^2/u` to order ``p``, vanishes on :math:`A e^{ax}`, and for ``p = 2``
    equals the diffusion term of the invariant FTCS scheme. Divide by the centre value for the normalized
    invariant.

    :param u: ``p + 1`` positive values
    :param hx: Node spacing
    :param p: Even order of accuracy
    :return: The operator value at the centre node
    """
    p = _check_order(p)
    u = np.asarray(u, dtype=float)
    if u.shape != (p + 1,):
        raise ValueError(f'Expected {p + 1} values for order {p}, got shape {u.shape}')
    if hx <= 0:
        raise ValueError(f'`hx` must be positive, got {hx}')
    _require_positive(u)
    offsets = np.arange(-(p // 2), p // 2 + 1)
    boost = np.dot(centered_weights(p, 1), np.log(u)) / hx
    return float(np.dot(centered_weights(p, 2), np.exp(-boost * offsets * hx) * u) / hx ** 2)
