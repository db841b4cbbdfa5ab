from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from calor import FrameUndefined
from calor import MeshTangled
from calor._schemes import _exponent
from calor._schemes import _grid_velocity
from calor._schemes import _log_slope
from calor._schemes import _require_positive
from calor._schemes import _require_valid
from calor.group import apply_stencil
from calor.group import GroupElement
from calor.group import Stencil
from calor.mesh import gaps
from calor.mesh import MeshState


@dataclass(frozen=True)
class Jet1Point:
    t: float
    x: float
    u: float
    u_t: float
    u_x: float


def _jet_scaling(j: Jet1Point) -> float:
    if j.u <= 0:
        raise FrameUndefined(f'Frame requires u > 0, got u={j.u}')
    argument = j.u_t / j.u - (j.u_x / j.u) ** 2
    if argument <= 0:
        raise FrameUndefined(f'Frame requires u_t/u - (u_x/u)^2 > 0, got {argument}')
    return argument


def continuous_frame(j: Jet1Point) -> GroupElement:
    """

    The moving frame on first-order jets defined by the cross-section :math:`t=0, x=0, u=1, u_t=1, u_x=0`.

    :param j: A first-order jet with :math:`u > 0` and :math:`u_t/u - u_x^2/u^2 > 0`
    :return: The group element sending ``j`` to the cross-section
    :raises FrameUndefined: outside the domain of the frame

    Example
    -----

    .. code-block:: python

        continuous_frame(Jet1Point(t=0.0, x=0.0, u=1.0, u_t=4.0, u_x=0.0))

    .. code-block:: python

        GroupElement(eps1=-0.0, eps2=-0.0, eps3=-0.0, eps4=0.6931471805599453, eps5=0.0)

    """
    scaling = _jet_scaling(j)
    slope = j.u_x / j.u
    return GroupElement(
        eps1=-j.t,
        eps2=-(j.x + 2 * j.t * slope),
        eps3=-(np.log(j.u) - j.x * slope - j.t * slope ** 2),
        eps4=0.5 * np.log(scaling),
        eps5=slope,
    )


def invariantized_uxx(j: Jet1Point, u_xx: float) -> float:
    """The second-order differential invariant :math:`(u u_{xx} - u_x^2)/(u u_t - u_x^2)`."""
    _jet_scaling(j)
    return (j.u * u_xx - j.u_x ** 2) / (j.u * j.u_t - j.u_x ** 2)


def invariantized_heat_residual(j: Jet1Point, u_xx: float) -> float:
    """The heat equation written in differential invariants, :math:`u(u_t - u_{xx})/(u u_t - u_x^2)`."""
    _jet_scaling(j)
    return j.u * (j.u_t - u_xx) / (j.u * j.u_t - j.u_x ** 2)


def discrete_frame(z: Stencil) -> GroupElement:
    """

    The moving frame on the space of stencil variables, defined by the discrete normalizations
    :math:`\\tau^n=0, x_i^n=0, u_i^n=1, u_t^d=1, u_x^d=0`.

    The scaling component is :math:`\\varepsilon_4 = \\frac12\\ln\\frac{e^{-\\Delta\\tau(x_\\tau^d (\\ln u)_x^d +
    ((\\ln u)_x^d)^2)} u_i^{n+1} - u_i^n}{u_i^n \\Delta\\tau}`, which only exists while the invariantized discrete
    time derivative is positive. Schemes never evaluate the frame; they use closed-form residuals instead.

    :param z: A valid stencil
    :return: The frame at ``z``
    :raises DomainError: if any value is non-positive
    :raises FrameUndefined: if the argument of the scaling logarithm is non-positive
    """
    _require_positive(z.u_im1, z.u_i, z.u_ip1, z.u_i_np1)
    _require_valid(z)
    slope = _log_slope(z)
    decay = np.exp(-_exponent(_grid_velocity(z), slope, z.dtau))
    argument = (decay * z.u_i_np1 - z.u_i) / (z.u_i * z.dtau)
    if np.any(np.asarray(argument) <= 0):
        raise FrameUndefined(
            f'Invariantized discrete time derivative must be positive for the frame to exist, got {np.min(argument)}',
        )
    return GroupElement(
        eps1=-z.tau_n,
        eps2=-(z.x_i + 2 * z.tau_n * slope),
        eps3=-(np.log(z.u_i) - z.x_i * slope - z.tau_n * slope ** 2),
        eps4=0.5 * np.log(argument),
        eps5=slope,
    )


def canonical_form(z: Stencil) -> Stencil:
    """

    The representative of the orbit of ``z`` on the cross-section, :math:`\\rho(z) \\cdot z`.

    It is constant along orbits: ``canonical_form(apply_stencil(g, z))`` equals ``canonical_form(z)``.

    :param z: A stencil on which the discrete frame exists
    :return: A stencil with :math:`\\tau^n = 0`, :math:`x_i^n = 0`, :math:`u_i^n = 1`, zero centred difference and unit
        discrete time derivative
    """
    return apply_stencil(discrete_frame(z), z)


def _hat_log_slopes(level: MeshState) -> np.ndarray:
    _require_positive(level.u)
    h = gaps(level)
    width = h + np.roll(h, 1)
    if np.any(width <= 0):
        raise MeshTangled(f'Neighbour distance must be positive at tau={level.tau}')
    log_u = np.log(level.u)
    return (np.roll(log_u, -1) - np.roll(log_u, 1)) / width


def hat_log_slope(level: MeshState, i: int) -> float:
    """

    The centred log-derivative :math:`(\\ln u_{i+1} - \\ln u_{i-1})/(x_{i+1} - x_{i-1})` of a level, with periodic
    neighbours. It is the boost parameter of the frame used by the invariant interpolations.

    :param level: Usually the level n+1 before projection
    :param i: Node index, taken modulo N
    :return: The log slope at node ``i``
    """
    return float(_hat_log_slopes(level)[i % level.N])


def interpolation_frame(level: MeshState, i: int) -> GroupElement:
    """

    The frame used to invariantize interpolation formulas: it normalizes node ``i`` of ``level`` to
    :math:`(t, x, u) = (0, 0, 1)` and its centred log slope to zero. The scaling parameter is not fixed by these
    normalizations and is returned as zero.

    :param level: The level whose data is interpolated
    :param i: Anchor node
    :return: The frame at node ``i``
    """
    slope = hat_log_slope(level, i)
    tau = level.tau
    x_i = float(level.x[i % level.N])
    u_i = float(level.u[i % level.N])
    return GroupElement(
        eps1=-tau,
        eps2=-(x_i + 2 * tau * slope),
        eps3=-(np.log(u_i) - x_i * slope - tau * slope ** 2),
        eps4=0.0,
        eps5=slope,
    )
