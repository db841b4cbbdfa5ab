from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from calor import MeshTangled
from calor._schemes import _require_positive
from calor.group import Real
from calor.group import Stencil

TWO_PI = 2 * math.pi
SUM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MeshState:
    """
    One periodic time level: node positions in ``[0, period)`` in cyclic order and positive solution values.

    Positions are not required to be monotone in storage order: the first node may sit anywhere, and the
    sequence may cross the seam once.
    """
    tau: float
    period: float
    x: np.ndarray
    u: np.ndarray
    uniform: bool = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if x.ndim != 1 or x.shape != u.shape:
            raise ValueError(f'Positions and values must be 1-D and of equal length, got {x.shape} and {u.shape}')
        if len(x) < 2:
            raise ValueError(f'A periodic mesh needs at least 2 nodes, got {len(x)}')
        if self.period <= 0:
            raise ValueError(f'`period` must be positive, got {self.period}')
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'u', u)

    @property
    def N(self) -> int:
        return len(self.x)

    def with_values(self, x: np.ndarray, u: np.ndarray, tau: float, uniform: bool = False) -> MeshState:
        return MeshState(tau=tau, period=self.period, x=x, u=u, uniform=uniform)


def uniform_lattice(N: int, period: float = TWO_PI) -> np.ndarray:
    return np.arange(N) * (period / N)


def uniform_mesh(N: int, u_of_x: Callable[[np.ndarray], np.ndarray], tau: float = 0.0, period: float = TWO_PI) -> MeshState:
    """

    Samples a function on the uniform lattice :math:`x_i = i L / N`.

    :param N: Number of nodes
    :param u_of_x: Vectorized function of position
    :param tau: Time of the level
    :param period: Domain length
    :return: The uniform mesh state
    """
    x = uniform_lattice(N, period)
    return MeshState(tau=tau, period=period, x=x, u=np.asarray(u_of_x(x), dtype=float), uniform=True)


def wrap(x: np.ndarray, period: float) -> np.ndarray:
    wrapped = np.mod(x, period)
    return np.where(wrapped >= period, wrapped - period, wrapped)


def signed_offset(target: Real, origin: Real, period: float) -> Real:
    """Offset from ``origin`` to ``target`` in ``[-period/2, period/2)``."""
    return np.mod(np.asarray(target) - origin + period / 2, period) - period / 2


def gaps(m: MeshState) -> np.ndarray:
    """Periodic gaps :math:`h_i = x_{i+1} - x_i` reduced modulo the period."""
    return np.mod(np.roll(m.x, -1) - m.x, m.period)


def validate(m: MeshState) -> MeshState:
    """

    Checks that every periodic gap is positive and that the gaps add up to the period.

    :param m: Mesh to check
    :return: The same mesh
    :raises MeshTangled: if a gap is non-positive or the gaps fail to sum to the period within ``1e-10 * period``
    """
    h = gaps(m)
    if np.any(h <= 0):
        raise MeshTangled(f'Mesh has {int(np.sum(h <= 0))} non-positive gap(s) at tau={m.tau}')
    total = float(np.sum(h))
    if abs(total - m.period) > SUM_TOLERANCE * m.period:
        raise MeshTangled(f'Mesh gaps sum to {total}, expected period {m.period} at tau={m.tau}')
    return m


def stencils(
        level_n: MeshState,
        x_np1: np.ndarray,
        u_np1: np.ndarray,
        dtau: float,
        previous: MeshState | None = None,
) -> Stencil:
    """

    Assembles the stencils of all nodes of a level as one vectorized :class:`~calor.group.Stencil`.

    Neighbour positions are unwrapped around each centre node, and the level n+1 (and optional n-1) positions are
    unwrapped to the chart of level n.

    :param level_n: The level n mesh
    :param x_np1: Node positions at level n+1
    :param u_np1: Node values at level n+1
    :param dtau: Time step
    :param previous: Optional level n-1 mesh for the leapfrog stencil
    :return: A stencil whose fields are arrays over the nodes
    """
    h = gaps(level_n)
    x = level_n.x
    u = level_n.u
    extra = {}
    if previous is not None:
        extra = dict(
            x_i_nm1=x + signed_offset(previous.x, x, level_n.period),
            u_i_nm1=previous.u,
        )
    return Stencil(
        tau_n=level_n.tau,
        dtau=dtau,
        x_im1=x - np.roll(h, 1),
        x_i=x,
        x_ip1=x + h,
        x_i_np1=x + signed_offset(np.asarray(x_np1, dtype=float), x, level_n.period),
        u_im1=np.roll(u, 1),
        u_i=u,
        u_ip1=np.roll(u, -1),
        u_i_np1=np.asarray(u_np1, dtype=float),
        **extra,
    )


def _displacement_invariantized(z: Stencil) -> Real:
    return -2 * z.dtau / (z.h_plus + z.h_minus) * (np.log(z.u_ip1) - np.log(z.u_im1))


def _displacement_dorodnitsyn(z: Stencil) -> Real:
    bracket = (z.h_plus / z.h_minus) * np.log(z.u_im1 / z.u_i) - (z.h_minus / z.h_plus) * np.log(z.u_ip1 / z.u_i)
    return 2 * z.dtau / (z.h_plus + z.h_minus) * bracket


def residual_grid_invariantized(z: Stencil) -> Real:
    """

    The invariantized grid equation
    :math:`M = x_i^{n+1} - x_i^n + \\frac{2\\Delta\\tau}{h^+ + h^-}(\\ln u_{i+1}^n - \\ln u_{i-1}^n)`.

    Under every group element :math:`M(g z) = e^{\\varepsilon_4} M(z)`.
    """
    _require_positive(z.u_im1, z.u_ip1)
    return z.x_i_np1 - z.x_i - _displacement_invariantized(z)


def residual_grid_dorodnitsyn(z: Stencil) -> Real:
    """

    The grid equation obtained from difference invariants,
    :math:`x_i^{n+1} - x_i^n - \\frac{2\\Delta\\tau}{h^+ + h^-}\\left(\\frac{h^+}{h^-}\\ln\\frac{u_{i-1}^n}{u_i^n}
    - \\frac{h^-}{h^+}\\ln\\frac{u_{i+1}^n}{u_i^n}\\right)`.
    """
    _require_positive(z.u_im1, z.u_i, z.u_ip1)
    return z.x_i_np1 - z.x_i - _displacement_dorodnitsyn(z)


def _grid_step(m: MeshState, dtau: float, displacement: Callable[[Stencil], Real]) -> np.ndarray:
    _require_positive(m.u)
    if dtau <= 0:
        raise ValueError(f'`dtau` must be positive, got {dtau}')
    z = stencils(m, m.x, m.u, dtau)
    return wrap(m.x + displacement(z), m.period)


def grid_step_invariantized(m: MeshState, dtau: float) -> np.ndarray:
    """

    Advances the node positions by the invariantized grid equation,
    :math:`x_i^{n+1} = x_i^n - \\frac{2\\Delta\\tau}{h^+ + h^-}(\\ln u_{i+1}^n - \\ln u_{i-1}^n)`.

    In the continuous limit the nodes follow :math:`x_\\tau = -2(\\ln u)_x`.

    :param m: Level n
    :param dtau: Time step
    :return: Positions at level n+1, wrapped into ``[0, period)``

    Example
    -----

    .. code-block:: python

        m = MeshState(tau=0.0, period=2 * math.pi, x=[0.0, 1.0, 2.0], u=[1.0, 2.0, math.e])
        grid_step_invariantized(m, 0.3)[1]

    .. code-block:: python

        0.7

    """
    return _grid_step(m, dtau, _displacement_invariantized)


def grid_step_dorodnitsyn(m: MeshState, dtau: float) -> np.ndarray:
    """

    Advances the node positions by the difference-invariant grid equation. On a uniform mesh it agrees with
    :func:`grid_step_invariantized`.

    :param m: Level n
    :param dtau: Time step
    :return: Positions at level n+1, wrapped into ``[0, period)``
    """
    return _grid_step(m, dtau, _displacement_dorodnitsyn)
