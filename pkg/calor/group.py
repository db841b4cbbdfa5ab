from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable
from typing import Union

import numpy as np

# Scalars or node-wise arrays; every operation in this module broadcasts.
Real = Union[float, np.ndarray]

GENERATORS = {
    1: 'time translation',
    2: 'space translation',
    3: 'amplitude scaling',
    4: 'parabolic scaling',
    5: 'galilean boost',
}


@dataclass(frozen=True)
class GroupElement:
    """
    One transformation of the five-parameter point symmetry group of :math:`u_t = u_{xx}`.

    The parameters act simultaneously through the closed form used by :func:`apply_point`. Composition of two
    elements is not provided.
    """
    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0
    eps4: float = 0.0
    eps5: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.eps1, self.eps2, self.eps3, self.eps4, self.eps5)


IDENTITY = GroupElement()


@dataclass(frozen=True)
class PointTXU:
    t: Real
    x: Real
    u: Real


@dataclass(frozen=True)
class Stencil:
    """
    The stencil of one explicit difference equation: three nodes at level n and the centre node at level n+1.

    Positions are stored unwrapped, so ``x_im1 < x_i < x_ip1`` on a valid stencil. The optional fields
    ``x_i_nm1`` / ``u_i_nm1`` carry the centre node at level n-1 for the leapfrog scheme; that level sits at
    ``tau_n - dtau``. Any field may be a numpy array, in which case the stencil describes all nodes of a level
    at once.
    """
    tau_n: Real
    dtau: Real
    x_im1: Real
    x_i: Real
    x_ip1: Real
    x_i_np1: Real
    u_im1: Real
    u_i: Real
    u_ip1: Real
    u_i_np1: Real
    x_i_nm1: Real | None = None
    u_i_nm1: Real | None = None

    @property
    def h_plus(self) -> Real:
        return self.x_ip1 - self.x_i

    @property
    def h_minus(self) -> Real:
        return self.x_i - self.x_im1

    @property
    def tau_nm1(self) -> Real:
        return self.tau_n - self.dtau

    @property
    def has_previous_level(self) -> bool:
        return self.x_i_nm1 is not None and self.u_i_nm1 is not None

    def values(self) -> list[Real]:
        return [getattr(self, field.name) for field in dataclasses.fields(self) if getattr(self, field.name) is not None]

    def replace(self, **changes: Real) -> Stencil:
        return dataclasses.replace(self, **changes)


def apply_point(g: GroupElement, p: PointTXU) -> PointTXU:
    """

    Transforms a single point :math:`(t, x, u)`.

    :param g: The group element
    :param p: The point, u may have any sign
    :return: :math:`(e^{2\\varepsilon_4}(t+\\varepsilon_1), e^{\\varepsilon_4}(x+\\varepsilon_2+2\\varepsilon_5 t), e^{\\varepsilon_3-\\varepsilon_5 x-\\varepsilon_5^2 t}u)`

    Example
    -----

    .. code-block:: python

        from calor.group import GroupElement, PointTXU, apply_point
        apply_point(GroupElement(eps5=0.5), PointTXU(1.0, 0.0, 1.0))

    .. code-block:: python

        PointTXU(t=1.0, x=1.0, u=0.7788007830714049)

    """
    t_new = np.exp(2 * g.eps4) * (p.t + g.eps1)
    x_new = np.exp(g.eps4) * (p.x + g.eps2 + 2 * g.eps5 * p.t)
    u_new = np.exp(g.eps3 - g.eps5 * p.x - g.eps5 ** 2 * p.t) * p.u
    return PointTXU(t_new, x_new, u_new)


def apply_stencil(g: GroupElement, z: Stencil) -> Stencil:
    """

    Transforms every point of a stencil by the product action.

    Level-n entries are taken at ``tau_n``, the level n+1 entry at ``tau_n + dtau`` and the optional level n-1
    entry at ``tau_n - dtau``. The time step scales as :math:`e^{2\\varepsilon_4}\\Delta\\tau`.

    :param g: The group element
    :param z: The stencil
    :return: The transformed stencil
    """
    tau_np1 = z.tau_n + z.dtau
    centre = apply_point(g, PointTXU(z.tau_n, z.x_i, z.u_i))
    left = apply_point(g, PointTXU(z.tau_n, z.x_im1, z.u_im1))
    right = apply_point(g, PointTXU(z.tau_n, z.x_ip1, z.u_ip1))
    upper = apply_point(g, PointTXU(tau_np1, z.x_i_np1, z.u_i_np1))
    changes = dict(
        tau_n=centre.t,
        dtau=np.exp(2 * g.eps4) * z.dtau,
        x_im1=left.x,
        x_i=centre.x,
        x_ip1=right.x,
        x_i_np1=upper.x,
        u_im1=left.u,
        u_i=centre.u,
        u_ip1=right.u,
        u_i_np1=upper.u,
    )
    if z.has_previous_level:
        lower = apply_point(g, PointTXU(z.tau_nm1, z.x_i_nm1, z.u_i_nm1))
        changes.update(x_i_nm1=lower.x, u_i_nm1=lower.u)
    return z.replace(**changes)


def generator_flow(k: int, s: float) -> GroupElement:
    """

    Returns the element at parameter ``s`` along the one-parameter subgroup of generator ``k``.

    The generators are numbered :math:`\\partial_t, \\partial_x, u\\partial_u, 2t\\partial_t + x\\partial_x,
    2t\\partial_x - xu\\partial_u`.

    :param k: Generator index, 1 to 5
    :param s: Flow parameter
    :return: The element with :math:`\\varepsilon_k = s` and all other parameters zero
    """
    if k not in GENERATORS:
        raise ValueError(f'Generator index {k} not in {sorted(GENERATORS)}')
    params = [0.0] * 5
    params[k - 1] = float(s)
    return GroupElement(*params)


def _stencil_scale(z: Stencil) -> float:
    return max(float(np.max(np.abs(value))) for value in z.values())


def lie_derivative(f: Callable[[Stencil], Real], k: int, z: Stencil, step: float | None = None) -> Real:
    """

    Evaluates the prolonged generator ``k`` applied to ``f`` at ``z`` by a central difference along its flow.

    :param f: Any function of a stencil
    :param k: Generator index, 1 to 5
    :param z: Base stencil
    :param step: Flow step, defaults to ``1e-6 * max(1, |z|_inf)``
    :return: :math:`[f(\\exp(s v_k) z) - f(\\exp(-s v_k) z)] / 2s`
    """
    if step is None:
        step = 1e-6 * max(1.0, _stencil_scale(z))
    if step <= 0:
        raise ValueError(f'`step` must be positive, got {step}')
    forward = f(apply_stencil(generator_flow(k, step), z))
    backward = f(apply_stencil(generator_flow(k, -step), z))
    return (forward - backward) / (2 * step)
