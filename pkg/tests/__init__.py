from __future__ import annotations

from typing import Callable

import numpy as np

from calor.group import GroupElement
from calor.group import Stencil

Solution = Callable[[np.ndarray, float], np.ndarray]


def decaying_mode(x, t):
    return 2.0 + np.exp(-t) * np.sin(np.asarray(x) - 1.0)


def exponential(A: float, a: float) -> Solution:
    """The heat equation solution :math:`A e^{ax + a^2 t}`."""
    def u(x, t):
        return A * np.exp(a * np.asarray(x) + a ** 2 * t)
    return u


def sample_stencil(
        u: Solution,
        tau: float,
        x: float,
        h_minus: float,
        h_plus: float,
        dtau: float,
        x_np1: float | None = None,
        x_nm1: float | None = None,
        previous: bool = False,
) -> Stencil:
    """Samples a solution on a three-node stencil, optionally with the centre node at level n-1."""
    x_np1 = x if x_np1 is None else x_np1
    extra = {}
    if previous:
        x_nm1 = x if x_nm1 is None else x_nm1
        extra = dict(x_i_nm1=x_nm1, u_i_nm1=float(u(x_nm1, tau - dtau)))
    return Stencil(
        tau_n=tau,
        dtau=dtau,
        x_im1=x - h_minus,
        x_i=x,
        x_ip1=x + h_plus,
        x_i_np1=x_np1,
        u_im1=float(u(x - h_minus, tau)),
        u_i=float(u(x, tau)),
        u_ip1=float(u(x + h_plus, tau)),
        u_i_np1=float(u(x_np1, tau + dtau)),
        **extra,
    )


def random_element(rng: np.random.Generator, bound: float = 1.0) -> GroupElement:
    return GroupElement(*rng.uniform(-bound, bound, size=5))


def relative(provided, expected) -> float:
    provided = np.asarray(provided, dtype=float)
    expected = np.asarray(expected, dtype=float)
    return float(np.max(np.abs(provided - expected) / np.maximum(1.0, np.abs(expected))))
