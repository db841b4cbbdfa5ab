from __future__ import annotations

import numpy as np

from calor import DomainError
from calor import MeshTangled
from calor.group import Real
from calor.group import Stencil


def _require_positive(*values: Real | None) -> None:
    for value in values:
        if value is None:
            continue
        if np.any(np.asarray(value) <= 0) or np.any(np.isnan(value)):
            raise DomainError(f'Solution values must be strictly positive, got minimum {np.min(value)}')


def _require_valid(z: Stencil) -> None:
    if np.any(np.asarray(z.dtau) <= 0):
        raise ValueError(f'`dtau` must be positive, got {z.dtau}')
    if np.any(np.asarray(z.h_plus) <= 0) or np.any(np.asarray(z.h_minus) <= 0):
        raise MeshTangled('Stencil spacings h+ and h- must be positive')


def _log_slope(z: Stencil) -> Real:
    # centred log-derivative at level n, the frame's boost parameter
    return (np.log(z.u_ip1) - np.log(z.u_im1)) / (z.h_plus + z.h_minus)


def _grid_velocity(z: Stencil) -> Real:
    return (z.x_i_np1 - z.x_i) / z.dtau


def _previous_grid_velocity(z: Stencil) -> Real:
    return (z.x_i - z.x_i_nm1) / z.dtau


def _exponent(velocity: Real, slope: Real, dtau: Real) -> Real:
    return dtau * (velocity * slope + slope ** 2)


def _invariant_diffusion(z: Stencil) -> Real:
    h_sum = z.h_plus + z.h_minus
    ratio = z.u_ip1 / z.u_im1
    bracket = (
        z.u_ip1 * ratio ** (-z.h_plus / h_sum)
        + z.u_im1 * ratio ** (z.h_minus / h_sum)
        - 2 * z.u_i
    )
    return 4 * bracket / h_sum ** 2


def _ftcs_space_derivative(z: Stencil) -> Real:
    return (z.u_ip1 - z.u_im1) / (z.h_plus + z.h_minus)


def _ftcs_diffusion(z: Stencil) -> Real:
    h_sum = z.h_plus + z.h_minus
    bracket = z.u_ip1 + z.u_im1 - 2 * z.u_i - (z.h_plus - z.h_minus) * _ftcs_space_derivative(z)
    return 4 * bracket / h_sum ** 2
