from __future__ import annotations

__version__ = '0.1.0'


class CalorError(ValueError):
    """Base class for the numerical failures raised by calor."""


class DomainError(CalorError):
    """A logarithm or power was requested of a non-positive solution value."""


class FrameUndefined(CalorError):
    """The moving frame does not exist at the given point (its scaling component is complex)."""


class MeshTangled(CalorError):
    """A periodic mesh has a non-positive gap or its gaps do not add up to the period."""


class PositivityLost(CalorError):
    """An explicit time step produced a non-positive solution value."""


def _humanize_seconds(seconds: float) -> str:
    units = [('s', 1.0), ('ms', 1e-3), ('us', 1e-6)]
    for unit, scale in units:
        if seconds >= scale:
            return f'{seconds / scale:.2f} {unit}'
    return f'{seconds / 1e-9:.2f} ns'
