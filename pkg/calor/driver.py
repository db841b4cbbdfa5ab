from __future__ import annotations

import dataclasses
import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from time import perf_counter
from typing import Callable
from typing import Tuple

import numpy as np

from calor import _humanize_seconds
from calor import DomainError
from calor import MeshTangled
from calor import PositivityLost
from calor.group import Real
from calor.interpolation import InterpolationMethod
from calor.interpolation import project
from calor.mesh import gaps
from calor.mesh import grid_step_dorodnitsyn
from calor.mesh import grid_step_invariantized
from calor.mesh import MeshState
from calor.mesh import signed_offset
from calor.mesh import TWO_PI
from calor.mesh import uniform_lattice
from calor.mesh import validate
from calor.schemes import SchemeKind
from calor.schemes import step_ftcs
from calor.schemes import step_invariant_ftcs
from calor.schemes import step_invariant_leapfrog

logger = logging.getLogger(__name__)

IC_SAMPLES = 10_000
MIN_NODES = 3
GRID_AGREEMENT = 1e-12

Mode = Tuple[int, float, float]


class GridKind(str, Enum):
    STATIONARY = 'stationary'
    INVARIANTIZED = 'invariantized'
    DORODNITSYN = 'dorodnitsyn'


@dataclass(frozen=True)
class FourierIC:
    """
    A periodic initial condition :math:`a_0 + \\sum_k A_k \\sin(k(x - s_k))` on :math:`[0, 2\\pi)`.

    ``modes`` holds ``(k, amplitude, shift)`` triples with positive integer wavenumbers. The profile must be
    strictly positive, which is checked on a dense sample of the period.
    """
    constant: float
    modes: Tuple[Mode, ...] = ()

    def __post_init__(self):
        if not math.isfinite(self.constant):
            raise ValueError(f'`constant` must be finite, got {self.constant}')
        if self.constant < 0:
            raise ValueError(f'`constant` must be non-negative, got {self.constant}')
        modes = []
        for mode in self.modes:
            if len(mode) != 3:
                raise ValueError(f'Modes are (k, amplitude, shift) triples, got {mode}')
            k, amplitude, shift = mode
            if not math.isfinite(float(k)) or float(k) != int(k) or int(k) < 1:
                raise ValueError(f'Wavenumber must be a positive integer, got {k}')
            if not (math.isfinite(float(amplitude)) and math.isfinite(float(shift))):
                raise ValueError(f'Amplitude and shift must be finite, got {mode}')
            modes.append((int(k), float(amplitude), float(shift)))
        object.__setattr__(self, 'constant', float(self.constant))
        object.__setattr__(self, 'modes', tuple(modes))
        minimum = float(np.min(self(np.linspace(0.0, TWO_PI, IC_SAMPLES, endpoint=False))))
        if minimum <= 0:
            raise ValueError(f'Initial condition must be strictly positive, sampled minimum is {minimum}')

    def at(self, x: Real, t: float) -> Real:
        x = np.asarray(x, dtype=float)
        value = np.full_like(x, self.constant)
        for k, amplitude, shift in self.modes:
            value = value + amplitude * np.exp(-k ** 2 * t) * np.sin(k * (x - shift))
        return value

    def __call__(self, x: Real) -> Real:
        return self.at(x, 0.0)

    def __add__(self, other: FourierIC) -> FourierIC:
        # sorted so that a + b and b + a evaluate identically
        return FourierIC(self.constant + other.constant, tuple(sorted(self.modes + other.modes)))

    def to_text(self) -> str:
        terms = [f'const:{self.constant!r}']
        terms += [f'sin:k={k},amp={amplitude!r},shift={shift!r}' for k, amplitude, shift in self.modes]
        return '+'.join(terms)


DEFAULT_IC_TEXT = 'const:2+sin:k=1,shift=1'

_TERM_SPLIT = re.compile(r'\+(?=[a-z])')


def parse_ic(text: str) -> FourierIC:
    """

    Parses the initial-condition mini-format ``const:<a0>+sin:k=<k>,amp=<a>,shift=<s>+...``. ``amp`` defaults to 1
    and ``shift`` to 0; several ``const`` terms add up.

    :param text: The IC description
    :return: The parsed initial condition
    :raises ValueError: on an unknown term, key or malformed number

    Example
    -----

    .. code-block:: python

        parse_ic('const:2+sin:k=1,shift=1')

    .. code-block:: python

        FourierIC(constant=2.0, modes=((1, 1.0, 1.0),))

    """
    constant = 0.0
    modes = []
    for term in _TERM_SPLIT.split(text.strip().lower()):
        kind, _, body = term.partition(':')
        try:
            if kind == 'const':
                constant += float(body)
            elif kind == 'sin':
                fields = dict(amp='1', shift='0')
                for item in body.split(','):
                    key, sep, value = item.partition('=')
                    if not sep or key not in ('k', 'amp', 'shift'):
                        raise ValueError(f'unknown field `{item}`')
                    fields[key] = value
                if 'k' not in fields:
                    raise ValueError('missing `k`')
                modes.append((float(fields['k']), float(fields['amp']), float(fields['shift'])))
            else:
                raise ValueError(f'unknown term kind `{kind}`')
        except ValueError as e:
            raise ValueError(f'Malformed initial condition term `{term}` in `{text}`: {e}') from e
    return FourierIC(constant, tuple(modes))


def exact_solution(ic: FourierIC, x: Real, t: float) -> Real:
    """

    The exact solution of :math:`u_t = u_{xx}` from a Fourier initial condition: every mode decays by
    :math:`e^{-k^2 t}` and the constant persists.

    :param ic: Initial condition
    :param x: Position(s)
    :param t: Time, non-negative
    :return: :math:`u(x, t)`
    """
    if t < 0:
        raise ValueError(f'`t` must be non-negative, got {t}')
    return ic.at(x, t)


@dataclass(frozen=True)
class RunConfig:
    """
    One evolution-projection run. ``projection=None`` keeps the moved mesh; any
    :class:`~calor.interpolation.InterpolationMethod` projects every step back to the uniform lattice.
    """
    N: int
    scheme: SchemeKind = SchemeKind.INVARIANT_FTCS
    grid: GridKind = GridKind.INVARIANTIZED
    projection: InterpolationMethod | None = None
    sigma: float = 0.25
    t_final: float = 1.0
    ic: FourierIC = dataclasses.field(default_factory=lambda: parse_ic(DEFAULT_IC_TEXT))

    def __post_init__(self):
        object.__setattr__(self, 'scheme', SchemeKind(self.scheme))
        object.__setattr__(self, 'grid', GridKind(self.grid))
        if self.projection is not None and self.projection != 'none':
            object.__setattr__(self, 'projection', InterpolationMethod(self.projection))
        else:
            object.__setattr__(self, 'projection', None)
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < MIN_NODES:
            raise ValueError(f'`N` must be an integer >= {MIN_NODES}, got {self.N}')
        if not self.sigma > 0:
            raise ValueError(f'`sigma` must be positive, got {self.sigma}')
        if not self.t_final > 0:
            raise ValueError(f'`t_final` must be positive, got {self.t_final}')

    @property
    def h(self) -> float:
        return TWO_PI / self.N

    def time_grid(self) -> tuple[int, float]:
        """Number of steps and the uniform step :math:`\\Delta\\tau' = t_{final}/\\lceil t_{final}/(\\sigma h^2)\\rceil`."""
        steps = math.ceil(self.t_final / (self.sigma * self.h ** 2))
        return steps, self.t_final / steps

    @property
    def adaptive(self) -> bool:
        """
        Whether the time step follows the moving mesh: runs without projection on a moving grid take
        :math:`\\Delta\\tau_n = \\sigma \\min_i h_i^+ h_i^-`, capped at :math:`\\sigma h^2`. Leapfrog keeps the uniform
        step it needs.
        """
        return self.projection is None and self.grid is not GridKind.STATIONARY and \
            self.scheme is not SchemeKind.INVARIANT_LEAPFROG

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dict(
            N=self.N,
            scheme=self.scheme.value,
            grid=self.grid.value,
            projection=self.projection.value if self.projection else 'none',
            sigma=self.sigma,
            t_final=self.t_final,
            ic=self.ic.to_text(),
        )


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    final: MeshState
    steps: int
    wall_time: float
    flags: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.flags


def _stationary(m: MeshState, dtau: float) -> np.ndarray:
    return m.x


_GRID_STEPS: dict[GridKind, Callable[[MeshState, float], np.ndarray]] = {
    GridKind.STATIONARY: _stationary,
    GridKind.INVARIANTIZED: grid_step_invariantized,
    GridKind.DORODNITSYN: grid_step_dorodnitsyn,
}


def _check_grids_agree(grid: GridKind, level: MeshState, x_np1: np.ndarray, dtau: float) -> None:
    # on the uniform lattice both grid equations give the same nodes
    other = GridKind.DORODNITSYN if grid is GridKind.INVARIANTIZED else GridKind.INVARIANTIZED
    disagreement = float(np.max(np.abs(signed_offset(_GRID_STEPS[other](level, dtau), x_np1, level.period))))
    if disagreement > GRID_AGREEMENT * level.period:
        raise MeshTangled(f'Grid equations disagree by {disagreement} on the uniform lattice at tau={level.tau}')


def _time_step(cfg: RunConfig, level: MeshState) -> float:
    h = gaps(level)
    return min(cfg.sigma * cfg.h ** 2, cfg.sigma * float(np.min(h * np.roll(h, 1))))


def _advance(
        cfg: RunConfig,
        level: MeshState,
        previous: MeshState | None,
        dtau: float,
        tau_next: float,
        lattice: np.ndarray,
) -> MeshState:
    x_np1 = _GRID_STEPS[cfg.grid](level, dtau)
    if cfg.projection is not None and cfg.grid is not GridKind.STATIONARY:
        _check_grids_agree(cfg.grid, level, x_np1, dtau)
    if cfg.scheme is SchemeKind.FTCS:
        u_np1 = step_ftcs(level, x_np1, dtau)
    elif cfg.scheme is SchemeKind.INVARIANT_FTCS or previous is None:
        # leapfrog needs two levels; its first step is an invariant FTCS step
        u_np1 = step_invariant_ftcs(level, x_np1, dtau)
    else:
        u_np1 = step_invariant_leapfrog(level, x_np1, dtau, previous)
    moved = level.with_values(x_np1, u_np1, tau_next, uniform=cfg.grid is GridKind.STATIONARY and level.uniform)
    if cfg.projection is None:
        return validate(moved)
    return moved.with_values(lattice, project(moved, lattice, cfg.projection), tau_next, uniform=True)


def run(cfg: RunConfig) -> RunResult:
    """

    Integrates the heat equation on :math:`[0, 2\\pi)` from the uniform lattice :math:`x_i = 2\\pi i / N`.

    Each step moves the nodes by the configured grid equation, solves the configured explicit scheme for the new
    values and, when a projection is configured, interpolates back onto the uniform lattice. The step count is
    :math:`\\lceil t_{final} / (\\sigma h^2) \\rceil` with the step shrunk so the final time is hit exactly.
    Without projection the nodes drift together, so a moving grid instead takes
    :math:`\\Delta\\tau_n = \\sigma \\min_i h_i^+ h_i^-` (see :attr:`RunConfig.adaptive`) and its last step ends on
    :math:`t_{final}`. In projection mode every step asserts that both grid equations give the same nodes.

    A :class:`~calor.PositivityLost`, :class:`~calor.MeshTangled` or :class:`~calor.DomainError` ends the run
    early; the failure is logged and recorded in :attr:`RunResult.flags`, and ``final`` holds the last good level.

    :param cfg: The run configuration
    :return: The result of the run

    Example
    -----

    .. code-block:: python

        result = run(RunConfig(N=64))
        linf_error(result, result.config.ic)

    """
    steps, dtau = cfg.time_grid()
    lattice = uniform_lattice(cfg.N)
    level = MeshState(tau=0.0, period=TWO_PI, x=lattice, u=cfg.ic(lattice), uniform=True)
    previous = None
    completed = 0
    flags = []
    log_every = max(1, steps // 10)
    logger.debug(f'Running {cfg.to_dict()} with {steps} steps of {dtau}')

    start = perf_counter()
    try:
        while (level.tau < cfg.t_final) if cfg.adaptive else (completed < steps):
            if cfg.adaptive:
                remaining = cfg.t_final - level.tau
                dtau = min(_time_step(cfg, level), remaining)
                tau_next = cfg.t_final if dtau == remaining else min(level.tau + dtau, cfg.t_final)
            else:
                tau_next = cfg.t_final if completed + 1 == steps else (completed + 1) * dtau
            previous, level = level, _advance(cfg, level, previous, dtau, tau_next, lattice)
            completed += 1
            if completed % log_every == 0:
                logger.debug(f'N={cfg.N} step {completed}: tau={level.tau}, min u={level.u.min()}')
    except (PositivityLost, MeshTangled, DomainError) as e:
        logger.warning(f'Run N={cfg.N} ({cfg.scheme.value}) aborted after {completed} steps: {e}')
        flags.append(f'{type(e).__name__}: {e}')
    wall_time = perf_counter() - start

    logger.debug(f'N={cfg.N} finished {completed} steps in {_humanize_seconds(wall_time)}')
    return RunResult(config=cfg, final=level, steps=completed, wall_time=wall_time, flags=tuple(flags))


def linf_error(result: RunResult, ic: FourierIC) -> float:
    """

    Maximum-norm error of a run against the exact solution, evaluated at the final node positions (the moved
    positions when the run has no projection).

    :param result: A run result
    :param ic: The initial condition the run was started from
    :return: :math:`\\max_i |u_i - u(x_i, \\tau)|`
    """
    final = result.final
    return float(np.max(np.abs(final.u - exact_solution(ic, final.x, final.tau))))
