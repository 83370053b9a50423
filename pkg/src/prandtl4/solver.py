"""Exponential (Duhamel) time stepping for the restricted fourth-order Prandtl equation

    a_t = -a_yyyy + a^2 - a_y int_0^y a dz,     a(t, 0) = a_y(t, 0) = 0.

A step of size ``dt`` discretises

    a(t + dt) = S(dt) a(t) + int_0^dt S(dt - tau) N(a(t + tau)) dtau

with the trapezoid rule in ``tau``; the implicit end-point value is resolved by
Picard iteration started from an exponential-Euler predictor.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import DEFAULT_BETA, compatibility_check, energy_report
from .errors import CompatibilityViolated, PicardDiverged
from .grid import Profile
from .kernel import DEFAULT_QUAD, QuadratureSpec
from .semigroup import KernelOperator, apply, build_operator, min_time

log = logging.getLogger(__name__)

DT_SAFETY = 0.5
CFL = 0.5
DEFAULT_BLOWUP_FACTOR = 2.0**6


class Termination(enum.Enum):
    TIME_REACHED = "TimeReached"
    BLOWUP_DETECTED = "BlowupDetected"
    STEP_UNDERFLOW = "StepUnderflow"
    PICARD_DIVERGED = "PicardDiverged"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class SolverConfig:
    dt_initial: float = 1e-3
    dt_min: float = 1e-6
    picard_iters: int = 6
    picard_tol: float = 1e-12
    blowup_threshold: float | None = None  # None: 2**6 * ||a0||_sup
    snapshot_factor: float = 2.0
    max_steps: int = 200_000
    beta: float = DEFAULT_BETA
    nonlinear: bool = True
    compat_tol: float = 1e-6
    quad: QuadratureSpec = DEFAULT_QUAD
    fixed_step: bool = False  # march with dt_initial throughout (convergence studies)

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_initial:
            raise ValueError("need 0 < dt_min <= dt_initial")
        if self.picard_iters < 1:
            raise ValueError("picard_iters must be at least 1")
        if not self.snapshot_factor > 1:
            raise ValueError("snapshot_factor must exceed 1")

    def threshold_for(self, a0: Profile) -> float:
        sup0 = a0.sup()
        if self.blowup_threshold is None:
            return DEFAULT_BLOWUP_FACTOR * sup0 if sup0 > 0 else math.inf
        if not self.blowup_threshold > sup0:
            raise ValueError("blowup_threshold must exceed the sup norm of the datum")
        return self.blowup_threshold


@dataclass
class EvolutionTrace:
    times: np.ndarray
    profiles: list
    reports: list
    snapshots: list
    snapshot_levels: list
    termination: Termination
    steps: list = field(default_factory=list)

    @property
    def sups(self) -> np.ndarray:
        return np.array([p.sup() for p in self.profiles])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports], dtype=float)

    @property
    def final(self) -> Profile:
        return self.profiles[-1]


def cumulative_integral(a: Profile) -> Profile:
    return Profile(a.grid, a.grid.cumulative(a.values))


def nonlinear_term(a: Profile) -> Profile:
    """``N(a) = a^2 - a_y int_0^y a``."""
    g = a.grid
    return Profile(g, a.values**2 - g.derivative(a.values, 1) * g.cumulative(a.values))


def step(a: Profile, dt: float, config: SolverConfig, op: KernelOperator | None = None,
         threshold: float = math.inf) -> Profile:
    """Advance ``a`` by one Duhamel-trapezoid step of size ``dt``."""
    if op is None:
        op = build_operator(a.grid, dt, quad=config.quad)
    sa = apply(op, a)
    if not config.nonlinear:
        return sa
    sna = apply(op, nonlinear_term(a))
    guess = sa + dt * sna
    for _ in range(config.picard_iters):
        new = sa + 0.5 * dt * (sna + nonlinear_term(guess))
        change = (new - guess).sup()
        if new.sup() > 10 * threshold and change > 0:
            raise PicardDiverged(f"Picard iterate reached {new.sup():.3g} (dt={dt})")
        guess = new
        if change < config.picard_tol:
            break
    return guess


def stable_dt(config: SolverConfig, a: Profile) -> float:
    """Largest admissible step before rounding to ``dt_initial / 2^k``.

    ``0.5 / ||a||_sup`` follows the growth time of the quadratic term;
    ``CFL * h / max|int_0^y a|`` keeps the Picard correction contractive
    against the nonlocal transport term, which the semigroup does not damp.
    """
    dt = config.dt_initial
    sup = a.sup()
    if sup > 0:
        dt = min(dt, DT_SAFETY / sup)
    if config.nonlinear:
        vmax = float(np.max(np.abs(a.grid.cumulative(a.values))))
        if vmax > 0:
            dt = min(dt, CFL * a.grid.spacing / vmax)
    return dt


def _quantised_dt(config: SolverConfig, a: Profile) -> float:
    # Powers-of-two fractions of dt_initial keep the operator cache small.
    if config.fixed_step:
        return config.dt_initial
    raw = stable_dt(config, a)
    k = max(0, math.ceil(math.log2(config.dt_initial / raw) - 1e-12))
    return config.dt_initial / 2**k


def evolve(a0: Profile, t_end: float, config: SolverConfig = SolverConfig()) -> EvolutionTrace:
    """March from ``t = 0`` towards ``t_end``.

    The step is :func:`stable_dt` rounded down to ``dt_initial / 2^k``
    (or ``dt_initial`` itself with ``fixed_step``).  A snapshot index is
    recorded whenever the sup norm
    first reaches ``snapshot_factor^n * ||a0||_sup``.  The run stops with
    ``BLOWUP_DETECTED`` once the sup norm reaches the blow-up threshold.
    """
    compat = compatibility_check(a0, config.compat_tol * max(1.0, a0.sup()))
    if not compat.passed:
        raise CompatibilityViolated(f"datum fails wall compatibility: {compat.residuals}")
    threshold = config.threshold_for(a0)
    sup0 = a0.sup()
    times, profiles = [0.0], [a0]
    reports = [energy_report(a0, 0.0, config.beta)]
    snapshots, levels = [0], [0]
    level = 0
    steps = []
    dt_floor = max(config.dt_min, min_time(a0.grid))
    t, a = 0.0, a0
    termination = Termination.TIME_REACHED
    while t_end - t > 1e-12 * max(1.0, t_end):
        if len(steps) >= config.max_steps:
            termination = Termination.MAX_STEPS
            break
        dt = _quantised_dt(config, a)
        if dt < dt_floor:
            termination = Termination.STEP_UNDERFLOW
            log.info("step underflow at t=%.6g (sup=%.4g)", t, a.sup())
            break
        if t + dt >= t_end * (1 - 1e-12):
            dt = t_end - t
        try:
            a = step(a, dt, config, threshold=threshold)
        except PicardDiverged:
            termination = Termination.PICARD_DIVERGED
            break
        t = t_end if dt == t_end - times[-1] else t + dt
        steps.append(dt)
        times.append(t)
        profiles.append(a)
        reports.append(energy_report(a, t, config.beta))
        sup = a.sup()
        while sup0 > 0 and sup >= sup0 * config.snapshot_factor ** (level + 1):
            level += 1
            snapshots.append(len(times) - 1)
            levels.append(level)
        if sup >= threshold:
            termination = Termination.BLOWUP_DETECTED
            break
    return EvolutionTrace(np.array(times), profiles, reports, snapshots, levels, termination, steps)


def residual_check(trace: EvolutionTrace, index: int) -> float:
    """Sup over interior nodes of ``a_t - (-a_yyyy + N(a))`` at ``trace.times[index]``.

    ``a_t`` is the three-point (possibly non-uniform) central difference.
    """
    if not 1 <= index <= len(trace.times) - 2:
        raise IndexError(f"sample index {index} outside [1, {len(trace.times) - 2}]")
    t0, t1, t2 = trace.times[index - 1: index + 2]
    a0, a1, a2 = (p.values for p in trace.profiles[index - 1: index + 2])
    h0, h1 = t1 - t0, t2 - t1
    at = (-h1 / (h0 * (h0 + h1)) * a0 + (h1 - h0) / (h0 * h1) * a1
          + h0 / (h1 * (h0 + h1)) * a2)
    a = trace.profiles[index]
    rhs = -a.grid.derivative(a.values, 4) + nonlinear_term(a).values
    return float(np.max(np.abs(at - rhs)[1:-1]))
