"""Blow-up functionals, norms and boundary checks for solution profiles.

For a profile ``a`` on the half-line:

* ``F(a) = int a^2``
* ``E(a) = int (a_yy^2 / 2 - a^3 / 12)``
* ``G(a) = -E(a) / F(a)^beta`` with ``1 < beta < 93/64``
* ``dE/dt = -int ((a_yyyy - a^2/4)^2 + 13/48 a^4)`` along solutions

A negative ``E`` at the initial time forces ``dF/dt >= 6 G(a_0) F^beta``,
whose comparison solution diverges in finite time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateF, InvalidBeta
from .grid import Profile

BETA_MAX = 93 / 64
DEFAULT_BETA = 1.2
F_FLOOR = 1e-300
COMPAT_ORDERS = (0, 1, 4, 5)


def _check_beta(beta: float):
    if not 1.0 < beta < BETA_MAX:
        raise InvalidBeta(f"beta must lie in (1, 93/64), got {beta}")


def functional_F(a: Profile) -> float:
    return a.grid.integrate(a.values**2)


def functional_E(a: Profile) -> float:
    ayy = a.grid.derivative(a.values, 2)
    return a.grid.integrate(0.5 * ayy**2 - a.values**3 / 12.0)


def functional_G(a: Profile, beta: float = DEFAULT_BETA) -> float:
    _check_beta(beta)
    F = functional_F(a)
    if F <= F_FLOOR:
        raise DegenerateF(f"F(a)={F} is too small for G")
    return -functional_E(a) / F**beta


def dissipation_rate(a: Profile) -> float:
    """Right-hand side of the energy identity; nonpositive by construction."""
    a4 = a.grid.derivative(a.values, 4)
    return -a.grid.integrate((a4 - 0.25 * a.values**2) ** 2 + (13.0 / 48.0) * a.values**4)


def riccati_blowup_bound(F0: float, G0: float, beta: float = DEFAULT_BETA) -> float:
    """Time by which ``F`` must diverge under ``dF/dt >= 6 G0 F^beta``."""
    if not beta > 1.0:
        raise InvalidBeta(f"beta must exceed 1, got {beta}")
    if not (F0 > 0 and G0 > 0):
        raise ValueError("F0 and G0 must be positive")
    return F0 ** (1.0 - beta) / (6.0 * G0 * (beta - 1.0))


def xt_norm(a: Profile) -> float:
    """``||a||_inf + ||a_y||_inf + sum_{k<=4} ||d^k a||_L1``."""
    g = a.grid
    ay = g.derivative(a.values, 1)
    total = a.sup() + float(np.max(np.abs(ay)))
    for k in range(5):
        dk = ay if k == 1 else g.derivative(a.values, k)
        total += g.integrate(np.abs(dk))
    return total


@dataclass(frozen=True)
class CompatibilityResult:
    passed: bool
    residuals: dict
    tol: float

    def __bool__(self):
        return self.passed


def compatibility_check(a0: Profile, tol: float = 1e-6) -> CompatibilityResult:
    """Wall traces of ``d^m a0`` for ``m = 0, 1, 4, 5`` against ``tol``."""
    res = {m: a0.grid.boundary_derivative(a0.values, m) for m in COMPAT_ORDERS}
    return CompatibilityResult(all(abs(r) <= tol for r in res.values()), res, tol)


def reconstruct_2d(a: Profile, x_values) -> tuple[np.ndarray, np.ndarray]:
    """Velocity fields ``u = -x a(y)``, ``v = int_0^y a`` on the ``(x, y)`` tensor grid."""
    x = np.asarray(x_values, dtype=float)
    u = -np.outer(x, a.values)
    v = np.broadcast_to(a.grid.cumulative(a.values), u.shape).copy()
    return u, v


@dataclass(frozen=True)
class EnergyReport:
    t: float
    F: float
    E: float
    beta: float
    G: float | None
    dissipation: float
    riccati_bound: float | None
    sup: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def energy_report(a: Profile, t: float = 0.0, beta: float = DEFAULT_BETA) -> EnergyReport:
    """Functionals at one time.

    ``riccati_bound`` is ``t`` plus the Riccati blow-up time obtained by
    restarting the argument from the current state, so it is only present
    when ``E < 0``.  At ``t = 0`` it bounds the blow-up time of the run.
    """
    _check_beta(beta)
    F = functional_F(a)
    E = functional_E(a)
    G = -E / F**beta if F > F_FLOOR else None
    bound = None
    if G is not None and G > 0:
        bound = t + riccati_blowup_bound(F, G, beta)
    return EnergyReport(t, F, E, beta, G, dissipation_rate(a), bound, a.sup())
