"""Loop integrals over the classical orbit and turning-point arc corrections.

Global quantities are computed in x-space forms that stay regular at an
interior critical point of V (all with the endpoint substitution rule):

    S0(E) = 2 int sqrt(E - V) dx          phase-space area of the orbit
    T(E)  = int dx / sqrt(E - V)          period, equals dS0/dE
    J(E)  = int V'' / sqrt(E - V) dx      loop integral of V'' dt
    S2(E) = (1/12) dJ/dE                  second-order action coefficient

S2 is a Richardson-refined central difference in E; differentiating under
the integral sign would strengthen the endpoint singularity.

The xi-parametrized quantities (the arc phase density and the second-order
arc phase correction) live on arcs through the right turning point where
V' != 0; they are local by construction and refuse arcs that would cross a
critical point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, QuadratureError
from .geometry import (CurveFrame, WellGeometry, curve_frame,
                       find_turning_points, refine_geometry)
from .potential import Potential
from .quadrature import QuadRule, integrate, quad_well, quad_well_frame

__all__ = ["ActionData", "ArcCorrection", "classical_action", "orbit_period",
           "vpp_loop_integral", "action_correction", "arc_phase_density",
           "arc_phase_correction", "action_data"]

S2_AGREEMENT_RTOL = 1e-6   # stop halving the stencil once estimates agree
S2_MAX_HALVINGS = 6


@dataclass(frozen=True)
class ActionData:
    """Per-energy bundle of loop quantities with quadrature error estimates."""

    energy: float
    s0: float
    s0_err: float
    period: float
    period_err: float
    vpp_loop: float
    vpp_err: float
    s2: float
    s2_step: float


@dataclass(frozen=True)
class ArcCorrection:
    """Second-order phase correction on an arc xi in [0, xi_hi].

    ``via_parts`` evaluates the integrated-by-parts form (arc integral of
    the phase density plus boundary terms); ``via_direct`` the
    pre-integration-by-parts transport form.  The two are independent
    quadratures of the same quantity; ``discrepancy`` is their absolute
    difference.  ``value`` is the via_parts representative.
    """

    xi_hi: float
    via_parts: float
    via_direct: float

    @property
    def discrepancy(self) -> float:
        return abs(self.via_parts - self.via_direct)

    @property
    def value(self) -> float:
        return self.via_parts


def _clipped_sqrt(d):
    return np.sqrt(np.maximum(d, 0.0))


def classical_action(p: Potential, g: WellGeometry,
                     rule: QuadRule | None = None) -> tuple[float, float]:
    """S0(E): area enclosed by the energy curve, 2 int sqrt(E - V) dx."""
    energy = g.energy
    return quad_well(lambda x: 2.0 * _clipped_sqrt(energy - p.value(x)), g,
                     rule=rule)


def orbit_period(p: Potential, g: WellGeometry,
                 rule: QuadRule | None = None) -> tuple[float, float]:
    """T(E): period of the closed orbit, int dx / sqrt(E - V)."""
    energy = g.energy

    def f(x):
        d = energy - np.asarray(p.value(x))
        return 1.0 / np.sqrt(d)

    return quad_well(f, g, singular=True, rule=rule)


def vpp_loop_integral(p: Potential, g: WellGeometry,
                      rule: QuadRule | None = None) -> tuple[float, float]:
    """J(E): one loop of V'' in orbit time, int V'' / sqrt(E - V) dx."""
    energy = g.energy

    def f(x):
        d = energy - np.asarray(p.value(x))
        return np.asarray(p.deriv(2, x)) / np.sqrt(d)

    return quad_well(f, g, singular=True, rule=rule)


def _default_step(energy: float) -> float:
    return max(1e-4, 1e-3 * abs(energy))


def action_correction(p: Potential, energy: float,
                      search: tuple[float, float] | None = None,
                      step: float | None = None,
                      geometry: WellGeometry | None = None,
                      rule: QuadRule | None = None) -> tuple[float, float]:
    """S2(E) = (1/12) dJ/dE by Richardson-refined central differences.

    The stencil step starts at max(1e-4, 1e-3 |E|) and is halved until two
    successive Richardson estimates agree to 1e-6 relative (with an
    absolute floor for the exactly-constant-J case).  Returns (S2, step).
    """
    base = geometry or find_turning_points(p, energy, search)

    def j_at(e: float) -> float:
        try:
            geom = refine_geometry(p, e, base)
        except GeometryError as exc:
            raise GeometryError(
                f"well disappears inside the S2 stencil at E={e}: {exc}"
            ) from exc
        return vpp_loop_integral(p, geom, rule)[0]

    h0 = step if step is not None else _default_step(energy)
    cache: dict[float, float] = {}

    def central(delta: float) -> float:
        for e in (energy + delta, energy - delta):
            if e not in cache:
                cache[e] = j_at(e)
        return (cache[energy + delta] - cache[energy - delta]) / (2.0 * delta)

    prev = None
    delta = h0
    for _ in range(S2_MAX_HALVINGS):
        d1 = central(delta)
        d2 = central(delta / 2.0)
        richardson = (4.0 * d2 - d1) / 3.0
        if prev is not None:
            agree = abs(richardson - prev) <= S2_AGREEMENT_RTOL * max(
                abs(richardson), abs(prev), 1e-9)
            if agree:
                return richardson / 12.0, delta
        prev = richardson
        delta /= 2.0
    return prev / 12.0, delta * 2.0


def action_data(p: Potential, energy: float,
                search: tuple[float, float] | None = None,
                geometry: WellGeometry | None = None,
                rule: QuadRule | None = None) -> ActionData:
    """Assemble (S0, T, J, S2) with error estimates at one energy."""
    g = geometry or find_turning_points(p, energy, search)
    s0, s0_err = classical_action(p, g, rule)
    period, period_err = orbit_period(p, g, rule)
    vpp, vpp_err = vpp_loop_integral(p, g, rule)
    s2, s2_step = action_correction(p, energy, search, geometry=g, rule=rule)
    return ActionData(energy, s0, s0_err, period, period_err, vpp, vpp_err,
                      s2, s2_step)


# ---------------------------------------------------------------------------
# Arc quantities near the right turning point

def arc_phase_density(p: Potential, g: WellGeometry, x: float) -> float:
    """The h^2 phase density on the curve over x (finite only where V' != 0):

        (1/alpha) [ psi2^2/24 V'''' + alpha' psi2/(6 alpha) V'''
                    + alpha'^2/(8 alpha^2) V'' ]
    """
    fr = curve_frame(p, g, x)
    if fr.psi2 is None:
        raise GeometryError(
            f"phase density undefined at the interior critical point x={x}"
        )
    v2 = float(p.deriv(2, x))
    v3 = float(p.deriv(3, x))
    v4 = float(p.deriv(4, x))
    a, psi2, ap = fr.alpha, fr.psi2, fr.alpha_prime
    bracket = (psi2 * psi2 / 24.0) * v4 \
        + (ap * psi2 / (6.0 * a)) * v3 \
        + (ap * ap / (8.0 * a * a)) * v2
    return bracket / a


def _arc_positions(p: Potential, g: WellGeometry, zetas: np.ndarray) -> np.ndarray:
    """Solve V(x) = E - zeta^2 on the branch adjacent to the right turning
    point (V' > 0 all along), vectorized Newton over the nodes."""
    energy = g.energy
    x = np.full(zetas.shape, g.x_right, dtype=float)
    targets = energy - zetas * zetas
    for _ in range(80):
        slope = np.asarray(p.deriv(1, x), dtype=float)
        if np.any(slope <= 0.0):
            raise GeometryError(
                "arc crosses the interior critical point (V' <= 0)"
            )
        delta = (np.asarray(p.value(x), dtype=float) - targets) / slope
        x = x - delta
        if np.all(np.abs(delta) <= 1e-14 * np.maximum(1.0, np.abs(x))):
            break
    else:
        raise GeometryError("arc point solve did not converge")
    if np.any(x <= g.x_left) or np.any(x > g.x_right + 1e-12):
        raise GeometryError("arc leaves the well")
    slope = np.asarray(p.deriv(1, x), dtype=float)
    if np.any(slope <= 0.0):
        raise GeometryError("arc crosses the interior critical point (V' <= 0)")
    return x


def _extended_frame(p: Potential, g: WellGeometry, zetas: np.ndarray):
    """Frame fields plus psi''', theta0' along the right-turning-point arc."""
    x = _arc_positions(p, g, zetas)
    v1 = np.asarray(p.deriv(1, x), dtype=float)
    v2 = np.asarray(p.deriv(2, x), dtype=float)
    v3 = np.asarray(p.deriv(3, x), dtype=float)
    v4 = np.asarray(p.deriv(4, x), dtype=float)
    alpha = v1
    psi2 = 2.0 * zetas / alpha
    ap = -psi2 * v2
    psi3 = (2.0 - psi2 * ap) / alpha
    app = -psi3 * v2 + psi2 * psi2 * v3
    theta0 = ap / (2.0 * alpha)
    theta0p = app / (2.0 * alpha) - 2.0 * theta0 * theta0
    return x, alpha, psi2, ap, psi3, theta0, theta0p, v2, v3, v4


def arc_phase_correction(p: Potential, g: WellGeometry, xi_hi: float,
                         rule: QuadRule | None = None) -> ArcCorrection:
    """Second-order arc phase correction, evaluated two independent ways.

    via_parts:  int_0^xi (phase density) dzeta
                + [psi2 V'''/(6 alpha) + alpha' V''/(4 alpha^2)] at xi
                (the boundary term vanishes at zeta = 0 since psi2 and
                alpha' are both proportional to zeta there);
    via_direct: - int_0^xi (1/alpha) [ psi2^2/8 V''''
                + (theta0 psi2/2 - psi3/6) V''' + (theta0^2 - theta0')/2 V'' ]
    """
    if xi_hi < 0.0:
        raise GeometryError("arc extent must be non-negative")
    if xi_hi == 0.0:
        return ArcCorrection(0.0, 0.0, 0.0)

    def density(zetas):
        zetas = np.atleast_1d(np.asarray(zetas, dtype=float))
        _, alpha, psi2, ap, _, _, _, v2, v3, v4 = _extended_frame(p, g, zetas)
        bracket = (psi2 * psi2 / 24.0) * v4 + (ap * psi2 / (6.0 * alpha)) * v3 \
            + (ap * ap / (8.0 * alpha * alpha)) * v2
        return bracket / alpha

    def transport(zetas):
        zetas = np.atleast_1d(np.asarray(zetas, dtype=float))
        (_, alpha, psi2, ap, psi3, theta0, theta0p,
         v2, v3, v4) = _extended_frame(p, g, zetas)
        bracket = (psi2 * psi2 / 8.0) * v4 \
            + (theta0 * psi2 / 2.0 - psi3 / 6.0) * v3 \
            + 0.5 * (theta0 * theta0 - theta0p) * v2
        return bracket / alpha

    integral_parts, _ = integrate(density, 0.0, xi_hi, rule)
    integral_direct, _ = integrate(transport, 0.0, xi_hi, rule)

    z = np.array([xi_hi])
    _, alpha, psi2, ap, _, _, _, v2, v3, _ = _extended_frame(p, g, z)
    boundary = float(psi2[0] * v3[0] / (6.0 * alpha[0])
                     + ap[0] * v2[0] / (4.0 * alpha[0] ** 2))

    return ArcCorrection(xi_hi, integral_parts + boundary, -integral_direct)
