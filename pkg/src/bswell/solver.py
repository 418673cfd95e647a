"""Bohr-Sommerfeld level solver and Gram-determinant criterion.

The semiclassical action is

    S_h(E) = S0(E) - pi h - h^2 S2(E)        (order 2; order 1 drops S2)

and levels solve S_h(E) = 2 pi n h, n integer.  The -pi h term is the
Maslov correction for a loop with two simple turning points; the sign of
the h^2 term follows the Riccati/Dunham expansion of (hD)^2 + V and is
confirmed against grid eigenvalues (see tests).

The Gram criterion packages the same condition as the determinant

    D(E; h) = -cos^2( (S0(E) - h^2 S2(E)) / (2h) )  in  [-1, 0],

which vanishes exactly at the levels.

Levels are refined by safeguarded Newton with derivative T(E) (the h^2
derivative term is dropped from the Newton step; a bisection fallback
keeps the bracket).  Within one level solve S2 is frozen and re-evaluated
in an outer fixed-point loop until the energy reproduces itself, so the
recorded residual is an honest fresh evaluation of S_h at the returned
energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import action_correction, classical_action, orbit_period
from .errors import GeometryError, SolverError
from .geometry import WellGeometry, find_turning_points, refine_geometry
from .potential import Potential
from .quadrature import QuadRule
from .rootfind import refine_root

__all__ = ["BsLevel", "GramValue", "ActionAngleReport", "semiclassical_action",
           "enumerate_levels", "gram_determinant", "gram_zero_scan",
           "predicted_level_count", "action_angle_check", "spatial_window"]

RESIDUAL_RTOL = 1e-12        # residual <= RESIDUAL_RTOL * max(1, 2 pi |n| h)


@dataclass(frozen=True)
class BsLevel:
    """One solved level of the implicit quantization condition."""

    n: int
    energy: float
    h: float
    order: int
    residual: float
    iterations: int


@dataclass(frozen=True)
class GramValue:
    energy: float
    h: float
    value: float
    argument: float


@dataclass(frozen=True)
class ActionAngleReport:
    """Consistency data for the action-angle form of the spectrum."""

    energy: float
    tau: float                # S0 / (2 pi)
    dtau_de: float            # T / (2 pi), quadrature route
    f0_prime: float           # dE/dtau from the numerically inverted map
    inverse_residual: float   # |f0_prime * dtau_de - 1|
    implied_maslov: float     # -2 pi f1/f0' with f1 = f0'/2: identically -pi


def spatial_window(p: Potential, energy_max: float) -> tuple[float, float]:
    """Search window containing the well at energy_max: the potential's own
    hint when present, otherwise an expanding symmetric probe."""
    if p.well_hint is not None:
        return p.well_hint
    half = 1.0
    for _ in range(60):
        try:
            find_turning_points(p, energy_max, (-half, half))
            return (-half, half)
        except GeometryError:
            half *= 1.7
    raise GeometryError(
        "could not find a spatial window containing the well; "
        "pass well_hint to parse_potential"
    )


class _ActionEvaluator:
    """Caches geometry warm starts for repeated evaluations along one solve."""

    def __init__(self, p: Potential, search: tuple[float, float],
                 rule: QuadRule | None = None):
        self.p = p
        self.search = search
        self.rule = rule
        self._last: WellGeometry | None = None

    def geometry(self, energy: float) -> WellGeometry:
        if self._last is not None:
            g = refine_geometry(self.p, energy, self._last)
        else:
            g = find_turning_points(self.p, energy, self.search)
        self._last = g
        return g

    def s0(self, energy: float) -> float:
        return classical_action(self.p, self.geometry(energy), self.rule)[0]

    def period(self, energy: float) -> float:
        return orbit_period(self.p, self.geometry(energy), self.rule)[0]

    def s2(self, energy: float) -> float:
        g = self.geometry(energy)
        return action_correction(self.p, energy, search=self.search,
                                 geometry=g, rule=self.rule)[0]

    def action(self, energy: float, h: float, order: int) -> float:
        value = self.s0(energy) - math.pi * h
        if order == 2:
            value -= h * h * self.s2(energy)
        return value


def _evaluator(p: Potential, energy_max: float,
               search: tuple[float, float] | None,
               rule: QuadRule | None) -> _ActionEvaluator:
    return _ActionEvaluator(p, search or spatial_window(p, energy_max), rule)


def _check_order(order: int) -> None:
    if order not in (1, 2):
        raise SolverError(f"order must be 1 or 2, got {order}")


def semiclassical_action(p: Potential, energy: float, h: float,
                         order: int = 2,
                         search: tuple[float, float] | None = None,
                         rule: QuadRule | None = None) -> float:
    """S_h(E) = S0 - pi h (- h^2 S2 at order 2)."""
    _check_order(order)
    return _evaluator(p, energy, search, rule).action(energy, h, order)


def _solve_level(ev: _ActionEvaluator, h: float, order: int, n: int,
                 lo: float, hi: float, s_lo: float, s_hi: float) -> BsLevel:
    target = 2.0 * math.pi * n * h
    tol = 0.5 * RESIDUAL_RTOL * max(1.0, abs(target))
    iterations = 0
    energy = lo + (hi - lo) * (target - s_lo) / (s_hi - s_lo)
    s2_val = ev.s2(energy) if order == 2 else 0.0
    for _ in range(12):

        def f(e: float) -> float:
            nonlocal iterations
            iterations += 1
            return ev.s0(e) - math.pi * h - h * h * s2_val - target

        energy, _ = refine_root(f, ev.period, lo, hi, f_tol=tol)
        if order == 1:
            residual = abs(ev.s0(energy) - math.pi * h - target)
            return BsLevel(n, energy, h, order, residual, iterations)
        # accept only once a fresh S2 at the solved energy keeps the
        # residual inside tolerance (S2 was frozen during the solve)
        s2_val = ev.s2(energy)
        residual = abs(ev.s0(energy) - math.pi * h - h * h * s2_val - target)
        if residual <= 2.0 * tol:
            return BsLevel(n, energy, h, order, residual, iterations)
    raise SolverError(
        f"level n={n}: residual {residual:.2e} above tolerance {2*tol:.2e} "
        "after the refreeze loop"
    )


def enumerate_levels(p: Potential, window: tuple[float, float], h: float,
                     order: int = 2, scan_points: int = 65,
                     search: tuple[float, float] | None = None,
                     rule: QuadRule | None = None) -> list[BsLevel]:
    """All levels with S_h(E) = 2 pi n h inside the energy window.

    The window is scanned on a grid to verify strict monotonicity of S_h
    and to bracket each root; non-monotone values are reported as an error
    rather than silently resolved.
    """
    _check_order(order)
    if h <= 0.0:
        raise SolverError(f"h must be positive, got {h}")
    e_lo, e_hi = float(window[0]), float(window[1])
    if not e_lo < e_hi:
        raise SolverError(f"empty energy window [{e_lo}, {e_hi}]")
    ev = _evaluator(p, e_hi, search, rule)

    grid = np.linspace(e_lo, e_hi, scan_points)
    values = np.array([ev.action(float(e), h, order) for e in grid])
    if not np.all(np.diff(values) > 0.0):
        raise SolverError(
            "semiclassical action is not strictly increasing on the "
            "bracketing grid; refusing to enumerate levels"
        )

    two_pi_h = 2.0 * math.pi * h
    n_min = math.ceil(values[0] / two_pi_h - 1e-12)
    n_max = math.floor(values[-1] / two_pi_h + 1e-12)
    levels = []
    for n in range(n_min, n_max + 1):
        target = n * two_pi_h
        idx = int(np.clip(np.searchsorted(values, target), 1, scan_points - 1))
        levels.append(_solve_level(ev, h, order, n,
                                   float(grid[idx - 1]), float(grid[idx]),
                                   float(values[idx - 1]), float(values[idx])))
    energies = [lvl.energy for lvl in levels]
    if any(b <= a for a, b in zip(energies, energies[1:])):
        raise SolverError("levels are not strictly increasing")
    return levels


def predicted_level_count(p: Potential, window: tuple[float, float], h: float,
                          order: int = 2,
                          search: tuple[float, float] | None = None,
                          rule: QuadRule | None = None) -> int:
    """Level count from the endpoint values of S_h alone."""
    ev = _evaluator(p, window[1], search, rule)
    s_lo = ev.action(window[0], h, order)
    s_hi = ev.action(window[1], h, order)
    two_pi_h = 2.0 * math.pi * h
    return max(0, math.floor(s_hi / two_pi_h + 1e-12)
               - math.ceil(s_lo / two_pi_h - 1e-12) + 1)


def gram_determinant(p: Potential, energy: float, h: float,
                     search: tuple[float, float] | None = None,
                     rule: QuadRule | None = None) -> GramValue:
    """D(E; h) = -cos^2((S0 - h^2 S2)/(2h)), zero exactly at the levels."""
    ev = _evaluator(p, energy, search, rule)
    argument = (ev.s0(energy) - h * h * ev.s2(energy)) / (2.0 * h)
    c = math.cos(argument)
    return GramValue(energy, h, -min(c * c, 1.0), argument)


def gram_zero_scan(p: Potential, window: tuple[float, float], h: float,
                   n_grid: int = 2001,
                   search: tuple[float, float] | None = None,
                   rule: QuadRule | None = None) -> list[float]:
    """Locate the zeros of D(E; h) from its values on an energy grid.

    Interior local maxima of D that come near zero are refined by two
    rounds of parabolic interpolation through freshly evaluated points;
    the procedure only ever uses D values, independent of the level solver.
    """
    ev = _evaluator(p, window[1], search, rule)

    def d_of(e: float) -> float:
        argument = (ev.s0(e) - h * h * ev.s2(e)) / (2.0 * h)
        c = math.cos(argument)
        return -min(c * c, 1.0)

    grid = np.linspace(window[0], window[1], n_grid)
    values = np.array([d_of(float(e)) for e in grid])
    zeros = []
    for i in range(1, n_grid - 1):
        if values[i] >= values[i - 1] and values[i] >= values[i + 1] \
                and values[i] > -0.5:
            e_mid, step = float(grid[i]), float(grid[1] - grid[0])
            for _ in range(2):
                e_vals = (e_mid - step, e_mid, e_mid + step)
                d_vals = [d_of(e) for e in e_vals]
                denom = d_vals[0] - 2.0 * d_vals[1] + d_vals[2]
                if denom >= 0.0:
                    break
                e_mid = e_mid + 0.5 * step * (d_vals[0] - d_vals[2]) / denom
                step *= 1e-3
            zeros.append(e_mid)
    return zeros


def action_angle_check(p: Potential, energy: float,
                       search: tuple[float, float] | None = None,
                       rule: QuadRule | None = None) -> ActionAngleReport:
    """Action-angle consistency at one energy.

    tau(E) = S0/(2 pi); its E-derivative is computed both as T/(2 pi)
    (singular-endpoint quadrature) and through a Richardson finite
    difference of the inverted grid map, and the two must be mutual
    inverses.  The first angle coefficient f1 = f0'/2 makes the implied
    Maslov term -2 pi f1/f0' equal to -pi identically.
    """
    ev = _evaluator(p, energy * 1.05 + 1e-2, search, rule)
    tau = ev.s0(energy) / (2.0 * math.pi)
    dtau_de = ev.period(energy) / (2.0 * math.pi)

    delta = max(1e-3, 1e-2 * abs(energy))
    taus = {}
    for offset in (-delta, -delta / 2, delta / 2, delta):
        taus[offset] = ev.s0(energy + offset) / (2.0 * math.pi)
    d_full = (taus[delta] - taus[-delta]) / (2.0 * delta)
    d_half = (taus[delta / 2] - taus[-delta / 2]) / delta
    dtau_fd = (4.0 * d_half - d_full) / 3.0
    f0_prime = 1.0 / dtau_fd

    f1 = 0.5 * f0_prime
    implied = -2.0 * math.pi * f1 / f0_prime
    return ActionAngleReport(energy, tau, dtau_de, f0_prime,
                             abs(f0_prime * dtau_de - 1.0), implied)
