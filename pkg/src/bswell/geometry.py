"""Classical well geometry at a given energy.

Locates the two simple turning points x_left < x_right of {V <= E} inside a
search window, refuses multi-well or degenerate configurations, and exposes
the local curve-frame quantities used by the turning-point arc integrals:

    xi    = sqrt(E - V(x))            momentum on the upper branch
    alpha = V'(x)
    psi2  = 2 xi / alpha              (d^2/dxi^2 of the Fourier phase)
    alpha_prime = -psi2 V''(x)        (d alpha / d xi along the curve)
    theta0 = alpha_prime / (2 alpha)

The frame fields that divide by alpha are reported as unavailable (None) at
an interior critical point of V; global loop integrals never need them there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .potential import Potential
from .rootfind import newton_from_guess, refine_root

__all__ = ["WellGeometry", "CurveFrame", "find_turning_points", "curve_frame",
           "well_minimum", "max_momentum"]

DEGENERATE_SLOPE = 1e-8          # |V'| below this at a turning point: refuse
ROOT_REL_TOL = 1e-13


@dataclass(frozen=True)
class WellGeometry:
    """One connected component of {V <= E} with simple turning points."""

    energy: float
    x_left: float
    x_right: float
    window: tuple[float, float]
    residual_left: float
    residual_right: float

    @property
    def width(self) -> float:
        return self.x_right - self.x_left

    def contains(self, x: float) -> bool:
        return self.x_left < x < self.x_right


@dataclass(frozen=True)
class CurveFrame:
    """Local frame on the upper branch; alpha-dependent fields may be None."""

    x: float
    xi: float
    alpha: float
    psi2: float | None
    alpha_prime: float | None
    theta0: float | None


def find_turning_points(p: Potential, energy: float,
                        window: tuple[float, float] | None = None,
                        n_scan: int = 1024) -> WellGeometry:
    """Bracket and refine the turning points of the single well at ``energy``."""
    if window is None:
        window = p.well_hint
    if window is None:
        raise GeometryError("no search window given and potential has no hint")
    a, b = float(window[0]), float(window[1])
    if not a < b:
        raise GeometryError(f"empty window [{a}, {b}]")

    xs = np.linspace(a, b, n_scan)
    below = np.asarray(p.value(xs)) <= energy
    if below[0] or below[-1]:
        raise GeometryError(
            f"{{V <= E}} touches the window boundary at E={energy}; "
            "enlarge the window"
        )
    enter = np.flatnonzero(~below[:-1] & below[1:])
    leave = np.flatnonzero(below[:-1] & ~below[1:])
    if len(enter) == 0:
        raise GeometryError(f"no sign change of V - E in the window at E={energy}")
    if len(enter) > 1 or len(leave) > 1:
        raise GeometryError(
            f"{len(enter)} wells detected at E={energy}; expected exactly one"
        )

    f = lambda x: float(p.value(x)) - energy
    fp = lambda x: float(p.deriv(1, x))
    x_left, _ = refine_root(f, fp, float(xs[enter[0]]), float(xs[enter[0] + 1]),
                            rel_tol=ROOT_REL_TOL)
    x_right, _ = refine_root(f, fp, float(xs[leave[0]]), float(xs[leave[0] + 1]),
                             rel_tol=ROOT_REL_TOL)
    # polish to machine precision: the singular quadratures amplify any
    # endpoint mislocation far beyond its own size
    x_left = _polish(f, fp, x_left)
    x_right = _polish(f, fp, x_right)
    return _validated(p, energy, x_left, x_right, (a, b))


def _polish(f, fp, x: float, steps: int = 3) -> float:
    for _ in range(steps):
        d = fp(x)
        if d == 0.0 or not np.isfinite(d):
            break
        x_new = x - f(x) / d
        if not np.isfinite(x_new) or x_new == x:
            break
        x = x_new
    return x


def _validated(p: Potential, energy: float, x_left: float, x_right: float,
               window: tuple[float, float]) -> WellGeometry:
    sl = float(p.deriv(1, x_left))
    sr = float(p.deriv(1, x_right))
    if abs(sl) < DEGENERATE_SLOPE or abs(sr) < DEGENERATE_SLOPE:
        raise GeometryError(
            f"degenerate turning point at E={energy}: |V'| < {DEGENERATE_SLOPE}"
        )
    if not (sl < 0.0 and sr > 0.0):
        raise GeometryError(
            f"turning points at E={energy} are not simple well walls "
            f"(V'={sl:.3e}, {sr:.3e})"
        )
    rl = abs(float(p.value(x_left)) - energy)
    rr = abs(float(p.value(x_right)) - energy)
    tol = 1e-12 * max(1.0, abs(energy))
    if rl > tol or rr > tol:
        raise GeometryError(
            f"turning point refinement residual too large at E={energy}"
        )
    return WellGeometry(energy, x_left, x_right, window, rl, rr)


def refine_geometry(p: Potential, energy: float,
                    reference: WellGeometry) -> WellGeometry:
    """Warm-start turning points for a nearby energy from a known geometry.

    Falls back to the full scan when the Newton polish fails or the result
    is inconsistent.
    """
    f = lambda x: float(p.value(x)) - energy
    fp = lambda x: float(p.deriv(1, x))
    xl = newton_from_guess(f, fp, reference.x_left)
    xr = newton_from_guess(f, fp, reference.x_right)
    if xl is not None:
        xl = _polish(f, fp, xl)
    if xr is not None:
        xr = _polish(f, fp, xr)
    if xl is not None and xr is not None and xl < xr:
        try:
            return _validated(p, energy, xl, xr, reference.window)
        except GeometryError:
            pass
    return find_turning_points(p, energy, reference.window)


def curve_frame(p: Potential, g: WellGeometry, x: float) -> CurveFrame:
    """Curve-frame fields at an interior point of the well."""
    if not g.contains(x):
        raise GeometryError(
            f"x={x} is outside the well ({g.x_left}, {g.x_right})"
        )
    v = float(p.value(x))
    xi_sq = g.energy - v
    if xi_sq <= 0.0:
        raise GeometryError(f"E - V(x) = {xi_sq} is not positive at x={x}")
    xi = float(np.sqrt(xi_sq))
    alpha = float(p.deriv(1, x))
    if alpha == 0.0:
        return CurveFrame(x, xi, alpha, None, None, None)
    psi2 = 2.0 * xi / alpha
    alpha_prime = -psi2 * float(p.deriv(2, x))
    theta0 = alpha_prime / (2.0 * alpha)
    return CurveFrame(x, xi, alpha, psi2, alpha_prime, theta0)


def well_minimum(p: Potential, g: WellGeometry,
                 n_scan: int = 513) -> tuple[float, float]:
    """(x_min, V(x_min)) of the well interior, refined on V' when simple."""
    xs = np.linspace(g.x_left, g.x_right, n_scan)[1:-1]
    vals = np.asarray(p.value(xs))
    i = int(np.argmin(vals))
    x0 = float(xs[i])
    lo = float(xs[max(i - 1, 0)])
    hi = float(xs[min(i + 1, len(xs) - 1)])
    dlo, dhi = float(p.deriv(1, lo)), float(p.deriv(1, hi))
    if dlo < 0.0 < dhi:
        x0, _ = refine_root(lambda x: float(p.deriv(1, x)),
                            lambda x: float(p.deriv(2, x)), lo, hi)
    return x0, float(p.value(x0))


def max_momentum(p: Potential, g: WellGeometry) -> float:
    """max over the well of sqrt(E - V), reached at the potential minimum."""
    _, vmin = well_minimum(p, g)
    return float(np.sqrt(max(g.energy - vmin, 0.0)))
