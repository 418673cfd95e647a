"""Bracketed scalar root refinement: safeguarded Newton with bisection fallback."""

from __future__ import annotations

import math

from .errors import SolverError


def refine_root(f, fprime, lo: float, hi: float, *,
                rel_tol: float = 1e-13, f_tol: float | None = None,
                max_iter: int = 120) -> tuple[float, int]:
    """Find the root of f inside [lo, hi]; f(lo) and f(hi) must differ in sign.

    Newton steps from the current estimate are accepted only while they stay
    inside the live bracket; otherwise the step falls back to bisection, so
    convergence is guaranteed.  Returns (root, iterations).
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise SolverError(f"no sign change on [{lo}, {hi}]")

    x = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        fx = f(x)
        if fx == 0.0 or (f_tol is not None and abs(fx) <= f_tol):
            return x, it
        if math.copysign(1.0, fx) == math.copysign(1.0, flo):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if hi - lo <= rel_tol * max(1.0, abs(x)) and f_tol is None:
            return 0.5 * (lo + hi), it
        step_ok = False
        d = fprime(x) if fprime is not None else None
        if d is not None and d != 0.0 and math.isfinite(d):
            x_new = x - fx / d
            if lo < x_new < hi:
                x, step_ok = x_new, True
        if not step_ok:
            x = 0.5 * (lo + hi)
    raise SolverError(
        f"root refinement did not converge in {max_iter} iterations"
    )


def newton_from_guess(f, fprime, x0: float, *,
                      rel_tol: float = 1e-13, max_iter: int = 30) -> float | None:
    """Unbracketed Newton polish; returns None instead of diverging."""
    x = x0
    for _ in range(max_iter):
        fx = f(x)
        d = fprime(x)
        if d == 0.0 or not math.isfinite(d) or not math.isfinite(fx):
            return None
        x_new = x - fx / d
        if not math.isfinite(x_new):
            return None
        if abs(x_new - x) <= rel_tol * max(1.0, abs(x_new)):
            return x_new
        if abs(x_new - x0) > 1.0 + 2.0 * abs(x0):
            return None
        x = x_new
    return None
