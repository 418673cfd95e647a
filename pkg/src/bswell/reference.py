"""Independent grid eigensolver: Dirichlet finite differences + Sturm bisection.

(h D)^2 + V on a uniform grid over [a, b] with zero boundary values is the
symmetric tridiagonal matrix

    diag_i = 2 h^2/dx^2 + V(x_i),   off = -h^2/dx^2,   x_i = a + i dx,
    dx = (b - a)/(N + 1),           i = 1..N.

Eigenvalues come from bisection on the Sturm count: the number of negative
values in the recurrence q_1 = d_1 - x, q_i = d_i - x - e^2/q_{i-1} equals
the number of eigenvalues below x.  No eigenvectors, no LAPACK; the count
is evaluated for whole batches of probe shifts at once, so each bisection
sweep subdivides every active bracket by a factor of the batch width.

This solver shares nothing with the quantization path; it is the oracle
the Bohr-Sommerfeld side is compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, SolverError
from .geometry import find_turning_points
from .potential import Potential
from .solver import BsLevel, enumerate_levels

__all__ = ["GridHamiltonian", "SpectrumReport", "build_grid_hamiltonian",
           "sturm_count", "lowest_eigenvalues", "eigenvalues_in_window",
           "suggest_domain", "compare_spectra", "fit_order"]

N_MIN, N_MAX = 16, 10_000_000
_PROBES = 31                  # per active bracket per sweep


@dataclass(frozen=True)
class GridHamiltonian:
    """Symmetric tridiagonal Dirichlet discretization of (hD)^2 + V."""

    a: float
    b: float
    n: int
    h: float
    dx: float
    diag: np.ndarray
    off: float                # constant off-diagonal, - h^2/dx^2

    def gershgorin(self) -> tuple[float, float]:
        r = 2.0 * abs(self.off)
        return float(np.min(self.diag) - r), float(np.max(self.diag) + r)

    @property
    def grid(self) -> np.ndarray:
        return self.a + self.dx * np.arange(1, self.n + 1)


def build_grid_hamiltonian(p: Potential, h: float, domain: tuple[float, float],
                           n: int) -> GridHamiltonian:
    if not N_MIN <= n <= N_MAX:
        raise SolverError(f"grid size {n} outside [{N_MIN}, {N_MAX}]")
    if h <= 0.0:
        raise SolverError(f"h must be positive, got {h}")
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise SolverError(f"empty domain [{a}, {b}]")
    dx = (b - a) / (n + 1)
    x = a + dx * np.arange(1, n + 1)
    v = np.asarray(p.value(x), dtype=float)
    if not np.all(np.isfinite(v)):
        raise SolverError("potential evaluates non-finite on the grid")
    diag = 2.0 * h * h / dx**2 + v
    return GridHamiltonian(a, b, n, h, dx, diag, -h * h / dx**2)


def sturm_count(ham: GridHamiltonian, shifts) -> np.ndarray | int:
    """Number of eigenvalues strictly below each shift.

    Vectorized over a batch of shifts; the loop runs over the matrix
    dimension only.
    """
    scalar = np.isscalar(shifts)
    x = np.atleast_1d(np.asarray(shifts, dtype=float))
    e2 = ham.off * ham.off
    pivmin = max(e2, 1.0) * 1e-290
    d = ham.diag
    q = d[0] - x
    q[np.abs(q) <= pivmin] = -pivmin
    count = (q < 0.0).astype(np.int64)
    for i in range(1, ham.n):
        q = d[i] - x - e2 / q
        np.copyto(q, -pivmin, where=np.abs(q) <= pivmin)
        count += q < 0.0
    if scalar:
        return int(count[0])
    return count


def _bisect_indices(ham: GridHamiltonian, indices: np.ndarray,
                    lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Bisect eigenvalue_k for each index k, batching all probe shifts."""
    k = len(indices)
    lo = lo.copy()
    hi = hi.copy()
    active = np.ones(k, dtype=bool)
    fractions = np.arange(1, _PROBES + 1) / (_PROBES + 1.0)
    for _ in range(200):
        tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        active &= (hi - lo) > tol
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        probes = lo[idx, None] + (hi - lo)[idx, None] * fractions[None, :]
        counts = sturm_count(ham, probes.ravel()).reshape(len(idx), _PROBES)
        # the eigenvalue lies where the count first exceeds its index
        above = counts > indices[idx, None]          # count >= k+1: above ev_k
        first = np.argmax(above, axis=1)             # 0 if none True
        any_above = above.any(axis=1)
        new_lo = np.where(any_above & (first > 0),
                          probes[np.arange(len(idx)), first - 1],
                          np.where(any_above, lo[idx], probes[:, -1]))
        new_hi = np.where(any_above,
                          probes[np.arange(len(idx)), first],
                          hi[idx])
        lo[idx] = new_lo
        hi[idx] = new_hi
    else:
        raise SolverError("Sturm bisection failed to converge")
    return 0.5 * (lo + hi)


def lowest_eigenvalues(ham: GridHamiltonian, k: int) -> np.ndarray:
    """The k lowest eigenvalues, ascending, by Sturm-count bisection."""
    if not 1 <= k <= ham.n:
        raise SolverError(f"requested {k} eigenvalues of an {ham.n}-point grid")
    glo, ghi = ham.gershgorin()
    indices = np.arange(k)
    values = _bisect_indices(ham, indices,
                             np.full(k, glo), np.full(k, ghi))
    return np.sort(values)


def eigenvalues_in_window(ham: GridHamiltonian,
                          window: tuple[float, float]) -> np.ndarray:
    """All eigenvalues inside the energy window, ascending."""
    lo, hi = float(window[0]), float(window[1])
    i_lo = int(sturm_count(ham, lo))
    i_hi = int(sturm_count(ham, hi))
    if i_hi <= i_lo:
        return np.empty(0)
    indices = np.arange(i_lo, i_hi)
    values = _bisect_indices(ham, indices,
                             np.full(len(indices), lo),
                             np.full(len(indices), hi))
    return np.sort(values)


def suggest_domain(p: Potential, e_max: float, h: float,
                   search: tuple[float, float] | None = None,
                   margin: float = 10.0) -> tuple[float, float]:
    """Dirichlet box: expand beyond the well until V >= e_max + margin*h."""
    g = find_turning_points(p, e_max, search or p.well_hint)
    threshold = e_max + margin * h
    a, b = g.x_left, g.x_right
    width = max(g.width, 1e-2)
    for _ in range(200):
        if float(p.value(a)) >= threshold:
            break
        a -= 0.25 * width
    else:
        raise GeometryError("left boundary never clears the energy window")
    for _ in range(200):
        if float(p.value(b)) >= threshold:
            break
        b += 0.25 * width
    else:
        raise GeometryError("right boundary never clears the energy window")
    return a, b


@dataclass(frozen=True)
class SpectrumReport:
    """Side-by-side quantization-rule vs grid-reference eigenvalues."""

    potential: str
    h: float
    order: int
    window: tuple[float, float]
    domain: tuple[float, float]
    n_grid: int
    richardson: bool
    levels: tuple[BsLevel, ...]
    reference: tuple[float, ...]
    pairs: tuple[tuple[int, float, float, float], ...]  # (n, E_bs, E_ref, |err|)
    max_abs_error: float
    mean_abs_error: float
    count_mismatch: int


def compare_spectra(p: Potential, h: float, window: tuple[float, float],
                    order: int = 2, n: int = 8000,
                    domain: tuple[float, float] | None = None,
                    richardson: bool = True) -> SpectrumReport:
    """Solve both sides on the window and pair the spectra in order.

    Reference eigenvalues are Richardson-extrapolated from grids with N and
    2N points by default.  A count mismatch of one is reported as data; a
    larger mismatch raises.
    """
    levels = enumerate_levels(p, window, h, order)
    box = domain or suggest_domain(p, window[1], h)
    ham = build_grid_hamiltonian(p, h, box, n)
    ref = eigenvalues_in_window(ham, window)
    if richardson:
        ham2 = build_grid_hamiltonian(p, h, box, 2 * n)
        ref2 = eigenvalues_in_window(ham2, window)
        m = min(len(ref), len(ref2))
        ref = ref2[:m] + (ref2[:m] - ref[:m]) / 3.0

    mismatch = len(levels) - len(ref)
    if abs(mismatch) > 1:
        raise SolverError(
            f"level counts differ by {mismatch} (rule {len(levels)}, "
            f"grid {len(ref)})"
        )
    pairs = []
    m = min(len(levels), len(ref))
    # one-to-one in ascending order; with a one-off mismatch, align the end
    # that minimizes the total error
    offsets = [0] if mismatch == 0 else [0, 1]
    best = None
    for off in offsets:
        if mismatch >= 0:
            cand = [(levels[i + off].n, levels[i + off].energy, float(ref[i]))
                    for i in range(m)] if off + m <= len(levels) else None
        else:
            cand = [(levels[i].n, levels[i].energy, float(ref[i + off]))
                    for i in range(m)] if off + m <= len(ref) else None
        if cand is None:
            continue
        total = sum(abs(e_bs - e_ref) for _, e_bs, e_ref in cand)
        if best is None or total < best[0]:
            best = (total, cand)
    chosen = best[1] if best else []
    pairs = tuple((n_, e_bs, e_ref, abs(e_bs - e_ref))
                  for n_, e_bs, e_ref in chosen)
    errors = [err for *_, err in pairs]
    return SpectrumReport(
        p.source, h, order, (float(window[0]), float(window[1])),
        (float(box[0]), float(box[1])), n, richardson,
        tuple(levels), tuple(float(r) for r in ref), pairs,
        max(errors) if errors else math.nan,
        sum(errors) / len(errors) if errors else math.nan,
        mismatch,
    )


def fit_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0.0):
        raise SolverError("non-positive errors cannot be order-fitted")
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
