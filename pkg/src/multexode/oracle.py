"""Independent ground truth for the solver.

Two oracles solve the companion first-order system M' = m M, M(0) = I: the
iterated-integral (Dyson) series with its explicit factorial tail bound, and
a classical fixed-step fourth-order marcher.  They share nothing with the
trig-operator machinery except the anchored quadrature (series) and the local
interpolator (marcher), so an error in either path shows up as disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotConverged
from .gridfn import Grid, GridFn, _lagrange4, primitive_values
from .lower import LowerContext, lower

DEFAULT_TOL = 1e-12
DEFAULT_MAX_TERMS = 400


class MatrixFn:
    """Square matrix of sampled functions on one grid, stored (n, n, nodes)."""

    __slots__ = ("grid", "data", "n")

    def __init__(self, grid: Grid, data):
        arr = np.asarray(data, dtype=complex)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != grid.n + 1:
            raise ValueError(f"expected (n, n, {grid.n + 1}) samples, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix samples must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        self.grid = grid
        self.data = arr
        self.n = arr.shape[0]

    @classmethod
    def from_gridfns(cls, rows) -> "MatrixFn":
        grid = rows[0][0].grid
        data = np.stack([np.stack([f.values for f in row]) for row in rows])
        return cls(grid, data)

    def entry(self, i: int, k: int) -> GridFn:
        return GridFn(self.grid, self.data[i, k])


def companion(a, grid: Grid, env=None, series_tol: float = 1e-12) -> MatrixFn:
    """Companion matrix of the scalar equation: ones on the superdiagonal and
    the reversed coefficients (an, ..., a1) along the bottom row."""
    n = a.n
    ctx = LowerContext(grid, env=env, series_tol=series_tol)
    data = np.zeros((n, n, grid.n + 1), dtype=complex)
    for i in range(n - 1):
        data[i, i + 1] = 1.0
    for j in range(1, n + 1):
        data[n - 1, n - j] = lower(a.a(j), ctx).values
    return MatrixFn(grid, data)


@dataclass
class DysonResult:
    """Fundamental matrix from the iterated-integral series.

    M has shape (n, n, nodes) with M(0) = I exactly.  term_norms[j] is the
    entrywise sup of term j+1; term_bounds the matching factorial bound; the
    tail bound dominates everything not summed.
    """

    grid: Grid
    M: np.ndarray
    terms_used: int
    tail_bound: float
    converged: bool
    g_integral: float
    term_norms: list = field(default_factory=list)
    term_bounds: list = field(default_factory=list)

    def first_row_solution(self, initial_values) -> GridFn:
        vals = np.zeros(self.grid.n + 1, dtype=complex)
        for k, c in enumerate(initial_values):
            vals += complex(c) * self.M[0, k]
        return GridFn(self.grid, vals, label="oracle")

    def entry(self, i: int, k: int) -> GridFn:
        return GridFn(self.grid, self.M[i, k])


def truncation_bound(g_integral: float, n: int, terms: int) -> float:
    """Tail of the factorial domination: sum over j > terms of
    (1/n) (n g)^j / j!, summed stably with a relative cutoff."""
    if g_integral < 0:
        raise ValueError("the integral bound must be nonnegative")
    if g_integral == 0.0:
        return 0.0
    ng = n * g_integral
    term = 1.0 / n
    for j in range(1, terms + 1):
        term *= ng / j
    total = 0.0
    j = terms
    while True:
        j += 1
        term *= ng / j
        total += term
        if term < 1e-18 * max(total, 1e-300) or j > terms + 100_000:
            return total


def dyson(m: MatrixFn, tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS) -> DysonResult:
    """Sum the iterated-integral series for M' = m M, M(0) = I.

    Each term integrates m times the previous term from 0, entrywise, on both
    sides of 0 with the anchored signed primitive.  Stops when the entrywise
    sup of the newest term reaches tol; raises NotConverged when the budget
    runs out far above it.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = m.n
    grid = m.grid
    eye = np.zeros((n, n, grid.n + 1), dtype=complex)
    for i in range(n):
        eye[i, i] = 1.0
    g = np.max(np.abs(m.data), axis=(0, 1))
    g_int = float(np.max(np.abs(primitive_values(g, grid))))

    total = eye.copy()
    term = eye
    norms = []
    bounds = []
    running_bound = 1.0 / n  # (1/n)(n g)^j / j!, updated multiplicatively
    terms = 0
    converged = False
    last = 0.0
    while terms < max_terms:
        terms += 1
        term = primitive_values(np.einsum("ilp,lkp->ikp", m.data, term), grid)
        total += term
        last = float(np.max(np.abs(term)))
        running_bound *= (n * g_int) / terms
        norms.append(last)
        bounds.append(running_bound)
        if last <= tol:
            converged = True
            break
    tail = truncation_bound(g_int, n, terms)
    result = DysonResult(grid, total, terms, tail, converged, g_int, norms, bounds)
    if not converged and last > 1e3 * tol:
        raise NotConverged(
            f"series still at {last:.3e} after {terms} terms (tol {tol:.1e})",
            result,
        )
    return result


def rk4(m: MatrixFn, steps: int) -> np.ndarray:
    """Classical fixed-step fourth-order integration of M' = m M, M(0) = I.

    Marches outward from 0 in both directions with at least one substep per
    grid cell, sampling m between nodes by local cubic interpolation, and
    returns the fundamental matrix at every grid node, shape (n, n, nodes).
    """
    grid = m.grid
    n = m.n
    if steps < grid.n:
        raise ValueError("need at least one step per grid cell")
    sub = max(1, int(round(steps / grid.n)))
    out = np.zeros((n, n, grid.n + 1), dtype=complex)
    z = grid.zero_index
    out[:, :, z] = np.eye(n)

    def march(indices):
        """Advance substep by substep from the anchor through the node order."""
        if not indices:
            return
        bounds = np.concatenate(([grid.nodes[z]], grid.nodes[indices]))
        ts = np.concatenate([bounds[k] + (bounds[k + 1] - bounds[k]) / sub * np.arange(sub) for k in range(len(indices))] + [bounds[-1:]])
        mids = (ts[:-1] + ts[1:]) / 2.0
        a_nodes = _interp_matrix(m, ts)       # (steps+1, n, n)
        a_mids = _interp_matrix(m, mids)      # (steps, n, n)
        deltas = ts[1:] - ts[:-1]
        cur = np.eye(n, dtype=complex)
        for q in range(len(mids)):
            delta = deltas[q]
            a0 = a_nodes[q]
            am = a_mids[q]
            a1 = a_nodes[q + 1]
            k1 = a0 @ cur
            k2 = am @ (cur + 0.5 * delta * k1)
            k3 = am @ (cur + 0.5 * delta * k2)
            k4 = a1 @ (cur + delta * k3)
            cur = cur + (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (q + 1) % sub == 0:
                out[:, :, indices[(q + 1) // sub - 1]] = cur

    march(list(range(z + 1, grid.n + 1)))
    march(list(range(z - 1, -1, -1)))
    return out


def _interp_matrix(m: MatrixFn, xs: np.ndarray) -> np.ndarray:
    """Sample every matrix entry at the points xs; returns (len(xs), n, n)."""
    out = np.empty((len(xs), m.n, m.n), dtype=complex)
    for i in range(m.n):
        for k in range(m.n):
            out[:, i, k] = _lagrange4(m.grid.nodes, m.data[i, k], xs)
    return out
