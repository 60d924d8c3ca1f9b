"""Muckenhoupt constants, reverse Holder and absorption checks, BMO norms,
level-set decay profiles and exponential-class oscillation norms.

All cube suprema run over the base dyadic lattice plus the 3^n shifted
lattices down to cell scale, clipped at the domain boundary.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import young
from .dyadic import (Cube, GeometryError, Grid, GridFunction, cube_slices,
                     cube_values, scope_cubes)
from .operators import maximal


class WeightError(ValueError):
    pass


def as_weight(w: GridFunction) -> GridFunction:
    if np.any(w.cells <= 0):
        raise WeightError("weights must be strictly positive on every cell")
    return w


def _iter_scope(grid: Grid, shifted: bool):
    for q in scope_cubes(grid, shifted=shifted):
        yield q, cube_slices(q, grid)


_wc_cache: dict = {}


def weight_constant(w: GridFunction, kind: str, p: float = None,
                    C: young.YoungFunction = None,
                    shifted: bool = True) -> float:
    """[w] constants: kind in {"Ap", "A1", "AinfFW", "ApBump"}.

    Ap needs p > 1; ApBump needs p > 1 and a Young function C for the
    Orlicz bump norm of w^(-1/p).  Results are memoized on the cell data.
    """
    key = (w.cells.tobytes(), w.grid, kind, p,
           young.format_young(C) if C is not None else None, shifted)
    if key in _wc_cache:
        return _wc_cache[key]
    val = _weight_constant(w, kind, p, C, shifted)
    if len(_wc_cache) > 256:
        _wc_cache.clear()
    _wc_cache[key] = val
    return val


def _weight_constant(w, kind, p, C, shifted):
    as_weight(w)
    grid = w.grid
    if kind == "Ap":
        if p is None or p <= 1:
            raise WeightError("Ap needs p > 1")
        dual = w.cells ** (-1.0 / (p - 1.0))
        best = 0.0
        for q, sl in _iter_scope(grid, shifted):
            a = float(w.cells[sl].mean())
            d = float(dual[sl].mean())
            best = max(best, a * d ** (p - 1.0))
        return best
    if kind == "A1":
        mw = maximal(w, "M", shifted=shifted)
        return float((mw.cells / w.cells).max())
    if kind == "AinfFW":
        best = 0.0
        for q, sl in _iter_scope(grid, shifted):
            chi = np.zeros(grid.shape)
            chi[sl] = w.cells[sl]
            m = maximal(GridFunction(grid, chi), "M", shifted=shifted)
            num = float(m.cells[sl].sum())
            den = float(w.cells[sl].sum())
            best = max(best, num / den)
        return best
    if kind == "ApBump":
        if p is None or p <= 1 or C is None:
            raise WeightError("ApBump needs p > 1 and a bump Young function")
        bump = w.cells ** (-1.0 / p)
        best = 0.0
        for q, sl in _iter_scope(grid, shifted):
            a = float(w.cells[sl].mean())
            mu = np.full(w.cells[sl].size, grid.cell_volume)
            nrm = young.luxemburg_norm(bump[sl].ravel(), mu, C)
            best = max(best, a * nrm ** p)
        return best
    raise WeightError(f"unknown weight constant kind {kind!r}")


def sigma_dual(w: GridFunction, p: float, r: float = 1.0) -> GridFunction:
    """The dual weight w^(-1/(p/r - 1))."""
    q = p / r
    if q <= 1:
        raise WeightError("need p/r > 1")
    return GridFunction(w.grid, w.cells ** (-1.0 / (q - 1.0)))


def absorption_check(w: GridFunction, Q: Cube, E: np.ndarray,
                     c_n: float, shifted: bool = True,
                     ainf: float = None) -> tuple:
    """w(E)/w(Q) <= 2 (|E|/|Q|)^(1/(c_n [w]_Ainf)): returns (lhs, rhs, pass)."""
    as_weight(w)
    grid = w.grid
    sl = cube_slices(Q, grid)
    qmask = np.zeros(grid.shape, dtype=bool)
    qmask[sl] = True
    if np.any(E & ~qmask):
        raise WeightError("E must lie inside Q")
    wq = float(w.cells[qmask].sum())
    we = float(w.cells[E].sum())
    lhs = we / wq
    frac = float(E.sum()) / float(qmask.sum())
    if ainf is None:
        ainf = weight_constant(w, "AinfFW", shifted=shifted)
    rhs = 2.0 * frac ** (1.0 / (c_n * ainf))
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-12))


def reverse_holder_check(w: GridFunction, Q: Cube, tau_n: float,
                         shifted: bool = True, ainf: float = None) -> tuple:
    """(avg w^r)^(1/r) <= 2 avg w at r = 1 + 1/(tau_n [w]_Ainf):
    returns (r_w, lhs, rhs, pass)."""
    as_weight(w)
    vals = cube_values(w, Q).ravel()
    if ainf is None:
        ainf = weight_constant(w, "AinfFW", shifted=shifted)
    r = 1.0 + 1.0 / (tau_n * ainf)
    lhs = float((vals ** r).mean()) ** (1.0 / r)
    rhs = 2.0 * float(vals.mean())
    return r, lhs, rhs, bool(lhs <= rhs * (1 + 1e-12))


def bmo_norm(b: GridFunction, shifted: bool = True) -> float:
    """sup over scope cubes of the mean oscillation (1/|Q|) int_Q |b - b_Q|."""
    best = 0.0
    for q, sl in _iter_scope(b.grid, shifted):
        vals = b.cells[sl]
        best = max(best, float(np.abs(vals - vals.mean()).mean()))
    return best


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    residual: float
    n_points: int


def jn_profile(b: GridFunction, Q: Cube, n_alpha: int = 32) -> DecayFit:
    """Least-squares fit of log(|{|b - b_Q| > alpha}| / |Q|) against alpha.

    Raises on constant b (no level sets to fit)."""
    vals = np.abs(cube_values(b, Q) - cube_values(b, Q).mean()).ravel()
    top = float(vals.max())
    if top <= 0:
        raise WeightError("oscillation vanishes, nothing to fit")
    alphas = np.linspace(0.0, top, n_alpha + 1)[:-1]
    meas = np.array([(vals > a).mean() for a in alphas])
    keep = meas > 0
    alphas, meas = alphas[keep], meas[keep]
    if len(alphas) < 2:
        raise WeightError("level sets collapse immediately, nothing to fit")
    y = np.log(meas)
    slope, intercept = np.polyfit(alphas, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * alphas + intercept)) ** 2)))
    return DecayFit(float(slope), float(intercept), resid, len(alphas))


def osc_exp_norm(b: GridFunction, Q: Cube, w: GridFunction, j: int) -> float:
    """Weighted Luxemburg norm of |b - b_Q|^j in the exponential class
    exp(t^(1/j)) - 1 over Q."""
    if j < 1:
        raise WeightError("j must be >= 1")
    as_weight(w)
    osc = np.abs(cube_values(b, Q) - cube_values(b, Q).mean()).ravel()
    mu = cube_values(w, Q).ravel() * b.grid.cell_volume
    return young.luxemburg_norm(osc ** j, mu, young.expl(1.0 / j))


# -- scenario literals ---------------------------------------------------------

_NUM = r"[-+0-9.eE]+"


def parse_profile(text: str, grid: Grid) -> GridFunction:
    """Function literals for scenario files.

    `const(c)`, `power_abs(a)` (|x|^a), `indicator(a,b)+c`, `log_abs`,
    `table(path)` (csv of cell values).  In 2D, |x| is the euclidean norm
    and indicators read box corners `indicator(a1,a2,b1,b2)+c`.
    """
    text = text.strip()
    n = grid.n
    if n == 1:
        x = grid.cell_centers(0)
        rad = np.abs(x)
    else:
        x1 = grid.cell_centers(0)[:, None]
        x2 = grid.cell_centers(1)[None, :]
        rad = np.hypot(np.broadcast_to(x1, grid.shape),
                       np.broadcast_to(x2, grid.shape))
    m = re.match(rf"const\(({_NUM})\)$", text)
    if m:
        return GridFunction(grid, np.full(grid.shape, float(m.group(1))))
    m = re.match(rf"power_abs\(({_NUM})\)$", text)
    if m:
        return GridFunction(grid, rad ** float(m.group(1)))
    if text == "log_abs":
        return GridFunction(grid, np.log(rad))
    m = re.match(rf"indicator\(({_NUM}(?:,{_NUM})*)\)(?:\+({_NUM}))?$", text)
    if m:
        nums = [float(s) for s in m.group(1).split(",")]
        shift = float(m.group(2)) if m.group(2) else 0.0
        if len(nums) != 2 * n:
            raise WeightError(f"indicator needs {2*n} corners in {n}D")
        if n == 1:
            ind = ((x >= nums[0]) & (x < nums[1])).astype(float)
        else:
            ind = (((x1 >= nums[0]) & (x1 < nums[2]))
                   & ((x2 >= nums[1]) & (x2 < nums[3]))).astype(float)
            ind = np.broadcast_to(ind, grid.shape).astype(float)
        return GridFunction(grid, ind + shift)
    m = re.match(r"table\((.+)\)$", text)
    if m:
        cells = np.loadtxt(m.group(1).strip(), delimiter=",")
        return GridFunction(grid, cells.reshape(grid.shape))
    raise WeightError(f"cannot parse function literal {text!r}")
