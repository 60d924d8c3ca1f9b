"""Grids, dyadic cubes, shifted lattices, Calderon-Zygmund decomposition and
sparse families with explicit cell-level certificates.

Geometry is exact: every cube is an axis-parallel box in integer cell
coordinates on a 2^L-per-side grid.  A cube of the base lattice at level k
has side 2^(L-k) cells; a cube of a shifted lattice has side 3*2^(L-k) cells
with origin congruent to d*2^(L-k) modulo 3*2^(L-k) per axis, for a digit
vector d in {0,1,2}^n.  Tripled cubes 3Q of base cubes land exactly in one
shifted lattice, which is the point of carrying them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

BASE = -1  # lattice id of the plain dyadic lattice


class GeometryError(ValueError):
    pass


class BoundaryError(GeometryError):
    """A dilated cube exits the root domain."""


@dataclass(frozen=True)
class Grid:
    """Uniform dyadic grid over a root cube in dimension n in {1, 2}."""

    n: int
    origin: tuple  # real coordinates of the root corner
    side: float    # real side length of the root
    level: int     # cells per side = 2**level

    def __post_init__(self):
        if self.n not in (1, 2):
            raise GeometryError("dimension must be 1 or 2")
        if self.level < 1:
            raise GeometryError("level must be >= 1")
        if self.side <= 0:
            raise GeometryError("root side must be positive")
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))

    @property
    def cells_per_side(self) -> int:
        return 1 << self.level

    @property
    def cell_width(self) -> float:
        return self.side / self.cells_per_side

    @property
    def cell_volume(self) -> float:
        return self.cell_width ** self.n

    @property
    def shape(self) -> tuple:
        return (self.cells_per_side,) * self.n

    def root_cube(self) -> "Cube":
        return Cube(BASE, 0, (0,) * self.n, self.cells_per_side)

    def cell_centers(self, axis: int = 0) -> np.ndarray:
        N = self.cells_per_side
        return self.origin[axis] + (np.arange(N) + 0.5) * self.cell_width


@dataclass(frozen=True)
class Cube:
    """Axis-parallel cube in integer cell coordinates.

    lattice: BASE for the plain dyadic lattice, else the shifted-lattice id
    in {0..3^n-1}.  Coordinates may exit [0, 2^L); callers clip with
    cube_slices when reading grid data.
    """

    lattice: int
    level: int
    origin: tuple
    side: int

    @property
    def n(self) -> int:
        return len(self.origin)

    def cell_count(self) -> int:
        return self.side ** self.n

    def length(self, grid: Grid) -> float:
        return self.side * grid.cell_width

    def center(self, grid: Grid) -> tuple:
        return tuple(grid.origin[i] + (self.origin[i] + self.side / 2.0)
                     * grid.cell_width for i in range(self.n))

    def sort_key(self):
        return (self.lattice, self.level, self.origin)

    def __str__(self):
        coords = ",".join(str(c) for c in self.origin)
        return f"[{self.lattice}:{self.level}:({coords})]"


def parse_cube(text: str) -> Cube:
    """Inverse of str(cube) given the grid level: `[lattice:k:(i,j)]`.

    The side is reconstructed from the lattice id and level at attach time
    by attach_side(grid).
    """
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise GeometryError(f"bad cube literal {text!r}")
    lat_s, lev_s, coord_s = text[1:-1].split(":")
    coord_s = coord_s.strip()
    if not (coord_s.startswith("(") and coord_s.endswith(")")):
        raise GeometryError(f"bad cube coordinates in {text!r}")
    origin = tuple(int(c) for c in coord_s[1:-1].split(","))
    return Cube(int(lat_s), int(lev_s), origin, 0)


def attach_side(cube: Cube, grid: Grid) -> Cube:
    s = 1 << (grid.level - cube.level)
    side = s if cube.lattice == BASE else 3 * s
    return Cube(cube.lattice, cube.level, cube.origin, side)


def cube_slices(cube: Cube, grid: Grid) -> tuple:
    """Clipping slices of the cube's cells inside the root domain."""
    N = grid.cells_per_side
    return tuple(slice(max(c, 0), min(c + cube.side, N))
                 for c in cube.origin)


def cube_values(f: "GridFunction", cube: Cube) -> np.ndarray:
    return f.cells[cube_slices(cube, f.grid)]


def cube_mask(cube: Cube, grid: Grid) -> np.ndarray:
    m = np.zeros(grid.shape, dtype=bool)
    m[cube_slices(cube, grid)] = True
    return m


def is_clipped(cube: Cube, grid: Grid) -> bool:
    N = grid.cells_per_side
    return any(c < 0 or c + cube.side > N for c in cube.origin)


def contains(outer: Cube, inner: Cube) -> bool:
    return all(o <= i and i + inner.side <= o + outer.side
               for o, i in zip(outer.origin, inner.origin))


def children(cube: Cube) -> list:
    """The 2^n dyadic children of a base-lattice cube."""
    if cube.lattice != BASE:
        raise GeometryError("children are defined on the base lattice")
    if cube.side == 1:
        return []
    h = cube.side // 2
    out = []
    for offs in product((0, 1), repeat=cube.n):
        o = tuple(c + d * h for c, d in zip(cube.origin, offs))
        out.append(Cube(BASE, cube.level + 1, o, h))
    return out


def triple(cube: Cube, grid: Grid) -> Cube:
    """3Q of a base-lattice cube, as a member of its shifted lattice."""
    if cube.lattice != BASE:
        raise GeometryError("triple is defined on the base lattice")
    s = cube.side
    origin = tuple(c - s for c in cube.origin)
    digits = tuple((o // s) % 3 for o in origin)
    lat = 0
    for d in digits:
        lat = lat * 3 + d
    return Cube(lat, cube.level, origin, 3 * s)


def dilate(cube: Cube, factor: int) -> Cube:
    """Concentric dilate 2^k Q; requires integer half-margins."""
    extra = (factor - 1) * cube.side
    if extra % 2:
        raise GeometryError("dilation not representable in cells")
    h = extra // 2
    return Cube(cube.lattice, cube.level,
                tuple(c - h for c in cube.origin), factor * cube.side)


@dataclass(frozen=True)
class GridFunction:
    """Cell-averaged samples on a grid; the universal function container."""

    grid: Grid
    cells: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.cells, dtype=float)
        if arr.shape != self.grid.shape:
            raise GeometryError(
                f"cell array shape {arr.shape} != grid shape {self.grid.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.grid, fn(self.cells))


def grid_function(grid: Grid, fn) -> GridFunction:
    """Sample fn at cell centers (midpoint rule cell averages)."""
    if grid.n == 1:
        x = grid.cell_centers(0)
        return GridFunction(grid, np.asarray(fn(x), dtype=float))
    x = grid.cell_centers(0)[:, None]
    y = grid.cell_centers(1)[None, :]
    return GridFunction(grid, np.asarray(fn(x, y), dtype=float))


# -- shifted lattices ---------------------------------------------------------


@dataclass(frozen=True)
class DyadicLattice:
    """One of the 3^n shifted lattices over a grid.

    Level-k members have side 3*2^(L-k) cells and origins congruent to
    digit*2^(L-k) modulo the side, per axis.
    """

    grid: Grid
    lattice_id: int
    digits: tuple

    def member(self, cube: Cube) -> bool:
        k = cube.level
        if k < 0 or k > self.grid.level:
            return False
        s = 1 << (self.grid.level - k)
        if cube.side != 3 * s:
            return False
        return all((o - d * s) % (3 * s) == 0
                   for o, d in zip(cube.origin, self.digits))

    def cubes_at_level(self, k: int) -> list:
        """Members meeting the root domain, clipped reads via cube_slices."""
        N = self.grid.cells_per_side
        s = 1 << (self.grid.level - k)
        side = 3 * s
        out = []
        axes = []
        for d in self.digits:
            # smallest origin o = d*s mod side with o + side > 0
            first = d * s - side if d > 0 else 0
            axes.append(range(first, N, side))
        for origin in product(*axes):
            out.append(Cube(self.lattice_id, k, origin, side))
        return out


def build_lattices(grid: Grid) -> list:
    """The 3^n shifted lattices; 3Q of any base cube is a member of exactly
    one of them."""
    out = []
    for digits in product((0, 1, 2), repeat=grid.n):
        lat = 0
        for d in digits:
            lat = lat * 3 + d
        out.append(DyadicLattice(grid, lat, digits))
    out.sort(key=lambda d: d.lattice_id)
    return out


def enclosing_cube(Q: Cube, lattices: list) -> Cube:
    """The shifted-lattice cube R with 3Q subset of R and |R| <= 9^n |Q|.

    Tie-break is deterministic: the tripled cube itself, which lives in
    exactly one lattice.
    """
    grid = lattices[0].grid
    R = triple(Q, grid)
    if is_clipped(R, grid):
        raise BoundaryError(f"3Q of {Q} exits the root domain")
    for lat in lattices:
        if lat.member(R):
            return R
    raise GeometryError(f"tripled cube {R} not found in any lattice")


def base_cubes(grid: Grid, min_level: int = 0) -> list:
    """All base-lattice cubes from min_level down to cell level."""
    out = []
    N = grid.cells_per_side
    for k in range(min_level, grid.level + 1):
        s = 1 << (grid.level - k)
        for origin in product(range(0, N, s), repeat=grid.n):
            out.append(Cube(BASE, k, origin, s))
    return out


def scope_cubes(grid: Grid, shifted: bool = True) -> list:
    """Supremum scope: base cubes at all levels, plus (optionally) every
    shifted-lattice cube meeting the domain, in deterministic order."""
    out = base_cubes(grid)
    if shifted:
        for lat in build_lattices(grid):
            for k in range(0, grid.level + 1):
                out.extend(lat.cubes_at_level(k))
    return out


def descendants(cube: Cube, max_level: int) -> list:
    out = []
    stack = [cube]
    while stack:
        q = stack.pop()
        out.append(q)
        if q.level < max_level:
            stack.extend(reversed(children(q)))
    return out


# -- Calderon-Zygmund decomposition ------------------------------------------


def cz_decompose(g: GridFunction, Q0: Cube, lam: float) -> list:
    """Maximal dyadic subcubes P of Q0 with average of g over P above lam.

    g must be nonnegative.  If the average over Q0 already exceeds lam, Q0
    itself is returned.  Selection stops at single cells.
    """
    if lam <= 0:
        raise GeometryError("height must be positive")
    vals = cube_values(g, Q0)
    if np.any(vals < 0):
        raise GeometryError("cz_decompose requires g >= 0")
    out = []
    stack = [Q0]
    while stack:
        q = stack.pop()
        avg = float(cube_values(g, q).mean())
        if avg > lam:
            out.append(q)
        elif avg > 0 and q.side > 1:
            stack.extend(reversed(children(q)))
    out.sort(key=Cube.sort_key)
    return out


# -- sparse families ----------------------------------------------------------


@dataclass
class SparseFamily:
    """Cubes with an eta-sparseness claim; certificate maps each cube to its
    disjoint witness cell set (a boolean grid mask)."""

    grid: Grid
    cubes: list
    eta: float
    certificate: dict | None = None


@dataclass
class SparseCheck:
    ok: bool
    reason: str
    violating_cube: Cube | None = None


def check_sparse(family: SparseFamily) -> SparseCheck:
    """Verify eta-sparseness exactly at cell resolution.

    With a certificate: containment, pairwise disjointness and the measure
    bound are checked cube by cube.  Without one, laminar (nested) families
    get the greedy witness E_Q = Q minus its family descendants; anything
    non-laminar needs a certificate.
    """
    grid = family.grid
    eta = family.eta
    cubes = list(family.cubes)
    if not cubes:
        return SparseCheck(True, "empty family")

    if family.certificate is not None:
        used = np.zeros(grid.shape, dtype=bool)
        for q in cubes:
            if q not in family.certificate:
                return SparseCheck(False, "missing certificate entry", q)
            eq = family.certificate[q]
            qmask = cube_mask(q, grid)
            if np.any(eq & ~qmask):
                return SparseCheck(False, "witness set not inside its cube", q)
            if np.any(eq & used):
                return SparseCheck(False, "witness sets overlap", q)
            used |= eq
            if eq.sum() < eta * qmask.sum():
                return SparseCheck(False, "witness set too small", q)
        return SparseCheck(True, "certificate verified")

    # laminar test: any two cubes are nested or cell-disjoint
    masks = [cube_mask(q, grid) for q in cubes]
    sizes = [int(m.sum()) for m in masks]
    for a in range(len(cubes)):
        for b in range(a + 1, len(cubes)):
            inter = masks[a] & masks[b]
            n_inter = int(inter.sum())
            if n_inter and n_inter not in (sizes[a], sizes[b]):
                return SparseCheck(False, "certificate required", cubes[b])
    # bottom-up greedy: every cube keeps measure eta|Q| of itself and
    # releases the surplus to its ancestors, which works exactly when each
    # subtree's total demand fits inside its top cube (Hall condition for
    # laminar families)
    for i in range(len(cubes)):
        demand = 0.0
        for j in range(len(cubes)):
            if sizes[j] <= sizes[i] and \
                    int((masks[i] & masks[j]).sum()) == sizes[j]:
                demand += eta * sizes[j]
        if demand > sizes[i] * (1 + 1e-12):
            return SparseCheck(False, "subtree demand exceeds cube measure",
                               cubes[i])
    return SparseCheck(True, "greedy laminar witness verified")
