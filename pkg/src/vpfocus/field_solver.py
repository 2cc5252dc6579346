"""Radial grids, charge deposition, enclosed charge, field and norm diagnostics.

The density lives on shell cells [r_j, r_{j+1}]; the enclosed charge m and the
field magnitude E = m / r^2 live on the edges. Particles are assigned to the
two nearest cells linearly in the volume coordinate s = r^3. On grids uniform
in s a uniform density deposits exactly uniformly; on grids uniform in r the
first few cells carry an O(1/j) bias that decays away from the origin.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DepositionError, DomainError, ResolutionError
from .initial_data.density import velocity_integral


@dataclass(frozen=True)
class RadialGrid:
    edges: np.ndarray
    policy: str = "custom"

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or e.size < 3:
            raise DomainError("a radial grid needs at least two cells")
        if e[0] != 0.0:
            raise DomainError("the first edge must be 0")
        if not np.all(np.diff(e) > 0):
            raise DomainError("edges must be strictly increasing")
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, r_max: float, n: int) -> "RadialGrid":
        return cls(np.linspace(0.0, r_max, n + 1), "uniform")

    @classmethod
    def geometric(cls, r_max: float, n: int, ratio: float = 1.005) -> "RadialGrid":
        """Cell widths growing by ``ratio`` outward, refining the centre."""
        if ratio == 1.0:
            return cls.uniform(r_max, n)
        widths = ratio ** np.arange(n)
        edges = np.concatenate([[0.0], np.cumsum(widths)])
        return cls(edges * (r_max / edges[-1]), "geometric")

    @property
    def n(self) -> int:
        return self.edges.size - 1

    @property
    def r_max(self) -> float:
        return float(self.edges[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def volume_centers(self) -> np.ndarray:
        """Radius bisecting each cell's volume."""
        e3 = self.edges**3
        return np.cbrt(0.5 * (e3[1:] + e3[:-1]))

    @property
    def volumes(self) -> np.ndarray:
        e3 = self.edges**3
        return (4.0 * math.pi / 3.0) * np.diff(e3)


@dataclass(frozen=True)
class RadialField:
    grid: RadialGrid
    rho: np.ndarray
    m: np.ndarray
    E: np.ndarray

    @classmethod
    def from_rho(cls, rho, grid: RadialGrid) -> "RadialField":
        m = enclosed_mass(rho, grid)
        E = np.zeros_like(m)
        E[1:] = m[1:] / grid.edges[1:] ** 2
        return cls(grid, np.asarray(rho, dtype=float), m, E)

    @classmethod
    def from_particles(cls, particles, grid: RadialGrid) -> "RadialField":
        return cls.from_rho(deposit_density(particles, grid), grid)

    @property
    def M(self) -> float:
        return float(self.m[-1])

    def field_at(self, r):
        return field_at(self.m, r, self.grid)


def _radii_weights(particles):
    if hasattr(particles, "weight"):
        return np.asarray(particles.r, dtype=float), np.asarray(particles.weight, dtype=float)
    particles = list(particles)
    if not particles:
        return np.zeros(0), np.zeros(0)
    r = np.array([p.state.r for p in particles], dtype=float)
    q = np.array([p.weight for p in particles], dtype=float)
    return r, q


def deposit_charge(r, q, grid: RadialGrid) -> np.ndarray:
    """Per-cell charge from radii ``r`` and weights ``q`` (linear in r^3)."""
    r = np.asarray(r, dtype=float)
    q = np.asarray(q, dtype=float)
    n = grid.n
    if r.size == 0:
        return np.zeros(n)
    bad = np.flatnonzero(~((r >= 0.0) & (r <= grid.r_max)))
    if bad.size:
        i = int(bad[0])
        raise DepositionError(f"particle {i} at r={r[i]!r} lies outside the grid [0, {grid.r_max}]")
    s = r**3
    sc = grid.volume_centers**3
    j = np.searchsorted(sc, s, side="right") - 1
    lo = j < 0
    hi = j >= n - 1
    jj = np.clip(j, 0, n - 2)
    frac = (s - sc[jj]) / (sc[jj + 1] - sc[jj])
    frac = np.where(lo, 0.0, np.where(hi, 1.0, frac))
    charge = np.bincount(jj, weights=q * (1.0 - frac), minlength=n)
    charge += np.bincount(jj + 1, weights=q * frac, minlength=n)
    return charge


def deposit_density(particles, grid: RadialGrid) -> np.ndarray:
    """Cell-averaged charge density; sum(rho * volumes) equals the total weight."""
    r, q = _radii_weights(particles)
    return deposit_charge(r, q, grid) / grid.volumes


def enclosed_mass(rho, grid: RadialGrid) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (grid.n,):
        raise DomainError("rho must have one value per cell")
    if np.any(rho < 0.0):
        raise DomainError("density must be nonnegative")
    return np.concatenate([[0.0], np.cumsum(rho * grid.volumes)])


def field_at(m, r, grid: Optional[RadialGrid] = None):
    """E = m(r) / r^2 with m interpolated linearly in r^3 between edges.

    ``m`` may be a :class:`RadialField`, in which case ``grid`` is taken from it.
    Beyond the last edge m is the total charge.
    """
    if isinstance(m, RadialField):
        grid, m = m.grid, m.m
    if grid is None:
        raise DomainError("a grid is required to locate r")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0):
        raise DomainError("field evaluation requires r > 0")
    mr = np.interp(r_arr**3, grid.edges**3, np.asarray(m, dtype=float))
    out = mr / r_arr**2
    return out if np.ndim(out) else float(out)


def sup_norm(values, region, grid: RadialGrid, at: str = "cells") -> float:
    """max |values| over cells meeting ``region`` (or edges inside it)."""
    lo, hi = region
    values = np.asarray(values, dtype=float)
    if at == "cells":
        sel = (grid.edges[:-1] < hi) & (grid.edges[1:] > lo)
    elif at == "edges":
        sel = (grid.edges >= lo) & (grid.edges <= hi)
    else:
        raise DomainError(f"unknown location {at!r}")
    if values.shape != sel.shape:
        raise DomainError("values do not match the grid locations")
    if not np.any(sel):
        raise DomainError(f"region {region} does not meet the grid")
    return float(np.max(np.abs(values[sel])))


# ------------------------------------------------------------ derivatives


def fornberg_weights(x0: float, x, order: int) -> np.ndarray:
    """Finite-difference weights at x0 on nodes x for derivatives 0..order.

    Returns an array of shape (order + 1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((order + 1, n))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5 = 1.0, c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for kk in range(mn, 0, -1):
                    c[kk, i] = c1 * (kk * c[kk - 1, i - 1] - c5 * c[kk, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for kk in range(mn, 0, -1):
                c[kk, j] = (c4 * c[kk, j] - kk * c[kk - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def radial_derivatives(values, nodes, k: int) -> np.ndarray:
    """Derivatives 0..k at every node from local stencils of k + 3 points (odd-rounded)."""
    values = np.asarray(values, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    width = k + 3 + ((k + 3) % 2 == 0)
    n = nodes.size
    if n < width:
        raise ResolutionError(f"{n} nodes cannot support order-{k} differences (need {width})")
    half = width // 2
    out = np.zeros((k + 1, n))
    for i in range(n):
        start = min(max(i - half, 0), n - width)
        idx = slice(start, start + width)
        w = fornberg_weights(nodes[i], nodes[idx], k)
        out[:, i] = w @ values[idx]
    return out


def ck_norm(values, k: int, grid: RadialGrid, at: str = "cells") -> float:
    """sum_{j<=k} sup |d^j f / dr^j| of a radial profile sampled on the grid."""
    nodes = grid.centers if at == "cells" else grid.edges
    if np.asarray(values).shape != nodes.shape:
        raise DomainError("values do not match the grid locations")
    d = radial_derivatives(values, nodes, k)
    return float(np.sum(np.max(np.abs(d), axis=1)))


_DIRECTIONS = np.array([
    [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1],
    [1, -1, 0], [1, 0, -1], [0, 1, -1], [1, -1, 1], [2, 1, 0], [1, 2, 3],
], dtype=float)
_DIRECTIONS /= np.linalg.norm(_DIRECTIONS, axis=1)[:, None]


def _central_weights(order: int):
    pts = np.arange(-(order // 2 + 1), order // 2 + 2, dtype=float) if order else np.array([0.0])
    return pts, fornberg_weights(0.0, pts, order)[order]


def cartesian_ck_norm(profile: Callable, k: int, radii, kind: str = "scalar", h: Optional[float] = None) -> float:
    """sum_{j<=k} sup over coordinate partials of order j of f(x) = profile(|x|) (or profile(|x|) x/|x|).

    Partials are nested central differences with step ``h`` evaluated at the
    given radii along a fixed set of directions; ``kind="vector"`` takes the
    sup over the three components of the radial vector field.
    """
    radii = np.asarray(radii, dtype=float)
    if h is None:
        h = 1e-3 * float(np.max(radii))
    pts = (radii[:, None, None] * _DIRECTIONS[None, :, :]).reshape(-1, 3)

    def field(x):
        r = np.linalg.norm(x, axis=-1)
        v = np.asarray(profile(r), dtype=float)
        if kind == "scalar":
            return v[..., None]
        safe = np.where(r > 0, r, 1.0)
        return (v / safe)[..., None] * x

    total = 0.0
    for j in range(k + 1):
        best = 0.0
        for alpha in itertools.product(range(j + 1), repeat=3):
            if sum(alpha) != j:
                continue
            stencils = [_central_weights(a) for a in alpha]
            acc = np.zeros((pts.shape[0], 1 if kind == "scalar" else 3))
            for combo in itertools.product(*[list(zip(*s)) for s in stencils]):
                offs = np.array([c[0] for c in combo]) * h
                wt = float(np.prod([c[1] for c in combo]))
                if wt == 0.0:
                    continue
                acc = acc + wt * field(pts + offs)
            acc /= h**j
            best = max(best, float(np.max(np.abs(acc))))
        total += best
    return total


def profile_interpolant(values, nodes) -> Callable:
    """Cubic-spline interpolant of a radial profile, zero beyond the last node."""
    spl = CubicSpline(np.asarray(nodes, dtype=float), np.asarray(values, dtype=float))
    top = float(nodes[-1])
    return lambda r: np.where(np.asarray(r) <= top, spl(np.clip(r, nodes[0], top)), 0.0)


def analytic_rho0_vp(r, plan, chi, full_velocity_integral: bool = False):
    """Closed-form initial density (3 / (8 pi a0^3)) chi(r).

    On the sampled support w < 0 throughout, so the Gamma factor is identically
    one and the velocity integral gives (3 / (4 pi a0^3)) chi(r); pass
    ``full_velocity_integral=True`` for that value.
    """
    base = velocity_integral(plan.a0)
    scale = base if full_velocity_integral else 0.5 * base
    return scale * chi(r)
