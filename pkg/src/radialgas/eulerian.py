"""Transforms mass-coordinate states back to radial profiles.

The solver evolves fields on the uniform mass grid [0, k].  The map
x -> r(x, t) is strictly increasing, so it can be inverted node-wise by
monotone cubic interpolation; sampling the fields at x(r, t) produces the
radial profile of (rho, u, e) on the fluid annulus [a, r_edge] with
r_edge = r(k, t).  Beyond the fluid edge the profile is blended to the
quiescent far field (1, 0, 1) with the same polynomial cutoff used by the
data pipeline, so one grid covers the annulus and the matching exterior.

Queries below r = a are rejected; queries beyond r_edge are filled with
the exact far-field values and then owned by the cutoff blend.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from radialgas.initial_data import farfield_cutoff
from radialgas.solver import LagrangianState

PROFILE_FLOAT_FMT = "%.17g"


@dataclasses.dataclass(frozen=True)
class RadialProfile:
    """Radial fields at one instant, far field exact beyond r_edge."""

    t: float
    r: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    e: np.ndarray
    r_edge: float

    def __post_init__(self):
        for name in ("r", "rho", "u", "e"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.ndim != 1 or arr.shape != self.r.shape:
                raise ValueError(f"{name} must be 1-d and match the grid")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if self.r.size < 2 or not np.all(np.diff(self.r) > 0.0):
            raise ValueError("radial grid must be strictly increasing")
        if not self.r_edge > float(self.r[0]):
            raise ValueError("fluid edge must lie beyond the inner boundary")
        fluid = self.r <= self.r_edge
        if not np.all(self.rho[fluid] > 0.0):
            raise ValueError("rho must be positive on the fluid region")
        if not np.all(self.e > 0.0):
            raise ValueError("e must be positive")
        outside = self.r > self.r_edge
        if np.any(self.rho[outside] != 1.0) or np.any(self.u[outside] != 0.0) or np.any(
            self.e[outside] != 1.0
        ):
            raise ValueError("fields must equal (1, 0, 1) beyond the fluid edge")

    @property
    def n_points(self) -> int:
        return int(self.r.size)


def mass_coordinate(state: LagrangianState, r_grid) -> np.ndarray:
    """Mass coordinates x(r, t) of the query radii, clipped to [0, k]."""
    r_grid = np.asarray(r_grid, dtype=float)
    inverse = PchipInterpolator(state.r, state.x)
    return inverse(np.clip(r_grid, float(state.r[0]), float(state.r[-1])))


def pullback(state: LagrangianState, r_grid) -> RadialProfile:
    """Sample (1/v, u, e) at the mass coordinates of the query radii.

    Radii beyond the fluid edge get the exact far-field values (1, 0, 1);
    radii below the inner boundary raise.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or r_grid.size < 2:
        raise ValueError("query grid must be a 1-d array with at least 2 nodes")
    if not np.all(np.isfinite(r_grid)) or not np.all(np.diff(r_grid) > 0.0):
        raise ValueError("query grid must be finite and strictly increasing")
    a = float(state.r[0])
    if float(r_grid[0]) < a * (1.0 - 1e-12):
        raise ValueError("query radii must not fall inside the excluded core")
    r_edge = float(state.r[-1])
    xq = mass_coordinate(state, r_grid)
    v_bar = PchipInterpolator(state.x, state.v)(xq)
    u_bar = PchipInterpolator(state.x, state.u)(xq)
    e_bar = PchipInterpolator(state.x, state.e)(xq)
    outside = r_grid > r_edge
    rho = np.where(outside, 1.0, 1.0 / v_bar)
    u = np.where(outside, 0.0, u_bar)
    e = np.where(outside, 1.0, e_bar)
    return RadialProfile(
        t=float(state.t), r=r_grid.copy(), rho=rho, u=u, e=e, r_edge=r_edge
    )


def jacobian(state: LagrangianState, n: int = 3) -> np.ndarray:
    """Area-weighted volume ratio v * r^-(n-1) of the mass-to-radius map.

    Strictly positive whenever the state is physical; the inverse map in
    pullback exists exactly because this never vanishes.
    """
    if n not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    return state.v * state.r ** (-(n - 1))


def cutoff_extend(
    profile: RadialProfile, r_edge: float | None = None, r_out: float | None = None
) -> RadialProfile:
    """Blend a fluid-region profile to (1, 0, 1) across [r_edge/2, r_edge].

    The blend multiplies the deviation from the far field by the falling
    cutoff chi((2r - r_edge)/r_edge); nodes where the cutoff is exactly one
    keep their input values bit for bit, nodes beyond r_edge are exactly
    (1, 0, 1).  The grid is continued past the fluid edge to r_out
    (default 1.5 * r_edge) so the blend region is visible in the output.
    """
    if r_edge is None:
        r_edge = profile.r_edge
    r_edge = float(r_edge)
    if r_edge <= float(profile.r[0]):
        raise ValueError("fluid edge must lie beyond the inner boundary")
    if float(profile.r[-1]) < r_edge * (1.0 - 1e-12):
        raise ValueError("profile must cover the fluid region up to the edge")
    if r_out is None:
        r_out = 1.5 * r_edge
    r_out = float(r_out)

    r = profile.r
    rho, u, e = profile.rho, profile.u, profile.e
    if float(r[-1]) < r_out * (1.0 - 1e-12):
        h = float(r[-1] - r[-2])
        n_add = max(1, math.ceil((r_out - float(r[-1])) / h))
        tail = np.linspace(float(r[-1]), r_out, n_add + 1)[1:]
        r = np.concatenate([r, tail])
        rho = np.concatenate([rho, np.ones_like(tail)])
        u = np.concatenate([u, np.zeros_like(tail)])
        e = np.concatenate([e, np.ones_like(tail)])

    phi = farfield_cutoff(r, r_edge)
    rho_ext = np.where(phi == 1.0, rho, np.where(phi == 0.0, 1.0, 1.0 + phi * (rho - 1.0)))
    u_ext = np.where(phi == 1.0, u, np.where(phi == 0.0, 0.0, phi * u))
    e_ext = np.where(phi == 1.0, e, np.where(phi == 0.0, 1.0, 1.0 + phi * (e - 1.0)))
    return RadialProfile(t=profile.t, r=r, rho=rho_ext, u=u_ext, e=e_ext, r_edge=r_edge)


def eulerian_profile(
    state: LagrangianState, n_points: int | None = None, r_out: float | None = None
) -> RadialProfile:
    """Full pipeline: pull back onto a uniform radial grid and blend out."""
    r_edge = float(state.r[-1])
    if r_out is None:
        r_out = 1.5 * r_edge
    if n_points is None:
        n_points = 2 * state.n_intervals + 1
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    grid = np.linspace(float(state.r[0]), float(r_out), int(n_points))
    return cutoff_extend(pullback(state, grid), r_edge, r_out=r_out)


def write_profile_csv(profile: RadialProfile, path) -> None:
    """Emit columns t,r,rho,u,e,phi at full float precision, no metadata."""
    phi = farfield_cutoff(profile.r, profile.r_edge)
    t_col = np.full_like(profile.r, profile.t)
    rows = np.column_stack([t_col, profile.r, profile.rho, profile.u, profile.e, phi])
    np.savetxt(
        path, rows, fmt=PROFILE_FLOAT_FMT, delimiter=",", header="t,r,rho,u,e,phi",
        comments="",
    )
