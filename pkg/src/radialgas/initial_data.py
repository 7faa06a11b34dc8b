"""Construction of well-prepared initial data for the radial flow solver.

The pipeline has three stages, each a pure transformation:

  RadialData          samples of (rho, u, e) on [0, R_max], bounded by Cstar
    -> mollify_extend  smooth fields on [a, infinity), flat near r=a, via
                       reflection + mollification + an inner cutoff
    -> truncate_farfield  blend to the constant far field (1, 0, 1) beyond
                       the radius enclosing a prescribed total mass k
    -> to_lagrangian   resample onto the uniform mass grid [0, k]

All fields stay sampled on explicit grids; smoothness enters through the
C-infinity mollifier kernel and quintic cutoff polynomials, never through
symbolic manipulation. The inner cutoff gives third-order contact with the
constant state at r=a, so u(a)=0 and the one-sided radial derivative of e
at r=a vanish to grid accuracy by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .solver import FluidParams, reconstruct_radius

__all__ = [
    "RadialData",
    "ExteriorData",
    "LagrangianData",
    "smoothstep",
    "inner_cutoff",
    "farfield_cutoff",
    "generate_radial",
    "load_radial_csv",
    "mollify_extend",
    "truncate_farfield",
    "to_lagrangian",
    "data_entropy_constant",
    "radial_entropy_integral",
    "exterior_entropy_integral",
    "support_radius",
]

# nodes per inner radius in the mollification working grid; a power of two
# so that node KERNEL_RES equals a bit-for-bit
_GRID_PER_A = 64
_MASS_TOL = 1e-12  # inversion tolerance of the cumulative mass map, in x


def _psi(z: np.ndarray) -> np.ndarray:
    return z - 1.0 - np.log(z)


def _G(z: np.ndarray) -> np.ndarray:
    return 1.0 - z + z * np.log(z)


# ---------------------------------------------------------------------------
# cutoff polynomials


def smoothstep(s):
    """Quintic ramp: 0 for s<=0, 1 for s>=1, C^2 at both ends, max slope 15/8."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def inner_cutoff(r, a: float):
    """Rises from 0 (r<=a) to 1 (r>=2a); kills fields near the inner radius."""
    return smoothstep(np.asarray(r) / a - 1.0)


def farfield_cutoff(r, r_ref: float):
    """Falls from 1 (r<=r_ref/2) to 0 (r>=r_ref); keeps the near region."""
    return 1.0 - smoothstep((2.0 * np.asarray(r) - r_ref) / r_ref)


def _bump_kernel(half_width: int) -> np.ndarray:
    """Normalized C-infinity bump weights on 2*half_width+1 uniform nodes."""
    s = np.arange(-half_width, half_width + 1) / half_width
    w = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1.0
    w[inside] = np.exp(1.0 / (s[inside] ** 2 - 1.0))
    return w / np.sum(w)


# ---------------------------------------------------------------------------
# data containers


@dataclass(frozen=True)
class RadialData:
    """Sampled spherically symmetric data on [0, R_max].

    Cstar is the data-size constant: it bounds rho from both sides, 1/e
    from above, and (by construction in the generators) the data entropy
    integral. Everything downstream is controlled by powers of Cstar.
    """

    r: np.ndarray
    rho0: np.ndarray
    u0: np.ndarray
    e0: np.ndarray
    Cstar: float

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        if r[0] != 0.0 or np.any(np.diff(r) <= 0.0):
            raise ValueError("radial grid must increase strictly from r=0")
        for name in ("rho0", "u0", "e0"):
            f = np.asarray(getattr(self, name), dtype=float)
            if f.shape != r.shape or not np.all(np.isfinite(f)):
                raise ValueError(f"field {name} must be finite and match the grid")
            object.__setattr__(self, name, f)
        object.__setattr__(self, "r", r)
        c = float(self.Cstar)
        if not c >= 1.0:
            raise ValueError(f"Cstar must be >= 1, got {c}")
        if np.min(self.rho0) < 1.0 / c - 1e-12 or np.max(self.rho0) > c + 1e-12:
            raise ValueError("rho0 violates the Cstar two-sided bound")
        if np.min(self.e0) < 1.0 / c - 1e-12:
            raise ValueError("e0 falls below 1/Cstar")


@dataclass(frozen=True)
class ExteriorData:
    """Smooth sampled fields on [a, R_out], constant (1,0,1) past support."""

    a: float
    r: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    e: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        if abs(r[0] - self.a) > 1e-12 * max(1.0, self.a) or np.any(np.diff(r) <= 0.0):
            raise ValueError("exterior grid must increase strictly from r=a")
        object.__setattr__(self, "r", r)
        for name in ("rho", "u", "e"):
            f = np.asarray(getattr(self, name), dtype=float)
            if f.shape != r.shape or not np.all(np.isfinite(f)):
                raise ValueError(f"field {name} must be finite and match the grid")
            object.__setattr__(self, name, f)
        if np.any(self.rho <= 0.0) or np.any(self.e <= 0.0):
            raise ValueError("rho and e must stay positive")
        if self.u[0] != 0.0:
            raise ValueError("u must vanish exactly at r=a")

    def boundary_e_slope(self) -> float:
        """One-sided 2nd-order radial derivative of e at r=a."""
        h = self.r[1] - self.r[0]
        return float((-3.0 * self.e[0] + 4.0 * self.e[1] - self.e[2]) / (2.0 * h))


@dataclass(frozen=True)
class LagrangianData:
    """Data on the uniform mass grid [0, k], ready for the solver."""

    k: int
    x: np.ndarray
    v0: np.ndarray
    u0: np.ndarray
    e0: np.ndarray
    r0: np.ndarray

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        x = np.asarray(self.x, dtype=float)
        n_int = len(x) - 1
        if x[0] != 0.0 or abs(x[-1] - self.k) > 1e-12 * self.k:
            raise ValueError("mass grid must span [0, k]")
        if np.max(np.abs(np.diff(x) - self.k / n_int)) > 1e-12:
            raise ValueError("mass grid must be uniform")
        object.__setattr__(self, "x", x)
        for name in ("v0", "u0", "e0", "r0"):
            f = np.asarray(getattr(self, name), dtype=float)
            if f.shape != x.shape or not np.all(np.isfinite(f)):
                raise ValueError(f"field {name} must be finite and match the grid")
            object.__setattr__(self, name, f)
        if np.any(self.v0 <= 0.0) or np.any(self.e0 <= 0.0):
            raise ValueError("v0 and e0 must be positive")
        if self.u0[0] != 0.0 or self.u0[-1] != 0.0:
            raise ValueError("u0 must vanish exactly at both ends")
        scale = max(1.0, float(np.max(np.abs(self.e0))))
        for sl in (slice(0, 3), slice(-1, -4, -1)):
            e3 = self.e0[sl]
            if abs(-3.0 * e3[0] + 4.0 * e3[1] - e3[2]) > 1e-12 * scale:
                raise ValueError("one-sided mass derivative of e0 must vanish at the ends")

    @property
    def a(self) -> float:
        return float(self.r0[0])

    @property
    def n_intervals(self) -> int:
        return len(self.x) - 1


# ---------------------------------------------------------------------------
# generators and I/O


def _radial_fields(name: str, r: np.ndarray):
    ones = np.ones_like(r)
    zeros = np.zeros_like(r)
    if name == "constant":
        return ones, zeros, ones.copy()
    if name == "gaussian_bump":
        s = (r - 1.25) / 0.75
        rho = np.ones_like(r)
        inside = np.abs(s) < 1.0
        rho[inside] += np.e * np.exp(1.0 / (s[inside] ** 2 - 1.0))
        return rho, zeros, ones
    if name == "discontinuous_shell":
        rho = np.where((r >= 0.8) & (r <= 1.6), 2.5, 1.0)
        return rho, zeros, ones
    raise ValueError(f"unknown generator {name!r}")


def radial_entropy_integral(r, rho, u, e, n: int) -> float:
    """Data entropy integral with the r^(n-1) measure and unit-weight G."""
    m = n - 1
    density = (
        rho * (0.5 * u**2 + _psi(e))
        + _G(rho)
        + (rho - 1.0) ** 2
        + u**4
        + (e - 1.0) ** 2
    ) * r**m
    return float(np.trapezoid(density, r))


def generate_radial(name: str, n: int = 3, r_max: float = 4.0, n_points: int = 4097) -> RadialData:
    """Built-in test profiles; Cstar is computed from the generated samples."""
    r = np.linspace(0.0, r_max, n_points)
    rho, u, e = _radial_fields(name, r)
    cstar = max(
        float(np.max(rho)),
        float(1.0 / np.min(rho)),
        float(1.0 / np.min(e)),
        radial_entropy_integral(r, rho, u, e, n),
        1.0,
    )
    return RadialData(r=r, rho0=rho, u0=u, e0=e, Cstar=cstar)


def load_radial_csv(path, n: int = 3) -> RadialData:
    """Read columns r,rho,u,e from a CSV file with a header row."""
    table = np.genfromtxt(path, delimiter=",", names=True)
    required = ("r", "rho", "u", "e")
    if table.dtype.names is None or tuple(table.dtype.names) != required:
        raise ValueError(f"CSV must have exactly the header columns {','.join(required)}")
    r = np.asarray(table["r"], dtype=float)
    rho = np.asarray(table["rho"], dtype=float)
    u = np.asarray(table["u"], dtype=float)
    e = np.asarray(table["e"], dtype=float)
    cstar = max(
        float(np.max(rho)),
        float(1.0 / np.min(rho)),
        float(1.0 / np.min(e)),
        radial_entropy_integral(r, rho, u, e, n),
        1.0,
    )
    return RadialData(r=r, rho0=rho, u0=u, e0=e, Cstar=cstar)


# ---------------------------------------------------------------------------
# stage 1: mollify + inner cutoff


def mollify_extend(data: RadialData, a: float) -> ExteriorData:
    """Smooth the data and make it exactly constant for r <= a.

    The fields are extended to the whole line (rho, e even; u odd),
    convolved with a bump kernel supported on [-a/2, a/2], and blended to
    the constant state below r=2a by the rising quintic cutoff. Output
    lives on a uniform grid of spacing a/64 starting exactly at r=a.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"inner radius a must lie in (0, 1), got {a}")
    delta = a / _GRID_PER_A
    half_width = _GRID_PER_A // 2  # kernel reaches a/2 on the working grid
    r_data_max = float(data.r[-1])
    r_out_max = max(r_data_max, 2.0 * a) + a
    j_out_hi = int(np.ceil(r_out_max / delta))

    # master grid: indices  -GRID_PER_A - half_width .. j_out_hi + half_width
    j_lo = -_GRID_PER_A - half_width
    j_master = np.arange(j_lo, j_out_hi + half_width + 1)
    zeta = j_master * delta

    interp = {
        name: PchipInterpolator(data.r, getattr(data, name), extrapolate=False)
        for name in ("rho0", "u0", "e0")
    }

    def sample(name: str, farfield: float) -> np.ndarray:
        vals = interp[name](np.abs(zeta))
        vals = np.where(np.isnan(vals), farfield, vals)
        if name == "u0":  # odd extension
            vals = np.where(zeta < 0.0, -vals, vals)
        return vals

    kernel = _bump_kernel(half_width)
    rho_hat = np.convolve(sample("rho0", 1.0), kernel, mode="valid")
    u_hat = np.convolve(sample("u0", 0.0), kernel, mode="valid")
    e_hat = np.convolve(sample("e0", 1.0), kernel, mode="valid")
    # after 'valid' convolution the arrays start at master index j_lo+half_width
    start = _GRID_PER_A - (j_lo + half_width)  # offset of r=a in the hat arrays
    sl = slice(start, start + (j_out_hi - _GRID_PER_A) + 1)
    rho_hat, u_hat, e_hat = rho_hat[sl], u_hat[sl], e_hat[sl]

    j_out = np.arange(_GRID_PER_A, j_out_hi + 1)
    r_out = j_out * delta
    chi = inner_cutoff(r_out, a)
    rho = (rho_hat - 1.0) * chi + 1.0
    u = u_hat * chi
    e = (e_hat - 1.0) * chi + 1.0

    # beyond the mollified support the fields are analytically the constant
    # state; snap the round-off of the normalized kernel to the exact values
    far = r_out > r_data_max + 0.5 * a + 0.5 * delta
    rho = np.where(far, 1.0, rho)
    u = np.where(far, 0.0, u)
    e = np.where(far, 1.0, e)
    u[0] = 0.0  # chi(a)=0 makes this exact already; keep it explicit

    return ExteriorData(a=a, r=r_out, rho=rho, u=u, e=e)


def support_radius(data: ExteriorData) -> float:
    """Largest grid radius at which the fields differ from (1, 0, 1)."""
    off = (data.rho != 1.0) | (data.u != 0.0) | (data.e != 1.0)
    idx = np.nonzero(off)[0]
    return float(data.r[idx[-1]]) if len(idx) else data.a


def exterior_entropy_integral(data: ExteriorData, n: int) -> float:
    """Entropy integral of exterior data over [a, infinity)."""
    m = n - 1
    density = (
        data.rho * (0.5 * data.u**2 + _psi(data.e))
        + _G(data.rho)
        + (data.rho - 1.0) ** 2
        + data.u**4
        + (data.e - 1.0) ** 2
    ) * data.r**m
    return float(np.trapezoid(density, data.r))


# ---------------------------------------------------------------------------
# cumulative mass map and its inverse


def _mass_prefix(data: ExteriorData, n: int) -> np.ndarray:
    f = data.rho * data.r ** (n - 1)
    cells = 0.5 * (f[1:] + f[:-1]) * np.diff(data.r)
    return np.concatenate([[0.0], np.cumsum(cells)])


def _invert_mass(data: ExteriorData, x_targets: np.ndarray, n: int) -> np.ndarray:
    """Radii enclosing the masses x_targets; analytic beyond the grid."""
    mass = _mass_prefix(data, n)
    m_end = float(mass[-1])
    x_targets = np.asarray(x_targets, dtype=float)
    if float(np.max(x_targets)) > m_end:
        tail_ok = data.rho[-1] == 1.0 and data.u[-1] == 0.0 and data.e[-1] == 1.0
        if not tail_ok:
            raise ValueError(
                f"data grid holds mass {m_end:.6g} < requested {np.max(x_targets):.6g} "
                "and does not end in the constant far field"
            )
    mass_interp = PchipInterpolator(data.r, mass, extrapolate=False)
    out = np.empty_like(x_targets)

    inside = x_targets <= m_end
    if np.any(inside):
        xs = x_targets[inside]
        cell = np.clip(np.searchsorted(mass, xs, side="right") - 1, 0, len(mass) - 2)
        lo = data.r[cell].copy()
        hi = data.r[cell + 1].copy()
        mid = 0.5 * (lo + hi)
        for _ in range(200):
            fm = mass_interp(mid) - xs
            if np.all(np.abs(fm) <= _MASS_TOL):
                break
            go_left = fm > 0.0
            hi = np.where(go_left, mid, hi)
            lo = np.where(go_left, lo, mid)
            new_mid = 0.5 * (lo + hi)
            if np.all(new_mid == mid):
                break
            mid = new_mid
        out[inside] = mid
    if np.any(~inside):
        xs = x_targets[~inside]
        r_end = float(data.r[-1])
        out[~inside] = (n * (xs - m_end) + r_end**n) ** (1.0 / n)
    return out


# ---------------------------------------------------------------------------
# stage 2: far-field truncation at total mass k


def truncate_farfield(data: ExteriorData, k: int, n: int = 3) -> ExteriorData:
    """Blend the fields to (1, 0, 1) around the radius enclosing mass k.

    Below half that radius the output equals the input bit-for-bit; beyond
    it the output is exactly the constant state.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    r_k = float(_invert_mass(data, np.array([float(k)]), n)[0])
    phi = farfield_cutoff(data.r, r_k)
    rho = np.where(phi == 1.0, data.rho, (data.rho - 1.0) * phi + 1.0)
    u = np.where(phi == 1.0, data.u, data.u * phi)
    e = np.where(phi == 1.0, data.e, (data.e - 1.0) * phi + 1.0)
    return ExteriorData(a=data.a, r=data.r, rho=rho, u=u, e=e)


# ---------------------------------------------------------------------------
# stage 3: conversion to the mass coordinate


def to_lagrangian(data: ExteriorData, k: int, N: int, n: int = 3) -> LagrangianData:
    """Resample exterior data onto the uniform mass grid [0, k].

    The map x -> radius is the inverse of the cumulative mass integral of
    the given data, found per node by bisection to 1e-12 in x; the fields
    are pulled back along it and v = 1/rho. The stored radii satisfy the
    trapezoid radius identity exactly (see reconstruct_radius).
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if N < 8:
        raise ValueError(f"N must be at least 8, got {N}")
    x = np.linspace(0.0, float(k), N + 1)
    r_tilde = _invert_mass(data, x, n)
    r_tilde[0] = data.a  # analytic value of the map at x=0

    fields = {}
    for name, farfield in (("rho", 1.0), ("u", 0.0), ("e", 1.0)):
        interp = PchipInterpolator(data.r, getattr(data, name), extrapolate=False)
        vals = interp(r_tilde)
        fields[name] = np.where(np.isnan(vals), farfield, vals)

    v0 = 1.0 / fields["rho"]
    u0 = fields["u"]
    e0 = fields["e"]
    u0[0] = 0.0
    u0[-1] = 0.0
    e0[0] = (4.0 * e0[1] - e0[2]) / 3.0
    e0[-1] = (4.0 * e0[-2] - e0[-3]) / 3.0
    r0 = reconstruct_radius(v0, data.a, float(k) / N, n)
    return LagrangianData(k=int(k), x=x, v0=v0, u0=u0, e0=e0, r0=r0)


def lagrangian_map(data: ExteriorData, k: int, N: int, n: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """The sampled mass-to-radius map itself (for diagnostics and tests)."""
    x = np.linspace(0.0, float(k), N + 1)
    r_tilde = _invert_mass(data, x, n)
    r_tilde[0] = data.a
    return x, r_tilde


# ---------------------------------------------------------------------------
# the measured data-entropy constant


def data_entropy_constant(data: LagrangianData, params: FluidParams | None = None) -> float:
    """Trapezoid quadrature of the mass-coordinate data entropy density.

    The density is u^2/2 + psi(e0) + psi(v0) + (v0-1)^2 + u0^4 + (e0-1)^2;
    the returned value is the run's C0, consumed by every monitor. params
    is accepted for signature uniformity; the density does not use it.
    """
    density = (
        0.5 * data.u0**2
        + _psi(data.e0)
        + _psi(data.v0)
        + (data.v0 - 1.0) ** 2
        + data.u0**4
        + (data.e0 - 1.0) ** 2
    )
    dx = data.k / data.n_intervals
    return float(dx * (np.sum(density) - 0.5 * density[0] - 0.5 * density[-1]))
