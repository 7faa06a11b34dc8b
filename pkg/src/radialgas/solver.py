"""Time integrator for the radial gas flow system in mass coordinates.

The unknowns live on a collocated uniform grid over the mass interval
[0, k]: specific volume v, velocity u, internal energy e, and the radius
field r tied to v through the integral identity

    r(x)^n = a^n + n * (trapezoid prefix of v up to x).

One step is IMEX: the two stiff second-order operators (viscosity acting on
r^m u, heat conduction acting on e) are backward Euler with coefficients
frozen at known values, solved as tridiagonal systems; pressure, geometric
and quadratic production terms are explicit. The discretization is built so
that three statements hold to round-off, not merely to truncation order:

  * the radius identity above is preserved by every step,
  * the total energy (kinetic + internal, trapezoid quadrature) is
    conserved with zero boundary flux,
  * the discrete entropy balance E(t+dt) + dt*D(t+dt) <= E(t) holds, where
    D is assembled from the same stencils the step used (the only dropped
    terms are convexity gaps with a favorable sign).

That forces a few non-obvious choices, commented where they happen: the
continuity update uses a two-term recursion whose trapezoid prefix
telescopes exactly; boundary nodes carry half-cell source weights; the
kinetic energy lost by backward-Euler averaging is re-deposited as heat.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "FluidParams",
    "LagrangianState",
    "SolverConfig",
    "Trajectory",
    "StepRejected",
    "RunAborted",
    "EntropyWarning",
    "step",
    "run",
    "reconstruct_radius",
    "trapezoid",
    "trapezoid_weights",
    "discrete_entropy",
]

# Tolerances of the per-step entropy check (relative slack on E, absolute
# slack), and of the stored-state radius identity.
ENTROPY_REL_TOL = 1e-10
ENTROPY_ABS_TOL = 1e-12
RADIUS_IDENTITY_TOL = 1e-10


class StepRejected(Exception):
    """A step produced non-positive v or e; the caller should retry smaller."""


class RunAborted(Exception):
    """Run could not continue; carries the last valid state."""

    def __init__(self, message: str, last_state: "LagrangianState | None" = None):
        super().__init__(message)
        self.last_state = last_state


class EntropyWarning(UserWarning):
    """Per-step entropy inequality violated (exploratory mode only)."""


@dataclass(frozen=True)
class FluidParams:
    """Constant material parameters.

    gamma  adiabatic exponent (> 1); pressure closure p = (gamma-1) e / v
    mu     shear viscosity (> 0)
    lam    second viscosity coefficient (lam + 2 mu / n >= 0)
    kappa  heat conductivity (> 0)
    n      spatial dimension (2 or 3)
    R      gas constant (enters only via c_v = R / (gamma - 1))
    """

    gamma: float = 1.4
    mu: float = 0.1
    lam: float = 0.1
    kappa: float = 0.1
    n: int = 3
    R: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.lam + 2.0 * self.mu / self.n < 0.0:
            raise ValueError(
                f"need lam + 2*mu/n >= 0, got lam={self.lam}, mu={self.mu}, n={self.n}"
            )
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.n not in (2, 3):
            raise ValueError(f"n must be 2 or 3, got {self.n}")
        if not self.R > 0.0:
            raise ValueError(f"R must be positive, got {self.R}")

    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def beta(self) -> float:
        return 2.0 * self.mu + self.lam

    @property
    def c_v(self) -> float:
        return self.R / (self.gamma - 1.0)


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LagrangianState:
    """Immutable snapshot of the flow at one time."""

    t: float
    a: float
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    e: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x", "v", "u", "e", "r"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))

    @property
    def n_intervals(self) -> int:
        return len(self.x) - 1

    @property
    def k(self) -> float:
        return float(self.x[-1])

    @property
    def dx(self) -> float:
        return self.k / self.n_intervals

    def validate(self, n: int, tol: float = RADIUS_IDENTITY_TOL) -> None:
        """Check the stored-state invariants; raises ValueError on failure."""
        if not (np.all(self.v > 0.0) and np.all(self.e > 0.0)):
            raise ValueError("state has non-positive v or e")
        if self.u[0] != 0.0 or self.u[-1] != 0.0:
            raise ValueError("velocity not pinned to zero at the boundaries")
        if np.any(np.diff(self.r) <= 0.0):
            raise ValueError("radius field not strictly increasing")
        resid = self.r**n - self.a**n - n * trapezoid_prefix(self.v, self.dx)
        worst = float(np.max(np.abs(resid)))
        if worst > tol:
            raise ValueError(f"radius identity residual {worst:.3e} exceeds {tol:.1e}")


@dataclass(frozen=True)
class SolverConfig:
    """Run controls.

    output_times defaults to (0, T). dt_max is an optional hard cap on the
    step size on top of the CFL rule (useful for convergence studies).
    """

    N: int = 1024
    T: float = 0.5
    cfl: float = 0.4
    dt_min: float = 1e-10
    output_times: tuple[float, ...] | None = None
    mode: str = "strict"
    dt_max: float | None = None

    def __post_init__(self) -> None:
        if self.N < 8:
            raise ValueError(f"N must be at least 8, got {self.N}")
        if not self.T > 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.dt_min > 0.0:
            raise ValueError(f"dt_min must be positive, got {self.dt_min}")
        if self.mode not in ("strict", "exploratory"):
            raise ValueError(f"mode must be 'strict' or 'exploratory', got {self.mode!r}")
        if self.output_times is not None:
            ts = tuple(float(t) for t in self.output_times)
            if any(t < 0.0 or t > self.T for t in ts):
                raise ValueError("output_times must lie in [0, T]")
            object.__setattr__(self, "output_times", ts)
        if self.dt_max is not None and not self.dt_max > 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")

    def resolved_output_times(self) -> tuple[float, ...]:
        ts = self.output_times if self.output_times is not None else (0.0, self.T)
        return tuple(sorted(set(float(t) for t in ts)))


@dataclass(frozen=True)
class Trajectory:
    """Sampled states of one run plus step diagnostics."""

    params: FluidParams
    config: SolverConfig
    states: tuple[LagrangianState, ...]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = [s.t for s in self.states]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory sample times must be strictly increasing")


# ---------------------------------------------------------------------------
# quadrature helpers shared with the monitor layer


def trapezoid_weights(n_nodes: int, dx: float) -> np.ndarray:
    w = np.full(n_nodes, dx)
    w[0] = 0.5 * dx
    w[-1] = 0.5 * dx
    return w


def trapezoid(values: np.ndarray, dx: float) -> float:
    return float(dx * (np.sum(values) - 0.5 * values[0] - 0.5 * values[-1]))


def trapezoid_prefix(values: np.ndarray, dx: float) -> np.ndarray:
    """Running trapezoid integral from the left end to each node."""
    return dx * (np.cumsum(values) - 0.5 * values - 0.5 * values[0])


def reconstruct_radius(v: np.ndarray, a: float, dx: float, n: int) -> np.ndarray:
    """Radius field from the specific volume via the integral identity."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0.0):
        raise ValueError("specific volume must be positive")
    r = (a**n + n * trapezoid_prefix(v, dx)) ** (1.0 / n)
    r[0] = a  # exact value; the power round-trip costs an ulp otherwise
    return r


def _psi(z: np.ndarray) -> np.ndarray:
    return z - 1.0 - np.log(z)


def discrete_entropy(v, u, e, params: FluidParams, dx: float) -> float:
    """Trapezoid quadrature of (u^2/2 + psi(e) + (gamma-1) psi(v))."""
    density = 0.5 * np.asarray(u) ** 2 + _psi(np.asarray(e)) + (
        params.gamma - 1.0
    ) * _psi(np.asarray(v))
    return trapezoid(density, dx)


def _half(arr: np.ndarray) -> np.ndarray:
    return 0.5 * (arr[:-1] + arr[1:])


def signal_dt(state: LagrangianState, params: FluidParams, cfl: float) -> float:
    """CFL-like cap: acoustic speed in mass coordinates plus a geometric
    safeguard on the r^m transport factor."""
    rm = state.r ** params.m
    p = (params.gamma - 1.0) * state.e / state.v
    c_sig = rm * (np.sqrt(params.gamma * p / state.v) + np.abs(state.u))
    dx = state.dx
    return cfl * min(dx / float(np.max(c_sig)), dx / float(np.max(rm)))


# ---------------------------------------------------------------------------
# single step


def step(
    state: LagrangianState,
    params: FluidParams,
    dt: float,
    ledger: dict | None = None,
) -> LagrangianState:
    """Advance one IMEX step of size dt.

    Raises StepRejected if the step produces non-positive v or e. When a
    dict is passed as ledger it is filled with the step's entropy balance
    (E_old, E_new, dissipation, margin) computed from the step's own
    stencils.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    n, m = params.n, params.m
    beta, kappa, gamma = params.beta, params.kappa, params.gamma
    v, u, e, r = state.v, state.u, state.e, state.r
    nn = len(v)
    dx = state.dx
    a = state.a

    rm = r**m
    p = (gamma - 1.0) * e / v
    v_half = _half(v)

    # --- momentum, backward Euler on the viscous operator (frozen r, v) ---
    ab = np.zeros((3, nn))
    rhs = np.zeros(nn)
    coef = dt * beta / dx**2
    up = -coef * rm[1:-1] * rm[2:] / v_half[1:]
    lo = -coef * rm[1:-1] * rm[:-2] / v_half[:-1]
    ab[0, 2:] = up
    ab[2, :-2] = lo
    ab[1, 0] = 1.0
    ab[1, -1] = 1.0
    ab[1, 1:-1] = 1.0 + coef * rm[1:-1] ** 2 * (1.0 / v_half[1:] + 1.0 / v_half[:-1])
    rhs[1:-1] = u[1:-1] - dt * rm[1:-1] * (p[2:] - p[:-2]) / (2.0 * dx)
    u_new = solve_banded((1, 1), ab, rhs)
    u_new[0] = 0.0
    u_new[-1] = 0.0

    F = rm * u_new
    F[0] = 0.0
    F[-1] = 0.0

    # --- continuity: divergence g whose trapezoid prefix telescopes to F ---
    # g_0 is the one-sided 2nd-order divergence; then (g_j + g_{j-1})/2 is
    # forced to equal the half-cell difference quotient, which makes
    # trapz-prefix(g)_J == F_J exactly and so preserves the radius identity.
    h_half = np.diff(F) / dx
    g0 = (4.0 * F[1] - F[2]) / (2.0 * dx)
    signs = np.ones(nn)
    signs[1::2] = -1.0
    alt = signs[1:] * h_half
    g = np.empty(nn)
    g[0] = g0
    g[1:] = g0 + 2.0 * np.cumsum(alt)
    g *= signs

    v_new = v + dt * g
    if np.min(v_new) <= 0.0 or not np.all(np.isfinite(v_new)):
        raise StepRejected(f"specific volume lost positivity at t={state.t:.6g}")
    r_new = reconstruct_radius(v_new, a, dx, n)

    # --- explicit energy sources on nodes (trapezoid-weight compatible) ---
    # Boundary nodes use half-cell forms so that the weighted source sums
    # cancel the kinetic-energy work terms exactly.
    divF = np.empty(nn)
    divF[1:-1] = (F[2:] - F[:-2]) / (2.0 * dx)
    divF[0] = F[1] / dx
    divF[-1] = -F[-2] / dx
    pw = -p * divF

    Q = beta * h_half**2 / v_half  # viscous production per half cell
    q = np.empty(nn)
    q[0] = Q[0]
    q[-1] = Q[-1]
    q[1:-1] = 0.5 * (Q[:-1] + Q[1:])

    # kinetic energy dropped by the backward-Euler average, re-added as heat
    cvx = (u_new - u) ** 2 / (2.0 * dt)

    geo = r ** (m - 1) * u_new**2
    geo_half = _half(geo)
    sg = np.empty(nn)
    sg[0] = -2.0 * m * params.mu * (geo_half[0] - geo[0]) / (0.5 * dx)
    sg[-1] = -2.0 * m * params.mu * (geo[-1] - geo_half[-1]) / (0.5 * dx)
    sg[1:-1] = -2.0 * m * params.mu * (geo_half[1:] - geo_half[:-1]) / dx

    src = pw + q + cvx + sg

    # --- energy, backward Euler on conduction (flux-form zero-flux ends) ---
    c_half = _half(r_new ** (2 * m)) / _half(v_new)
    hc = dt * kappa / dx**2
    abE = np.zeros((3, nn))
    rhsE = e + dt * src
    abE[0, 2:] = -hc * c_half[1:]
    abE[2, :-2] = -hc * c_half[:-1]
    abE[1, 1:-1] = 1.0 + hc * (c_half[1:] + c_half[:-1])
    abE[1, 0] = 1.0 + 2.0 * hc * c_half[0]
    abE[0, 1] = -2.0 * hc * c_half[0]
    abE[1, -1] = 1.0 + 2.0 * hc * c_half[-1]
    abE[2, -2] = -2.0 * hc * c_half[-1]
    e_new = solve_banded((1, 1), abE, rhsE)
    if np.min(e_new) <= 0.0 or not np.all(np.isfinite(e_new)):
        raise StepRejected(f"internal energy lost positivity at t={state.t:.6g}")

    new_state = LagrangianState(
        t=state.t + dt, a=a, x=state.x, v=v_new, u=u_new, e=e_new, r=r_new
    )

    if ledger is not None:
        w = trapezoid_weights(nn, dx)
        de = np.diff(e_new)
        d_heat = kappa * float(np.sum(c_half * de * de / (e_new[:-1] * e_new[1:]))) / dx
        d_src = float(np.sum(w * src / e_new))
        d_comp = (gamma - 1.0) * float(np.sum(w * g / v_new))
        dissipation = d_heat + d_src + d_comp
        e_old_total = discrete_entropy(v, u, e, params, dx)
        e_new_total = discrete_entropy(v_new, u_new, e_new, params, dx)
        margin = (
            e_old_total * (1.0 + ENTROPY_REL_TOL)
            + ENTROPY_ABS_TOL
            - (e_new_total + dt * dissipation)
        )
        ledger.update(
            E_old=e_old_total,
            E_new=e_new_total,
            dissipation=dissipation,
            dissipation_heat=d_heat,
            margin=margin,
        )

    return new_state


# ---------------------------------------------------------------------------
# full run


def initial_state(data) -> LagrangianState:
    """LagrangianState at t=0 from a Lagrangian data object (fields x, v0,
    u0, e0, r0)."""
    return LagrangianState(
        t=0.0,
        a=float(data.r0[0]),
        x=data.x,
        v=data.v0,
        u=data.u0,
        e=data.e0,
        r=data.r0,
    )


def run(data, params: FluidParams, cfg: SolverConfig) -> Trajectory:
    """Integrate from t=0 to cfg.T, sampling at cfg's output times.

    Raises RunAborted when dt underflows dt_min through repeated step
    rejections, or (strict mode) when the per-step entropy inequality
    fails beyond tolerance.
    """
    if len(data.x) - 1 != cfg.N:
        raise ValueError(
            f"config N={cfg.N} does not match the data grid ({len(data.x) - 1} intervals)"
        )
    state = initial_state(data)
    out_times = cfg.resolved_output_times()
    samples: list[LagrangianState] = []
    cum_samples: list[float] = []
    cum_diss = 0.0
    if out_times and out_times[0] == 0.0:
        state.validate(params.n)
        samples.append(state)
        cum_samples.append(0.0)
        pending = list(out_times[1:])
    else:
        pending = list(out_times)

    dt_history: list[float] = []
    n_rejected = 0
    entropy_violations = 0
    min_margin = math.inf
    min_e = float(np.min(state.e))
    min_v = float(np.min(state.v))
    t = 0.0

    while t < cfg.T:
        dt = signal_dt(state, params, cfg.cfl)
        if cfg.dt_max is not None:
            dt = min(dt, cfg.dt_max)
        target = pending[0] if pending else cfg.T
        lands = t + dt >= target - 1e-14 * max(1.0, target)
        if lands:
            dt = target - t
        while True:
            ledger: dict = {}
            try:
                new_state = step(state, params, dt, ledger)
            except StepRejected:
                n_rejected += 1
                dt *= 0.5
                lands = False
                if dt < cfg.dt_min:
                    raise RunAborted(
                        f"dt fell below dt_min={cfg.dt_min:g} at t={t:.6g} "
                        "after repeated rejections",
                        last_state=state,
                    ) from None
                continue
            break

        min_margin = min(min_margin, ledger["margin"])
        if ledger["margin"] < 0.0:
            entropy_violations += 1
            msg = (
                f"entropy inequality violated at t={t:.6g}: margin "
                f"{ledger['margin']:.3e}"
            )
            if cfg.mode == "strict":
                raise RunAborted(msg, last_state=state)
            warnings.warn(msg, EntropyWarning, stacklevel=2)

        state = new_state
        cum_diss += dt * ledger["dissipation"]
        if lands:
            # stamp the sample time exactly, avoiding float accumulation
            state = replace(state, t=target)
        t = state.t
        dt_history.append(dt)
        min_e = min(min_e, float(np.min(state.e)))
        min_v = min(min_v, float(np.min(state.v)))
        if lands:
            state.validate(params.n)
            if pending and target == pending[0]:
                samples.append(state)
                cum_samples.append(cum_diss)
                pending.pop(0)

    diagnostics = {
        "n_steps": len(dt_history),
        "n_rejected": n_rejected,
        "dt_history": dt_history,
        "min_entropy_margin": min_margin,
        "entropy_violations": entropy_violations,
        "min_e": min_e,
        "min_v": min_v,
        "cumulative_dissipation": tuple(cum_samples),
    }
    return Trajectory(params=params, config=cfg, states=tuple(samples), diagnostics=diagnostics)
