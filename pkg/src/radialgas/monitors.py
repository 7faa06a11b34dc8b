"""Runtime verification of the a-priori estimates on solver output.

Every explicit bound the scheme is supposed to respect is evaluated here,
on stored states and trajectories, independently of the integrator's own
per-step bookkeeping: the entropy functional and its three dissipation
channels, the radius corridor along particle paths, the specific-volume
envelope away from the origin, the per-cell mean-value selections, the
time-integrated sup norms near the symmetry center, the uniform
integrability of mass and energy over small sets, and the weighted
higher-order functional.

Checks come in two modes. "assert" monitors compare against bounds whose
constants are computable from the data (the measured entropy constant);
they return a BoundCheck with the worst margin and its location. "report"
monitors evaluate the left-hand functionals of estimates whose constants
the theory leaves structural; they return the numbers and the scaling
factors they should track, and assert nothing beyond internal consistency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convexity import ConvexFnId, EnvelopeParams, branch_inverse, envelope_bounds, omega_bounds
from .eulerian import RadialProfile, eulerian_profile
from .solver import FluidParams, LagrangianState, Trajectory, discrete_entropy, trapezoid_weights

__all__ = [
    "EntropyReport",
    "BoundCheck",
    "time_ramp",
    "entropy_functional",
    "entropy_series",
    "check_entropy_inequality",
    "check_path_bounds",
    "check_envelope",
    "cell_mean_values",
    "check_cells",
    "sup_estimates",
    "eulerian_entropy",
    "uniform_integrability",
    "high_order_functional",
    "c0_monotone_sweep",
    "standard_monitor_report",
]

# Tolerances of the trajectory-level entropy cross-check: relative slack on
# the initial value plus an absolute floor.
INEQUALITY_REL_TOL = 1e-8
INEQUALITY_ABS_TOL = 1e-12


def time_ramp(t):
    """Weight min(1, t) used by the time-degenerate norms; 0 at t=0, 1
    from t=1 on."""
    return np.minimum(1.0, np.asarray(t, dtype=float)) if np.ndim(t) else min(1.0, float(t))


def _psi(z: np.ndarray) -> np.ndarray:
    return z - 1.0 - np.log(z)


def _G(z: np.ndarray) -> np.ndarray:
    return 1.0 - z + z * np.log(z)


def _half(arr: np.ndarray) -> np.ndarray:
    return 0.5 * (arr[:-1] + arr[1:])


def _psi_inv_left(values: np.ndarray) -> np.ndarray:
    return np.array([branch_inverse(ConvexFnId.Psi, "left", y) for y in np.ravel(values)]).reshape(
        np.shape(values)
    )


@dataclass(frozen=True)
class EntropyReport:
    """Entropy functional of one state plus its dissipation channels.

    E            quadrature of u^2/2 + psi(e) + (gamma-1) psi(v)
    D_heat       conduction channel, weight kappa
    D_visc_bulk  compression channel, weight lam + 2 mu / n
    D_visc_shear deviatoric channel, weight 2 m mu
    C0           entropy constant of the run's data (nan if not supplied)
    cumulative   time integral of the scheme's dissipation up to t
                 (nan if not supplied)

    The three channels are half-cell quadratures of weighted squares, so
    they are nonnegative by construction; E is a sum of nonnegative terms.
    """

    t: float
    E: float
    D_heat: float
    D_visc_bulk: float
    D_visc_shear: float
    C0: float = math.nan
    cumulative: float = math.nan

    def __post_init__(self) -> None:
        if not self.E >= 0.0:
            raise ValueError(f"entropy functional must be nonnegative, got {self.E}")
        for name in ("D_heat", "D_visc_bulk", "D_visc_shear"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def dissipation(self) -> float:
        return self.D_heat + self.D_visc_bulk + self.D_visc_shear


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one assert-mode monitor.

    margin is the smallest slack found (negative on violation) and
    location is the (x or r, t) pair where it occurred; the first entry is
    nan for bounds that are global in space.
    """

    name: str
    satisfied: bool
    margin: float
    location: tuple[float, float]

    def __post_init__(self) -> None:
        if math.isnan(self.margin):
            raise ValueError("margin must not be nan")
        if (self.margin >= 0.0) != self.satisfied:
            raise ValueError(
                f"satisfied={self.satisfied} inconsistent with margin={self.margin:g}"
            )
        object.__setattr__(self, "location", (float(self.location[0]), float(self.location[1])))

    def report(self, mode: str = "assert", value=None) -> dict:
        """Dict following the shared monitor report schema."""
        loc = [None if math.isnan(c) else c for c in self.location]
        return {
            "monitor": self.name,
            "mode": mode,
            "satisfied": bool(self.satisfied),
            "margin": self.margin,
            "worst_location": loc,
            "value": value,
        }


# ---------------------------------------------------------------------------
# entropy functional and the trajectory inequality


def entropy_functional(
    state: LagrangianState,
    params: FluidParams,
    C0: float = math.nan,
    cumulative: float = math.nan,
) -> EntropyReport:
    """Entropy functional and dissipation channels of one state.

    E uses the same trapezoid stencil as the integrator's bookkeeping; the
    channels use half-cell difference quotients, so each is a sum of
    weighted squares.
    """
    dx = state.dx
    n, m = params.n, params.m
    v, u, e, r = state.v, state.u, state.e, state.r

    E = discrete_entropy(v, u, e, params, dx)

    de = np.diff(e) / dx
    drmu = np.diff(r**m * u) / dx
    v_half = _half(v)
    e_half = _half(e)
    r2m_half = _half(r ** (2 * m))

    heat = params.kappa * dx * float(
        np.sum(r2m_half * de**2 / (v_half * (e[:-1] * e[1:])))
    )
    bulk = (params.lam + 2.0 * params.mu / n) * dx * float(
        np.sum(drmu**2 / (v_half * e_half))
    )
    sqrt_n = math.sqrt(n)
    shear_dev = drmu / (v_half * sqrt_n) - sqrt_n * _half(u) / _half(r)
    shear = 2.0 * m * params.mu * dx * float(np.sum((v_half / e_half) * shear_dev**2))

    return EntropyReport(
        t=state.t,
        E=E,
        D_heat=heat,
        D_visc_bulk=bulk,
        D_visc_shear=shear,
        C0=float(C0),
        cumulative=float(cumulative),
    )


def entropy_series(
    trajectory: Trajectory, params: FluidParams, C0: float | None = None
) -> list[EntropyReport]:
    """EntropyReport per stored sample, with cumulative dissipation.

    The cumulative values come from the run diagnostics when present
    (exact per-step accumulation in the scheme's own stencils); otherwise
    they are reconstructed by a time trapezoid of the channel totals over
    the stored samples, which is only as good as the sampling.
    """
    states = trajectory.states
    reports = [entropy_functional(s, params) for s in states]
    if C0 is None:
        C0 = reports[0].E

    recorded = trajectory.diagnostics.get("cumulative_dissipation")
    if recorded is not None and len(recorded) == len(states):
        cums = [float(c) for c in recorded]
    else:
        times = np.array([s.t for s in states])
        totals = np.array([rep.dissipation for rep in reports])
        cums = [float(np.trapezoid(totals[: j + 1], times[: j + 1])) for j in range(len(states))]

    return [
        EntropyReport(
            t=rep.t,
            E=rep.E,
            D_heat=rep.D_heat,
            D_visc_bulk=rep.D_visc_bulk,
            D_visc_shear=rep.D_visc_shear,
            C0=float(C0),
            cumulative=cum,
        )
        for rep, cum in zip(reports, cums)
    ]


def check_entropy_inequality(
    trajectory: Trajectory,
    params: FluidParams,
    C0: float | None = None,
    rel_tol: float = INEQUALITY_REL_TOL,
    abs_tol: float = INEQUALITY_ABS_TOL,
) -> BoundCheck:
    """Assert E(t) + dissipated amount <= E(first sample) at every sample.

    The dissipated amount is taken relative to the first stored sample, so
    trajectories that do not start at t=0 are checked over their own span.
    """
    reports = entropy_series(trajectory, params, C0)
    E0 = reports[0].E
    allowance = E0 * (1.0 + rel_tol) + abs_tol
    margin = math.inf
    t_worst = reports[0].t
    for rep in reports:
        slack = allowance - (rep.E + rep.cumulative - reports[0].cumulative)
        if slack < margin:
            margin = slack
            t_worst = rep.t
    return BoundCheck(
        name="entropy_inequality",
        satisfied=margin >= 0.0,
        margin=margin,
        location=(math.nan, t_worst),
    )


# ---------------------------------------------------------------------------
# pointwise corridors


def check_path_bounds(state: LagrangianState, C0: float, n: int = 3) -> BoundCheck:
    """Particle-path radius corridor at every grid node.

    Lower:  a^n + n x psi_left_inverse(C0/x)  (its x->0 limit is a^n).
    Upper:  max(C0, n) (1 + x); the n(1+x) member covers the regime where
    the data constant alone is too small to majorize the far field.
    """
    if not C0 >= 0.0:
        raise ValueError(f"C0 must be nonnegative, got {C0}")
    x, r, a = state.x, state.r, state.a
    rn = r ** float(n)

    lower = np.full_like(x, a ** float(n))
    interior = x > 0.0
    lower[interior] += n * x[interior] * _psi_inv_left(C0 / x[interior])
    upper = max(C0, float(n)) * (1.0 + x)

    slack = np.minimum(rn - lower, upper - rn)
    j = int(np.argmin(slack))
    margin = float(slack[j])
    # degenerate constants (C0 = 0 on rest-state data) pin the lower bound
    # to exact equality with r^n; snap round-off-scale negatives to the
    # equality they represent so the verdict does not flip on ulps
    roundoff = 1e-12 * max(1.0, float(np.max(upper)))
    if -roundoff <= margin < 0.0:
        margin = 0.0
    return BoundCheck(
        name="path_bounds",
        satisfied=margin >= 0.0,
        margin=margin,
        location=(float(x[j]), state.t),
    )


def check_envelope(
    state: LagrangianState, eps: float, C0: float, params: FluidParams
) -> BoundCheck:
    """Specific-volume envelope on the mass range [eps, k].

    The envelope formulas degenerate as C0 -> 0, so the constant is floored
    at 1 before use; with the floor the corridor always contains the rest
    state v=1. Narrowing of the corridor as eps grows is asserted as an
    internal consistency check of the formulas.
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    mask = state.x >= eps
    if not np.any(mask):
        raise ValueError(f"eps={eps:g} leaves no grid nodes; mass range ends at {state.k:g}")

    C0_eff = max(float(C0), 1.0)
    p = EnvelopeParams(a=state.a, C0=C0_eff, n=params.n, m=params.m, beta=params.beta)
    v_lo, v_hi = envelope_bounds(p, eps, state.t)

    v_lo2, v_hi2 = envelope_bounds(p, 2.0 * eps, state.t)
    if v_lo2 < v_lo * (1.0 - 1e-12) or v_hi2 > v_hi * (1.0 + 1e-12):
        raise RuntimeError(
            "envelope corridor failed to narrow when the evaluation point moved outward"
        )

    v = state.v[mask]
    xm = state.x[mask]
    slack = np.minimum(v - v_lo, v_hi - v)
    j = int(np.argmin(slack))
    margin = float(slack[j])
    return BoundCheck(
        name="envelope",
        satisfied=margin >= 0.0,
        margin=margin,
        location=(float(xm[j]), state.t),
    )


# ---------------------------------------------------------------------------
# per-cell mean-value selections


def _cell_slices(state: LagrangianState) -> list[slice]:
    k = state.k
    k_int = int(round(k))
    if k_int < 1 or abs(k - k_int) > 1e-9 * max(1.0, k):
        raise ValueError(f"mass range must span a whole number of unit cells, got k={k:g}")
    x = state.x
    slices = []
    for i in range(1, k_int + 1):
        j0 = int(np.searchsorted(x, i - 1.0 - 1e-12, side="left"))
        j1 = int(np.searchsorted(x, i + 1e-12, side="right"))
        if j1 - j0 < 2:
            raise ValueError(f"cell [{i - 1}, {i}] holds fewer than two grid nodes")
        slices.append(slice(j0, j1))
    return slices


def cell_mean_values(
    state: LagrangianState, C0: float, params: FluidParams
) -> list[tuple[float, float, float, float]]:
    """Per unit mass cell, points where v and e sit in their mean-value
    brackets.

    Returns one tuple (x_v, x_e, v_value, e_value) per cell [i-1, i]: the
    grid node whose v lies inside [psi_left_inv(C0/(gamma-1)),
    psi_right_inv(C0/(gamma-1))] closest to the cell average of v, and the
    analogous node for e with bracket level C0. Entries are nan when no
    node of the cell lands in the bracket, which check_cells reports as a
    violation rather than raising.
    """
    if not C0 >= 0.0:
        raise ValueError(f"C0 must be nonnegative, got {C0}")
    y_v = C0 / (params.gamma - 1.0)
    lo_v = branch_inverse(ConvexFnId.Psi, "left", y_v)
    hi_v = branch_inverse(ConvexFnId.Psi, "right", y_v)
    lo_e = branch_inverse(ConvexFnId.Psi, "left", C0)
    hi_e = branch_inverse(ConvexFnId.Psi, "right", C0)

    out = []
    for sl in _cell_slices(state):
        xs = state.x[sl]
        width = xs[-1] - xs[0]
        row = []
        for field, lo, hi in ((state.v, lo_v, hi_v), (state.e, lo_e, hi_e)):
            vals = field[sl]
            mean = float(np.trapezoid(vals, xs) / width)
            inside = (vals >= lo) & (vals <= hi)
            if np.any(inside):
                idx = np.nonzero(inside)[0]
                pick = idx[int(np.argmin(np.abs(vals[idx] - mean)))]
                row.append((float(xs[pick]), float(vals[pick])))
            else:
                row.append((math.nan, math.nan))
        (x_v, v_val), (x_e, e_val) = row
        out.append((x_v, x_e, v_val, e_val))
    return out


def check_cells(state: LagrangianState, C0: float, params: FluidParams) -> BoundCheck:
    """Assert every unit cell yields both mean-value selections.

    The margin is the worst, over cells and over the two fields, of the
    best bracket slack any node of the cell achieves; a cell with no
    admissible node contributes its (negative) distance to the bracket.
    """
    y_v = C0 / (params.gamma - 1.0)
    brackets = (
        (state.v, branch_inverse(ConvexFnId.Psi, "left", y_v), branch_inverse(ConvexFnId.Psi, "right", y_v)),
        (state.e, branch_inverse(ConvexFnId.Psi, "left", C0), branch_inverse(ConvexFnId.Psi, "right", C0)),
    )
    margin = math.inf
    worst_x = state.x[0]
    for i, sl in enumerate(_cell_slices(state), start=1):
        for field, lo, hi in brackets:
            vals = field[sl]
            best = float(np.max(np.minimum(vals - lo, hi - vals)))
            if best < margin:
                margin = best
                worst_x = i - 0.5
    # C0 = 0 collapses both brackets to the single point 1, where fields at
    # working precision sit within ulps; snap those to the equality case
    roundoff = 1e-12 * max(1.0, abs(brackets[0][2]), abs(brackets[1][2]))
    if -roundoff <= margin < 0.0:
        margin = 0.0
    return BoundCheck(
        name="mean_value_cells",
        satisfied=margin >= 0.0,
        margin=margin,
        location=(float(worst_x), state.t),
    )


# ---------------------------------------------------------------------------
# time-integrated sup norms away from the symmetry center


def sup_estimates(trajectory: Trajectory, eta: float) -> dict:
    """Report the time integrals of sup norms over radii >= eta.

    Channels: |u|/sqrt(e), and the positive/negative logarithmic excess of
    e (only the positive one in dimension 2). Each is reported with the
    eta-scaling factor its bound carries; the constants are structural, so
    this monitor asserts nothing.
    """
    states = trajectory.states
    if len(states) < 2:
        raise ValueError("need at least 2 stored samples for the time integrals")
    a = states[0].a
    if not a < eta < 1.0:
        raise ValueError(f"eta must lie in (a, 1) = ({a:g}, 1), got {eta}")
    n = trajectory.params.n

    times = np.array([s.t for s in states])
    sup_u = np.empty(len(states))
    sup_log_hi = np.empty(len(states))
    sup_log_lo = np.empty(len(states))
    for j, s in enumerate(states):
        mask = s.r >= eta
        if not np.any(mask):
            sup_u[j] = sup_log_hi[j] = sup_log_lo[j] = 0.0
            continue
        e = s.e[mask]
        sup_u[j] = float(np.max(np.abs(s.u[mask]) / np.sqrt(e)))
        sup_log_hi[j] = float(np.max(np.log(np.maximum(1.0, e))))
        sup_log_lo[j] = float(np.max(np.log(np.maximum(1.0, 1.0 / e))))

    if n == 3:
        factor_u = eta ** -0.5 + eta**-1.0
        channels = [
            ("u_over_sqrt_e", float(np.trapezoid(sup_u, times)), factor_u),
            ("log_e_above_1", float(np.trapezoid(sup_log_hi, times)), eta**-1.0),
            ("log_e_below_1", float(np.trapezoid(sup_log_lo, times)), eta**-1.0),
        ]
    else:
        channels = [
            ("u_over_sqrt_e", float(np.trapezoid(sup_u, times)), 2.0),
            ("log_e_above_1", float(np.trapezoid(sup_log_hi, times)), 1.0 + math.sqrt(abs(math.log(eta)))),
        ]

    return {
        "monitor": "sup_estimates",
        "mode": "report",
        "eta": eta,
        "n": n,
        "channels": [
            {"name": name, "integral": val, "eta_factor": fac, "ratio": val / fac}
            for name, val, fac in channels
        ],
    }


# ---------------------------------------------------------------------------
# uniform integrability on the fixed frame


def eulerian_entropy(profile: RadialProfile, n: int = 3) -> float:
    """Entropy of a fixed-frame profile: quadrature of
    (rho (u^2/2 + psi(e)) + G(rho)) r^m over the profile grid."""
    if n not in (2, 3):
        raise ValueError(f"n must be 2 or 3, got {n}")
    m = n - 1
    density = (
        profile.rho * (0.5 * profile.u**2 + _psi(profile.e)) + _G(profile.rho)
    ) * profile.r**m
    return float(np.trapezoid(density, profile.r))


def _interval_quadrature(profile: RadialProfile, lo: float, hi: float, n: int):
    """Trapezoid of (r^m, rho r^m, rho e r^m) over [lo, hi], with exact
    interpolated endpoints and the constant-state tail beyond the grid
    handled in closed form."""
    m = n - 1
    r = profile.r
    grid_hi = min(hi, float(r[-1]))
    w = mass = energy = 0.0
    if grid_hi > lo:
        j0 = int(np.searchsorted(r, lo, side="left"))
        j1 = int(np.searchsorted(r, grid_hi, side="right"))
        rs = np.concatenate(([lo], r[j0:j1], [grid_hi]))
        keep = np.concatenate(([True], np.diff(rs) > 0.0))
        rs = rs[keep]
        rho = np.interp(rs, r, profile.rho)
        e = np.interp(rs, r, profile.e)
        rm = rs**m
        w = float(np.trapezoid(rm, rs))
        mass = float(np.trapezoid(rho * rm, rs))
        energy = float(np.trapezoid(rho * e * rm, rs))
    if hi > r[-1]:
        tail_lo = max(lo, float(r[-1]))
        tail = (hi**n - tail_lo**n) / n
        w += tail
        mass += tail
        energy += tail
    return w, mass, energy


def uniform_integrability(
    profile: RadialProfile, intervals, C_T: float, n: int = 3
) -> BoundCheck:
    """Assert the small-set mass and energy bounds on each interval.

    For E = [lo, hi]: the mass integral of rho r^m over E must not exceed
    the first small-set modulus at the weighted measure of E, and the
    energy integral of rho e r^m must not exceed C_T plus the second
    modulus. Both sides use the same quadrature nodes, so the discrete
    inequality inherits from convexity rather than resolution.
    """
    if not C_T >= 0.0:
        raise ValueError(f"C_T must be nonnegative, got {C_T}")
    z = max(float(C_T), 5e-324)
    margin = math.inf
    worst = (profile.r[0], profile.t)
    checked = 0
    for lo, hi in intervals:
        lo = max(float(lo), 0.0)
        hi = float(hi)
        checked += 1
        if hi <= lo:
            continue
        w, mass, energy = _interval_quadrature(profile, lo, hi, n)
        slack_mass = omega_bounds(w, z, "omega1") - mass
        slack_energy = C_T + omega_bounds(w, z, "omega2") - energy
        slack = min(slack_mass, slack_energy)
        if slack < margin:
            margin = slack
            worst = (0.5 * (lo + hi), profile.t)
    if checked == 0:
        raise ValueError("no intervals supplied")
    if not math.isfinite(margin):
        margin = 0.0  # every interval was empty; bounds hold as 0 <= 0
    return BoundCheck(
        name="uniform_integrability",
        satisfied=margin >= 0.0,
        margin=margin,
        location=worst,
    )


# ---------------------------------------------------------------------------
# weighted higher-order functional


def high_order_functional(trajectory: Trajectory, eps: float) -> dict:
    """Report the weighted higher-order functional over mass range
    [eps, k].

    Sup-in-time part: the squared norm of (v-1, u^2, e-1, ramp^(1/2) r^m
    D_x u, ramp r^m D_x e). Time-integrated part: squared norms of r^m D_x
    u, r^m D_x e, r^m u D_x u, ramp^(1/2) D_t u, ramp D_t e, with D_t
    taken as second-order differences across the stored samples. The
    combined value with ramp weights is checked against the same value
    with the weights replaced by 1, which can only be larger.
    """
    states = trajectory.states
    if len(states) < 3:
        raise ValueError(
            f"need at least 3 stored samples for the time derivatives, got {len(states)}"
        )
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    params = trajectory.params
    m = params.m
    x = states[0].x
    dx = states[0].dx
    mask = x >= eps
    if int(np.count_nonzero(mask)) < 2:
        raise ValueError(f"eps={eps:g} leaves fewer than two grid nodes")
    wq = trapezoid_weights(int(np.count_nonzero(mask)), dx)

    times = np.array([s.t for s in states])
    ramps = np.array([time_ramp(t) for t in times])

    u_all = np.stack([s.u for s in states])
    e_all = np.stack([s.e for s in states])
    du_dt = np.gradient(u_all, times, axis=0, edge_order=2)
    de_dt = np.gradient(e_all, times, axis=0, edge_order=2)

    def masked_quad(values: np.ndarray) -> float:
        return float(np.sum(wq * values[mask]))

    sup_w = sup_1 = 0.0
    space_w = np.empty(len(states))
    space_1 = np.empty(len(states))
    flux_sup = 0.0
    flux_sq = np.empty(len(states))
    for j, s in enumerate(states):
        du = np.gradient(s.u, dx, edge_order=2)
        de = np.gradient(s.e, dx, edge_order=2)
        rm = s.r**m
        ramp = ramps[j]

        base = (s.v - 1.0) ** 2 + s.u**4 + (s.e - 1.0) ** 2
        grad_sq = (rm * du) ** 2
        heat_sq = (rm * de) ** 2
        sup_w = max(sup_w, masked_quad(base + ramp * grad_sq + ramp**2 * heat_sq))
        sup_1 = max(sup_1, masked_quad(base + grad_sq + heat_sq))

        transport_sq = (rm * s.u * du) ** 2
        accel_sq = du_dt[j] ** 2
        rate_sq = de_dt[j] ** 2
        common = grad_sq + heat_sq + transport_sq
        space_w[j] = masked_quad(common + ramp * accel_sq + ramp**2 * rate_sq)
        space_1[j] = masked_quad(common + accel_sq + rate_sq)

        drmu = np.gradient(rm * s.u, dx, edge_order=2)
        flux = params.beta * drmu / s.v - (params.gamma - 1.0) * (s.e - s.v) / s.v
        flux_sup = max(flux_sup, float(np.max(np.abs(flux[mask]))))
        flux_sq[j] = masked_quad(flux**2)

    time_w = float(np.trapezoid(space_w, times))
    time_1 = float(np.trapezoid(space_1, times))
    value = sup_w + time_w
    unweighted = sup_1 + time_1
    if value > unweighted * (1.0 + 1e-12) + 1e-12:
        raise RuntimeError("ramp-weighted functional exceeded its unweighted majorant")

    return {
        "monitor": "high_order_functional",
        "mode": "report",
        "eps": eps,
        "value": value,
        "sup_part": sup_w,
        "time_part": time_w,
        "unweighted_value": unweighted,
        "flux_sup": flux_sup,
        "flux_sq_time_integral": float(np.trapezoid(flux_sq, times)),
        "n_samples": len(states),
    }


# ---------------------------------------------------------------------------
# cross-cutting assertions and the assembled report


def c0_monotone_sweep(
    state: LagrangianState, params: FluidParams, C0_values, eps: float
) -> list[dict]:
    """Run the path and envelope checks over increasing entropy constants.

    Once either check passes at some constant it must keep passing for all
    larger ones; a flip back to failing means a formula bug and raises.
    """
    rows = []
    seen_path = seen_env = False
    for C0 in sorted(float(c) for c in C0_values):
        path = check_path_bounds(state, C0, n=params.n)
        env = check_envelope(state, eps, C0, params)
        if seen_path and not path.satisfied:
            raise RuntimeError(f"path bound flipped to failing when C0 grew to {C0:g}")
        if seen_env and not env.satisfied:
            raise RuntimeError(f"envelope flipped to failing when C0 grew to {C0:g}")
        seen_path = seen_path or path.satisfied
        seen_env = seen_env or env.satisfied
        rows.append(
            {
                "C0": C0,
                "path_margin": path.margin,
                "path_satisfied": path.satisfied,
                "envelope_margin": env.margin,
                "envelope_satisfied": env.satisfied,
            }
        )
    return rows


def _random_intervals(rng: np.random.Generator, r_lo: float, r_hi: float, count: int):
    lows = rng.uniform(r_lo, r_hi, size=count)
    highs = rng.uniform(r_lo, r_hi, size=count)
    return np.sort(np.stack([lows, highs]), axis=0).T


def standard_monitor_report(
    trajectory: Trajectory,
    C0: float,
    eps: float = 0.5,
    eta: float | None = None,
    n_intervals: int = 100,
    seed: int = 20260821,
) -> dict:
    """Evaluate the full monitor battery on a trajectory.

    Assert-mode monitors (entropy inequality, path bounds, envelope, cell
    selections, uniform integrability) use the supplied entropy constant,
    which must be the one measured from the run's data: the initial
    entropy alone is normalized differently and makes the path corridor
    spuriously tight. Report-mode monitors (sup estimates, higher-order
    functional) are included when the sampling supports them. Returns
    {"monitors": [...]} with one schema dict each.
    """
    params = trajectory.params
    series = entropy_series(trajectory, params, C0)

    entries = [
        check_entropy_inequality(trajectory, params, C0).report(
            value={
                "E0": series[0].E,
                "samples": [
                    {
                        "t": rep.t,
                        "E": rep.E,
                        "D_heat": rep.D_heat,
                        "D_visc_bulk": rep.D_visc_bulk,
                        "D_visc_shear": rep.D_visc_shear,
                        "cumulative": rep.cumulative,
                    }
                    for rep in series
                ],
            }
        )
    ]

    def worst(checks: list[BoundCheck]) -> BoundCheck:
        return min(checks, key=lambda c: c.margin)

    entries.append(
        worst([check_path_bounds(s, C0, n=params.n) for s in trajectory.states]).report()
    )
    entries.append(
        worst([check_envelope(s, eps, C0, params) for s in trajectory.states]).report()
    )
    entries.append(
        worst([check_cells(s, C0, params) for s in trajectory.states]).report()
    )

    rng = np.random.default_rng(seed)
    checks = []
    C_T = 0.0
    profiles = [eulerian_profile(s) for s in trajectory.states]
    for prof in profiles:
        C_T = max(C_T, eulerian_entropy(prof, params.n))
    for prof in profiles:
        intervals = _random_intervals(rng, float(prof.r[0]), float(prof.r[-1]), n_intervals)
        checks.append(uniform_integrability(prof, intervals, C_T, n=params.n))
    entries.append(worst(checks).report())

    a = trajectory.states[0].a
    if eta is None:
        eta = 0.5 if a < 0.5 else 0.5 * (a + 1.0)
    if len(trajectory.states) >= 2:
        sup = sup_estimates(trajectory, eta)
        entries.append(
            {
                "monitor": sup["monitor"],
                "mode": "report",
                "satisfied": True,
                "margin": None,
                "worst_location": None,
                "value": sup,
            }
        )
    if len(trajectory.states) >= 3:
        high = high_order_functional(trajectory, eps)
        entries.append(
            {
                "monitor": high["monitor"],
                "mode": "report",
                "satisfied": True,
                "margin": None,
                "worst_location": None,
                "value": high,
            }
        )
    return {"monitors": entries}
