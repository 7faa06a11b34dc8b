"""Weak-form residuals of the fixed-frame equations on sampled profiles.

The three balance laws (mass, momentum, total energy) each have an
integral identity against smooth compactly supported test functions: the
difference of the tested field between two times equals the time integral
of transport terms plus, for momentum and energy, diffusive flux pairings.
This module evaluates those identities by tensor trapezoid quadrature in
(r, t) on a time-ordered list of profiles sharing one radial grid, and
reports the absolute defect normalized by the largest displayed term.

Test functions are separable, phi(r, t) = A(r) B(t), built from polynomial
bumps and smoothstep plateaus. Two boundary classes are distinguished: the
general class may be nonzero at the inner radius, while the restricted
class vanishes there for all times; the momentum identity is only valid
against the restricted class, and evaluation enforces that.

Time quadrature detail: terms pairing a field with the time derivative of
phi are integrated with exact increments of B, so fields constant in time
drop out of the identity to round-off rather than to sampling order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eulerian import RadialProfile
from .initial_data import smoothstep
from .solver import FluidParams

__all__ = [
    "EQUATIONS",
    "TestFunction",
    "standard_test_functions",
    "weak_defect",
    "weak_residual",
    "residual_table",
    "write_residual_csv",
]

EQUATIONS = ("continuity", "momentum", "energy")
_KINDS = ("bump_product", "polynomial_cutoff")
_CLASSES = ("D_a", "D0_a")


def _poly_bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = (1.0 - s[inside] ** 2) ** 4
    return out


def _poly_bump_deriv(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = -8.0 * s[inside] * (1.0 - s[inside] ** 2) ** 3
    return out


def _smoothstep_deriv(s) -> np.ndarray:
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return 30.0 * s**2 * (1.0 - s) ** 2


@dataclass(frozen=True)
class TestFunction:
    """Separable test function A(r) B(t).

    kind 'bump_product': A is a polynomial bump supported on
    [center_r - width_r, center_r + width_r], B the same shape in t.
    kind 'polynomial_cutoff': A is a smoothstep plateau over the same
    support (edges take the outer half-width each side), and B falls
    smoothly from 1 at t = center_t to 0 at t = center_t + width_t.

    boundary_class 'D0_a' declares that A vanishes at the inner radius;
    evaluation against the momentum identity verifies the declaration.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    kind: str
    center: tuple[float, float]
    widths: tuple[float, float]
    boundary_class: str

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.boundary_class not in _CLASSES:
            raise ValueError(
                f"boundary_class must be one of {_CLASSES}, got {self.boundary_class!r}"
            )
        if not (self.widths[0] > 0.0 and self.widths[1] > 0.0):
            raise ValueError(f"widths must be positive, got {self.widths}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "widths", (float(self.widths[0]), float(self.widths[1])))

    @property
    def label(self) -> str:
        short = "bump" if self.kind == "bump_product" else "plateau"
        return f"{short}_r{self.center[0]:.3g}_w{self.widths[0]:.3g}_{self.boundary_class}"

    @property
    def support_r(self) -> tuple[float, float]:
        return (self.center[0] - self.widths[0], self.center[0] + self.widths[0])

    def space_value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        c, w = self.center[0], self.widths[0]
        if self.kind == "bump_product":
            return _poly_bump((r - c) / w)
        edge = 0.5 * w
        rise = smoothstep((r - (c - w)) / edge)
        fall = smoothstep(((c + w) - r) / edge)
        return rise * fall

    def space_deriv(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        c, w = self.center[0], self.widths[0]
        if self.kind == "bump_product":
            return _poly_bump_deriv((r - c) / w) / w
        edge = 0.5 * w
        s_rise = (r - (c - w)) / edge
        s_fall = ((c + w) - r) / edge
        rise = smoothstep(s_rise)
        fall = smoothstep(s_fall)
        return (_smoothstep_deriv(s_rise) * fall - rise * _smoothstep_deriv(s_fall)) / edge

    def time_value(self, t: float) -> float:
        tc, wt = self.center[1], self.widths[1]
        if self.kind == "bump_product":
            return float(_poly_bump(np.array([(t - tc) / wt]))[0])
        return float(1.0 - smoothstep(np.array([(t - tc) / wt]))[0])

    def time_deriv(self, t: float) -> float:
        tc, wt = self.center[1], self.widths[1]
        if self.kind == "bump_product":
            return float(_poly_bump_deriv(np.array([(t - tc) / wt]))[0]) / wt
        return float(-_smoothstep_deriv(np.array([(t - tc) / wt]))[0]) / wt

    def __call__(self, r, t: float):
        return self.space_value(r) * self.time_value(t)


def standard_test_functions(a: float, r_hi: float, t_end: float) -> list[TestFunction]:
    """Fixed catalog of 12: three centers, two widths, both boundary
    classes.

    Centers and widths scale with the radial window [a, r_hi]; the wide
    members use the plateau kind, the narrow ones the bump kind, and the
    widest inner member of the general class deliberately overlaps the
    inner radius. Restricted-class members shrink their width so the
    support stays inside (a, infinity).
    """
    if not (r_hi > a and t_end > 0.0):
        raise ValueError(f"need r_hi > a and t_end > 0, got a={a}, r_hi={r_hi}, t_end={t_end}")
    span = r_hi - a
    centers = [a + f * span for f in (0.25, 0.55, 0.8)]
    widths = [0.28 * span, 0.14 * span]
    out = []
    for c in centers:
        for w in widths:
            kind = "polynomial_cutoff" if w == widths[0] else "bump_product"
            if kind == "bump_product":
                t_span = (0.5 * t_end, 0.8 * t_end)
            else:
                t_span = (0.0, t_end)
            for cls in _CLASSES:
                w_eff = w if cls == "D_a" else min(w, 0.9 * (c - a))
                out.append(
                    TestFunction(kind=kind, center=(c, t_span[0]), widths=(w_eff, t_span[1]), boundary_class=cls)
                )
    return out


def _common_grid(profiles) -> np.ndarray:
    if len(profiles) < 2:
        raise ValueError("need at least two time samples to evaluate an identity")
    r = profiles[0].r
    for p in profiles[1:]:
        if not np.array_equal(p.r, r):
            raise ValueError("profiles must share a common radial grid")
    times = [p.t for p in profiles]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("profile times must be strictly increasing")
    return r


def _assemble(profiles, eq: str, phi, params: FluidParams) -> tuple[float, float]:
    """Signed left-minus-right of one identity plus the largest displayed
    term, both unnormalized."""
    if eq not in EQUATIONS:
        raise ValueError(f"eq must be one of {EQUATIONS}, got {eq!r}")
    r = _common_grid(profiles)
    if phi.support_r[1] > float(r[-1]) * (1.0 + 1e-12):
        raise ValueError(
            f"test function support reaches {phi.support_r[1]:g}, beyond the grid end {r[-1]:g}"
        )
    if eq == "momentum":
        if phi.boundary_class != "D0_a":
            raise ValueError(
                "momentum identity requires the restricted boundary class, got "
                f"{phi.boundary_class!r}"
            )
        if float(np.atleast_1d(phi.space_value(r[0]))[0]) != 0.0:
            raise ValueError(
                "test function declared restricted but does not vanish at the inner radius"
            )

    m = params.n - 1
    rm = r ** float(m)
    A = phi.space_value(r)
    dA = phi.space_deriv(r)
    times = np.array([p.t for p in profiles])
    B = np.array([phi.time_value(t) for t in times])

    def tested(field_rows):
        # spatial integrals of field * A * r^m at each sample
        return np.array([float(np.trapezoid(row * A * rm, r)) for row in field_rows])

    def time_trapz(values):
        return float(np.trapezoid(values, times))

    def increment_pair(sampled):
        # sum of (field average) * (B increment): exact for time-constant fields
        mid = 0.5 * (sampled[:-1] + sampled[1:])
        return float(np.sum(mid * np.diff(B)))

    rho = [p.rho for p in profiles]
    u = [p.u for p in profiles]
    e = [p.e for p in profiles]
    du = [np.gradient(p.u, r, edge_order=2) for p in profiles]

    if eq == "continuity":
        S = tested(rho)
        lhs_end = S[-1] * B[-1]
        lhs_0 = S[0] * B[0]
        t_dt = increment_pair(S)
        adv = np.array(
            [float(np.trapezoid(rho[j] * u[j] * dA * rm, r)) * B[j] for j in range(len(profiles))]
        )
        t_adv = time_trapz(adv)
        rhs = t_dt + t_adv
        return lhs_end - lhs_0 - rhs, max(abs(lhs_end), abs(lhs_0), abs(rhs))

    if eq == "momentum":
        beta = params.beta
        S = tested([rho[j] * u[j] for j in range(len(profiles))])
        lhs_end = S[-1] * B[-1]
        lhs_0 = S[0] * B[0]
        t_dt = increment_pair(S)
        adv = np.array(
            [
                float(np.trapezoid(rho[j] * u[j] ** 2 * dA * rm, r)) * B[j]
                for j in range(len(profiles))
            ]
        )
        conv = t_dt + time_trapz(adv)
        # The pairing (d_r phi + m phi / r) r^m is the exact derivative of
        # phi r^m, so any constant in the pressure integrates to zero in the
        # continuum; subtracting the far-field pressure removes that pure
        # quadrature noise and makes the constant state exact.
        p_ref = params.gamma - 1.0
        pairing = dA + m * A / r
        flux_rows = np.array(
            [
                float(
                    np.trapezoid(
                        (
                            (params.gamma - 1.0) * rho[j] * e[j] - p_ref
                            - beta * (du[j] + m * u[j] / r)
                        )
                        * pairing
                        * rm,
                        r,
                    )
                )
                * B[j]
                for j in range(len(profiles))
            ]
        )
        flux = time_trapz(flux_rows)
        defect = lhs_end - lhs_0 - conv - flux
        return defect, max(abs(lhs_end), abs(lhs_0), abs(conv), abs(flux))

    de = [np.gradient(p.e, r, edge_order=2) for p in profiles]
    En = [0.5 * u[j] ** 2 + e[j] for j in range(len(profiles))]
    S = tested([rho[j] * En[j] for j in range(len(profiles))])
    lhs_end = S[-1] * B[-1]
    lhs_0 = S[0] * B[0]
    t_dt = increment_pair(S)
    adv = np.array(
        [
            float(
                np.trapezoid(
                    (rho[j] * En[j] + (params.gamma - 1.0) * rho[j] * e[j])
                    * u[j]
                    * dA
                    * rm,
                    r,
                )
            )
            * B[j]
            for j in range(len(profiles))
        ]
    )
    transport = t_dt + time_trapz(adv)
    flux_rows = np.array(
        [
            float(
                np.trapezoid(
                    (
                        2.0 * params.mu * u[j] * du[j]
                        + params.lam * u[j] * (du[j] + m * u[j] / r)
                        + params.kappa * de[j]
                    )
                    * dA
                    * rm,
                    r,
                )
            )
            * B[j]
            for j in range(len(profiles))
        ]
    )
    flux = time_trapz(flux_rows)
    defect = lhs_end - lhs_0 - transport + flux
    return defect, max(abs(lhs_end), abs(lhs_0), abs(transport), abs(flux))


def weak_defect(profiles, eq: str, phi, params: FluidParams) -> float:
    """Signed, unnormalized left-minus-right of one identity.

    Linear in the test function for fixed fields, which makes it the
    right quantity for additivity checks; `weak_residual` is its absolute
    value normalized by the largest displayed term.
    """
    return _assemble(profiles, eq, phi, params)[0]


def weak_residual(profiles, eq: str, phi, params: FluidParams) -> float:
    """Normalized defect of one weak identity between the first and last
    samples.

    Returns |left - right| / max(|displayed terms|); zero when every
    term vanishes. The momentum identity requires the restricted
    boundary class, and the declared class is verified against the
    grid's inner node.
    """
    defect, scale = _assemble(profiles, eq, phi, params)
    return abs(defect) / scale if scale > 0.0 else 0.0


def residual_table(profiles_by_resolution: dict, params: FluidParams, phis=None) -> list[dict]:
    """Rows {eq, phi_id, N, residual} over every valid pairing.

    The momentum identity is evaluated only against restricted-class
    members. Rows are ordered by equation, then catalog order, then
    resolution, so the table is reproducible.
    """
    resolutions = sorted(profiles_by_resolution)
    if phis is None:
        profiles = profiles_by_resolution[resolutions[0]]
        r = profiles[0].r
        r_hi = min(p.r_edge for p in profiles)
        phis = standard_test_functions(float(r[0]), 0.85 * r_hi, float(profiles[-1].t))
    rows = []
    for eq in EQUATIONS:
        for phi in phis:
            if eq == "momentum" and phi.boundary_class != "D0_a":
                continue
            for N in resolutions:
                res = weak_residual(profiles_by_resolution[N], eq, phi, params)
                rows.append({"eq": eq, "phi_id": phi.label, "N": N, "residual": res})
    return rows


def write_residual_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("eq,phi_id,N,residual\n")
        for row in rows:
            fh.write(f"{row['eq']},{row['phi_id']},{row['N']},{row['residual']:.17g}\n")
