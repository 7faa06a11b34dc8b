"""Convex scalar kernel: entropy weight functions, branch inverses, bounds.

Three strictly convex functions on (0, inf) drive every quantitative bound
in this package:

    G(z)   = 1 - z + z*log(z)      root at z=1, grows like z*log z
    Psi(z) = z - 1 - log(z)        root at z=1, blows up at 0+
    H(z)   = z*log(z)              minimum -1/e at z=1/e

Each is monotone on either side of its minimum, so each has a left and a
right branch inverse. On top of those inverses sit two families of closed
formulas:

  * envelope_bounds: a time-dependent corridor [v_lower, v_upper] which the
    specific volume of any admissible flow must stay inside, away from the
    inner boundary;
  * omega_bounds: "small set" bound functions f1, f2, f3 and their
    compositions omega1, omega2, which convert a weighted measure of a set
    into a bound on the mass / internal energy that set can carry.

Everything here is a pure function of Python floats. No state, no arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "ConvexFnId",
    "EnvelopeParams",
    "convex_eval",
    "branch_inverse",
    "envelope_bounds",
    "omega_bounds",
]

_INV_E = math.exp(-1.0)

# Smallest positive double. Used to keep "positive" postconditions honest
# when the exact value of a formula underflows float64.
_TINY = 5e-324

# Above this argument the branch inverses switch from bracketed bisection to
# asymptotic fixed-point iterations (direct bracketing would need thousands
# of doublings, and the left inverse of Psi leaves the representable range).
_ASYMPTOTIC_CUTOFF = 700.0

_BISECT_WIDTH = 1e-14
_NEWTON_STEPS = 5


class ConvexFnId(Enum):
    """Identifies one of the three convex weight functions."""

    G = "G"
    Psi = "Psi"
    H = "H"


_ARGMIN = {
    ConvexFnId.G: 1.0,
    ConvexFnId.Psi: 1.0,
    ConvexFnId.H: _INV_E,
}

_MIN_VALUE = {
    ConvexFnId.G: 0.0,
    ConvexFnId.Psi: 0.0,
    ConvexFnId.H: -_INV_E,
}


def convex_eval(fn: ConvexFnId, zeta: float) -> float:
    """Evaluate one of the convex weight functions at zeta > 0."""
    zeta = float(zeta)
    if not zeta > 0.0:
        raise ValueError(f"convex_eval requires zeta > 0, got {zeta}")
    log_z = math.log(zeta)
    if fn is ConvexFnId.G:
        return 1.0 - zeta + zeta * log_z
    if fn is ConvexFnId.Psi:
        return zeta - 1.0 - log_z
    if fn is ConvexFnId.H:
        return zeta * log_z
    raise ValueError(f"unknown convex function id: {fn!r}")


def _convex_deriv(fn: ConvexFnId, zeta: float) -> float:
    log_z = math.log(zeta)
    if fn is ConvexFnId.G:
        return log_z
    if fn is ConvexFnId.Psi:
        return 1.0 - 1.0 / zeta
    return 1.0 + log_z  # H


def _newton_polish(fn: ConvexFnId, y: float, zeta: float, lo: float, hi: float) -> float:
    """Up to _NEWTON_STEPS guarded Newton steps, kept inside [lo, hi]."""
    best = zeta
    best_res = abs(convex_eval(fn, zeta) - y)
    for _ in range(_NEWTON_STEPS):
        d = _convex_deriv(fn, best)
        if d == 0.0 or not math.isfinite(d):
            break
        trial = best - (convex_eval(fn, best) - y) / d
        if not (lo <= trial <= hi) or trial <= 0.0:
            break
        res = abs(convex_eval(fn, trial) - y)
        if res >= best_res:
            break
        best, best_res = trial, res
    return best


def _bisect(fn: ConvexFnId, y: float, lo: float, hi: float, increasing: bool) -> float:
    """Bisection for convex_eval(fn, .) = y on a monotone bracket.

    Refines to absolute bracket width 1e-14 and keeps going while the
    midpoint residual is still large relative to y (roots close to zero
    need the extra relative refinement), stopping at float resolution.
    """
    res_goal = 1e-13 * max(1.0, abs(y))
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # hit float resolution
            break
        res = convex_eval(fn, mid) - y
        if hi - lo <= _BISECT_WIDTH and abs(res) <= res_goal:
            break
        if (res < 0.0) == increasing:
            lo = mid
        else:
            hi = mid
    return _newton_polish(fn, y, 0.5 * (lo + hi), lo, hi)


def _asymptotic_right_inverse(fn: ConvexFnId, y: float) -> float:
    """Right-branch inverse for large y without bracket growth.

    Fixed-point forms of convex_eval(fn, z) = y, each contractive for
    y > _ASYMPTOTIC_CUTOFF, followed by guarded Newton.
    """
    if fn is ConvexFnId.Psi:
        # z - 1 - log z = y  =>  z = y + 1 + log z
        z = y + 1.0 + math.log(y + 1.0)
        for _ in range(8):
            z = y + 1.0 + math.log(z)
    elif fn is ConvexFnId.G:
        # 1 - z + z log z = y  =>  z (log z - 1) = y - 1
        z = y
        for _ in range(16):
            z = (y - 1.0) / (math.log(z) - 1.0)
    else:
        # z log z = y  =>  z = y / log z
        z = y / math.log(y)
        for _ in range(16):
            z = y / math.log(z)
    for _ in range(_NEWTON_STEPS):
        d = _convex_deriv(fn, z)
        step = (convex_eval(fn, z) - y) / d
        z_new = z - step
        if z_new <= 0.0 or not math.isfinite(z_new):
            break
        z = z_new
        if abs(step) <= 1e-16 * z:
            break
    return z


def branch_inverse(fn: ConvexFnId, branch: str, y: float) -> float:
    """Invert a convex weight function on one monotone branch.

    branch is "left" (solution <= argmin) or "right" (solution >= argmin).
    The result zeta satisfies convex_eval(fn, zeta) = y to absolute residual
    <= 1e-12 throughout the representable range (for arguments so extreme
    that the true value under- or overflows float64, the nearest
    representable positive value is returned).
    """
    y = float(y)
    if branch not in ("left", "right"):
        raise ValueError(f"branch must be 'left' or 'right', got {branch!r}")
    if fn is ConvexFnId.H and branch == "left":
        raise ValueError("left branch of H is not supported")
    min_val = _MIN_VALUE[fn]
    argmin = _ARGMIN[fn]
    if y < min_val:
        raise ValueError(
            f"{y} is below the minimum {min_val} of {fn.value}; no real inverse"
        )
    if y == min_val:
        return argmin
    if fn is ConvexFnId.G and branch == "left" and y >= 1.0:
        # G decreases from sup 1 (not attained) at 0+ down to 0 at 1, so the
        # left-branch range is [0, 1).
        raise ValueError(f"left branch of G has range [0, 1), got y={y}")

    if branch == "right":
        if y > _ASYMPTOTIC_CUTOFF:
            return _asymptotic_right_inverse(fn, y)
        lo, hi = argmin, 2.0 * argmin
        while convex_eval(fn, hi) < y:
            lo, hi = hi, 2.0 * hi
        return _bisect(fn, y, lo, hi, increasing=True)

    # Left branches of G and Psi: decreasing toward the argmin at 1.
    if fn is ConvexFnId.Psi and y > _ASYMPTOTIC_CUTOFF:
        # z - 1 - log z = y with z in (0,1]: z = exp(z - 1 - y) ~ exp(-1-y),
        # which underflows well before the cutoff matters.
        return max(math.exp(-1.0 - y), _TINY)
    lo, hi = 0.5 * argmin, argmin
    while convex_eval(fn, lo) < y:
        hi, lo = lo, 0.5 * lo
        if lo < _TINY:
            return _TINY
    return _bisect(fn, y, lo, hi, increasing=False)


@dataclass(frozen=True)
class EnvelopeParams:
    """Inputs of the specific-volume corridor formulas.

    a     inner boundary radius, 0 < a < 1
    C0    entropy constant of the initial data, > 0
    n     spatial dimension, integer >= 2
    m     n - 1 (stored explicitly, validated)
    beta  combined viscosity 2*mu + lambda, > 0
    """

    a: float
    C0: float
    n: int
    m: int
    beta: float

    def __post_init__(self) -> None:
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"a must lie in (0,1), got {self.a}")
        if not self.C0 > 0.0:
            raise ValueError(f"C0 must be positive, got {self.C0}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if self.m != self.n - 1:
            raise ValueError(f"m must equal n-1, got m={self.m}, n={self.n}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")


def _exp(x: float) -> float:
    """exp that saturates at +inf instead of raising OverflowError."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def envelope_bounds(p: EnvelopeParams, z: float, t: float) -> tuple[float, float]:
    """Corridor [v_lower, v_upper] for the specific volume.

    z is the mass-coordinate offset from the inner boundary at which the
    corridor is anchored (the bounds are valid at all mass coordinates
    >= z); t is time. Returns (v_lower, v_upper) with 0 < v_lower <=
    v_upper; v_upper is nondecreasing and v_lower nonincreasing in t.
    """
    z = float(z)
    t = float(t)
    if not z > 0.0:
        raise ValueError(f"envelope_bounds requires z > 0, got {z}")
    if t < 0.0:
        raise ValueError(f"envelope_bounds requires t >= 0, got {t}")

    a, C0, n, m, beta = p.a, p.C0, p.n, p.m, p.beta
    psi_left = branch_inverse(ConvexFnId.Psi, "left", C0 / z)
    h = (a**n + n * z * psi_left) ** (-2.0 * m / n)
    f = _exp(C0 * h)
    gamma_factor = _exp(-(m * C0 * t / beta) * h ** (n / (2.0 * m)))

    v_upper = (
        C0
        * (1.0 + t) ** 2
        * f
        * _exp(C0 * t * f + C0 * (1.0 + t) * h * f * _exp(C0 * t * f))
    )
    v_lower = C0 / (1.0 + t) / f * _exp(-t * C0 * f * f) * gamma_factor
    if not v_lower > 0.0:  # exact value underflowed
        v_lower = _TINY
    if math.isnan(v_upper):  # inf * 0 from saturated factors
        v_upper = math.inf
    return v_lower, v_upper


_OMEGA_KINDS = ("f1", "f2", "f3", "omega1", "omega2")


def _small_set_bound(which: str, y: float, z: float) -> float:
    """f1, f2 or f3 evaluated at set measure y > 0 with parameter z."""
    big_y = z / y
    if big_y > _ASYMPTOTIC_CUTOFF:
        if which == "f1":
            return y * _asymptotic_right_inverse(ConvexFnId.G, big_y)
        if which == "f2":
            # y*inv(big_y) - z == y*(inv - big_y) == y*(1 + log inv),
            # cancellation-free for inv solving z - 1 - log z = big_y.
            inv = _asymptotic_right_inverse(ConvexFnId.Psi, big_y)
            return y * (1.0 + math.log(inv))
        inv = _asymptotic_right_inverse(ConvexFnId.H, big_y)
        return y * inv
    if which == "f1":
        return y * branch_inverse(ConvexFnId.G, "right", big_y)
    if which == "f2":
        return y * branch_inverse(ConvexFnId.Psi, "right", big_y) - z
    return y * branch_inverse(ConvexFnId.H, "right", big_y)


def omega_bounds(set_measure: float, z: float, which: str) -> float:
    """Small-set bound functions and their compositions.

    set_measure is the radially weighted measure of a set (integral of r^m
    over it); z is the entropy budget parameter. which selects:

        f1      y * Ginv_right(z/y)            at y = set_measure
        f2      y * Psiinv_right(z/y) - z      at y = set_measure
        f3      y * Hinv_right(z/y)            at y = set_measure
        omega1  f1(set_measure; z)
        omega2  f2(omega1(set_measure; z); z)

    All are nonnegative, nondecreasing in set_measure, and vanish as
    set_measure -> 0 (returned exactly 0 at set_measure == 0).
    """
    set_measure = float(set_measure)
    z = float(z)
    if set_measure < 0.0:
        raise ValueError(f"set_measure must be >= 0, got {set_measure}")
    if not z > 0.0:
        raise ValueError(f"omega_bounds requires z > 0, got {z}")
    if which not in _OMEGA_KINDS:
        raise ValueError(f"which must be one of {_OMEGA_KINDS}, got {which!r}")
    if set_measure == 0.0:
        return 0.0
    if which == "omega1":
        return _small_set_bound("f1", set_measure, z)
    if which == "omega2":
        omega1 = _small_set_bound("f1", set_measure, z)
        if omega1 == 0.0:
            return 0.0
        return _small_set_bound("f2", omega1, z)
    return _small_set_bound(which, set_measure, z)
