"""Tests for the mass-to-radius transform and the far-field extension.

Closed forms come from unit specific volume, where the radius map is
(a^n + n x)^(1/n) exactly.  The mass-consistency identity is verified by
Richardson extrapolation in the data resolution, since the trapezoid
radius reconstruction carries an intrinsic O(dx^2) quadrature offset.
"""

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

from radialgas.eulerian import (
    RadialProfile,
    cutoff_extend,
    eulerian_profile,
    jacobian,
    mass_coordinate,
    pullback,
    write_profile_csv,
)
from radialgas.initial_data import (
    RadialData,
    farfield_cutoff,
    mollify_extend,
    radial_entropy_integral,
    to_lagrangian,
    truncate_farfield,
)
from radialgas.solver import (
    FluidParams,
    LagrangianState,
    SolverConfig,
    initial_state,
    reconstruct_radius,
    run,
)


def _cosbump(r, center, width):
    s = np.clip((np.asarray(r) - center) / width, -1.0, 1.0)
    return np.cos(0.5 * np.pi * s) ** 4


@pytest.fixture(scope="module")
def smooth_trunc():
    """Mid-domain cosine-power bumps in all three fields, truncated at k=4."""
    r = np.linspace(0.0, 4.0, 4097)
    rho = 1.0 + 0.5 * _cosbump(r, 1.5, 0.8)
    u = 0.25 * _cosbump(r, 1.6, 0.8)
    e = 1.0 + 0.3 * _cosbump(r, 1.6, 0.8)
    cstar = max(
        float(np.max(rho)),
        float(1.0 / np.min(rho)),
        float(1.0 / np.min(e)),
        radial_entropy_integral(r, rho, u, e, 3),
        1.0,
    )
    rad = RadialData(r=r, rho0=rho, u0=u, e0=e, Cstar=cstar)
    return truncate_farfield(mollify_extend(rad, 0.1), 4)


@pytest.fixture(scope="module")
def smooth_state(smooth_trunc):
    cache = {}

    def build(N):
        if N not in cache:
            cache[N] = initial_state(to_lagrangian(smooth_trunc, 4, N))
        return cache[N]

    return build


def _unit_v_state(a=0.1, k=2.0, n_intervals=256, e_fn=None, u_fn=None):
    x = np.linspace(0.0, k, n_intervals + 1)
    v = np.ones_like(x)
    u = np.zeros_like(x) if u_fn is None else u_fn(x)
    e = np.ones_like(x) if e_fn is None else e_fn(x)
    r = reconstruct_radius(v, a, x[1] - x[0], 3)
    return LagrangianState(t=0.0, a=a, x=x, v=v, u=u, e=e, r=r)


def test_profile_validation():
    r = np.linspace(0.5, 2.0, 16)
    ones = np.ones_like(r)
    RadialProfile(t=0.0, r=r, rho=ones, u=0 * ones, e=ones, r_edge=1.5)
    with pytest.raises(ValueError):
        RadialProfile(t=0.0, r=r[::-1], rho=ones, u=0 * ones, e=ones, r_edge=1.5)
    bad_rho = ones.copy()
    bad_rho[3] = -0.2
    with pytest.raises(ValueError):
        RadialProfile(t=0.0, r=r, rho=bad_rho, u=0 * ones, e=ones, r_edge=1.5)
    drifting_u = 0.1 * ones
    with pytest.raises(ValueError):
        RadialProfile(t=0.0, r=r, rho=ones, u=drifting_u, e=ones, r_edge=1.5)
    with pytest.raises(ValueError):
        RadialProfile(t=0.0, r=r, rho=ones, u=0 * ones, e=ones, r_edge=0.2)


def test_pullback_constant_state():
    state = _unit_v_state()
    grid = np.linspace(0.1, 1.2 * float(state.r[-1]), 301)
    prof = pullback(state, grid)
    assert np.all(prof.rho == 1.0)
    assert np.all(prof.u == 0.0)
    assert np.all(prof.e == 1.0)
    assert prof.r_edge == float(state.r[-1])


def test_pullback_closed_form_inverse():
    e_fn = lambda x: 1.0 + 0.3 * _cosbump(x, 1.0, 0.5)
    u_fn = lambda x: 0.2 * _cosbump(x, 1.0, 0.4)
    state = _unit_v_state(e_fn=e_fn, u_fn=u_fn)
    prof = pullback(state, state.r)
    assert np.array_equal(prof.e, state.e)
    assert np.array_equal(prof.u, state.u)
    assert np.max(np.abs(prof.rho - 1.0 / state.v)) == 0.0
    # off-node queries: radii of cell midpoints, fields compared analytically
    x_mid = 0.5 * (state.x[:-1] + state.x[1:])[40:200]
    r_mid = (0.1**3 + 3.0 * x_mid) ** (1.0 / 3.0)
    prof_mid = pullback(state, r_mid)
    assert np.max(np.abs(prof_mid.e - e_fn(x_mid))) <= 1e-4
    assert np.max(np.abs(prof_mid.u - u_fn(x_mid))) <= 1e-4


def test_pullback_exterior_fill_and_core_rejection():
    state = _unit_v_state()
    r_edge = float(state.r[-1])
    grid = np.linspace(0.5, 2.0 * r_edge, 97)
    prof = pullback(state, grid)
    outside = grid > r_edge
    assert np.all(prof.rho[outside] == 1.0)
    assert np.all(prof.u[outside] == 0.0)
    assert np.all(prof.e[outside] == 1.0)
    with pytest.raises(ValueError):
        pullback(state, np.linspace(0.05, 1.0, 64))


def test_chain_rule_identity(smooth_state):
    errs = {}
    for N in (1024, 2048):
        st = smooth_state(N)
        prof = pullback(st, st.r)
        de_dr = np.gradient(prof.e, prof.r, edge_order=2)
        w = st.r**2 * np.gradient(st.e, st.dx, edge_order=2) / st.v
        errs[N] = float(np.max(np.abs(de_dr - w)) / np.max(np.abs(w)))
    assert errs[2048] <= 1e-4
    assert errs[1024] <= 1e-3


def test_jacobian_closed_forms():
    state = _unit_v_state(a=1.0, k=2.0, n_intervals=128)
    J = jacobian(state)
    assert J[0] == 1.0
    want = (1.0 + 3.0 * state.x) ** (-2.0 / 3.0)
    assert np.max(np.abs(J - want) / want) <= 1e-12

    state2 = _unit_v_state(a=0.5, k=1.0, n_intervals=64)
    x2 = state2.x
    r2 = np.sqrt(0.25 + 2.0 * x2)
    state2 = LagrangianState(
        t=0.0, a=0.5, x=x2, v=state2.v, u=state2.u, e=state2.e, r=r2
    )
    J2 = jacobian(state2, n=2)
    assert np.max(np.abs(J2 - 1.0 / r2)) <= 1e-14
    with pytest.raises(ValueError):
        jacobian(state, n=4)


def test_jacobian_positive_along_run(smooth_trunc):
    lag = to_lagrangian(smooth_trunc, 4, 128)
    traj = run(lag, FluidParams(), SolverConfig(N=128, T=0.05, output_times=(0.0, 0.025, 0.05)))
    for st in traj.states:
        assert float(np.min(jacobian(st))) > 0.0
        # the extended profile of every stored state passes its own validation
        eulerian_profile(st, n_points=257)


def test_mass_consistency(smooth_trunc):
    # integral of rho r^m up to the radius of mass x0 recovers x0; the raw
    # defect is the O(dx^2) trapezoid-radius offset, removed by one
    # Richardson step in the data resolution
    fractions = (0.25, 0.5, 1.0)
    integrals = {}
    for N in (4096, 8192):
        st = initial_state(to_lagrangian(smooth_trunc, 4, N))
        a = float(st.r[0])
        vals = []
        for f in fractions:
            j = int(f * N)
            r_j = float(st.r[j])

            def quad(M):
                g = np.linspace(a, r_j, M)
                p = pullback(st, g)
                return np.trapezoid(p.rho * g**2, g)

            vals.append((4.0 * quad(32769) - quad(16385)) / 3.0)
        integrals[N] = np.array(vals)
    targets = 4.0 * np.array(fractions)
    raw_coarse = np.max(np.abs(integrals[4096] - targets))
    raw_fine = np.max(np.abs(integrals[8192] - targets))
    assert raw_fine <= 1e-7
    assert raw_fine <= raw_coarse / 3.0
    extrap = integrals[8192] + (integrals[8192] - integrals[4096]) / 3.0
    assert np.max(np.abs(extrap - targets)) <= 1e-8


def test_cutoff_extend_regions(smooth_state):
    st = smooth_state(512)
    r_edge = float(st.r[-1])
    grid = np.linspace(float(st.r[0]), r_edge, 1025)
    prof = pullback(st, grid)
    ext = cutoff_extend(prof)
    inner = ext.r <= r_edge / 2.0
    assert np.array_equal(ext.rho[: inner.sum()], prof.rho[: inner.sum()])
    assert np.array_equal(ext.u[: inner.sum()], prof.u[: inner.sum()])
    j = int(np.argmin(np.abs(ext.r - 0.4 * r_edge)))
    assert ext.e[j] == prof.e[j]
    beyond = ext.r >= r_edge
    assert np.all(ext.rho[beyond] == 1.0)
    assert np.all(ext.u[beyond] == 0.0)
    assert np.all(ext.e[beyond] == 1.0)
    assert float(ext.r[-1]) == pytest.approx(1.5 * r_edge, rel=1e-12)


def test_cutoff_slope_bound_and_time_invariance():
    r_edge = 2.3
    r = np.linspace(0.0, 1.2 * r_edge, 200001)
    phi = farfield_cutoff(r, r_edge)
    slope = np.abs(np.diff(phi) / np.diff(r))
    assert np.max(slope) <= 4.0 / r_edge
    # the cutoff depends on (r, r_edge) only, so it cannot move in time
    assert np.array_equal(phi, farfield_cutoff(r, r_edge))


def test_cutoff_extend_continuity(smooth_state):
    st = smooth_state(512)
    r_edge = float(st.r[-1])
    eps = 1e-6
    seams = np.array(
        [r_edge / 2 - eps, r_edge / 2 + eps, r_edge - eps, r_edge + eps]
    )
    grid = np.unique(np.concatenate([np.linspace(float(st.r[0]), 1.2 * r_edge, 2001), seams]))
    ext = cutoff_extend(pullback(st, grid), r_edge, r_out=1.2 * r_edge)
    for seam in (r_edge / 2.0, r_edge):
        lo = int(np.searchsorted(ext.r, seam - eps))
        hi = int(np.searchsorted(ext.r, seam + eps))
        for field in (ext.rho, ext.u, ext.e):
            assert abs(field[hi] - field[lo]) <= 1e-4


def test_cutoff_extend_errors(smooth_state):
    st = smooth_state(256)
    r_edge = float(st.r[-1])
    grid = np.linspace(float(st.r[0]), r_edge, 257)
    prof = pullback(st, grid)
    with pytest.raises(ValueError):
        cutoff_extend(prof, r_edge=0.05)
    short = pullback(st, np.linspace(float(st.r[0]), 0.8 * r_edge, 129))
    with pytest.raises(ValueError):
        cutoff_extend(short)


def test_roundtrip_interpolation_order(smooth_state):
    errs = {}
    for N in (256, 512):
        st = smooth_state(N)
        grid = np.linspace(float(st.r[0]), float(st.r[-1]), 4 * N + 1)
        prof = pullback(st, grid)
        back_v = 1.0 / PchipInterpolator(prof.r, prof.rho)(st.r)
        back_e = PchipInterpolator(prof.r, prof.e)(st.r)
        errs[N] = max(
            float(np.max(np.abs(back_v - st.v))), float(np.max(np.abs(back_e - st.e)))
        )
    assert errs[512] <= 1e-5
    assert errs[512] <= errs[256] / 3.0


def test_eulerian_profile_defaults_and_csv(tmp_path, smooth_state):
    st = smooth_state(256)
    prof = eulerian_profile(st)
    assert prof.n_points == 2 * 256 + 1
    assert float(prof.r[0]) == float(st.r[0])
    assert float(prof.r[-1]) == pytest.approx(1.5 * float(st.r[-1]), rel=1e-12)

    path = tmp_path / "profile.csv"
    write_profile_csv(prof, path)
    text = path.read_text()
    assert text.splitlines()[0] == "t,r,rho,u,e,phi"
    parsed = np.genfromtxt(path, delimiter=",", names=True)
    assert np.array_equal(parsed["r"], prof.r)
    assert np.array_equal(parsed["rho"], prof.rho)
    assert np.array_equal(parsed["phi"], farfield_cutoff(prof.r, prof.r_edge))
    path2 = tmp_path / "profile2.csv"
    write_profile_csv(prof, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_mass_coordinate_clipping():
    state = _unit_v_state(a=0.1, k=2.0)
    x = mass_coordinate(state, np.array([0.01, float(state.r[-1]) + 5.0]))
    assert x[0] == 0.0
    assert x[1] == 2.0
