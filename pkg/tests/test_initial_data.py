"""Tests for the data-preparation pipeline.

Oracles: closed forms where the fields are constant, convexity inequalities
checked pointwise, and Richardson extrapolation in the grid size for the
measured entropy constant. No expected value is copied from a run.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import PchipInterpolator

from radialgas.initial_data import (
    ExteriorData,
    LagrangianData,
    RadialData,
    data_entropy_constant,
    exterior_entropy_integral,
    farfield_cutoff,
    generate_radial,
    inner_cutoff,
    lagrangian_map,
    load_radial_csv,
    mollify_extend,
    radial_entropy_integral,
    smoothstep,
    support_radius,
    to_lagrangian,
    truncate_farfield,
)


def _compact(r, center, width):
    s = (np.asarray(r) - center) / width
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _custom_radial():
    """Bumps in all three fields, the e/u bumps overlapping the inner cutoff."""
    r = np.linspace(0.0, 4.0, 4097)
    rho = 1.0 + 0.8 * _compact(r, 1.25, 0.75)
    u = 0.4 * _compact(r, 0.45, 0.35)
    e = 1.0 + 0.5 * _compact(r, 0.3, 0.25)
    cstar = max(
        float(np.max(rho)),
        float(1.0 / np.min(rho)),
        float(1.0 / np.min(e)),
        radial_entropy_integral(r, rho, u, e, 3),
        1.0,
    )
    return RadialData(r=r, rho0=rho, u0=u, e0=e, Cstar=cstar)


@pytest.fixture(scope="module")
def gaussian_ext():
    return mollify_extend(generate_radial("gaussian_bump"), 0.1)


@pytest.fixture(scope="module")
def gaussian_trunc(gaussian_ext):
    return truncate_farfield(gaussian_ext, 4)


def test_smoothstep_shape():
    assert smoothstep(-1.0) == 0.0
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    assert smoothstep(2.0) == 1.0
    assert math.isclose(smoothstep(0.5), 0.5)
    s = np.linspace(0.0, 1.0, 20001)
    slope = np.diff(smoothstep(s)) / np.diff(s)
    assert np.max(slope) <= 15.0 / 8.0 + 1e-9
    assert np.max(slope) >= 15.0 / 8.0 - 1e-3  # attained at the midpoint


def test_cutoff_supports():
    a = 0.1
    r = np.linspace(0.0, 0.5, 1001)
    chi = inner_cutoff(r, a)
    assert np.all(chi[r <= a] == 0.0)
    assert np.all(chi[r >= 2 * a] == 1.0)
    assert np.all(np.diff(chi) >= 0.0)
    r_ref = 2.0
    phi = farfield_cutoff(np.linspace(0.0, 3.0, 1001), r_ref)
    rr = np.linspace(0.0, 3.0, 1001)
    assert np.all(phi[rr <= r_ref / 2] == 1.0)
    assert np.all(phi[rr >= r_ref] == 0.0)
    assert np.all(np.diff(phi) <= 0.0)


def test_generators():
    rad = generate_radial("gaussian_bump")
    i_peak = int(np.argmin(np.abs(rad.r - 1.25)))
    assert math.isclose(float(rad.rho0[i_peak]), 2.0, rel_tol=1e-6)
    assert np.all(rad.rho0[(rad.r < 0.5) | (rad.r > 2.0)] == 1.0)
    assert np.all(rad.u0 == 0.0)
    assert np.all(rad.e0 == 1.0)
    assert rad.Cstar == 2.0  # pointwise max dominates the entropy integral

    shell = generate_radial("discontinuous_shell")
    mid = (shell.r >= 0.8) & (shell.r <= 1.6)
    assert np.all(shell.rho0[mid] == 2.5)
    assert np.all(shell.rho0[~mid] == 1.0)
    assert shell.Cstar >= radial_entropy_integral(
        shell.r, shell.rho0, shell.u0, shell.e0, 3
    )

    const = generate_radial("constant")
    assert const.Cstar == 1.0
    with pytest.raises(ValueError):
        generate_radial("vortex")


def test_radialdata_validation():
    r = np.linspace(0.0, 1.0, 11)
    ones = np.ones_like(r)
    with pytest.raises(ValueError):
        RadialData(r=r, rho0=3.0 * ones, u0=0 * ones, e0=ones, Cstar=2.0)
    with pytest.raises(ValueError):
        RadialData(r=r, rho0=ones, u0=0 * ones, e0=0.1 * ones, Cstar=2.0)
    with pytest.raises(ValueError):
        RadialData(r=r + 1.0, rho0=ones, u0=0 * ones, e0=ones, Cstar=1.0)


def test_mollify_constant_is_exact():
    ext = mollify_extend(generate_radial("constant"), 0.1)
    assert np.max(np.abs(ext.rho - 1.0)) <= 1e-13
    assert np.max(np.abs(ext.u)) <= 1e-13
    assert np.max(np.abs(ext.e - 1.0)) <= 1e-13


def test_mollify_inner_boundary():
    ext = mollify_extend(_custom_radial(), 0.1)
    assert ext.u[0] == 0.0
    # third-order contact of the cutoff bounds the one-sided stencil residual
    # by roughly 20*(e(a)-1)*delta^2/a^3 with delta=a/64, well under 1e-2 here
    assert abs(ext.boundary_e_slope()) <= 1e-2
    assert abs(ext.boundary_e_slope()) <= 0.01 * np.max(np.abs(np.gradient(ext.e, ext.r)))


def test_mollify_preserves_bounds():
    rad = _custom_radial()
    ext = mollify_extend(rad, 0.1)
    assert np.min(ext.rho) >= 1.0 / rad.Cstar - 1e-12
    assert np.max(ext.rho) <= rad.Cstar + 1e-12
    assert np.min(ext.e) >= min(1.0, float(np.min(rad.e0))) - 1e-12


def test_mollify_entropy_bound():
    for name in ("gaussian_bump", "discontinuous_shell"):
        for n in (2, 3):
            rad = generate_radial(name, n=n)
            for a in (0.05, 0.1, 0.2):
                ext = mollify_extend(rad, a)
                bound = 2.0 ** (n - 1) * rad.Cstar**3
                assert exterior_entropy_integral(ext, n) <= bound
    ext = mollify_extend(_custom_radial(), 0.1)
    assert exterior_entropy_integral(ext, 3) <= 4.0 * _custom_radial().Cstar**3


def test_mollify_domain_errors():
    rad = generate_radial("constant")
    for a in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            mollify_extend(rad, a)


def test_truncate_regions(gaussian_ext, gaussian_trunc):
    ext, trunc = gaussian_ext, gaussian_trunc
    r_k = float(lagrangian_map(ext, 4, 16)[1][-1])
    near = ext.r < r_k / 2.0
    assert np.array_equal(trunc.rho[near], ext.rho[near])
    assert np.array_equal(trunc.u[near], ext.u[near])
    assert np.array_equal(trunc.e[near], ext.e[near])
    # explicit spot check at the node nearest 0.4 * r_k
    j = int(np.argmin(np.abs(ext.r - 0.4 * r_k)))
    assert trunc.rho[j] == ext.rho[j]
    far = ext.r >= r_k
    assert np.all(trunc.rho[far] == 1.0)
    assert np.all(trunc.u[far] == 0.0)
    assert np.all(trunc.e[far] == 1.0)


def test_truncate_convexity_domination(gaussian_ext, gaussian_trunc):
    def G(z):
        return 1.0 - z + z * np.log(z)

    phi = farfield_cutoff(gaussian_ext.r, float(lagrangian_map(gaussian_ext, 4, 16)[1][-1]))
    assert np.all(G(gaussian_trunc.rho) <= phi * G(gaussian_ext.rho) + 1e-14)


def test_truncate_constant_and_errors():
    ext = mollify_extend(generate_radial("constant"), 0.1)
    for k in (1, 3):
        out = truncate_farfield(ext, k)
        assert np.allclose(out.rho, ext.rho, rtol=0.0, atol=1e-14)
        assert np.allclose(out.e, ext.e, rtol=0.0, atol=1e-14)
    with pytest.raises(ValueError):
        truncate_farfield(ext, 0)
    with pytest.raises(ValueError):
        truncate_farfield(ext, 2.5)


def _flat_exterior(a=0.8, r_hi=2.2, h=5e-4, rho_fn=None):
    r = np.arange(a, r_hi + 1e-12, h)
    rho = np.ones_like(r) if rho_fn is None else rho_fn(r)
    return ExteriorData(a=a, r=r, rho=rho, u=np.zeros_like(r), e=np.ones_like(r))


def test_map_closed_form_unit_density():
    flat = _flat_exterior()
    x, rt = lagrangian_map(flat, 1, 4096)
    want = (0.8**3 + 3.0 * x) ** (1.0 / 3.0)
    assert rt[0] == 0.8
    assert np.max(np.abs(rt - want) / want) <= 1e-6
    assert np.all(np.diff(rt) > 0.0)

    flat2 = _flat_exterior(a=0.5, r_hi=2.0)
    x2, rt2 = lagrangian_map(flat2, 1, 512, n=2)
    want2 = np.sqrt(0.25 + 2.0 * x2)
    assert np.max(np.abs(rt2 - want2) / want2) <= 1e-6


def test_map_derivative_identity():
    # D_x of the map equals 1/(r^m rho(r)) on the inverted points
    for rho_fn in (None, lambda r: 1.2 + 0.2 * np.cos(2.0 * r)):
        flat = _flat_exterior(rho_fn=rho_fn)
        x, rt = lagrangian_map(flat, 1, 4096)
        dx = x[1] - x[0]
        d_num = (rt[2:] - rt[:-2]) / (2.0 * dx)
        rho_at = PchipInterpolator(flat.r, flat.rho)(rt[1:-1])
        d_exact = 1.0 / (rt[1:-1] ** 2 * rho_at)
        assert np.max(np.abs(d_num - d_exact) / d_exact) <= 1e-6


def test_to_lagrangian_constant():
    flat = _flat_exterior(a=0.8, r_hi=3.0)
    lag = to_lagrangian(flat, 2, 256)
    assert np.max(np.abs(lag.v0 - 1.0)) <= 1e-13
    assert np.all(lag.u0 == 0.0)
    assert np.max(np.abs(lag.e0 - 1.0)) <= 1e-13
    assert lag.r0[0] == 0.8


def test_mass_deficit_error():
    r = np.linspace(0.1, 1.0, 901)
    half = np.full_like(r, 0.5)
    thin = ExteriorData(a=0.1, r=r, rho=half, u=np.zeros_like(r), e=np.ones_like(r))
    with pytest.raises(ValueError, match="mass"):
        to_lagrangian(thin, 4, 64)


def test_lagrangian_validation():
    x = np.linspace(0.0, 2.0, 65)
    ones = np.ones_like(x)
    zeros = np.zeros_like(x)
    r0 = (0.1**3 + 3.0 * x) ** (1.0 / 3.0)
    r0[0] = 0.1
    good = LagrangianData(k=2, x=x, v0=ones, u0=zeros, e0=ones, r0=r0)
    assert good.a == 0.1
    bad_u = zeros.copy()
    bad_u[-1] = 0.3
    with pytest.raises(ValueError):
        LagrangianData(k=2, x=x, v0=ones, u0=bad_u, e0=ones, r0=r0)
    bad_e = ones.copy()
    bad_e[0] = 1.5
    with pytest.raises(ValueError):
        LagrangianData(k=2, x=x, v0=ones, u0=zeros, e0=bad_e, r0=r0)
    with pytest.raises(ValueError):
        LagrangianData(k=2, x=x, v0=-ones, u0=zeros, e0=ones, r0=r0)
    with pytest.raises(ValueError):
        LagrangianData(k=0, x=x, v0=ones, u0=zeros, e0=ones, r0=r0)
    with pytest.raises(ValueError):
        LagrangianData(k=2, x=x**1.1, v0=ones, u0=zeros, e0=ones, r0=r0)


def test_entropy_constant_closed_forms():
    x = np.linspace(0.0, 4.0, 513)
    ones = np.ones_like(x)
    zeros = np.zeros_like(x)
    r0 = (0.1**3 + 3.0 * x) ** (1.0 / 3.0)
    r0[0] = 0.1
    flat = LagrangianData(k=4, x=x, v0=ones, u0=zeros, e0=ones, r0=r0)
    assert data_entropy_constant(flat) == 0.0

    ee = math.e
    warm = LagrangianData(k=4, x=x, v0=ones, u0=zeros, e0=ee * ones, r0=r0)
    want = 4.0 * (ee - 2.0) + 4.0 * (ee - 1.0) ** 2
    assert math.isclose(data_entropy_constant(warm), want, rel_tol=1e-12)


def test_entropy_constant_pipeline_constant():
    ext = mollify_extend(generate_radial("constant"), 0.1)
    lag = to_lagrangian(truncate_farfield(ext, 2), 2, 256)
    assert data_entropy_constant(lag) <= 1e-12


def test_entropy_constant_richardson(gaussian_trunc):
    values = {N: data_entropy_constant(to_lagrangian(gaussian_trunc, 4, N)) for N in (1024, 2048, 4096)}
    # second-order Richardson limit from the two finest grids
    c_ext = values[4096] + (values[4096] - values[2048]) / 3.0
    assert abs(values[1024] - c_ext) <= 1e-4 * abs(c_ext)


def test_entropy_constant_a_independent():
    rad = generate_radial("gaussian_bump")
    vals = []
    for a in (0.05, 0.1, 0.2):
        lag = to_lagrangian(truncate_farfield(mollify_extend(rad, a), 4), 4, 1024)
        vals.append(data_entropy_constant(lag))
    spread = (max(vals) - min(vals)) / vals[1]
    assert spread <= 0.05, vals


def test_prop_bound_chain(gaussian_trunc):
    rad = generate_radial("gaussian_bump")
    lag = to_lagrangian(gaussian_trunc, 4, 1024)
    assert data_entropy_constant(lag) <= 2.0**2 * rad.Cstar**3


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "data.csv"
    r = np.linspace(0.0, 2.0, 41)
    rho = 1.0 + 0.5 * _compact(r, 1.0, 0.5)
    u = np.zeros_like(r)
    e = np.ones_like(r)
    rows = np.column_stack([r, rho, u, e])
    np.savetxt(path, rows, delimiter=",", header="r,rho,u,e", comments="")
    rad = load_radial_csv(path)
    assert np.allclose(rad.rho0, rho)
    assert rad.Cstar >= 1.5

    bad = tmp_path / "bad.csv"
    np.savetxt(bad, rows, delimiter=",", header="radius,rho,u,e", comments="")
    with pytest.raises(ValueError):
        load_radial_csv(bad)


@settings(max_examples=25, deadline=None)
@given(
    amp=st.floats(min_value=-0.35, max_value=0.6),
    freq=st.floats(min_value=0.5, max_value=3.0),
)
def test_map_monotone_property(amp, freq):
    r = np.linspace(0.3, 3.0, 1351)
    rho = 1.0 + amp * np.sin(freq * r) ** 2
    ext = ExteriorData(a=0.3, r=r, rho=rho, u=np.zeros_like(r), e=np.ones_like(r))
    lag = to_lagrangian(ext, 1, 64)
    assert np.all(lag.v0 > 0.0)
    assert np.all(np.diff(lag.r0) > 0.0)
    _, rt = lagrangian_map(ext, 1, 64)
    assert np.all(np.diff(rt) > 0.0)
