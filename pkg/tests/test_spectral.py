"""Grid/field plumbing and the Fourier-multiplier operators."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from choqlab.errors import AliasRisk, NonFinite, OutOfRange, ZeroField
from choqlab.spectral import (Field, Grid, band_limit, boundary_decay, dilate,
                              fractional_laplacian, fractional_laplacian_free,
                              hs_norm, kinetic_energy, kinetic_energy_free,
                              mass, project_mass, random_field,
                              riesz_oracle_1d, riesz_potential, translate)
from conftest import make_positive_field

S = 0.4
ALPHA = 0.5

# continuum kinetic energy of exp(-x^2/2) at s=0.4:
# Int |k|^{0.8} e^{-k^2} dk = Gamma(0.9), frozen from quadrature
A_GAUSS = 1.068628702119312


def test_grid_validation():
    with pytest.raises(OutOfRange):
        Grid(1, 48.0, 100)        # not a power of two
    with pytest.raises(OutOfRange):
        Grid(1, 48.0, 8)          # too small
    with pytest.raises(OutOfRange):
        Grid(1, -1.0, 64)
    with pytest.raises(OutOfRange):
        Grid(4, 48.0, 64)
    g = Grid(2, 10.0, 32)
    assert g.cell_volume == pytest.approx((10.0 / 32) ** 2)


def test_field_validation(grid_small):
    vals = np.zeros(grid_small.shape)
    vals[3] = np.inf
    with pytest.raises(NonFinite):
        Field(grid_small, vals)
    u = Field(grid_small, np.ones(grid_small.shape))
    with pytest.raises(ValueError):
        u.values[0] = 2.0  # immutable
    # cached mass must agree with quadrature
    good = Field(grid_small, np.ones(grid_small.shape),
                 cached_mass=48.0)
    assert mass(good) == pytest.approx(48.0)
    with pytest.raises(OutOfRange):
        Field(grid_small, np.ones(grid_small.shape), cached_mass=47.0)


def test_fractional_laplacian_eigenfunction():
    g = Grid(1, 2 * np.pi, 64)
    x = g.axis()
    k0 = 5.0
    u = Field(g, np.cos(k0 * x))
    out = fractional_laplacian(u, S).values
    assert np.allclose(out, k0 ** (2 * S) * np.cos(k0 * x), atol=1e-12)
    # constant field is annihilated
    c = Field(g, np.full(g.shape, 2.5))
    assert np.max(np.abs(fractional_laplacian(c, S).values)) < 1e-14


def test_fractional_laplacian_s1_matches_spectral_laplacian(grid_small, rng):
    u = make_positive_field(grid_small, rng)
    lap = fractional_laplacian(u, 1.0).values
    k = grid_small.k_axis()
    direct = np.fft.ifft(k ** 2 * np.fft.fft(u.values)).real
    assert np.max(np.abs(lap - direct)) < 1e-10 * np.max(np.abs(direct))


def test_kinetic_single_mode():
    g = Grid(1, 2 * np.pi, 64)
    x = g.axis()
    amp, k0 = 1.7, 3.0
    u = Field(g, amp * np.cos(k0 * x))
    # discrete Parseval: mass of cos over the period is pi * amp^2
    assert kinetic_energy(u, S) == pytest.approx(
        k0 ** (2 * S) * np.pi * amp ** 2, rel=1e-12)
    assert kinetic_energy(Field(g, np.zeros(g.shape)), S) == 0.0


def test_kinetic_selfadjoint_pairing(grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    v = make_positive_field(grid_unit, rng)
    dv = grid_unit.cell_volume
    pair_uv = float(np.sum(v.values * fractional_laplacian(u, S).values)) * dv
    pair_vu = float(np.sum(u.values * fractional_laplacian(v, S).values)) * dv
    assert pair_uv == pytest.approx(pair_vu, rel=1e-10)
    quadr = float(np.sum(u.values * fractional_laplacian(u, S).values)) * dv
    assert quadr == pytest.approx(kinetic_energy(u, S), rel=1e-10)


def test_kinetic_free_matches_continuum():
    g = Grid(1, 48.0, 1024)
    x = g.axis()
    u = Field(g, np.exp(-0.5 * x * x))
    assert kinetic_energy_free(u, S) == pytest.approx(A_GAUSS, rel=1e-13)
    # the corrected operator is the exact variational derivative
    pair = float(np.sum(u.values * fractional_laplacian_free(u, S).values)) \
        * g.cell_volume
    assert pair == pytest.approx(kinetic_energy_free(u, S), rel=1e-13)


def test_kinetic_free_scaling_law(grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    a0 = kinetic_energy_free(u, S)
    for t in (0.5, 0.8, 1.25, 2.0):
        at = kinetic_energy_free(dilate(u, t), S)
        assert at == pytest.approx(t ** (2 * S) * a0, rel=1e-8)


def test_riesz_eigenfunction_periodic():
    g = Grid(1, 2 * np.pi, 64)
    x = g.axis()
    rho = Field(g, np.cos(5.0 * x))
    out = riesz_potential(rho, ALPHA, mode="periodic").values
    assert np.allclose(out, 5.0 ** -ALPHA * np.cos(5.0 * x), atol=1e-13)


def test_riesz_freespace_vs_kernel_quadrature():
    g = Grid(1, 48.0, 1024)
    x = g.axis()
    sigma = 0.8
    rho = Field(g, np.exp(-x ** 2 / (2 * sigma ** 2)))
    pot = riesz_potential(rho, ALPHA).values
    from choqlab.params import riesz_normalization
    a_const = riesz_normalization(1, ALPHA)
    for xi in (-6.0, -1.5, 0.0, 2.2, 9.0):
        i = int(round((xi + 24.0) / g.dx))
        xg = x[i]
        f = lambda y: np.exp(-y ** 2 / (2 * sigma ** 2)) * abs(xg - y) ** (ALPHA - 1)
        ref = a_const * (quad(f, -24, xg, points=[xg], limit=200)[0]
                         + quad(f, xg, 24, points=[xg], limit=200)[0])
        assert pot[i] == pytest.approx(ref, rel=1e-6)


def test_riesz_freespace_vs_discrete_oracle(grid_unit):
    x = grid_unit.axis()
    rho = Field(grid_unit, np.exp(-0.5 * x * x))
    pot = riesz_potential(rho, ALPHA).values
    oracle = riesz_oracle_1d(rho, ALPHA)
    interior = np.abs(x) <= 12.0
    rel = np.abs(pot - oracle)[interior] / np.abs(oracle)[interior]
    assert rel.max() < 1e-4


def test_riesz_parity(grid_unit):
    x = grid_unit.axis()
    rho = Field(grid_unit, np.exp(-x ** 2) * (1 + 0.3 * np.cos(0.7 * x)))
    pot = riesz_potential(rho, ALPHA).values
    flipped = np.roll(pot[::-1], 1)
    assert np.max(np.abs(pot - flipped)) < 1e-12 * np.max(np.abs(pot))


def test_riesz_pairing_positive(grid_unit, rng):
    # the free-space pairing is positive even for signed densities
    for _ in range(3):
        f = random_field(grid_unit, rng)
        pot = riesz_potential(f, ALPHA).values
        pairing = float(np.sum(pot * f.values)) * grid_unit.cell_volume
        assert pairing > 0.0
    with pytest.raises(OutOfRange):
        riesz_potential(f, 1.5)


def test_dilate_identity_and_gaussian(grid_unit):
    x = grid_unit.axis()
    u = Field(grid_unit, np.exp(-0.5 * x * x))
    assert dilate(u, 1.0) is u
    for t in (0.5, 0.8, 1.25, 2.0):
        exact = t ** 0.5 * np.exp(-0.5 * (t * x) ** 2)
        assert np.max(np.abs(dilate(u, t).values - exact)) < 1e-8


def test_dilate_mass_preservation(grid_unit, rng):
    u = random_field(grid_unit, rng)
    m0 = mass(u)
    for t in (0.5, 0.8, 1.3, 2.0):
        assert mass(dilate(u, t)) == pytest.approx(m0, rel=1e-8)


def test_dilate_semigroup(grid_unit):
    x = grid_unit.axis()
    u = Field(grid_unit, np.exp(-0.5 * x * x))
    ab = dilate(dilate(u, 1.3), 0.6)
    direct = dilate(u, 0.78)
    assert np.max(np.abs(ab.values - direct.values)) < 1e-7


def test_dilate_alias_guard():
    g = Grid(1, 2 * np.pi, 64)
    x = g.axis()
    u = Field(g, np.cos(20.0 * x))  # high-frequency content
    with pytest.raises(AliasRisk) as err:
        dilate(u, 2.0)
    assert err.value.energy_fraction > 0.5
    with pytest.raises(OutOfRange):
        dilate(u, -1.0)


def test_mass_and_projection(grid_unit, rng):
    u = random_field(grid_unit, rng)
    m = mass(u)
    p = project_mass(u, 2.5)
    assert mass(p) == pytest.approx(2.5, rel=1e-14)
    same = project_mass(u, m)
    assert np.max(np.abs(same.values - u.values)) < 1e-14 * np.max(np.abs(u.values))
    with pytest.raises(ZeroField):
        project_mass(Field(grid_unit, np.zeros(grid_unit.shape)), 1.0)
    # translation invariance of the quadrature
    assert mass(translate(u, 37)) == pytest.approx(m, rel=1e-13)


def test_hs_norm(grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    assert hs_norm(u, S) == pytest.approx(
        math.sqrt(kinetic_energy(u, S) + mass(u)), rel=1e-14)


def test_band_limit_and_boundary_decay(grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    assert boundary_decay(u) < 1e-14
    bl = band_limit(u)
    uh = np.fft.fft(bl.values)
    m_idx = np.abs(np.fft.fftfreq(grid_unit.points) * grid_unit.points)
    top = np.max(np.abs(uh[m_idx >= 0.25 * grid_unit.points]))
    assert top < 1e-12 * np.max(np.abs(uh))  # roundtrip roundoff only


def test_operations_deterministic(grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    a = riesz_potential(u, ALPHA).values
    b = riesz_potential(u, ALPHA).values
    assert np.array_equal(a, b)
    c = dilate(u, 1.3).values
    d = dilate(u, 1.3).values
    assert np.array_equal(c, d)
