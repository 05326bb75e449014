"""Acceptance suite: the twelve desk-scale criteria, one printed line each.

All criteria run at the calibrated desk configuration (1D, N=1, s=0.4,
alpha=0.5, q=3, p=7.5).  Criteria 3 and the closed-form half of 4 probe the
Pohozaev identity of the discrete critical point; on this fractional
problem the defect is dominated by the algebraically decaying |x|^{-(N+2s)}
solution tails and falls with the box like ~L^{-2.3} at dx 0.023 until a
resolution floor near 8e-7: measured 1.99e-4 (L=384, n=2^14), 3.5e-5
(768, 2^15), 6.3e-6 (1536, 2^16), 1.68e-6 (3072, 2^17), 9.1e-7
(6144, 2^18).  Refining to dx 0.0117 breaks the floor: the default
certificate grid (L=6144, n=2^19) measures |P|/(2sA) = 1.5e-7 and a
closed-form multiplier defect of 4.6e-7 in about three minutes, clearing
both 1e-6 tolerances.  Set CHOQLAB_ACCEPTANCE_SMALL=1 for a 76 s
certificate solve on (3072, 2^17), where criterion 3 reads 1.7e-6 and
criterion 4 reads 5.1e-6 (honest fails with the scaling law printed).
"""

import math
import os

import numpy as np
import pytest

from choqlab.energy import (Truncation, energy, hartree_energy,
                            lagrange_multiplier, truncated_profile_pohozaev,
                            truncated_profile_value)
from choqlab.fiber import FiberProfile, extract_profile, fiber_value, psi
from choqlab.harness import (ReportRow, default_config, run_concentration,
                             run_multiplicity, write_report)
from choqlab.params import (riesz_normalization, s_alpha_reference,
                            sharp_constant)
from choqlab.snapshot import load_field, save_field
from choqlab.solver import (SolveConfig, make_profile, solve_autonomous,
                            solve_scalar_ground)
from choqlab.spectral import (Field, Grid, band_limit, dilate,
                              kinetic_energy_free, mass, project_mass)
from conftest import DESK_MASS, make_positive_field

SEED = 20260808
SMALL = os.environ.get("CHOQLAB_ACCEPTANCE_SMALL", "") == "1"


def _line(num, name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} - criterion {num:>2} ({name}): {detail}")
    return ok


@pytest.fixture(scope="module")
def cfg():
    return default_config()


@pytest.fixture(scope="module")
def cert_solve(cfg):
    """Certificate solve: the smallest grid on the measured defect law that
    clears the criterion-3 tolerance (or a faster smaller one on demand)."""
    grid = Grid(1, 3072.0, 131072) if SMALL else Grid(1, 6144.0, 524288)
    return solve_autonomous(cfg.exps, 0.0, DESK_MASS, grid,
                            config=SolveConfig(poho_tol=1.0, newton_max=40))


@pytest.fixture(scope="module")
def concentration(cfg):
    return run_concentration(cfg)


@pytest.fixture(scope="module")
def multiplicity(cfg):
    return run_multiplicity(cfg)


def test_criterion_01_riesz_oracle(cfg):
    """Spectral Riesz potential vs direct kernel quadrature, n=4096."""
    from scipy.integrate import quad
    exps = cfg.exps
    g = Grid(1, 60.0, 4096)
    x = g.axis()
    sigma = 0.8
    rho_fun = lambda y: np.exp(-y * y / (2 * sigma * sigma))
    rho = Field(g, rho_fun(x))
    assert np.abs(rho.values[0]) < 1e-12  # boundary decay precondition
    from choqlab.spectral import riesz_potential
    pot = riesz_potential(rho, exps.alpha).values
    a_const = riesz_normalization(1, exps.alpha)
    worst = 0.0
    for xi in np.linspace(-15.0, 15.0, 41):
        i = int(round((xi + 30.0) / g.dx))
        xg = x[i]
        f = lambda y: rho_fun(y) * abs(xg - y) ** (exps.alpha - 1.0)
        ref = a_const * (quad(f, -30, xg, points=[xg], limit=200)[0]
                         + quad(f, xg, 30, points=[xg], limit=200)[0])
        worst = max(worst, abs(pot[i] - ref) / abs(ref))
    assert _line(1, "riesz oracle", worst < 1e-4,
                 f"max rel err {worst:.2e} < 1e-4 at 41 interior points")


def test_criterion_02_fiber_consistency(cfg):
    """fiber_value(prof, t) vs energy(dilate(u, t)) on 20 random fields."""
    exps = cfg.exps
    g = Grid(1, 48.0, 1024)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(20):
        u = make_positive_field(g, rng)
        prof = extract_profile(u, exps, mu=0.7)
        for t in (0.5, 0.8, 1.25, 2.0):
            fv = fiber_value(prof, t)
            et = energy(dilate(u, t), exps, potential=0.7).total
            worst = max(worst, abs(fv - et) / abs(fv))
    assert _line(2, "fiber consistency", worst < 1e-7,
                 f"max rel err {worst:.2e} < 1e-7, t in {{0.5, 0.8, 1.25, 2}}")


def test_criterion_03_pohozaev_certificate(cert_solve):
    """|P(u)|/(2sA) < 1e-6 at the converged autonomous solve."""
    res = cert_solve
    assert res.grad_residual < 1e-6  # criticality is certified
    ok = res.poho_residual < 1e-6
    n = cert_solve.field.grid.points
    _line(3, "Pohozaev certificate", ok,
          f"|P|/(2sA) = {res.poho_residual:.3e} at n={n} "
          f"(tail-truncation defect ~ L^-2.3, resolution floor at dx 0.023)")
    assert ok


def test_criterion_04_multiplier_law(cfg, cert_solve):
    """Closed form lam*a = mu*a - coeff*B_q within 1e-6; lam < mu strictly."""
    exps = cfg.exps
    res = cert_solve
    lam_direct = lagrange_multiplier(res.field, exps, 0.0)
    coeff = ((exps.N + exps.alpha) - (exps.N - 2 * exps.s) * exps.q) \
        / (2 * exps.s * exps.q)
    bq = hartree_energy(res.field, exps.q, exps.alpha)
    lam_closed = (0.0 * DESK_MASS - coeff * bq) / DESK_MASS
    rel = abs(lam_direct - lam_closed) / abs(lam_closed)
    strict = res.lam < 0.0 and lam_direct == pytest.approx(res.lam, rel=1e-12)
    ok = rel < 1e-6 and strict
    _line(4, "multiplier law", ok,
          f"closed-form rel {rel:.3e} (identically A/(|lam| a) ~ 3.05 x the "
          f"Pohozaev defect), lambda = {res.lam:.6f} < mu = 0 "
          f"{'ok' if strict else 'VIOLATED'}")
    assert strict  # the sign law holds unconditionally
    assert ok


def test_criterion_05_affine_level_shift(cfg):
    """b_mu - b_0 = mu a/2 within 1e-4 relative for mu in {0.5, 1.0}."""
    exps = cfg.exps
    g = Grid(1, 96.0, 2048)
    scfg = SolveConfig(grad_tol=1e-6, poho_tol=0.1, newton_max=40)
    levels = {}
    for mu in (0.0, 0.5, 1.0):
        levels[mu] = solve_autonomous(exps, mu, DESK_MASS, g, config=scfg).level
    worst = max(abs((levels[mu] - levels[0.0]) - mu * DESK_MASS / 2.0)
                / (mu * DESK_MASS / 2.0) for mu in (0.5, 1.0))
    assert _line(5, "affine level shift", worst < 1e-4,
                 f"max rel defect {worst:.2e} < 1e-4 over mu in {{0.5, 1}}")


def test_criterion_06_mass_monotonicity(cfg):
    """b_{0,T,a} nonincreasing over {0.5, 1, 1.5, 2} x a0, slack 1e-6."""
    exps = cfg.exps
    g = Grid(1, 96.0, 4096)
    scfg = SolveConfig(grad_tol=1e-4, poho_tol=0.2, newton_max=40)
    warm, levels = None, []
    masses = [0.5 * DESK_MASS, DESK_MASS, 1.5 * DESK_MASS, 2.0 * DESK_MASS]
    for a in masses:
        init = project_mass(warm, a) if warm is not None else None
        res = solve_autonomous(exps, 0.0, a, g, init=init, config=scfg)
        assert res.grad_residual < 1e-4  # criticality per cell
        warm = res.field
        levels.append(res.level)
    mono = all(levels[i + 1] <= levels[i] + 1e-6 for i in range(3))
    assert _line(6, "mass monotonicity", mono,
                 "levels " + " > ".join(f"{l:.6f}" for l in levels))


def test_criterion_07_interpolation_inequalities(cfg):
    """Both sharp inequalities over 200 random fields + tightness at U."""
    exps = cfg.exps
    g = Grid(1, 48.0, 1024)
    rng = np.random.default_rng(SEED + 1)
    gs = solve_scalar_ground(exps, Grid(1, 96.0, 4096))
    c_aq = sharp_constant(exps, exps.q, gs.norm2)
    s_alpha = s_alpha_reference(exps)
    worst_sub = worst_crit = -np.inf
    for k in range(200):
        if k % 2 == 0:
            u = make_positive_field(g, rng)
        else:
            from choqlab.spectral import random_field
            u = random_field(g, rng)
        kin = kinetic_energy_free(u, exps.s)
        m = mass(u)
        bq = hartree_energy(u, exps.q, exps.alpha)
        bp = hartree_energy(u, exps.p, exps.alpha)
        worst_sub = max(worst_sub, bq / (c_aq * kin ** (exps.q * exps.gamma_q)
                                         * m ** (exps.q * (1 - exps.gamma_q))) - 1)
        worst_crit = max(worst_crit, s_alpha * bp ** (1 / exps.p) / kin - 1)
    u_ref = band_limit(gs.field)
    quot = max(hartree_energy(dilate(u_ref, float(t)), exps.q, exps.alpha)
               / (kinetic_energy_free(dilate(u_ref, float(t)), exps.s)
                  ** (exps.q * exps.gamma_q)
                  * mass(dilate(u_ref, float(t)))
                  ** (exps.q * (1 - exps.gamma_q)))
               for t in np.linspace(0.7, 1.3, 13))
    tight = quot / c_aq
    ok = worst_sub <= 1e-10 and worst_crit <= 1e-3 and tight >= 0.99
    assert _line(7, "interpolation inequalities", ok,
                 f"subcritical slack {worst_sub:.2e} <= 1e-10, critical slack "
                 f"{worst_crit:.2e} <= 1e-3, tightness {tight:.5f} >= 0.99")


def test_criterion_08_truncated_ray_identity(cfg):
    """Finite-difference fiber derivative vs (t^{2s-1}/2) P_T at 10 pairs."""
    exps = cfg.exps
    g = Grid(1, 48.0, 512)
    rng = np.random.default_rng(SEED + 2)
    worst = 0.0
    pairs = 0
    while pairs < 10:
        u = make_positive_field(g, rng)
        prof = extract_profile(u, exps, 0.3)
        radius1 = math.sqrt(prof.A + prof.a)
        trunc = Truncation(0.8 * radius1, 1.3 * radius1)
        for t in (0.7, 1.0, 1.5):
            if pairs >= 10:
                break
            h = 1e-4
            fd = (truncated_profile_value(prof.A, prof.B_p, prof.B_q, prof.a,
                                          0.3, exps, trunc, t + h)
                  - truncated_profile_value(prof.A, prof.B_p, prof.B_q,
                                            prof.a, 0.3, exps, trunc, t - h)) \
                / (2 * h)
            formula = 0.5 * t ** (2 * exps.s - 1) * truncated_profile_pohozaev(
                prof.A, prof.B_p, prof.B_q, prof.a, exps, trunc, t)
            worst = max(worst, abs(fd - formula) / max(abs(formula), 1e-300))
            pairs += 1
    assert _line(8, "truncated ray identity", worst < 1e-6,
                 f"max rel err {worst:.2e} < 1e-6 over 10 (u, t) pairs")


def test_criterion_09_psi_uniqueness(cfg):
    """Exactly one sign change of Psi on a 1000-point log grid, 100 profiles."""
    exps = cfg.exps
    rng = np.random.default_rng(SEED + 3)
    ts = np.logspace(-6, 6, 1000)
    ok_all = True
    for _ in range(100):
        a_kin = float(rng.uniform(0.2, 5.0))
        prof = FiberProfile(A=a_kin,
                            B_p=float(rng.uniform(0.0, 5.0)),
                            B_q=float(a_kin * rng.uniform(0.05, 5.0)),
                            a=float(rng.uniform(0.2, 4.0)), mu=0.0, exps=exps)
        signs = np.sign([psi(prof, float(t)) for t in ts])
        ok_all &= int(np.sum(np.diff(signs) != 0)) == 1
    assert _line(9, "Psi uniqueness", ok_all,
                 "exactly one sign change on [1e-6, 1e6] for 100 profiles")


def test_criterion_10_profile_energy_barycenter(cfg, concentration):
    """|beta(Phi_eps(y)) - y| <= 2 eps R_eps and |J - b0| decreasing."""
    from choqlab.harness import barycenter
    exps = cfg.exps
    auto = solve_autonomous(exps, 0.0, DESK_MASS, cfg.grid, config=cfg.solver)
    bound_ok = True
    gaps = []
    y = 8.0
    for eps in cfg.eps_list:
        prof, y_act = make_profile(auto.field, y, eps, DESK_MASS)
        beta = barycenter(prof, eps, cfg.box_radius)
        r_eps = eps ** -0.5
        bound_ok &= abs(float(beta[0]) - y_act) <= 2 * eps * r_eps
        v = cfg.potential.sample_on(cfg.grid, eps)
        gaps.append(abs(energy(prof, exps, v).total - auto.level))
    mono = all(gaps[i + 1] <= gaps[i] for i in range(len(gaps) - 1))
    ok = bound_ok and mono
    assert _line(10, "profile energy/barycenter", ok,
                 f"barycenter bound {'holds' if bound_ok else 'VIOLATED'}, "
                 f"|J - b0| = {['%.4f' % g for g in gaps]} "
                 f"{'monotone' if mono else 'NOT monotone'}")


def test_criterion_11_concentration_multiplicity(cfg, concentration, multiplicity):
    """Double well, eps-sweep: two distinct localized solutions, lam < 0."""
    conc_ok = concentration["passed"] and concentration["monotone"]
    m = multiplicity
    wells_ok = m["passed"]
    sep_ok = m["separation"] > cfg.separation
    level_ok = m["level_gap"] <= 1e-4
    lam_ok = all(l < 0.0 for l in m["lams"])
    ok = conc_ok and wells_ok and sep_ok and level_ok and lam_ok
    assert _line(11, "concentration + multiplicity", ok,
                 f"dists {['%.4f' % d for d in concentration['dists']]} "
                 f"monotone; separation {m['separation']:.3f} > 0.1; level gap "
                 f"{m['level_gap']:.2e} <= 1e-4; lambdas {m['lams']}")


def test_criterion_12_determinism_io(cfg, tmp_path):
    """Bit-exact re-run of a solve cell and snapshot round-trip."""
    exps = cfg.exps
    g = Grid(1, 96.0, 2048)
    scfg = SolveConfig(grad_tol=1e-6, poho_tol=0.1, newton_max=40)
    pot = cfg.potential.sample_on(g, 0.4)

    def run_cell():
        res = solve_autonomous(exps, 0.5, DESK_MASS, g, config=scfg)
        row = ReportRow("determinism", 0.4, DESK_MASS, 0.5, res.level,
                        res.lam, res.poho_residual, res.grad_residual,
                        0.0, 0.0, res.iterations, res.converged)
        return res, row

    res1, row1 = run_cell()
    res2, row2 = run_cell()
    bitwise = (np.array_equal(res1.field.values, res2.field.values)
               and row1.as_list() == row2.as_list())
    p1, p2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    write_report([row1], p1)
    write_report([row2], p2)
    csv_ok = p1.read_bytes() == p2.read_bytes()
    snap = tmp_path / "u.chqf"
    save_field(res1.field, snap)
    loaded = load_field(snap)
    io_ok = np.array_equal(loaded.values, res1.field.values)
    ok = bitwise and csv_ok and io_ok
    assert _line(12, "determinism and IO", ok,
                 f"re-run bitwise={bitwise}, CSV bytes equal={csv_ok}, "
                 f"snapshot round-trip={io_ok}")
