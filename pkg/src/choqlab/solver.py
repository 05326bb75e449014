"""Constrained solvers for normalized critical points.

The mountain-pass level admits the ray characterization

    b = inf_{u in S(a)} max_{t>0} J(u_t),

and the unique ray maximizer places u on the Pohozaev set P(u) = 0.  The
solver therefore alternates (i) exact fiber rescaling u <- u_{t*} (pure
profile arithmetic plus one spectral dilation) with (ii) mass-projected
gradient descent, backtracking on the ray-reduced level R(u), and finishes
with a matrix-free Newton-Krylov solve of the coupled system

    G(u) - lambda u = 0,   mass(u) = a.

Every energy/gradient evaluation uses the whole-space-consistent operators
(free-space Riesz convolution, zeta-corrected kinetic energy), so the
converged certificates -- Pohozaev residual, multiplier sign, level laws --
reproduce the continuum identities to solver tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, lgmres

from .errors import (NoConvergence, OutOfRange, StepUnderflow,
                     TruncationActive)
from .energy import (Truncation, _abs_power, _odd_power, energy,
                     hartree_jvp, lagrange_multiplier)
from .fiber import extract_profile, fiber_maximizer
from .params import ExponentSet
from .spectral import (Field, band_limit, dilate, fractional_laplacian_free,
                       hs_norm_free, kinetic_energy_free, mass, project_mass,
                       riesz_potential, translate)

__all__ = [
    "SolveConfig", "SolveResult", "GroundState", "SAlphaResult",
    "default_init", "solve_scalar_ground", "compute_S_alpha",
    "constrained_step", "solve_autonomous", "solve_nonautonomous",
    "make_profile", "level_curves", "x_star_root",
]


# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolveConfig:
    step: float = 0.5          # initial descent step
    grad_tol: float = 1e-6     # relative residual ||G - lam u||_2 / ||u||_2
    poho_tol: float = 1e-6     # |P| / (2 s A)
    max_iter: int = 300        # composite descent iterations
    refine: bool = True        # Newton refinement of the coupled system
    newton_tol: float = 1e-10
    newton_max: int = 40
    switch_tol: float = 3e-4   # descent -> Newton handover residual
    alias_tol: float = 1e-9

    def __post_init__(self):
        if self.grad_tol <= 0 or self.poho_tol <= 0 or self.step <= 0:
            raise OutOfRange("tolerances and step must be positive")
        if self.max_iter < 0:
            raise OutOfRange("max_iter must be >= 0")


@dataclass(frozen=True)
class SolveResult:
    field: Field
    lam: float
    level: float
    poho_residual: float
    grad_residual: float
    iterations: int
    converged: bool
    trace: tuple  # rows (phase, iteration, level, grad_residual, poho_residual)

    @property
    def mass(self) -> float:
        return mass(self.field)


@dataclass(frozen=True)
class GroundState:
    field: Field
    norm2: float           # L^2 norm ||U||_2 (not squared)
    action: float          # A/2 + mass/2 - B_q/(2q)
    residual: float        # relative residual of the unconstrained equation
    poho_residual: float   # scalar Pohozaev defect, normalized
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SAlphaResult:
    value: float           # min of the Rayleigh quotient over the sweep
    eps_grid: tuple
    quotients: tuple
    sensitivity: float     # (max - min) / min over the sweep


def default_init(grid, a: float, width_frac: float = 1.0 / 16.0) -> Field:
    """Gaussian bump of width L/16 at the origin, projected to S(a)."""
    r = grid.radius()
    w = width_frac * grid.extent
    return project_mass(Field(grid, np.exp(-0.5 * (r / w) ** 2)), a)


# ---------------------------------------------------------------------------
# Shared Euler-Lagrange pieces
# ---------------------------------------------------------------------------

class _Pieces:
    """One-pass evaluation of everything the composite iteration needs."""

    __slots__ = ("u", "kin", "pv", "bp", "bq", "lam", "grad", "a")

    def __init__(self, u: Field, exps: ExponentSet, potential):
        g = u.grid
        dv = g.cell_volume
        self.u = u
        self.a = mass(u)
        rho_p = _abs_power(u.values, exps.p)
        rho_q = _abs_power(u.values, exps.q)
        pot_p = riesz_potential(Field(g, rho_p), exps.alpha).values
        pot_q = riesz_potential(Field(g, rho_q), exps.alpha).values
        self.kin = kinetic_energy_free(u, exps.s)
        self.bp = float(np.sum(pot_p * rho_p)) * dv
        self.bq = float(np.sum(pot_q * rho_q)) * dv
        if potential is None:
            v_term = np.zeros(g.shape)
            self.pv = 0.0
        elif np.isscalar(potential):
            v_term = float(potential) * u.values
            self.pv = float(potential) * self.a
        else:
            vv = potential.values if isinstance(potential, Field) else np.asarray(potential)
            v_term = vv * u.values
            self.pv = float(np.sum(vv * u.values * u.values)) * dv
        self.lam = (self.kin + self.pv - self.bp - self.bq) / self.a
        self.grad = (fractional_laplacian_free(u, exps.s).values + v_term
                     - pot_p * _odd_power(u.values, exps.p - 1.0)
                     - pot_q * _odd_power(u.values, exps.q - 1.0))

    def level(self, exps: ExponentSet) -> float:
        return (0.5 * self.kin + 0.5 * self.pv
                - self.bp / (2.0 * exps.p) - self.bq / (2.0 * exps.q))

    def poho_res(self, exps: ExponentSet) -> float:
        p_val = (2.0 * exps.s * self.kin
                 - (exps.delta_p / exps.p) * self.bp
                 - (exps.delta_q / exps.q) * self.bq)
        return abs(p_val) / (2.0 * exps.s * self.kin) if self.kin > 0 else 0.0

    def grad_residual(self, dv: float) -> float:
        d = self.grad - self.lam * self.u.values
        return math.sqrt(float(np.sum(d * d)) * dv / self.a)


def _l2(values: np.ndarray, dv: float) -> float:
    return math.sqrt(float(np.sum(values * values)) * dv)


def _dilate_composite(u: Field, t: float, alias_tol: float) -> Field:
    """Apply dilate in factors within [1/2, 2] to bound per-step aliasing."""
    out = u
    remaining = t
    while remaining > 2.0:
        out = dilate(out, 2.0, alias_tol)
        remaining /= 2.0
    while remaining < 0.5:
        out = dilate(out, 0.5, alias_tol)
        remaining *= 2.0
    if remaining != 1.0:
        out = dilate(out, remaining, alias_tol)
    return out


def _ray_level(u: Field, exps: ExponentSet, mu_eff: float) -> float:
    return fiber_maximizer(extract_profile(u, exps, mu_eff)).value


def _ray_level_sampled(u: Field, exps: ExponentSet, v_arr: np.ndarray,
                       center_cells: int, alias_tol: float) -> float:
    """Ray-reduced level for a sampled potential: the Hartree/kinetic part
    maximizes in closed form, the potential term is evaluated at the
    maximizer (one dilation about the carrier cell)."""
    fm = fiber_maximizer(extract_profile(u, exps, 0.0))
    if abs(math.log(fm.t_star)) > 1e-14:
        c = translate(u, -center_cells) if center_cells else u
        c = _dilate_composite(c, fm.t_star, alias_tol)
        ut = translate(c, center_cells) if center_cells else c
    else:
        ut = u
    pv = float(np.sum(v_arr * ut.values * ut.values)) * u.grid.cell_volume
    return fm.value + 0.5 * pv


def _despeckle(u: Field) -> Field:
    """Descent-loop hygiene: zero content above half Nyquist.

    A resolved iterate must keep the |u|^p density below Nyquist, which
    caps meaningful field content near a quarter of the band; everything
    above half Nyquist is taper/kink noise that would otherwise accumulate
    over rescales (and it makes every t <= 2 dilation alias-free).  Only
    the descent loop filters; the Newton endgame works on the raw field.
    """
    return band_limit(u, 0.25)


# ---------------------------------------------------------------------------
# Scalar ground state (Petviashvili + Newton)
# ---------------------------------------------------------------------------

def _scalar_residual(u: Field, exps: ExponentSet) -> np.ndarray:
    rho = _abs_power(u.values, exps.q)
    pot = riesz_potential(Field(u.grid, rho), exps.alpha).values
    return (fractional_laplacian_free(u, exps.s).values + u.values
            - pot * _odd_power(u.values, exps.q - 1.0))


def _symmetrize_even(values: np.ndarray) -> np.ndarray:
    """Average with the reflection through the origin (grid point j=0...)."""
    flipped = np.flip(values)
    for ax in range(values.ndim):
        flipped = np.roll(flipped, 1, axis=ax)
    return 0.5 * (values + flipped)


def solve_scalar_ground(exps: ExponentSet, grid, config: SolveConfig | None = None,
                        init: Field | None = None) -> GroundState:
    """Positive even ground state of (-D)^s U + U = (I_a * |U|^q)|U|^{q-2} U.

    Petviashvili iteration with stabilizing exponent gamma = d/(d-1) for the
    homogeneity degree d = 2q - 1, then Newton-Krylov on the whole-space-
    consistent equation.  The L^2 norm of U feeds the sharp subcritical
    interpolation constant.
    """
    config = config or SolveConfig()
    if not (exps.p_lower < exps.q < exps.p):
        raise OutOfRange("scalar problem needs q strictly inside (p_lower, p)")
    if config.max_iter < 1:
        raise NoConvergence("iteration budget is zero", [])
    g = grid
    r = g.radius()
    u = init.values.copy() if init is not None else np.exp(-0.5 * r * r)
    sym = g.k_abs() ** (2.0 * exps.s) + 1.0
    gamma_st = (2.0 * exps.q - 1.0) / (2.0 * exps.q - 2.0)
    dv = g.cell_volume
    res_rel = np.inf
    it = 0
    for it in range(1, config.max_iter + 1):
        fld = Field(g, u)
        rho = _abs_power(u, exps.q)
        pot = riesz_potential(Field(g, rho), exps.alpha).values
        nonlin = pot * _odd_power(u, exps.q - 1.0)
        # torus inverse of (-D)^s + 1 as the Petviashvili propagator
        lin_u = np.fft.ifftn(sym * np.fft.fftn(u)).real
        num = float(np.sum(u * lin_u)) * dv
        den = float(np.sum(u * nonlin)) * dv
        if den <= 0.0:
            raise NoConvergence("Petviashvili pairing lost positivity", [])
        m_fac = num / den
        u_new = np.fft.ifftn(np.fft.fftn(nonlin) / sym).real * m_fac ** gamma_st
        u_new = _symmetrize_even(u_new)
        res = _scalar_residual(Field(g, u_new), exps)
        res_rel = _l2(res, dv) / _l2(u_new, dv)
        u = u_new
        if res_rel < 1e-8:
            break
    # Newton refinement on the corrected operator
    fld = Field(g, u)
    if config.refine:
        fld, res_rel, _ = _newton_unconstrained(fld, exps, config)
    a_kin = kinetic_energy_free(fld, exps.s)
    m = mass(fld)
    bq = float(np.sum(riesz_potential(Field(g, _abs_power(fld.values, exps.q)),
                                      exps.alpha).values
                      * _abs_power(fld.values, exps.q))) * dv
    # scaling u(x/l) stationarity: (N-2s)/2 A + N/2 M = (N+alpha)/(2q) B_q
    poho = abs(0.5 * (exps.N - 2.0 * exps.s) * a_kin + 0.5 * exps.N * m
               - (exps.N + exps.alpha) / (2.0 * exps.q) * bq)
    poho /= max(0.5 * exps.N * m, 1e-300)
    action = 0.5 * a_kin + 0.5 * m - bq / (2.0 * exps.q)
    return GroundState(field=fld, norm2=math.sqrt(m), action=action,
                       residual=res_rel, poho_residual=poho,
                       iterations=it, converged=res_rel < config.grad_tol)


def _newton_unconstrained(u: Field, exps: ExponentSet, config: SolveConfig):
    """Newton-Krylov for (-D)^s U + U - N(U) = 0 (no constraint)."""
    g = u.grid
    dv = g.cell_volume
    nn = u.values.size
    sym = g.k_abs() ** (2.0 * exps.s) + 1.0

    def resid(vals):
        return _scalar_residual(Field(g, vals), exps)

    vals = u.values.copy()
    r0 = resid(vals)
    best = _l2(r0, dv) / _l2(vals, dv)
    for _ in range(config.newton_max):
        fld = Field(g, vals)

        def jvp(v):
            v = v.reshape(g.shape)
            out = (fractional_laplacian_free(Field(g, v), exps.s).values + v
                   - hartree_jvp(fld, v, exps.q, exps.alpha))
            return out.ravel()

        def prec(v):
            return np.fft.ifftn(np.fft.fftn(v.reshape(g.shape)) / sym).real.ravel()

        op = LinearOperator((nn, nn), matvec=jvp)
        pre = LinearOperator((nn, nn), matvec=prec)
        rhs = -resid(vals).ravel()
        dz, _ = lgmres(op, rhs, M=pre, rtol=1e-10, atol=0.0, maxiter=200)
        step = 1.0
        base = _l2(resid(vals), dv)
        for _ in range(10):
            trial = vals + step * dz.reshape(g.shape)
            if _l2(resid(trial), dv) < base:
                vals = trial
                break
            step *= 0.5
        else:
            break
        best = _l2(resid(vals), dv) / _l2(vals, dv)
        if best < config.newton_tol:
            break
    return Field(g, vals), best, 0


# ---------------------------------------------------------------------------
# Critical Choquard constant
# ---------------------------------------------------------------------------

def compute_S_alpha(exps: ExponentSet, grid, eps_grid=None) -> SAlphaResult:
    """Rayleigh quotient A(u)/B_p(u)^{1/p} on the bubble family

        u_eps(x) = (eps/(eps^2+|x|^2))^{(N-2s)/2},

    swept over eps (envelope-localized to keep the tails in the box) and
    minimized.  The sweep spread is reported as the discretization
    sensitivity of the constant.
    """
    g = grid
    r = g.radius()
    L = g.extent
    if eps_grid is None:
        lo = max(4.0 * g.dx, 1e-3 * L)
        eps_grid = tuple(np.geomspace(lo, L / 24.0, 9))
    envelope = np.exp(-((r / (0.2 * L)) ** 8))
    quotients = []
    for eps in eps_grid:
        prof = (eps / (eps * eps + r * r)) ** (0.5 * (exps.N - 2.0 * exps.s))
        u = Field(g, prof * envelope)
        a_kin = kinetic_energy_free(u, exps.s)
        rho = _abs_power(u.values, exps.p)
        bp = float(np.sum(riesz_potential(Field(g, rho), exps.alpha).values * rho)) \
            * g.cell_volume
        quotients.append(a_kin / bp ** (1.0 / exps.p))
    quotients = tuple(quotients)
    value = min(quotients)
    return SAlphaResult(value=value, eps_grid=tuple(eps_grid), quotients=quotients,
                        sensitivity=(max(quotients) - value) / value)


# ---------------------------------------------------------------------------
# Projected descent
# ---------------------------------------------------------------------------

def constrained_step(u: Field, exps: ExponentSet, potential, config: SolveConfig,
                     trunc: Truncation | None = None) -> Field:
    """One projected-gradient step on S(a), backtracking until the
    (truncated) energy does not increase.  The multiplier estimate equals
    lagrange_multiplier(u) bitwise."""
    a = mass(u)
    pieces = _Pieces(u, exps, potential)
    d = pieces.grad - pieces.lam * u.values
    dv = u.grid.cell_volume
    d_norm2 = float(np.sum(d * d)) * dv
    if d_norm2 == 0.0:
        return u
    base = energy(u, exps, potential, trunc).total
    eta = config.step
    while eta >= 1e-14:
        trial = project_mass(Field(u.grid, u.values - eta * d), a)
        if energy(trial, exps, potential, trunc).total <= base:
            return trial
        eta *= 0.5
    raise StepUnderflow(f"backtracking stalled below 1e-14 (|d|^2={d_norm2:.3e})")


# ---------------------------------------------------------------------------
# Newton-Krylov for the coupled constrained system
# ---------------------------------------------------------------------------

def _newton_constrained(u: Field, lam: float, exps: ExponentSet, potential,
                        a: float, config: SolveConfig):
    """Solve G(u) - lam u = 0, (mass - a)/2 = 0 for (u, lam)."""
    g = u.grid
    dv = g.cell_volume
    nn = u.values.size
    sym = g.k_abs() ** (2.0 * exps.s) + 1.0

    if potential is None:
        v_arr = None
    elif np.isscalar(potential):
        v_arr = float(potential)
    else:
        v_arr = potential.values if isinstance(potential, Field) else np.asarray(potential)

    def full_residual(vals, lam_v):
        fld = Field(g, vals)
        pc = _Pieces(fld, exps, potential)
        r = pc.grad - lam_v * vals
        c = 0.5 * (pc.a - a)
        return r, c, pc

    def fnorm(r, c, vals):
        return math.sqrt((float(np.sum(r * r)) * dv + c * c)
                         / max(float(np.sum(vals * vals)) * dv, 1e-300))

    # slowly varying sampled potentials leave the translation mode d_x u
    # almost in the Jacobian kernel: recenter sub-cell along it and deflate
    # it from the Krylov solve, otherwise Newton steps blow up along it
    soft_translation = (v_arr is not None and not np.isscalar(v_arr)
                        and g.N == 1)
    k_ax = g.k_axis() if soft_translation else None

    def shift(vals, delta):
        return np.fft.ifft(np.fft.fft(vals) * np.exp(-1j * k_ax * delta)).real

    def recenter(vals, lam_v, fn):
        span = 1.5 * g.dx
        best_d, best_fn = 0.0, fn
        for d in (-span, -span / 3.0, span / 3.0, span):
            tr, tc, _ = full_residual(shift(vals, d), lam_v)
            fn_d = fnorm(tr, tc, vals)
            if fn_d < best_fn:
                best_d, best_fn = d, fn_d
        for _ in range(5):  # refine by bisection around the best offset
            span *= 0.35
            for d in (best_d - span, best_d + span):
                tr, tc, _ = full_residual(shift(vals, d), lam_v)
                fn_d = fnorm(tr, tc, vals)
                if fn_d < best_fn:
                    best_d, best_fn = d, fn_d
        if best_d != 0.0:
            return shift(vals, best_d), best_fn
        return vals, fn

    vals = u.values.copy()
    lam_v = lam
    r, c, pc = full_residual(vals, lam_v)
    fn = fnorm(r, c, vals)
    stagnant = 0
    for it_newton in range(config.newton_max):
        if soft_translation and it_newton % 2 == 0:
            vals, fn_r = recenter(vals, lam_v, fn)
            if fn_r < fn:
                r, c, pc = full_residual(vals, lam_v)
                fn = fnorm(r, c, vals)
        fld = Field(g, vals)
        if soft_translation:
            tvec = np.fft.ifft(1j * k_ax * np.fft.fft(vals)).real
            tnorm = math.sqrt(float(np.sum(tvec * tvec)) * dv)
            tvec = tvec / max(tnorm, 1e-300)

            def deflate(v):
                return v - (float(np.sum(tvec * v)) * dv) * tvec
        else:
            def deflate(v):
                return v

        def jvp(z):
            v = deflate(z[:nn].reshape(g.shape))
            dlam = z[nn]
            vf = Field(g, v)
            out = (fractional_laplacian_free(vf, exps.s).values
                   - lam_v * v - dlam * vals
                   - hartree_jvp(fld, v, exps.p, exps.alpha)
                   - hartree_jvp(fld, v, exps.q, exps.alpha))
            if v_arr is not None:
                out = out + v_arr * v
            out = deflate(out) + (z[:nn].reshape(g.shape) - v)
            bottom = float(np.sum(vals * v)) * dv
            return np.concatenate([out.ravel(), [bottom]])

        def prec(z):
            v = z[:nn].reshape(g.shape)
            out = np.fft.ifftn(np.fft.fftn(v) / (sym + abs(lam_v))).real
            return np.concatenate([out.ravel(), [z[nn]]])

        op = LinearOperator((nn + 1, nn + 1), matvec=jvp)
        pre = LinearOperator((nn + 1, nn + 1), matvec=prec)
        rhs = -np.concatenate([deflate(r).ravel(), [c]])
        dz, _ = lgmres(op, rhs, M=pre, rtol=1e-8, atol=0.0, maxiter=300)
        dz_field = deflate(dz[:nn].reshape(g.shape))
        accepted = False
        step_len = 1.0
        for _ in range(12):
            tv = vals + step_len * dz_field
            tl = lam_v + step_len * dz[nn]
            tr, tc, tpc = full_residual(tv, tl)
            if fnorm(tr, tc, tv) < fn:
                vals, lam_v, r, c, pc = tv, tl, tr, tc, tpc
                fn = fnorm(r, c, vals)
                accepted = True
                break
            step_len *= 0.5
        if not accepted and not soft_translation:
            break
        if not accepted and soft_translation:
            vals2, fn2 = recenter(vals, lam_v, fn)
            if fn2 >= fn * (1.0 - 1e-3):
                stagnant += 1
                if stagnant >= 3:
                    break
            else:
                stagnant = 0
            if fn2 < fn:
                vals = vals2
                r, c, pc = full_residual(vals, lam_v)
                fn = fnorm(r, c, vals)
        if fn < config.newton_tol:
            break
    return Field(g, vals), lam_v, fn, pc


# ---------------------------------------------------------------------------
# Autonomous and non-autonomous solves
# ---------------------------------------------------------------------------

def _composite_solve(exps: ExponentSet, potential, a: float, grid, init: Field,
                     config: SolveConfig, center_cells: int = 0,
                     mu_eff: float = 0.0) -> SolveResult:
    """Alternate fiber rescaling and projected descent, then Newton."""
    dv = grid.cell_volume
    u = project_mass(init, a)
    trace = []
    trunc = None
    eta = config.step
    it = 0
    grad_res = np.inf
    stall = 0
    best_level = np.inf
    sym = grid.k_abs() ** (2.0 * exps.s) + 1.0
    for it in range(1, config.max_iter + 1):
        # (i) rescale onto the Pohozaev set (dilation about the carrier cell)
        prof = extract_profile(u, exps, mu_eff)
        fm = fiber_maximizer(prof)
        if abs(math.log(fm.t_star)) > 1e-14:
            centered = translate(u, -center_cells) if center_cells else u
            centered = _dilate_composite(centered, fm.t_star, config.alias_tol)
            u = translate(centered, center_cells) if center_cells else centered
            u = project_mass(_despeckle(u), a)
        if trunc is None:
            radius = hs_norm_free(u, exps.s)
            trunc = Truncation(4.0 * radius, 8.0 * radius)
        # (ii) preconditioned projected gradient step, Armijo on the
        # ray-reduced level (the raw step is stiff: |k|^{2s} amplifies
        # high-k noise, so descend in the (|k|^{2s}+1+|lam|)^{-1} metric)
        pieces = _Pieces(u, exps, potential)
        level = pieces.level(exps)
        grad_res = pieces.grad_residual(dv)
        poho_res = pieces.poho_res(exps)
        trace.append(("descent", it, level, grad_res, poho_res))
        if grad_res < config.switch_tol or grad_res < config.grad_tol:
            break
        # the rescale/resample noise floor is ~1e-10 of the level: once the
        # per-step decrease sinks below it, descent treads water and the
        # Newton endgame takes over
        if level > best_level - 1e-11 * (1.0 + abs(best_level)):
            stall += 1
            if stall >= 6:
                break
        else:
            stall = 0
        best_level = min(best_level, level)
        d = pieces.grad - pieces.lam * u.values
        dp = np.fft.ifftn(np.fft.fftn(d) / (sym + abs(pieces.lam))).real
        dp -= (float(np.sum(dp * u.values)) * dv / a) * u.values
        slope = float(np.sum(d * dp)) * dv  # positive: M^{-1} is SPD
        if slope <= 0.0:
            break
        scalar_pot = np.isscalar(potential) or potential is None
        if scalar_pot:
            r_base = fm.value
        else:
            v_arr = potential.values if isinstance(potential, Field) \
                else np.asarray(potential)
            r_base = pieces.level(exps)  # u is on the Pohozaev frame already
        # preconditioned steps are only linearly stable for eta = O(1);
        # larger eta can lower R while pumping high-k modes geometrically
        eta = min(eta * 1.5, 1.2)
        accepted = False
        while eta >= 1e-14:
            trial = project_mass(Field(grid, u.values - eta * dp), a)
            if scalar_pot:
                r_trial = _ray_level(trial, exps, mu_eff)
            else:
                r_trial = _ray_level_sampled(trial, exps, v_arr, center_cells,
                                             config.alias_tol)
            if r_trial <= r_base - 1e-4 * eta * slope:
                u = project_mass(_despeckle(trial), a)
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break  # stalled this close to criticality: Newton finishes
    # Newton endgame on the true coupled system
    pieces = _Pieces(u, exps, potential)
    lam = pieces.lam
    if config.refine and config.max_iter >= 1:
        u_n, lam, fn, pieces = _newton_constrained(u, lam, exps, potential, a, config)
        u = project_mass(u_n, a)
        pieces = _Pieces(u, exps, potential)
        lam = pieces.lam
        trace.append(("newton", it + 1, pieces.level(exps),
                      pieces.grad_residual(dv), pieces.poho_res(exps)))
    grad_res = pieces.grad_residual(dv)
    poho_res = pieces.poho_res(exps)
    level = pieces.level(exps)
    converged = bool(grad_res < config.grad_tol and poho_res < config.poho_tol)
    if trunc is not None and hs_norm_free(u, exps.s) >= trunc.R0:
        raise TruncationActive(
            f"converged H^s norm {hs_norm_free(u, exps.s):.4g} reached R0={trunc.R0:.4g}")
    return SolveResult(field=u, lam=lam, level=level, poho_residual=poho_res,
                       grad_residual=grad_res, iterations=it,
                       converged=converged, trace=tuple(trace))


def solve_autonomous(exps: ExponentSet, mu: float, a: float, grid,
                     init: Field | None = None,
                     config: SolveConfig | None = None) -> SolveResult:
    """Mountain-pass solution of the autonomous problem at mass a.

    The level reported is J_mu(u) = J_0(u) + mu*a/2; the multiplier
    satisfies lam < mu at any nontrivial critical point.
    """
    config = config or SolveConfig()
    if a <= 0.0:
        raise OutOfRange(f"mass must be positive, got {a}")
    if config.max_iter < 1:
        raise NoConvergence("iteration budget is zero", [])
    init = init if init is not None else default_init(grid, a)
    return _composite_solve(exps, mu, a, grid, init, config, mu_eff=mu)


def solve_nonautonomous(exps: ExponentSet, potential, a: float, grid,
                        init: Field | None = None,
                        config: SolveConfig | None = None,
                        center_cells: int = 0) -> SolveResult:
    """Critical point of the non-autonomous functional with sampled V(eps x).

    Fiber rescaling freezes the (slowly varying) potential term and dilates
    about the carrier cell; the Newton endgame solves the exact system.
    """
    config = config or SolveConfig()
    if config.max_iter < 1:
        raise NoConvergence("iteration budget is zero", [])
    init = init if init is not None else default_init(grid, a)
    if np.isscalar(potential):
        return _composite_solve(exps, float(potential), a, grid, init, config,
                                mu_eff=float(potential))
    v_arr = potential.values if isinstance(potential, Field) \
        else np.asarray(potential)
    if float(np.ptp(v_arr)) == 0.0:
        mu = float(v_arr.reshape(-1)[0])
        return _composite_solve(exps, mu, a, grid, init, config, mu_eff=mu)
    return _composite_solve(exps, potential, a, grid, init, config,
                            center_cells=center_cells, mu_eff=0.0)


# ---------------------------------------------------------------------------
# Concentration profiles
# ---------------------------------------------------------------------------

def make_profile(w: Field, y, eps: float, a: float,
                 cutoff_radius: float | None = None):
    """Cut the autonomous ground state at radius R_eps = eps^{-1/2},
    translate to the well position y/eps (snapped to the grid), and
    renormalize to S(a).  Returns (field, actual_center_in_slow_coords).
    """
    from .energy import smooth_cutoff
    g = w.grid
    if eps <= 0.0:
        raise OutOfRange(f"eps must be positive, got {eps}")
    r_eps = cutoff_radius if cutoff_radius is not None else eps ** -0.5
    y_vec = np.atleast_1d(np.asarray(y, dtype=float))
    if y_vec.size != g.N:
        raise OutOfRange(f"well position has {y_vec.size} coords, grid has N={g.N}")
    cells = np.rint((y_vec / eps) / g.dx).astype(int)
    shift = cells * g.dx
    if np.any(np.abs(shift) + 2.0 * r_eps > 0.5 * g.extent - 2.0 * g.dx):
        from .errors import OutOfBox
        raise OutOfBox(
            f"profile at y/eps={y_vec / eps} with support radius {2 * r_eps:.3g} "
            f"exits the box of half-width {0.5 * g.extent:.3g}")
    chi = smooth_cutoff(g.radius(), r_eps, 2.0 * r_eps)
    cut = Field(g, w.values * chi)
    moved = translate(cut, tuple(cells))
    out = project_mass(moved, a)
    center = shift * eps
    return out, (float(center[0]) if g.N == 1 else center)


# ---------------------------------------------------------------------------
# Level tables and the kinetic-bound root
# ---------------------------------------------------------------------------

def level_curves(exps: ExponentSet, a_list, mu_list, grid,
                 config: SolveConfig | None = None, a0: float | None = None):
    """b_{0,T,a} over a_list (warm-started) and the mu-affine law over
    mu_list at mass a0 (middle of a_list when not given).

    Returns (a_rows, mu_rows): lists of dicts, one per solve; failed cells
    carry converged=False instead of aborting the table.
    """
    config = config or SolveConfig()
    a_rows = []
    warm = None
    for a in a_list:
        try:
            init = project_mass(warm, a) if warm is not None else None
            res = solve_autonomous(exps, 0.0, a, grid, init=init, config=config)
            warm = res.field
            a_rows.append(dict(a=a, mu=0.0, level=res.level, lam=res.lam,
                               poho=res.poho_residual, grad=res.grad_residual,
                               iterations=res.iterations, converged=res.converged))
        except (NoConvergence, StepUnderflow, TruncationActive) as exc:
            a_rows.append(dict(a=a, mu=0.0, level=math.nan, lam=math.nan,
                               poho=math.nan, grad=math.nan, iterations=0,
                               converged=False, error=str(exc)))
    mu_rows = []
    if a0 is None:
        a0 = a_list[len(a_list) // 2] if a_list else None
    for mu in mu_list:
        try:
            res = solve_autonomous(exps, mu, a0, grid, config=config)
            mu_rows.append(dict(a=a0, mu=mu, level=res.level, lam=res.lam,
                                poho=res.poho_residual, grad=res.grad_residual,
                                iterations=res.iterations, converged=res.converged))
        except (NoConvergence, StepUnderflow, TruncationActive) as exc:
            mu_rows.append(dict(a=a0, mu=mu, level=math.nan, lam=math.nan,
                                poho=math.nan, grad=math.nan, iterations=0,
                                converged=False, error=str(exc)))
    return a_rows, mu_rows


def x_star_root(exps: ExponentSet, s_alpha: float, k_q: float, a: float) -> float:
    """Unique positive root of
        h(X) = S X^{p-1} + K_q S^{-theta_q} a^{q(1-gamma_q)} X^{q gamma_q - 1} - 1,
    located by bisection (h is strictly increasing from -1)."""
    coef = k_q * s_alpha ** (-exps.theta_q) * a ** (exps.q * (1.0 - exps.gamma_q))

    def h(x):
        return (s_alpha * x ** (exps.p - 1.0)
                + coef * x ** (exps.q * exps.gamma_q - 1.0) - 1.0)

    lo, hi = 1e-12, 1.0
    while h(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise OutOfRange("X* root escaped to infinity")
    while h(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-200:
            raise OutOfRange("X* root collapsed to zero")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
