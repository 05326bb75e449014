"""Fibering-map machinery along the mass-preserving dilation ray.

For u on the mass sphere and u_t(x) = t^{N/2} u(tx), the autonomous energy
reduces to O(1) arithmetic in the profile (A, B_p, B_q, a):

    phi(t) = t^{2s} A/2 + mu a/2 - t^{dp} B_p/(2p) - t^{dq} B_q/(2q),
    Psi(t) = 2 phi'(t)/t^{2s-1}
           = 2sA - (dp/p) t^{dp-2s} B_p - (dq/q) t^{dq-2s} B_q.

Psi is strictly decreasing with Psi(0+) = 2sA > 0, so phi has a unique
interior maximizer t*, characterized by P(u_{t*}) = 0 (the Pohozaev set).
The ray-reduced level R(u) = phi(t*) is the quantity whose infimum over
the sphere is the mountain-pass value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ChoqlabError, OutOfRange, ZeroField
from .energy import hartree_energy
from .params import ExponentSet
from .spectral import Field, kinetic_energy_free, mass

__all__ = [
    "FiberProfile", "FiberMax",
    "extract_profile", "fiber_value", "psi", "fiber_maximizer", "ray_level",
]


@dataclass(frozen=True)
class FiberProfile:
    """Ray coefficients of one field: immutable once extracted."""

    A: float
    B_p: float
    B_q: float
    a: float
    mu: float
    exps: ExponentSet

    def __post_init__(self):
        if self.A <= 0.0 or self.a <= 0.0:
            raise ZeroField("fiber profile requires A > 0 and a > 0")
        if self.B_p < 0.0 or self.B_q < 0.0:
            raise OutOfRange("Hartree coefficients must be nonnegative")

    def with_mu(self, mu: float) -> "FiberProfile":
        return FiberProfile(self.A, self.B_p, self.B_q, self.a, mu, self.exps)


@dataclass(frozen=True)
class FiberMax:
    t_star: float
    value: float
    psi_bracket: float  # final relative bracket width of the Psi root


def extract_profile(u: Field, exps: ExponentSet, mu: float = 0.0) -> FiberProfile:
    """Compute (A, B_p, B_q, a) once; fiber evaluations are then O(1)."""
    a = mass(u)
    if a == 0.0:
        raise ZeroField("cannot extract a fiber profile from the zero field")
    return FiberProfile(
        A=kinetic_energy_free(u, exps.s),
        B_p=hartree_energy(u, exps.p, exps.alpha),
        B_q=hartree_energy(u, exps.q, exps.alpha),
        a=a, mu=mu, exps=exps,
    )


def fiber_value(prof: FiberProfile, t: float) -> float:
    """phi(t): the untruncated autonomous energy of u_t."""
    if t <= 0.0:
        raise OutOfRange(f"t must be positive, got {t}")
    e = prof.exps
    return (0.5 * t ** (2.0 * e.s) * prof.A + 0.5 * prof.mu * prof.a
            - t ** e.delta_p * prof.B_p / (2.0 * e.p)
            - t ** e.delta_q * prof.B_q / (2.0 * e.q))


def psi(prof: FiberProfile, t: float) -> float:
    """Psi(t) = 2 phi'(t) / t^{2s-1}; strictly decreasing, unique zero."""
    if t <= 0.0:
        raise OutOfRange(f"t must be positive, got {t}")
    e = prof.exps
    return (2.0 * e.s * prof.A
            - (e.delta_p / e.p) * t ** (e.delta_p - 2.0 * e.s) * prof.B_p
            - (e.delta_q / e.q) * t ** (e.delta_q - 2.0 * e.s) * prof.B_q)


def fiber_maximizer(prof: FiberProfile, rel_tol: float = 1e-12) -> FiberMax:
    """Unique root of Psi by bracketing + bisection.

    Psi(0+) = 2sA > 0 and both Hartree exponents exceed 2s, so doubling the
    upper end from t=1 always produces a sign change.
    """
    if prof.B_p + prof.B_q <= 0.0:
        raise ChoqlabError(
            "NoPositivePart: Psi never changes sign without a Hartree term")
    lo, hi = 1e-6, 1.0
    if psi(prof, lo) <= 0.0:
        # root below the default bracket: shrink lo (possible for extreme
        # profiles; Psi(0+)>0 guarantees termination)
        while psi(prof, lo) <= 0.0 and lo > 1e-300:
            lo *= 0.5
    for _ in range(2000):
        if psi(prof, hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise ChoqlabError("internal error: Psi stayed positive up to huge t")
    while (hi - lo) > rel_tol * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        if psi(prof, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t_star = 0.5 * (lo + hi)
    return FiberMax(t_star=t_star, value=fiber_value(prof, t_star),
                    psi_bracket=(hi - lo) / t_star)


def ray_level(u: Field, exps: ExponentSet, mu: float = 0.0) -> float:
    """R(u) = max_t phi(t): the ray-reduced level minimized by the solver."""
    return fiber_maximizer(extract_profile(u, exps, mu)).value


def pure_q_maximizer(prof: FiberProfile) -> float:
    """Closed-form root when B_p = 0: t* = (2sqA/(dq Bq))^{1/(dq-2s)}."""
    e = prof.exps
    if prof.B_q <= 0.0:
        raise OutOfRange("pure-q maximizer needs B_q > 0")
    num = 2.0 * e.s * e.q * prof.A
    den = e.delta_q * prof.B_q
    return (num / den) ** (1.0 / (e.delta_q - 2.0 * e.s))


def pure_p_maximizer(prof: FiberProfile) -> float:
    """Closed-form root when B_q = 0: t* = (2spA/(dp Bp))^{1/(dp-2s)}."""
    e = prof.exps
    if prof.B_p <= 0.0:
        raise OutOfRange("pure-p maximizer needs B_p > 0")
    num = 2.0 * e.s * e.p * prof.A
    den = e.delta_p * prof.B_p
    return (num / den) ** (1.0 / (e.delta_p - 2.0 * e.s))
