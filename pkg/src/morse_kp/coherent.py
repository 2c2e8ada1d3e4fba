"""
Klauder-Perelomov coherent states of the Morse oscillator.

In the number basis the normalized state with stereographic label Z and
phase alpha is

    c_n = (1 + |Z|^2)^(-l/2) sqrt(C(l, n)) Z^n exp(-i alpha E_n),

a binomial (SU(2)-like) superposition of the l+1 bound states.  The
measure solving the resolution of identity is, after the angular integral,
(l+1) (1+x)^-2 dx with x = |Z|^2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .ladder import build_ladder
from .numerics import halfline_rule, log_binomials, matrix_exp
from .spectrum import MorseSpace

__all__ = [
    "CoherentState",
    "MeasureDensity",
    "closed_form_state",
    "binomial_weights",
    "displaced_state",
    "DisplacementDiagnostics",
    "overlap",
    "overlap_kernel",
    "ResolutionReport",
    "identity_resolution_check",
    "evolve",
]


@dataclass(frozen=True)
class CoherentState:
    space: MorseSpace
    Z: complex
    alpha: float
    coeffs: np.ndarray = field(repr=False)

    @property
    def x(self) -> float:
        return abs(self.Z) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2


_DIRECT_MAX_L = 1000


def binomial_weights(l: int, x: float) -> np.ndarray:
    """|c_n|^2 = C(l,n) x^n / (1+x)^l.

    Computed as C(l,n) x^n (or C(l,n) x^(n-l) for x > 1) normalized by a
    compensated sum, so each weight carries only a few ulps of error.  Log
    space is used when C(l, n) would overflow.
    """
    n = np.arange(l + 1)
    if x == 0:
        w = np.zeros(l + 1)
        w[0] = 1.0
        return w
    if not math.isfinite(x):
        w = np.zeros(l + 1)
        w[-1] = 1.0
        return w
    if l <= _DIRECT_MAX_L:
        shift = l if x > 1 else 0
        w = np.array([math.comb(l, k) * x ** (k - shift) for k in range(l + 1)])
        return w / math.fsum(w)
    log_p = math.log(x) - math.log1p(x)
    log_q = -math.log1p(x)
    return np.exp(log_binomials(l) + n * log_p + (l - n) * log_q)


def closed_form_state(space: MorseSpace, Z: complex, alpha: float = 0.0) -> CoherentState:
    Z = complex(Z)
    if not cmath.isfinite(Z):
        raise DomainError(f"coherent-state label must be finite, got {Z}")
    l = space.l
    n = np.arange(l + 1)
    amplitude = np.sqrt(binomial_weights(l, abs(Z) ** 2))
    theta = cmath.phase(Z) if Z != 0 else 0.0
    coeffs = amplitude * np.exp(1j * n * theta) * np.exp(-1j * alpha * space.energy_array())
    return CoherentState(space, Z, float(alpha), coeffs)


def evolve(state: CoherentState, t: float) -> CoherentState:
    """Apply exp(-i t H): every coefficient picks up exp(-i t E_n)."""
    phases = np.exp(-1j * t * state.space.energy_array())
    return CoherentState(state.space, state.Z, state.alpha + t, state.coeffs * phases)


def _check_pair(s1: CoherentState, s2: CoherentState) -> None:
    if s1.space.l != s2.space.l:
        raise DomainError(f"states live in different spaces (l={s1.space.l} vs l={s2.space.l})")
    if s1.alpha != s2.alpha:
        raise DomainError("overlap is only defined for states with the same alpha")


def overlap(s1: CoherentState, s2: CoherentState) -> complex:
    """<s1|s2> from the coefficient vectors."""
    _check_pair(s1, s2)
    return complex(np.vdot(s1.coeffs, s2.coeffs))


def overlap_kernel(l: int, Z1: complex, Z2: complex) -> complex:
    """(1 + conj(Z1) Z2)^l / ((1+|Z1|^2)^(l/2) (1+|Z2|^2)^(l/2))."""
    base = (1 + Z1.conjugate() * Z2) / (math.sqrt(1 + abs(Z1) ** 2) * math.sqrt(1 + abs(Z2) ** 2))
    return complex(base**l)


@dataclass(frozen=True)
class MeasureDensity:
    """Isotropic measure on the label plane.

    ``h(x) = (l+1)/(1+x)^(l+2)`` is the Mellin-inverted density; combined
    with the (1+x)^l factor and the angular integral it gives the radial
    weight (l+1)/(1+x)^2 in x = |Z|^2.
    """

    l: int

    def h(self, x):
        return (self.l + 1) / (1.0 + np.asarray(x, dtype=float)) ** (self.l + 2)

    def radial_weight(self, x):
        return (self.l + 1) / (1.0 + np.asarray(x, dtype=float)) ** 2

    def moment(self, n: int, order: int = 200) -> float:
        """int_0^inf x^n h(x) dx by half-line quadrature."""
        rule = halfline_rule(order)
        return rule.integrate(rule.nodes**n * self.h(rule.nodes))

    def integrate(self, func, order: int = 200) -> float:
        """int dmu F(|Z|^2) for an isotropic F, angular part done analytically."""
        rule = halfline_rule(order)
        return rule.integrate(self.radial_weight(rule.nodes) * func(rule.nodes))


class ResolutionReport(NamedTuple):
    l: int
    order: int
    moments: np.ndarray
    targets: np.ndarray
    residuals: np.ndarray
    max_residual: float


def identity_resolution_check(space: MorseSpace, quad_order: int = 200) -> ResolutionReport:
    """Compare the radial moments of h with n!(l-n)!/l! for n = 0..l."""
    l = space.l
    if quad_order < 2 * (l + 2):
        raise DomainError(f"quad_order must be at least 2(l+2) = {2 * (l + 2)}")
    measure = MeasureDensity(l)
    moments = np.array([measure.moment(n, quad_order) for n in range(l + 1)])
    targets = np.exp(-log_binomials(l))
    residuals = np.abs(moments / targets - 1.0)
    return ResolutionReport(l, quad_order, moments, targets, residuals, float(residuals.max()))


class DisplacementDiagnostics(NamedTuple):
    fidelity: float
    label_Z: complex
    best_fit_Z: complex
    best_fit_fidelity: float
    rate: float
    antihermitian: bool


def _fidelity(space, vec, Z, alpha):
    return abs(np.vdot(closed_form_state(space, Z, alpha).coeffs, vec))


def _golden_max(f, a, b, tol):
    inv = (math.sqrt(5) - 1) / 2
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return (a + b) / 2


def _overlap_slope(space, vec, phi, alpha, theta):
    # Re(conj(a) a') for a(theta) = <Z(tan theta)|vec>, s^n (1+s^2)^(-l/2) = sin^n cos^(l-n)
    l = space.l
    n = np.arange(l + 1)
    coef = np.sqrt(np.exp(log_binomials(l))) * np.exp(-1j * n * phi + 1j * alpha * space.energy_array()) * vec
    sn, cs = math.sin(theta), math.cos(theta)
    a = np.sum(coef * sn**n * cs ** (l - n))
    da = np.sum(coef * (n * sn ** np.maximum(n - 1, 0) * cs ** (l - n + 1) - (l - n) * sn ** (n + 1) * cs ** np.maximum(l - n - 1, 0)))
    return (a.conjugate() * da).real


def _refine_stationary(space, vec, phi, alpha, lo, hi, guess):
    """Bisect the analytic slope of |<Z|vec>|^2 when it changes sign on [lo, hi]."""
    g_lo, g_hi = _overlap_slope(space, vec, phi, alpha, lo), _overlap_slope(space, vec, phi, alpha, hi)
    if not (g_lo > 0 > g_hi):
        return guess
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _overlap_slope(space, vec, phi, alpha, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def displaced_state(space: MorseSpace, z: complex, alpha: float = 0.0, tol: float = 1e-10):
    """Act with exp(z A+ - conj(z) A-) on the ground state.

    Returns the normalized vector and diagnostics comparing it with the
    closed-form family: fidelity at the label Z = (z/|z|) tan|z|, and the
    real-line best fit Z = s exp(i arg z) found by a coarse scan followed by
    golden-section refinement in arctan(s).  ``rate`` is arctan(s)/|z|.
    """
    z = complex(z)
    lad = build_ladder(space, alpha)
    gen = z * lad.a_plus - z.conjugate() * lad.a_minus
    antiherm = bool(np.allclose(gen.conj().T, -gen, atol=1e-14))
    vec = matrix_exp(gen)[:, 0]
    vec = vec / np.linalg.norm(vec)
    r = abs(z)
    phi = cmath.phase(z) if z != 0 else 0.0
    if r == 0:
        return vec, DisplacementDiagnostics(_fidelity(space, vec, 0j, alpha), 0j, 0j, 1.0, 0.0, antiherm)
    label = cmath.rect(math.tan(r), phi) if r < math.pi / 2 else complex("nan")
    fid_label = _fidelity(space, vec, label, alpha) if cmath.isfinite(label) else float("nan")

    edge = math.pi / 2 - 1e-9

    def f(theta):
        return _fidelity(space, vec, cmath.rect(math.tan(theta), phi), alpha)

    grid = np.linspace(-edge, edge, 721)
    vals = [f(t) for t in grid]
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    lo, hi = max(-edge, grid[i] - step), min(edge, grid[i] + step)
    theta = _golden_max(f, lo, hi, tol)
    theta = _refine_stationary(space, vec, phi, alpha, lo, hi, theta)
    s = math.tan(theta)
    best = cmath.rect(s, phi)
    return vec, DisplacementDiagnostics(fid_label, label, best, f(theta), math.atan(s) / r, antiherm)
