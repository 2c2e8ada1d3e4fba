"""
Canonical ensemble of Morse oscillators seen through the coherent states.

Boltzmann weights are w_n = exp(-A n + B n^2) / Z_l.  The Husimi function,
the diagonal P-representation and the thermal averages built on them are
each computed by two independent routes and cross-checked.

The P-function is exp[B d^2/dA^2] applied to

    P_0(x; A) = e^A ((1 + x) / (1 + e^A x))^(l+2),

the B = 0 solution of the moment problem.  Its formal Taylor series in B is
only asymptotic (the bracket has poles at distance >= pi from the real A
axis), so :func:`p_function` first sums the series with exact Euler-term
derivatives and, when that does not settle, falls back to the Gaussian
convolution form of the same operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .coherent import MeasureDensity, binomial_weights
from .errors import ConsistencyError, DomainError, NumericalError
from .heat import EulerTermSeries, ExpSum, gaussian_smooth
from .numerics import halfline_rule, log_binomials, ratio_integral
from .spectrum import ThermalParams
from .statistics import DiagonalObservable

__all__ = [
    "ThermalState",
    "thermal_state",
    "partition",
    "partition_expsum",
    "heat_apply",
    "HusimiValue",
    "husimi",
    "husimi_values",
    "husimi_trace_check",
    "PValue",
    "p_function",
    "p_values",
    "MomentCheck",
    "p_moment_check",
    "p_moment_checks",
    "TraceCheck",
    "p_trace_check",
    "thermal_moment",
    "thermal_g2",
    "thermal_mandel",
    "ThermalAverage",
    "thermal_average",
    "Thermodynamics",
    "thermodynamics",
    "entropy",
    "heat_capacity",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ThermalState:
    params: ThermalParams
    partition: float
    boltzmann_weights: np.ndarray = field(repr=False)

    @property
    def l(self) -> int:
        return self.params.l


def partition(params: ThermalParams) -> float:
    """Z_l = sum_n exp(-A n + B n^2), compensated summation."""
    with np.errstate(over="ignore"):
        Z = math.fsum(np.exp(-params.exponents()))
    if not math.isfinite(Z):
        raise NumericalError(f"partition function overflows at A={params.A}, B={params.B}")
    return Z


def thermal_state(params: ThermalParams) -> ThermalState:
    Z = partition(params)
    w = np.exp(-params.exponents()) / Z
    return ThermalState(params, Z, w)


def heat_apply(f: ExpSum, B: float) -> ExpSum:
    """exp[B d^2/dA^2] on an exponential sum; exact."""
    return f.heat(B)


def partition_expsum(params: ThermalParams) -> ExpSum:
    """Z_l as a function of A at fixed B: heat operator on sum_n exp(-A n)."""
    harmonic = ExpSum([(1.0, n) for n in range(params.l + 1)])
    return heat_apply(harmonic, params.B)


# -- Husimi function ---------------------------------------------------------


class HusimiValue(NamedTuple):
    direct: float
    operator_form: float


def husimi_values(thermal: ThermalState, x) -> np.ndarray:
    """Direct-sum Husimi function on an array of x = |Z|^2."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        out[i] = math.fsum(binomial_weights(thermal.l, xi) * thermal.boltzmann_weights)
    return out


def husimi(thermal: ThermalState, x: float, tol: float = 1e-13) -> HusimiValue:
    """<Z|rho|Z> by the direct sum and by the heat operator on the harmonic form.

    The harmonic form ((1 + x e^-A)/(1 + x))^l is expanded binomially into an
    :class:`ExpSum` in A; the heat operator is exact there.
    """
    if not x >= 0:
        raise DomainError(f"x = |Z|^2 must be non-negative, got {x}")
    direct = float(husimi_values(thermal, x)[0])
    l = thermal.l
    weights = binomial_weights(l, x)
    harmonic = ExpSum([(weights[n], n) for n in range(l + 1)])
    operator_form = heat_apply(harmonic, thermal.params.B)(thermal.params.A) / thermal.partition
    if not math.isclose(direct, operator_form, rel_tol=tol, abs_tol=tol * 1e-3):
        raise ConsistencyError(f"Husimi routes disagree: {direct!r} vs {operator_form!r}")
    return HusimiValue(direct, operator_form)


def husimi_trace_check(thermal: ThermalState, quad_order: int = 200) -> float:
    """|int dmu <Z|rho|Z> - 1|."""
    measure = MeasureDensity(thermal.l)
    return abs(measure.integrate(lambda x: husimi_values(thermal, x), quad_order) - 1.0)


# -- P-function --------------------------------------------------------------


class PValue(NamedTuple):
    value: float
    k_used: int
    converged: bool
    method: str


def _log_bracket(l: int, a, x):
    # log of e^a ((1+x)/(1+e^a x))^(l+2), safe for large |a| and x
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        log_ux = a + np.log(x)
    return a + (l + 2) * (np.log1p(x) - np.logaddexp(0.0, log_ux))


def _p_series(l: int, A: float, B: float, x: float, tol: float, k_max: int):
    """Partial sums of sum_k B^k/k! (d/dA)^(2k) bracket at one x.

    Returns (value, k_used, converged).  Convergence needs two consecutive
    terms below tol * |sum| (a single exact zero can occur by symmetry).
    Summation is abandoned once the term envelope has grown by 100x past
    its minimum, and the optimally truncated sum is returned.
    """
    u = math.exp(A)
    prefactor = (1.0 + x) ** (l + 2)
    series = EulerTermSeries.bracket(l, x)
    total = prefactor * series.evaluate(u)
    if B == 0:
        return total, 0, True
    best_total, best_env, best_k = total, math.inf, 0
    prev_small = False
    prev_abs = abs(total)
    for k in range(1, k_max + 1):
        series = series.euler_derivative().euler_derivative()
        term = B**k / math.factorial(k) * prefactor * series.evaluate(u)
        total += term
        small = abs(term) <= tol * abs(total)
        if small and prev_small:
            return total, k, True
        prev_small = small
        env = max(abs(term), prev_abs)
        prev_abs = abs(term)
        if env < best_env:
            best_total, best_env, best_k = total, env, k
        elif env > 100 * best_env and k >= best_k + 4:
            return best_total, k, False
    return best_total, k_max, False


def p_values(thermal: ThermalState, x, tol: float = 1e-10, k_max: int = 60, method: str = "auto"):
    """Vectorized P-function.

    Parameters
    ----------
    thermal : ThermalState
    x : array_like
        Points x = |Z|^2 >= 0.
    tol : float
        Relative stopping tolerance, for the series and for the Gauss-Hermite
        refinement alike.
    k_max : int
        Largest series order attempted.
    method : {"auto", "series", "kernel"}
        ``series`` returns the (possibly unconverged) truncated series;
        ``kernel`` uses the Gaussian convolution only; ``auto`` keeps the
        series where it converges and uses the convolution elsewhere.

    Returns
    -------
    values, k_used, converged : ndarray
    methods : list of str
    """
    if method not in ("auto", "series", "kernel"):
        raise DomainError(f"unknown P-function method {method!r}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise DomainError("x = |Z|^2 must be non-negative")
    l, A, B = thermal.l, thermal.params.A, thermal.params.B
    values = np.empty_like(x)
    k_used = np.zeros(x.shape, dtype=int)
    converged = np.zeros(x.shape, dtype=bool)
    methods = ["series"] * len(x)
    if method in ("auto", "series"):
        for i, xi in enumerate(x):
            values[i], k_used[i], converged[i] = _p_series(l, A, B, xi, tol, k_max)
    need = ~converged if method == "auto" else np.ones(x.shape, dtype=bool)
    if method != "series" and np.any(need):
        xs = x[need]
        smooth = gaussian_smooth(lambda a: np.exp(_log_bracket(l, a, xs[None, :])), A, B, tol=tol)
        values[need] = smooth.value
        converged[need] = smooth.converged
        for i in np.flatnonzero(need):
            methods[i] = "kernel"
    return values, k_used, converged, methods


def p_function(thermal: ThermalState, x: float, tol: float = 1e-10, k_max: int = 60, method: str = "auto") -> PValue:
    """P_l(x) at a single point; see :func:`p_values`.  Negative values are legal."""
    v, k, c, m = p_values(thermal, [x], tol, k_max, method)
    return PValue(float(v[0]), int(k[0]), bool(c[0]), m[0])


class MomentCheck(NamedTuple):
    residual: float
    value: float
    target: float
    converged: bool
    kernel_nodes: int


def _p_on_rule(thermal, quad_order, tol, k_max, method):
    rule = halfline_rule(quad_order)
    vals, _, conv, methods = p_values(thermal, rule.nodes, tol, k_max, method)
    return rule, vals, bool(np.all(conv)), sum(m == "kernel" for m in methods)


def p_moment_check(
    thermal: ThermalState, n: int, quad_order: int = 200, tol: float = 1e-10, k_max: int = 60, method: str = "auto", _cache=None
) -> MomentCheck:
    """Relative residual of int x^n (1+x)^-(l+2) P(x) dx against
    exp(-A n + B n^2) n!(l-n)!/(l+1)!."""
    l = thermal.l
    if int(n) != n or not 0 <= n <= l:
        raise DomainError(f"n must lie in 0..{l}")
    rule, P, conv, nk = _cache or _p_on_rule(thermal, quad_order, tol, k_max, method)
    value = rule.integrate(rule.nodes**n * (1.0 + rule.nodes) ** -(l + 2) * P)
    target = math.exp(-thermal.params.exponents()[n] - log_binomials(l)[n]) / (l + 1)
    return MomentCheck(abs(value / target - 1.0), value, target, conv, nk)


def p_moment_checks(thermal, quad_order=200, tol=1e-10, k_max=60, method="auto") -> list:
    """All l+1 moment checks sharing one evaluation of P on the quadrature grid."""
    cache = _p_on_rule(thermal, quad_order, tol, k_max, method)
    return [p_moment_check(thermal, n, quad_order, tol, k_max, method, _cache=cache) for n in range(thermal.l + 1)]


class TraceCheck(NamedTuple):
    residual: float
    trace: float
    converged: bool
    inner_quadrature: float | None
    inner_closed: float | None
    geometric_sum: float | None


def p_trace_check(thermal: ThermalState, quad_order: int = 200, tol: float = 1e-10, k_max: int = 60, method: str = "auto") -> TraceCheck:
    """(1/Z_l) int dmu P(|Z|^2), target 1.

    For B = 0 and A > 0 the inner integral int (1+x)^l (1+e^A x)^-(l+2) dx is
    also compared with the closed ratio integral, and (l+1) e^A times it with
    the geometric sum sum_n e^(-A n).
    """
    l, A, B = thermal.l, thermal.params.A, thermal.params.B
    rule, P, conv, _ = _p_on_rule(thermal, quad_order, tol, k_max, method)
    x = rule.nodes
    trace = rule.integrate((l + 1) * (1.0 + x) ** -2 * P) / thermal.partition
    inner_q = inner_c = geo = None
    if B == 0 and A > 0:
        u = math.exp(A)
        inner_q = rule.integrate(np.exp(l * np.log1p(x) - (l + 2) * np.log1p(u * x)))
        inner_c = ratio_integral(1.0, 1.0, u, 1.0, l + 1)
        geo = math.fsum(math.exp(-A * n) for n in range(l + 1))
    return TraceCheck(abs(trace - 1.0), trace, conv, inner_q, inner_c, geo)


# -- thermal moments and photon-statistics analogues -------------------------


def thermal_moment(thermal: ThermalState, s: int, tol: float = 1e-12) -> float:
    """<N^s>_l by the direct sum and by (-1)^s d^s Z/dA^s / Z on the ExpSum."""
    if int(s) != s or s < 0:
        raise DomainError(f"moment order must be a non-negative integer, got {s!r}")
    n = np.arange(thermal.l + 1, dtype=float)
    direct = math.fsum(n**s * thermal.boltzmann_weights)
    Zs = partition_expsum(thermal.params)
    deriv = (-1) ** s * Zs.derivative(int(s))(thermal.params.A) / Zs(thermal.params.A)
    if not math.isclose(direct, deriv, rel_tol=tol, abs_tol=1e-300):
        raise ConsistencyError(f"<N^{s}>: direct {direct!r} vs derivative {deriv!r}")
    return direct


def _log_derivatives(params: ThermalParams):
    Zs = partition_expsum(params)
    A = params.A
    Z0, Z1, Z2 = Zs(A), Zs.derivative(1)(A), Zs.derivative(2)(A)
    L1 = Z1 / Z0
    if L1 == 0:
        raise DomainError("d ln Z/dA underflows; g2 and Q are undefined in the ground-state limit")
    L2 = Z2 / Z0 - L1 * L1
    return L1, L2


def _stat_inputs(thermal: ThermalState):
    if not math.isfinite(thermal.params.A):
        raise DomainError("A must be finite")
    n = np.arange(thermal.l + 1, dtype=float)
    mean = math.fsum(n * thermal.boltzmann_weights)
    if not mean * mean > 0:
        raise DomainError("<N>_l vanishes or underflows; g2 and Q are undefined")
    fact = math.fsum(n * (n - 1) * thermal.boltzmann_weights)
    return mean, fact


def _route_tol(tol, *parts):
    # absolute tolerance widened by the rounding budget of the log-derivative form
    return tol + 8 * _EPS * sum(abs(p) for p in parts)


def thermal_g2(thermal: ThermalState, tol: float = 1e-11) -> float:
    """(<N^2> - <N>)/<N>^2 versus 1 + 1/L1 + L2/L1^2 with L_k = d^k ln Z/dA^k."""
    mean, fact = _stat_inputs(thermal)
    value = fact / mean**2
    L1, L2 = _log_derivatives(thermal.params)
    log_form = 1.0 + 1.0 / L1 + L2 / L1**2
    if abs(value - log_form) > _route_tol(tol, 1.0, 1.0 / L1, L2 / L1**2):
        raise ConsistencyError(f"thermal g2 routes disagree: {value!r} vs {log_form!r}")
    return value


def thermal_mandel(thermal: ThermalState, tol: float = 1e-11) -> float:
    """<N>(g2 - 1) versus -1 - L2/L1."""
    mean, fact = _stat_inputs(thermal)
    value = (fact - mean * mean) / mean
    L1, L2 = _log_derivatives(thermal.params)
    log_form = -1.0 - L2 / L1
    if abs(value - log_form) > _route_tol(tol, 1.0, L2 / L1):
        raise ConsistencyError(f"thermal Mandel Q routes disagree: {value!r} vs {log_form!r}")
    return value


class ThermalAverage(NamedTuple):
    value: float
    basis_sum: float
    residual: float
    converged: bool


def thermal_average(
    thermal: ThermalState, obs: DiagonalObservable, quad_order: int = 200, tol: float = 1e-10, k_max: int = 60, method: str = "auto"
) -> ThermalAverage:
    """(1/Z_l) int dmu P(|Z|^2) <Z|A|Z> by quadrature, against sum_n w_n a_n."""
    l = thermal.l
    if obs.space.l != l:
        raise DomainError("observable and thermal state have different l")
    rule, P, conv, _ = _p_on_rule(thermal, quad_order, tol, k_max, method)
    x = rule.nodes
    diag = np.array([math.fsum(binomial_weights(l, xi) * obs.values) for xi in x])
    value = rule.integrate((l + 1) * (1.0 + x) ** -2 * P * diag) / thermal.partition
    basis = math.fsum(thermal.boltzmann_weights * obs.values)
    return ThermalAverage(value, basis, abs(value - basis), conv)


# -- thermodynamics ----------------------------------------------------------


class Thermodynamics(NamedTuple):
    temperature: float
    free_energy: float
    internal_energy: float
    entropy: float
    heat_capacity: float


def entropy(params: ThermalParams) -> float:
    """S/k_B = ln Z + <beta eps>; finite at A = 0 where it equals ln(l+1)."""
    state = thermal_state(params)
    return math.log(state.partition) + math.fsum(state.boltzmann_weights * params.exponents())


def heat_capacity(params: ThermalParams) -> float:
    """C_v/k_B = Var(beta eps) = beta^2 Var(eps)."""
    state = thermal_state(params)
    x = params.exponents()
    mean = math.fsum(state.boltzmann_weights * x)
    return math.fsum(state.boltzmann_weights * (x - mean) ** 2)


def thermodynamics(params: ThermalParams, hbar_omega: float = 1.0) -> Thermodynamics:
    """Free energy, internal energy, entropy and heat capacity (k_B = 1).

    beta = A / hbar_omega and the levels are eps_n = (A n - B n^2)/beta, so
    Z(beta) = sum_n exp(-beta eps_n) is an exponential sum in beta and
    U = -d ln Z/d beta follows analytically.  C_v = beta^2 Var(eps).
    """
    if not params.A > 0:
        raise DomainError("thermodynamics needs A > 0 (finite temperature)")
    if not hbar_omega > 0:
        raise DomainError("hbar_omega must be positive")
    beta = params.A / hbar_omega
    eps = params.exponents() / beta
    Zb = ExpSum([(1.0, e) for e in eps])
    Z = Zb(beta)
    U = -Zb.derivative(1)(beta) / Z
    T = 1.0 / beta
    F = -T * math.log(Z)
    S = (U - F) / T
    return Thermodynamics(T, F, U, S, heat_capacity(params))
