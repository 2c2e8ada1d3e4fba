"""
Numerical kernels: Gauss-Legendre rules, half-line quadrature, a dense
matrix exponential, log-binomials and two closed-form Beta-type integrals.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, NumericalError

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "halfline_rule",
    "integrate_halfline",
    "matrix_exp",
    "beta_moment",
    "ratio_integral",
    "log_binomial",
    "log_binomials",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a Gauss-Legendre rule.

    ``mapping`` is ``"finite-interval"`` for the standard rule on [-1, 1] and
    ``"half-line-rational"`` when the nodes have been pushed to [0, inf)
    through x = t/(1-t).
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    mapping: str = "finite-interval"

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def gauss_legendre(order: int) -> QuadratureRule:
    """Standard Gauss-Legendre rule of the given order on [-1, 1]."""
    if int(order) != order or order < 1:
        raise DomainError(f"quadrature order must be a positive integer, got {order!r}")
    nodes, weights = leggauss(int(order))
    # leggauss is symmetric only to rounding; enforce it exactly
    half = (nodes[::-1] * -1 + nodes) / 2
    weights = (weights + weights[::-1]) / 2
    return QuadratureRule(int(order), half, weights, "finite-interval")


def halfline_rule(order: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0, inf) by x = t/(1-t), t in [0, 1).

    The Jacobian 1/(1-t)^2 is folded into the weights.  With this map
    x^n (1+x)^-(m+2) dx becomes t^n (1-t)^(m-n) dt, so integrands with
    algebraic decay are polynomial (or nearly so) in t.
    """
    base = gauss_legendre(order)
    t = 0.5 * (base.nodes + 1.0)
    x = t / (1.0 - t)
    w = 0.5 * base.weights / (1.0 - t) ** 2
    return QuadratureRule(base.order, x, w, "half-line-rational")


def integrate_halfline(f: Callable, order: int = 64) -> float:
    """Integrate ``f`` over [0, inf) with the rational half-line rule.

    Parameters
    ----------
    f : callable
        Integrand.  It is called once with the whole node array; scalar-only
        callables are detected and evaluated node by node.
    order : int
        Number of Gauss-Legendre nodes.

    Returns
    -------
    float
        Approximation of the integral.
    """
    rule = halfline_rule(order)
    try:
        values = np.asarray(f(rule.nodes), dtype=float)
        if values.shape != rule.nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        values = np.array([f(float(x)) for x in rule.nodes], dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("integrand returned non-finite values on the half-line grid")
    return rule.integrate(values)


_TAYLOR_ORDER = 18
_SCALE_TARGET = 0.5
_NORM_LIMIT = 1e6


def matrix_exp(M) -> np.ndarray:
    """Dense matrix exponential by scaling and squaring.

    The matrix is scaled by 2^-s so that its 1-norm is at most 1/2, the
    exponential of the scaled matrix is taken from an 18th order Taylor
    polynomial (truncation error below 1e-22 there) and the result is
    squared s times.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"matrix_exp needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix_exp input has non-finite entries")
    n = M.shape[0]
    norm = np.abs(M).sum(axis=0).max() if n else 0.0
    if norm > _NORM_LIMIT:
        raise NumericalError(f"matrix norm {norm:.3g} too large for scaling and squaring")
    s = 0
    if norm > _SCALE_TARGET:
        s = int(math.ceil(math.log2(norm / _SCALE_TARGET)))
    X = M / 2.0**s
    eye = np.eye(n, dtype=complex)
    E = eye.copy()
    for k in range(_TAYLOR_ORDER, 0, -1):
        E = eye + (X @ E) / k
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise NumericalError("matrix exponential overflowed")
    return E


def beta_moment(a: float, g: float, z: float) -> float:
    """Closed form of int_0^inf x^(a-1) (x+z)^(-g) dx = z^(a-g) B(a, g-a)."""
    if not (a > 0 and g > a and z > 0):
        raise DomainError(f"beta_moment needs a>0, g>a, z>0; got a={a}, g={g}, z={z}")
    log_val = (a - g) * math.log(z) + math.lgamma(a) + math.lgamma(g - a) - math.lgamma(g)
    return math.exp(log_val)


def ratio_integral(a: float, b: float, c: float, d: float, beta: float) -> float:
    """Closed form of int_0^inf (a x + b)^(beta-1) / (c x + d)^(beta+1) dx.

    Valid for c*d > 0, a*d != b*c and beta >= 1.  The removable singularity
    at a*d == b*c is rejected rather than taken as a limit.
    """
    if not c * d > 0:
        raise DomainError(f"ratio_integral needs c*d > 0, got c={c}, d={d}")
    if beta < 1:
        raise DomainError(f"ratio_integral needs beta >= 1, got {beta}")
    ad, bc = a * d, b * c
    if ad == bc:
        raise DomainError("ratio_integral is degenerate at a*d == b*c")
    val = (ad**beta - bc**beta) / (beta * (ad - bc) * (c * d) ** beta)
    if isinstance(val, complex) or not math.isfinite(val):
        raise NumericalError("ratio_integral produced a non-finite or complex value")
    return val


def log_binomial(l: int, n: int) -> float:
    """Natural log of the binomial coefficient C(l, n) via log-Gamma."""
    if n < 0 or l < 0 or n > l:
        raise DomainError(f"log_binomial needs 0 <= n <= l, got l={l}, n={n}")
    return math.lgamma(l + 1) - math.lgamma(n + 1) - math.lgamma(l - n + 1)


def log_binomials(l: int) -> np.ndarray:
    """Vector of log C(l, n) for n = 0..l."""
    return np.array([log_binomial(l, n) for n in range(l + 1)])
