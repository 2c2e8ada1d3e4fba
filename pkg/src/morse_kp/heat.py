"""
Carriers for the heat operator exp[B (d/dA)^2].

Three representations are provided:

* :class:`ExpSum` -- finite sums sum_k coef_k exp(-c_k A).  Exponentials are
  eigenfunctions, so the heat operator acts exactly:
  (coef, c) -> (coef exp(B c^2), c).
* :class:`EulerTermSeries` -- finite sums of coef u^p (1+u x)^-q in
  u = exp(A), closed under d/dA = u d/du.  Coefficients are exact integers,
  so the 2k-th derivatives needed by the formal series
  sum_k B^k/k! (d/dA)^(2k) f are exact; evaluation is done exactly at the
  binary value of the floating-point arguments.
* :func:`gaussian_smooth` -- the heat semigroup as a convolution,
  exp[B d^2/dA^2] f(A) = E[f(A - Y)] with Y ~ Normal(0, 2B), by
  Gauss-Hermite quadrature.  This is the convergent realization when the
  formal series is only asymptotic.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import DomainError

__all__ = [
    "ExpSum",
    "EulerTermSeries",
    "SmoothedValue",
    "gaussian_smooth",
]


class ExpSum:
    """f(A) = sum_k coef_k exp(-c_k A), c_k >= 0.

    Coefficients are held as (log|coef|, sign) so that large heat-operator
    gains exp(B c^2) do not overflow before the exponential is applied.
    Terms whose rates agree to within ``merge_tol`` (relative) are merged.
    """

    merge_tol = 1e-12

    def __init__(self, terms=()):
        coefs = np.array([t[0] for t in terms], dtype=float)
        rates = np.array([t[1] for t in terms], dtype=float)
        with np.errstate(divide="ignore"):
            log_abs = np.log(np.abs(coefs))
        self._set(log_abs, np.sign(coefs), rates)

    @classmethod
    def from_log(cls, log_abs, sign, rates) -> "ExpSum":
        obj = cls.__new__(cls)
        obj._set(np.asarray(log_abs, dtype=float), np.asarray(sign, dtype=float), np.asarray(rates, dtype=float))
        return obj

    def _set(self, log_abs, sign, rates):
        if np.any(rates < 0):
            raise DomainError("ExpSum rates must be non-negative")
        keep = sign != 0
        log_abs, sign, rates = log_abs[keep], sign[keep], rates[keep]
        order = np.argsort(rates, kind="stable")
        log_abs, sign, rates = log_abs[order], sign[order], rates[order]
        out_l, out_s, out_c = [], [], []
        i = 0
        while i < len(rates):
            j = i + 1
            while j < len(rates) and abs(rates[j] - rates[i]) <= self.merge_tol * max(1.0, rates[i]):
                j += 1
            if j - i == 1:
                out_l.append(log_abs[i])
                out_s.append(sign[i])
            else:
                ref = log_abs[i:j].max()
                total = math.fsum(sign[i:j] * np.exp(log_abs[i:j] - ref))
                if total != 0:
                    out_l.append(ref + math.log(abs(total)))
                    out_s.append(math.copysign(1.0, total))
                else:
                    out_l.append(-np.inf)
                    out_s.append(0.0)
            out_c.append(rates[i])
            i = j
        keep = np.array(out_s) != 0 if out_s else np.zeros(0, dtype=bool)
        self.log_abs = np.array(out_l, dtype=float)[keep]
        self.sign = np.array(out_s, dtype=float)[keep]
        self.rates = np.array(out_c, dtype=float)[keep]

    @property
    def terms(self) -> list:
        return [(s * math.exp(la), c) for la, s, c in zip(self.log_abs, self.sign, self.rates)]

    def __len__(self):
        return len(self.rates)

    def __add__(self, other: "ExpSum") -> "ExpSum":
        return ExpSum.from_log(
            np.concatenate([self.log_abs, other.log_abs]),
            np.concatenate([self.sign, other.sign]),
            np.concatenate([self.rates, other.rates]),
        )

    def scale(self, factor: float) -> "ExpSum":
        if factor == 0:
            return ExpSum()
        return ExpSum.from_log(self.log_abs + math.log(abs(factor)), self.sign * math.copysign(1.0, factor), self.rates)

    def heat(self, B: float) -> "ExpSum":
        """exp[B d^2/dA^2] applied exactly."""
        if B < 0:
            raise DomainError(f"heat operator needs B >= 0, got {B}")
        return ExpSum.from_log(self.log_abs + B * self.rates**2, self.sign, self.rates)

    def derivative(self, order: int = 1) -> "ExpSum":
        """(d/dA)^order, exact: (coef, c) -> ((-c)^order coef, c)."""
        if order == 0:
            return self
        with np.errstate(divide="ignore"):
            log_c = np.log(self.rates)
        sign = self.sign * (-1.0) ** order * (self.rates > 0)
        return ExpSum.from_log(self.log_abs + order * log_c, sign, self.rates)

    def log_terms(self, A: float) -> np.ndarray:
        return self.log_abs - self.rates * A

    def __call__(self, A: float) -> float:
        return math.fsum(self.sign * np.exp(self.log_terms(A)))

    evaluate = __call__

    def __repr__(self):
        return f"ExpSum({len(self)} terms)"


def _exact_poly(coeffs: dict, w: float) -> float:
    """sum_q coeffs[q] w^q evaluated exactly at the binary value of ``w``.

    ``w`` = N / 2^e, so the scaled sum sum_q a_q N^q 2^(e(Q-q)) is an
    integer; one correctly rounded division gives the float result.
    """
    if not coeffs:
        return 0.0
    num, den = float(w).as_integer_ratio()
    e = den.bit_length() - 1
    qs = sorted(coeffs)
    q0, q1 = qs[0], qs[-1]
    acc = coeffs.get(q1, 0)
    for q in range(q1 - 1, q0 - 1, -1):
        c = coeffs.get(q, 0)
        acc = acc * num + (c << (e * (q1 - q)) if c else 0)
    scaled = acc * num**q0
    try:
        return scaled / (1 << (e * q1))
    except OverflowError:
        return math.copysign(math.inf, scaled)


class EulerTermSeries:
    """g(u) = sum coef * u^p (1 + u x)^(-q) with integer coefficients.

    Parameters
    ----------
    terms : dict
        Mapping (p, q) -> integer coefficient.
    x : float
        The fixed radial label.
    """

    def __init__(self, terms: dict, x: float):
        self.terms = {k: v for k, v in terms.items() if v}
        self.x = float(x)

    @classmethod
    def bracket(cls, l: int, x: float) -> "EulerTermSeries":
        """u (1 + u x)^-(l+2); the (1+x)^(l+2) factor is applied by the caller."""
        return cls({(1, l + 2): 1}, x)

    def euler_derivative(self) -> "EulerTermSeries":
        # u d/du [u^p (1+ux)^-q] = (p - q) u^p (1+ux)^-q + q u^p (1+ux)^-(q+1)
        out: dict = {}
        for (p, q), c in self.terms.items():
            out[(p, q)] = out.get((p, q), 0) + (p - q) * c
            out[(p, q + 1)] = out.get((p, q + 1), 0) + q * c
        return EulerTermSeries(out, self.x)

    def q_range(self) -> tuple:
        qs = [q for _, q in self.terms]
        return (min(qs), max(qs)) if qs else (0, 0)

    def __len__(self):
        return len(self.terms)

    def evaluate(self, u: float) -> float:
        w = 1.0 / (1.0 + u * self.x)
        by_p: dict = {}
        for (p, q), c in self.terms.items():
            by_p.setdefault(p, {})[q] = c
        return math.fsum(u**p * _exact_poly(poly, w) for p, poly in by_p.items())

    def __repr__(self):
        return f"EulerTermSeries({len(self)} terms, x={self.x})"


class SmoothedValue(NamedTuple):
    value: np.ndarray
    converged: np.ndarray
    nodes: int


_HERMITE_LADDER = (24, 48, 96, 192, 384)


def gaussian_smooth(func: Callable, A: float, B: float, tol: float = 1e-12) -> SmoothedValue:
    """exp[B d^2/dA^2] func evaluated at A, as E[func(A - Y)], Y ~ N(0, 2B).

    ``func`` maps an array of A-values (shape (m, 1)) to an array broadcast
    against whatever grid it closes over.  The Gauss-Hermite node count is
    doubled until successive estimates agree to ``tol`` (relative).
    """
    if B < 0:
        raise DomainError(f"heat operator needs B >= 0, got {B}")
    if B == 0:
        val = np.asarray(func(np.array([[A]])))[0]
        return SmoothedValue(val, np.ones(np.shape(val), dtype=bool), 1)
    prev = None
    for m in _HERMITE_LADDER:
        s, w = hermgauss(m)
        shifts = A - 2.0 * math.sqrt(B) * s
        vals = np.asarray(func(shifts[:, None]))
        cur = np.tensordot(w, vals, axes=(0, 0)) / math.sqrt(math.pi)
        if prev is not None:
            ok = np.abs(cur - prev) <= tol * np.abs(cur) + 1e-300
            if np.all(ok):
                return SmoothedValue(cur, ok, m)
        prev = cur
    return SmoothedValue(cur, ok, m)
