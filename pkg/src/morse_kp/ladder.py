"""
Ladder algebra of the Morse oscillator in the number basis, and the
combinatorics of expanding the displacement operator on the ground state.

The lowering/raising matrices follow the phase convention

    <n-1| A- |n>   = sqrt(E_n)     exp(+i alpha (2(l-n)+1))
    <n+1| A+ |n>   = sqrt(E_{n+1}) exp(-i alpha (2(l-n)+1))

with A+ |l> = 0, so every operator stays inside the l+1 bound states.  The
price is a defect of -(l+1)^2 in [A-, A+] on the top state.

The displacement-expansion helpers (:func:`delta_nested`, :func:`i_series`,
:func:`j_closed`) reproduce the intermediate formulas of the construction
as written.  Several of them are mutually inconsistent, so they are exposed
as diagnostics; the coherent states themselves come from the binomial
closed form in :mod:`morse_kp.coherent`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .spectrum import MorseSpace, level_energy

__all__ = [
    "LadderSet",
    "build_ladder",
    "commutator_defect",
    "delta_prefactor",
    "delta_nested",
    "DeltaTable",
    "delta_recurrence_residual",
    "SeriesValue",
    "i_series",
    "j_closed",
    "j_ode_residual",
]


@dataclass(frozen=True)
class LadderSet:
    space: MorseSpace
    alpha: float
    a_minus: np.ndarray = field(repr=False)
    a_plus: np.ndarray = field(repr=False)
    number_op: np.ndarray = field(repr=False)
    hamiltonian: np.ndarray = field(repr=False)


def build_ladder(space: MorseSpace, alpha: float = 0.0) -> LadderSet:
    """Matrices of A-, A+, N and H on the bound-state space.

    ``hamiltonian`` is diag(E_n).  At alpha = 0 it equals A+ A- exactly; for
    other alpha the printed phases make A+ A- = exp(-2 i alpha) H.
    """
    l = space.l
    dim = l + 1
    a_minus = np.zeros((dim, dim), dtype=complex)
    a_plus = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        phase = np.exp(1j * alpha * (2 * (l - n) + 1))
        a_minus[n - 1, n] = math.sqrt(space.energies[n]) * phase
    for n in range(0, l):
        phase = np.exp(-1j * alpha * (2 * (l - n) + 1))
        a_plus[n + 1, n] = math.sqrt(space.energies[n + 1]) * phase
    number_op = np.diag(np.arange(dim)).astype(complex)
    hamiltonian = np.diag(space.energy_array()).astype(complex)
    return LadderSet(space, float(alpha), a_minus, a_plus, number_op, hamiltonian)


def commutator_defect(ladder: LadderSet) -> np.ndarray:
    """[A-, A+] - (-2N + (2l+1)).

    Zero on n < l; on the top state the truncated A+ leaves -(l+1)^2.
    """
    l = ladder.space.l
    comm = ladder.a_minus @ ladder.a_plus - ladder.a_plus @ ladder.a_minus
    expected = -2 * ladder.number_op + (2 * l + 1) * np.eye(l + 1)
    return comm - expected


# -- displacement-expansion combinatorics -----------------------------------


def delta_prefactor(l: int, n: int) -> int:
    """n! (2l+1)! / (2l+1-n)!, the j = 0 value of Delta^l(n+1, j)."""
    return math.factorial(n) * math.perm(2 * l + 1, n)


@lru_cache(maxsize=None)
def _nested(l: int, j: int, m: int) -> int:
    # sum_{i=1}^{m} E_i * _nested(l, j-1, i+1); the ragged upper limit of each
    # inner sum is one past the enclosing index
    if j == 0:
        return 1
    return sum(level_energy(l, i) * _nested(l, j - 1, i + 1) for i in range(1, m + 1))


def _check_delta_args(l: int, n: int, j: int) -> None:
    if int(l) != l or l < 1:
        raise DomainError(f"l must be an integer >= 1, got {l!r}")
    if int(n) != n or not 0 <= n <= l:
        raise DomainError(f"n must lie in 0..{l}, got {n!r}")
    if int(j) != j or j < 0:
        raise DomainError(f"j must be a non-negative integer, got {j!r}")


def delta_nested(l: int, n: int, j: int) -> int:
    """Delta^l(n+1, j): prefactor times the j-fold nested sum of energies.

    Energies with index above l are taken from the same quadratic formula.
    The result is an exact integer.
    """
    _check_delta_args(l, n, j)
    return delta_prefactor(l, n) * _nested(int(l), int(j), int(n) + 1)


@dataclass
class DeltaTable:
    """Delta^l(n+1, j) for 0 <= n <= l, 0 <= j <= j_max."""

    l: int
    j_max: int
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        for n in range(self.l + 1):
            for j in range(self.j_max + 1):
                self.values[(n, j)] = delta_nested(self.l, n, j)

    def __getitem__(self, key):
        return self.values[key]


def _delta_or_zero(l: int, n: int, j: int) -> int:
    # Delta(., -1) = 0 and Delta^l(0, .) has a vanishing sqrt(E_0) coefficient
    if j < 0 or n < 0:
        return 0
    return delta_nested(l, n, j)


def delta_recurrence_residual(l: int, n: int, j: int) -> float:
    """Delta(n+1,j) - sqrt(E_n) Delta(n,j) - sqrt(E_{n+1}) Delta(n+2,j-1).

    The square-root factors are 2n(l+1)-n^2 = E_n and 2nl+2l+1-n^2 = E_{n+1}.
    All Delta values come from :func:`delta_nested`; this is a diagnostic and
    the residual is generally far from zero.
    """
    _check_delta_args(l, n, j)
    if n + 1 > l:
        raise DomainError(f"recurrence needs Delta(n+2, .) so n <= l-1, got n={n}, l={l}")
    lhs = delta_nested(l, n, j)
    a = math.sqrt(2 * n * (l + 1) - n * n)
    b = math.sqrt(2 * n * l + 2 * l + 1 - n * n)
    return float(lhs - a * _delta_or_zero(l, n - 1, j) - b * _delta_or_zero(l, n + 1, j - 1))


class SeriesValue(NamedTuple):
    value: float
    converged: bool
    terms: int


def i_series(l: int, n: int, abs_z: float, tol: float = 1e-14, j_max: int = 200) -> SeriesValue:
    """Partial sum of I_n^l(|z|) = sum_j (-|z|^2)^j Delta^l(n+1,j) / (n+2j)!.

    Summation stops once the last term is below ``tol`` times the largest
    partial sum seen so far; reaching ``j_max`` first returns
    ``converged=False``.
    """
    _check_delta_args(l, n, 0)
    if not tol > 0:
        raise DomainError("tol must be positive")
    if abs_z < 0:
        raise DomainError("abs_z must be non-negative")
    z2 = float(abs_z) ** 2
    total = 0.0
    running = 0.0
    for j in range(j_max + 1):
        coef = Fraction(delta_nested(l, n, j), math.factorial(n + 2 * j))
        term = float(coef) * (-z2) ** j
        total += term
        running = max(running, abs(total))
        if j > 0 and abs(term) <= tol * running:
            return SeriesValue(total, True, j + 1)
        if z2 == 0.0:
            return SeriesValue(total, True, 1)
    return SeriesValue(total, False, j_max + 1)


def _j_formula(l: int, n: int, abs_z: float) -> float:
    if n < 0:
        return 0.0
    return math.cos(abs_z) ** (l - 1) * math.tan(abs_z) ** n / math.factorial(n)


def j_closed(l: int, n: int, abs_z: float) -> float:
    """(cos|z|)^(l-1) (tan|z|)^n / n!, as printed."""
    _check_delta_args(l, n, 0)
    if not 0 <= abs_z < math.pi / 2:
        raise DomainError(f"|z| must lie in [0, pi/2), got {abs_z}")
    return _j_formula(l, n, abs_z)


def j_ode_residual(l: int, n: int, abs_z: float, step: float = 1e-5) -> float:
    """dJ_n/d|z| - [J_{n-1} - (2nl+2l+1-n^2) J_{n+1}] for the printed closed form.

    The derivative is a central difference with the given step; J_{-1} = 0
    and J_{l+1} is taken from the same formula.
    """
    _check_delta_args(l, n, 0)
    if not 0 <= abs_z < math.pi / 2 or abs_z + step >= math.pi / 2:
        raise DomainError(f"|z| must lie in [0, pi/2) with room for the step, got {abs_z}")
    deriv = (_j_formula(l, n, abs_z + step) - _j_formula(l, n, abs_z - step)) / (2 * step)
    rhs = _j_formula(l, n - 1, abs_z) - (2 * n * l + 2 * l + 1 - n * n) * _j_formula(l, n + 1, abs_z)
    return deriv - rhs
