"""
Coherent-state expectation values of observables diagonal in the number
basis, with every closed-form result checked against the direct sum.

With x = |Z|^2 and p = x/(1+x) the occupation is binomial(l, p), so

    <N>   = l p
    <N^2> = l p + l(l-1) p^2
    g2    = (l-1)/l
    Q     = -p
    <H>   = l(2l+1) p - l(l-1) p^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherent import CoherentState
from .errors import ConsistencyError, DomainError
from .spectrum import MorseSpace

__all__ = [
    "DiagonalObservable",
    "number_observable",
    "energy_observable",
    "expectation",
    "moment_n",
    "g2",
    "mandel_q",
    "action_identity",
    "action_closed_form",
]

_ROUTE_TOL = 1e-12


@dataclass(frozen=True)
class DiagonalObservable:
    space: MorseSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.space.l + 1,):
            raise DomainError(f"observable needs {self.space.l + 1} diagonal entries, got {values.shape}")
        object.__setattr__(self, "values", values)


def number_observable(space: MorseSpace, power: int = 1) -> DiagonalObservable:
    return DiagonalObservable(space, np.arange(space.l + 1, dtype=float) ** power)


def energy_observable(space: MorseSpace) -> DiagonalObservable:
    return DiagonalObservable(space, space.energy_array())


def expectation(state: CoherentState, obs: DiagonalObservable) -> float:
    """sum_n |c_n|^2 a_n; the alpha phases drop out."""
    if obs.space.l != state.space.l:
        raise DomainError("observable and state belong to different spaces")
    return math.fsum(state.probabilities() * obs.values)


def _check_routes(name, direct, closed, tol=_ROUTE_TOL):
    if not math.isclose(direct, closed, rel_tol=tol, abs_tol=tol):
        raise ConsistencyError(f"{name}: direct sum {direct!r} != closed form {closed!r}")


def _p(state: CoherentState) -> float:
    x = state.x
    return x / (1.0 + x)


def moment_n(state: CoherentState, s: int) -> float:
    """<N^s>, as a direct sum; for s = 1, 2 also against the closed forms."""
    if int(s) != s or s < 0:
        raise DomainError(f"moment order must be a non-negative integer, got {s!r}")
    l = state.space.l
    direct = expectation(state, number_observable(state.space, int(s)))
    p = _p(state)
    if s == 0:
        _check_routes("<N^0>", direct, 1.0)
    elif s == 1:
        _check_routes("<N>", direct, l * p)
    elif s == 2:
        _check_routes("<N^2>", direct, l * p + l * (l - 1) * p * p)
    return direct


def _excess(state: CoherentState) -> tuple:
    """(<N>, <N^2> - <N> - <N>^2) as a direct sum.

    For x <= 1 the factorial moment <N(N-1)> minus <N>^2 is summed; for x > 1
    the variance about the mean minus <N>.  Each form avoids the cancellation
    the other suffers in its regime.
    """
    n = np.arange(state.space.l + 1, dtype=float)
    p = state.probabilities()
    mean = moment_n(state, 1)
    if state.x <= 1.0:
        excess = math.fsum(p * n * (n - 1)) - mean * mean
    else:
        excess = math.fsum(p * (n - mean) ** 2) - mean
    return mean, excess


def g2(state: CoherentState) -> float:
    """(<N^2> - <N>)/<N>^2 = 1 + (Var N - <N>)/<N>^2, checked against (l-1)/l."""
    if state.Z == 0:
        raise DomainError("g2 is undefined at Z = 0 (<N> = 0)")
    mean, excess = _excess(state)
    value = 1.0 + excess / mean**2
    l = state.space.l
    _check_routes("g2", value, (l - 1) / l)
    return value


def mandel_q(state: CoherentState) -> float:
    """<N>(g2 - 1) = (Var N - <N>)/<N>, checked against -x/(1+x)."""
    if state.Z == 0:
        raise DomainError("Mandel Q is undefined at Z = 0")
    g2(state)
    mean, excess = _excess(state)
    value = excess / mean
    _check_routes("Mandel Q", value, -_p(state))
    return value


def action_closed_form(l: int, x: float) -> float:
    """f(x) = l(2l+1) p - l(l-1) p^2 with p = x/(1+x)."""
    p = x / (1.0 + x) if math.isfinite(x) else 1.0
    return l * (2 * l + 1) * p - l * (l - 1) * p * p


def action_identity(state: CoherentState) -> tuple:
    """(mean energy from the direct sum, closed-form f(x)), checked equal."""
    mean_energy = expectation(state, energy_observable(state.space))
    f = action_closed_form(state.space.l, state.x)
    _check_routes("action identity", mean_energy, f, tol=_ROUTE_TOL)
    return mean_energy, f
