"""
Bound-state spectrum of the Morse oscillator with integer depth parameter l.

Dimensionless levels are E_n = (l+1)^2 - (l+1-n)^2 = n (2l + 2 - n) for
n = 0..l.  The physical levels are eps_n = hbar*omega * E_n / (2(l+1)), and
the Boltzmann exponent is beta*eps_n = A n - B n^2 with A = beta*hbar*omega,
B = A / (2(l+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = [
    "MorseSpace",
    "ThermalParams",
    "level_energy",
    "make_space",
    "dimensional_energy",
    "thermal_params",
    "PRESETS",
    "load_presets",
    "molecule_preset",
]


def level_energy(l: int, n: int) -> int:
    """E_n^l as an exact integer.  Defined for any integer n (no range check)."""
    return (l + 1) ** 2 - (l + 1 - n) ** 2


@dataclass(frozen=True)
class MorseSpace:
    """The (l+1)-dimensional space of Morse bound states.

    Attributes
    ----------
    l : int
        Depth parameter; the highest bound level is n = l.
    energies : tuple of int
        E_n for n = 0..l, exact.
    molecule : str or None
        Preset name when built from a molecule table.
    preset_residual : float
        2(l+1) - tabulated value, i.e. what rounding to integer l cost.
    """

    l: int
    energies: tuple = field(repr=False)
    molecule: str | None = None
    preset_residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.l + 1

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.l + 1)

    def energy_array(self) -> np.ndarray:
        return np.array(self.energies, dtype=float)


def make_space(l: int) -> MorseSpace:
    if isinstance(l, bool) or int(l) != l or l < 1:
        raise DomainError(f"depth parameter l must be an integer >= 1, got {l!r}")
    l = int(l)
    return MorseSpace(l, tuple(level_energy(l, n) for n in range(l + 1)))


def _check_level(space: MorseSpace, n: int) -> None:
    if int(n) != n or not 0 <= n <= space.l:
        raise DomainError(f"level index must lie in 0..{space.l}, got {n!r}")


def dimensional_energy(space: MorseSpace, n: int, hbar_omega: float = 1.0) -> float:
    """eps_n = hbar*omega*n - hbar*omega*n^2/(2(l+1))."""
    _check_level(space, n)
    if not hbar_omega > 0:
        raise DomainError(f"hbar_omega must be positive, got {hbar_omega}")
    return hbar_omega * n - hbar_omega * n * n / (2 * (space.l + 1))


@dataclass(frozen=True)
class ThermalParams:
    """Dimensionless thermal parameters.

    ``A`` is beta*hbar*omega and ``B`` the anharmonic coefficient of n^2 in
    the Boltzmann exponent.  :func:`thermal_params` ties them through
    B = A/(2(l+1)); constructing the class directly allows an independent B
    (B = 0 is the harmonic reference used throughout the checks).
    """

    A: float
    B: float
    l: int

    def __post_init__(self):
        if not (self.A >= 0 and self.B >= 0):
            raise DomainError(f"thermal parameters must be non-negative, got A={self.A}, B={self.B}")
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise DomainError("thermal parameters must be finite (A = inf is the ground state)")
        if int(self.l) != self.l or self.l < 1:
            raise DomainError(f"l must be an integer >= 1, got {self.l!r}")

    def exponents(self) -> np.ndarray:
        """A n - B n^2 for n = 0..l."""
        n = np.arange(self.l + 1, dtype=float)
        return self.A * n - self.B * n * n


def thermal_params(space: MorseSpace, beta_hbar_omega: float) -> ThermalParams:
    if not beta_hbar_omega >= 0:
        raise DomainError(f"beta*hbar*omega must be >= 0, got {beta_hbar_omega}")
    A = float(beta_hbar_omega)
    return ThermalParams(A, A / (2 * (space.l + 1)), space.l)


# tabulated 2(l+1) for a light and a heavy diatomic
PRESETS = {
    "H2": 37.1586,
    "I2": 348.78,
}


def load_presets(path) -> dict:
    """Read a preset file: one ``name value`` pair per line, '#' comments."""
    table = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").split()
        if len(parts) != 2:
            raise DomainError(f"{path}:{lineno}: expected 'name value', got {raw!r}")
        name, value = parts
        try:
            table[name] = float(value)
        except ValueError:
            raise DomainError(f"{path}:{lineno}: bad numeric value {value!r}") from None
    return table


def molecule_preset(name: str, table: dict | None = None) -> MorseSpace:
    """Morse space for a tabulated molecule.

    The tabulated 2(l+1) is rounded to the nearest admissible integer l; the
    rounding residual 2(l+1) - tabulated is kept on the returned space.
    """
    presets = dict(PRESETS)
    if table:
        presets.update(table)
    if name not in presets:
        raise DomainError(f"unknown molecule {name!r}; available: {', '.join(sorted(presets))}")
    two_l1 = presets[name]
    l = int(math.floor(two_l1 / 2 - 1 + 0.5))
    if l < 1:
        raise DomainError(f"preset {name!r} with 2(l+1)={two_l1} has no bound excited level")
    space = make_space(l)
    residual = 2 * (l + 1) - two_l1
    return MorseSpace(space.l, space.energies, molecule=name, preset_residual=residual)
