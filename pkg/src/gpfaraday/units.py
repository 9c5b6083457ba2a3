"""Internal unit system: lengths in micrometers, times in milliseconds.

All module-level computation keeps energies in units of hbar, so chemical
potentials and mode frequencies carry rad/ms and couplings carry um^d/ms
(d = simulated dimensionality). SI only appears at configuration boundaries.
"""

from dataclasses import dataclass

# hbar / m for 23Na, in um^2/ms (1.0545718e-34 J s / 3.81754e-26 kg)
SODIUM_HBAR_OVER_M = 2.7625

BOHR_RADIUS_UM = 5.29177210903e-5

# default s-wave scattering length, in Bohr radii (config-overridable)
DEFAULT_A_BASE_BOHR = 54.54


@dataclass(frozen=True)
class UnitSystem:
    """Bundle of unit constants; hbar_over_m in um^2/ms."""

    hbar_over_m: float = SODIUM_HBAR_OVER_M
    length_unit: str = "um"
    time_unit: str = "ms"

    def __post_init__(self):
        if not self.hbar_over_m > 0:
            raise ValueError(f"hbar_over_m must be positive, got {self.hbar_over_m}")


DEFAULT_UNITS = UnitSystem()
