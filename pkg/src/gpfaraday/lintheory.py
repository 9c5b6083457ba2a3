"""Closed-form small-amplitude predictions: gapless Bogoliubov branches for the
density and spin channels, sound velocities, healing lengths, the parametric
resonance condition omega_m = 2*omega(k), and Mathieu-Floquet stability.
"""

from dataclasses import dataclass, field

import numpy as np

from .units import UnitSystem, DEFAULT_UNITS


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class DispersionInput:
    """Average density and couplings entering the gapless branches.

    n_bar is the effective average density (um^-dims for reduced runs); g and
    g12 are couplings over hbar in matching units; channel selects the branch.
    """

    n_bar: float
    g: float
    g12: float
    channel: str = "density"  # "density" | "spin"
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        if self.channel not in ("density", "spin"):
            raise ChannelError(f"unknown channel {self.channel!r}")
        if not self.n_bar > 0:
            raise ChannelError(f"n_bar must be positive, got {self.n_bar}")
        if self.channel == "spin" and self.g12 >= self.g:
            raise ChannelError(
                f"spin channel requires g12 < g (got g12 = {self.g12}, g = {self.g}); "
                "the branch frequency would be imaginary")

    @property
    def channel_coupling(self):
        """g + g12 (density) or g - g12 (spin)."""
        return self.g + self.g12 if self.channel == "density" else self.g - self.g12

    @property
    def stiffness(self):
        """n_bar * (g +/- g12), rad/ms."""
        return self.n_bar * self.channel_coupling


def nbar_from_central_density(central_total_density):
    """Effective average density: half the central total density (the
    Thomas-Fermi transverse-average result)."""
    return 0.5 * central_total_density


def dispersion_input_from_field(fld, setup, channel):
    """Build a DispersionInput from a simulated state, using half the central
    total density and the run's reduced couplings."""
    from .model import densities

    n_center = float(densities(fld).total[fld.grid.center_index])
    g11, _, g12 = setup.effective_couplings(fld.grid.dims)
    return DispersionInput(n_bar=nbar_from_central_density(n_center),
                           g=g11, g12=g12, channel=channel, units=setup.units)


def bogoliubov_omega(k, disp):
    """Gapless branch frequency at wavenumber k (um^-1), rad/ms.

    omega^2 = e_k * (e_k + n_bar*(g +/- g12)) with e_k = (hbar/m) k^2 / 2.
    """
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    e_k = 0.5 * disp.units.hbar_over_m * k ** 2
    out = np.sqrt(e_k * (e_k + disp.stiffness))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SoundAndHealing:
    c_d: float   # um/ms
    c_s: float
    xi_d: float  # um
    xi_s: float


def sound_and_healing(disp):
    """Sound velocities and healing lengths for both channels of the given
    density/couplings; c * xi = hbar/2m identically per channel."""
    hom = disp.units.hbar_over_m
    out = {}
    for name, gch in (("d", disp.g + disp.g12), ("s", disp.g - disp.g12)):
        if gch <= 0:
            raise ChannelError(f"channel coupling g {'+' if name == 'd' else '-'} g12 "
                               f"must be positive, got {gch}")
        stiff = disp.n_bar * gch
        out["c_" + name] = float(np.sqrt(0.5 * hom * stiff))
        out["xi_" + name] = float(np.sqrt(0.5 * hom / stiff))
    return SoundAndHealing(**out)


def resonance_k(omega_m, disp):
    """Wavenumber parametrically excited by modulation at omega_m: the unique
    k > 0 with omega_m = 2 * bogoliubov_omega(k)."""
    if not omega_m > 0:
        raise ValueError(f"omega_m must be positive, got {omega_m}")
    omega = 0.5 * omega_m
    s = disp.stiffness
    e_k = 0.5 * (-s + np.sqrt(s * s + 4.0 * omega * omega))
    return float(np.sqrt(2.0 * e_k / disp.units.hbar_over_m))


@dataclass(frozen=True)
class MathieuResult:
    stable: bool
    growth_rate: float    # ln|multiplier| per modulation period
    trace: float


def mathieu_stability(omega_0, amplitude, omega_m, steps_per_period=2048):
    """Floquet classification of x'' + omega_0^2 (1 + A cos(omega_m t)) x = 0.

    Integrates two independent solutions over one period with fixed-step RK4,
    forms the monodromy matrix and classifies by |trace| vs 2.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    period = 2.0 * np.pi / omega_m
    h = period / steps_per_period

    def rhs(t, y):
        # y = [[x1, x2], [v1, v2]]
        w2 = omega_0 ** 2 * (1.0 + amplitude * np.cos(omega_m * t))
        return np.array([y[1], -w2 * y[0]])

    y = np.array([[1.0, 0.0], [0.0, 1.0]])
    t = 0.0
    for _ in range(steps_per_period):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h

    trace = float(y[0, 0] + y[1, 1])
    if abs(trace) <= 2.0:
        return MathieuResult(stable=True, growth_rate=0.0, trace=trace)
    # |multiplier| for a real matrix with det = 1 and |trace| > 2
    mult = 0.5 * (abs(trace) + np.sqrt(trace * trace - 4.0))
    return MathieuResult(stable=False, growth_rate=float(np.log(mult)), trace=trace)
