"""Physical setup, coupling constants, and the two-component field container.

Couplings are stored divided by hbar: g = 4*pi*(hbar/m)*a in um^3/ms, so that
g * density is a rate in rad/ms. Dimensional reduction divides by the Gaussian
transverse ground-state overlap sqrt(2*pi)*l_perp per frozen axis.
"""

from dataclasses import dataclass, field

import numpy as np

from .units import UnitSystem, DEFAULT_UNITS, BOHR_RADIUS_UM, DEFAULT_A_BASE_BOHR


class ModelError(ValueError):
    pass


def coupling_from_scattering(a_ij, units=DEFAULT_UNITS):
    """Interaction constant (over hbar) from an s-wave scattering length.

    a_ij in um (may be negative: attractive); result in um^3/ms.
    """
    return 4.0 * np.pi * units.hbar_over_m * a_ij


@dataclass(frozen=True)
class PhysicalSetup:
    """Atom number, trap and interactions for an equally-populated binary cloud."""

    n_total: float = 1e5
    trap_freqs: tuple = (2 * np.pi * 0.005, 2 * np.pi * 0.512, 2 * np.pi * 0.512)  # rad/ms
    a_base: float = DEFAULT_A_BASE_BOHR * BOHR_RADIUS_UM                            # um
    a12_ratio: float = 0.93
    units: UnitSystem = field(default_factory=UnitSystem)

    def __post_init__(self):
        if not self.n_total > 0:
            raise ModelError(f"n_total must be positive, got {self.n_total}")
        if len(self.trap_freqs) != 3 or any(w <= 0 for w in self.trap_freqs):
            raise ModelError(f"trap_freqs must be three positive rad/ms values, "
                             f"got {self.trap_freqs}")
        if not self.a_base > 0:
            raise ModelError(f"a_base must be positive, got {self.a_base}")
        # miscibility at rest: g12^2 < g11*g22 with g11 = g22
        if not abs(self.a12_ratio) < 1.0:
            raise ModelError(
                f"resting state immiscible: |a12_ratio| = {abs(self.a12_ratio)} >= 1")
        object.__setattr__(self, "trap_freqs", tuple(float(w) for w in self.trap_freqs))

    @property
    def n_j(self):
        """Atoms per component (populations are fixed equal)."""
        return 0.5 * self.n_total

    @property
    def g(self):
        """Intra-component coupling over hbar, um^3/ms."""
        return coupling_from_scattering(self.a_base, self.units)

    @property
    def g12(self):
        """Inter-component coupling over hbar, um^3/ms."""
        return coupling_from_scattering(self.a12_ratio * self.a_base, self.units)

    def oscillator_length(self, axis):
        """Ground-state width sqrt(hbar/(m*omega)) for a trap axis, um."""
        return float(np.sqrt(self.units.hbar_over_m / self.trap_freqs[axis]))

    def reduction_factor(self, dims):
        """Coupling divisor for freezing axes dims..2 in their Gaussian ground
        state: product of sqrt(2*pi)*l_perp over frozen axes (um^(3-dims))."""
        factor = 1.0
        for axis in range(dims, 3):
            factor *= np.sqrt(2.0 * np.pi) * self.oscillator_length(axis)
        return factor

    def effective_couplings(self, dims):
        """(g11, g22, g12) over hbar for a dims-dimensional run, um^dims/ms."""
        f = self.reduction_factor(dims)
        return self.g / f, self.g / f, self.g12 / f

    def potential(self, grid, scale=(1.0, 1.0, 1.0)):
        """Harmonic trap over hbar on the simulated axes, rad/ms.

        scale multiplies each trap frequency (used by trap modulation).
        """
        hom = self.units.hbar_over_m
        out = np.zeros(grid.shape)
        for i in range(grid.dims):
            w = self.trap_freqs[i] * scale[i]
            x2 = grid.axis(i) ** 2
            shape = [1] * grid.dims
            shape[i] = len(x2)
            out = out + (0.5 * w ** 2 / hom) * x2.reshape(shape)
        return out


class FieldError(RuntimeError):
    pass


@dataclass
class BinaryField:
    """Two complex order parameters on a shared grid; time in ms."""

    grid: "Grid"
    psi1: np.ndarray
    psi2: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        for name in ("psi1", "psi2"):
            psi = getattr(self, name)
            if psi.shape != self.grid.shape:
                raise FieldError(f"{name} shape {psi.shape} != grid shape {self.grid.shape}")
            setattr(self, name, np.ascontiguousarray(psi, dtype=np.complex128))

    def copy(self):
        return BinaryField(self.grid, self.psi1.copy(), self.psi2.copy(), self.time)

    def norms(self):
        """(integral |psi1|^2, integral |psi2|^2)."""
        dv = self.grid.dvol
        return (float(np.sum(np.abs(self.psi1) ** 2) * dv),
                float(np.sum(np.abs(self.psi2) ** 2) * dv))

    def renormalize(self, n1, n2):
        """Rescale each component to the target atom numbers in place."""
        c1, c2 = self.norms()
        self.psi1 *= np.sqrt(n1 / c1)
        self.psi2 *= np.sqrt(n2 / c2)

    def check_finite(self):
        if not (np.all(np.isfinite(self.psi1)) and np.all(np.isfinite(self.psi2))):
            raise FieldError(f"non-finite field values at t = {self.time} ms")


@dataclass(frozen=True)
class DerivedDensities:
    """Total and spin densities with the local magnetization where defined."""

    total: np.ndarray      # n1 + n2
    spin: np.ndarray       # n1 - n2
    magnetization: np.ndarray


def densities(field, eps=1e-12):
    """Pointwise densities of a binary field; magnetization is n_s/n where
    n > eps * peak(n), zero elsewhere."""
    n1 = np.abs(field.psi1) ** 2
    n2 = np.abs(field.psi2) ** 2
    total = n1 + n2
    spin = n1 - n2
    floor = eps * float(total.max()) if total.size else 0.0
    mag = np.where(total > floor, spin / np.where(total > floor, total, 1.0), 0.0)
    return DerivedDensities(total=total, spin=spin, magnetization=mag)
