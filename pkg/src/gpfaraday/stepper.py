"""Strang-split spectral stepping shared by imaginary-time relaxation and
real-time evolution.

One step is exp(-iK dt/2) exp(-i(V+NL) dt) exp(-iK dt/2): the kinetic factor is
exact in Fourier space, the potential+nonlinear factor is exact pointwise
because it only rotates phases (moduli are untouched), so the splitting is
norm-preserving by construction. Components are stacked into one (2, *grid)
array so both ride a single batched FFT.
"""

import numpy as np
import scipy.fft as sfft


def fft_grid(psi12, axes):
    return sfft.fftn(psi12, axes=axes)


def ifft_grid(psihat, axes):
    return sfft.ifftn(psihat, axes=axes)


class Engine:
    """Grid-bound precomputations for one setup."""

    def __init__(self, grid, setup):
        self.grid = grid
        self.setup = setup
        self.axes = tuple(range(1, grid.dims + 1))  # FFT axes of the stacked array
        self.e_k = 0.5 * setup.units.hbar_over_m * grid.ksquared()  # rad/ms
        self.v_static = setup.potential(grid)                        # rad/ms
        self.g11, self.g22, self.g12 = setup.effective_couplings(grid.dims)

    def stack(self, field):
        return np.stack([field.psi1, field.psi2])

    # -- real time ---------------------------------------------------------

    def kinetic_phase(self, dt):
        return np.exp(-1j * self.e_k * dt)

    def apply_kinetic(self, psi12, phase):
        psihat = fft_grid(psi12, self.axes)
        psihat *= phase
        return ifft_grid(psihat, self.axes)

    def apply_nonlinear(self, psi12, dt, couplings=None, v=None):
        """Pointwise phase rotation by the potential and interaction terms."""
        g11, g22, g12 = couplings if couplings is not None else (self.g11, self.g22, self.g12)
        if v is None:
            v = self.v_static
        n1 = np.abs(psi12[0]) ** 2
        n2 = np.abs(psi12[1]) ** 2
        psi12[0] *= np.exp(-1j * dt * (v + g11 * n1 + g12 * n2))
        psi12[1] *= np.exp(-1j * dt * (v + g22 * n2 + g12 * n1))
        return psi12

    # -- imaginary time ----------------------------------------------------

    def kinetic_decay(self, dtau):
        return np.exp(-self.e_k * dtau)

    def apply_nonlinear_decay(self, psi12, dtau):
        n1 = np.abs(psi12[0]) ** 2
        n2 = np.abs(psi12[1]) ** 2
        psi12[0] *= np.exp(-dtau * (self.v_static + self.g11 * n1 + self.g12 * n2))
        psi12[1] *= np.exp(-dtau * (self.v_static + self.g22 * n2 + self.g12 * n1))
        return psi12

    # -- functionals -------------------------------------------------------

    def kinetic_energy(self, psi12):
        """Integral (hbar/2m)|grad psi|^2 per component, rad/ms * atoms."""
        psihat = fft_grid(psi12, self.axes)
        npts = float(np.prod(self.grid.shape))
        w = self.grid.dvol / npts
        return [float(np.sum(self.e_k * np.abs(psihat[j]) ** 2)) * w for j in (0, 1)]

    def energy(self, psi12, couplings=None, v=None):
        """Total energy over hbar (kinetic + trap + interaction)."""
        g11, g22, g12 = couplings if couplings is not None else (self.g11, self.g22, self.g12)
        if v is None:
            v = self.v_static
        dv = self.grid.dvol
        n1 = np.abs(psi12[0]) ** 2
        n2 = np.abs(psi12[1]) ** 2
        e_kin = sum(self.kinetic_energy(psi12))
        e_trap = float(np.sum(v * (n1 + n2))) * dv
        e_int = float(np.sum(0.5 * g11 * n1 ** 2 + 0.5 * g22 * n2 ** 2 + g12 * n1 * n2)) * dv
        return e_kin + e_trap + e_int

    def chemical_potentials(self, psi12):
        """Per-component chemical potential over hbar, rad/ms."""
        dv = self.grid.dvol
        n1 = np.abs(psi12[0]) ** 2
        n2 = np.abs(psi12[1]) ** 2
        ek1, ek2 = self.kinetic_energy(psi12)
        atoms1 = float(np.sum(n1)) * dv
        atoms2 = float(np.sum(n2)) * dv
        mu1 = (ek1 + float(np.sum((self.v_static + self.g11 * n1 + self.g12 * n2) * n1)) * dv)
        mu2 = (ek2 + float(np.sum((self.v_static + self.g22 * n2 + self.g12 * n1) * n2)) * dv)
        return mu1 / atoms1, mu2 / atoms2
