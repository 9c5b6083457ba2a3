"""Stationary-state preparation: Thomas-Fermi initialization, imaginary-time
relaxation with per-step renormalization, and optional noise injection used by
the noisy modulation protocols.
"""

from dataclasses import dataclass

import numpy as np

from .grids import GridError
from .model import BinaryField
from .stepper import Engine


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GroundStateConfig:
    dtau: float = None          # ms; default 1e-3 * 2*pi / max trap frequency
    tolerance: float = 1e-10    # relative energy change per unit imaginary time, 1/ms
    max_iters: int = 500_000
    init: str = "thomas_fermi"  # "thomas_fermi" | "gaussian"

    def __post_init__(self):
        if self.dtau is not None and not self.dtau > 0:
            raise ValueError(f"dtau must be positive, got {self.dtau}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.init not in ("thomas_fermi", "gaussian"):
            raise ValueError(f"unknown init {self.init!r}")

    def resolved_dtau(self, setup):
        if self.dtau is not None:
            return self.dtau
        return 1e-3 * 2.0 * np.pi / max(setup.trap_freqs)


def thomas_fermi_mu(setup, grid, rel_tol=1e-12):
    """Chemical potential (over hbar, rad/ms) normalizing the Thomas-Fermi
    total density 2*(mu - V)/(g + g12) to n_total on this grid, by bisection."""
    g11, _, g12 = setup.effective_couplings(grid.dims)
    v = setup.potential(grid)
    dv = grid.dvol

    def atoms(mu):
        return float(np.sum(np.maximum(0.0, 2.0 * (mu - v) / (g11 + g12)))) * dv

    hi = 1.0
    while atoms(hi) < setup.n_total:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("Thomas-Fermi normalization bracket blew up")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if atoms(mid) < setup.n_total:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)


def thomas_fermi_radii(setup, mu):
    """Cloud half-lengths sqrt(2*(hbar/m)*mu)/omega_i per axis, um."""
    hom = setup.units.hbar_over_m
    return tuple(float(np.sqrt(2.0 * hom * mu) / w) for w in setup.trap_freqs)


def thomas_fermi_profile(setup, grid):
    """Thomas-Fermi initial state: each component gets half the total density
    with zero phase. Raises if the cloud does not fit on the grid."""
    mu = thomas_fermi_mu(setup, grid)
    radii = thomas_fermi_radii(setup, mu)
    for i in range(grid.dims):
        if radii[i] >= grid.extents[i]:
            raise GridError(
                f"grid too small for the Thomas-Fermi cloud: axis {i} radius "
                f"{radii[i]:.3g} um >= extent {grid.extents[i]:.3g} um")
    g11, _, g12 = setup.effective_couplings(grid.dims)
    n_tf = np.maximum(0.0, 2.0 * (mu - setup.potential(grid)) / (g11 + g12))
    psi = np.sqrt(0.5 * n_tf).astype(np.complex128)
    return BinaryField(grid, psi, psi.copy(), time=0.0)


def gaussian_profile(setup, grid):
    """Oscillator ground-state initial guess, normalized per component."""
    hom = setup.units.hbar_over_m
    arg = np.zeros(grid.shape)
    for i in range(grid.dims):
        l2 = hom / setup.trap_freqs[i]
        x2 = grid.axis(i) ** 2
        shape = [1] * grid.dims
        shape[i] = len(x2)
        arg = arg + (x2 / (2.0 * l2)).reshape(shape)
    psi = np.exp(-arg).astype(np.complex128)
    fld = BinaryField(grid, psi, psi.copy(), time=0.0)
    fld.renormalize(setup.n_j, setup.n_j)
    return fld


@dataclass
class GroundStateReport:
    iterations: int
    mu1: float
    mu2: float
    energy: float          # over hbar, rad/ms * atoms
    energy_trace: list     # sampled energies
    central_density: float


def imaginary_time_solve(init, setup, cfg=GroundStateConfig()):
    """Relax a normalized initial field to the stationary state by propagating
    in imaginary time, renormalizing each component to n_total/2 every step.

    Stops when the relative energy change per unit imaginary time falls below
    cfg.tolerance. An energy increase beyond the 1e-12 relative round-off
    budget raises ConvergenceError (step size too large), as does exhausting
    max_iters.
    """
    engine = Engine(init.grid, setup)
    dtau = cfg.resolved_dtau(setup)
    n_j = setup.n_j

    psi12 = engine.stack(init)
    k_half = engine.kinetic_decay(0.5 * dtau)

    def renorm(psi12):
        dv = init.grid.dvol
        for j in (0, 1):
            psi12[j] *= np.sqrt(n_j / (float(np.sum(np.abs(psi12[j]) ** 2)) * dv))

    renorm(psi12)
    energy = engine.energy(psi12)
    trace = [energy]
    for it in range(1, cfg.max_iters + 1):
        psi12 = engine.apply_kinetic(psi12, k_half)
        engine.apply_nonlinear_decay(psi12, dtau)
        psi12 = engine.apply_kinetic(psi12, k_half)
        renorm(psi12)

        new_energy = engine.energy(psi12)
        if new_energy - energy > 1e-12 * abs(energy):
            raise ConvergenceError(
                f"energy increased at iteration {it} "
                f"({energy!r} -> {new_energy!r}); reduce dtau ({dtau:.3g} ms)")
        delta = abs(new_energy - energy) / (abs(new_energy) * dtau)
        energy = new_energy
        if it % 50 == 0 or delta < cfg.tolerance:
            trace.append(energy)
        if delta < cfg.tolerance:
            out = BinaryField(init.grid, psi12[0], psi12[1], time=0.0)
            mu1, mu2 = engine.chemical_potentials(psi12)
            from .model import densities
            n_center = float(densities(out).total[init.grid.center_index])
            return out, GroundStateReport(iterations=it, mu1=mu1, mu2=mu2,
                                          energy=energy, energy_trace=trace,
                                          central_density=n_center)

    raise ConvergenceError(
        f"no convergence after {cfg.max_iters} iterations; last relative energy "
        f"rate {delta:.3g}/ms vs tolerance {cfg.tolerance:.3g}/ms; "
        f"energy trace tail {trace[-5:]}")


@dataclass(frozen=True)
class NoiseInjection:
    kind: str = "none"     # "none" | "modulus" | "phase"
    eta: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "modulus", "phase"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.eta < 0:
            raise ValueError(f"eta must be non-negative, got {self.eta}")


def inject_noise(field, spec, n_j=None):
    """Perturb a field with seeded Gaussian noise and renormalize.

    modulus: psi -> psi * (1 + eta*delta) with delta ~ N(0,1) per point and
    component; phase: psi -> psi * exp(i*eta*delta). kind "none" or eta = 0
    returns the input bit-for-bit. Draw order is component 1 then component 2.
    """
    if spec.kind == "none" or spec.eta == 0.0:
        return field.copy()
    if n_j is None:
        n_j = field.norms()
    elif np.isscalar(n_j):
        n_j = (n_j, n_j)
    rng = np.random.default_rng(spec.seed)
    out = field.copy()
    for psi in (out.psi1, out.psi2):
        delta = rng.standard_normal(psi.shape)
        if spec.kind == "modulus":
            psi *= 1.0 + spec.eta * delta
        else:
            psi *= np.exp(1j * spec.eta * delta)
    out.renormalize(*n_j)
    return out
