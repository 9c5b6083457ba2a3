"""Real-time propagation under periodically modulated scattering lengths or
transverse trap frequencies, with in-stepper observables.

Interaction couplings (and, for trap modulation, the potential) are sampled at
each step midpoint inside the nonlinear factor, which keeps the Strang
splitting second order for time-dependent drives. Steps between observable
samples are fused so adjacent half-kinetic factors merge into full ones.
"""

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .model import BinaryField, FieldError
from .stepper import Engine


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModulationProtocol:
    """Sinusoidal drive of the intra-component scattering lengths (Eq.-style
    a11 = a(1 + a_m sin), a22 = a(1 +/- a_m sin)) or of the transverse trap."""

    target: str = "scattering"          # "scattering" | "trap_transverse"
    phase_relation: str = "out_of_phase"  # "in_phase" | "out_of_phase"
    a_m: float = 0.07                   # fraction of a_base
    omega_m: float = 2 * np.pi * 0.195  # rad/ms
    t_start: float = 0.0
    t_end: float = math.inf
    allow_transient_immiscibility: bool = False

    def __post_init__(self):
        if self.target not in ("scattering", "trap_transverse"):
            raise ConfigError(f"unknown modulation target {self.target!r}")
        if self.phase_relation not in ("in_phase", "out_of_phase"):
            raise ConfigError(f"unknown phase relation {self.phase_relation!r}")
        if not 0 <= self.a_m < 1:
            raise ConfigError(f"a_m must be in [0, 1) (repulsive throughout), got {self.a_m}")
        if not self.omega_m > 0:
            raise ConfigError(f"omega_m must be positive, got {self.omega_m}")
        if self.t_end < self.t_start:
            raise ConfigError("t_end must be >= t_start")

    @property
    def period(self):
        return 2.0 * np.pi / self.omega_m

    def active(self, t):
        return self.t_start <= t <= self.t_end

    def validate_against(self, setup):
        """Reject drives that cross the instantaneous immiscibility line
        g11*g22 <= g12^2 during the cycle, unless explicitly allowed."""
        if self.target != "scattering":
            return
        rho = setup.a12_ratio
        if self.phase_relation == "in_phase":
            worst = (1.0 - self.a_m) ** 2 - rho ** 2
        else:
            worst = 1.0 - self.a_m ** 2 - rho ** 2
        # round-off forgiveness: a_m = 1 - rho touches the line exactly
        if worst < -1e-12 and not self.allow_transient_immiscibility:
            raise ConfigError(
                f"modulation transiently crosses the immiscibility line "
                f"(min over cycle of g11*g22 - g12^2 = {worst:.3g} * g^2); set "
                f"allow_transient_immiscibility to run anyway")


def scattering_schedule(protocol, setup, t):
    """Instantaneous scattering lengths (a11, a22, a12) in um."""
    a = setup.a_base
    a12 = setup.a12_ratio * a
    if protocol.target != "scattering" or not protocol.active(t):
        return a, a, a12
    s = protocol.a_m * a * np.sin(protocol.omega_m * t)
    if protocol.phase_relation == "in_phase":
        return a + s, a + s, a12
    return a + s, a - s, a12


def trap_modulation_schedule(protocol, setup, t):
    """Instantaneous trap frequencies, rad/ms: transverse axes (those above
    the weakest trap frequency) scaled by 1 + a_m sin(omega_m t)."""
    if protocol.target != "trap_transverse":
        raise ConfigError("trap_modulation_schedule requires target='trap_transverse'")
    if not protocol.active(t):
        return setup.trap_freqs
    s = 1.0 + protocol.a_m * np.sin(protocol.omega_m * t)
    w_min = min(setup.trap_freqs)
    return tuple(w * s if w > w_min else w for w in setup.trap_freqs)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float                    # ms
    t_final: float               # ms
    snapshot_stride: int = 100   # steps between observable samples/snapshots
    checkpoint_stride: int = 0   # steps between resumable checkpoints (0: t_final only)
    observables: tuple = ("norm1", "norm2", "energy", "n_center", "ns_center",
                          "spin_power", "delta_n_power")
    fine_from: float = math.inf  # switch to fine_stride after this time, ms
    fine_stride: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if self.checkpoint_stride and self.checkpoint_stride % self.snapshot_stride:
            raise ConfigError("checkpoint_stride must be a multiple of snapshot_stride")
        if self.fine_from != math.inf and self.fine_stride < 1:
            raise ConfigError("fine_stride must be >= 1 when fine_from is set")

    def validate_against(self, protocol, mu_estimate, e_k_max=None):
        """Time-step rules: dt <= period/64, dt * mu <= 0.1, and the split-step
        high-wavenumber stability bound dt * e_k(k_max) <= pi (broadband noise
        is otherwise amplified through aliased nonlinear resonances)."""
        if protocol is not None and protocol.target is not None:
            limit = protocol.period / 64.0
            if self.dt > limit * (1 + 1e-12):
                raise ConfigError(
                    f"dt = {self.dt} ms does not resolve the modulation: "
                    f"need dt <= (2*pi/omega_m)/64 = {limit:.4g} ms")
        if mu_estimate is not None and self.dt * mu_estimate > 0.1 * (1 + 1e-12):
            raise ConfigError(
                f"dt = {self.dt} ms does not resolve the chemical potential "
                f"{mu_estimate:.4g} rad/ms: need dt * mu <= 0.1")
        if e_k_max is not None and self.dt * e_k_max > np.pi * (1 + 1e-12):
            raise ConfigError(
                f"dt = {self.dt} ms is split-step unstable on this grid: need "
                f"dt <= pi/e_k(k_max) = {np.pi / e_k_max:.4g} ms")


@dataclass
class TimeSeries:
    times: np.ndarray
    columns: dict

    @classmethod
    def empty(cls, names):
        return cls(times=np.empty(0), columns={n: np.empty(0) for n in names})

    def append(self, t, row):
        self.times = np.append(self.times, t)
        for name, val in row.items():
            self.columns[name] = np.append(self.columns[name], val)

    def __len__(self):
        return len(self.times)


class _Drive:
    """Reduced couplings and trap scaling as functions of time."""

    def __init__(self, protocol, setup, grid):
        self.protocol = protocol
        self.setup = setup
        self.dims = grid.dims
        self.static_reduction = setup.reduction_factor(grid.dims)
        self.trap_moving = (protocol is not None and protocol.target == "trap_transverse")
        w_min = min(setup.trap_freqs)
        self.transverse_sim = [i for i in range(grid.dims) if setup.trap_freqs[i] > w_min]
        self.frozen_transverse = [i for i in range(grid.dims, 3) if setup.trap_freqs[i] > w_min]

    def couplings(self, t):
        """(g11, g22, g12) over hbar at time t, reduced units."""
        from .model import coupling_from_scattering

        if self.protocol is None:
            a = self.setup.a_base
            a11 = a22 = a
            a12 = self.setup.a12_ratio * a
        else:
            a11, a22, a12 = scattering_schedule(self.protocol, self.setup, t)
        f = self.static_reduction
        if self.trap_moving and self.protocol.active(t):
            # frozen transverse widths shrink as 1/sqrt(scale): couplings grow
            s = 1.0 + self.protocol.a_m * np.sin(self.protocol.omega_m * t)
            f = f / (s ** (0.5 * len(self.frozen_transverse)))
        u = self.setup.units
        return (coupling_from_scattering(a11, u) / f,
                coupling_from_scattering(a22, u) / f,
                coupling_from_scattering(a12, u) / f)

    def potential_scale(self, t):
        """Per-simulated-axis trap frequency multiplier, or None if static."""
        if not self.trap_moving or not self.transverse_sim or not self.protocol.active(t):
            return None
        s = 1.0 + self.protocol.a_m * np.sin(self.protocol.omega_m * t)
        scale = [1.0, 1.0, 1.0]
        for i in self.transverse_sim:
            scale[i] = s
        return tuple(scale)


@dataclass
class EvolutionResult:
    final: BinaryField
    series: TimeSeries
    snapshots: list     # [(step, time, BinaryField)] when no sink is given


def _observable_row(names, engine, psi12, ctx):
    from . import analysis

    grid = engine.grid
    dv = grid.dvol
    row = {}
    n1 = np.abs(psi12[0]) ** 2
    n2 = np.abs(psi12[1]) ** 2
    for name in names:
        if name == "norm1":
            row[name] = float(np.sum(n1)) * dv
        elif name == "norm2":
            row[name] = float(np.sum(n2)) * dv
        elif name == "energy":
            row[name] = engine.energy(psi12, couplings=ctx["couplings"], v=ctx["v"])
        elif name == "n_center":
            row[name] = float((n1 + n2)[grid.center_index])
        elif name == "ns_center":
            row[name] = float((n1 - n2)[grid.center_index])
        elif name == "spin_power":
            prof = analysis.integrated_axis_profile(n1 - n2, grid)
            row[name] = analysis.profile_power(prof, grid.spacings[0]) if grid.dims != 2 \
                else analysis.bessel_total_power(n1 - n2, grid, **ctx["bessel_opts"])
        elif name == "delta_n_power":
            prof = analysis.integrated_axis_profile(n1 + n2, grid) - ctx["profile0"]
            row[name] = analysis.profile_power(prof, grid.spacings[0]) if grid.dims != 2 \
                else analysis.bessel_total_power(
                    (n1 + n2) - ctx["density0"], grid, **ctx["bessel_opts"])
        else:
            raise ConfigError(f"unknown observable {name!r}")
    return row


def evolve(fld, setup, protocol, cfg, sink=None, bessel_opts=None, check_dt=True,
           step_offset=0, series=None, reference_density=None):
    """Propagate a field under the given protocol.

    Samples the requested observables (and hands a snapshot to `sink`, or
    collects one when sink is None) every snapshot_stride steps, switching to
    fine_stride past fine_from. sink(step, time, field) receives a copy;
    sink=False records observables only and keeps no snapshots.

    The run clock is t = step * dt with cfg.t_final the absolute end time;
    resuming from a persisted sample at step_offset (passing the accumulated
    series and the t = 0 reference density) reproduces the uninterrupted run
    bit for bit on the same platform.

    Raises FieldError when non-finite values appear (with the last completed
    sample noted) and ConfigError on unresolved time steps.
    """
    if protocol is not None:
        protocol.validate_against(setup)
    engine = Engine(fld.grid, setup)
    drive = _Drive(protocol, setup, fld.grid)
    psi12 = engine.stack(fld)

    if check_dt:
        mu = max(engine.chemical_potentials(psi12))
        cfg.validate_against(protocol, mu, e_k_max=float(engine.e_k.max()))

    dt = cfg.dt
    total_steps = int(round(cfg.t_final / dt))
    if step_offset and abs(fld.time - step_offset * dt) > 1e-6 * dt * max(1, step_offset):
        raise ConfigError(f"field time {fld.time} does not sit on the run clock "
                          f"step {step_offset} (= {step_offset * dt} ms)")

    def time_at(step):
        return step * dt

    def next_sample(step):
        stride = cfg.fine_stride if (cfg.fine_stride and time_at(step) >= cfg.fine_from) \
            else cfg.snapshot_stride
        return min(step + stride, total_steps)

    k_half = engine.kinetic_phase(0.5 * dt)
    k_full = engine.kinetic_phase(dt)

    names = list(cfg.observables)
    if series is None:
        series = TimeSeries.empty(names)
    snapshots = []
    density0 = reference_density if reference_density is not None \
        else np.abs(psi12[0]) ** 2 + np.abs(psi12[1]) ** 2
    from . import analysis
    ctx = {
        "couplings": drive.couplings(time_at(step_offset)),
        "v": engine.v_static,
        "bessel_opts": bessel_opts or {},
        "density0": density0,
        "profile0": analysis.integrated_axis_profile(density0, fld.grid),
    }

    def sample(step, record=True):
        t = time_at(step)
        if not (np.all(np.isfinite(psi12[0])) and np.all(np.isfinite(psi12[1]))):
            last = series.times[-1] if len(series) else time_at(step_offset)
            raise FieldError(f"non-finite field at t = {t} ms "
                             f"(last good sample at t = {last} ms)")
        if not record:
            return
        ctx["couplings"] = drive.couplings(t)
        scale = drive.potential_scale(t)
        ctx["v"] = engine.v_static if scale is None else setup.potential(fld.grid, scale)
        series.append(t, _observable_row(names, engine, psi12, ctx))
        if sink is False:
            return
        out = BinaryField(fld.grid, psi12[0].copy(), psi12[1].copy(), time=t)
        if sink is not None:
            sink(step, t, out)
        else:
            snapshots.append((step, t, out))

    resumed = len(series) > 0 and step_offset > 0
    sample(step_offset, record=not resumed)
    step = step_offset
    while step < total_steps:
        seg_end = next_sample(step)
        n_inner = seg_end - step
        psi12 = engine.apply_kinetic(psi12, k_half)
        for i in range(n_inner):
            t_mid = time_at(step + i) + 0.5 * dt
            scale = drive.potential_scale(t_mid)
            v = engine.v_static if scale is None else setup.potential(fld.grid, scale)
            engine.apply_nonlinear(psi12, dt, couplings=drive.couplings(t_mid), v=v)
            psi12 = engine.apply_kinetic(psi12, k_full if i < n_inner - 1 else k_half)
        step = seg_end
        sample(step)

    final = BinaryField(fld.grid, psi12[0], psi12[1], time=time_at(total_steps))
    return EvolutionResult(final=final, series=series, snapshots=snapshots)
