"""Experiment configuration: TOML files and shipped presets, validated into
the domain objects. SI units (Hz, Bohr radii) appear only here; everything
downstream runs in um/ms with energies over hbar.
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .evolution import ConfigError, EvolutionConfig, ModulationProtocol
from .grids import Grid, GridError
from .groundstate import GroundStateConfig, NoiseInjection
from .model import ModelError, PhysicalSetup
from .units import BOHR_RADIUS_UM, UnitSystem

SCHEMA_VERSION = 1


def hz_to_radms(f_hz):
    return 2.0 * math.pi * f_hz / 1000.0


def _merge(base, override):
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def config_hash(raw):
    """Stable content hash of the raw configuration dict."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ExperimentConfig:
    label: str
    seed: int
    setup: PhysicalSetup
    grid: Grid
    protocol: ModulationProtocol
    noise: NoiseInjection
    groundstate: GroundStateConfig
    evolution: EvolutionConfig
    analysis: dict
    raw: dict
    hash: str


def _build_setup(sec):
    units = UnitSystem(hbar_over_m=sec.get("hbar_over_m", UnitSystem().hbar_over_m))
    if "trap_freqs_hz" in sec:
        freqs = tuple(hz_to_radms(f) for f in sec["trap_freqs_hz"])
    else:
        freqs = tuple(sec.get("trap_freqs", PhysicalSetup().trap_freqs))
    if "a_base_bohr" in sec:
        a_base = sec["a_base_bohr"] * BOHR_RADIUS_UM
    else:
        a_base = sec.get("a_base", PhysicalSetup().a_base)
    return PhysicalSetup(n_total=sec.get("n_total", 1e5), trap_freqs=freqs,
                         a_base=a_base, a12_ratio=sec.get("a12_ratio", 0.93),
                         units=units)


def _build_grid(sec):
    return Grid(points=tuple(sec["points"]), extents=tuple(sec["extents"]))


def _build_protocol(sec):
    if not sec:
        return None
    kwargs = {}
    if "omega_m_hz" in sec:
        kwargs["omega_m"] = hz_to_radms(sec["omega_m_hz"])
    elif "omega_m" in sec:
        kwargs["omega_m"] = sec["omega_m"]
    for key in ("target", "phase_relation", "a_m", "t_start",
                "allow_transient_immiscibility"):
        if key in sec:
            kwargs[key] = sec[key]
    if "t_end" in sec:
        kwargs["t_end"] = sec["t_end"]
    return ModulationProtocol(**kwargs)


def _build_noise(sec, default_seed):
    return NoiseInjection(kind=sec.get("kind", "none"), eta=sec.get("eta", 0.001),
                          seed=sec.get("seed", default_seed))


def _build_groundstate(sec):
    return GroundStateConfig(dtau=sec.get("dtau"), tolerance=sec.get("tolerance", 1e-10),
                             max_iters=sec.get("max_iters", 500_000),
                             init=sec.get("init", "thomas_fermi"))


def _build_evolution(sec):
    if not sec:
        return None
    kwargs = {"dt": sec["dt"], "t_final": sec["t_final"]}
    for key in ("snapshot_stride", "checkpoint_stride", "fine_from", "fine_stride"):
        if key in sec:
            kwargs[key] = sec[key]
    if "observables" in sec:
        kwargs["observables"] = tuple(sec["observables"])
    return EvolutionConfig(**kwargs)


def build_config(raw, seed=None, full_3d=False):
    """Validate a raw configuration dict into an ExperimentConfig.

    Raises ConfigError on any violated invariant; the hash covers the raw dict
    after the seed override and 3D grid substitution.
    """
    raw = dict(raw)
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw.get('schema_version')}")
    raw.setdefault("schema_version", SCHEMA_VERSION)
    if seed is not None:
        raw["seed"] = int(seed)
    raw.setdefault("seed", 0)
    if full_3d:
        if "grid3d" not in raw:
            raise ConfigError("--full-3d requested but the configuration has no [grid3d]")
        raw["grid"] = raw["grid3d"]

    try:
        setup = _build_setup(raw.get("setup", {}))
        grid = _build_grid(raw["grid"])
        protocol = _build_protocol(raw.get("protocol", {}))
        noise = _build_noise(raw.get("noise", {}), raw["seed"])
        gs = _build_groundstate(raw.get("groundstate", {}))
        evo = _build_evolution(raw.get("evolution", {}))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc

    if protocol is not None:
        protocol.validate_against(setup)
    analysis = dict(raw.get("analysis", {}))
    return ExperimentConfig(label=raw.get("label", "run"), seed=raw["seed"],
                            setup=setup, grid=grid, protocol=protocol, noise=noise,
                            groundstate=gs, evolution=evo, analysis=analysis,
                            raw=raw, hash=config_hash(raw))


def load_config(path=None, preset=None, seed=None, full_3d=False):
    """Load a configuration from a preset name and/or a TOML file (the file
    overrides preset values key by key)."""
    from .presets import get_preset

    if path is None and preset is None:
        raise ConfigError("provide --config and/or --preset")
    raw = {}
    if preset is not None:
        raw = get_preset(preset)
    if path is not None:
        with open(path, "rb") as fh:
            try:
                file_raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: cannot parse TOML: {exc}") from exc
        raw = _merge(raw, file_raw)
    return build_config(raw, seed=seed, full_3d=full_3d)


def grid_warnings(cfg):
    """Containment/resolution warnings for the configured grid."""
    from .groundstate import thomas_fermi_mu, thomas_fermi_radii
    from .lintheory import DispersionInput, sound_and_healing

    mu = thomas_fermi_mu(cfg.setup, cfg.grid)
    radii = thomas_fermi_radii(cfg.setup, mu)
    g11, _, g12 = cfg.setup.effective_couplings(cfg.grid.dims)
    disp = DispersionInput(n_bar=mu / (g11 + g12), g=g11, g12=g12,
                           channel="density", units=cfg.setup.units)
    xi_d = sound_and_healing(disp).xi_d
    return cfg.grid.validate_for(radii, xi_d)
