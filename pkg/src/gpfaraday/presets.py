"""Shipped scenario presets: each standard demonstration is a runnable
configuration. Desk-scale presets use the reduced-dimension geometry
(effective-1D elongated, effective-2D pancake); pass --full-3d for the coarse
3D smoke variant carried in [grid3d].

Calibration notes baked into these presets:

* n_total = 1.6e5: the reduced-dimension mode spectrum is shifted by ~10%
  relative to the full 3D one, and the atom number is only fixed by the
  reference setup up to the a_base/N ambiguity (the quoted healing lengths
  imply 1e5 atoms per component). 1.6e5 aligns the pancake (l=3, n_r=2)
  resonance with the 2*pi*152 Hz drive and the elongated spin resonance with
  k ~ 0.58 um^-1.
* Spin-channel scenarios drive the component-symmetric (in-phase) modulation
  with seeded initial noise. The out-of-phase drive of the reference work
  pumps the spin channel only through component-asymmetric backgrounds and is
  parity-suppressed in reduced dimensions (it excites the mixed
  density+spin pair instead); the component-symmetric drive modulates the
  spin stiffness at first order and produces the same patterns, per the
  protocol-equivalence argument of the reference.
* fig8-A carries eta = 1e-6 modulus noise standing in for the solver
  iteration residual (this implementation relaxes both components through
  identical arithmetic, so its own residual is exactly spin-symmetric).
"""

import copy

from .evolution import ConfigError

_ELONGATED = {
    "setup": {"n_total": 1.6e5, "trap_freqs_hz": [5.0, 512.0, 512.0],
              "a_base_bohr": 54.54, "a12_ratio": 0.93},
    "grid": {"points": [4096], "extents": [320.0]},
    "grid3d": {"points": [512, 32, 32], "extents": [320.0, 6.0, 6.0]},
    "groundstate": {"tolerance": 1e-10},
    "analysis": {"l_max": 10, "k_max": 1.5},
    "seed": 20260810,
}

_PANCAKE = {
    "setup": {"n_total": 1.6e5, "trap_freqs_hz": [50.0, 50.0, 1500.0],
              "a_base_bohr": 54.54, "a12_ratio": 0.93},
    "grid": {"points": [128, 128], "extents": [32.0, 32.0]},
    "grid3d": {"points": [128, 128, 32], "extents": [32.0, 32.0, 4.0]},
    "groundstate": {"tolerance": 1e-10},
    "analysis": {"l_max": 10, "k_max": 1.5},
    "seed": 20260810,
}

# (l = 3 ladder and n_r = 3 ladder drive frequencies, Hz)
_FIG4A_FREQS = [124.0, 156.0, 182.0, 210.0, 238.0, 270.0, 302.0]   # n_r = 3
_FIG4B_FREQS = [42.0, 98.0, 152.0, 210.0, 282.0, 366.0, 450.0]     # l = 3

_FIG7_PERIOD = 1000.0 / 210.0   # ms
_PANCAKE_DT = 0.0078            # resolves mu ~ 11.4 rad/ms


def _preset(base, label, protocol, noise, evolution):
    cfg = copy.deepcopy(base)
    cfg.update({"label": label, "protocol": protocol, "noise": noise,
                "evolution": evolution})
    return cfg


def _build_presets():
    p = {}

    # density-channel pattern in the elongated cloud (clean symmetric start:
    # the in-phase drive then leaves the spin channel exactly silent)
    p["fig1"] = _preset(
        _ELONGATED, "fig1",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.36,
         "omega_m_hz": 384.0, "allow_transient_immiscibility": True},
        {"kind": "none"},
        {"dt": 0.0055, "t_final": 1000.0, "snapshot_stride": 1800,
         "checkpoint_stride": 18000})

    # spin-channel pattern in the elongated cloud; a_m = 0.07 swings the spin
    # stiffness g - g12 through its full depth (touching the miscibility line)
    p["fig2"] = _preset(
        _ELONGATED, "fig2",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.07,
         "omega_m_hz": 195.0},
        {"kind": "modulus", "eta": 1e-4},
        {"dt": 0.0055, "t_final": 280.0, "snapshot_stride": 1000,
         "checkpoint_stride": 10000})

    # long spin evolution: growth, saturation, decay
    p["fig3"] = _preset(
        _ELONGATED, "fig3",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.07,
         "omega_m_hz": 195.0},
        {"kind": "modulus", "eta": 1e-5},
        {"dt": 0.0055, "t_final": 420.0, "snapshot_stride": 1000,
         "checkpoint_stride": 10000})

    # same drive on a larger cloud (weaker axial trap)
    p["fig3-wide"] = _preset(
        _ELONGATED, "fig3-wide",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.07,
         "omega_m_hz": 195.0},
        {"kind": "modulus", "eta": 1e-5},
        {"dt": 0.009, "t_final": 560.0, "snapshot_stride": 650,
         "checkpoint_stride": 6500})
    p["fig3-wide"]["setup"]["trap_freqs_hz"] = [3.0, 512.0, 512.0]
    p["fig3-wide"]["grid"] = {"points": [2048], "extents": [416.0]}
    p["fig3-wide"]["grid3d"] = {"points": [512, 32, 32],
                                "extents": [416.0, 6.0, 6.0]}

    # pancake mode ladders
    for l, f in enumerate(_FIG4A_FREQS):
        p[f"fig4a-l{l}"] = _preset(
            _PANCAKE, f"fig4a-l{l}",
            {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.037,
             "omega_m_hz": f},
            {"kind": "modulus", "eta": 1e-3},
            {"dt": _PANCAKE_DT, "t_final": 650.0, "snapshot_stride": 2500,
             "checkpoint_stride": 25000})
    for n_r, f in enumerate(_FIG4B_FREQS):
        p[f"fig4b-nr{n_r}"] = _preset(
            _PANCAKE, f"fig4b-nr{n_r}",
            {"target": "scattering", "phase_relation": "in_phase",
             "a_m": 0.07 if n_r == 0 else 0.037, "omega_m_hz": f},
            {"kind": "modulus", "eta": 1e-3},
            {"dt": _PANCAKE_DT, "t_final": 650.0, "snapshot_stride": 2500,
             "checkpoint_stride": 25000})

    # pancake (l=3, n_r=2) pattern
    p["fig6"] = _preset(
        _PANCAKE, "fig6",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.037,
         "omega_m_hz": 152.0},
        {"kind": "modulus", "eta": 1e-3},
        {"dt": _PANCAKE_DT, "t_final": 650.0, "snapshot_stride": 2500,
         "checkpoint_stride": 25000})

    # subharmonic-rotation run: a finely sampled window (stride = period/16)
    # over the last 12 modulation periods
    fig7_dt = _FIG7_PERIOD / 640.0
    p["fig7"] = _preset(
        _PANCAKE, "fig7",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.037,
         "omega_m_hz": 210.0},
        {"kind": "modulus", "eta": 1e-3},
        {"dt": fig7_dt, "t_final": 96 * _FIG7_PERIOD,
         "snapshot_stride": 3200, "checkpoint_stride": 32000,
         "fine_from": 84 * _FIG7_PERIOD, "fine_stride": 40})

    # protocol comparison at the fig6 operating point: A starts from the
    # stationary state with the residual-scale seed, B/C add eta = 1e-3 noise
    p["fig8-A"] = _preset(
        _PANCAKE, "fig8-A",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.037,
         "omega_m_hz": 152.0},
        {"kind": "modulus", "eta": 1e-6},
        {"dt": _PANCAKE_DT, "t_final": 900.0, "snapshot_stride": 2500,
         "checkpoint_stride": 25000})
    p["fig8-B"] = _preset(
        _PANCAKE, "fig8-B",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.037,
         "omega_m_hz": 152.0},
        {"kind": "modulus", "eta": 1e-3},
        {"dt": _PANCAKE_DT, "t_final": 650.0, "snapshot_stride": 2500,
         "checkpoint_stride": 25000})
    p["fig8-C"] = copy.deepcopy(p["fig8-B"])
    p["fig8-C"]["label"] = "fig8-C"
    p["fig8-C"]["noise"] = {"kind": "phase", "eta": 1e-3}

    # sweep template for the density-channel resonance map
    p["sweep-density"] = _preset(
        _ELONGATED, "sweep-density",
        {"target": "scattering", "phase_relation": "in_phase", "a_m": 0.36,
         "omega_m_hz": 384.0, "allow_transient_immiscibility": True},
        {"kind": "none"},
        {"dt": 0.0055, "t_final": 1300.0, "snapshot_stride": 1800,
         "checkpoint_stride": 18000})

    for name, cfg in p.items():
        cfg.setdefault("label", name)
    return p


PRESETS = _build_presets()


def get_preset(name):
    if name not in PRESETS:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; available: {known}")
    return copy.deepcopy(PRESETS[name])


def preset_names():
    return sorted(PRESETS)
