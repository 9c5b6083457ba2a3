"""End-to-end orchestration: ground states, resumable evolutions, sweeps and
post-hoc analysis over a run directory.

A run directory is self-contained: config.json (raw config + hash),
ground.gpf, snap_XXXXXXXX.gpf snapshots with JSON sidecars, manifest.json,
series.tsv, and an analysis/ subdirectory of tab-delimited tables.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis
from .config import build_config, grid_warnings
from .evolution import ConfigError, evolve
from .groundstate import (gaussian_profile, imaginary_time_solve, inject_noise,
                          thomas_fermi_mu, thomas_fermi_profile, thomas_fermi_radii)
from .lintheory import (DispersionInput, bogoliubov_omega, resonance_k,
                        sound_and_healing)
from .model import densities
from .snapshots import RunManifest, read_snapshot, write_snapshot

SNAP_PATTERN = "snap_{:08d}.gpf"


def write_tsv(path, header, rows):
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def read_tsv(path):
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    return header, rows


def _series_to_rows(series):
    names = list(series.columns)
    rows = [[series.times[i]] + [series.columns[n][i] for n in names]
            for i in range(len(series))]
    return ["time"] + names, rows


def _load_series(path):
    header, rows = read_tsv(path)
    data = np.array([[float(v) for v in row] for row in rows]) if rows else \
        np.empty((0, len(header)))
    return header, data


def save_config(cfg, run_dir):
    with open(os.path.join(run_dir, "config.json"), "w") as fh:
        json.dump({"hash": cfg.hash, "raw": cfg.raw}, fh, indent=1, sort_keys=True)


def load_run_config(run_dir):
    with open(os.path.join(run_dir, "config.json")) as fh:
        stored = json.load(fh)
    cfg = build_config(stored["raw"])
    if cfg.hash != stored["hash"]:
        raise ConfigError(f"{run_dir}: stored config hash does not match its contents")
    return cfg


# ---------------------------------------------------------------------------
# Ground state


def run_groundstate(cfg, out_dir, log=print):
    """Prepare and persist the stationary state; returns (field, report dict)."""
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, out_dir)
    for warning in grid_warnings(cfg):
        log(f"grid warning: {warning}")

    init = thomas_fermi_profile(cfg.setup, cfg.grid) if cfg.groundstate.init == "thomas_fermi" \
        else gaussian_profile(cfg.setup, cfg.grid)
    fld, report = imaginary_time_solve(init, cfg.setup, cfg.groundstate)

    mu_tf = thomas_fermi_mu(cfg.setup, cfg.grid)
    g11, _, g12 = cfg.setup.effective_couplings(cfg.grid.dims)
    n_tf_center = 2.0 * mu_tf / (g11 + g12)
    info = {
        "iterations": report.iterations,
        "mu1": report.mu1, "mu2": report.mu2,
        "energy": report.energy,
        "energy_per_particle": report.energy / cfg.setup.n_total,
        "central_density": report.central_density,
        "tf_mu": mu_tf,
        "tf_central_density": n_tf_center,
        "tf_relative_deviation": abs(report.central_density - n_tf_center) / n_tf_center,
        "tf_radii": thomas_fermi_radii(cfg.setup, mu_tf)[: cfg.grid.dims],
    }
    write_snapshot(os.path.join(out_dir, "ground.gpf"), fld,
                   meta={"time": 0.0, "step": 0, "config_hash": cfg.hash,
                         "label": cfg.label, "kind": "groundstate"})
    with open(os.path.join(out_dir, "ground_report.json"), "w") as fh:
        json.dump(info, fh, indent=1)
    return fld, info


def _ensure_groundstate(cfg, out_dir, log):
    path = os.path.join(out_dir, "ground.gpf")
    if os.path.exists(path):
        fld, meta = read_snapshot(path)
        if meta and meta.get("config_hash") == cfg.hash:
            return fld
        log("ground.gpf belongs to a different configuration; recomputing")
    fld, _ = run_groundstate(cfg, out_dir, log=log)
    return fld


# ---------------------------------------------------------------------------
# Evolution with resume


class _DiskSink:
    def __init__(self, run_dir, manifest, cfg, series):
        self.run_dir = run_dir
        self.manifest = manifest
        self.cfg = cfg
        self.series = series

    def __call__(self, step, time, fld):
        name = SNAP_PATTERN.format(step)
        write_snapshot(os.path.join(self.run_dir, name), fld,
                       meta={"time": time, "step": step,
                             "config_hash": self.cfg.hash, "label": self.cfg.label})
        if not any(e["step"] == step for e in self.manifest.snapshots):
            self.manifest.add_snapshot(step, time, name)
        header, rows = _series_to_rows(self.series)
        write_tsv(os.path.join(self.run_dir, self.manifest.series_file), header, rows)


def run_evolve(cfg, out_dir, log=print):
    """Run (or resume) the configured evolution; returns a summary dict.

    Refuses to resume over a manifest whose config hash differs. Restarting a
    finished run is a no-op. Resume reproduces the uninterrupted run bit for
    bit on the same platform.
    """
    if cfg.evolution is None:
        raise ConfigError("configuration has no [evolution] section")
    os.makedirs(out_dir, exist_ok=True)

    manifest_path = os.path.join(out_dir, "manifest.json")
    start_field, step_offset, manifest = None, 0, None
    series0 = None
    if os.path.exists(manifest_path):
        manifest = RunManifest.load(out_dir)
        if manifest.config_hash != cfg.hash:
            raise ConfigError(
                f"{out_dir}: existing run has config hash {manifest.config_hash[:12]}, "
                f"refusing to mix with {cfg.hash[:12]}")
        if manifest.status == "complete":
            log(f"{out_dir}: already complete")
            return _summary(cfg, out_dir, manifest)
        if manifest.snapshots:
            last = manifest.snapshots[-1]
            start_field, _ = read_snapshot(os.path.join(out_dir, last["file"]))
            step_offset = int(last["step"])
            series0 = _reload_series(out_dir, manifest, last["time"])
            log(f"resuming from step {step_offset} (t = {last['time']:.6g} ms)")

    reference_density = None
    if start_field is None:
        save_config(cfg, out_dir)
        ground = _ensure_groundstate(cfg, out_dir, log)
        start_field = inject_noise(ground, cfg.noise, n_j=cfg.setup.n_j)
        manifest = RunManifest(out_dir, cfg.hash, status="running")
        manifest.save()
    else:
        first, _ = read_snapshot(os.path.join(out_dir, manifest.snapshots[0]["file"]))
        reference_density = densities(first).total

    names = list(cfg.evolution.observables)
    from .evolution import TimeSeries
    series = series0 if series0 is not None else TimeSeries.empty(names)
    sink = _DiskSink(out_dir, manifest, cfg, series)
    bessel_opts = {k: cfg.analysis[k] for k in ("l_max", "k_max") if k in cfg.analysis}

    try:
        evolve(start_field, cfg.setup, cfg.protocol, cfg.evolution, sink=sink,
               bessel_opts=bessel_opts, step_offset=step_offset, series=series,
               reference_density=reference_density)
    except Exception:
        manifest.status = "failed"
        manifest.save()
        if manifest.snapshots:
            log(f"run failed; last checkpoint: {manifest.snapshots[-1]['file']}")
        raise
    manifest.status = "complete"
    manifest.save()
    return _summary(cfg, out_dir, manifest)


def _reload_series(out_dir, manifest, up_to_time):
    from .evolution import TimeSeries

    path = os.path.join(out_dir, manifest.series_file)
    if not os.path.exists(path):
        return None
    header, data = _load_series(path)
    names = header[1:]
    keep = data[:, 0] <= up_to_time * (1 + 1e-12)
    ts = TimeSeries(times=data[keep, 0],
                    columns={n: data[keep, 1 + i] for i, n in enumerate(names)})
    return ts


def _summary(cfg, out_dir, manifest):
    return {"run_dir": out_dir, "config_hash": cfg.hash, "label": cfg.label,
            "status": manifest.status, "snapshots": len(manifest.snapshots),
            "series_file": manifest.series_file}


# ---------------------------------------------------------------------------
# Analysis


def tf_reference_profile(cfg):
    """Integrated equilibrium Thomas-Fermi profile on the run's grid."""
    tf = thomas_fermi_profile(cfg.setup, cfg.grid)
    return analysis.integrated_axis_profile(densities(tf).total, cfg.grid)


def _nbar_from_ground(run_dir, cfg):
    path = os.path.join(run_dir, "ground.gpf")
    if os.path.exists(path):
        ground, _ = read_snapshot(path)
        n_center = float(densities(ground).total[cfg.grid.center_index])
    else:
        mu = thomas_fermi_mu(cfg.setup, cfg.grid)
        g11, _, g12 = cfg.setup.effective_couplings(cfg.grid.dims)
        n_center = 2.0 * mu / (g11 + g12)
    return 0.5 * n_center


def run_analyze(run_dir, log=print):
    """Produce all analysis tables for a completed (or partial) run; idempotent.

    Corrupt snapshots (hash mismatch) are skipped with a warning. Raises
    AnalysisError when the run has no snapshots at all.
    """
    manifest = RunManifest.load(run_dir)
    cfg = load_run_config(run_dir)
    problems = dict(manifest.verify())
    usable = [e for e in manifest.snapshots if e["file"] not in problems]
    for name, problem in problems.items():
        log(f"warning: skipping {name}: {problem}")
    if not usable:
        raise analysis.AnalysisError(f"{run_dir}: no snapshots to analyze")

    out = os.path.join(run_dir, "analysis")
    os.makedirs(out, exist_ok=True)
    summary = {"run_dir": str(run_dir), "config_hash": cfg.hash, "label": cfg.label,
               "skipped": sorted(problems)}

    # growth reports from the in-stepper series
    series_path = os.path.join(run_dir, manifest.series_file)
    growth_rows = []
    series_data = None
    if os.path.exists(series_path):
        header, data = _load_series(series_path)
        series_data = (header, data)
        for channel, col in (("spin", "spin_power"), ("density", "delta_n_power")):
            if col in header and data.shape[0] >= 50:
                rep = analysis.growth_report(data[:, 0], data[:, header.index(col)])
                growth_rows.append([channel, rep.t_onset, rep.rate, rep.t_peak,
                                    rep.saturation_value, int(rep.triggered)])
                summary[f"growth_{channel}"] = {
                    "t_onset": rep.t_onset, "rate": rep.rate, "t_peak": rep.t_peak,
                    "saturation_value": rep.saturation_value, "triggered": rep.triggered}
    if growth_rows:
        write_tsv(os.path.join(out, "growth.tsv"),
                  ["channel", "t_onset_ms", "rate_per_ms", "t_peak_ms",
                   "saturation", "triggered"], growth_rows)

    if cfg.grid.dims == 2:
        _analyze_2d(run_dir, out, cfg, usable, summary, series_data, log)
    else:
        _analyze_1d(run_dir, out, cfg, usable, summary, series_data, log)

    with open(os.path.join(out, "analysis.json"), "w") as fh:
        json.dump(summary, fh, indent=1, default=str)
    return summary


def _peak_entry(usable, series_data, power_col):
    """Snapshot entry nearest the power-series peak (fallback: last)."""
    if series_data is not None:
        header, data = series_data
        if power_col in header and data.shape[0]:
            t_peak = float(data[np.argmax(data[:, header.index(power_col)]), 0])
            return min(usable, key=lambda e: abs(e["time"] - t_peak))
    return usable[-1]


def _analyze_1d(run_dir, out, cfg, usable, summary, series_data, log):
    tf_profile = tf_reference_profile(cfg)
    mu = thomas_fermi_mu(cfg.setup, cfg.grid)
    radius = thomas_fermi_radii(cfg.setup, mu)[0]
    k_min = 2.0 * np.pi / (2.0 * radius)
    x = cfg.grid.axis(0)
    dx = cfg.grid.spacings[0]

    peak_rows = []
    for entry in usable:
        fld, _ = read_snapshot(os.path.join(run_dir, entry["file"]))
        dn = analysis.integrate_profile(fld, "delta_n", tf_profile=tf_profile)
        ns = analysis.integrate_profile(fld, "spin")
        idx = entry["index"]
        write_tsv(os.path.join(out, f"profile_{idx:04d}.tsv"),
                  ["x_um", "delta_n_1d", "ns_1d"],
                  list(zip(x, dn.values, ns.values)))
        k, f_dn = analysis.profile_spectrum(dn.values, dx)
        _, f_ns = analysis.profile_spectrum(ns.values, dx)
        half = slice(0, len(k) // 2)
        write_tsv(os.path.join(out, f"spectrum_{idx:04d}.tsv"),
                  ["k_per_um", "mag_delta_n", "mag_ns"],
                  list(zip(k[half], np.abs(f_dn)[half], np.abs(f_ns)[half])))
        for channel, prof in (("density", dn), ("spin", ns)):
            pk = analysis.side_peaks(prof, k_min=k_min)
            peak_rows.append([entry["time"], channel,
                              pk.k_peak if pk.found else math.nan,
                              pk.amplitude if pk.found else math.nan,
                              pk.width if pk.found else math.nan, int(pk.found)])
    write_tsv(os.path.join(out, "peaks.tsv"),
              ["time_ms", "channel", "k_peak_per_um", "amplitude", "width_per_um",
               "found"], peak_rows)

    n_bar = _nbar_from_ground(run_dir, cfg)
    g11, _, g12 = cfg.setup.effective_couplings(cfg.grid.dims)
    for channel, col in (("spin", "spin_power"), ("density", "delta_n_power")):
        entry = _peak_entry(usable, series_data, col)
        fld, _ = read_snapshot(os.path.join(run_dir, entry["file"]))
        prof = analysis.integrate_profile(fld, "spin") if channel == "spin" else \
            analysis.integrate_profile(fld, "delta_n", tf_profile=tf_profile)
        pk = analysis.side_peaks(prof, k_min=k_min)
        info = {"time": entry["time"], "found": pk.found}
        if pk.found:
            disp = DispersionInput(n_bar=n_bar, g=g11, g12=g12, channel=channel,
                                   units=cfg.setup.units)
            omega_k = bogoliubov_omega(pk.k_peak, disp)
            info.update({
                "k_peak": pk.k_peak, "width": pk.width, "amplitude": pk.amplitude,
                "two_omega_of_k_peak": 2.0 * omega_k,
                "omega_m": cfg.protocol.omega_m if cfg.protocol else math.nan,
                "resonance_residual": abs(2.0 * omega_k - cfg.protocol.omega_m)
                / cfg.protocol.omega_m if cfg.protocol else math.nan,
                "k_resonance_predicted": resonance_k(cfg.protocol.omega_m, disp)
                if cfg.protocol else math.nan,
            })
        summary[f"peak_{channel}"] = info
    summary["n_bar"] = n_bar


def _analyze_2d(run_dir, out, cfg, usable, summary, series_data, log):
    l_max = int(cfg.analysis.get("l_max", 10))
    k_max = float(cfg.analysis.get("k_max", 1.5))
    mu = thomas_fermi_mu(cfg.setup, cfg.grid)
    radius = thomas_fermi_radii(cfg.setup, mu)[0]

    power_rows, kr_rows, l_rows, label_rows = [], [], [], []
    decomp_peak, best_power, peak_entry = None, -1.0, None
    k_grid = None
    for entry in usable:
        fld, _ = read_snapshot(os.path.join(run_dir, entry["file"]))
        ns2d = densities(fld).spin
        dec = analysis.bessel_decompose(ns2d, cfg.grid, l_max=l_max, k_max=k_max)
        k_grid = dec.k
        per_l = dec.power_per_l()
        total = float(np.sum(per_l))
        per_k = np.sum(np.abs(dec.coeffs) ** 2, axis=0)   # sum over l at each k
        power_rows.append([entry["time"], total])
        kr_rows.append([entry["time"]] + list(per_k))
        l_rows.append([entry["time"]] + list(per_l))
        label = analysis.label_mode(dec, ns2d, cfg.grid, tf_radius=radius)
        label_rows.append([entry["time"], label.l, label.n_r, label.confidence,
                           int(label.low_confidence)])
        if total > best_power:
            best_power, decomp_peak, peak_entry = total, dec, entry

    write_tsv(os.path.join(out, "bessel_power.tsv"), ["time_ms", "total_power"],
              power_rows)
    write_tsv(os.path.join(out, "bessel_kr.tsv"),
              ["time_ms"] + [f"k_{k:.6g}" for k in k_grid], kr_rows)
    write_tsv(os.path.join(out, "bessel_l.tsv"),
              ["time_ms"] + [f"l_{l}" for l in range(l_max + 1)], l_rows)
    write_tsv(os.path.join(out, "labels.tsv"),
              ["time_ms", "l", "n_r", "confidence", "low_confidence"], label_rows)

    if decomp_peak is not None:
        from .snapshots import write_decomposition
        write_decomposition(os.path.join(out, "peak.gpd"), decomp_peak)
        fld, _ = read_snapshot(os.path.join(run_dir, peak_entry["file"]))
        ns2d = densities(fld).spin
        label = analysis.label_mode(decomp_peak, ns2d, cfg.grid, tf_radius=radius)
        summary["peak_label"] = {"time": peak_entry["time"], "l": label.l,
                                 "n_r": label.n_r, "confidence": label.confidence,
                                 "low_confidence": label.low_confidence,
                                 "total_power": best_power}
    summary["tf_radius"] = radius


# ---------------------------------------------------------------------------
# Sweeps


def _sweep_worker(args):
    raw, out_dir, channel = args
    omega_m = hz_to_radms_safe(raw)
    try:
        cfg = build_config(raw)
        run_evolve(cfg, out_dir, log=lambda *a, **k: None)
        summary = run_analyze(out_dir, log=lambda *a, **k: None)
        row = {"omega_m": cfg.protocol.omega_m, "status": "ok"}
        growth = summary.get(f"growth_{channel}") or {}
        row["growth_rate"] = growth.get("rate", math.nan)
        if cfg.grid.dims == 2:
            label = summary.get("peak_label") or {}
            row.update({"l": label.get("l"), "n_r": label.get("n_r"),
                        "confidence": label.get("confidence")})
        else:
            peak = summary.get(f"peak_{channel}") or {}
            row["k_peak"] = peak.get("k_peak", math.nan) if peak.get("found") else math.nan
        return row
    except Exception as exc:  # individual failures recorded, sweep continues
        return {"omega_m": omega_m, "status": f"failed: {exc}"}


def hz_to_radms_safe(raw):
    try:
        return 2.0 * np.pi * raw["protocol"]["omega_m_hz"] / 1000.0
    except Exception:
        return math.nan


def run_sweep(cfg, omegas_radms, out_dir, workers=None, channel=None, log=print):
    """Dispatch one evolution per modulation frequency over a process pool and
    tabulate the dominant response; failed runs are recorded and skipped."""
    os.makedirs(out_dir, exist_ok=True)
    if channel is None:
        channel = "density" if (cfg.protocol and cfg.protocol.phase_relation ==
                                "in_phase" and cfg.noise.kind == "none") else "spin"
    rows = []
    if omegas_radms:
        ground_dir = os.path.join(out_dir, "groundstate")
        base_raw = dict(cfg.raw)
        base_raw.pop("protocol", None)
        gs_cfg = build_config(base_raw)
        os.makedirs(ground_dir, exist_ok=True)
        ground_path = os.path.join(ground_dir, "ground.gpf")
        if not os.path.exists(ground_path):
            run_groundstate(gs_cfg, ground_dir, log=log)

        tasks = []
        for omega in omegas_radms:
            raw = json.loads(json.dumps(cfg.raw))
            raw["protocol"]["omega_m_hz"] = 1000.0 * omega / (2.0 * np.pi)
            raw["label"] = f"{cfg.label}-w{raw['protocol']['omega_m_hz']:.6g}"
            sub_dir = os.path.join(out_dir, f"omega_{raw['protocol']['omega_m_hz']:.6g}hz")
            os.makedirs(sub_dir, exist_ok=True)
            # reuse the shared ground state: same setup/grid for every frequency
            sub_cfg = build_config(raw)
            ground, _ = read_snapshot(ground_path)
            write_snapshot(os.path.join(sub_dir, "ground.gpf"), ground,
                           meta={"time": 0.0, "step": 0, "config_hash": sub_cfg.hash,
                                 "label": raw["label"], "kind": "groundstate"})
            save_config(sub_cfg, sub_dir)
            tasks.append((raw, sub_dir, channel))

        if workers is None:
            workers = os.cpu_count() or 1
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_sweep_worker, tasks))
        else:
            rows = [_sweep_worker(t) for t in tasks]

    header = ["omega_m_radms", "omega_m_hz", "channel", "k_peak_per_um",
              "growth_rate_per_ms", "l", "n_r", "status"]
    table = []
    for row in sorted(rows, key=lambda r: r["omega_m"]):
        table.append([row["omega_m"], 1000.0 * row["omega_m"] / (2 * np.pi), channel,
                      row.get("k_peak", math.nan), row.get("growth_rate", math.nan),
                      row.get("l", ""), row.get("n_r", ""), row["status"]])
    write_tsv(os.path.join(out_dir, "resonance.tsv"), header, table)
    return table


# ---------------------------------------------------------------------------
# Dispersion tables


def dispersion_table(cfg, omegas_radms=(), channel="both", run_dir=None, n_k=40):
    """Rows of (k, omega_d, omega_s) plus resonance solutions for requested
    modulation frequencies; n_bar from a run's ground state when given, else
    from the Thomas-Fermi central density."""
    if run_dir is not None:
        n_bar = _nbar_from_ground(run_dir, cfg)
        source = "simulated ground state"
    else:
        mu = thomas_fermi_mu(cfg.setup, cfg.grid)
        g11, _, g12 = cfg.setup.effective_couplings(cfg.grid.dims)
        n_bar = mu / (g11 + g12)
        source = "Thomas-Fermi central density"
    g11, _, g12 = cfg.setup.effective_couplings(cfg.grid.dims)
    disp_d = DispersionInput(n_bar=n_bar, g=g11, g12=g12, channel="density",
                             units=cfg.setup.units)
    disp_s = DispersionInput(n_bar=n_bar, g=g11, g12=g12, channel="spin",
                             units=cfg.setup.units)
    sh = sound_and_healing(disp_d)
    k_hi = 4.0 / sh.xi_s
    ks = np.linspace(0.0, k_hi, n_k)
    branch_rows = [[k, bogoliubov_omega(k, disp_d), bogoliubov_omega(k, disp_s)]
                   for k in ks]
    res_rows = []
    for omega in omegas_radms:
        for name, disp in (("density", disp_d), ("spin", disp_s)):
            if channel in ("both", name):
                k_res = resonance_k(omega, disp)
                res_rows.append([omega, 1000.0 * omega / (2 * np.pi), name, k_res,
                                 2.0 * np.pi / k_res])
    meta = {"n_bar": n_bar, "n_bar_source": source, "c_d": sh.c_d, "c_s": sh.c_s,
            "xi_d": sh.xi_d, "xi_s": sh.xi_s}
    return meta, branch_rows, res_rows
