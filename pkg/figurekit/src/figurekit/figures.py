"""Figure renderers: one image per panel, reading only documented run-dir
formats. Missing inputs skip the affected panel with a message rather than
failing the whole figure.
"""

import os
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import formats

SPIN_CMAP = "RdBu_r"     # diverging, centered at zero for spin densities
DENSITY_CMAP = "viridis"


@dataclass
class FigureSpec:
    figure: str                  # fig1..fig8
    run_dir: str
    out_path: str                # directory or file prefix
    image_format: str = "png"    # png | pdf
    colormap: str = SPIN_CMAP


@dataclass
class RenderReport:
    written: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def ok(self):
        return len(self.written) > 0


def _save(fig, spec, panel, report):
    os.makedirs(spec.out_path, exist_ok=True)
    path = os.path.join(spec.out_path,
                        f"{spec.figure}_{panel}.{spec.image_format}")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    report.written.append(path)


def _skip(report, panel, why):
    report.skipped.append((panel, why))


def _snapshots(spec):
    manifest, entries = formats.load_run(spec.run_dir)
    return [(e, os.path.join(spec.run_dir, e["file"])) for e in entries]


def _axial_profile(snap, which):
    dens = snap.spin_density if which == "spin" else snap.total_density
    out = dens
    for axis in range(snap.dims - 1, 0, -1):
        out = np.trapezoid(out, dx=snap.spacings[axis], axis=axis)
    return out


def _modulation_period_ms(run_dir):
    raw = formats.read_config(run_dir).get("raw", {})
    proto = raw.get("protocol", {})
    if "omega_m_hz" in proto:
        return 1000.0 / proto["omega_m_hz"]
    if "omega_m" in proto:
        return 2 * np.pi / proto["omega_m"]
    return None


def _carpet(spec, which, panel, report, cmap):
    snaps = _snapshots(spec)
    if not snaps:
        return _skip(report, panel, "no snapshots in manifest")
    profiles, times = [], []
    for entry, path in snaps:
        snap = formats.read_snapshot(path)
        profiles.append(_axial_profile(snap, which))
        times.append(snap.time)
    x = formats.read_snapshot(snaps[0][1]).axis(0)
    arr = np.array(profiles)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    vmax = np.max(np.abs(arr)) or 1.0
    kw = {"cmap": cmap}
    if which == "spin":
        kw.update(vmin=-vmax, vmax=vmax)
    im = ax.pcolormesh(x, times, arr, shading="nearest", **kw)
    ax.set_xlabel("x (um)")
    ax.set_ylabel("t (ms)")
    ax.set_title(f"integrated {which} density")
    fig.colorbar(im, ax=ax)
    _save(fig, spec, panel, report)


def _profile_and_spectrum(spec, report, which):
    adir = os.path.join(spec.run_dir, "analysis")
    snaps = _snapshots(spec)
    if not snaps:
        return _skip(report, "profile", "no snapshots")
    # pick the analysis peak snapshot when available, else the last
    idx = len(snaps) - 1
    peaks_path = os.path.join(adir, "peaks.tsv")
    entry, path = snaps[idx]
    snap = formats.read_snapshot(path)
    x = snap.axis(0)
    prof = _axial_profile(snap, which)
    fig, ax = plt.subplots(figsize=(6, 2.8))
    ax.plot(x, prof, lw=0.9)
    ax.set_xlabel("x (um)")
    ax.set_ylabel(f"{which} profile (um^-1)" if snap.dims > 1 else "profile")
    ax.set_title(f"t = {snap.time:.1f} ms")
    _save(fig, spec, "profile", report)

    dx = snap.spacings[0]
    f = dx * np.fft.fft(prof)
    k = 2 * np.pi * np.fft.fftfreq(len(prof), d=dx)
    half = slice(1, len(prof) // 2)
    fig, ax = plt.subplots(figsize=(6, 2.8))
    ax.plot(k[half], np.abs(f)[half], lw=0.9)
    ax.set_xlim(0, 1.5)
    ax.set_xlabel("k_x (um^-1)")
    ax.set_ylabel("|F|")
    _save(fig, spec, "spectrum", report)

    if os.path.exists(peaks_path):
        header, data = formats.read_tsv(peaks_path)
        with open(peaks_path) as fh:
            fh.readline()
            chans = [line.split("\t")[1] for line in fh if line.strip()]
        sel = [i for i, c in enumerate(chans)
               if c == ("spin" if which == "spin" else "density")]
        if sel:
            t = data[sel, 0]
            kp = data[sel, header.index("k_peak_per_um")]
            fig, ax = plt.subplots(figsize=(6, 2.8))
            ax.plot(t, kp, "o", ms=3)
            ax.set_xlabel("t (ms)")
            ax.set_ylabel("k_peak (um^-1)")
            _save(fig, spec, "peak_track", report)
    else:
        _skip(report, "peak_track", "analysis/peaks.tsv missing")


def _series_panel(spec, report, column, panel="power"):
    manifest = formats.read_manifest(spec.run_dir)
    path = os.path.join(spec.run_dir, manifest.get("series_file", "series.tsv"))
    if not os.path.exists(path):
        return _skip(report, panel, "series file missing")
    header, data = formats.read_tsv(path)
    if column not in header or data.shape[0] == 0:
        return _skip(report, panel, f"series lacks {column}")
    fig, ax = plt.subplots(figsize=(6, 2.8))
    ax.semilogy(data[:, 0], np.maximum(data[:, header.index(column)], 1e-300))
    ax.set_xlabel("t (ms)")
    ax.set_ylabel(column)
    _save(fig, spec, panel, report)


def _maps_panel(spec, report, entry_path, panel, spin_only=False, cmap=None):
    snap = formats.read_snapshot(entry_path)
    if snap.dims < 2:
        return _skip(report, panel, "snapshot is 1D; no map to draw")
    fields = [("n_s", snap.spin_density)] if spin_only else \
        [("n_1", np.abs(snap.psi1) ** 2), ("n_2", np.abs(snap.psi2) ** 2)]
    fig, axes = plt.subplots(1, len(fields), figsize=(4.2 * len(fields), 3.6))
    axes = np.atleast_1d(axes)
    x, y = snap.axis(0), snap.axis(1)
    for ax, (name, dens) in zip(axes, fields):
        if name == "n_s":
            vmax = np.max(np.abs(dens)) or 1.0
            im = ax.pcolormesh(x, y, dens.T, cmap=cmap or SPIN_CMAP,
                               vmin=-vmax, vmax=vmax, shading="nearest")
        else:
            im = ax.pcolormesh(x, y, dens.T, cmap=DENSITY_CMAP,
                               shading="nearest")
        ax.set_aspect("equal")
        ax.set_title(f"{name}, t = {snap.time:.0f} ms")
        ax.set_xlabel("x (um)")
        ax.set_ylabel("y (um)")
        fig.colorbar(im, ax=ax)
    _save(fig, spec, panel, report)


def _heatmap_over_time(spec, report, table, panel, ylabel):
    path = os.path.join(spec.run_dir, "analysis", table)
    if not os.path.exists(path):
        return _skip(report, panel, f"analysis/{table} missing")
    header, data = formats.read_tsv(path)
    if data.shape[0] == 0:
        return _skip(report, panel, f"{table} is empty")
    times = data[:, 0]
    values = data[:, 1:]
    yvals = [float(h.split("_", 1)[1]) for h in header[1:]]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    im = ax.pcolormesh(times, yvals, np.log10(np.maximum(values.T, 1e-300)),
                       shading="nearest", cmap="magma")
    ax.set_xlabel("t (ms)")
    ax.set_ylabel(ylabel)
    fig.colorbar(im, ax=ax, label="log10 power")
    _save(fig, spec, panel, report)


# ---------------------------------------------------------------------------
# Figure entry points


def _fig_elongated(spec, report, which):
    cmap = SPIN_CMAP if which == "spin" else DENSITY_CMAP
    _carpet(spec, "total", "map_total", report, DENSITY_CMAP)
    _carpet(spec, "spin", "map_spin", report, SPIN_CMAP)
    _profile_and_spectrum(spec, report, which)


def render_fig1(spec, report):
    _fig_elongated(spec, report, "total")
    _series_panel(spec, report, "delta_n_power", panel="power")


def render_fig2(spec, report):
    _fig_elongated(spec, report, "spin")
    _series_panel(spec, report, "spin_power", panel="power")


def render_fig3(spec, report):
    _carpet(spec, "spin", "map_spin", report, SPIN_CMAP)
    _series_panel(spec, report, "spin_power", panel="power")
    snaps = _snapshots(spec)
    if len(snaps) >= 3:
        picks = [len(snaps) // 2, 3 * len(snaps) // 4, len(snaps) - 1]
        for j, i in enumerate(picks):
            snap = formats.read_snapshot(snaps[i][1])
            prof = _axial_profile(snap, "spin")
            fig, ax = plt.subplots(figsize=(5, 2.2))
            ax.plot(snap.axis(0), prof, lw=0.9)
            ax.set_title(f"t = {snap.time:.0f} ms")
            ax.set_xlabel("x (um)")
            _save(fig, spec, f"profile_{j}", report)
    else:
        _skip(report, "profiles", "fewer than three snapshots")


def render_fig4(spec, report):
    snaps = _snapshots(spec)
    if not snaps:
        return _skip(report, "maps", "no snapshots")
    labels_path = os.path.join(spec.run_dir, "analysis", "labels.tsv")
    idx = len(snaps) - 1
    if os.path.exists(labels_path):
        header, data = formats.read_tsv(labels_path)
        if data.shape[0]:
            # snapshot at maximum confidence
            idx = int(np.argmax(data[:, header.index("confidence")]))
            idx = min(idx, len(snaps) - 1)
    _maps_panel(spec, report, snaps[idx][1], "components")


def render_fig5(spec, report):
    path = os.path.join(spec.run_dir, "resonance.tsv")
    if not os.path.exists(path):
        return _skip(report, "spectrum", "resonance.tsv missing (sweep output)")
    header, data = formats.read_tsv(path)
    if data.shape[0] == 0:
        return _skip(report, "spectrum", "resonance table empty")
    raw = formats.read_config(spec.run_dir).get("raw", {}) if \
        os.path.exists(os.path.join(spec.run_dir, "config.json")) else {}
    trap_hz = raw.get("setup", {}).get("trap_freqs_hz", [None])[0]
    omega_r = 2 * np.pi * trap_hz / 1000.0 if trap_hz else 1.0
    fig, ax = plt.subplots(figsize=(5, 3.4))
    have_l = "l" in header and not np.all(np.isnan(data[:, header.index("l")]))
    xcol = header.index("l") if have_l else header.index("k_peak_per_um")
    ax.plot(data[:, xcol], 0.5 * data[:, 0] / omega_r, "o")
    ax.set_xlabel("angular order l" if have_l else "k_peak (um^-1)")
    ax.set_ylabel("omega(n_r, l) / omega_r" if trap_hz else "omega_m/2 (rad/ms)")
    _save(fig, spec, "spectrum", report)


def render_fig6(spec, report):
    snaps = _snapshots(spec)
    if snaps:
        picks = np.linspace(0, len(snaps) - 1, min(7, len(snaps))).astype(int)
        for j, i in enumerate(picks):
            _maps_panel(spec, report, snaps[i][1], f"snap_{j}", spin_only=True,
                        cmap=spec.colormap)
    else:
        _skip(report, "snaps", "no snapshots")
    _heatmap_over_time(spec, report, "bessel_kr.tsv", "kr_map", "k_r (um^-1)")
    _heatmap_over_time(spec, report, "bessel_l.tsv", "l_map", "l")
    path = os.path.join(spec.run_dir, "analysis", "bessel_power.tsv")
    if os.path.exists(path):
        header, data = formats.read_tsv(path)
        fig, ax = plt.subplots(figsize=(6, 2.8))
        ax.semilogy(data[:, 0], np.maximum(data[:, 1], 1e-300))
        ax.set_xlabel("t (ms)")
        ax.set_ylabel("pattern power")
        _save(fig, spec, "power", report)
    else:
        _series_panel(spec, report, "spin_power", panel="power")


def render_fig7(spec, report):
    snaps = _snapshots(spec)
    period = _modulation_period_ms(spec.run_dir)
    if not snaps or period is None:
        return _skip(report, "triple", "need snapshots and a modulation period")
    times = np.array([e["time"] for e, _ in snaps])
    t0 = times[-1] - 2 * period
    for j, target in enumerate((t0, t0 + period, t0 + 2 * period)):
        i = int(np.argmin(np.abs(times - target)))
        _maps_panel(spec, report, snaps[i][1], f"t{j}", spin_only=False)


def render_fig8(spec, report):
    # expects protocol subruns (e.g. A/, B/, C/) under the run directory
    subruns = []
    for name in sorted(os.listdir(spec.run_dir)):
        sub = os.path.join(spec.run_dir, name)
        if os.path.isdir(sub) and os.path.exists(os.path.join(sub, "manifest.json")):
            subruns.append((name, sub))
    if not subruns:
        return _skip(report, "comparison", "no protocol subruns with manifests")
    fig, ax = plt.subplots(figsize=(6.5, 3.4))
    drew = False
    for name, sub in subruns:
        bp = os.path.join(sub, "analysis", "bessel_power.tsv")
        if os.path.exists(bp):
            header, data = formats.read_tsv(bp)
            col = 1
        else:
            manifest = formats.read_manifest(sub)
            sp = os.path.join(sub, manifest.get("series_file", "series.tsv"))
            if not os.path.exists(sp):
                continue
            header, data = formats.read_tsv(sp)
            if "spin_power" not in header:
                continue
            col = header.index("spin_power")
        if data.shape[0]:
            ax.semilogy(data[:, 0], np.maximum(data[:, col], 1e-300), label=name)
            drew = True
    if not drew:
        plt.close(fig)
        return _skip(report, "comparison", "no power series found in subruns")
    ax.set_xlabel("t (ms)")
    ax.set_ylabel("pattern power")
    ax.legend()
    _save(fig, spec, "comparison", report)


RENDERERS = {
    "fig1": render_fig1, "fig2": render_fig2, "fig3": render_fig3,
    "fig4": render_fig4, "fig5": render_fig5, "fig6": render_fig6,
    "fig7": render_fig7, "fig8": render_fig8,
}


def render(spec):
    """Render every panel of the requested figure; returns a RenderReport.
    Raises FormatError for unreadable mandatory inputs and KeyError for an
    unknown figure id."""
    if spec.figure not in RENDERERS:
        raise KeyError(f"unknown figure id {spec.figure!r}; "
                       f"expected one of {sorted(RENDERERS)}")
    if spec.image_format not in ("png", "pdf"):
        raise ValueError(f"unsupported image format {spec.image_format!r}")
    report = RenderReport()
    RENDERERS[spec.figure](spec, report)
    return report
