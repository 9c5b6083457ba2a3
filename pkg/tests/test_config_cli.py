"""Configuration loading/validation, presets, run orchestration and the CLI."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

import gpfaraday as gp
from gpfaraday.cli import main as cli_main
from gpfaraday.config import build_config, load_config
from gpfaraday.presets import PRESETS, get_preset, preset_names
from gpfaraday import experiment

TINY = {
    "label": "tiny",
    "seed": 11,
    "setup": {"n_total": 2e4, "trap_freqs_hz": [5.0, 512.0, 512.0],
              "a_base_bohr": 54.54, "a12_ratio": 0.93},
    "grid": {"points": [512], "extents": [128.0]},
    "grid3d": {"points": [64, 16, 16], "extents": [128.0, 6.0, 6.0]},
    "protocol": {"target": "scattering", "phase_relation": "out_of_phase",
                 "a_m": 0.07, "omega_m_hz": 195.0},
    "noise": {"kind": "modulus", "eta": 1e-4},
    "groundstate": {"tolerance": 1e-8},
    "evolution": {"dt": 0.004, "t_final": 2.0, "snapshot_stride": 125,
                  "checkpoint_stride": 250},
    "analysis": {"l_max": 6, "k_max": 1.0},
}


class TestConfig:
    def test_build_and_units(self):
        cfg = build_config(TINY)
        assert cfg.setup.trap_freqs[0] == pytest.approx(2 * np.pi * 0.005)
        assert cfg.protocol.omega_m == pytest.approx(2 * np.pi * 0.195)
        assert cfg.grid.dims == 1
        assert cfg.noise.seed == 11     # defaults to the top-level seed

    def test_hash_stability_and_seed_override(self):
        a = build_config(TINY)
        b = build_config(TINY)
        assert a.hash == b.hash
        c = build_config(TINY, seed=99)
        assert c.hash != a.hash
        assert c.noise.seed == 99

    def test_full_3d_switch(self):
        cfg = build_config(TINY, full_3d=True)
        assert cfg.grid.dims == 3
        no3d = {k: v for k, v in TINY.items() if k != "grid3d"}
        with pytest.raises(gp.ConfigError):
            build_config(no3d, full_3d=True)

    def test_invalid_sections_rejected(self):
        bad = json.loads(json.dumps(TINY))
        bad["protocol"]["a_m"] = 2.0
        with pytest.raises(gp.ConfigError):
            build_config(bad)
        bad = json.loads(json.dumps(TINY))
        bad["grid"]["points"] = [100]
        with pytest.raises((gp.ConfigError, gp.GridError)):
            build_config(bad)

    def test_toml_loading_and_merge(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('label = "over"\n[evolution]\ndt = 0.002\nt_final = 1.0\n')
        cfg = load_config(path=str(path), preset="fig2")
        assert cfg.label == "over"
        assert cfg.evolution.dt == 0.002
        assert cfg.protocol.phase_relation == "out_of_phase"   # from preset

    def test_bad_toml_is_config_error(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text("this is { not toml")
        with pytest.raises(gp.ConfigError):
            load_config(path=str(path))

    def test_presets_all_buildable(self):
        for name in preset_names():
            cfg = build_config(get_preset(name))
            assert cfg.label == name

    def test_expected_preset_names_shipped(self):
        names = set(preset_names())
        expected = {"fig1", "fig2", "fig3", "fig6", "fig7", "fig8-A", "fig8-B",
                    "fig8-C"}
        expected |= {f"fig4a-l{l}" for l in range(7)}
        expected |= {f"fig4b-nr{n}" for n in range(7)}
        assert expected <= names

    def test_unknown_preset(self):
        with pytest.raises(gp.ConfigError):
            get_preset("fig99")


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = build_config(TINY)
    experiment.run_evolve(cfg, str(out), log=lambda *a, **k: None)
    return cfg, str(out)


class TestRunEvolve:
    def test_manifest_complete_and_hashes(self, tiny_run):
        cfg, out = tiny_run
        man = gp.RunManifest.load(out)
        assert man.status == "complete"
        assert man.config_hash == cfg.hash
        assert man.verify() == []
        assert len(man.snapshots) == 1 + 2.0 / 0.004 / 125

    def test_snapshot_sidecars_carry_config_hash(self, tiny_run):
        cfg, out = tiny_run
        man = gp.RunManifest.load(out)
        _, meta = gp.read_snapshot(os.path.join(out, man.snapshots[0]["file"]))
        assert meta["config_hash"] == cfg.hash

    def test_series_written(self, tiny_run):
        cfg, out = tiny_run
        header, rows = experiment.read_tsv(os.path.join(out, "series.tsv"))
        assert header[0] == "time"
        assert "spin_power" in header
        assert len(rows) == 1 + 2.0 / 0.004 / 125

    def test_rerun_of_complete_run_is_noop(self, tiny_run):
        cfg, out = tiny_run
        before = open(os.path.join(out, "manifest.json")).read()
        experiment.run_evolve(cfg, out, log=lambda *a, **k: None)
        assert open(os.path.join(out, "manifest.json")).read() == before

    def test_config_hash_mismatch_refused(self, tiny_run):
        _, out = tiny_run
        other = json.loads(json.dumps(TINY))
        other["evolution"]["t_final"] = 4.0
        with pytest.raises(gp.ConfigError, match="refusing"):
            experiment.run_evolve(build_config(other), out,
                                  log=lambda *a, **k: None)

    def test_resume_bit_for_bit(self, tmp_path):
        cfg = build_config(TINY)
        full_dir, broken_dir = tmp_path / "full", tmp_path / "broken"
        experiment.run_evolve(cfg, str(full_dir), log=lambda *a, **k: None)

        # interrupted run: stop after the second checkpoint by shortening,
        # then resume with the full duration
        short = json.loads(json.dumps(TINY))
        short["evolution"]["t_final"] = 1.0
        experiment.run_evolve(build_config(short), str(broken_dir),
                              log=lambda *a, **k: None)
        man = gp.RunManifest.load(broken_dir)
        man.config_hash = cfg.hash     # same physics, longer horizon
        man.status = "running"
        man.save()
        with open(broken_dir / "config.json", "w") as fh:
            json.dump({"hash": cfg.hash, "raw": cfg.raw}, fh)
        experiment.run_evolve(cfg, str(broken_dir), log=lambda *a, **k: None)

        final_full = sorted(p for p in os.listdir(full_dir) if p.endswith(".gpf"))
        final_broken = sorted(p for p in os.listdir(broken_dir) if p.endswith(".gpf"))
        assert final_full == final_broken
        last = final_full[-1]
        assert (full_dir / last).read_bytes() == (broken_dir / last).read_bytes()

    def test_determinism_same_seed(self, tmp_path, tiny_run):
        cfg, out = tiny_run
        again = tmp_path / "again"
        experiment.run_evolve(cfg, str(again), log=lambda *a, **k: None)
        man = gp.RunManifest.load(out)
        for entry in man.snapshots:
            a = open(os.path.join(out, entry["file"]), "rb").read()
            b = open(os.path.join(str(again), entry["file"]), "rb").read()
            assert a == b, entry["file"]


class TestRunAnalyze:
    def test_analysis_outputs(self, tiny_run):
        cfg, out = tiny_run
        summary = experiment.run_analyze(out, log=lambda *a, **k: None)
        adir = os.path.join(out, "analysis")
        assert os.path.exists(os.path.join(adir, "peaks.tsv"))
        assert os.path.exists(os.path.join(adir, "analysis.json"))
        assert summary["config_hash"] == cfg.hash

    def test_idempotent(self, tiny_run):
        _, out = tiny_run
        a = experiment.run_analyze(out, log=lambda *a, **k: None)
        b = experiment.run_analyze(out, log=lambda *a, **k: None)
        assert json.dumps(a, default=str) == json.dumps(b, default=str)

    def test_corrupt_snapshot_skipped_with_warning(self, tmp_path):
        cfg = build_config(TINY)
        out = tmp_path / "run"
        experiment.run_evolve(cfg, str(out), log=lambda *a, **k: None)
        man = gp.RunManifest.load(out)
        victim = man.snapshots[1]["file"]
        (out / victim).write_bytes(b"garbage")
        warnings = []
        summary = experiment.run_analyze(str(out), log=lambda m: warnings.append(m))
        assert any(victim in w for w in warnings)
        assert victim in summary["skipped"]

    def test_empty_run_raises(self, tmp_path):
        man = gp.RunManifest(tmp_path, config_hash="abc")
        man.save()
        cfg = build_config(TINY)
        experiment.save_config(cfg, str(tmp_path))
        with pytest.raises(gp.AnalysisError, match="no snapshots"):
            experiment.run_analyze(str(tmp_path), log=lambda *a, **k: None)


class TestSweep:
    def test_empty_frequency_list(self, tmp_path):
        cfg = build_config(TINY)
        table = experiment.run_sweep(cfg, [], str(tmp_path),
                                     log=lambda *a, **k: None)
        assert table == []
        header, rows = experiment.read_tsv(tmp_path / "resonance.tsv")
        assert rows == []
        assert header[0] == "omega_m_radms"

    def test_failures_recorded_and_continue(self, tmp_path):
        bad = json.loads(json.dumps(TINY))
        bad["evolution"]["dt"] = 0.05      # violates mu*dt rule in every run
        cfg = build_config(bad)
        table = experiment.run_sweep(cfg, [2 * np.pi * 0.1], str(tmp_path),
                                     workers=1, log=lambda *a, **k: None)
        assert len(table) == 1
        assert "failed" in table[0][-1]


class TestCli:
    def _cfg_file(self, tmp_path, raw=None):
        import copy
        raw = raw or TINY
        path = tmp_path / "cfg.toml"

        def emit(d, prefix=""):
            lines, subs = [], []
            for key, val in d.items():
                if isinstance(val, dict):
                    subs.append((f"{prefix}{key}", val))
                elif isinstance(val, str):
                    lines.append(f'{key} = "{val}"')
                elif isinstance(val, bool):
                    lines.append(f"{key} = {str(val).lower()}")
                elif isinstance(val, list):
                    lines.append(f"{key} = {val}")
                else:
                    lines.append(f"{key} = {val}")
            out = "\n".join(lines) + "\n"
            for name, sub in subs:
                out += f"[{name}]\n" + emit(sub)
            return out

        path.write_text(emit(raw))
        return str(path)

    def test_dispersion_prints_table(self, tmp_path, capsys):
        rc = cli_main(["dispersion", "--config", self._cfg_file(tmp_path),
                       "--omega-list", "195,384"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "k_per_um" in out and "spin" in out and "density" in out

    def test_groundstate_and_evolve_and_analyze(self, tmp_path, capsys):
        cfg_file = self._cfg_file(tmp_path)
        out_dir = str(tmp_path / "run")
        assert cli_main(["groundstate", "--config", cfg_file, "--out", out_dir]) == 0
        assert cli_main(["evolve", "--config", cfg_file, "--out", out_dir]) == 0
        assert cli_main(["analyze", "--run", out_dir]) == 0

    def test_config_error_exit_2(self, tmp_path):
        bad = json.loads(json.dumps(TINY))
        bad["protocol"]["a_m"] = 5.0
        assert cli_main(["evolve", "--config", self._cfg_file(tmp_path, bad),
                         "--out", str(tmp_path / "r")]) == 2

    def test_missing_file_exit_4(self, tmp_path):
        assert cli_main(["analyze", "--run", str(tmp_path / "nope")]) == 4

    def test_empty_run_analyze_exit_3(self, tmp_path):
        man = gp.RunManifest(tmp_path, config_hash="abc")
        man.save()
        cfg = build_config(TINY)
        experiment.save_config(cfg, str(tmp_path))
        assert cli_main(["analyze", "--run", str(tmp_path)]) == 3

    def test_sweep_empty_list_exit_0(self, tmp_path):
        rc = cli_main(["sweep", "--config", self._cfg_file(tmp_path),
                       "--out", str(tmp_path / "sw"), "--omega-list", ""])
        assert rc == 0

    def test_console_script_installed(self):
        proc = subprocess.run([sys.executable, "-m", "gpfaraday.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "groundstate" in proc.stdout
