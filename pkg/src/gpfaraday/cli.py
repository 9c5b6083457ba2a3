"""Command-line surface.

    gpf groundstate|evolve|analyze|sweep|dispersion
        --config <file> [--preset <name>] [--out <dir>] [--seed <u64>] [--full-3d]

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
"""

import argparse
import json
import sys

import numpy as np

from .analysis import AnalysisError
from .config import load_config
from .evolution import ConfigError
from .grids import GridError
from .groundstate import ConvergenceError
from .model import FieldError, ModelError
from .presets import preset_names
from .snapshots import FormatError, ManifestError


def _common(parser, out_required=False):
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--preset", help=f"named preset ({', '.join(preset_names())})")
    parser.add_argument("--out", required=out_required, default=None,
                        help="output run directory")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed override")
    parser.add_argument("--full-3d", action="store_true",
                        help="use the coarse 3D grid variant from [grid3d]")


def build_parser():
    parser = argparse.ArgumentParser(prog="gpf", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="prepare and persist the stationary state")
    _common(p, out_required=True)

    p = sub.add_parser("evolve", help="run (or resume) a modulated evolution")
    _common(p, out_required=True)

    p = sub.add_parser("analyze", help="write analysis tables for a run directory")
    p.add_argument("--run", required=True, help="run directory with a manifest")

    p = sub.add_parser("sweep", help="per-frequency runs over a worker pool")
    _common(p, out_required=True)
    p.add_argument("--omega-list", help="comma-separated modulation frequencies, Hz")
    p.add_argument("--omega-range", help="lo:hi:n inclusive range of frequencies, Hz")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("dispersion", help="print dispersion and resonance tables")
    _common(p)
    p.add_argument("--channel", choices=("density", "spin", "both"), default="both")
    p.add_argument("--omega-list", help="comma-separated modulation frequencies, Hz")
    p.add_argument("--run", default=None,
                   help="use this run's ground state for the average density")
    return parser


def _omegas_radms(args):
    if getattr(args, "omega_list", None):
        if not args.omega_list.strip():
            return []
        freqs = [float(tok) for tok in args.omega_list.split(",") if tok.strip()]
    elif getattr(args, "omega_range", None):
        lo, hi, n = args.omega_range.split(":")
        freqs = list(np.linspace(float(lo), float(hi), int(n)))
    else:
        freqs = []
    return [2.0 * np.pi * f / 1000.0 for f in freqs]


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, GridError, ModelError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, FieldError, AnalysisError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (FormatError, ManifestError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


def _dispatch(args):
    from . import experiment

    if args.command == "groundstate":
        cfg = load_config(args.config, args.preset, seed=args.seed, full_3d=args.full_3d)
        _, info = experiment.run_groundstate(cfg, args.out)
        print(json.dumps(info, indent=1, default=str))
        return 0

    if args.command == "evolve":
        cfg = load_config(args.config, args.preset, seed=args.seed, full_3d=args.full_3d)
        summary = experiment.run_evolve(cfg, args.out)
        print(json.dumps(summary, indent=1, default=str))
        return 0

    if args.command == "analyze":
        summary = experiment.run_analyze(args.run)
        print(json.dumps(summary, indent=1, default=str))
        return 0

    if args.command == "sweep":
        cfg = load_config(args.config, args.preset, seed=args.seed, full_3d=args.full_3d)
        omegas = _omegas_radms(args)
        table = experiment.run_sweep(cfg, omegas, args.out, workers=args.workers)
        print(f"wrote {args.out}/resonance.tsv ({len(table)} rows)")
        return 0

    if args.command == "dispersion":
        cfg = load_config(args.config, args.preset, seed=args.seed, full_3d=args.full_3d)
        omegas = _omegas_radms(args)
        meta, branches, resonances = experiment.dispersion_table(
            cfg, omegas, channel=args.channel, run_dir=args.run)
        print(f"# n_bar = {meta['n_bar']:.6g} ({meta['n_bar_source']}); "
              f"c_d = {meta['c_d']:.6g} um/ms, c_s = {meta['c_s']:.6g} um/ms, "
              f"xi_d = {meta['xi_d']:.6g} um, xi_s = {meta['xi_s']:.6g} um")
        print("k_per_um\tomega_d_radms\tomega_s_radms")
        for row in branches:
            print("\t".join(format(v, ".9g") for v in row))
        if resonances:
            print()
            print("omega_m_radms\tomega_m_hz\tchannel\tk_res_per_um\twavelength_um")
            for row in resonances:
                print("\t".join(format(v, ".9g") if isinstance(v, float) else str(v)
                                for v in row))
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
