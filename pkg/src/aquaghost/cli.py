"""Command-line entry points.

    aquaghost run --spec spec.json [--out DIR] [--seed U64] [--noiseless]
    aquaghost metrics --truth a.pgm --recon b.pgm
    aquaghost gen-patterns --kind bernoulli01 --m 1920 --r 80 --seed 7 --out p.bin

Exit codes: 0 success, 1 any cell error, 2 spec error.
"""

import argparse
import sys

from . import dmd, harness, quality, scene
from .errors import AquaGhostError


def _cmd_run(args):
    try:
        overrides = {"out_dir": args.out, "master_seed": args.seed,
                     "noiseless": True if args.noiseless else None}
        spec = harness.spec_from_json(args.spec, overrides)
    except (ValueError, TypeError, OSError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    report = harness.run_experiment(spec)
    print(f"{len(report.results)} cells ok, {len(report.errors)} failed "
          f"-> {report.out_dir}")
    if report.summary is not None:
        s = report.summary
        print(f"quantum PSNR win rate {s.psnr_win_rate:.3f}, "
              f"mean delta {s.mean_psnr_delta:+.3f} dB over {len(s.pairs)} pairs")
    return 0 if report.ok else 1


def _cmd_metrics(args):
    truth = scene.load_pgm(args.truth)
    recon = scene.load_pgm(args.recon)
    print(f"mse={quality.mse(truth.pixels, recon.pixels):.9g}")
    print(f"psnr={quality.psnr(truth.pixels, recon.pixels):.9g}")
    if min(truth.pixels.shape) >= quality.SSIM_WINDOW:
        print(f"ssim={quality.ssim(truth.pixels, recon.pixels):.9g}")
    else:
        print("ssim=nan")
    return 0


def _cmd_gen_patterns(args):
    patterns = dmd.generate_patterns(args.kind, args.m, args.r, args.seed)
    dmd.dump_patterns(patterns, args.out)
    print(f"wrote {args.m}x{args.r * args.r} {args.kind} patterns to {args.out}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="aquaghost")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment sweep")
    p_run.add_argument("--spec", required=True, help="JSON experiment spec")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None, help="master seed override")
    p_run.add_argument("--noiseless", action="store_true",
                       help="replace Poisson draws with exact expectations")
    p_run.set_defaults(func=_cmd_run)

    p_met = sub.add_parser("metrics", help="compare two PGM images")
    p_met.add_argument("--truth", required=True)
    p_met.add_argument("--recon", required=True)
    p_met.set_defaults(func=_cmd_metrics)

    p_gen = sub.add_parser("gen-patterns", help="dump a DMD pattern set")
    p_gen.add_argument("--kind", default="bernoulli01", choices=dmd.KINDS)
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--r", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen_patterns)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AquaGhostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
