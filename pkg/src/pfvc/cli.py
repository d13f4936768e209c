"""Command-line front end.

Exit status: 0 on success, 1 on bad usage, 2 when the input data is bad
(corrupt container, truncated raw stream, dimension mismatch, ...).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import codec, intra
from .bitstream import BitstreamError, measure_bitrate
from .entropy import CorruptBitstreamError
from .media import SYNTH_KINDS, read_sequence, synth_sequence, write_sequence
from .metrics import sequence_quality
from .rate import BandwidthTrace, simulate_channel
from .report import rd_report
from .tokenizer import DEFAULT_LADDER

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ladder(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must be comma-separated integers: {text!r}")


def _add_source(p):
    p.add_argument("--input", help="raw 8-bit planar stream")
    p.add_argument("--sidecar", help="JSON sidecar with width, height, fps")
    p.add_argument("--synth", choices=SYNTH_KINDS, help="use a synthetic sequence instead of --input")
    p.add_argument("--frames", type=int, default=50, help="synthetic sequence length")
    p.add_argument("--size", type=int, default=256, help="synthetic frame width and height")
    p.add_argument("--seed", type=int, default=0, help="synthetic sequence seed")


def _add_codec(p):
    p.add_argument("--ladder", type=_ladder, default=DEFAULT_LADDER)
    p.add_argument("--step", type=float, default=codec.DEFAULT_STEP, help="residual quantizer step")
    p.add_argument("--key-budget", type=int, default=None,
                   help=f"key-frame QP preset 0-{len(intra.KEY_QPS) - 1}; lossless when omitted")


def _config(args, policy):
    # a bad ladder, step, level or preset is a usage problem, not a data problem
    try:
        return codec.EncodeConfig(args.ladder, args.step, policy, args.key_budget)
    except ValueError as exc:
        raise UsageError(str(exc))


def _source(args):
    if args.synth:
        if args.input:
            raise UsageError("--input and --synth are mutually exclusive")
        return synth_sequence(args.synth, args.frames, args.size, args.size, seed=args.seed)
    if not args.input:
        raise UsageError("need --input (with --sidecar) or --synth")
    return read_sequence(args.input, _sidecar_for(args.input, args.sidecar))


def _sidecar_for(raw, sidecar):
    return sidecar if sidecar else str(Path(raw).with_suffix(".json"))


def cmd_encode(args):
    seq = _source(args)
    if args.trace and args.gran is not None:
        raise UsageError("--gran and --trace are mutually exclusive")
    if args.trace:
        policy = BandwidthTrace.load(args.trace)
    else:
        policy = args.gran if args.gran is not None else args.ladder[-1]
    cfg = _config(args, policy)
    stats = codec.EncodeStats()
    data = codec.encode(seq, cfg, stats)
    Path(args.output).write_bytes(data)
    kbps = measure_bitrate(data, seq.fps, len(seq))
    print(f"{len(seq)} frames, {len(data)} bytes, {kbps:.3f} kbps")
    if stats.granularities:
        levels, counts = np.unique(stats.granularities, return_counts=True)
        print("granularity use: " + ", ".join(f"{g}x{c}" for g, c in zip(levels, counts)))


def cmd_decode(args):
    if not args.input:
        raise UsageError("decode needs --input")
    seq = codec.decode(Path(args.input).read_bytes())
    sidecar = _sidecar_for(args.output, args.sidecar)
    write_sequence(args.output, sidecar, seq)
    print(f"{len(seq)} frames {seq.width}x{seq.height} -> {args.output} ({sidecar})")


def cmd_simulate(args):
    if not args.trace:
        raise UsageError("simulate needs --trace")
    seq = _source(args)
    trace = BandwidthTrace.load(args.trace)
    cfg = _config(args, args.ladder[-1])
    costs = codec.layer_costs(seq, cfg)
    res = simulate_channel(costs, trace, seq.fps, args.ladder)
    lines = ["frame,budget_kbps,granularity,bits"]
    lines += [f"{t + 1},{b:g},{g},{int(bits)}"
              for t, (b, g, bits) in enumerate(zip(res.budgets_kbps, res.selections, res.bits))]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"inter-frame rate {res.achieved_kbps:.3f} kbps", file=sys.stderr)


def cmd_metrics(args):
    if not (args.input and args.reference):
        raise UsageError("metrics needs --input and --reference")
    test = read_sequence(args.input, _sidecar_for(args.input, args.sidecar))
    ref = read_sequence(args.reference, _sidecar_for(args.reference, args.reference_sidecar))
    p, s = sequence_quality(ref, test)
    print(f"psnr_db {p:.4f}\nssim {s:.6f}")


def cmd_rd_report(args):
    seq = _source(args)
    presets = None if args.key_budget is None else [args.key_budget]
    cfg = _config(args, args.ladder[-1])
    report = rd_report(seq, args.ladder, presets, cfg)
    text = report.to_csv(args.report_csv)
    if not args.report_csv:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pfvc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="code a sequence into a container")
    _add_source(p)
    _add_codec(p)
    p.add_argument("--gran", type=int, help="fixed granularity (default: finest level)")
    p.add_argument("--trace", help="bandwidth trace file for adaptive granularity")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="rebuild raw frames from a container")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="raw output stream")
    p.add_argument("--sidecar", help="sidecar to write (default: output with .json)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="replay real layer costs against a bandwidth trace")
    _add_source(p)
    _add_codec(p)
    p.add_argument("--trace")
    p.add_argument("--output", help="CSV of per-frame decisions (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="PSNR and SSIM of a decoded stream")
    p.add_argument("--input", required=True)
    p.add_argument("--sidecar")
    p.add_argument("--reference", required=True)
    p.add_argument("--reference-sidecar")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("rd-report", help="rate/quality grid over key presets and granularities")
    _add_source(p)
    _add_codec(p)
    p.add_argument("--report-csv", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_rd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pfvc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BitstreamError, CorruptBitstreamError, ValueError, OSError) as exc:
        print(f"pfvc: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
