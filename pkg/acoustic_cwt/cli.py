"""Command-line interface for the acoustic CWT toolkit."""

import argparse
import logging
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import signals_io
from .calibration import CausalityChecker, StreamObjective, optimize, pearson
from .config_loader import (
    get_calibration_config,
    get_denoise_config,
    get_noise_config,
    get_reassignment_config,
    get_runtime_config,
    get_synthesis_config,
    get_tonotopic_config,
    get_wavelet_config,
    get_window_config,
    load_config,
)
from .cwt_engine import MaskOptions, StreamMode, WaveletTransformer, WindowSettings
from .denoise import DenoiseMethod, connectivity_cut, connectivity_map, denoise_pipeline
from .errors import AcousticCWTError, SignalInputError
from .oscillatory_synthesis import QuadratureSettings, causality_score, synthesize
from .reassignment import derivative_field, reassign
from .wavelet_model import PhaseVariant, TonotopicMap, WaveletKind, WaveletParams, phase_curve

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Everything a subcommand needs, resolved once from config, files and flags."""

    config: dict
    params: WaveletParams
    variant: PhaseVariant
    tonotopic_map: TonotopicMap
    settings: WindowSettings
    quadrature: QuadratureSettings
    options: MaskOptions
    threads: int
    cache_dir: str
    use_cache: bool
    seed: Optional[int]

    def transformer(self) -> WaveletTransformer:
        return WaveletTransformer.create(self.params, self.settings, self.tonotopic_map, self.variant,
                                         self.quadrature, self.threads, self.cache_dir, self.use_cache)


# Command-line flag (argparse dest) for each window setting
_WINDOW_FLAGS = {
    "n_m": "n_m",
    "overlap": "overlap",
    "scale_segments": "scale_segments",
    "tau_step_samples": "tau_step",
    "tau_span_windows": "tau_span",
    "rate_hz": "window_rate",
}


def _window_overrides(args: argparse.Namespace) -> dict:
    return {key: getattr(args, dest) for key, dest in _WINDOW_FLAGS.items()
            if getattr(args, dest, None) is not None}


def build_context(args: argparse.Namespace) -> RunContext:
    config = load_config(args.config)
    wavelet_section = get_wavelet_config(config)
    if args.params:
        params = WaveletParams.from_config_file(args.params)
    else:
        params = WaveletParams.from_config(wavelet_section)

    window_section = get_window_config(config)
    if args.settings:
        from .config import read_window_file

        window_section.update(read_window_file(args.settings))
    settings = WindowSettings.from_config(window_section, args.preset)
    overrides = _window_overrides(args)
    if overrides:
        settings = WindowSettings.from_config({**settings.to_dict(), **overrides})
        logger.info(f"Window settings overridden from the command line: {overrides}")

    reassignment = get_reassignment_config(config)
    runtime = get_runtime_config(config)
    options = MaskOptions(
        importance_threshold=float(reassignment["importance_threshold"]),
        min_neighbours=int(get_denoise_config(config)["min_neighbours"]),
        derivative_floor=float(reassignment["derivative_floor"]),
    )
    return RunContext(
        config=config,
        params=params,
        variant=PhaseVariant(wavelet_section.get("phase_variant", PhaseVariant.KINK_FREE.value)),
        tonotopic_map=TonotopicMap.from_config(get_tonotopic_config(config)),
        settings=settings,
        quadrature=QuadratureSettings.from_config(get_synthesis_config(config)),
        options=options,
        threads=max(1, int(args.threads or runtime["threads"])),
        cache_dir=runtime["cache_dir"],
        use_cache=bool(runtime["use_cache"]) and not args.no_cache,
        seed=args.seed,
    )


def _read_checked(path: str, ctx: RunContext) -> signals_io.Signal:
    sig = signals_io.read_wav(path)
    if abs(sig.rate - ctx.settings.rate_hz) > 1e-9:
        raise SignalInputError(
            f"{path} is sampled at {sig.rate:g} Hz but the window settings expect {ctx.settings.rate_hz:g} Hz")
    return sig


def _window_origin(at_s: float, sig: signals_io.Signal, ctx: RunContext) -> int:
    origin = int(round(at_s * sig.rate))
    if origin < 0 or origin + ctx.settings.n_m > len(sig):
        raise SignalInputError(f"No full window starts at {at_s:g} s in a {sig.duration:g} s signal")
    return origin


def _print_report(report: dict) -> None:
    for key, value in report.items():
        if isinstance(value, float):
            print(f"   {key}: {value:.6g}")
        else:
            print(f"   {key}: {value}")


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args: argparse.Namespace, ctx: RunContext) -> int:
    rate = args.rate or ctx.settings.rate_hz
    if args.what == "harmonic":
        sig = signals_io.gen_harmonic(args.freq, args.duration, rate, args.amplitude)
    elif args.what == "corpus":
        sig = signals_io.six_a_corpus(args.duration, rate, args.amplitude)
    else:
        if not args.input:
            raise SignalInputError("gen noise needs --input")
        noise = get_noise_config(ctx.config)
        level = noise["level"] if args.level is None else args.level
        seed = ctx.seed if ctx.seed is not None else int(noise["seed"])
        sig = signals_io.add_white_noise(signals_io.read_wav(args.input), float(level), seed,
                                         args.reference or noise["reference"])
    signals_io.write_wav(args.out, sig)
    print(f"✅ Wrote {len(sig)} samples ({sig.duration:.3f} s at {sig.rate:g} Hz) to {args.out}")
    return 0


def cmd_wavelet(args: argparse.Namespace, ctx: RunContext) -> int:
    p = ctx.params
    if args.phase_curve:
        signals_io.export_phase_curve(phase_curve(p, args.y_max), args.phase_curve)
        print(f"✅ Phase curve written to {args.phase_curve} (tangent slope {p.tangent_slope:.4f})")
    if args.out:
        half = int(round(args.span * ctx.settings.rate_hz))
        times = np.arange(-half, half + 1) / ctx.settings.rate_hz + args.shift
        wavelet = synthesize(args.scale, args.shift, times, p, WaveletKind(args.kind), ctx.variant,
                             settings=ctx.quadrature)
        signals_io.export_wavelet(wavelet, args.out)
        print(f"✅ Wavelet written to {args.out}")
        print(f"   energy: {wavelet.energy():.6g}")
        print(f"   causality score: {causality_score(wavelet):.3e}")
    if not args.phase_curve and not args.out:
        print("ℹ️  Nothing to do (use --out and/or --phase-curve)")
    return 0


def cmd_transform(args: argparse.Namespace, ctx: RunContext) -> int:
    sig = _read_checked(args.input, ctx)
    transformer = ctx.transformer()
    if args.average:
        grid = transformer.average_transform(sig.samples)
        signals_io.export_grid(grid, args.out, "modulus")
        print(f"✅ Averaged modulus over {transformer.window_starts(len(sig)).size} windows written to {args.out}")
        return 0
    origin = _window_origin(args.at, sig, ctx)
    grid = transformer.forward(sig.samples[origin:origin + ctx.settings.n_m], origin)
    signals_io.export_grid(grid, args.out, args.kind)
    i, j = np.unravel_index(np.argmax(grid.modulus), grid.shape)
    print(f"✅ Transform of window at sample {origin} written to {args.out}")
    print(f"   peak |WT| at s={grid.scales[i]:.5g}, tau={grid.shifts[j]:.6g} s")
    return 0


def cmd_reconstruct(args: argparse.Namespace, ctx: RunContext) -> int:
    sig = _read_checked(args.input, ctx)
    result = ctx.transformer().process_stream(sig.samples, StreamMode.PLAIN, ctx.options, ctx.threads)
    signals_io.write_wav(args.out, signals_io.Signal(samples=result.output, rate=sig.rate))
    print(f"✅ Reconstruction written to {args.out}")
    _print_report(result.report.to_dict())
    return 0


def cmd_reassign(args: argparse.Namespace, ctx: RunContext) -> int:
    sig = _read_checked(args.input, ctx)
    transformer = ctx.transformer()
    origin = _window_origin(args.at, sig, ctx)
    grid = transformer.forward(sig.samples[origin:origin + ctx.settings.n_m], origin)
    rmap = reassign(grid, derivative_field(grid, ctx.params, ctx.options.derivative_floor), ctx.params)
    signals_io.export_grid(rmap, args.out, args.kind)
    print(f"✅ Reassigned map written to {args.out}")
    print(f"   discarded fraction: {rmap.discarded_fraction:.4f} {rmap.discards}")
    if args.connectivity_out:
        bins = rmap.bin_importance(ctx.options.importance_threshold)
        cmap = connectivity_map(bins, grid.scales, grid.shifts)
        signals_io.export_grid(cmap, args.connectivity_out, "counts")
        kept = int(connectivity_cut(bins, ctx.options.min_neighbours).sum())
        print(f"✅ Connectivity map written to {args.connectivity_out} ({kept} bins survive the cut)")
    return 0


def _export_window_connectivity(sig: signals_io.Signal, ctx: RunContext, transformer: WaveletTransformer,
                                options: MaskOptions, at_s: float, path: str) -> None:
    origin = _window_origin(at_s, sig, ctx)
    grid = transformer.forward(sig.samples[origin:origin + ctx.settings.n_m], origin)
    rmap = reassign(grid, derivative_field(grid, ctx.params, options.derivative_floor), ctx.params)
    bins = rmap.bin_importance(options.importance_threshold)
    signals_io.export_grid(connectivity_map(bins, grid.scales, grid.shifts), path, "counts")
    kept = int(connectivity_cut(bins, options.min_neighbours).sum())
    print(f"✅ Connectivity map of the window at sample {origin} written to {path} ({kept} bins survive the cut)")


def cmd_denoise(args: argparse.Namespace, ctx: RunContext) -> int:
    sig = _read_checked(args.input, ctx)
    clean = _read_checked(args.clean_ref, ctx).samples if args.clean_ref else None
    if args.connectivity_out and DenoiseMethod(args.method) != DenoiseMethod.CONNECTIVITY:
        raise SignalInputError("--connectivity-out needs --method connectivity")
    options = ctx.options
    if args.min_neighbours is not None:
        options = MaskOptions(options.importance_threshold, args.min_neighbours, options.derivative_floor)
    transformer = ctx.transformer()
    result = denoise_pipeline(sig.samples, transformer, DenoiseMethod(args.method), clean, options,
                              ctx.threads)
    signals_io.write_wav(args.out, signals_io.Signal(samples=result.output, rate=sig.rate))
    print(f"✅ Denoised ({result.method.value}) output written to {args.out}")
    if args.connectivity_out:
        _export_window_connectivity(sig, ctx, transformer, options, args.at, args.connectivity_out)
    _print_report(result.to_dict())
    return 0


def cmd_calibrate(args: argparse.Namespace, ctx: RunContext) -> int:
    if args.corpus:
        corpus = _read_checked(args.corpus, ctx)
    else:
        corpus = signals_io.six_a_corpus(args.patch_duration, ctx.settings.rate_hz)
        print(f"ℹ️  Using generated six-A corpus ({args.patch_duration:g} s patches, {len(corpus)} samples)")
    p0 = WaveletParams.from_config_file(args.init) if args.init else ctx.params
    cal = get_calibration_config(ctx.config)
    objective_fn = StreamObjective(corpus.samples, ctx.settings, ctx.tonotopic_map, ctx.threads,
                                   ctx.cache_dir, ctx.use_cache, ctx.quadrature)
    checker = CausalityChecker(float(cal["causality_threshold"]), ctx.settings.rate_hz,
                               quadrature=ctx.quadrature)
    result = optimize(p0, objective_fn, checker,
                      step_fractions=[float(f) for f in cal["step_fractions"]],
                      parameter_order=list(cal["parameter_order"]),
                      seed=ctx.seed if ctx.seed is not None else int(cal["seed"]),
                      max_walk_steps=int(cal["max_walk_steps"]),
                      causal_retries=int(cal["causal_retries"]))
    result.params.to_config_file(args.out)
    print(f"✅ Calibrated parameters written to {args.out} (rho={result.rho:.6f})")
    for comment, _, rho in result.trace.pass_outputs:
        print(f"   {comment}: rho={rho:.6f}")
    if args.trace:
        result.trace.write(args.trace)
        print(f"✅ Trace written to {args.trace}")
    return 0


def cmd_rho(args: argparse.Namespace, ctx: RunContext) -> int:
    a = signals_io.read_wav(args.a).samples
    b = signals_io.read_wav(args.b).samples
    if args.skip < 0:
        raise SignalInputError(f"--skip must be >= 0 (got {args.skip})")
    region = slice(args.skip, None if args.skip == 0 else -args.skip)
    rho = pearson(a[region], b[region])
    print(f"rho = {rho:.9f}")
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acoustic-cwt",
                                     description="Continuous wavelet transforms with the Reimann wavelet")
    parser.add_argument("--config", default=None, help="Path to a JSON config file")
    parser.add_argument("--params", default=None, help="KEY=VALUE wavelet parameter file")
    parser.add_argument("--settings", default=None, help="KEY=VALUE window settings file")
    parser.add_argument("--preset", default=None, help="Window preset (standard, fast, wide)")
    parser.add_argument("--seed", type=int, default=None, help="Random seed for noise and calibration")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--no-cache", action="store_true", help="Do not read or write wavelet bank caches")
    window = parser.add_argument_group("window settings", "Override the preset and config window section")
    window.add_argument("--n-m", dest="n_m", type=int, default=None, help="Window length in samples")
    window.add_argument("--overlap", type=float, default=None, help="Fractional window overlap d")
    window.add_argument("--scale-segments", default=None, help="Scale grid segments (or semitone, half-semitone)")
    window.add_argument("--tau-step", type=int, default=None, help="Shift step in samples")
    window.add_argument("--tau-span", type=int, default=None, help="Shift span in window lengths")
    window.add_argument("--rate", dest="window_rate", type=float, default=None, help="Sample rate in Hz")
    window.add_argument("--save-settings", default=None, help="Write the resolved window settings to a KEY=VALUE file")
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate test signals")
    gen.add_argument("what", choices=["harmonic", "corpus", "noise"])
    gen.add_argument("--freq", type=float, default=440.0)
    gen.add_argument("--duration", type=float, default=5.0)
    gen.add_argument("--rate", type=float, default=None)
    gen.add_argument("--amplitude", type=float, default=1.0)
    gen.add_argument("--input", default=None, help="Signal to add noise to")
    gen.add_argument("--level", type=float, default=None)
    gen.add_argument("--reference", choices=["peak", "rms"], default=None)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    wav = sub.add_parser("wavelet", help="Export a sampled wavelet or the phase curve")
    wav.add_argument("--scale", type=float, default=1.0)
    wav.add_argument("--shift", type=float, default=0.0)
    wav.add_argument("--span", type=float, default=0.02, help="Half-width of the time grid in seconds")
    wav.add_argument("--kind", choices=[k.value for k in WaveletKind], default=WaveletKind.REAL_WAVELET.value)
    wav.add_argument("--out", default=None)
    wav.add_argument("--phase-curve", default=None)
    wav.add_argument("--y-max", type=float, default=1.0)
    wav.set_defaults(func=cmd_wavelet)

    tr = sub.add_parser("transform", help="Forward transform of one window or the window average")
    tr.add_argument("input")
    tr.add_argument("--at", type=float, default=0.0, help="Window start in seconds")
    tr.add_argument("--average", action="store_true")
    tr.add_argument("--kind", choices=["complex", "modulus"], default="complex")
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_transform)

    rec = sub.add_parser("reconstruct", help="Windowed forward + inverse transform")
    rec.add_argument("input")
    rec.add_argument("--out", required=True)
    rec.set_defaults(func=cmd_reconstruct)

    ra = sub.add_parser("reassign", help="Reassigned map (and connectivity) of one window")
    ra.add_argument("input")
    ra.add_argument("--at", type=float, default=0.0)
    ra.add_argument("--kind", choices=["complex", "modulus"], default="modulus")
    ra.add_argument("--out", required=True)
    ra.add_argument("--connectivity-out", default=None)
    ra.set_defaults(func=cmd_reassign)

    dn = sub.add_parser("denoise", help="Masked reconstruction")
    dn.add_argument("input")
    dn.add_argument("--method", choices=[m.value for m in DenoiseMethod], default=DenoiseMethod.CONNECTIVITY.value)
    dn.add_argument("--min-neighbours", type=int, default=None)
    dn.add_argument("--clean-ref", default=None)
    dn.add_argument("--connectivity-out", default=None, help="Neighbour counts of one window (connectivity method)")
    dn.add_argument("--at", type=float, default=0.0, help="Start of the window for --connectivity-out, in seconds")
    dn.add_argument("--out", required=True)
    dn.set_defaults(func=cmd_denoise)

    cal = sub.add_parser("calibrate", help="Coordinate search for the wavelet parameters")
    cal.add_argument("--corpus", default=None, help="Corpus WAV (default: generated six-A corpus)")
    cal.add_argument("--patch-duration", type=float, default=5.0)
    cal.add_argument("--init", default=None, help="Starting parameter file")
    cal.add_argument("--out", required=True, help="Output parameter file")
    cal.add_argument("--trace", default=None, help="CSV trace of the search")
    cal.set_defaults(func=cmd_calibrate)

    rho = sub.add_parser("rho", help="Pearson correlation of two WAV files")
    rho.add_argument("a")
    rho.add_argument("b")
    rho.add_argument("--skip", type=int, default=0, help="Samples ignored at each end")
    rho.set_defaults(func=cmd_rho)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        ctx = build_context(args)
        if args.save_settings:
            from .config import write_window_file

            write_window_file(args.save_settings, ctx.settings.to_dict(), args.preset)
            logger.info(f"Window settings written to {args.save_settings}")
        return args.func(args, ctx)
    except AcousticCWTError as e:
        print(f"error[{e.category}]: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"error[internal]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
