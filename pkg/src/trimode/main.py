import argparse
import logging

from pydantic import ValidationError

from trimode.errors import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_TRUNCATION,
    EXIT_VALIDATION,
    ConfigError,
    TrimodeError,
    TruncationError,
)
from trimode.scenario import preset, presets, run_scenario, validate
from trimode.tools.config import build_scenario, load_config, parse_value
from trimode.tools.csv_io import write_gnuplot_script
from trimode.util import logger


# CLI flag dest -> scenario key
FLAG_KEYS = {
    "preset": "preset",
    "omega": "omega",
    "lam": "lambda",
    "g": "g",
    "gamma": "gamma",
    "alpha": "alpha",
    "t_max": "t_max",
    "steps": "steps",
    "engines": "engines",
    "dims": "dims",
    "tol": "tol",
    "leakage": "leakage",
    "lindblad_step": "lindblad_step",
    "dissipator": "dissipator",
    "out": "out",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Intrinsic-decoherence dynamics of three coupled oscillators.")
    parser.add_argument("command", nargs="?", default="run", choices=["run", "validate", "presets"], help="What to do.")
    parser.add_argument("--config", help="Path to a key = value scenario file.")
    parser.add_argument("--preset", help="Named scenario (fig1a..fig2c).")
    parser.add_argument("--omega", help="Oscillator frequency.")
    parser.add_argument("--lambda", dest="lam", help="Coupling between oscillators 1 and 2.")
    parser.add_argument("--g", help="Coupling of oscillator 3 to oscillators 1 and 2.")
    parser.add_argument("--gamma", help="Intrinsic decoherence rate.")
    parser.add_argument("--alpha", help="Initial coherent amplitude of oscillator 1 (complex allowed).")
    parser.add_argument("--t-max", dest="t_max", help="End of the time grid.")
    parser.add_argument("--steps", help="Number of grid points.")
    parser.add_argument("--engines", help="Comma-separated subset of analytic,coherent,fock,lindblad.")
    parser.add_argument("--dims", help="Fock cutoff per mode, e.g. 12 or 12,12,12.")
    parser.add_argument("--tol", help="Poisson series tolerance.")
    parser.add_argument("--leakage", help="Coherent-state leakage budget.")
    parser.add_argument("--lindblad-step", dest="lindblad_step", help="RK4 step for the Lindblad engine.")
    parser.add_argument("--dissipator", help="Lindblad double-commutator coefficient: printed or taylor.")
    parser.add_argument("--out", help="CSV output path.")
    parser.add_argument("--gnuplot", action="store_true", help="Also write a gnuplot script next to the CSV.")
    parser.add_argument("--fault-injection", action="store_true", help="Corrupt Omega in the analytic engine (validate only).")
    parser.add_argument("--log-level", default=None, help="Logging level override.")
    return parser


def collect_overrides(args: argparse.Namespace) -> dict:
    overrides = load_config(args.config) if args.config else {}
    for dest, key in FLAG_KEYS.items():
        raw = getattr(args, dest)
        if raw is not None:
            overrides[key] = parse_value(key, raw)
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        logger.setLevel(getattr(logging, args.log_level.upper(), logging.INFO))

    if args.command == "presets":
        for config in presets():
            p = config.params
            print(f"{config.name}: omega={p.omega} lambda={p.lam} g={p.g} gamma={p.gamma} alpha={p.alpha} t_max={config.t_max} steps={config.steps}")
        return EXIT_OK

    try:
        overrides = collect_overrides(args)
        base = preset(overrides["preset"]) if "preset" in overrides else None
        config = build_scenario(overrides, base)

        if args.command == "validate":
            report = validate(config, fault_injection=args.fault_injection)
            print(report.render())
            return EXIT_OK if report.passed else EXIT_VALIDATION

        result = run_scenario(config)
        for check in result.deviations:
            print(f"{check.name}: max deviation {check.measured:.3e} at t={check.at_time:.6g}")
        if result.csv_path is not None:
            print(f"CSV written to {result.csv_path}")
            if args.gnuplot:
                script = write_gnuplot_script(result.csv_path, [s.engine for s in result.series], title=config.name)
                print(f"gnuplot script written to {script}")
        return EXIT_OK

    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except TruncationError as e:
        logger.error(f"Truncation budget exceeded: {e}")
        return EXIT_TRUNCATION
    except TrimodeError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    raise SystemExit(main())
