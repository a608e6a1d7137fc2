"""
Command-line front end.

Subcommands: ``synth``, ``spectra``, ``bsa``, ``jitter`` and ``validate``.
Exit codes: 0 success, 1 usage or input error, 2 quality threshold missed.

Usage (typical):

    python -m app.cli synth --encoding adjacent --seed 0 --out solutions/adjacent
    python -m app.cli spectra solutions/adjacent/solution.json --all --out spectra.csv
    python -m app.cli bsa solutions/adjacent/solution.json --state psi- --counts 20000 --out bsa
    python -m app.cli jitter --spacing-ghz 10 --phase-rad 3.141592653589793
    python -m app.cli validate solutions/adjacent/solution.json
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import pandas as pd
from pydantic import ValidationError

from app.config import COMPUTATIONAL_BINS, DEFAULT_MIN_FIDELITY
from app.exceptions import ConfigError, NotDiscriminableError, QfpError
from app.schemas import BellKind, Encoding, ProblemSpec, PsoParams, QfpConfig, RunManifest
from app.services import export_engine, metrics_engine, qfp_engine, synthesis_engine, two_photon_engine
from app.services.validation_engine import validate_solution

logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_QUALITY = 2

NOT_DISCRIMINABLE = (
    "{state} is not discriminable: linear-optical analyzers identify at most "
    "two Bell states; coincidence pattern written without an accuracy report"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with status 2
        raise UsageError(message)


def _init_logging(quiet: bool, verbose: bool) -> None:
    level = logging.WARNING if quiet else logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _parse_harmonics(text: str) -> tuple[int, ...]:
    text = text.strip().lower()
    if text in ("", "none"):
        return ()
    try:
        return tuple(sorted({int(part) for part in text.split(",")}))
    except ValueError:
        raise UsageError(f"--harmonics expects a comma-separated list of integers, got '{text}'") from None


def _arguments(args: argparse.Namespace) -> dict[str, Any]:
    return {key: value for key, value in sorted(vars(args).items()) if key != "handler"}


def _regrid(config: QfpConfig, guard: int | None) -> QfpConfig:
    if guard is None:
        return config
    return config.model_copy(update={"grid": config.grid.regrown(guard)})


# -- synth ------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    spec = export_engine.load_problem(args.problem) if args.problem else ProblemSpec()
    params = export_engine.load_pso(args.pso) if args.pso else PsoParams()

    updates: dict = {}
    if args.encoding:
        updates["encoding"] = Encoding(args.encoding)
    if args.window_guard is not None:
        updates["grid"] = spec.grid.regrown(args.window_guard)
    spec = spec.model_copy(update=updates)

    overrides = {
        key: value
        for key, value in (
            ("rng_seed", args.seed),
            ("swarm_size", args.swarm_size),
            ("iterations", args.iterations),
            ("restarts", args.restarts),
        )
        if value is not None
    }
    try:
        params = PsoParams.model_validate({**params.model_dump(), **overrides})
    except ValidationError as exc:
        raise ConfigError.from_validation("PSO parameters", exc) from None

    problem = synthesis_engine.SynthesisProblem.from_spec(spec)
    out_dir = Path(args.out or f"solutions/{spec.encoding.value}")

    start = time.perf_counter()
    if args.harmonics is not None:
        result = synthesis_engine.constrained_synthesize(problem, params, _parse_harmonics(args.harmonics))
    else:
        result = synthesis_engine.synthesize(problem, params)
    wall_time = time.perf_counter() - start

    export_engine.write_json(out_dir / "solution.json", result.to_document())
    export_engine.write_csv(export_engine.trace_frame(result.trace), out_dir / "trace.csv")
    export_engine.write_json(out_dir / "report.json", synthesis_engine.solution_report(result))
    export_engine.export_transform(qfp_engine.compose_qfp(result.best_config), out_dir)
    export_engine.write_manifest(
        out_dir,
        "synth",
        inputs=[p for p in (args.problem, args.pso) if p],
        seed=params.rng_seed,
        wall_time_s=wall_time,
        arguments=_arguments(args),
    )
    logger.info("wrote solution artifacts to %s", out_dir)

    m = result.metrics
    print(f"fidelity      {m.fidelity:.9f}")
    print(f"success_prob  {m.success_prob:.6f}")
    print(f"cost          {m.cost:.6f}")
    if m.fidelity < args.min_fidelity:
        print(f"fidelity below threshold {args.min_fidelity}", file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


# -- spectra ----------------------------------------------------------------------

def cmd_spectra(args: argparse.Namespace) -> int:
    config = _regrid(export_engine.load_config(args.solution), args.window_guard)
    w = qfp_engine.compose_qfp(config)

    if args.all:
        inputs = list(COMPUTATIONAL_BINS)
    elif args.input_bin is not None:
        inputs = [args.input_bin]
    else:
        raise UsageError("give --input-bin N or --all")

    frames = [
        export_engine.spectrum_frame(w, qfp_engine.classical_spectrum(w, b), b)
        for b in inputs
    ]
    frame = pd.concat(frames, ignore_index=True)
    if args.out:
        export_engine.write_csv(frame, args.out)
        logger.info("wrote %d spectra to %s", len(inputs), args.out)
    else:
        print(frame.to_csv(index=False, float_format=export_engine.CSV_FLOAT_FORMAT, lineterminator="\n"), end="")
    return EXIT_OK


# -- bsa ------------------------------------------------------------------------

def cmd_bsa(args: argparse.Namespace) -> int:
    config = _regrid(export_engine.load_config(args.solution), args.window_guard)
    kind = BellKind.parse(args.state)
    w = qfp_engine.compose_qfp(config)
    target = metrics_engine.target_unitary(config.encoding)
    state = two_photon_engine.bell_state(kind, target)
    pattern = two_photon_engine.coincidence_pattern(w, state)

    out_dir = Path(args.out or "bsa")
    export_engine.write_json(out_dir / "pattern.json", pattern)
    export_engine.write_csv(export_engine.pattern_frame(pattern, w.assignment), out_dir / "pattern.csv")

    seed = args.seed if args.seed is not None else 0
    measured = pattern
    if args.counts is not None:
        if args.counts <= 0:
            raise UsageError("--counts must be positive")
        counts = two_photon_engine.poisson_sample_counts(pattern, args.counts, seed)
        export_engine.write_json(out_dir / "counts.json", counts)
        export_engine.write_csv(export_engine.counts_frame(counts), out_dir / "counts.csv")
        measured = counts

    try:
        report = two_photon_engine.discrimination_accuracy(measured, kind)
    except NotDiscriminableError:
        print(NOT_DISCRIMINABLE.format(state=kind.value))
    else:
        export_engine.write_json(out_dir / "accuracy.json", report)
        print(f"accuracy  {report.accuracy:.6f} ± {report.std_error:.6f}")

    export_engine.write_manifest(
        out_dir,
        "bsa",
        inputs=[args.solution],
        seed=seed if args.counts is not None else None,
        arguments=_arguments(args),
    )
    for label, p in pattern.probs.items():
        print(f"{label}  {p:.6e}")
    return EXIT_OK


# -- jitter ------------------------------------------------------------------------

def cmd_jitter(args: argparse.Namespace) -> int:
    if (args.jitter_ps is None) == (args.phase_rad is None):
        raise UsageError("give exactly one of --jitter-ps or --phase-rad")
    if args.spacing_ghz <= 0:
        raise UsageError("--spacing-ghz must be positive")
    if args.jitter_ps is not None:
        rows = metrics_engine.jitter_table([args.spacing_ghz], args.jitter_ps)
    else:
        delta_omega = 2.0 * math.pi * args.spacing_ghz * 1e9
        rows = [{
            "spacing_ghz": args.spacing_ghz,
            "jitter_ps": metrics_engine.required_jitter(delta_omega, args.phase_rad) * 1e12,
            "phase_rad": args.phase_rad,
        }]
    print(f"{'spacing_ghz':>12} {'jitter_ps':>12} {'phase_rad':>12}")
    for row in rows:
        print(f"{row['spacing_ghz']:>12.4f} {row['jitter_ps']:>12.4f} {row['phase_rad']:>12.4f}")
    return EXIT_OK


# -- validate ----------------------------------------------------------------------

def cmd_validate(args: argparse.Namespace) -> int:
    doc = export_engine.load_solution(args.solution)
    if args.window_guard is not None:
        doc = doc.model_copy(update={"config": _regrid(doc.config, args.window_guard)})
    report = validate_solution(doc)

    for check in report.checks:
        mark = "PASS" if check.passed else "FAIL"
        print(f"[{mark}] {check.name}: {check.detail}".rstrip(": "))
    if report.quality:
        print(f"quality: {report.quality}")
    if args.out:
        out_dir = Path(args.out)
        export_engine.write_json(out_dir / "validation.json", report)
        export_engine.write_manifest(out_dir, "validate", inputs=[args.solution], arguments=_arguments(args))

    if not report.passed:
        print("failed checks: " + ", ".join(c.name for c in report.failed), file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


# -- Parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="Output directory (spectra: CSV file)")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--window-guard", type=int, help="Guard bins on each side of the computational block")
    common.add_argument("--quiet", action="store_true", help="Only log warnings")
    common.add_argument("--verbose", action="store_true", help="Log debug messages")

    parser = _Parser(prog="qfp-bsa", description="Frequency-bin Bell state analyzer design and simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", parents=[common], help="Synthesize QFP settings by particle swarm")
    synth.add_argument("problem", nargs="?", help="Problem JSON")
    synth.add_argument("pso", nargs="?", help="PSO parameters JSON")
    synth.add_argument("--encoding", choices=[e.value for e in Encoding])
    synth.add_argument("--harmonics", help="Restrict EOM tones, e.g. '2' or '1,2' ('none' for shaper only)")
    synth.add_argument("--min-fidelity", type=float, default=DEFAULT_MIN_FIDELITY)
    synth.add_argument("--swarm-size", type=int)
    synth.add_argument("--iterations", type=int)
    synth.add_argument("--restarts", type=int)
    synth.set_defaults(handler=cmd_synth)

    spectra = sub.add_parser("spectra", parents=[common], help="Classical output spectra")
    spectra.add_argument("solution", help="Solution or QFP config JSON")
    spectra.add_argument("--input-bin", type=int)
    spectra.add_argument("--all", action="store_true", help="All four computational inputs")
    spectra.set_defaults(handler=cmd_spectra)

    bsa = sub.add_parser("bsa", parents=[common], help="Bell state coincidence patterns")
    bsa.add_argument("solution", help="Solution or QFP config JSON")
    bsa.add_argument("--state", default="psi+", help="psi+, psi-, phi+ or phi- (Ψ/Φ accepted)")
    bsa.add_argument("--counts", type=float, help="Mean number of pairs for Poisson sampling")
    bsa.set_defaults(handler=cmd_bsa)

    jitter = sub.add_parser("jitter", parents=[common], help="Detector jitter phase bound")
    jitter.add_argument("--spacing-ghz", type=float, required=True)
    jitter.add_argument("--jitter-ps", type=float, nargs="+", help="One or more detector jitters")
    jitter.add_argument("--phase-rad", type=float)
    jitter.set_defaults(handler=cmd_jitter)

    validate = sub.add_parser("validate", parents=[common], help="Re-check a stored solution")
    validate.add_argument("solution", help="Solution JSON")
    validate.set_defaults(handler=cmd_validate)

    return parser


_POSITIONALS: dict[str, tuple[str, ...]] = {
    "synth": ("problem", "pso"),
    "spectra": ("solution",),
    "bsa": ("solution",),
    "validate": ("solution",),
}


def argv_from_manifest(manifest: RunManifest, out: str | Path | None = None) -> list[str]:
    """Command line repeating the run recorded in *manifest*, optionally into *out*."""
    arguments = dict(manifest.arguments)
    if out is not None:
        arguments["out"] = str(out)
    positionals = _POSITIONALS.get(manifest.command, ())
    argv = [manifest.command]
    argv += [str(arguments[name]) for name in positionals if arguments.get(name) is not None]
    for name, value in sorted(arguments.items()):
        if name == "command" or name in positionals or value is None or value is False:
            continue
        flag = "--" + name.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, *(str(item) for item in value)]
        else:
            argv += [flag, str(value)]
    return argv


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    _init_logging(args.quiet, args.verbose)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except (QfpError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
