"""Command-line interface.

Exit codes: 0 success, 1 unreadable or malformed input, 2 failed
precondition, 3 completion did not reach the residual threshold (the
result is still written). Diagnostics go to standard error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from ._jsonio import SCHEMA_VERSION, SchemaError, check_keys, check_version, decode_complex, encode_complex
from .bench import ExperimentConfig, SamplingMode, add_noise, run_phase_transition, sample_omega
from .estimation import amplitudes, incoherence, matrix_pencil, reconstruct_cardinal
from .signals import FriModel, spectrum, weighted_spectrum
from .solvers import SolverParams, complete
from .structured import LiftKind, SampleSet, StructuredLift
from .weighting import WhiteningSpec, unweight, weight_spectrum

log = logging.getLogger("frilift")

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class InputError(Exception):
    """Input could not be read or does not follow the schema."""


def _read_json(path) -> dict:
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at byte offset {exc.pos} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text at byte offset {exc.start}") from exc


def _parse(fn, *args, **kwargs):
    # anything raised while decoding a document is an input error
    try:
        return fn(*args, **kwargs)
    except InputError:
        raise
    except (SchemaError, ValueError, TypeError, KeyError) as exc:
        raise InputError(str(exc)) from exc


def _write_json(path, doc) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _default_workers() -> int:
    raw = os.environ.get("FRILIFT_WORKERS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- interpolate ------------------------------------------------------------


def _interp_config(doc):
    check_keys(
        doc,
        required={"schema_version", "lift"},
        optional={"weight", "solver", "noisy", "residual_threshold"},
        where="interpolate config",
    )
    check_version(doc, "interpolate config")
    lift_ = StructuredLift.from_dict(doc["lift"])
    weight = doc.get("weight")
    spec = WhiteningSpec.from_dict(weight) if weight is not None else None
    params = SolverParams.from_dict(doc.get("solver", {}))
    threshold = float(doc.get("residual_threshold", 1e-2))
    return lift_, spec, params, bool(doc.get("noisy", False)), threshold


def _samples_doc(doc):
    check_keys(doc, required={"schema_version", "n", "indices", "values"}, optional={"dc_forced"}, where="samples")
    check_version(doc, "samples")
    return SampleSet.from_dict(doc)


def cmd_interpolate(args) -> int:
    lift_, spec, params, noisy, threshold = _parse(_interp_config, _read_json(args.config))
    samples = _parse(_samples_doc, _read_json(args.samples))
    if args.seed is not None:
        params = params.replace(seed=args.seed)
    n = lift_.n
    if samples.n != n:
        raise ValueError(f"samples have n={samples.n} but the lift has n={n}")
    support, measured, _ = samples.distinct()
    l_hat = weight_spectrum(spec, n) if spec is not None else None
    # check nulls before spending time on the solve
    nulls = {} if l_hat is None else dict(zip(support.tolist(), measured))
    if l_hat is not None:
        unweight(np.ones(n), l_hat, nulls)
    weighted = samples if l_hat is None else samples.with_values(samples.values * l_hat[samples.indices])
    result = complete(weighted, lift_, params, noisy=noisy)
    g = result.g
    x_hat = g if l_hat is None else unweight(g, l_hat, nulls)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spectrum": encode_complex(x_hat),
        "weighted_spectrum": encode_complex(g),
        "metadata": {
            "iterations": result.iterations,
            "residual": result.final_residual,
            "converged": result.converged,
            "factor_rank": result.factor_rank,
            "lift": lift_.to_dict(),
            "weight": spec.to_dict() if spec is not None else None,
            "solver": params.to_dict(),
        },
    }
    _write_json(args.out, doc)
    if not result.final_residual <= threshold:
        log.error("residual %.3g above threshold %.3g after %d iterations", result.final_residual, threshold, result.iterations)
        return EXIT_NOT_CONVERGED
    log.info("completed in %d iterations, residual %.3g", result.iterations, result.final_residual)
    return EXIT_OK


# -- generate ---------------------------------------------------------------


def _generate_config(doc):
    check_keys(
        doc,
        required={"schema_version", "model", "n", "m"},
        optional={"sampling_mode", "seed", "snr_db"},
        where="generate config",
    )
    check_version(doc, "generate config")
    model = FriModel.from_dict(doc["model"])
    mode = SamplingMode(doc.get("sampling_mode", SamplingMode.WITHOUT_REPLACEMENT_FORCE_DC.value))
    snr = doc.get("snr_db")
    return model, int(doc["n"]), int(doc["m"]), mode, int(doc.get("seed", 0)), None if snr is None else float(snr)


def cmd_generate(args) -> int:
    model, n, m, mode, seed, snr = _parse(_generate_config, _read_json(args.config))
    if args.seed is not None:
        seed = args.seed
    rng = np.random.default_rng(seed)
    x_hat = spectrum(model, n)
    omega = sample_omega(n, m, mode, rng)
    values = x_hat[omega] if snr is None else add_noise(x_hat[omega], snr, rng)
    samples = SampleSet(n, omega, values, dc_forced=bool(0 in omega))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "samples.json", {"schema_version": SCHEMA_VERSION, **samples.to_dict()})
    _write_json(
        out / "truth.json",
        {
            "schema_version": SCHEMA_VERSION,
            "spectrum": encode_complex(x_hat),
            "weighted_spectrum": encode_complex(weighted_spectrum(model, n)),
            "model": model.to_dict(),
        },
    )
    log.info("wrote %d samples of n=%d to %s", m, n, out)
    return EXIT_OK


# -- recover ----------------------------------------------------------------


def _spectrum_doc(doc):
    check_keys(doc, required={"schema_version", "spectrum"}, optional={"weighted_spectrum", "metadata", "model"}, where="spectrum")
    check_version(doc, "spectrum")
    x_hat = decode_complex(doc["spectrum"])
    g = decode_complex(doc["weighted_spectrum"]) if "weighted_spectrum" in doc else x_hat
    return x_hat, g


def cmd_recover(args) -> int:
    x_hat, g = _parse(_spectrum_doc, _read_json(args.spectrum))
    n = x_hat.size
    doc = {"schema_version": SCHEMA_VERSION, "kind": args.kind}
    if args.kind == "cardinal":
        spec = WhiteningSpec.difference(args.order)
        x_d, c = reconstruct_cardinal(g, spec, n, {0: x_hat[0]})
        doc["samples"] = encode_complex(x_d)
        doc["coefficients"] = encode_complex(c)
    else:
        if args.rank is None:
            raise ValueError("--rank is required for pole recovery")
        d = args.d if args.d is not None else n // 2 + 1
        lift_ = StructuredLift(LiftKind(args.lift), n, d)
        est = matrix_pencil(g, lift_, args.rank, args.cluster_radius, args.project)
        amps = amplitudes(est, g, basis=args.basis)
        doc["poles"] = est.to_dict()
        doc["amplitudes"] = [encode_complex(a) for a in amps]
    _write_json(args.out, doc)
    return EXIT_OK


# -- phase transition -------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _experiment_doc(doc):
    check_version(doc, "experiment")
    return ExperimentConfig.from_dict(doc)


def cmd_phase_transition(args) -> int:
    config = _parse(_experiment_doc, _read_json(args.config))
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    workers = args.workers if args.workers is not None else _default_workers()
    total = len(config.s_range) * len(config.m_range) * config.trials
    done = [0]

    def progress(rec):
        done[0] += 1
        log.debug("trial %d/%d s=%d m=%d nmse=%.3g", done[0], total, rec.s, rec.m, rec.nmse)

    res = run_phase_transition(config, workers=workers, progress=progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid_rows = [[s, *(_fmt(v) for v in row)] for s, row in zip(res.s_values, res.grid)]
    (out / "grid.csv").write_text(_csv_text(["s", *(f"m={m}" for m in res.m_values)], grid_rows))
    trial_rows = [
        [r.config_digest, r.trial_seed, r.s, r.m, r.trial, _fmt(r.nmse), int(r.success), r.iterations, _fmt(r.location_error), r.error]
        for r in res.records
    ]
    header = ["config_digest", "trial_seed", "s", "m", "trial", "nmse", "success", "iterations", "location_error", "error"]
    (out / "trials.csv").write_text(_csv_text(header, trial_rows))
    timing_rows = [[r.s, r.m, r.trial, f"{r.elapsed_ms:.3f}"] for r in res.records]
    (out / "timings.csv").write_text(_csv_text(["s", "m", "trial", "elapsed_ms"], timing_rows))
    successes = sum(r.success for r in res.records)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config_digest": config.digest(),
        "config": config.to_dict(),
        "total_trials": len(res.records),
        "successes": int(successes),
        "errored_trials": sum(bool(r.error) for r in res.records),
        "s_values": list(res.s_values),
        "m_values": list(res.m_values),
        "success_ratio": res.grid.tolist(),
    }
    _write_json(out / "summary.json", summary)
    log.info("%d/%d trials succeeded; results in %s", successes, len(res.records), out)
    return EXIT_OK


# -- coherence --------------------------------------------------------------


def _coherence_doc(doc):
    check_keys(doc, required={"schema_version", "model", "lift"}, optional={"rank"}, where="coherence config")
    check_version(doc, "coherence config")
    model = FriModel.from_dict(doc["model"])
    lift_ = StructuredLift.from_dict(doc["lift"])
    rank = doc.get("rank")
    return model, lift_, None if rank is None else int(rank)


def cmd_coherence(args) -> int:
    model, lift_, rank = _parse(_coherence_doc, _read_json(args.config))
    z = weighted_spectrum(model, lift_.n)
    if rank is None:
        rank = model.total_order
    report = incoherence(z, lift_, rank, model)
    doc = {"schema_version": SCHEMA_VERSION, "rank": rank, **report.to_dict()}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _write_json(args.out, doc)
    sys.stdout.write(text)
    return EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="only report errors")
    common.add_argument("--verbose", action="store_true", help="report per-trial progress")
    common.add_argument("--seed", type=int, help="override the seed in the config")

    parser = argparse.ArgumentParser(prog="frilift", description="Structured low-rank interpolation of sparse Fourier data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("interpolate", parents=[common], help="complete a partially sampled spectrum")
    p.add_argument("--config", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("generate", parents=[common], help="sample the spectrum of a model")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("recover", parents=[common], help="poles or time samples from a completed spectrum")
    p.add_argument("--spectrum", "--config", dest="spectrum", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=["poles", "cardinal"], default="poles")
    p.add_argument("--rank", type=int)
    p.add_argument("--lift", choices=[k.value for k in LiftKind], default="standard")
    p.add_argument("--d", type=int, help="pencil parameter (default n//2 + 1)")
    p.add_argument("--basis", choices=["derivative", "confluent"], default="derivative")
    p.add_argument("--order", type=int, default=0, help="cardinal spline order")
    p.add_argument("--cluster-radius", type=float, default=1e-4)
    p.add_argument("--project", action="store_true", help="project poles to the unit circle")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("phase-transition", parents=[common], help="run a Monte Carlo sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, help="worker threads (default $FRILIFT_WORKERS or 1)")
    p.set_defaults(func=cmd_phase_transition)

    p = sub.add_parser("coherence", parents=[common], help="incoherence of a model's lifted spectrum")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coherence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("frilift: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False
    if getattr(args, "workers", None) is not None and args.workers < 1:
        log.error("--workers must be positive")
        return EXIT_PRECONDITION
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.error("%s", exc)
        return EXIT_PRECONDITION
