"""Command-line interface: analyze a CSV series or run simulation presets."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from .core import CandidateSet, TimeSeries
from .detectors import BINARY_SEGMENTATION, SEGMENT_NEIGHBORHOOD, DetectorKind
from .errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    LengthError,
    OpticsError,
    ParseError,
    ShapeError,
    SpecError,
)
from .ext import HuberConfig, h_optics, m_optics, ms_optics
from .inference import BootstrapConfig, copss_estimate, optics
from .scores import FAMILIES, MEAN, NETWORK, REGRESSION, ScoreModel
from .sim import PRESETS, GeneratorSpec, default_k_max, diagnostics, run_experiment

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_DOMAIN = 4

SCHEMA = "optics/1"

logger = logging.getLogger("optics_cp")


def _read_csv(path: str) -> np.ndarray:
    """Load a numeric CSV, tolerating one optional header row."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise ParseError(f"{path} is empty")
    start = 0
    try:
        [float(tok) for tok in lines[0].split(",")]
    except ValueError:
        start = 1  # header row
    rows = []
    width = None
    for ln in lines[start:]:
        try:
            row = [float(tok) for tok in ln.split(",")]
        except ValueError as exc:
            raise ParseError(f"{path}: bad numeric row {ln!r}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{path}: ragged row {ln!r}")
        rows.append(row)
    if not rows:
        raise ParseError(f"{path} has no data rows")
    return np.asarray(rows, dtype=np.float64)


def _parse_variant(text: str) -> tuple[str, dict]:
    if text == "plain":
        return "plain", {}
    name, _, arg = text.partition(":")
    if name == "ms":
        try:
            L = int(arg)
        except ValueError:
            raise ConfigError(f"variant ms needs an integer split count, got {text!r}") from None
        if L < 1:
            raise ConfigError(f"ms split count must be >= 1, got {L}")
        return "ms", {"L": L}
    if name == "huber":
        if arg == "adaptive":
            return "huber", {"h": HuberConfig(adaptive=True)}
        try:
            kappa = float(arg)
        except ValueError:
            raise ConfigError(f"variant huber needs a threshold, got {text!r}") from None
        return "huber", {"h": HuberConfig(kappa=kappa)}
    if name == "mdep":
        try:
            m_dep = int(arg)
        except ValueError:
            raise ConfigError(f"variant mdep needs an integer order, got {text!r}") from None
        if m_dep < 0:
            raise ConfigError(f"mdep order must be >= 0, got {m_dep}")
        return "mdep", {"m_dep": m_dep}
    raise ConfigError(f"unknown variant {text!r}")


def _detector(name: str, min_seg: int) -> DetectorKind:
    kinds = {"bs": BINARY_SEGMENTATION, "sn": SEGMENT_NEIGHBORHOOD}
    if name not in kinds:
        raise ConfigError(f"unknown detector {name!r}; expected 'bs' or 'sn'")
    return DetectorKind(kinds[name], min_seg=min_seg)


def _resolve_seed(arg_seed) -> int:
    if arg_seed is not None:
        return int(arg_seed)
    env = os.environ.get("OPTICS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"OPTICS_SEED must be an integer, got {env!r}") from None
    return 0


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _original_positions(taus, L: int) -> tuple[list[int], list[int]]:
    """Map split-1 half-sample boundaries back to original 1-based positions."""
    odd = [L * (2 * t - 2) + 1 for t in taus]
    even = [L * (2 * t - 1) + 1 for t in taus]
    return odd, even


def _run_analyze(args) -> int:
    data = _read_csv(args.input)
    n_rows = data.shape[0]
    if args.model not in FAMILIES:
        raise ConfigError(f"unknown model {args.model!r}; expected one of {FAMILIES}")

    covariates = None
    if args.model == REGRESSION:
        if data.shape[1] < 2:
            raise InfeasibleError("regression input needs a response plus covariate columns")
        ts = TimeSeries(data[:, :1])
        covariates = data[:, 1:]
    else:
        ts = TimeSeries(data)

    # network columns are expected pre-flattened (vech already applied),
    # so the pipeline consumes them directly as scores
    family = MEAN if args.model == NETWORK else args.model
    model = ScoreModel(family)

    seed = _resolve_seed(args.seed)
    variant, vkw = _parse_variant(args.variant)
    kind = _detector(args.detector, args.min_seg)
    k_max = args.kmax if args.kmax is not None else default_k_max(n_rows)
    m = CandidateSet(k_max)
    cfg = BootstrapConfig(b_reps=args.B, seed=seed)

    if variant == "ms":
        L = vkw["L"]
        cs, table = ms_optics(ts, model, kind, m, args.alpha, cfg, L=L,
                              covariates=covariates, threads=args.threads)
    elif variant == "huber":
        L = 1
        cs, table = h_optics(ts, model, kind, m, args.alpha, cfg, h=vkw["h"],
                             covariates=covariates, threads=args.threads)
    elif variant == "mdep":
        L = vkw["m_dep"] + 1
        cs, table = m_optics(ts, model, kind, m, args.alpha, cfg, m_dep=vkw["m_dep"],
                             covariates=covariates, threads=args.threads)
    else:
        L = 1
        cs, table = optics(ts, model, kind, m, args.alpha, cfg,
                           covariates=covariates, threads=args.threads)

    config_echo = {
        "command": "analyze",
        "input": args.input,
        "model": args.model,
        "detector": args.detector,
        "alpha": args.alpha,
        "b_reps": args.B,
        "k_max": k_max,
        "min_seg": args.min_seg,
        "variant": args.variant,
        "seed": seed,
        "format": args.format,
    }
    candidates = []
    for i, k in enumerate(table.candidates):
        taus = list(table.segmentations[i].taus)
        orig_odd, orig_even = _original_positions(taus, L)
        candidates.append({
            "k": k,
            "p_hat": float(table.p_hat[i]),
            "t_stat": float(table.t_stat[i]),
            "criterion": float(table.criterion[i]),
            "taus": taus,
            "taus_original_odd": orig_odd,
            "taus_original_even": orig_even,
            "in_set": k in cs.members,
        })
    doc = {
        "schema": SCHEMA,
        "config": config_echo,
        "n_observations": n_rows,
        "split_half": table.n,
        "candidates": candidates,
        "confidence_set": {
            "alpha": cs.alpha,
            "members": list(cs.members),
            "rightmost": cs.rightmost,
            "leftmost": cs.leftmost,
            "fallback_used": cs.fallback_used,
        },
        "copss": copss_estimate(table),
        "diagnostics": diagnostics(table),
    }

    if args.format == "json":
        _write_text(args.output, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        lines = ["k,p_hat,t_stat,criterion,in_set,taus,taus_original_odd,taus_original_even"]
        for c in candidates:
            lines.append(",".join([
                str(c["k"]),
                repr(c["p_hat"]),
                repr(c["t_stat"]),
                repr(c["criterion"]),
                str(int(c["in_set"])),
                ";".join(map(str, c["taus"])),
                ";".join(map(str, c["taus_original_odd"])),
                ";".join(map(str, c["taus_original_even"])),
            ]))
        _write_text(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def _default_simulate_config() -> dict:
    return {
        "command": "simulate",
        "preset": None,
        "method": "optics",
        "detector": "sn",
        "alpha": 0.1,
        "b_reps": 500,
        "runs": 100,
        "seed": 0,
        "k_max": None,
        "min_seg": 5,
        "ms_l": 2,
        "huber_kappa": 1.5,
    }


def _simulate_config(args) -> dict:
    if args.spec is not None:
        try:
            with open(args.spec, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot parse spec file {args.spec}: {exc}") from None
        config = loaded.get("config", loaded)
        if "generator" not in config:
            raise ParseError(f"spec file {args.spec} lacks a 'generator' section")
        return {**_default_simulate_config(), **config}

    if args.preset not in PRESETS:
        raise InfeasibleError(
            f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}"
        )
    preset = PRESETS[args.preset]
    gen = asdict(preset["spec"])
    gen["taus_star"] = list(gen["taus_star"])
    config = _default_simulate_config()
    config.update(
        preset=args.preset,
        method=preset["method"],
        min_seg=preset.get("min_seg", 5),
        generator=gen,
    )
    return config


def _apply_overrides(config: dict, args) -> dict:
    gen = dict(config["generator"])
    if args.amplitude is not None:
        gen["amplitude"] = args.amplitude
    if args.mdep is not None:
        gen["m_dep"] = args.mdep
    config = dict(config, generator=gen)
    for key, val in [
        ("detector", args.detector), ("alpha", args.alpha), ("b_reps", args.B),
        ("runs", args.runs), ("seed", args.seed), ("k_max", args.kmax),
        ("min_seg", args.min_seg), ("ms_l", args.ms_l),
    ]:
        if val is not None:
            config[key] = val
    return config


def _run_simulate(args) -> int:
    config = _apply_overrides(_simulate_config(args), args)
    gen = dict(config["generator"])
    gen["taus_star"] = tuple(gen["taus_star"])
    spec = GeneratorSpec(**gen)
    detector = _detector(config["detector"], config["min_seg"])
    report = run_experiment(
        spec,
        method=config["method"],
        detector=detector,
        alpha=config["alpha"],
        b_reps=config["b_reps"],
        runs=config["runs"],
        seed=config["seed"],
        k_max=config["k_max"],
        ms_l=config.get("ms_l", 2),
        huber=HuberConfig(kappa=config.get("huber_kappa", 1.5)),
        threads=args.threads,
    )
    config["k_max"] = report.k_max
    summary = {"schema": SCHEMA, "config": config, "results": report.summary()}
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"

    if args.output == "-":
        sys.stdout.write(text)
        return EXIT_OK

    header = "run,method,detector,A,covered,cardinality,copss_hit,seconds"
    rows = [header] + [
        ",".join(str(r[c]) for c in header.split(","))
        for r in report.csv_rows()
    ]
    with open(args.output + ".csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    with open(args.output + ".json", "w", encoding="utf-8") as fh:
        fh.write(text)
    logger.info("wrote %s.csv and %s.json", args.output, args.output)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optics-cp",
        description="Confidence sets for the number of change-points",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="analyze a CSV series")
    pa.add_argument("--input", required=True, help="CSV path; one row per time point")
    pa.add_argument("--model", default=MEAN, help=f"model family: {', '.join(FAMILIES)}")
    pa.add_argument("--detector", default="sn", help="bs or sn")
    pa.add_argument("--alpha", type=float, default=0.1)
    pa.add_argument("--B", type=int, default=500, help="bootstrap replicates")
    pa.add_argument("--kmax", type=int, default=None, help="largest candidate count")
    pa.add_argument("--variant", default="plain", help="plain, ms:L, huber:kappa, or mdep:m")
    pa.add_argument("--seed", type=int, default=None, help="falls back to OPTICS_SEED, then 0")
    pa.add_argument("--min-seg", dest="min_seg", type=int, default=5)
    pa.add_argument("--threads", type=int, default=1)
    pa.add_argument("--output", default="-", help="output path, '-' for stdout")
    pa.add_argument("--format", choices=["json", "csv"], default="json")

    ps = sub.add_parser("simulate", help="run a simulation preset or spec file")
    ps.add_argument("--preset", default=None, help=f"one of: {', '.join(sorted(PRESETS))}")
    ps.add_argument("--spec", default=None, help="JSON config file (overrides --preset)")
    ps.add_argument("--amplitude", type=float, default=None)
    ps.add_argument("--runs", type=int, default=None)
    ps.add_argument("--detector", default=None)
    ps.add_argument("--alpha", type=float, default=None)
    ps.add_argument("--B", type=int, default=None)
    ps.add_argument("--kmax", type=int, default=None)
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--min-seg", dest="min_seg", type=int, default=None)
    ps.add_argument("--ms-l", dest="ms_l", type=int, default=None)
    ps.add_argument("--mdep", type=int, default=None)
    ps.add_argument("--threads", type=int, default=1)
    ps.add_argument("--output", default="-", help="file prefix for .csv/.json, '-' for stdout")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _run_analyze(args)
        if args.spec is None and args.preset is None:
            raise InfeasibleError("simulate needs --preset or --spec")
        return _run_simulate(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InfeasibleError, ConfigError, LengthError, ShapeError, SpecError,
            OpticsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
