"""Command-line front end: fit, simulate, replicate, diagnose, replay.

Every command resolves its options from flags, then an optional flat
key-value config file, then built-in defaults; the resolved values are
recorded in a manifest so ``ordquant replay <manifest>`` reproduces the
output files byte for byte.  Exit codes are stable: 0 success, 2 user or
configuration error, 3 numerical failure during sampling.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .data import CsvSchema, ingest_csv
from .diagnostics import dic, mpsrf, summarize
from .errors import ChainDivergedError, ConfigError, DataError, SchemaError
from .gibbs import SamplerConfig, read_draws, run_chain, write_draws
from .kvfile import read_kv, write_kv
from .model import ModelSpec, Priors
from .simulate import ScenarioConfig, efficiency_against, generate, run_replication_study, write_scenario_dataset
from .streams import STREAM_DATASET, fresh_seed, substream


@dataclass(frozen=True)
class Opt:
    name: str
    kind: str  # int | float | str | flag | float_list | str_list
    default: object = None
    help: str = ""
    required: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


_SCHEMA_OPTS = [
    Opt("subject-col", "str", "subject", "subject id column name"),
    Opt("response-col", "str", "y", "ordinal response column name"),
    Opt("time-col", "str", "time", "time index column name (used when present)"),
    Opt("covariates", "str_list", None, "comma-separated covariate columns (default: all others)"),
    Opt("categories", "int", None, "declared number of categories (default: infer from data)"),
]

_PRIOR_OPTS = [
    Opt("a1", "float", 0.1, "gamma shape for the shrinkage rate"),
    Opt("a2", "float", 0.1, "gamma rate for the shrinkage rate"),
    Opt("b1", "float", 0.1, "inverse-gamma shape for the random-effect variance"),
    Opt("b2", "float", 0.1, "inverse-gamma scale for the random-effect variance"),
    Opt("delta-min", "float", -10.0, "lower support bound for interior cut-points"),
    Opt("delta-max", "float", 10.0, "upper support bound for interior cut-points"),
]

_COMMON_OPTS = [
    Opt("seed", "int", None, "64-bit seed (default: auto-generated and recorded)"),
    Opt("out", "str", "runs", "output root directory"),
]

OPTIONS: dict[str, list[Opt]] = {
    "fit": [
        Opt("input", "str", None, "dataset CSV", required=True),
        Opt("theta", "float_list", [0.5], "quantile level (repeatable)"),
        Opt("iterations", "int", 20000),
        Opt("burn-in", "int", 2000),
        Opt("thin", "int", 1),
        Opt("chains", "int", 1),
        Opt("level", "float", 0.95, "credible-interval level"),
        Opt("checkpoints", "int", 20, "number of shrink-factor checkpoints"),
        Opt("dic", "flag", False, "compute the deviance information criterion"),
        Opt("retain-alpha", "flag", False, "keep subject-effect draws"),
        Opt("overdispersed-starts", "flag", False, "perturb each chain's starting coefficients"),
        *_SCHEMA_OPTS,
        *_PRIOR_OPTS,
        *_COMMON_OPTS,
    ],
    "simulate": [
        Opt("scenario", "str", None, "sim1 (fixed effects) or sim2 (random effects)", required=True),
        Opt("subjects", "int", 40),
        Opt("n-per-subject", "int", 5),
        Opt("random-effect-sd", "float", None, "override the scenario's random-effect SD"),
        Opt("error", "str", "logistic", "liability noise: logistic or normal"),
        *_COMMON_OPTS,
    ],
    "replicate": [
        Opt("scenario", "str", None, "sim1 or sim2", required=True),
        Opt("replications", "int", 20),
        Opt("theta", "float_list", [0.5], "quantile level (repeatable)"),
        Opt("subjects", "int", 40),
        Opt("n-per-subject", "int", 5),
        Opt("error", "str", "logistic", "liability noise: logistic or normal"),
        Opt("iterations", "int", 10000),
        Opt("burn-in", "int", 2000),
        Opt("thin", "int", 1),
        Opt("chains", "int", 1),
        Opt("jobs", "int", 1, "parallel replication workers"),
        Opt("full-paper-scale", "flag", False, "200 replications at 20000/2000 iterations"),
        *_COMMON_OPTS,
    ],
    "diagnose": [
        Opt("draws", "str_list", None, "draws CSV file(s); several files = several chains", required=True),
        Opt("mpsrf", "flag", False, "emit the multivariate shrink-factor series"),
        Opt("checkpoints", "int", 20),
        Opt("dic", "flag", False, "compute DIC (needs --data and --theta)"),
        Opt("data", "str", None, "dataset CSV for the deviance"),
        Opt("theta", "float", None, "quantile level of the fit being diagnosed"),
        Opt("level", "float", 0.95),
        *_SCHEMA_OPTS,
        *_COMMON_OPTS,
    ],
}


# ---------------------------------------------------------------------------
# Option plumbing
# ---------------------------------------------------------------------------

def _convert(opt: Opt, text: str):
    text = text.strip()
    if opt.kind == "int":
        return int(text)
    if opt.kind == "float":
        return float(text)
    if opt.kind == "flag":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"option {opt.name}: expected true/false, got {text!r}")
    if opt.kind == "float_list":
        return [float(v) for v in text.replace(",", " ").split()]
    if opt.kind == "str_list":
        return [v for v in text.replace(",", " ").split() if v]
    return text


def _format(opt: Opt, value) -> str:
    if value is None:
        return ""
    if opt.kind == "flag":
        return "true" if value else "false"
    if opt.kind in ("float_list", "str_list"):
        return ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if opt.kind == "float":
        return repr(float(value))
    return str(value)


def _add_arguments(parser: argparse.ArgumentParser, opts: list[Opt]) -> None:
    for opt in opts:
        flag = f"--{opt.name}"
        if opt.kind == "flag":
            parser.add_argument(flag, dest=opt.dest, action="store_const", const=True,
                                default=None, help=opt.help)
        elif opt.kind == "float_list":
            parser.add_argument(flag, dest=opt.dest, action="append", type=float,
                                default=None, help=opt.help)
        elif opt.kind == "str_list":
            parser.add_argument(flag, dest=opt.dest, action="append", type=str,
                                default=None, help=opt.help)
        else:
            cast = {"int": int, "float": float, "str": str}[opt.kind]
            parser.add_argument(flag, dest=opt.dest, type=cast, default=None, help=opt.help)


def _resolve(opts: list[Opt], namespace, config_path) -> dict:
    file_cfg = read_kv(config_path) if config_path else {}
    unknown = set(file_cfg) - {o.name for o in opts}
    if config_path and unknown:
        raise ConfigError(f"config file {config_path}: unknown option(s) {sorted(unknown)}")
    resolved = {}
    for opt in opts:
        value = getattr(namespace, opt.dest, None)
        if value is None and opt.name in file_cfg:
            value = _convert(opt, file_cfg[opt.name])
        if value is None:
            value = opt.default
        if value is None and opt.required:
            raise ConfigError(f"missing required option --{opt.name}")
        resolved[opt.name] = value
    return resolved


def _prepare_out(resolved: dict, command: str) -> Path:
    if resolved.get("seed") is None:
        resolved["seed"] = fresh_seed()
    out_dir = Path(resolved["out"]) / f"{command}-{resolved['seed']}"
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _write_manifest(out_dir: Path, command: str, opts: list[Opt], resolved: dict, extra=None) -> None:
    items: dict[str, str] = {
        "command": command,
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    for opt in opts:
        text = _format(opt, resolved[opt.name])
        if text != "":
            items[opt.name] = text
    items.update(extra or {})
    write_kv(out_dir / "manifest.txt", items)


def _sha256(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _schema_from(resolved: dict) -> CsvSchema:
    covs = resolved.get("covariates")
    return CsvSchema(
        subject=resolved["subject-col"],
        response=resolved["response-col"],
        covariates=tuple(covs) if covs else None,
        time=resolved["time-col"],
        num_categories=resolved["categories"],
    )


def _priors_from(resolved: dict) -> Priors:
    return Priors(
        a1=resolved["a1"], a2=resolved["a2"], b1=resolved["b1"], b2=resolved["b2"],
        delta_min=resolved["delta-min"], delta_max=resolved["delta-max"],
    )


# ---------------------------------------------------------------------------
# Command runners (operate on fully resolved options)
# ---------------------------------------------------------------------------

def _run_fit(resolved: dict) -> int:
    out_dir = _prepare_out(resolved, "fit")
    input_path = Path(resolved["input"]).resolve()
    resolved["input"] = str(input_path)
    dataset = ingest_csv(input_path, _schema_from(resolved))
    priors = _priors_from(resolved)
    config = SamplerConfig(
        iterations=resolved["iterations"],
        burn_in=resolved["burn-in"],
        thin=resolved["thin"],
        num_chains=resolved["chains"],
        seed=resolved["seed"],
        overdispersed_starts=resolved["overdispersed-starts"],
        retain_alpha=resolved["retain-alpha"] or resolved["dic"],
    )
    for theta in resolved["theta"]:
        spec = ModelSpec(theta=theta, dataset=dataset, priors=priors)
        draws = run_chain(spec, config)
        tag = f"theta{theta:g}"
        write_draws(draws, out_dir / f"draws-{tag}.csv", spec)
        table = summarize(draws, level=resolved["level"])
        table.to_csv(out_dir / f"summary-{tag}.csv")
        (out_dir / f"summary-{tag}.txt").write_text(table.to_text(), encoding="utf-8")
        if config.num_chains >= 2:
            series = mpsrf(draws, checkpoints=resolved["checkpoints"])
            series.to_csv(out_dir / f"mpsrf-{tag}.csv")
            series.to_plot_file(out_dir / f"mpsrf-{tag}.dat")
            (out_dir / f"mpsrf-{tag}.txt").write_text(series.to_text(), encoding="utf-8")
        if resolved["dic"]:
            result = dic(draws, spec)
            write_kv(
                out_dir / f"dic-{tag}.txt",
                {
                    "dic": f"{result.dic:.17g}",
                    "dbar": f"{result.dbar:.17g}",
                    "d_at_posterior_mean": f"{result.d_at_mean:.17g}",
                    "p_d": f"{result.p_d:.17g}",
                    "floored_cells": result.floored_cells,
                },
            )
    _write_manifest(out_dir, "fit", OPTIONS["fit"], resolved, extra={"input_sha256": _sha256(input_path)})
    return 0


def _run_simulate(resolved: dict) -> int:
    out_dir = _prepare_out(resolved, "simulate")
    config = ScenarioConfig(
        scenario=resolved["scenario"],
        subjects=resolved["subjects"],
        obs_per_subject=resolved["n-per-subject"],
        random_effect_sd=resolved["random-effect-sd"],
        error=resolved["error"],
        seed=resolved["seed"],
    )
    rng = substream(config.seed, STREAM_DATASET, 0)
    dataset = generate(config, rng)
    write_scenario_dataset(dataset, config, out_dir / "dataset.csv")
    _write_manifest(out_dir, "simulate", OPTIONS["simulate"], resolved)
    return 0


def _run_replicate(resolved: dict) -> int:
    if resolved["full-paper-scale"]:
        resolved = dict(resolved)
        resolved["replications"] = 200
        resolved["iterations"] = 20000
        resolved["burn-in"] = 2000
    out_dir = _prepare_out(resolved, "replicate")
    config = ScenarioConfig(
        scenario=resolved["scenario"],
        subjects=resolved["subjects"],
        obs_per_subject=resolved["n-per-subject"],
        error=resolved["error"],
        replications=resolved["replications"],
        seed=resolved["seed"],
    )
    sampler = SamplerConfig(
        iterations=resolved["iterations"],
        burn_in=resolved["burn-in"],
        thin=resolved["thin"],
        num_chains=resolved["chains"],
    )
    run = run_replication_study(config, sampler, resolved["theta"], jobs=resolved["jobs"])
    if all(run.estimates[t].shape[0] >= 2 for t in run.thetas):
        efficiency_against(run, run.thetas[0])
    run.estimates_to_csv(out_dir / "estimates.csv")
    _write_report_csv(run, out_dir / "report.csv")
    text = "".join(run.reports[t].to_text() + "\n" for t in run.thetas)
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    _write_manifest(out_dir, "replicate", OPTIONS["replicate"], resolved)
    return 0


def _write_report_csv(run, path) -> None:
    import csv

    models = sorted({m for t in run.thetas for m in run.reports[t].efficiency})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "parameter", "truth", "relative_bias", *(f"efficiency_{m}" for m in models)])
        for theta in run.thetas:
            report = run.reports[theta]
            for name, bias in report.bias.items():
                row = [f"{theta:.17g}", name, f"{report.truth[name]:.17g}", f"{bias:.17g}"]
                row += [f"{report.efficiency[m][name]:.17g}" if m in report.efficiency else "" for m in models]
                writer.writerow(row)


def _run_diagnose(resolved: dict) -> int:
    out_dir = _prepare_out(resolved, "diagnose")
    draws = read_draws(resolved["draws"])
    table = summarize(draws, level=resolved["level"])
    table.to_csv(out_dir / "summary.csv")
    (out_dir / "summary.txt").write_text(table.to_text(), encoding="utf-8")
    if resolved["mpsrf"]:
        if draws.num_chains < 2:
            raise ConfigError("the multivariate shrink factor needs at least two chains")
        series = mpsrf(draws, checkpoints=resolved["checkpoints"])
        series.to_csv(out_dir / "mpsrf.csv")
        series.to_plot_file(out_dir / "mpsrf.dat")
        (out_dir / "mpsrf.txt").write_text(series.to_text(), encoding="utf-8")
    if resolved["dic"]:
        if not resolved["data"] or resolved["theta"] is None:
            raise ConfigError("DIC needs --data and --theta")
        data_path = Path(resolved["data"]).resolve()
        resolved["data"] = str(data_path)
        dataset = ingest_csv(data_path, _schema_from(resolved))
        spec = ModelSpec(theta=resolved["theta"], dataset=dataset)
        result = dic(draws, spec)
        write_kv(
            out_dir / "dic.txt",
            {
                "dic": f"{result.dic:.17g}",
                "dbar": f"{result.dbar:.17g}",
                "d_at_posterior_mean": f"{result.d_at_mean:.17g}",
                "p_d": f"{result.p_d:.17g}",
                "floored_cells": result.floored_cells,
            },
        )
    resolved["draws"] = [str(Path(p).resolve()) for p in resolved["draws"]]
    _write_manifest(out_dir, "diagnose", OPTIONS["diagnose"], resolved)
    return 0


_RUNNERS = {
    "fit": _run_fit,
    "simulate": _run_simulate,
    "replicate": _run_replicate,
    "diagnose": _run_diagnose,
}


def _run_replay(manifest_path, out_override) -> int:
    manifest = read_kv(manifest_path)
    command = manifest.get("command")
    if command not in _RUNNERS:
        raise ConfigError(f"manifest {manifest_path} does not name a replayable command")
    opts = OPTIONS[command]
    resolved = {}
    for opt in opts:
        if opt.name in manifest and manifest[opt.name] != "":
            resolved[opt.name] = _convert(opt, manifest[opt.name])
        else:
            resolved[opt.name] = opt.default
    if out_override:
        resolved["out"] = out_override
    return _RUNNERS[command](resolved)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ordquant",
        description="Bayesian quantile regression for ordinal longitudinal data",
    )
    parser.add_argument("--version", action="version", version=f"ordquant {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "fit": "fit the model to a dataset CSV at one or more quantile levels",
        "simulate": "generate a synthetic dataset from a named scenario",
        "replicate": "run a replication study and report bias/efficiency",
        "diagnose": "summaries, shrink factor, and DIC from stored draws",
    }
    for command, opts in OPTIONS.items():
        p = sub.add_parser(command, help=descriptions[command])
        p.add_argument("--config", type=str, default=None, help="flat key=value options file")
        _add_arguments(p, opts)
        if command == "diagnose":
            p.add_argument("draws_files", nargs="*", help="draws CSV file(s)")
    replay = sub.add_parser("replay", help="re-run a command from its manifest")
    replay.add_argument("manifest", type=str)
    replay.add_argument("--out", type=str, default=None, help="override the output root")
    return parser


def _dispatch(argv) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        return _run_replay(args.manifest, args.out)
    opts = OPTIONS[args.command]
    if args.command == "diagnose" and getattr(args, "draws_files", None):
        existing = args.draws or []
        args.draws = existing + list(args.draws_files)
    resolved = _resolve(opts, args, args.config)
    return _RUNNERS[args.command](resolved)


def main(argv=None) -> int:
    try:
        return _dispatch(argv)
    except SystemExit as exc:
        code = exc.code
        if code in (None, 0):
            return 0
        return 2
    except (SchemaError, DataError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ChainDivergedError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
