"""Simulated-data generators and the replication study harness.

Two scenarios share one design: covariates uniform on [-0.1, 0.1],
coefficients (-5, -10, 15), unit-scale logistic liability errors (normal
optionally), and five response categories cut at (-0.8416, -0.2533,
0.2533, 0.8416).  The second scenario adds a per-subject standard-normal
location shift, drawn from a spawned child stream so that switching the
shift off reproduces the first scenario's draws exactly.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import OrdinalDataset, write_csv
from .diagnostics import ReplicationReport, relative_bias, relative_efficiency
from .errors import ChainDivergedError, ConfigError
from .gibbs import SamplerConfig, parameter_names, run_chain
from .kvfile import write_kv
from .model import ModelSpec, Priors
from .streams import STREAM_REPLICATION, child_seed, substream

__all__ = [
    "TRUE_BETA",
    "TRUE_CUTPOINTS",
    "ScenarioConfig",
    "ReplicationRun",
    "liability_to_category",
    "generate_sim1",
    "generate_sim2",
    "generate",
    "run_replication_study",
    "efficiency_against",
    "write_scenario_dataset",
]

TRUE_BETA = (-5.0, -10.0, 15.0)
TRUE_CUTPOINTS = (-0.8416, -0.2533, 0.2533, 0.8416)

# Fit-time cut-point support for simulated designs; comfortably contains
# the true cut-points while keeping the order-statistics prior proper.
SIM_DELTA_MIN = -3.0
SIM_DELTA_MAX = 3.0


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "sim1"
    subjects: int = 40
    obs_per_subject: int = 5
    true_beta: tuple[float, ...] = TRUE_BETA
    true_cutpoints: tuple[float, ...] = TRUE_CUTPOINTS
    random_effect_sd: float | None = None  # None: 0 for sim1, 1 for sim2
    error: str = "logistic"  # liability noise: logistic(0,1) or normal(0,1)
    replications: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in ("sim1", "sim2"):
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected sim1 or sim2")
        if self.error not in ("logistic", "normal"):
            raise ConfigError(f"unknown error distribution {self.error!r}; expected logistic or normal")
        if self.subjects < 1 or self.obs_per_subject < 1:
            raise ConfigError("subjects and observations per subject must be positive")
        if self.replications < 1:
            raise ConfigError("at least one replication is required")
        if len(self.true_cutpoints) < 1 or np.any(np.diff(self.true_cutpoints) <= 0.0):
            raise ConfigError("true cut-points must be strictly increasing")

    @property
    def effect_sd(self) -> float:
        if self.random_effect_sd is not None:
            return self.random_effect_sd
        return 1.0 if self.scenario == "sim2" else 0.0

    @property
    def num_categories(self) -> int:
        return len(self.true_cutpoints) + 1


def liability_to_category(liability, cutpoints) -> np.ndarray:
    """Category labels 1..C for liabilities under half-open (lo, hi] bins."""
    cuts = np.asarray(cutpoints, dtype=float)
    return np.searchsorted(cuts, np.asarray(liability, dtype=float), side="left") + 1


def _build_dataset(config: ScenarioConfig, x, liability) -> OrdinalDataset:
    N, n_i = config.subjects, config.obs_per_subject
    width = len(str(N))
    subject_ids = [f"s{i + 1:0{width}d}" for i in range(N)]
    subject_index = np.repeat(np.arange(N, dtype=np.intp), n_i)
    y = liability_to_category(liability, config.true_cutpoints)
    time_index = np.tile(np.arange(n_i, dtype=np.intp), N)
    return OrdinalDataset(
        subject_ids, subject_index, y, x, time_index,
        num_categories=config.num_categories,
        covariate_names=[f"x{j + 1}" for j in range(len(config.true_beta))],
    )


def _error_draw(config: ScenarioConfig, rng, n: int) -> np.ndarray:
    if config.error == "normal":
        return rng.normal(0.0, 1.0, size=n)
    return rng.logistic(0.0, 1.0, size=n)


def generate_sim1(config: ScenarioConfig, rng) -> OrdinalDataset:
    """Fixed-effects design: liability = x'beta + noise."""
    n = config.subjects * config.obs_per_subject
    p = len(config.true_beta)
    x = rng.uniform(-0.1, 0.1, size=(n, p))
    eps = _error_draw(config, rng, n)
    liability = x @ np.asarray(config.true_beta) + eps
    return _build_dataset(config, x, liability)


def generate_sim2(config: ScenarioConfig, rng) -> OrdinalDataset:
    """Random-effects design: adds a constant per-subject normal shift.

    The shift comes from a spawned child stream, so the covariate and error
    draws occupy exactly the positions they would in ``generate_sim1``.
    """
    n = config.subjects * config.obs_per_subject
    p = len(config.true_beta)
    effect_rng = rng.spawn(1)[0]
    x = rng.uniform(-0.1, 0.1, size=(n, p))
    eps = _error_draw(config, rng, n)
    alpha = config.effect_sd * effect_rng.standard_normal(config.subjects)
    subject_index = np.repeat(np.arange(config.subjects), config.obs_per_subject)
    liability = alpha[subject_index] + x @ np.asarray(config.true_beta) + eps
    return _build_dataset(config, x, liability)


def generate(config: ScenarioConfig, rng) -> OrdinalDataset:
    if config.scenario == "sim1":
        return generate_sim1(config, rng)
    return generate_sim2(config, rng)


def write_scenario_dataset(dataset: OrdinalDataset, config: ScenarioConfig, path) -> None:
    """Dataset CSV plus a ``.meta`` sidecar recording the generating design."""
    write_csv(dataset, path)
    p = len(config.true_beta)
    write_kv(
        Path(path).with_suffix(".meta"),
        {
            "scenario": config.scenario,
            "subjects": config.subjects,
            "obs_per_subject": config.obs_per_subject,
            "seed": config.seed,
            "true_beta": ", ".join(f"{b:.17g}" for b in config.true_beta),
            "true_cutpoints": ", ".join(f"{d:.17g}" for d in config.true_cutpoints),
            "covariate_distributions": ", ".join(f"x{j + 1}: uniform(-0.1, 0.1)" for j in range(p)),
            "error_distribution": f"{config.error}(0, 1)",
            "random_effect_sd": f"{config.effect_sd:.17g}",
        },
    )


# ---------------------------------------------------------------------------
# Replication study
# ---------------------------------------------------------------------------

def sim_priors() -> Priors:
    return Priors(delta_min=SIM_DELTA_MIN, delta_max=SIM_DELTA_MAX)


def posterior_mean_estimator(dataset: OrdinalDataset, theta: float, sampler: SamplerConfig) -> dict[str, float]:
    """Default per-replication estimator: posterior means from one fit."""
    spec = ModelSpec(theta=theta, dataset=dataset, priors=sim_priors())
    draws = run_chain(spec, sampler)
    names = parameter_names(spec)
    return {name: float(draws.column(name).mean()) for name in names if not name.startswith("alpha_")}


@dataclass
class ReplicationRun:
    config: ScenarioConfig
    sampler: SamplerConfig
    thetas: list[float]
    parameters: list[str]
    estimates: dict[float, np.ndarray]          # theta -> (completed, k)
    reports: dict[float, ReplicationReport]
    failures: list[str]

    def estimates_to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replication", "theta", *self.parameters])
            for theta in self.thetas:
                mat = self.estimates[theta]
                for r in range(mat.shape[0]):
                    writer.writerow([r, f"{theta:.17g}", *(f"{v:.17g}" for v in mat[r])])


def _replication_worker(args):
    config, sampler, thetas, rep, estimator = args
    estimator = estimator or posterior_mean_estimator
    data_rng = substream(config.seed, STREAM_REPLICATION, rep, 0)
    dataset = generate(config, data_rng)
    results = {}
    for q, theta in enumerate(thetas):
        fit_seed = child_seed(config.seed, STREAM_REPLICATION, rep, 1 + q)
        fit_cfg = replace(sampler, seed=fit_seed)
        results[theta] = estimator(dataset, theta, fit_cfg)
    return rep, results


def run_replication_study(
    config: ScenarioConfig,
    sampler: SamplerConfig,
    thetas=(0.5,),
    estimator=None,
    jobs: int = 1,
) -> ReplicationRun:
    """Generate M datasets, fit each at every quantile level, and aggregate.

    A replication whose chain diverges is recorded and skipped; the report
    states the attrition.  With ``jobs > 1`` replications run in separate
    processes; aggregation happens in replication-index order either way,
    so the output is identical.
    """
    thetas = [float(t) for t in thetas]
    p = len(config.true_beta)
    names = [f"beta_{k + 1}" for k in range(p)]
    names += [f"delta_{c}" for c in range(1, config.num_categories)]
    truth = dict(zip(names, list(config.true_beta) + list(config.true_cutpoints)))

    tasks = [(config, sampler, thetas, rep, estimator) for rep in range(config.replications)]
    results: dict[int, dict] = {}
    failures: list[str] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for rep, outcome in zip(range(config.replications), pool.map(_replication_worker_safe, tasks)):
                if isinstance(outcome, str):
                    failures.append(f"replication {rep}: {outcome}")
                else:
                    results[rep] = outcome[1]
    else:
        for task in tasks:
            rep = task[3]
            try:
                results[rep] = _replication_worker(task)[1]
            except (ChainDivergedError, FloatingPointError) as exc:
                failures.append(f"replication {rep}: {exc}")

    estimates = {}
    reports = {}
    completed = sorted(results)
    for theta in thetas:
        mat = np.array([[results[rep][theta][name] for name in names] for rep in completed])
        mat = mat.reshape(len(completed), len(names))
        estimates[theta] = mat
        bias = {}
        for j, name in enumerate(names):
            t = truth[name]
            usable = completed and t != 0.0
            bias[name] = relative_bias(mat[:, j], t) if usable else float("nan")
        reports[theta] = ReplicationReport(
            theta=theta,
            replications=config.replications,
            completed=len(completed),
            truth=truth,
            bias=bias,
            failures=list(failures),
        )
    return ReplicationRun(config, sampler, thetas, names, estimates, reports, failures)


def _replication_worker_safe(args):
    try:
        return _replication_worker(args)
    except (ChainDivergedError, FloatingPointError) as exc:
        return str(exc)


def efficiency_against(run: ReplicationRun, reference_theta: float) -> None:
    """Fill each report's efficiency block using one quantile level's
    estimates as the reference dispersion (the reference row is exactly 1)."""
    ref = run.estimates[reference_theta]
    for theta in run.thetas:
        mat = run.estimates[theta]
        eff = {}
        if mat.shape[0] >= 2 and ref.shape[0] >= 2:
            for j, name in enumerate(run.parameters):
                eff[name] = relative_efficiency(mat[:, j], ref[:, j])
        run.reports[theta].efficiency[f"theta={theta:g}"] = eff
