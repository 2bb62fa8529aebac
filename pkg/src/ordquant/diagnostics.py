"""Posterior summaries, convergence diagnostics, and replication metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .gibbs import PosteriorDraws
from .model import ModelSpec
from .distributions import sld_cdf

__all__ = [
    "SummaryTable",
    "summarize",
    "MpsrfSeries",
    "mpsrf",
    "DicResult",
    "dic",
    "relative_bias",
    "relative_efficiency",
    "ReplicationReport",
]

# Probability floor for likelihood cells in the deviance; cells this small
# are counted and flagged rather than producing -inf.
_CELL_FLOOR = 1e-300

_MPSRF_RIDGE = 1e-10


# ---------------------------------------------------------------------------
# Posterior summaries
# ---------------------------------------------------------------------------

@dataclass
class SummaryTable:
    """Per-parameter posterior mean, SD, and equal-tailed credible interval.

    Intervals are empirical quantiles with linear interpolation between
    order statistics (numpy's default rule, Hyndman-Fan type 7); the SD is
    the sample SD with one delta degree of freedom.
    """

    parameters: list[str]
    mean: np.ndarray
    sd: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def row(self, name: str) -> dict[str, float]:
        i = self.parameters.index(name)
        return {
            "mean": float(self.mean[i]),
            "sd": float(self.sd[i]),
            "lower": float(self.lower[i]),
            "upper": float(self.upper[i]),
        }

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["parameter", "mean", "sd", "lower", "upper", "level"])
            for i, name in enumerate(self.parameters):
                writer.writerow(
                    [name]
                    + [f"{v:.17g}" for v in (self.mean[i], self.sd[i], self.lower[i], self.upper[i])]
                    + [f"{self.level:.17g}"]
                )

    def to_text(self) -> str:
        width = max([len(p) for p in self.parameters] + [9])
        pct = 100.0 * self.level
        lines = [f"{'parameter':<{width}}  {'mean':>12}  {'sd':>12}  {pct:.0f}% interval"]
        for i, name in enumerate(self.parameters):
            lines.append(
                f"{name:<{width}}  {self.mean[i]:>12.4f}  {self.sd[i]:>12.4f}  "
                f"({self.lower[i]:.4f}, {self.upper[i]:.4f})"
            )
        return "\n".join(lines) + "\n"


def summarize(draws: PosteriorDraws, level: float = 0.95) -> SummaryTable:
    """Column means, SDs, and equal-tailed intervals, all chains pooled."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"credible level must lie in (0, 1), got {level}")
    if draws.values.shape[0] < 2:
        raise ValueError("summaries need at least two retained draws")
    tail = 0.5 * (1.0 - level)
    mat = draws.values
    return SummaryTable(
        parameters=list(draws.names),
        mean=mat.mean(axis=0),
        sd=mat.std(axis=0, ddof=1),
        lower=np.quantile(mat, tail, axis=0),
        upper=np.quantile(mat, 1.0 - tail, axis=0),
        level=level,
    )


# ---------------------------------------------------------------------------
# Multivariate potential scale reduction factor
# ---------------------------------------------------------------------------

@dataclass
class MpsrfSeries:
    iterations: list[int]
    values: list[float]
    ridged: list[bool]
    num_chains: int
    parameters: list[str] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "mpsrf", "ridged"])
            for t, v, r in zip(self.iterations, self.values, self.ridged):
                writer.writerow([t, f"{v:.17g}", int(r)])

    def to_plot_file(self, path) -> None:
        """Two whitespace-separated columns (iteration, value), no header."""
        lines = [f"{t} {v:.17g}" for t, v in zip(self.iterations, self.values)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def to_text(self) -> str:
        lines = [f"multivariate shrink factor, {self.num_chains} chains, "
                 f"parameters: {', '.join(self.parameters)}"]
        lines.append(f"{'iteration':>10}  {'mpsrf':>10}")
        for t, v, r in zip(self.iterations, self.values, self.ridged):
            lines.append(f"{t:>10}  {v:>10.4f}" + ("  (ridged)" if r else ""))
        return "\n".join(lines) + "\n"


def default_mpsrf_parameters(names) -> list[str]:
    return [n for n in names if n.startswith("beta_") or n.startswith("delta_")]


def mpsrf(draws: PosteriorDraws, checkpoints=None, parameters=None, include_scale_params: bool = False) -> MpsrfSeries:
    """Brooks-Gelman multivariate shrink factor at cumulative checkpoints.

    At a checkpoint t the statistic uses every retained draw with sweep
    index <= t from each chain: (n-1)/n + ((m+1)/m) lambda_1, where
    lambda_1 is the top generalized eigenvalue of the between-chain against
    the within-chain covariance.  A singular within-chain matrix gets a
    trace-proportional ridge and the checkpoint is flagged.
    """
    if draws.num_chains < 2:
        raise ValueError("the multivariate shrink factor needs at least two chains")
    if parameters is None:
        parameters = default_mpsrf_parameters(draws.names)
        if include_scale_params:
            parameters += [n for n in ("lambda_sq", "phi") if n in draws.names]
    mat = draws.by_chain(parameters)  # (m, n, k)
    m, n_total, _ = mat.shape
    iters = np.sort(draws.iteration[draws.chain == draws.chain[0]])
    if checkpoints is None:
        checkpoints = 20
    if np.isscalar(checkpoints):
        marks = iters[np.unique(np.linspace(1, n_total - 1, int(checkpoints)).astype(int))]
    else:
        marks = np.asarray(sorted(checkpoints))

    out = MpsrfSeries([], [], [], num_chains=m, parameters=list(parameters))
    for t in marks:
        n = int(np.searchsorted(iters, t, side="right"))
        if n < 2:
            continue
        value, ridged = _mpsrf_at(mat[:, :n, :])
        out.iterations.append(int(t))
        out.values.append(value)
        out.ridged.append(ridged)
    return out


def _mpsrf_at(mat: np.ndarray) -> tuple[float, bool]:
    m, n, k = mat.shape
    chain_means = mat.mean(axis=1)                      # (m, k)
    within = np.zeros((k, k))
    for j in range(m):
        dev = mat[j] - chain_means[j]
        within += dev.T @ dev / (n - 1)
    within /= m
    grand = chain_means.mean(axis=0)
    dev_means = chain_means - grand
    between_over_n = dev_means.T @ dev_means / (m - 1)  # B/n

    floor = (n - 1) / n
    if not np.any(between_over_n):
        return floor, False
    ridged = False
    w = within
    for _ in range(2):
        try:
            eigvals = scipy.linalg.eigh(between_over_n, w, eigvals_only=True)
            if np.isfinite(eigvals).all():
                lam = float(eigvals[-1])
                return floor + (m + 1) / m * lam, ridged
        except scipy.linalg.LinAlgError:
            pass
        ridge = _MPSRF_RIDGE * max(np.trace(within), 1e-30) / k
        w = within + ridge * np.eye(k)
        ridged = True
    raise ArithmeticError("within-chain covariance is singular even after ridging")


# ---------------------------------------------------------------------------
# Deviance information criterion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DicResult:
    dic: float
    dbar: float
    d_at_mean: float
    p_d: float
    floored_cells: int


def dic(draws: PosteriorDraws, spec: ModelSpec) -> DicResult:
    """DIC under the marginal skewed-Laplace ordinal likelihood.

    The likelihood of an observation is the difference of the error CDF at
    the standardized cut-points (the mixing variable integrated out
    analytically), conditional on the subject effects; subject effects are
    treated as parameters, so the draws must retain them.  Cells below the
    probability floor are clamped and counted.
    """
    ds = spec.dataset
    names = set(draws.names)
    beta_names = [f"beta_{k + 1}" for k in range(ds.num_covariates)]
    delta_names = [f"delta_{c}" for c in range(1, ds.num_categories)]
    alpha_names = [f"alpha_{i + 1}" for i in range(ds.num_subjects)]
    missing = [n for n in beta_names + delta_names + alpha_names if n not in names]
    if missing:
        raise ValueError(
            f"deviance needs columns {missing[:4]}{'...' if len(missing) > 4 else ''}; "
            "re-run the fit with subject-effect retention enabled"
        )

    betas = draws.select(beta_names)
    deltas = draws.select(delta_names)
    alphas = draws.select(alpha_names)

    floored = 0

    def deviance(beta, delta_interior, alpha) -> float:
        nonlocal floored
        cuts = np.concatenate([[-np.inf], delta_interior, [np.inf]])
        shift = alpha[ds.subject_index] + ds.x @ beta
        cells = sld_cdf(cuts[ds.y] - shift, spec.theta) - sld_cdf(cuts[ds.y - 1] - shift, spec.theta)
        small = cells < _CELL_FLOOR
        if small.any():
            floored += int(small.sum())
            cells = np.maximum(cells, _CELL_FLOOR)
        return -2.0 * float(np.log(cells).sum())

    devs = np.array([deviance(betas[r], deltas[r], alphas[r]) for r in range(draws.values.shape[0])])
    dbar = float(devs.mean())
    d_hat = deviance(betas.mean(axis=0), deltas.mean(axis=0), alphas.mean(axis=0))
    p_d = dbar - d_hat
    return DicResult(dic=dbar + p_d, dbar=dbar, d_at_mean=d_hat, p_d=p_d, floored_cells=floored)


# ---------------------------------------------------------------------------
# Replication-study metrics
# ---------------------------------------------------------------------------

def relative_bias(estimates, truth: float) -> float:
    """Average of (estimate - truth) / |truth| across replications."""
    truth = float(truth)
    if truth == 0.0:
        raise ValueError("relative bias is undefined for a zero true value")
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size < 1:
        raise ValueError("relative bias needs at least one replication")
    return float(np.mean((estimates - truth) / abs(truth)))


def _mean_sq_deviation(values: np.ndarray) -> float:
    return float(np.mean((values - values.mean()) ** 2))


def relative_efficiency(model_estimates, reference_estimates) -> float:
    """Ratio of mean squared deviations about each replication mean.

    The reference goes in the denominator; comparing a sample of estimates
    against itself is exactly 1 by definition.
    """
    model = np.asarray(model_estimates, dtype=float)
    reference = np.asarray(reference_estimates, dtype=float)
    if model.size < 2 or reference.size < 2:
        raise ValueError("relative efficiency needs at least two replications per model")
    if np.array_equal(model, reference):
        return 1.0
    s2_ref = _mean_sq_deviation(reference)
    if s2_ref == 0.0:
        raise ValueError("reference estimates have zero dispersion")
    return _mean_sq_deviation(model) / s2_ref


@dataclass
class ReplicationReport:
    """Aggregated replication-study metrics for one quantile level."""

    theta: float
    replications: int
    completed: int
    truth: dict[str, float]
    bias: dict[str, float]
    efficiency: dict[str, dict[str, float]] = field(default_factory=dict)  # model label -> per-parameter
    failures: list[str] = field(default_factory=list)

    @property
    def attrition(self) -> int:
        return self.replications - self.completed

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            header = ["theta", "parameter", "truth", "relative_bias"]
            models = sorted(self.efficiency)
            header += [f"efficiency_{m}" for m in models]
            writer.writerow(header)
            for name, b in self.bias.items():
                row = [f"{self.theta:.17g}", name, f"{self.truth[name]:.17g}", f"{b:.17g}"]
                row += [f"{self.efficiency[m][name]:.17g}" for m in models]
                writer.writerow(row)

    def to_text(self) -> str:
        width = max([len(p) for p in self.bias] + [9])
        lines = [
            f"quantile level {self.theta:g}: {self.completed}/{self.replications} replications completed"
            + (f" ({self.attrition} failed)" if self.attrition else ""),
            f"{'parameter':<{width}}  {'truth':>10}  {'rel. bias':>10}",
        ]
        for name, b in self.bias.items():
            lines.append(f"{name:<{width}}  {self.truth[name]:>10.4f}  {b:>10.4f}")
        for model in sorted(self.efficiency):
            lines.append(f"relative efficiency vs reference, model {model}:")
            for name, value in self.efficiency[model].items():
                lines.append(f"  {name:<{width}}  {value:>10.4f}")
        for msg in self.failures:
            lines.append(f"failed: {msg}")
        return "\n".join(lines) + "\n"
