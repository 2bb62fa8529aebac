"""Eight-step Gibbs sampler and chain orchestration.

One sweep updates, in order: the per-observation mixing variables, the
coefficients (one at a time against fresh partial residuals), the
coefficient prior scales, the shrinkage rate, the subject effects, the
random-effect variance, the liabilities, and the interior cut-points.
Every update draws from its exact full conditional, so a sweep leaves the
joint posterior invariant.

A chain is strictly sequential; chains are independent given their derived
substreams, so multi-chain runs are reproducible regardless of scheduling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ChainDivergedError, ConfigError, SchemaError
from .kvfile import write_kv
from .model import RHO1_SQ_FLOOR, ChainState, ModelSpec, initialize_state
from .distributions import (
    sample_gamma,
    sample_gig,
    sample_inverse_gamma,
    sample_trunc_normal,
    sample_uniform,
)
from .streams import STREAM_CHAIN, substream

__all__ = [
    "SamplerConfig",
    "PosteriorDraws",
    "run_chain",
    "parameter_names",
    "write_draws",
    "read_draws",
    "update_v",
    "update_beta",
    "update_s",
    "update_lambda_sq",
    "update_alpha",
    "update_phi",
    "update_l",
    "update_delta",
    "cutpoint_bounds",
]

_SQRT_HALF = float(np.sqrt(0.5))


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 20000
    burn_in: int = 2000
    thin: int = 1
    num_chains: int = 1
    seed: int = 0
    overdispersed_starts: bool = False
    retain_alpha: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError("burn-in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ConfigError("thinning interval must be >= 1")
        if self.retained_per_chain < 1:
            raise ConfigError("configuration retains no draws")
        if self.num_chains < 1:
            raise ConfigError("at least one chain is required")

    @property
    def retained_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


# ---------------------------------------------------------------------------
# Single-block updates (each mutates one component of the state in place)
# ---------------------------------------------------------------------------

def update_v(state: ChainState, spec: ModelSpec, rng) -> None:
    """Mixing variables: GIG(1/2) with rho1^2 = residual^2 / 2, rho2^2 = 1/2."""
    ds = spec.dataset
    resid = state.latent_l - ds.x @ state.beta - state.alpha[ds.subject_index]
    rho1 = np.sqrt(np.maximum(0.5 * resid * resid, RHO1_SQ_FLOOR))
    state.latent_v = np.asarray(sample_gig(0.5, rho1, _SQRT_HALF, rng))


def update_beta(state: ChainState, spec: ModelSpec, rng) -> None:
    """Coefficients, swept in ascending index against fresh partial residuals."""
    ds = spec.dataset
    inv2v = 0.5 / state.latent_v
    r = state.latent_l - ds.x @ state.beta - state.alpha[ds.subject_index] - spec.xi * state.latent_v
    for k in range(ds.num_covariates):
        xk = ds.x[:, k]
        r_k = r + xk * state.beta[k]
        precision = np.dot(xk * xk, inv2v) + 1.0 / state.s[k]
        variance = 1.0 / precision
        mean = variance * np.dot(r_k * xk, inv2v)
        b_new = rng.normal(mean, np.sqrt(variance))
        state.beta[k] = b_new
        r = r_k - xk * b_new


def update_s(state: ChainState, spec: ModelSpec, rng) -> None:
    """Coefficient scales: GIG(1/2) with rho1^2 = beta_k^2, rho2^2 = lambda^2."""
    rho1 = np.sqrt(np.maximum(state.beta * state.beta, RHO1_SQ_FLOOR))
    state.s = np.asarray(sample_gig(0.5, rho1, np.sqrt(state.lambda_sq), rng))


def update_lambda_sq(state: ChainState, spec: ModelSpec, rng) -> None:
    """Shrinkage rate squared: gamma(p + a1, rate = sum(s)/2 + a2)."""
    p = spec.dataset.num_covariates
    rate = 0.5 * float(state.s.sum()) + spec.priors.a2
    state.lambda_sq = float(sample_gamma(p + spec.priors.a1, rate, rng))


def update_alpha(state: ChainState, spec: ModelSpec, rng) -> None:
    """Subject effects: normal with data precision sum_j 1/(2 v_ij) + 1/phi."""
    ds = spec.dataset
    inv2v = 0.5 / state.latent_v
    precision = np.bincount(ds.subject_index, weights=inv2v, minlength=ds.num_subjects) + 1.0 / state.phi
    variance = 1.0 / precision
    eta = state.latent_l - ds.x @ state.beta - spec.xi * state.latent_v
    mean = variance * np.bincount(ds.subject_index, weights=eta * inv2v, minlength=ds.num_subjects)
    state.alpha = rng.normal(mean, np.sqrt(variance))


def update_phi(state: ChainState, spec: ModelSpec, rng) -> None:
    """Random-effect variance: inverse-gamma(N/2 + b1, scale = sum(alpha^2)/2 + b2)."""
    N = spec.dataset.num_subjects
    scale = 0.5 * float(np.dot(state.alpha, state.alpha)) + spec.priors.b2
    state.phi = float(sample_inverse_gamma(0.5 * N + spec.priors.b1, scale, rng))


def update_l(state: ChainState, spec: ModelSpec, rng) -> None:
    """Liabilities: normal truncated to each observation's category interval."""
    ds = spec.dataset
    center = ds.x @ state.beta + state.alpha[ds.subject_index] + spec.xi * state.latent_v
    lower = state.cutpoints[ds.y - 1]
    upper = state.cutpoints[ds.y]
    state.latent_l = np.asarray(sample_trunc_normal(center, 2.0 * state.latent_v, lower, upper, rng))


def cutpoint_bounds(state: ChainState, spec: ModelSpec, c: int) -> tuple[float, float]:
    """Conditional support (L_c, U_c) for interior cut-point ``c``.

    Lower bound: largest liability in category c, the previous cut-point,
    and the prior floor; upper bound: smallest liability in category c + 1,
    the next cut-point, and the prior ceiling.  Empty categories contribute
    -inf / +inf, so the bound falls back to the neighbours.
    """
    ds = spec.dataset
    idx = ds.category_indices()
    below = idx[c - 1]
    above = idx[c]
    max_below = state.latent_l[below].max() if below.size else -np.inf
    min_above = state.latent_l[above].min() if above.size else np.inf
    lo = max(max_below, state.cutpoints[c - 1], spec.priors.delta_min)
    hi = min(min_above, state.cutpoints[c + 1], spec.priors.delta_max)
    return float(lo), float(hi)


def update_delta(state: ChainState, spec: ModelSpec, rng) -> None:
    """Interior cut-points, swept in increasing order with fresh neighbours."""
    for c in range(1, spec.dataset.num_categories):
        lo, hi = cutpoint_bounds(state, spec, c)
        if not lo < hi:
            raise ChainDivergedError(
                f"cut-point {c} has empty conditional support [{lo}, {hi}]; "
                "liability thresholding was inconsistent before the update"
            )
        state.cutpoints[c] = sample_uniform(lo, hi, rng)


_SWEEP = (update_v, update_beta, update_s, update_lambda_sq, update_alpha, update_phi, update_l, update_delta)


def sweep(state: ChainState, spec: ModelSpec, rng) -> None:
    """One full systematic-scan pass over all eight blocks."""
    for op in _SWEEP:
        op(state, spec, rng)


# ---------------------------------------------------------------------------
# Chain orchestration
# ---------------------------------------------------------------------------

def parameter_names(spec: ModelSpec, retain_alpha: bool = False) -> list[str]:
    ds = spec.dataset
    names = [f"beta_{k + 1}" for k in range(ds.num_covariates)]
    names += [f"delta_{c}" for c in range(1, ds.num_categories)]
    names += ["lambda_sq", "phi"]
    if retain_alpha:
        names += [f"alpha_{i + 1}" for i in range(ds.num_subjects)]
    return names


@dataclass
class PosteriorDraws:
    """Retained post-burn-in draws, chain-major, with equal chain lengths."""

    names: list[str]
    values: np.ndarray       # (rows, len(names))
    chain: np.ndarray        # (rows,) chain index
    iteration: np.ndarray    # (rows,) originating sweep number (1-based)
    theta: float | None = None
    config: SamplerConfig | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.chain = np.asarray(self.chain, dtype=np.intp)
        self.iteration = np.asarray(self.iteration, dtype=np.intp)
        if self.values.shape != (len(self.chain), len(self.names)):
            raise ValueError("draw matrix shape does not match names/chain labels")
        counts = np.bincount(self.chain)
        if counts.size and not np.all(counts == counts[0]):
            raise ValueError("chain segments must have equal length")

    @property
    def num_chains(self) -> int:
        return int(self.chain.max()) + 1 if self.chain.size else 0

    @property
    def chain_length(self) -> int:
        return self.values.shape[0] // max(self.num_chains, 1)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def select(self, names) -> np.ndarray:
        cols = [self.names.index(n) for n in names]
        return self.values[:, cols]

    def by_chain(self, names=None) -> np.ndarray:
        """Draws as a (chains, draws, parameters) array."""
        names = list(names) if names is not None else self.names
        mat = self.select(names)
        m = self.num_chains
        order = np.lexsort((self.iteration, self.chain))
        return mat[order].reshape(m, self.chain_length, len(names))

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "iteration", *self.names])
            for i in range(self.values.shape[0]):
                writer.writerow(
                    [int(self.chain[i]), int(self.iteration[i]), *(f"{v:.17g}" for v in self.values[i])]
                )


def run_chain(spec: ModelSpec, config: SamplerConfig) -> PosteriorDraws:
    """Run the sampler and collect retained draws from every chain."""
    names = parameter_names(spec, config.retain_alpha)
    rows_per_chain = config.retained_per_chain
    total = rows_per_chain * config.num_chains
    values = np.empty((total, len(names)))
    chain_ids = np.empty(total, dtype=np.intp)
    iterations = np.empty(total, dtype=np.intp)

    row = 0
    for chain in range(config.num_chains):
        rng = substream(config.seed, STREAM_CHAIN, chain)
        state = initialize_state(spec, rng, overdispersed=config.overdispersed_starts)
        for t in range(1, config.iterations + 1):
            sweep(state, spec, rng)
            _check_finite(state, chain, t)
            if t > config.burn_in and (t - config.burn_in) % config.thin == 0:
                values[row] = _flatten(state, config.retain_alpha)
                chain_ids[row] = chain
                iterations[row] = t
                row += 1
    return PosteriorDraws(names, values, chain_ids, iterations, theta=spec.theta, config=config)


def _flatten(state: ChainState, retain_alpha: bool) -> np.ndarray:
    parts = [state.beta, state.cutpoints[1:-1], [state.lambda_sq, state.phi]]
    if retain_alpha:
        parts.append(state.alpha)
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])


def _check_finite(state: ChainState, chain: int, t: int) -> None:
    blocks = (
        ("beta", state.beta),
        ("alpha", state.alpha),
        ("latent_l", state.latent_l),
        ("latent_v", state.latent_v),
        ("s", state.s),
        ("lambda_sq", state.lambda_sq),
        ("phi", state.phi),
        ("delta", state.cutpoints[1:-1]),
    )
    for name, block in blocks:
        if not np.all(np.isfinite(block)):
            raise ChainDivergedError(f"chain {chain}: non-finite {name} at sweep {t}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def write_draws(draws: PosteriorDraws, path, spec: ModelSpec | None = None) -> None:
    """Write the draws CSV plus a ``.meta`` sidecar describing the run."""
    path = Path(path)
    draws.to_csv(path)
    meta: dict[str, object] = {"version": __version__}
    if draws.theta is not None:
        meta["theta"] = f"{draws.theta:.17g}"
    if spec is not None:
        pri = spec.priors
        meta.update(
            a1=pri.a1, a2=pri.a2, b1=pri.b1, b2=pri.b2,
            delta_min=pri.delta_min, delta_max=pri.delta_max,
        )
    if draws.config is not None:
        cfg = draws.config
        meta.update(
            iterations=cfg.iterations, burn_in=cfg.burn_in, thin=cfg.thin,
            num_chains=cfg.num_chains, seed=cfg.seed,
            overdispersed_starts=cfg.overdispersed_starts, retain_alpha=cfg.retain_alpha,
        )
    write_kv(path.with_suffix(".meta"), meta)


def read_draws(paths) -> PosteriorDraws:
    """Load one or more draws CSVs; each extra file appends its chains."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    names: list[str] | None = None
    values, chains, iters = [], [], []
    offset = 0
    for path in paths:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[:2] != ["chain", "iteration"]:
                raise SchemaError(f"{path}: not a draws file (expected chain,iteration,... header)")
            if names is None:
                names = header[2:]
            elif header[2:] != names:
                raise SchemaError(f"{path}: parameter columns {header[2:]} do not match {names}")
            local_max = -1
            for rec in reader:
                c = int(rec[0])
                local_max = max(local_max, c)
                chains.append(offset + c)
                iters.append(int(rec[1]))
                values.append([float(v) for v in rec[2:]])
        offset += local_max + 1
    if not values:
        raise SchemaError("draws files contain no rows")
    draws = PosteriorDraws(names, np.array(values), np.array(chains), np.array(iters))
    order = np.lexsort((draws.iteration, draws.chain))
    return replace(draws, values=draws.values[order], chain=draws.chain[order], iteration=draws.iteration[order])
