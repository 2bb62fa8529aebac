"""Model specification and per-chain state for ordinal quantile regression.

The latent-variable model: each observation has an unobserved continuous
liability whose conditional quantile at the target level is a subject
random effect plus a linear predictor.  Ordered cut-points slice the
liability scale into the observed categories; the liability error follows
the skewed-Laplace law, handled through its normal scale-mixture form with
a per-observation exponential mixing variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .data import OrdinalDataset
from .distributions import sample_trunc_normal
from .errors import ChainDivergedError, ConfigError

# Floor for the rho1^2 argument of latent-scale GIG draws; avoids the
# degenerate zero-residual boundary case while staying below sampling noise.
RHO1_SQ_FLOOR = 1e-12

__all__ = ["Priors", "ModelSpec", "ChainState", "initialize_state", "validate_state", "category_probability"]


@dataclass(frozen=True)
class Priors:
    """Hyperparameters: gamma(a1, a2) on the shrinkage rate squared,
    inverse-gamma(b1, b2) on the random-effect variance, and a uniform
    order-statistics prior for interior cut-points on [delta_min, delta_max].
    """

    a1: float = 0.1
    a2: float = 0.1
    b1: float = 0.1
    b2: float = 0.1
    delta_min: float = -10.0
    delta_max: float = 10.0

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"prior hyperparameter {name} must be positive")
        if not self.delta_min < self.delta_max:
            raise ConfigError("delta_min must be strictly below delta_max")
        if not (np.isfinite(self.delta_min) and np.isfinite(self.delta_max)):
            raise ConfigError("cut-point support bounds must be finite")


@dataclass(frozen=True)
class ModelSpec:
    theta: float
    dataset: OrdinalDataset
    priors: Priors = field(default_factory=Priors)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"quantile level must lie in (0, 1), got {self.theta}")

    @property
    def xi(self) -> float:
        """Mixture location factor 1 - 2 theta."""
        return 1.0 - 2.0 * self.theta

    @property
    def zeta(self) -> float:
        """Mixing-variable exponential rate theta (1 - theta)."""
        return self.theta * (1.0 - self.theta)


@dataclass
class ChainState:
    """One complete draw of every parameter and latent block.

    ``cutpoints`` has length C + 1 with fixed -inf / +inf endpoints; the
    C - 1 interior values are strictly increasing within the prior support.
    """

    beta: np.ndarray       # (p,)
    alpha: np.ndarray      # (N,)
    latent_l: np.ndarray   # (n_obs,) liabilities
    latent_v: np.ndarray   # (n_obs,) mixing variables, > 0
    s: np.ndarray          # (p,) coefficient prior scales, > 0
    lambda_sq: float       # shrinkage rate squared, > 0
    phi: float             # random-effect variance, > 0
    cutpoints: np.ndarray  # (C + 1,)

    def copy(self) -> "ChainState":
        return ChainState(
            self.beta.copy(), self.alpha.copy(), self.latent_l.copy(), self.latent_v.copy(),
            self.s.copy(), self.lambda_sq, self.phi, self.cutpoints.copy(),
        )


def interior_cutpoints(num_categories: int, delta_min: float, delta_max: float) -> np.ndarray:
    """C - 1 equally spaced points strictly inside (delta_min, delta_max)."""
    c = np.arange(1, num_categories)
    grid = delta_min + (delta_max - delta_min) * c / num_categories
    if not (np.all(np.diff(grid) > 0.0) and grid[0] > delta_min and grid[-1] < delta_max):
        raise ConfigError(
            f"cannot place {num_categories - 1} distinct cut-points inside ({delta_min}, {delta_max})"
        )
    return grid


def initialize_state(spec: ModelSpec, rng, overdispersed: bool = False) -> ChainState:
    """Deterministic neutral start; ``overdispersed`` perturbs the
    coefficients with N(0, 4) noise for multi-chain diagnostics."""
    ds = spec.dataset
    p, N, C = ds.num_covariates, ds.num_subjects, ds.num_categories
    beta = np.zeros(p)
    if overdispersed:
        beta = beta + rng.normal(0.0, 2.0, size=p)
    alpha = np.zeros(N)
    cuts = np.concatenate([[-np.inf], interior_cutpoints(C, spec.priors.delta_min, spec.priors.delta_max), [np.inf]])
    v = rng.exponential(1.0 / spec.zeta, size=ds.num_observations)
    center = ds.x @ beta + alpha[ds.subject_index] + spec.xi * v
    l = sample_trunc_normal(center, 2.0 * v, cuts[ds.y - 1], cuts[ds.y], rng)
    return ChainState(beta, alpha, np.asarray(l), v, np.ones(p), 1.0, 1.0, cuts)


def validate_state(state: ChainState, spec: ModelSpec) -> None:
    """Raise ``ChainDivergedError`` if any state invariant is broken."""
    ds = spec.dataset
    checks = [
        (np.isfinite(state.beta).all(), "coefficients must be finite"),
        (np.isfinite(state.alpha).all(), "random effects must be finite"),
        (np.isfinite(state.latent_l).all(), "liabilities must be finite"),
        (np.all(state.latent_v > 0.0) and np.isfinite(state.latent_v).all(), "mixing variables must be positive"),
        (np.all(state.s > 0.0) and np.isfinite(state.s).all(), "coefficient scales must be positive"),
        (state.lambda_sq > 0.0 and np.isfinite(state.lambda_sq), "shrinkage rate must be positive"),
        (state.phi > 0.0 and np.isfinite(state.phi), "random-effect variance must be positive"),
        (state.cutpoints[0] == -np.inf and state.cutpoints[-1] == np.inf, "cut-point endpoints must be fixed"),
        (np.all(np.diff(state.cutpoints) > 0.0), "cut-points must be strictly increasing"),
        (
            np.all(state.cutpoints[1:-1] >= spec.priors.delta_min)
            and np.all(state.cutpoints[1:-1] <= spec.priors.delta_max),
            "interior cut-points must respect the prior support",
        ),
        (
            np.all(state.cutpoints[ds.y - 1] < state.latent_l) and np.all(state.latent_l <= state.cutpoints[ds.y]),
            "liabilities must lie in their category intervals",
        ),
    ]
    for ok, message in checks:
        if not ok:
            raise ChainDivergedError(message)


def category_probability(state: ChainState, spec: ModelSpec, obs_index: int) -> np.ndarray:
    """Conditional category probabilities for one observation.

    Given the mixing variable, the liability is Gaussian, so each
    probability is a difference of standard-normal CDF values at the
    standardized cut-points.
    """
    ds = spec.dataset
    i = int(obs_index)
    m = ds.x[i] @ state.beta + state.alpha[ds.subject_index[i]] + spec.xi * state.latent_v[i]
    sd = np.sqrt(2.0 * state.latent_v[i])
    z = (state.cutpoints - m) / sd
    probs = np.diff(ndtr(z))
    return probs
