"""Densities and random-variate generators for the ordinal quantile sampler.

Parameterizations are pinned here once so every full conditional reads the
same way everywhere:

* ``gamma(shape, rate)``: density ~ x^(shape-1) exp(-rate x)
* ``inverse_gamma(shape, scale)``: density ~ x^(-shape-1) exp(-scale / x)
* ``gig(nu, rho1, rho2)``: density ~ x^(nu-1) exp{-(rho1^2 / x + rho2^2 x) / 2}
* ``exponential(rate)``, ``uniform(low, high)``, ``logistic(loc, scale)``,
  ``normal(mean, variance)``

All samplers draw from an explicit ``numpy.random.Generator``.  A generator
is single-owner and must not be shared across concurrent callers; distinct
generators may run in parallel.  The density/CDF functions are pure and safe
for unrestricted concurrent use.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

__all__ = [
    "check_loss",
    "sld_density",
    "sld_cdf",
    "sample_gig",
    "sample_trunc_normal",
    "sample_normal",
    "sample_gamma",
    "sample_inverse_gamma",
    "sample_exponential",
    "sample_uniform",
    "sample_logistic",
    "sample_standard",
]

# Interval bounds further than this many SDs into one tail switch the
# truncated-normal sampler from inverse-CDF to exponential rejection.
_TAIL_CUTOFF = 4.0


def _validate_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {theta}")
    return theta


def check_loss(t, theta):
    """Piecewise-linear quantile loss t * (theta - 1{t < 0})."""
    theta = _validate_theta(theta)
    t = np.asarray(t, dtype=float)
    out = t * (theta - (t < 0.0))
    return float(out) if out.ndim == 0 else out


def sld_density(eps, theta):
    """Skewed-Laplace density theta(1-theta) exp{-check_loss(eps, theta)}."""
    theta = _validate_theta(theta)
    out = theta * (1.0 - theta) * np.exp(-check_loss(eps, theta))
    return float(out) if np.ndim(out) == 0 else out


def sld_cdf(eps, theta):
    """Exact CDF of the skewed-Laplace law with unit scale.

    F(e) = theta exp{(1-theta) e} for e <= 0 and
    F(e) = 1 - (1-theta) exp{-theta e} for e > 0, so F(0) = theta.
    """
    theta = _validate_theta(theta)
    eps = np.asarray(eps, dtype=float)
    left = theta * np.exp((1.0 - theta) * np.minimum(eps, 0.0))
    right = 1.0 - (1.0 - theta) * np.exp(-theta * np.maximum(eps, 0.0))
    out = np.where(eps <= 0.0, left, right)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Generalized inverse Gaussian
# ---------------------------------------------------------------------------

def sample_gig(nu, rho1, rho2, rng, size=None):
    """Draw from the GIG law with kernel x^(nu-1) exp{-(rho1^2/x + rho2^2 x)/2}.

    For nu = +1/2 and nu = -1/2 the draw is exact and O(1) through the
    reciprocal identity with the inverse Gaussian law: if Y is inverse
    Gaussian with mean rho2/rho1 and shape rho2^2 then 1/Y has the nu = 1/2
    kernel above, and Y itself with mean rho1/rho2 and shape rho1^2 has the
    nu = -1/2 kernel.  These two orders are the only ones the Gibbs sweep
    uses.  Other orders fall back to a mode-shifted ratio-of-uniforms
    rejection sampler (scalar parameters only).
    """
    nu = float(nu)
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    if not (np.all(rho1 > 0.0) and np.all(rho2 > 0.0)):
        raise ValueError("rho1 and rho2 must be strictly positive")
    if nu == 0.5:
        return 1.0 / rng.wald(rho2 / rho1, rho2 * rho2, size=size)
    if nu == -0.5:
        return rng.wald(rho1 / rho2, rho1 * rho1, size=size)
    if rho1.ndim or rho2.ndim:
        raise ValueError("general-order GIG sampling supports scalar parameters only")
    scale = float(rho1 / rho2)
    omega = float(rho1 * rho2)
    if size is None:
        return scale * _gig_rou_draw(nu, omega, rng)
    return scale * np.array([_gig_rou_draw(nu, omega, rng) for _ in range(int(size))])


def _gig_rou_draw(nu, omega, rng):
    mode, log_kernel, v_lo, v_hi = _gig_rou_region(nu, omega)
    lk_mode = log_kernel(mode)
    while True:
        u = rng.random()
        if u == 0.0:
            continue
        v = v_lo + rng.random() * (v_hi - v_lo)
        x = mode + v / u
        if x <= 0.0:
            continue
        if 2.0 * math.log(u) <= log_kernel(x) - lk_mode:
            return x


def _gig_rou_region(nu, omega):
    # One-parameter form z^(nu-1) exp{-(omega/2)(z + 1/z)} after rescaling
    # by rho1/rho2; acceptance region bounds via the mode-shifted
    # ratio-of-uniforms construction.
    def log_kernel(z):
        return (nu - 1.0) * math.log(z) - 0.5 * omega * (z + 1.0 / z)

    mode = ((nu - 1.0) + math.sqrt((nu - 1.0) ** 2 + omega * omega)) / omega
    lk_mode = log_kernel(mode)

    def d_upper(z):
        # derivative of 2 log(z - mode) + log_kernel(z), z > mode
        return 2.0 / (z - mode) + (nu - 1.0) / z - 0.5 * omega * (1.0 - 1.0 / (z * z))

    hi = mode + max(1.0, mode)
    while d_upper(hi) > 0.0:
        hi = mode + 2.0 * (hi - mode)
    z_hi = brentq(d_upper, mode * (1.0 + 1e-12) + 1e-300, hi)
    v_hi = (z_hi - mode) * math.exp(0.5 * (log_kernel(z_hi) - lk_mode))

    def d_lower(z):
        # derivative of 2 log(mode - z) + log_kernel(z), 0 < z < mode
        return -2.0 / (mode - z) + (nu - 1.0) / z - 0.5 * omega * (1.0 - 1.0 / (z * z))

    lo = 0.5 * mode
    while d_lower(lo) < 0.0:
        lo *= 0.5
    z_lo = brentq(d_lower, lo, mode * (1.0 - 1e-12))
    v_lo = (z_lo - mode) * math.exp(0.5 * (log_kernel(z_lo) - lk_mode))
    return mode, log_kernel, v_lo, v_hi


# ---------------------------------------------------------------------------
# Truncated normal
# ---------------------------------------------------------------------------

def sample_trunc_normal(mean, variance, lower, upper, rng, size=None):
    """Draw from N(mean, variance) restricted to (lower, upper).

    Inverse-CDF sampling in the body of the distribution; once the whole
    interval lies beyond ``_TAIL_CUTOFF`` standard deviations on one side,
    a shifted-exponential rejection sampler takes over, which stays exact
    and NaN-free for arbitrarily remote intervals.  Bounds may be +-inf.
    Scalar inputs give a float; array inputs or ``size`` give an array.
    """
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not np.all(variance > 0.0):
        raise ValueError("variance must be strictly positive")
    if not np.all(lower < upper):
        raise ValueError("lower bound must be strictly below upper bound")

    scalar = size is None and all(a.ndim == 0 for a in (mean, variance, lower, upper))
    shape = np.broadcast_shapes(mean.shape, variance.shape, lower.shape, upper.shape)
    if size is not None:
        shape = (int(size),) if np.isscalar(size) else tuple(size)
    mean, variance, lower, upper = (np.broadcast_to(a, shape) for a in (mean, variance, lower, upper))

    sd = np.sqrt(variance)
    a = (lower - mean) / sd
    b = (upper - mean) / sd

    z = np.empty(shape, dtype=float)
    hi_tail = a > _TAIL_CUTOFF
    lo_tail = b < -_TAIL_CUTOFF
    body = ~(hi_tail | lo_tail)
    if body.any():
        z[body] = _tn_body(a[body], b[body], rng)
    if hi_tail.any():
        z[hi_tail] = _tn_tail(a[hi_tail], b[hi_tail], rng)
    if lo_tail.any():
        z[lo_tail] = -_tn_tail(-b[lo_tail], -a[lo_tail], rng)

    x = mean + sd * z
    x = np.clip(x, np.nextafter(lower, np.inf), np.nextafter(upper, -np.inf))
    return float(x) if scalar and x.ndim == 0 else x


def _tn_body(a, b, rng):
    pa = ndtr(a)
    pb = ndtr(b)
    u = pa + rng.random(a.shape) * (pb - pa)
    u = np.clip(u, 1e-300, np.nextafter(1.0, 0.0))
    return ndtri(u)


def _tn_tail(a, b, rng):
    # Exponential-proposal rejection for N(0,1) restricted to (a, b), a > 0.
    # Proposal: rate alpha exponential shifted to a and cut at b; acceptance
    # exp{-(x - alpha)^2 / 2} with the standard optimal rate.
    alpha = 0.5 * (a + np.sqrt(a * a + 4.0))
    span = -np.expm1(-alpha * (b - a))  # 1 - exp(-alpha (b - a)), b = inf -> 1
    out = np.empty(a.shape, dtype=float)
    todo = np.ones(a.shape, dtype=bool)
    while todo.any():
        k = int(todo.sum())
        u = rng.random(k)
        x = a[todo] - np.log1p(-u * span[todo]) / alpha[todo]
        accept = np.log(rng.random(k) + 1e-320) <= -0.5 * (x - alpha[todo]) ** 2
        hit = todo.copy()
        hit[todo] = accept
        out[hit] = x[accept]
        todo[hit] = False
    return out


# ---------------------------------------------------------------------------
# Standard families with pinned parameterizations
# ---------------------------------------------------------------------------

def _positive(value, name):
    if not np.all(np.asarray(value) > 0.0):
        raise ValueError(f"{name} must be strictly positive")
    return value


def sample_normal(mean, variance, rng, size=None):
    _positive(variance, "variance")
    return rng.normal(mean, np.sqrt(variance), size=size)


def sample_gamma(shape, rate, rng, size=None):
    _positive(shape, "shape")
    _positive(rate, "rate")
    return rng.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_inverse_gamma(shape, scale, rng, size=None):
    _positive(shape, "shape")
    _positive(scale, "scale")
    return 1.0 / rng.gamma(shape, 1.0 / np.asarray(scale, dtype=float), size=size)


def sample_exponential(rate, rng, size=None):
    _positive(rate, "rate")
    return rng.exponential(1.0 / np.asarray(rate, dtype=float), size=size)


def sample_uniform(low, high, rng, size=None):
    if not np.all(np.asarray(low) < np.asarray(high)):
        raise ValueError("uniform requires low < high")
    return rng.uniform(low, high, size=size)


def sample_logistic(loc, scale, rng, size=None):
    _positive(scale, "scale")
    return rng.logistic(loc, scale, size=size)


_STANDARD = {
    "normal": (sample_normal, ("mean", "variance")),
    "gamma": (sample_gamma, ("shape", "rate")),
    "inverse_gamma": (sample_inverse_gamma, ("shape", "scale")),
    "exponential": (sample_exponential, ("rate",)),
    "uniform": (sample_uniform, ("low", "high")),
    "logistic": (sample_logistic, ("loc", "scale")),
}


def sample_standard(dist: str, rng, size=None, **params):
    """Dispatch to a standard family by name with its pinned parameters."""
    try:
        func, names = _STANDARD[dist]
    except KeyError:
        raise ValueError(f"unknown distribution {dist!r}; expected one of {sorted(_STANDARD)}") from None
    if set(params) != set(names):
        raise ValueError(f"{dist} takes parameters {names}, got {tuple(sorted(params))}")
    return func(*(params[n] for n in names), rng, size=size)
