import logging
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from exceptions import FitError, InputError
from ode import IntegratorConfig
from population import TrialDataset
from utils.rng import substream
from .evaluator import PopulationEvaluator, compose, log_prior
from .statmodel import FitResult, StatModelSpec

logger = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))


class LikelihoodEstimate(NamedTuple):
    minus2LL: float
    mc_se: float
    n_fallbacks: int = 0


def _hessian(fun, x: np.ndarray, f0: float) -> Optional[np.ndarray]:
    """Central finite-difference Hessian; None if any evaluation is not finite."""
    d = len(x)
    h = 1e-4 * np.maximum(1.0, np.abs(x))
    H = np.zeros((d, d))
    for k in range(d):
        e_k = np.zeros(d)
        e_k[k] = h[k]
        f_up, f_down = fun(x + e_k), fun(x - e_k)
        H[k, k] = (f_up - 2.0 * f0 + f_down) / (h[k] * h[k])
        for m in range(k):
            e_m = np.zeros(d)
            e_m[m] = h[m]
            value = (fun(x + e_k + e_m) - fun(x + e_k - e_m) - fun(x - e_k + e_m) + fun(x - e_k - e_m)) / (
                4.0 * h[k] * h[m]
            )
            H[k, m] = H[m, k] = value
    if not np.all(np.isfinite(H)):
        return None
    return H


def _proposal_factor(hessian: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Cholesky factor of the inverse Hessian, or None when it is not a usable covariance."""
    if hessian is None:
        return None
    try:
        cov = np.linalg.inv(hessian)
        return np.linalg.cholesky(0.5 * (cov + cov.T))
    except np.linalg.LinAlgError:
        return None


def _individual_log_evidence(ev: PopulationEvaluator, i: int, fit: FitResult, mu: np.ndarray, R: List[int],
                             omega: np.ndarray, mode: np.ndarray, n_samples: int, rng: np.random.Generator):
    """log p(y_i), its delta-method variance, and whether the prior was used as proposal."""
    err = fit.error_model
    mu_r = mu[R]
    d = len(R)

    def log_joint(z):
        ll, pred = ev.try_loglik(i, compose(mu, R, z), err)
        if pred is None:
            return -np.inf
        return ll + log_prior(z, mu_r, omega)

    def neg_log_joint(z):
        return -log_joint(z)

    f0 = neg_log_joint(mode)
    factor = _proposal_factor(_hessian(neg_log_joint, mode, f0)) if np.isfinite(f0) else None
    fallback = factor is None
    if fallback:
        logger.warning("individual %s: degenerate importance proposal, sampling from the prior", ev.ids[i])
        center, factor = mu_r, np.diag(omega)
    else:
        center = mode

    eps = rng.standard_normal((n_samples, d))
    log_det = float(np.sum(np.log(np.diag(factor))))
    log_w = np.empty(n_samples)
    for s in range(n_samples):
        z = center + factor @ eps[s]
        log_q = -0.5 * float(eps[s] @ eps[s]) - log_det - 0.5 * d * _LOG_2PI
        log_w[s] = log_joint(z) - log_q

    if not np.any(np.isfinite(log_w)):
        raise FitError(f"individual {ev.ids[i]}: every importance sample failed")
    log_evidence = float(logsumexp(log_w) - np.log(n_samples))
    w = np.exp(log_w - np.max(log_w))
    mean_w = w.mean()
    rel_var = float(w.var(ddof=1) / (n_samples * mean_w * mean_w)) if n_samples > 1 else 0.0
    return log_evidence, rel_var, fallback


def log_likelihood_is(
    fit: FitResult,
    data: TrialDataset,
    spec: StatModelSpec,
    n_is_samples: int = 5000,
    seed: int = 0,
    integrator: Optional[IntegratorConfig] = None,
) -> LikelihoodEstimate:
    """
    Observed-data -2 log-likelihood by importance sampling over each individual's random effects.

    The proposal for individual i is a Gaussian centred on its conditional mode with the
    inverse curvature of the log joint density as covariance. Without random effects the
    value is the exact Gaussian residual sum and the standard error is 0.
    """
    if data.is_empty:
        raise InputError("cannot evaluate a likelihood on an empty dataset")
    if fit.param_names != spec.param_names:
        raise InputError(f"fit parameters {fit.param_names} do not match model parameters {spec.param_names}")
    if n_is_samples < 1:
        raise InputError(f"n_is_samples must be >= 1 (got {n_is_samples})")

    ev = PopulationEvaluator(data, spec, integrator)
    mu = np.array([d.location for d in fit.population], dtype=float)
    R = [k for k, d in enumerate(fit.population) if d.is_random]
    omega = np.array([fit.population[k].spread for k in R], dtype=float)

    if not R:
        total = 0.0
        for i in range(len(ev)):
            ll, pred = ev.try_loglik(i, mu, fit.error_model)
            if pred is None:
                raise FitError(f"individual {ev.ids[i]}: model cannot be evaluated at the estimates")
            total += ll
        return LikelihoodEstimate(minus2LL=-2.0 * total, mc_se=0.0)

    total = 0.0
    variance = 0.0
    n_fallbacks = 0
    for i, ind_id in enumerate(ev.ids):
        effects = fit.random_effects.get(ind_id, {})
        mode = np.array([mu[k] + effects.get(fit.population[k].name, 0.0) for k in R])
        log_evidence, rel_var, fallback = _individual_log_evidence(
            ev, i, fit, mu, R, omega, mode, n_is_samples, substream(seed, "importance", ind_id)
        )
        total += log_evidence
        variance += rel_var
        n_fallbacks += int(fallback)

    return LikelihoodEstimate(minus2LL=-2.0 * total, mc_se=2.0 * float(np.sqrt(variance)), n_fallbacks=n_fallbacks)
