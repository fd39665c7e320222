"""Stochastic approximation EM for diagonal-covariance nonlinear mixed-effects models."""
import logging
import time
from typing import Dict, List, Mapping, Optional

import numpy as np
from scipy.optimize import minimize

from exceptions import FitError, InputError
from ode import IntegratorConfig
from population import TrialDataset
from utils.rng import substream
from .error_models import ErrorModel
from .evaluator import PopulationEvaluator, compose, log_prior
from .statmodel import FitResult, SaemConfig, StatModelSpec, initial_population

logger = logging.getLogger(__name__)

N_KERNELS = 3
TARGET_ACCEPTANCE = 0.3
MAX_INIT_DRAWS = 50
MAX_FIXED_EFFECT_STEP = 0.5
FAILURE_LIMIT = 0.5


class _ChainState:
    """Current random effects, predictions and log-likelihoods of every individual."""

    def __init__(self, n: int, n_random: int):
        self.z = np.zeros((n, n_random))
        self.ll = np.full(n, -np.inf)
        self.pred: List[Optional[np.ndarray]] = [None] * n


class _Counters:
    def __init__(self):
        self.proposed = np.zeros(N_KERNELS)
        self.accepted = np.zeros(N_KERNELS)
        self.failed = 0

    @property
    def total_proposed(self) -> float:
        return float(self.proposed.sum())


class SaemRun:
    """One SAEM run: chains, sufficient statistics and the current population estimates."""

    def __init__(self, data: TrialDataset, spec: StatModelSpec, init: Optional[Mapping[str, float]],
                 cfg: SaemConfig, integrator: Optional[IntegratorConfig] = None):
        if data.is_empty:
            raise InputError("cannot fit an empty dataset")
        self.spec = spec
        self.cfg = cfg
        self.ev = PopulationEvaluator(data, spec, integrator)
        self.init_population = initial_population(spec, init)
        self.R = spec.random_indices
        self.F = spec.fixed_effect_indices

        self.mu = np.array([d.location for d in self.init_population], dtype=float)
        self.omega = np.array([self.init_population[k].spread for k in self.R], dtype=float)
        self.err: ErrorModel = spec.error_model
        self.rngs = [substream(cfg.seed, "saem", ind_id) for ind_id in self.ev.ids]

        n = len(self.ev)
        self.chain = _ChainState(n, len(self.R))
        self.comp_scale = np.full(len(self.R), 0.5)
        self.full_scale = 0.5
        self.S1 = np.zeros(len(self.R))
        self.S2 = np.zeros(len(self.R))
        self.S3 = 0.0
        self.trace: List[Dict[str, float]] = []
        self.n_numerical_rejections = 0

    # chain helpers

    def _phi(self, z: np.ndarray) -> np.ndarray:
        return compose(self.mu, self.R, z)

    def _initialize_chains(self):
        mu_r = self.mu[self.R]
        for i, rng in enumerate(self.rngs):
            z = mu_r.copy()
            ll, pred = self.ev.try_loglik(i, self._phi(z), self.err)
            draws = 0
            while not np.isfinite(ll) and draws < MAX_INIT_DRAWS and len(self.R):
                z = mu_r + self.omega * rng.standard_normal(len(self.R))
                ll, pred = self.ev.try_loglik(i, self._phi(z), self.err)
                draws += 1
            if not np.isfinite(ll):
                raise FitError(
                    f"individual {self.ev.ids[i]}: model cannot be evaluated near the initial estimates"
                )
            self.chain.z[i], self.chain.ll[i], self.chain.pred[i] = z, ll, pred

    def _propose(self, i: int, z_new: np.ndarray, kernel: int, counters: _Counters, rng: np.random.Generator,
                 prior_proposal: bool):
        counters.proposed[kernel] += 1
        ll_new, pred_new = self.ev.try_loglik(i, self._phi(z_new), self.err)
        if pred_new is None:
            counters.failed += 1
            return
        log_ratio = ll_new - self.chain.ll[i]
        if not prior_proposal:
            mu_r = self.mu[self.R]
            log_ratio += log_prior(z_new, mu_r, self.omega) - log_prior(self.chain.z[i], mu_r, self.omega)
        if np.log(rng.uniform()) < log_ratio:
            counters.accepted[kernel] += 1
            self.chain.z[i], self.chain.ll[i], self.chain.pred[i] = z_new, ll_new, pred_new

    def _e_step(self) -> _Counters:
        counters = _Counters()
        if not self.R:
            return counters
        mu_r = self.mu[self.R]
        d = len(self.R)
        for i, rng in enumerate(self.rngs):
            for step in range(self.cfg.mcmc_steps):
                kernel = step % N_KERNELS
                if kernel == 0:
                    z_new = mu_r + self.omega * rng.standard_normal(d)
                    self._propose(i, z_new, 0, counters, rng, prior_proposal=True)
                elif kernel == 1:
                    for k in range(d):
                        z_new = self.chain.z[i].copy()
                        z_new[k] += self.comp_scale[k] * self.omega[k] * rng.standard_normal()
                        self._propose(i, z_new, 1, counters, rng, prior_proposal=False)
                else:
                    z_new = self.chain.z[i] + self.full_scale * self.omega * rng.standard_normal(d)
                    self._propose(i, z_new, 2, counters, rng, prior_proposal=False)
        return counters

    def _adapt(self, counters: _Counters):
        for kernel in (1, 2):
            if counters.proposed[kernel] == 0:
                continue
            rate = counters.accepted[kernel] / counters.proposed[kernel]
            factor = 1.0 + 0.4 * (rate - TARGET_ACCEPTANCE)
            if kernel == 1:
                self.comp_scale = np.clip(self.comp_scale * factor, 1e-3, 10.0)
            else:
                self.full_scale = float(np.clip(self.full_scale * factor, 1e-3, 10.0))

    # M-step

    def _population_loglik(self, mu: np.ndarray):
        """Sum of individual log-likelihoods at the current chains with locations `mu`."""
        total = 0.0
        preds = []
        for i in range(len(self.ev)):
            ll, pred = self.ev.try_loglik(i, compose(mu, self.R, self.chain.z[i]), self.err)
            if pred is None:
                return float("-inf"), None
            total += ll
            preds.append(pred)
        return total, preds

    def _update_fixed_effects(self, gamma: float):
        # evaluated under the error parameter just updated, like q_up and q_down
        q0, _ = self._population_loglik(self.mu)
        if not np.isfinite(q0):
            return
        step = np.zeros(len(self.F))
        for j, k in enumerate(self.F):
            h = 1e-4 * max(1.0, abs(self.mu[k]))
            up = self.mu.copy()
            up[k] += h
            down = self.mu.copy()
            down[k] -= h
            q_up, _ = self._population_loglik(up)
            q_down, _ = self._population_loglik(down)
            if not (np.isfinite(q_up) and np.isfinite(q_down)):
                continue
            grad = (q_up - q_down) / (2 * h)
            curv = (q_up - 2 * q0 + q_down) / (h * h)
            raw = -grad / curv if curv < 0 else 0.1 * np.sign(grad)
            step[j] = np.clip(raw, -MAX_FIXED_EFFECT_STEP, MAX_FIXED_EFFECT_STEP)
        if not np.any(step):
            return
        candidate = self.mu.copy()
        candidate[self.F] += gamma * step
        q_new, preds = self._population_loglik(candidate)
        if preds is None:
            logger.warning("fixed-effect update rejected: model cannot be evaluated at the new locations")
            return
        self.mu = candidate
        self.chain.pred = preds

    def _m_step(self, k: int):
        gamma = self.cfg.step_size(k)
        n = len(self.ev)
        z = self.chain.z
        s3 = sum(
            self.err.residual_statistic(ind.observations, pred)
            for ind, pred in zip(self.ev.individuals, self.chain.pred)
        )
        self.S1 = self.S1 + gamma * (z.sum(axis=0) - self.S1)
        self.S2 = self.S2 + gamma * ((z * z).sum(axis=0) - self.S2)
        self.S3 = self.S3 + gamma * (s3 - self.S3)

        burning = k <= self.cfg.n_burnin
        if self.R:
            mu_r = self.S1 / n
            omega = np.sqrt(np.maximum(self.S2 / n - mu_r * mu_r, 0.0))
            if burning:
                omega = np.maximum(omega, self.cfg.annealing * self.omega)
            self.mu[self.R] = mu_r
            self.omega = np.maximum(omega, self.cfg.min_spread)

        n_obs = max(self.ev.n_observations, 1)
        sigma = float(np.sqrt(max(self.S3, 0.0) / n_obs))
        if burning:
            sigma = max(sigma, self.cfg.annealing * self.err.value)
        self.err = self.err.with_value(max(sigma, self.cfg.min_error))

        if self.F:
            self._update_fixed_effects(gamma)

        for i, ind in enumerate(self.ev.individuals):
            self.chain.ll[i] = self.err.log_likelihood(ind.observations, self.chain.pred[i])

    def _record(self, k: int):
        row: Dict[str, float] = {"iteration": k}
        for idx, d in enumerate(self.spec.fitted_params):
            row[f"{d.name}_location"] = float(self.mu[idx])
        for j, k_r in enumerate(self.R):
            row[f"{self.spec.fitted_params[k_r].name}_spread"] = float(self.omega[j])
        row[self.err.param_name] = self.err.value
        self.trace.append(row)

    def run(self) -> "SaemRun":
        self._initialize_chains()
        for k in range(1, self.cfg.n_iterations + 1):
            counters = self._e_step()
            if counters.total_proposed and counters.failed > FAILURE_LIMIT * counters.total_proposed:
                raise FitError(
                    f"iteration {k}: {counters.failed} of {int(counters.total_proposed)} proposals failed numerically"
                )
            if counters.failed:
                logger.debug("iteration %d: %d proposals rejected for numerical reasons", k, counters.failed)
            self.n_numerical_rejections += counters.failed
            self._adapt(counters)
            self._m_step(k)
            self._record(k)
            if logger.isEnabledFor(logging.DEBUG):
                logger.debug("iteration %d: %s", k, self.trace[-1])
        if self.n_numerical_rejections:
            logger.warning("%d proposals were rejected for numerical reasons", self.n_numerical_rejections)
        return self

    def conditional_modes(self) -> np.ndarray:
        """MAP of each individual's random block given the final population estimates."""
        modes = self.chain.z.copy()
        if not self.R:
            return modes
        return np.vstack([
            conditional_mode(self.ev, i, self.mu, self.R, self.omega, self.err, self.chain.z[i], self.cfg.mode_max_iter)
            for i in range(len(self.ev))
        ])


def conditional_mode(ev: PopulationEvaluator, i: int, mu: np.ndarray, random_indices: List[int],
                     omega: np.ndarray, err: ErrorModel, start: np.ndarray, max_iter: int = 400) -> np.ndarray:
    mu_r = mu[random_indices]

    def neg_log_posterior(z):
        ll, pred = ev.try_loglik(i, compose(mu, random_indices, z), err)
        if pred is None:
            return np.inf
        return -(ll + log_prior(z, mu_r, omega))

    start = np.asarray(start, dtype=float)
    result = minimize(
        neg_log_posterior,
        start,
        method="Nelder-Mead",
        options={"maxiter": max_iter * len(start), "xatol": 1e-7, "fatol": 1e-9},
    )
    if not np.isfinite(result.fun) or result.fun > neg_log_posterior(start):
        return start
    return np.asarray(result.x, dtype=float)


def saem_fit(
    data: TrialDataset,
    spec: StatModelSpec,
    init: Optional[Mapping[str, float]] = None,
    cfg: Optional[SaemConfig] = None,
    integrator: Optional[IntegratorConfig] = None,
    start_index: int = 0,
) -> FitResult:
    """
    Estimate population parameters by SAEM.

    Args:
        data: Observations and doses; must be non-empty.
        spec: Structural model, population laws to fit and residual law.
        init: Linear-scale initial typical values; parameters not listed start from `spec`.
        cfg: Iteration counts, step sizes and seed.
        integrator: ODE tolerances used for every prediction.
        start_index: Label carried into the result for multi-start ranking.

    Returns:
        FitResult with conditional-mode individual estimates. The likelihood
        fields stay NaN until `log_likelihood_is` fills them.
    """
    cfg = cfg or SaemConfig()
    started = time.perf_counter()
    run = SaemRun(data, spec, init, cfg, integrator).run()
    modes = run.conditional_modes()

    population = []
    r_pos = {k: j for j, k in enumerate(run.R)}
    for k, d in enumerate(spec.fitted_params):
        spread = float(run.omega[r_pos[k]]) if k in r_pos else 0.0
        population.append(d.with_estimates(run.mu[k], spread))

    individual_estimates: Dict[int, Dict[str, float]] = {}
    random_effects: Dict[int, Dict[str, float]] = {}
    for i, ind_id in enumerate(run.ev.ids):
        phi = compose(run.mu, run.R, modes[i])
        individual_estimates[ind_id] = {d.name: float(d.to_linear(phi[k])) for k, d in enumerate(spec.fitted_params)}
        random_effects[ind_id] = {
            spec.fitted_params[k].name: float(modes[i][j] - run.mu[k]) for j, k in enumerate(run.R)
        }

    logger.info(
        "SAEM start %d finished in %.1fs (%d model evaluations)",
        start_index, time.perf_counter() - started, run.ev.n_evaluations,
    )
    return FitResult(
        population=population,
        error_model=run.err,
        individual_estimates=individual_estimates,
        random_effects=random_effects,
        n_estimated=spec.n_estimated,
        seed=cfg.seed,
        start_index=start_index,
        trace=run.trace,
        n_numerical_rejections=run.n_numerical_rejections,
        init={d.name: float(d.typical_value) for d in run.init_population},
    )
