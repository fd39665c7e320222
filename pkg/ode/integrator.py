"""
Adaptive Dormand-Prince 5(4) integration with bolus dose events.

Integration stops exactly at every dose time and every requested
observation time; doses are applied before the observation recorded at
the same time (right-continuous state).
"""
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from exceptions import DomainError, InputError, ModelEvaluationError, NonConvergenceError

if TYPE_CHECKING:
    from models.base import ModelSpec

logger = logging.getLogger(__name__)

StateVector = np.ndarray

# Butcher tableau (Hairer, Norsett & Wanner, p. 178)
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
)
_B = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
_B_HAT = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)
_E = tuple(b - bh for b, bh in zip(_B, _B_HAT))

# PI controller (Hairer & Wanner's DOPRI5 defaults)
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass(frozen=True)
class DoseEvent:
    """Instantaneous bolus of `amount` into state component `target` at `time`."""

    time: float
    amount: float
    target: int

    def __post_init__(self):
        if not self.amount >= 0:
            raise InputError(f"dose amount must be >= 0 (got {self.amount})")
        if self.target < 0:
            raise InputError(f"dose target must be a compartment index (got {self.target})")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 200_000
    min_step: float = 1e-12

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InputError("integrator tolerances must be > 0")
        if self.max_steps <= 0:
            raise InputError("max_steps must be > 0")
        if not self.min_step > 0:
            raise InputError("min_step must be > 0")

    @classmethod
    def for_simulation(cls) -> "IntegratorConfig":
        return cls(rel_tol=Config.SIM_REL_TOL, abs_tol=Config.SIM_ABS_TOL)

    @classmethod
    def for_estimation(cls) -> "IntegratorConfig":
        return cls(rel_tol=Config.SAEM_REL_TOL, abs_tol=Config.SAEM_ABS_TOL)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observations: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


def apply_dose(state: StateVector, dose: DoseEvent) -> StateVector:
    """Return a copy of `state` with the dose added to its target compartment."""
    if not 0 <= dose.target < len(state):
        raise IndexError(f"dose target {dose.target} out of range for state of dimension {len(state)}")
    jumped = np.array(state, dtype=float, copy=True)
    jumped[dose.target] += dose.amount
    return jumped


class _DormandPrince:
    """Stepper state shared across the segments of one integration."""

    def __init__(self, fun: Callable[[float, np.ndarray], np.ndarray], cfg: IntegratorConfig):
        self.fun = fun
        self.cfg = cfg
        self.n_steps = 0
        self.h: Optional[float] = None
        self.err_prev = 1e-4
        self.k1: Optional[np.ndarray] = None

    def restart(self):
        """Forget step history after a discontinuity."""
        self.h = None
        self.err_prev = 1e-4
        self.k1 = None

    def _eval(self, t: float, y: np.ndarray) -> np.ndarray:
        try:
            dy = np.asarray(self.fun(t, y), dtype=float)
        except DomainError as exc:
            raise ModelEvaluationError(f"right-hand side rejected state at t={t:g}: {exc}", time=t) from exc
        return dy

    def _scale(self, y: np.ndarray, y_other: np.ndarray) -> np.ndarray:
        return self.cfg.abs_tol + self.cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_other))

    def _initial_step(self, t: float, y: np.ndarray, f0: np.ndarray, remaining: float) -> float:
        sc = self._scale(y, y)
        d0 = np.sqrt(np.mean((y / sc) ** 2))
        d1 = np.sqrt(np.mean((f0 / sc) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, remaining)
        y1 = y + h0 * f0
        try:
            f1 = self._eval(t + h0, y1)
        except ModelEvaluationError:
            return max(h0 * 1e-3, self.cfg.min_step)
        if not np.all(np.isfinite(f1)):
            return max(h0 * 1e-3, self.cfg.min_step)
        d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
        return min(100.0 * h0, h1, remaining)

    def advance(self, t: float, y: np.ndarray, t_end: float) -> np.ndarray:
        """Integrate from t to exactly t_end."""
        if t_end <= t:
            return y
        if self.k1 is None:
            self.k1 = self._eval(t, y)
            if not np.all(np.isfinite(self.k1)):
                raise ModelEvaluationError(f"non-finite right-hand side at t={t:g}", time=t)
        if self.h is None:
            self.h = self._initial_step(t, y, self.k1, t_end - t)

        while t < t_end:
            if self.n_steps >= self.cfg.max_steps:
                raise NonConvergenceError(
                    f"max_steps={self.cfg.max_steps} exceeded at t={t:g}", time=t
                )
            self.n_steps += 1

            remaining = t_end - t
            clipped = self.h >= remaining * (1.0 - 1e-12)
            h = remaining if clipped else self.h

            y_new, k7, err = self._try_step(t, y, h)
            if err <= 1.0:
                t = t_end if clipped else t + h
                y = y_new
                self.k1 = k7
                fac = _SAFETY * err ** (-_ALPHA) * self.err_prev ** _BETA if err > 0 else _FAC_MAX
                fac = min(_FAC_MAX, max(_FAC_MIN, fac))
                self.err_prev = max(err, 1e-4)
                self.h = max(self.h, h * fac) if clipped else h * fac
            else:
                fac = max(_FAC_MIN, _SAFETY * err ** (-_ALPHA)) if np.isfinite(err) else 0.25
                self.h = h * fac
                if self.h < self.cfg.min_step:
                    raise NonConvergenceError(
                        f"step size underflow (h={self.h:.3g}) at t={t:g}", time=t
                    )
        return y

    def _try_step(self, t: float, y: np.ndarray, h: float) -> Tuple[np.ndarray, Optional[np.ndarray], float]:
        k = [self.k1]
        for stage in range(1, 6):
            y_stage = y + h * sum(a * k[j] for j, a in enumerate(_A[stage]) if a != 0.0)
            if not np.all(np.isfinite(y_stage)):
                return y, None, np.inf
            try:
                k_stage = self._eval(t + _C[stage] * h, y_stage)
            except ModelEvaluationError:
                # the trial state left the model's domain; retry with a smaller step
                return y, None, np.inf
            if not np.all(np.isfinite(k_stage)):
                _reject_nan(k_stage, t + _C[stage] * h)
                return y, None, np.inf
            k.append(k_stage)

        y_new = y + h * sum(b * k[j] for j, b in enumerate(_B[:6]) if b != 0.0)
        if not np.all(np.isfinite(y_new)):
            return y, None, np.inf
        try:
            k7 = self._eval(t + h, y_new)
        except ModelEvaluationError:
            return y, None, np.inf
        if not np.all(np.isfinite(k7)):
            _reject_nan(k7, t + h)
            return y, None, np.inf
        k.append(k7)

        err_vec = h * sum(e * k[j] for j, e in enumerate(_E) if e != 0.0)
        err = float(np.sqrt(np.mean((err_vec / self._scale(y, y_new)) ** 2)))
        return y_new, k7, err


def _reject_nan(derivative: np.ndarray, t: float):
    """A NaN derivative at a finite state is a model fault; overflow to inf is retried with a smaller step."""
    if np.any(np.isnan(derivative)):
        raise ModelEvaluationError(f"NaN right-hand side at t={t:g}", time=t)


def _check_inputs(init: np.ndarray, span: Tuple[float, float], doses: Sequence[DoseEvent], obs_times: np.ndarray):
    t0, t1 = span
    if not t1 >= t0:
        raise InputError(f"invalid span {span}")
    if not np.all(np.isfinite(init)):
        raise InputError("initial state must be finite")
    if len(obs_times):
        if obs_times[0] < t0 or obs_times[-1] > t1:
            raise InputError(f"observation times must lie within span {span}")
        if np.any(np.diff(obs_times) <= 0):
            raise InputError("observation times must be strictly increasing")
    dose_times = [d.time for d in doses]
    if any(b < a for a, b in zip(dose_times, dose_times[1:])):
        raise InputError("doses must be sorted by time")
    if any(not t0 <= t <= t1 for t in dose_times):
        raise InputError(f"dose times must lie within span {span}")


def integrate(
    model: "ModelSpec",
    params: Any,
    init: StateVector,
    span: Tuple[float, float],
    doses: Sequence[DoseEvent],
    obs_times: Sequence[float],
    cfg: Optional[IntegratorConfig] = None,
) -> Trajectory:
    """
    Solve the model's ODE system and sample it at `obs_times`.

    Args:
        model: Structural model providing `bind`, `rhs` and `observe`.
        params: Parameter mapping (or an already bound parameter object).
        init: Initial state at span[0].
        span: (t0, t1) simulation interval.
        doses: Bolus events sorted by time.
        obs_times: Strictly increasing times within span.
        cfg: Tolerances and step limits.

    Returns:
        Trajectory at exactly the requested times.
    """
    cfg = cfg or IntegratorConfig()
    obs = np.asarray(obs_times, dtype=float)
    y = np.array(init, dtype=float, copy=True)
    dim = len(model.state_names)
    if y.shape != (dim,):
        raise InputError(f"initial state has shape {y.shape}, model {model.name} expects ({dim},)")
    _check_inputs(y, span, doses, obs)

    if len(obs) == 0:
        return Trajectory(times=obs, states=np.empty((0, dim)), observations=np.empty(0))

    bound = model.bind(params)
    stepper = _DormandPrince(lambda t, state: model.rhs(t, state, bound), cfg)

    states: List[np.ndarray] = []
    t = float(span[0])
    pending = list(doses)
    for t_obs in obs:
        while pending and pending[0].time <= t_obs:
            t_dose = pending[0].time
            y = stepper.advance(t, y, t_dose)
            t = max(t, t_dose)
            while pending and pending[0].time == t_dose:
                y = apply_dose(y, pending.pop(0))
            stepper.restart()
        y = stepper.advance(t, y, float(t_obs))
        t = float(t_obs)
        states.append(y.copy())

    state_matrix = np.vstack(states)
    observations = np.asarray(model.observe(state_matrix, bound), dtype=float)
    logger.debug("integrated %s over %d observation times in %d steps", model.name, len(obs), stepper.n_steps)
    return Trajectory(times=obs, states=state_matrix, observations=observations)
