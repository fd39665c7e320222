from dataclasses import dataclass, replace

import numpy as np

from exceptions import InputError

ERROR_KINDS = ("additive", "additive_on_log10", "proportional")

_LOG_2PI = float(np.log(2.0 * np.pi))
_TINY = 1e-300


@dataclass(frozen=True)
class ErrorModel:
    """
    Residual law y = f + g(f) * e with e ~ N(0, 1).

    additive and additive_on_log10 use g = a; the latter expects a model whose
    observation map already returns log10 values. proportional uses g = b * |f|.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise InputError(f"unknown error model {self.kind!r}; expected one of {', '.join(ERROR_KINDS)}")
        if not (np.isfinite(self.value) and self.value > 0):
            raise InputError(f"error parameter must be finite and > 0 (got {self.value})")

    @property
    def param_name(self) -> str:
        return "b" if self.kind == "proportional" else "a"

    def scale(self, predictions: np.ndarray) -> np.ndarray:
        if self.kind == "proportional":
            return np.maximum(self.value * np.abs(predictions), _TINY)
        return np.full(np.shape(predictions), self.value)

    def normalized_residuals(self, observations: np.ndarray, predictions: np.ndarray) -> np.ndarray:
        """(y - f) / g(f) with the error parameter set to 1."""
        residuals = np.asarray(observations) - np.asarray(predictions)
        if self.kind == "proportional":
            return residuals / np.maximum(np.abs(predictions), _TINY)
        return residuals

    def residual_statistic(self, observations: np.ndarray, predictions: np.ndarray) -> float:
        """Sufficient statistic for the error parameter: sum of squared normalized residuals."""
        return float(np.sum(self.normalized_residuals(observations, predictions) ** 2))

    def log_likelihood(self, observations: np.ndarray, predictions: np.ndarray) -> float:
        """Sum over observations of log N(y; f, g(f)^2)."""
        g = self.scale(predictions)
        r = (np.asarray(observations) - np.asarray(predictions)) / g
        return float(-0.5 * np.sum(r * r) - np.sum(np.log(g)) - 0.5 * len(g) * _LOG_2PI)

    def with_value(self, value: float) -> "ErrorModel":
        return replace(self, value=float(value))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}
