import os
from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


def _float_env(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


class Config:
    APP_NAME = "popident"
    APP_VERSION = "0.4.0"

    # Execution
    WORKERS = _int_env("POPIDENT_WORKERS", os.cpu_count() or 1)
    LOG_LEVEL = os.getenv("POPIDENT_LOG_LEVEL", "INFO").upper()
    OUTPUT_DIR = os.getenv("POPIDENT_OUTPUT_DIR", "runs")

    # ODE tolerances: tight for synthetic data, looser inside the estimator
    SIM_REL_TOL = _float_env("POPIDENT_SIM_REL_TOL", 1e-8)
    SIM_ABS_TOL = _float_env("POPIDENT_SIM_ABS_TOL", 1e-10)
    SAEM_REL_TOL = _float_env("POPIDENT_SAEM_REL_TOL", 1e-6)
    SAEM_ABS_TOL = _float_env("POPIDENT_SAEM_ABS_TOL", 1e-8)

    # Likelihood
    N_IS_SAMPLES = _int_env("POPIDENT_N_IS_SAMPLES", 5000)

    # Analysis defaults
    DEFAULT_TOP_K = 10
    DEFAULT_ALPHA = 0.05
    DEFAULT_N_MC = 10_000

    @classmethod
    def validate(cls):
        """Validate that environment-provided values are usable."""
        problems = []
        if cls.WORKERS < 1:
            problems.append(f"POPIDENT_WORKERS must be >= 1 (got {cls.WORKERS})")
        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            problems.append(f"POPIDENT_LOG_LEVEL is not a logging level: {cls.LOG_LEVEL}")
        for name, value in [
            ("POPIDENT_SIM_REL_TOL", cls.SIM_REL_TOL),
            ("POPIDENT_SIM_ABS_TOL", cls.SIM_ABS_TOL),
            ("POPIDENT_SAEM_REL_TOL", cls.SAEM_REL_TOL),
            ("POPIDENT_SAEM_ABS_TOL", cls.SAEM_ABS_TOL),
        ]:
            if not value > 0:
                problems.append(f"{name} must be > 0 (got {value})")
        if cls.N_IS_SAMPLES < 1:
            problems.append(f"POPIDENT_N_IS_SAMPLES must be >= 1 (got {cls.N_IS_SAMPLES})")
        if problems:
            raise ValueError(f"Invalid environment configuration: {'; '.join(problems)}")
