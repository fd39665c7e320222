"""
Run configuration: a JSON document describing one experiment.

Every stochastic stage has its own seed. Stage seeds left out of the file are derived
from the root `seed`; overriding the root seed re-derives all of them. A run manifest
embeds the resolved configuration and can be passed back in as a config file.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from appendix import DEFAULT_BOX, REPLICATE_COUNTS
from config import Config
from exceptions import ConfigError, PopIdentError
from models import MODEL_NAMES, ModelSpec, ZalypsisPkParams, create_model
from nlme import ErrorModel, SaemConfig, StatModelSpec
from ode import DoseEvent
from population import NoiseModel, PopulationDistribution, StudyDesign, friberg_design, tiv_design
from utils.rng import derive_seed

logger = logging.getLogger(__name__)

_MISSING = object()
STAGES = ("generation", "fitting", "appendix")


# field readers; `path` is the dotted location used in error messages

def _get(obj: dict, key: str, path: str, default: Any = _MISSING) -> Any:
    if key in obj and obj[key] is not None:
        return obj[key]
    if default is _MISSING:
        raise ConfigError(_join(path, key), "is required")
    return default


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _section(obj: dict, key: str, path: str = "", required: bool = False) -> Optional[dict]:
    value = obj.get(key)
    if value is None:
        if required:
            raise ConfigError(_join(path, key), "section is required")
        return None
    if not isinstance(value, dict):
        raise ConfigError(_join(path, key), "must be an object")
    return value


def _number(obj: dict, key: str, path: str, default: Any = _MISSING, minimum: Optional[float] = None,
            integer: bool = False, strict: bool = False) -> Any:
    value = _get(obj, key, path, default)
    if value is default and default is not _MISSING:
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(_join(path, key), f"must be a number (got {value!r})")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(_join(path, key), f"must be an integer (got {value})")
        value = int(value)
    else:
        value = float(value)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        op = ">" if strict else ">="
        raise ConfigError(_join(path, key), f"must be {op} {minimum} (got {value})")
    return value


def _string(obj: dict, key: str, path: str, default: Any = _MISSING, choices: Optional[Tuple[str, ...]] = None) -> str:
    value = _get(obj, key, path, default)
    if not isinstance(value, str):
        raise ConfigError(_join(path, key), f"must be a string (got {value!r})")
    if choices and value not in choices:
        raise ConfigError(_join(path, key), f"must be one of {', '.join(choices)} (got {value!r})")
    return value


def _float_list(obj: dict, key: str, path: str, default: Any = _MISSING) -> List[float]:
    value = _get(obj, key, path, default)
    if not isinstance(value, (list, tuple)):
        raise ConfigError(_join(path, key), "must be a list of numbers")
    out = []
    for k, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{_join(path, key)}[{k}]", f"must be a number (got {item!r})")
        out.append(float(item))
    return out


def _constants(obj: dict, key: str, path: str) -> Dict[str, float]:
    value = obj.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(_join(path, key), "must be an object of name: value")
    return {name: _number(value, name, _join(path, key)) for name in value}


def _wrap(path: str, fn, *args, **kwargs):
    """Call a constructor, reporting its validation errors at `path`."""
    try:
        return fn(*args, **kwargs)
    except PopIdentError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from e
    except (KeyError, TypeError) as e:
        raise ConfigError(path, f"invalid value ({e})") from e


def _distribution(obj: Any, path: str) -> PopulationDistribution:
    if not isinstance(obj, dict):
        raise ConfigError(path, "must be an object")
    name = _string(obj, "name", path)
    transform = _string(obj, "transform", path, default="log")
    spread = _number(obj, "spread", path, default=0.0, minimum=0.0)
    if "location" in obj and "value" in obj:
        raise ConfigError(path, "give either location or value, not both")
    if "location" in obj:
        return _wrap(path, PopulationDistribution, name, transform, _number(obj, "location", path), spread)
    return _wrap(path, PopulationDistribution.from_value, name, transform, _number(obj, "value", path), spread)


def _distributions(obj: dict, key: str, path: str) -> List[PopulationDistribution]:
    items = _get(obj, key, path)
    if not isinstance(items, list) or not items:
        raise ConfigError(_join(path, key), "must be a non-empty list")
    dists = [_distribution(item, f"{_join(path, key)}[{k}]") for k, item in enumerate(items)]
    names = [d.name for d in dists]
    for k, name in enumerate(names):
        if name in names[:k]:
            raise ConfigError(f"{_join(path, key)}[{k}].name", f"duplicate parameter {name!r}")
    return dists


# sections

@dataclass
class PkConfig:
    rates: ZalypsisPkParams
    dose_amount: float
    dose_target: Optional[int] = None
    literal: bool = False

    def to_dict(self) -> dict:
        return {
            "rates": self.rates.to_dict(),
            "dose_amount": self.dose_amount,
            "dose_target": self.dose_target,
            "literal": self.literal,
        }


@dataclass
class GenerationConfig:
    seed: int
    population: List[PopulationDistribution]
    design: StudyDesign
    constants: Dict[str, float] = field(default_factory=dict)
    design_preset: Optional[str] = None

    @property
    def n_individuals(self) -> int:
        return self.design.n_individuals

    def to_dict(self) -> dict:
        design = self.design.to_dict()
        design["preset"] = self.design_preset
        if self.design_preset == "friberg":
            design["dose_days"] = [d.time for d in self.design.doses]
        return {
            "seed": self.seed,
            "n_individuals": self.n_individuals,
            "population": [d.to_dict() for d in self.population],
            "constants": dict(self.constants),
            "design": design,
        }


@dataclass
class FittingConfig:
    seed: int
    parameters: List[PopulationDistribution]
    error_model: ErrorModel
    saem: SaemConfig
    constants: Dict[str, float] = field(default_factory=dict)
    bounds: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    n_starts: int = 100
    n_is_samples: int = Config.N_IS_SAMPLES

    def to_dict(self) -> dict:
        saem = self.saem.to_dict()
        saem.pop("seed")
        return {
            "seed": self.seed,
            "parameters": [d.to_dict() for d in self.parameters],
            "constants": dict(self.constants),
            "error_model": self.error_model.to_dict(),
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "n_starts": self.n_starts,
            "n_is_samples": self.n_is_samples,
            "saem": saem,
        }


@dataclass
class AnalysisConfig:
    top_k: int = Config.DEFAULT_TOP_K
    alpha: float = Config.DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return {"top_k": self.top_k, "alpha": self.alpha}


@dataclass
class AppendixConfig:
    seed: int
    replicates: List[int] = field(default_factory=lambda: list(REPLICATE_COUNTS))
    mu_a: float = 1.0
    mu_b: float = 0.1
    x0: float = 1.0
    sigma2: float = 0.025
    n_points: int = 800
    n_mc: int = Config.DEFAULT_N_MC
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX
    top_fraction: float = 0.05

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "replicates": list(self.replicates),
            "mu_a": self.mu_a,
            "mu_b": self.mu_b,
            "x0": self.x0,
            "sigma2": self.sigma2,
            "n_points": self.n_points,
            "n_mc": self.n_mc,
            "box": [list(self.box[0]), list(self.box[1])],
            "top_fraction": self.top_fraction,
        }


@dataclass
class RunConfig:
    model: str
    seed: int
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    pk: Optional[PkConfig] = None
    generation: Optional[GenerationConfig] = None
    fitting: Optional[FittingConfig] = None
    appendix: Optional[AppendixConfig] = None

    def require(self, section: str):
        value = getattr(self, section)
        if value is None:
            raise ConfigError(section, "section is required for this command")
        return value

    def build_model(self) -> ModelSpec:
        if self.model == "friberg":
            pk = self.require("pk")
            return create_model("friberg", pk=pk.rates, pk_literal=pk.literal, dose_target=pk.dose_target)
        return create_model(self.model)

    def stat_model_spec(self) -> StatModelSpec:
        fitting = self.require("fitting")
        return _wrap(
            "fitting",
            StatModelSpec,
            structural=self.build_model(),
            fitted_params=fitting.parameters,
            error_model=fitting.error_model,
            fixed_constants=fitting.constants,
        )

    def equation_flags(self) -> Dict[str, bool]:
        if self.model != "friberg" or self.pk is None:
            return {}
        return {
            "pk_literal": self.pk.literal,
            "pk_missing_plus_restored": not self.pk.literal,
            "pk_k_psl2_plasma_outflow_added": not self.pk.literal,
            "pk_k_fsl2_routed_to_slow_tissue": not self.pk.literal,
        }

    def to_dict(self) -> dict:
        out: Dict[str, Any] = {"model": self.model, "seed": self.seed, "analysis": self.analysis.to_dict()}
        for name in ("pk", "generation", "fitting", "appendix"):
            section = getattr(self, name)
            if section is not None:
                out[name] = section.to_dict()
        return out

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def seeds(self) -> Dict[str, int]:
        out = {"root": self.seed}
        for stage in STAGES:
            section = getattr(self, stage)
            if section is not None:
                out[stage] = section.seed
        return out


def _stage_seed(obj: Optional[dict], stage: str, root: int, override: bool) -> int:
    if obj is not None and not override and obj.get("seed") is not None:
        return _number(obj, "seed", stage, minimum=0, integer=True)
    return derive_seed(root, stage)


def _parse_pk(obj: dict) -> PkConfig:
    rates_obj = _section(obj, "rates", "pk", required=True)
    rates = _wrap("pk.rates", ZalypsisPkParams.from_mapping,
                  {name: _number(rates_obj, name, "pk.rates") for name in ZalypsisPkParams.__dataclass_fields__})
    target = obj.get("dose_target")
    return PkConfig(
        rates=rates,
        dose_amount=_number(obj, "dose_amount", "pk", minimum=0.0),
        dose_target=None if target is None else _number(obj, "dose_target", "pk", minimum=0, integer=True),
        literal=bool(obj.get("literal", False)),
    )


def _parse_design(obj: dict, n_individuals: int, pk: Optional[PkConfig]) -> Tuple[StudyDesign, Optional[str]]:
    path = "generation.design"
    preset = obj.get("preset")
    if preset == "friberg":
        if pk is None:
            raise ConfigError("pk", "the friberg design needs a pk section with dose_amount")
        target = 5 if pk.dose_target is None else pk.dose_target
        dose_days = _float_list(obj, "dose_days", path, default=[0.0, 21.0, 42.0, 63.0])
        return _wrap(path, friberg_design, pk.dose_amount, target, n_individuals, tuple(dose_days)), preset
    if preset == "tiv":
        noise = _section(obj, "noise", path) or {}
        sd = _number(noise, "value", _join(path, "noise"), default=0.1, minimum=0.0)
        return _wrap(path, tiv_design, n_individuals, sd), preset
    if preset is not None:
        raise ConfigError(_join(path, "preset"), f"unknown preset {preset!r}; expected friberg or tiv")

    horizon = _number(obj, "horizon", path, minimum=0.0)
    obs_times = _float_list(obj, "obs_times", path)
    doses = []
    for k, item in enumerate(obj.get("doses") or []):
        dose_path = f"{path}.doses[{k}]"
        if not isinstance(item, dict):
            raise ConfigError(dose_path, "must be an object")
        doses.append(_wrap(dose_path, DoseEvent, _number(item, "time", dose_path, minimum=0.0),
                           _number(item, "amount", dose_path, minimum=0.0),
                           _number(item, "target", dose_path, minimum=0, integer=True)))
    noise_obj = _section(obj, "noise", path) or {}
    noise = _wrap(_join(path, "noise"), NoiseModel,
                  _string(noise_obj, "kind", _join(path, "noise"), default="none"),
                  _number(noise_obj, "value", _join(path, "noise"), default=0.0, minimum=0.0))
    design = _wrap(path, StudyDesign, horizon, tuple(obs_times), tuple(doses), noise, n_individuals)
    return design, None


def _parse_generation(obj: dict, root: int, override: bool, model: ModelSpec, pk: Optional[PkConfig]) -> GenerationConfig:
    n_individuals = _number(obj, "n_individuals", "generation", default=15, minimum=1, integer=True)
    population = _distributions(obj, "population", "generation")
    constants = _constants(obj, "constants", "generation")
    declared = {d.name for d in population} | set(constants)
    missing = model.missing_params(declared)
    if missing:
        raise ConfigError("generation.population", f"model {model.name} also needs: {', '.join(missing)}")
    unknown = sorted(declared - set(model.param_names))
    if unknown:
        raise ConfigError("generation.population", f"unknown parameters for model {model.name}: {', '.join(unknown)}")
    design, preset = _parse_design(_section(obj, "design", "generation", required=True), n_individuals, pk)
    return GenerationConfig(
        seed=_stage_seed(obj, "generation", root, override),
        population=population,
        design=design,
        constants=constants,
        design_preset=preset,
    )


def _parse_fitting(obj: dict, root: int, override: bool) -> FittingConfig:
    seed = _stage_seed(obj, "fitting", root, override)
    parameters = _distributions(obj, "parameters", "fitting")
    names = {d.name for d in parameters}
    error_obj = _section(obj, "error_model", "fitting", required=True)
    error_model = _wrap("fitting.error_model", ErrorModel,
                        _string(error_obj, "kind", "fitting.error_model"),
                        _number(error_obj, "value", "fitting.error_model", default=0.1))

    bounds: Dict[str, Tuple[float, float]] = {}
    for name, interval in (obj.get("bounds") or {}).items():
        path = f"fitting.bounds.{name}"
        if name not in names:
            raise ConfigError(path, "bounds given for a parameter that is not fitted")
        if not (isinstance(interval, (list, tuple)) and len(interval) == 2):
            raise ConfigError(path, "must be a [low, high] pair")
        lo, hi = _float_list({"v": interval}, "v", path)
        if lo > hi:
            raise ConfigError(path, f"inverted interval [{lo}, {hi}]")
        bounds[name] = (lo, hi)

    saem_obj = _section(obj, "saem", "fitting") or {}
    defaults = SaemConfig()
    saem = _wrap(
        "fitting.saem",
        SaemConfig,
        n_burnin=_number(saem_obj, "n_burnin", "fitting.saem", default=defaults.n_burnin, minimum=1, integer=True),
        n_smoothing=_number(saem_obj, "n_smoothing", "fitting.saem", default=defaults.n_smoothing, minimum=1, integer=True),
        mcmc_steps=_number(saem_obj, "mcmc_steps", "fitting.saem", default=defaults.mcmc_steps, minimum=1, integer=True),
        step_size_exponent=_number(saem_obj, "step_size_exponent", "fitting.saem", default=defaults.step_size_exponent),
        seed=seed,
        annealing=_number(saem_obj, "annealing", "fitting.saem", default=defaults.annealing),
        min_spread=_number(saem_obj, "min_spread", "fitting.saem", default=defaults.min_spread, minimum=0.0),
        min_error=_number(saem_obj, "min_error", "fitting.saem", default=defaults.min_error, minimum=0.0),
        mode_max_iter=_number(saem_obj, "mode_max_iter", "fitting.saem", default=defaults.mode_max_iter, minimum=1, integer=True),
    )
    return FittingConfig(
        seed=seed,
        parameters=parameters,
        error_model=error_model,
        saem=saem,
        constants=_constants(obj, "constants", "fitting"),
        bounds=bounds,
        n_starts=_number(obj, "n_starts", "fitting", default=100, minimum=1, integer=True),
        n_is_samples=_number(obj, "n_is_samples", "fitting", default=Config.N_IS_SAMPLES, minimum=1, integer=True),
    )


def _parse_appendix(obj: dict, root: int, override: bool) -> AppendixConfig:
    path = "appendix"
    replicates = [int(n) for n in _float_list(obj, "replicates", path, default=list(REPLICATE_COUNTS))]
    if not replicates or any(n < 1 for n in replicates):
        raise ConfigError(_join(path, "replicates"), "must list replicate counts >= 1")
    box_value = obj.get("box", [list(DEFAULT_BOX[0]), list(DEFAULT_BOX[1])])
    if not (isinstance(box_value, list) and len(box_value) == 2):
        raise ConfigError(_join(path, "box"), "must be [[a_low, a_high], [b_low, b_high]]")
    box = tuple(tuple(_float_list({"v": side}, "v", f"{path}.box[{k}]")) for k, side in enumerate(box_value))
    for k, side in enumerate(box):
        if len(side) != 2 or not 0 < side[0] <= side[1]:
            raise ConfigError(f"{path}.box[{k}]", "must be a [low, high] interval inside (0, inf)")
    n_mc = _number(obj, "n_mc", path, default=Config.DEFAULT_N_MC, minimum=100, integer=True)
    if n_mc % 2:
        raise ConfigError(_join(path, "n_mc"), f"must be even, draws come in mirrored pairs (got {n_mc})")
    top_fraction = _number(obj, "top_fraction", path, default=0.05, minimum=0.0, strict=True)
    if top_fraction > 1:
        raise ConfigError(_join(path, "top_fraction"), f"must be <= 1 (got {top_fraction})")
    return AppendixConfig(
        seed=_stage_seed(obj, "appendix", root, override),
        replicates=replicates,
        mu_a=_number(obj, "mu_a", path, default=1.0, minimum=0.0, strict=True),
        mu_b=_number(obj, "mu_b", path, default=0.1, minimum=0.0, strict=True),
        x0=_number(obj, "x0", path, default=1.0, minimum=0.0, strict=True),
        sigma2=_number(obj, "sigma2", path, default=0.025, minimum=0.0, strict=True),
        n_points=_number(obj, "n_points", path, default=800, minimum=1, integer=True),
        n_mc=n_mc,
        box=box,
        top_fraction=top_fraction,
    )


def parse_run_config(raw: dict, seed_override: Optional[int] = None) -> RunConfig:
    """Validate a decoded config (or manifest) document."""
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a JSON object")
    if isinstance(raw.get("config"), dict) and "software_version" in raw:
        raw = raw["config"]

    model_name = _string(raw, "model", "", choices=MODEL_NAMES)
    override = seed_override is not None
    root = seed_override if override else _number(raw, "seed", "", default=0, minimum=0, integer=True)
    if root < 0:
        raise ConfigError("seed", f"must be >= 0 (got {root})")

    analysis_obj = _section(raw, "analysis") or {}
    alpha = _number(analysis_obj, "alpha", "analysis", default=Config.DEFAULT_ALPHA, minimum=0.0, strict=True)
    if alpha >= 1:
        raise ConfigError("analysis.alpha", f"must be < 1 (got {alpha})")
    analysis = AnalysisConfig(
        top_k=_number(analysis_obj, "top_k", "analysis", default=Config.DEFAULT_TOP_K, minimum=1, integer=True),
        alpha=alpha,
    )

    pk_obj = _section(raw, "pk")
    pk = _parse_pk(pk_obj) if pk_obj is not None else None
    if model_name == "friberg" and pk is None:
        raise ConfigError("pk", "section is required for the friberg model")

    cfg = RunConfig(model=model_name, seed=root, analysis=analysis, pk=pk)
    model = cfg.build_model()

    gen_obj = _section(raw, "generation")
    if gen_obj is not None:
        cfg.generation = _parse_generation(gen_obj, root, override, model, pk)
    fit_obj = _section(raw, "fitting")
    if fit_obj is not None:
        cfg.fitting = _parse_fitting(fit_obj, root, override)
        cfg.stat_model_spec()
    app_obj = _section(raw, "appendix")
    if app_obj is not None:
        cfg.appendix = _parse_appendix(app_obj, root, override)
    return cfg


def load_run_config(path: Path, seed_override: Optional[int] = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ConfigError("", f"config file not found: {path}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"{path} is not valid JSON (line {e.lineno}: {e.msg})") from e
    cfg = parse_run_config(raw, seed_override)
    logger.info("loaded %s config from %s (hash %s)", cfg.model, path, cfg.config_hash()[:12])
    return cfg
