"""
File formats for datasets, fits, comparison reports and landscapes.

Floats are written with their shortest round-trip decimal form and read back with
round-trip precision, so a parse then write cycle reproduces files byte for byte.
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from exceptions import DatasetSchemaError, InputError, StorageError
from identifiability import CLUSTER_RULE, ComparisonReport, DensitySpec
from nlme import ErrorModel, FitResult, StartFailure
from ode import Trajectory
from population import DATASET_COLUMNS, Individual, PopulationDistribution, TrialDataset

logger = logging.getLogger(__name__)

FIT_DIR_PREFIX = "fit_"


def init_output_dir(path: Path) -> Path:
    """Create the output directory (and parents) if needed."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"cannot create output directory {path}: {e}") from e
    return path


def format_float(value) -> str:
    """Shortest decimal string that parses back to the same double; empty for NaN."""
    if value is None:
        return ""
    x = float(value)
    if math.isnan(x):
        return ""
    return repr(x)


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    out = frame.copy()
    for col in out.columns:
        if pd.api.types.is_float_dtype(out[col]):
            out[col] = out[col].map(format_float)
    try:
        out.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    logger.debug("wrote %s", path)
    return Path(path)


def _read_csv(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    return pd.read_csv(path, float_precision="round_trip")


def _write_json(payload: dict, path: Path) -> Path:
    try:
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    return Path(path)


def _read_json(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


# datasets

def save_dataset(dataset: TrialDataset, path: Path) -> Path:
    frame = dataset.to_frame()
    frame["TIME"] = frame["TIME"].astype(float)
    frame["Y"] = frame["Y"].astype(float)
    frame["AMT"] = frame["AMT"].astype(float)
    return _write_csv(frame, path)


def load_dataset(path: Path, dose_target: int = 0) -> TrialDataset:
    frame = _read_csv(path)
    missing = [c for c in DATASET_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetSchemaError(f"{path}: missing column {missing[0]}", column=missing[0])
    return TrialDataset.from_frame(frame, dose_target=dose_target, meta={"source": str(path)})


def save_truth(individuals: Sequence[Individual], path: Path, constants: Optional[Mapping[str, float]] = None) -> Path:
    """True individual parameters (linear scale), shared constants repeated on every row."""
    rows = []
    for ind in individuals:
        row = {"ID": ind.id}
        row.update({name: float(v) for name, v in ind.params.items()})
        row.update({name: float(v) for name, v in (constants or {}).items()})
        rows.append(row)
    return _write_csv(pd.DataFrame(rows), path)


def save_trajectories(trajectories: Mapping[int, Trajectory], state_names: Sequence[str], path: Path) -> Path:
    frames = []
    for ind_id in sorted(trajectories):
        traj = trajectories[ind_id]
        frame = pd.DataFrame(np.asarray(traj.states, dtype=float), columns=list(state_names))
        frame.insert(0, "TIME", np.asarray(traj.times, dtype=float))
        frame.insert(0, "ID", ind_id)
        frame["OBS"] = np.asarray(traj.observations, dtype=float)
        frames.append(frame)
    return _write_csv(pd.concat(frames, ignore_index=True), path)


# fits

def fit_dir_name(fit: FitResult) -> str:
    return f"{FIT_DIR_PREFIX}{fit.start_index:04d}"


def save_fit(fit: FitResult, directory: Path, predictions: Optional[pd.DataFrame] = None) -> Path:
    directory = init_output_dir(directory)
    _write_csv(
        pd.DataFrame(
            [d.to_dict() for d in fit.population], columns=["name", "transform", "location", "spread"]
        ),
        directory / "population.csv",
    )
    rows = []
    for ind_id in fit.individual_ids():
        row = {"ID": ind_id}
        row.update({name: float(fit.individual_estimates[ind_id][name]) for name in fit.param_names})
        rows.append(row)
    _write_csv(pd.DataFrame(rows, columns=["ID"] + fit.param_names), directory / "individuals.csv")
    _write_json(
        {
            "minus2LL": fit.minus2LL,
            "mc_se": fit.mc_se,
            "aic": fit.aic,
            "n_estimated": fit.n_estimated,
            "seed": fit.seed,
            "start_index": fit.start_index,
            "error_model": fit.error_model.to_dict(),
            "n_numerical_rejections": fit.n_numerical_rejections,
            "init": fit.init,
        },
        directory / "ll.json",
    )
    if fit.trace:
        _write_csv(pd.DataFrame(fit.trace), directory / "trace.csv")
    if predictions is not None:
        _write_csv(predictions, directory / "predictions.csv")
    return directory


def load_fit(directory: Path) -> FitResult:
    directory = Path(directory)
    pop_frame = _read_csv(directory / "population.csv")
    population = [
        PopulationDistribution(str(r["name"]), str(r["transform"]), float(r["location"]), float(r["spread"]))
        for _, r in pop_frame.iterrows()
    ]
    ind_frame = _read_csv(directory / "individuals.csv")
    ll = _read_json(directory / "ll.json")

    estimates: Dict[int, Dict[str, float]] = {}
    effects: Dict[int, Dict[str, float]] = {}
    for _, r in ind_frame.iterrows():
        ind_id = int(r["ID"])
        estimates[ind_id] = {d.name: float(r[d.name]) for d in population}
        effects[ind_id] = {
            d.name: float(d.to_transformed(estimates[ind_id][d.name]) - d.location) for d in population if d.is_random
        }
    trace: List[Dict[str, float]] = []
    if (directory / "trace.csv").exists():
        trace = _read_csv(directory / "trace.csv").to_dict(orient="records")

    def _float(key):
        value = ll.get(key)
        return float("nan") if value is None else float(value)

    return FitResult(
        population=population,
        error_model=ErrorModel(**ll["error_model"]),
        individual_estimates=estimates,
        random_effects=effects,
        n_estimated=int(ll["n_estimated"]),
        seed=int(ll["seed"]),
        start_index=int(ll["start_index"]),
        minus2LL=_float("minus2LL"),
        mc_se=_float("mc_se"),
        aic=_float("aic"),
        trace=trace,
        n_numerical_rejections=int(ll.get("n_numerical_rejections", 0)),
        init=dict(ll.get("init", {})),
    )


def save_fit_summary(fits: Sequence[FitResult], path: Path) -> Path:
    rows = []
    for rank, fit in enumerate(fits, start=1):
        row = {"rank": rank, "dir": fit_dir_name(fit)}
        row.update(fit.summary())
        rows.append(row)
    return _write_csv(pd.DataFrame(rows), path)


def save_best(fits: Sequence[FitResult], top_k: int, path: Path) -> Path:
    best = [
        {"rank": rank, "dir": fit_dir_name(fit), "start_index": fit.start_index, "aic": fit.aic, "minus2LL": fit.minus2LL}
        for rank, fit in enumerate(fits[:top_k], start=1)
    ]
    return _write_json({"top_k": top_k, "n_completed": len(fits), "fits": best}, path)


def save_failures(failures: Sequence[StartFailure], path: Path) -> Path:
    return _write_json(
        {"failures": [{"start_index": f.start_index, "seed": f.seed, "error": f.error} for f in failures]}, path
    )


def load_fits(fits_dir: Path, top_k: Optional[int] = None) -> List[FitResult]:
    """Fits listed in best.json (in rank order), or every fit directory ranked by AIC."""
    fits_dir = Path(fits_dir)
    if not fits_dir.is_dir():
        raise InputError(f"fits directory not found: {fits_dir}")
    best_path = fits_dir / "best.json"
    if best_path.exists() and (top_k is None or top_k <= len(_read_json(best_path)["fits"])):
        dirs = [fits_dir / entry["dir"] for entry in _read_json(best_path)["fits"]]
        fits = [load_fit(d) for d in dirs]
    else:
        dirs = sorted(p for p in fits_dir.iterdir() if p.is_dir() and p.name.startswith(FIT_DIR_PREFIX))
        fits = sorted((load_fit(d) for d in dirs), key=lambda f: (f.aic, f.start_index))
    return fits[:top_k] if top_k is not None else fits


# comparison reports

def _matrix_frame(matrix: np.ndarray, labels: Sequence[int]) -> pd.DataFrame:
    names = [f"fit_{label}" for label in labels]
    frame = pd.DataFrame(np.asarray(matrix, dtype=float), columns=names)
    frame.insert(0, "fit", names)
    return frame


def save_report(report: ComparisonReport, directory: Path) -> Path:
    directory = init_output_dir(directory)
    labels = report.fit_labels
    rows = []
    clusters = {}
    for name, comp in report.parameters.items():
        param_dir = init_output_dir(directory / name)
        _write_csv(_matrix_frame(comp.ks_p, labels), param_dir / "ks_p.csv")
        _write_csv(_matrix_frame(comp.ks_D, labels), param_dir / "ks_D.csv")
        _write_csv(_matrix_frame(comp.overlap, labels), param_dir / "overlap.csv")
        cluster_of = {i: c for c, members in enumerate(comp.clusters) for i in members}
        clusters[name] = [[labels[i] for i in members] for members in comp.clusters]
        for i, j in comp.pairs():
            rows.append({
                "parameter": name,
                "fit_i": labels[i],
                "fit_j": labels[j],
                "ks_D": float(comp.ks_D[i, j]),
                "ks_p": float(comp.ks_p[i, j]),
                "overlap": float(comp.overlap[i, j]),
                "ks_significant": bool(comp.ks_p[i, j] <= report.alpha),
                "ks_significant_bonferroni": bool(comp.ks_p[i, j] <= report.bonferroni_alpha),
                "same_cluster": cluster_of[i] == cluster_of[j],
                "ks_method": comp.ks_method,
            })
    _write_csv(pd.DataFrame(rows), directory / "report.csv")
    _write_csv(pd.DataFrame(report.summary()), directory / "summary.csv")
    _write_json(
        {
            "rule": CLUSTER_RULE,
            "alpha": report.alpha,
            "bonferroni_alpha": report.bonferroni_alpha,
            "fit_labels": list(labels),
            "clusters": clusters,
        },
        directory / "clusters.json",
    )
    if report.fixed_effects:
        fixed = pd.DataFrame({"fit": labels, **{k: v for k, v in report.fixed_effects.items()}})
        _write_csv(fixed, directory / "fixed_effects.csv")
    return directory


def violin_data(fits: Sequence[FitResult], parameters: Iterable[str]) -> pd.DataFrame:
    """Individual estimates per fit on the transformed scale, one row per (parameter, fit, ID)."""
    rows = []
    for name in parameters:
        for fit in fits:
            for ind_id, value in zip(fit.individual_ids(), fit.transformed_estimates(name)):
                rows.append({"parameter": name, "fit": fit.start_index, "ID": ind_id, "value": float(value)})
    return pd.DataFrame(rows, columns=["parameter", "fit", "ID", "value"])


def save_violin_data(violins: pd.DataFrame, path: Path) -> Path:
    return _write_csv(violins, path)


def density_curves(fits: Sequence[FitResult], parameters: Iterable[str], n_grid: int = 201) -> pd.DataFrame:
    """Population densities per fit on a shared transformed-scale grid per parameter."""
    frames = []
    for name in parameters:
        densities = [DensitySpec.from_distribution(fit.distribution(name)) for fit in fits]
        lo = min(d.location - 4 * d.spread for d in densities)
        hi = max(d.location + 4 * d.spread for d in densities)
        grid = np.linspace(lo, hi, n_grid)
        for fit, d in zip(fits, densities):
            frames.append(pd.DataFrame({"parameter": name, "fit": fit.start_index, "z": grid, "density": d.pdf(grid)}))
    if not frames:
        return pd.DataFrame(columns=["parameter", "fit", "z", "density"])
    return pd.concat(frames, ignore_index=True)


def save_density_curves(curves: pd.DataFrame, path: Path) -> Path:
    return _write_csv(curves, path)


# appendix landscapes

def save_expgrowth_data(data, path: Path) -> Path:
    """Replicate log-observations in long form, with the generating a_i and b_i when known."""
    n, m = data.y.shape
    frame = pd.DataFrame({
        "replicate": np.repeat(np.arange(1, n + 1), m),
        "TIME": np.tile(data.times, n),
        "Y": data.y.ravel(),
    })
    if data.a is not None and data.b is not None:
        frame["a"] = np.repeat(np.asarray(data.a, dtype=float), m)
        frame["b"] = np.repeat(np.asarray(data.b, dtype=float), m)
    return _write_csv(frame, path)


def save_landscape(samples, path: Path) -> Path:
    frame = pd.DataFrame(
        {
            "mu_a": [s.mu_a for s in samples],
            "mu_b": [s.mu_b for s in samples],
            "loglik": [s.loglik for s in samples],
            "mc_se": [s.mc_se for s in samples],
            "rank": [s.rank for s in samples],
            "top": [s.top for s in samples],
        }
    )
    return _write_csv(frame, path)


def load_landscape(path: Path) -> pd.DataFrame:
    return _read_csv(path)


# misc

def save_table(frame: pd.DataFrame, path: Path) -> Path:
    return _write_csv(frame, path)


def save_manifest(manifest: dict, path: Path) -> Path:
    return _write_json(manifest, path)


def save_json(payload: dict, path: Path) -> Path:
    return _write_json(payload, path)


def save_text(text: str, path: Path) -> Path:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    return Path(path)
