"""SVG figures rendered from the tidy plot-data frames written by storage."""
import logging
from pathlib import Path
from typing import Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from exceptions import StorageError  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no timestamp so identical inputs give identical files
plt.rcParams["svg.hashsalt"] = "popident"
_SVG_METADATA = {"Date": None}


def _save(fig, path: Path) -> Path:
    try:
        fig.savefig(path, format="svg", bbox_inches="tight", metadata=_SVG_METADATA)
    except OSError as e:
        raise StorageError(f"cannot write {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.debug("wrote %s", path)
    return Path(path)


def plot_density_curves(curves: pd.DataFrame, parameter: str, path: Path) -> Path:
    """Population density of one parameter per fit, transformed scale."""
    fig, ax = plt.subplots(figsize=(6, 4))
    subset = curves[curves["parameter"] == parameter]
    for fit, group in subset.groupby("fit", sort=True):
        ax.plot(group["z"], group["density"], lw=1.2, label=f"fit {fit}")
    ax.set_xlabel(parameter)
    ax.set_ylabel("density")
    ax.set_title(f"Population densities: {parameter}")
    if subset["fit"].nunique() <= 12:
        ax.legend(fontsize=7)
    return _save(fig, path)


def plot_violins(violins: pd.DataFrame, parameter: str, path: Path) -> Path:
    """Distribution of individual estimates of one parameter per fit."""
    subset = violins[violins["parameter"] == parameter]
    fits = sorted(subset["fit"].unique())
    data = [subset.loc[subset["fit"] == f, "value"].to_numpy() for f in fits]
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(fits) + 2), 4))
    ax.violinplot(data, showmedians=True)
    ax.set_xticks(range(1, len(fits) + 1))
    ax.set_xticklabels([str(f) for f in fits], fontsize=7)
    ax.set_xlabel("fit (start index)")
    ax.set_ylabel(parameter)
    ax.set_title(f"Individual estimates: {parameter}")
    return _save(fig, path)


def plot_landscape(landscape: pd.DataFrame, truths: Sequence[Tuple[float, float]], title: str, path: Path) -> Path:
    """Sampled (mu_a, mu_b) pairs colored by log-likelihood, top region outlined."""
    fig, ax = plt.subplots(figsize=(5, 5))
    finite = landscape[landscape["loglik"].notna() & (landscape["loglik"] > float("-inf"))]
    sc = ax.scatter(finite["mu_a"], finite["mu_b"], c=finite["loglik"], s=10, cmap="viridis")
    top = landscape[landscape["top"].astype(bool)]
    ax.scatter(top["mu_a"], top["mu_b"], s=28, facecolors="none", edgecolors="red", lw=0.8, label="top")
    ax.scatter([t[0] for t in truths], [t[1] for t in truths], marker="x", s=60, color="black", label="truth")
    ax.set_xlabel("mu_a")
    ax.set_ylabel("mu_b")
    ax.set_title(title)
    ax.legend(fontsize=7, loc="upper right")
    fig.colorbar(sc, ax=ax, label="log-likelihood")
    return _save(fig, path)
