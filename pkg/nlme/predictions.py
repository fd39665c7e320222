from typing import List, Optional

import numpy as np
import pandas as pd

from ode import IntegratorConfig
from population import TrialDataset
from .evaluator import NUMERICAL_FAILURES
from .statmodel import FitResult, StatModelSpec


def fit_predictions(
    fit: FitResult,
    data: TrialDataset,
    spec: StatModelSpec,
    n_grid: int = 0,
    integrator: Optional[IntegratorConfig] = None,
) -> pd.DataFrame:
    """
    Individual predictions at the conditional modes.

    Rows with kind "obs" sit at the observation times and carry the observed value;
    with n_grid > 0, rows with kind "grid" cover [0, last observation] for plotting.
    An individual whose curve cannot be evaluated gets NaN predictions.
    """
    cfg = integrator or IntegratorConfig.for_simulation()
    frames: List[pd.DataFrame] = []
    for ind_id in data.individual_ids():
        times, obs = data.observations_for(ind_id)
        doses = data.doses_for(ind_id)
        values = dict(spec.fixed_constants)
        values.update(fit.individual_estimates.get(ind_id, {d.name: d.typical_value for d in fit.population}))
        grid = np.linspace(0.0, float(times.max()), n_grid) if (n_grid > 0 and len(times)) else np.empty(0)
        for kind, t, y in (("obs", times, obs), ("grid", grid, np.full(len(grid), np.nan))):
            if len(t) == 0:
                continue
            try:
                pred = spec.structural.predict(values, t, doses, cfg)
            except NUMERICAL_FAILURES:
                pred = np.full(len(t), np.nan)
            frames.append(pd.DataFrame({"ID": ind_id, "kind": kind, "TIME": t, "Y": y, "PRED": pred}))
    if not frames:
        return pd.DataFrame(columns=["ID", "kind", "TIME", "Y", "PRED"])
    return pd.concat(frames, ignore_index=True)
