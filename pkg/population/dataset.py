from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np
import pandas as pd

from exceptions import DatasetSchemaError, InputError
from ode import DoseEvent

DATASET_COLUMNS = ("ID", "TIME", "Y", "AMT", "EVID")


@dataclass
class TrialDataset:
    """Tall observation table plus per-individual dose events."""

    ids: np.ndarray
    times: np.ndarray
    observations: np.ndarray
    doses: Dict[int, List[DoseEvent]] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.times = np.asarray(self.times, dtype=float)
        self.observations = np.asarray(self.observations, dtype=float)
        if not (len(self.ids) == len(self.times) == len(self.observations)):
            raise InputError("ids, times and observations must have equal length")
        if not np.all(np.isfinite(self.observations)):
            raise InputError("observations must be finite")
        pairs = set(zip(self.ids.tolist(), self.times.tolist()))
        if len(pairs) != len(self.ids):
            raise InputError("each (individual, time) pair must be unique")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def is_empty(self) -> bool:
        return len(self.ids) == 0

    def individual_ids(self) -> List[int]:
        return sorted(set(self.ids.tolist()) | set(self.doses.keys()))

    def observations_for(self, ind_id: int) -> Tuple[np.ndarray, np.ndarray]:
        """Observation times and values for one individual, sorted by time."""
        mask = self.ids == ind_id
        order = np.argsort(self.times[mask], kind="stable")
        return self.times[mask][order], self.observations[mask][order]

    def doses_for(self, ind_id: int) -> List[DoseEvent]:
        return list(self.doses.get(ind_id, []))

    def subset(self, ind_ids: Iterable[int]) -> "TrialDataset":
        keep = set(ind_ids)
        mask = np.isin(self.ids, list(keep))
        return TrialDataset(
            ids=self.ids[mask],
            times=self.times[mask],
            observations=self.observations[mask],
            doses={k: list(v) for k, v in self.doses.items() if k in keep},
            meta=dict(self.meta),
        )

    def to_frame(self) -> pd.DataFrame:
        """ID,TIME,Y,AMT,EVID rows sorted by individual then time; doses precede observations at equal times."""
        records = []
        for ind_id, events in self.doses.items():
            for dose in events:
                records.append((int(ind_id), dose.time, np.nan, dose.amount, 1))
        for ind_id, t, y in zip(self.ids.tolist(), self.times.tolist(), self.observations.tolist()):
            records.append((ind_id, t, y, np.nan, 0))
        records.sort(key=lambda r: (r[0], r[1], -r[4]))
        frame = pd.DataFrame.from_records(records, columns=list(DATASET_COLUMNS))
        frame["ID"] = frame["ID"].astype(np.int64)
        frame["EVID"] = frame["EVID"].astype(np.int64)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, dose_target: int = 0, meta: Dict[str, Any] = None) -> "TrialDataset":
        missing = [c for c in DATASET_COLUMNS if c not in frame.columns]
        if missing:
            raise DatasetSchemaError(f"dataset is missing column {missing[0]}", column=missing[0])
        evid = frame["EVID"].to_numpy()
        if not np.all(np.isin(evid, (0, 1))):
            raise DatasetSchemaError("EVID must be 0 (observation) or 1 (dose)", column="EVID")

        obs = frame[evid == 0]
        if obs["Y"].isna().any():
            raise DatasetSchemaError("observation rows (EVID=0) need a Y value", column="Y")
        dose_rows = frame[evid == 1]
        if dose_rows["AMT"].isna().any():
            raise DatasetSchemaError("dose rows (EVID=1) need an AMT value", column="AMT")

        doses: Dict[int, List[DoseEvent]] = {}
        for ind_id, t, amt in zip(dose_rows["ID"].tolist(), dose_rows["TIME"].tolist(), dose_rows["AMT"].tolist()):
            doses.setdefault(int(ind_id), []).append(DoseEvent(time=float(t), amount=float(amt), target=dose_target))
        for events in doses.values():
            events.sort(key=lambda d: d.time)

        return cls(
            ids=obs["ID"].to_numpy(dtype=np.int64),
            times=obs["TIME"].to_numpy(dtype=float),
            observations=obs["Y"].to_numpy(dtype=float),
            doses=doses,
            meta=dict(meta or {}),
        )
