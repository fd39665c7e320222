import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, Optional

from config import Config
from run_config import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    """What a command ran with: enough to re-run it from this file alone."""

    command: str
    config_hash: str
    config: Optional[Dict[str, Any]]
    seeds: Dict[str, int] = field(default_factory=dict)
    equation_flags: Dict[str, bool] = field(default_factory=dict)
    inputs: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    software_version: str = Config.APP_VERSION

    @classmethod
    def for_run(cls, command: str, cfg: RunConfig, **inputs) -> "RunManifest":
        return cls(
            command=command,
            config_hash=cfg.config_hash(),
            config=cfg.to_dict(),
            seeds=cfg.seeds(),
            equation_flags=cfg.equation_flags(),
            inputs=inputs,
        )

    @classmethod
    def for_inputs(cls, command: str, **inputs) -> "RunManifest":
        """Manifest of a command driven by flags only (analyze)."""
        canonical = json.dumps(inputs, sort_keys=True, separators=(",", ":"))
        return cls(
            command=command,
            config_hash=hashlib.sha256(canonical.encode("utf-8")).hexdigest(),
            config=None,
            inputs=inputs,
        )

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Time a stage and record it under `name`."""
        logger.info("%s: %s started", self.command, name)
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 3)
            logger.info("%s: %s finished in %.2fs", self.command, name, self.timings[name])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "software_version": self.software_version,
            "config_hash": self.config_hash,
            "config": self.config,
            "seeds": self.seeds,
            "equation_flags": self.equation_flags,
            "inputs": self.inputs,
            "timings": self.timings,
        }
