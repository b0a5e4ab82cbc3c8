"""Experiment configuration: one JSON-serializable object binding a field
spec, a window, a statistic, a reference law, and run parameters."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from . import fields, limitlaw
from .fields import FieldSpec, Window
from .limitlaw import LimitLaw

STATISTICS = ("partial_sum", "v_statistic")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    spec: FieldSpec
    window: Window
    replicates: int
    master_seed: int
    statistic: str = "partial_sum"
    law: LimitLaw | None = None
    t_grid: tuple[float, ...] | None = None
    out_dir: str | None = None
    tolerances: dict = field(default_factory=dict)
    reference_draws: int = 200000

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("replicates must be >= 2")
        if not isinstance(self.master_seed, int):
            raise ValueError("master_seed must be an integer (no ambient randomness)")
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if self.reference_draws < 2:
            raise ValueError("reference_draws must be >= 2")
        if self.t_grid is not None:
            object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    def with_overrides(self, seed=None, out_dir=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, master_seed=int(seed))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        return cfg


def config_to_json(cfg: ExperimentConfig) -> dict:
    return {
        "name": cfg.name,
        "spec": fields.spec_to_json(cfg.spec),
        "window": list(cfg.window.lengths),
        "statistic": cfg.statistic,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "law": None if cfg.law is None else limitlaw.law_to_json(cfg.law),
        "t_grid": None if cfg.t_grid is None else list(cfg.t_grid),
        "out_dir": cfg.out_dir,
        "tolerances": dict(cfg.tolerances),
        "reference_draws": cfg.reference_draws,
    }


def config_from_json(doc: dict) -> ExperimentConfig:
    try:
        spec = fields.spec_from_json(doc["spec"])
        window = Window(tuple(int(n) for n in doc["window"]))
        law = doc.get("law")
        return ExperimentConfig(
            name=str(doc.get("name", "experiment")),
            spec=spec,
            window=window,
            statistic=doc.get("statistic", "partial_sum"),
            replicates=int(doc["replicates"]),
            master_seed=doc["master_seed"],
            law=None if law is None else limitlaw.law_from_json(law),
            t_grid=doc.get("t_grid"),
            out_dir=doc.get("out_dir"),
            tolerances=dict(doc.get("tolerances", {})),
            reference_draws=int(doc.get("reference_draws", 200000)),
        )
    except KeyError as exc:
        raise ValueError(f"config missing required field {exc.args[0]!r}") from None


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return config_from_json(doc)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_json(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
