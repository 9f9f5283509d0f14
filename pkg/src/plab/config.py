"""YAML experiment configs.

Regions are tagged mappings (kind: ball | disk | cone | box | point |
complement | union | intersection); metrics are identity / diagonal /
conformal with coefficient expressions in x1..xn.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional

import numpy as np
import yaml

from . import geometry as geo
from .experiments import ExperimentConfig
from .fluxop import MetricField

__all__ = ["load_config", "parse_region", "parse_metric"]


def parse_region(rec: Dict) -> geo.Region:
    if not isinstance(rec, dict) or "kind" not in rec:
        raise ValueError("region record needs a 'kind' key: %r" % (rec,))
    kind = rec["kind"]
    if kind == "ball":
        return geo.Ball(np.asarray(rec["center"], float), float(rec["radius"]))
    if kind == "disk":
        return geo.CodimDisk(np.asarray(rec["center"], float),
                             float(rec["radius"]), int(rec["codim"]))
    if kind == "cone":
        return geo.TruncatedCone(np.asarray(rec["vertex"], float),
                                 np.asarray(rec["axis"], float),
                                 float(rec["half_angle"]), float(rec["height"]),
                                 int(rec.get("codim", 0)))
    if kind == "box":
        return geo.Box(np.asarray(rec["lo"], float), np.asarray(rec["hi"], float))
    if kind == "point":
        return geo.PointSet(np.asarray(rec["point"], float))
    if kind == "complement":
        return geo.Complement(parse_region(rec["of"]))
    if kind == "union":
        return geo.RegionUnion([parse_region(r) for r in rec["of"]])
    if kind == "intersection":
        return geo.RegionIntersection([parse_region(r) for r in rec["of"]])
    raise ValueError("unknown region kind %r" % kind)


def parse_metric(rec: Optional[Dict], dim: int) -> Optional[MetricField]:
    if rec is None:
        return None
    kind = rec.get("kind", "identity")
    if kind == "identity":
        return MetricField.identity(dim)
    if kind == "diagonal":
        return MetricField.diagonal(rec["exprs"], dim)
    if kind == "conformal":
        return MetricField.conformal(rec["expr"], dim)
    raise ValueError("unknown metric kind %r" % kind)


def load_config(path) -> ExperimentConfig:
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError("config must be a mapping")
    n = int(raw["n"])
    return ExperimentConfig(
        name=str(raw.get("name", Path(path).stem)),
        n=n,
        p=float(raw["p"]),
        domain=parse_region(raw["domain"]),
        obstacle=parse_region(raw["obstacle"]) if raw.get("obstacle") else None,
        metric=parse_metric(raw.get("metric"), n),
        spacings=[float(h) for h in raw.get("spacings", [])],
        x0=np.asarray(raw["x0"], float) if raw.get("x0") is not None else None,
        epsilon=[float(e) for e in raw.get("epsilon", [0.125, 0.0625])],
        probe_distance=float(raw.get("probe_distance", 0.3)),
        seed=int(raw.get("seed", 0)),
        out_dir=raw.get("out"),
        expect={str(k): str(v) for k, v in (raw.get("expect") or {}).items()},
    )
