"""Experiment configuration: JSON in, validated objects out.

The JSON shape is flat and explicit, e.g.

{
  "box": {"lo": [-2.0], "hi": [2.0]},
  "res": [1024],
  "growth": {"kind": "weighted_power", "p": 0.5, "weight": {"abs_power": 0.5}},
  "balls": {"center_stride": 128, "radii_levels": 3, "min_radius_cells": 32},
  "corpus": "log_abs",
  "params": {"q": [1, 2], "s": 0, "eps": 1.0},
  "tolerances": {"luxembourg": 1e-8, "chi": 1e-12},
  "threads": 1
}

parse -> emit -> parse is idempotent. Weight specs: {"constant": c} or
{"abs_power": a}.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .grid import Ball, Box, Grid, ball_family
from .growth import GrowthFunction, WeightSpec, ky_log, power, weighted_power

__all__ = ["ExperimentConfig", "growth_from_dict", "growth_to_dict"]


def growth_from_dict(d: dict) -> GrowthFunction:
    try:
        kind = d["kind"]
    except (TypeError, KeyError) as exc:
        raise ConfigError("growth spec needs a 'kind'") from exc
    if kind == "power":
        return power(float(d.get("p", 1.0)))
    if kind == "weighted_power":
        wd = d.get("weight")
        if not isinstance(wd, dict) or len(wd) != 1:
            raise ConfigError(
                "weighted_power wants weight {'constant': c} or {'abs_power': a}"
            )
        (wkind, val), = wd.items()
        if wkind == "constant":
            w = WeightSpec(kind="constant", c=float(val))
        elif wkind == "abs_power":
            w = WeightSpec(kind="abs_power", a=float(val))
        else:
            raise ConfigError(f"unknown weight kind {wkind!r}")
        return weighted_power(float(d.get("p", 1.0)), w)
    if kind == "ky_log":
        return ky_log()
    raise ConfigError(f"unknown growth kind {kind!r} (custom kinds are API-only)")


def growth_to_dict(gf: GrowthFunction) -> dict:
    if gf.kind == "power":
        return {"kind": "power", "p": gf.p}
    if gf.kind == "weighted_power":
        w = gf.weight
        wd = {"constant": w.c} if w.kind == "constant" else {"abs_power": w.a}
        return {"kind": "weighted_power", "p": gf.p, "weight": wd}
    if gf.kind == "ky_log":
        return {"kind": "ky_log"}
    raise ConfigError("custom growth functions cannot be serialized")


@dataclass
class ExperimentConfig:
    box_lo: tuple[float, ...] = (-2.0,)
    box_hi: tuple[float, ...] = (2.0,)
    res: tuple[int, ...] = (1024,)
    growth: dict = field(default_factory=lambda: {"kind": "power", "p": 1.0})
    balls: dict = field(
        default_factory=lambda: {
            "center_stride": 128,
            "radii_levels": 3,
            "min_radius_cells": 32,
        }
    )
    corpus: str = "log_abs"
    function_csv: str | None = None
    params: dict = field(default_factory=dict)
    tolerances: dict = field(
        default_factory=lambda: {"luxembourg": 1e-8, "chi": 1e-12}
    )
    threads: int = 1

    # -- construction ------------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be a JSON object")
        box = d.get("box", {})
        try:
            cfg = cls(
                box_lo=tuple(float(v) for v in box.get("lo", (-2.0,))),
                box_hi=tuple(float(v) for v in box.get("hi", (2.0,))),
                res=tuple(int(v) for v in d.get("res", (1024,))),
                growth=dict(d.get("growth", {"kind": "power", "p": 1.0})),
                balls=dict(
                    d.get(
                        "balls",
                        {"center_stride": 128, "radii_levels": 3, "min_radius_cells": 32},
                    )
                ),
                corpus=str(d.get("corpus", "log_abs")),
                function_csv=d.get("function_csv"),
                params=dict(d.get("params", {})),
                tolerances=dict(
                    d.get("tolerances", {"luxembourg": 1e-8, "chi": 1e-12})
                ),
                threads=int(d.get("threads", 1)),
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"malformed config field: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "box": {"lo": list(self.box_lo), "hi": list(self.box_hi)},
            "res": list(self.res),
            "growth": self.growth,
            "balls": self.balls,
            "corpus": self.corpus,
            "function_csv": self.function_csv,
            "params": self.params,
            "tolerances": self.tolerances,
            "threads": self.threads,
        }

    def validate(self) -> None:
        Box(lo=self.box_lo, hi=self.box_hi)  # raises on bad geometry
        if len(self.res) != len(self.box_lo):
            raise ConfigError("res and box dimensions disagree")
        growth_from_dict(self.growth)
        for key in ("center_stride", "radii_levels", "min_radius_cells"):
            if key not in self.balls or int(self.balls[key]) < 1:
                raise ConfigError(f"balls.{key} must be a positive integer")
        if self.function_csv is not None and not os.path.exists(self.function_csv):
            raise ConfigError(f"function_csv {self.function_csv!r} does not exist")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    # -- realized objects --------------------------------------------------
    def grid(self) -> Grid:
        return Grid(box=Box(lo=self.box_lo, hi=self.box_hi), res=self.res)

    def growth_function(self) -> GrowthFunction:
        return growth_from_dict(self.growth)

    def ball_list(self, grid: Grid | None = None) -> list[Ball]:
        grid = grid or self.grid()
        return ball_family(
            grid,
            int(self.balls["center_stride"]),
            int(self.balls["radii_levels"]),
            int(self.balls["min_radius_cells"]),
        )

    def fingerprint(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @property
    def chi_tol(self) -> float:
        return float(self.tolerances.get("chi", 1e-12))

    @property
    def lux_tol(self) -> float:
        return float(self.tolerances.get("luxembourg", 1e-8))
