"""Growth functions phi(x, t): Orlicz in t, Muckenhoupt-controlled in x.

Built-in kinds:

* ``power(p)``            phi(x,t) = t^p
* ``weighted_power(p,w)`` phi(x,t) = w(x) t^p  with w constant, |x|^a, or a table
* ``ky_log``              phi(x,t) = t / (ln(e+|x|) + ln(e+t))
* ``custom``              arbitrary vectorized evaluator

plus sampled certificates for the analytic indices: uniform lower/upper type
constants, Muckenhoupt A_q constants and the derived critical exponents
(i_est, q_est, m_est). Every certificate is a sup over a finite sample, hence
a lower bound for the true sup; divergence is certified by growth across a
sample refinement, not by a single finite number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, SingularNodeError, WeightFloorError
from .grid import Ball, Grid, region_mask

__all__ = [
    "WeightSpec",
    "GrowthFunction",
    "GrowthIndices",
    "TypeSampleConfig",
    "IndexSearchConfig",
    "power",
    "weighted_power",
    "ky_log",
    "custom",
    "phi_measure",
    "uniform_type_constant",
    "muckenhoupt_constant",
    "critical_indices",
]

WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class WeightSpec:
    """Spatial weight w(x): 'constant' (value c), 'abs_power' (|x|^a with
    Euclidean |x|), or 'table' (vectorized callable on (N, n) points)."""

    kind: str
    c: float = 1.0
    a: float = 0.0
    table: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.kind == "constant":
            w = np.full(points.shape[0], float(self.c))
        elif self.kind == "abs_power":
            r = np.linalg.norm(points, axis=1)
            with np.errstate(divide="ignore"):
                w = r ** self.a
        elif self.kind == "table":
            if self.table is None:
                raise ConfigError("table weight needs a callable")
            w = np.asarray(self.table(points), dtype=float)
        else:
            raise ConfigError(f"unknown weight kind {self.kind!r}")
        if not np.all(np.isfinite(w)):
            raise SingularNodeError("singular node: non-finite weight sample")
        if np.any(w < WEIGHT_FLOOR):
            raise WeightFloorError(
                f"weight floor: weight below {WEIGHT_FLOOR:g} at a node"
            )
        return w

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant({self.c:g})"
        if self.kind == "abs_power":
            return f"abs_power({self.a:g})"
        return "table"


@dataclass(frozen=True)
class GrowthFunction:
    """phi(x, t): nondecreasing in t with phi(x, 0) = 0, positive for t > 0.

    ``claimed_lower_type`` is the exponent the x-uniform lower type scan is
    expected to reach; upper type is always 1 for the built-ins.
    """

    kind: str
    p: float = 1.0
    weight: Optional[WeightSpec] = None
    evaluator: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    claimed_lower_type: float = 1.0
    claimed_upper_type: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not 0 < self.claimed_lower_type <= 1:
            raise ConfigError("claimed lower type must lie in (0, 1]")
        if self.kind not in ("power", "weighted_power", "ky_log", "custom"):
            raise ConfigError(f"unknown growth kind {self.kind!r}")
        if self.kind == "custom" and self.evaluator is None:
            raise ConfigError("custom growth function needs an evaluator")

    @property
    def fingerprint(self) -> str:
        if self.kind == "power":
            return f"power(p={self.p:g})"
        if self.kind == "weighted_power":
            return f"weighted_power(p={self.p:g},w={self.weight.describe()})"
        if self.kind == "ky_log":
            return "ky_log"
        return f"custom({self.name or hex(id(self.evaluator))})"

    def _weights(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "power":
            return np.ones(np.atleast_2d(points).shape[0])
        return self.weight.values(points)

    def eval(self, points: np.ndarray, t) -> np.ndarray:
        """phi at each point; t scalar or per-point array. Returns (N,)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.asarray(t, dtype=float)
        out = self._eval_bcast(points, np.broadcast_to(t, (points.shape[0],)))
        return out

    def eval_outer(self, points: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
        """phi on the (point, t) product grid. Returns (N, T)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.asarray(t_grid, dtype=float).reshape(1, -1)
        return self._eval_bcast(points, t)

    def _eval_bcast(self, points: np.ndarray, t: np.ndarray) -> np.ndarray:
        # t has shape (N,) or (1, T); results broadcast against the weights.
        if self.kind in ("power", "weighted_power"):
            w = self._weights(points)
            tp = np.where(t > 0, t, 0.0) ** self.p
            if t.ndim == 2:
                return w[:, None] * tp
            return w * tp
        if self.kind == "ky_log":
            absx = np.linalg.norm(points, axis=1)
            a = np.log(math.e + absx)
            a = a[:, None] if t.ndim == 2 else a
            with np.errstate(divide="ignore", invalid="ignore"):
                val = t / (a + np.log(math.e + t))
            return np.where(t > 0, val, 0.0)
        val = np.asarray(self.evaluator(points, t), dtype=float)
        want = (points.shape[0], t.shape[1]) if t.ndim == 2 else (points.shape[0],)
        return np.broadcast_to(val, want)


def power(p: float) -> GrowthFunction:
    if p <= 0 or p > 1:
        raise ConfigError("power exponent must lie in (0, 1]")
    return GrowthFunction(kind="power", p=p, claimed_lower_type=p)


def weighted_power(p: float, weight: WeightSpec) -> GrowthFunction:
    if p <= 0 or p > 1:
        raise ConfigError("power exponent must lie in (0, 1]")
    return GrowthFunction(
        kind="weighted_power", p=p, weight=weight, claimed_lower_type=p
    )


def ky_log() -> GrowthFunction:
    return GrowthFunction(kind="ky_log", claimed_lower_type=1.0)


def custom(
    evaluator, name: str = "", claimed_lower_type: float = 1.0
) -> GrowthFunction:
    return GrowthFunction(
        kind="custom",
        evaluator=evaluator,
        name=name,
        claimed_lower_type=claimed_lower_type,
    )


def phi_measure(gf: GrowthFunction, grid: Grid, region, t: float) -> float:
    """phi(E, t) = integral over E of phi(x, t) dx by midpoint quadrature."""
    mask = region_mask(grid, region)
    if not np.any(mask):
        return 0.0
    pts = grid.nodes[mask.reshape(-1)]
    return float(np.sum(gf.eval(pts, float(t)))) * grid.cell_volume


@dataclass(frozen=True)
class TypeSampleConfig:
    t_min: float = 1e-6
    t_max: float = 1e6
    t_points: int = 25
    s_points: int = 25
    s_floor: float = 1e-6  # lower-type scan samples s in [s_floor, 1]
    s_cap: float = 1e6  # upper-type scan samples s in [1, s_cap]
    x_points: int = 33


def _sample_points(grid: Grid, k: int) -> np.ndarray:
    nodes = grid.nodes
    stride = max(1, nodes.shape[0] // k)
    return nodes[::stride]


def uniform_type_constant(
    gf: GrowthFunction,
    grid: Grid,
    p: float,
    side: str,
    cfg: TypeSampleConfig = TypeSampleConfig(),
) -> float:
    """Sampled sup of phi(x, s t) / (s^p phi(x, t)) over nodes, a log t-grid
    and a log s-grid (s <= 1 for 'lower', s >= 1 for 'upper')."""
    if side not in ("lower", "upper"):
        raise ConfigError("side must be 'lower' or 'upper'")
    pts = _sample_points(grid, cfg.x_points)
    t = np.geomspace(cfg.t_min, cfg.t_max, cfg.t_points)
    if side == "lower":
        s = np.geomspace(cfg.s_floor, 1.0, cfg.s_points)
    else:
        s = np.geomspace(1.0, cfg.s_cap, cfg.s_points)
    base = gf.eval_outer(pts, t)
    if np.any(base <= 0):
        raise SingularNodeError("singular node: phi vanishes at positive t")
    best = 0.0
    for sv in s:
        ratio = gf.eval_outer(pts, sv * t) / (sv**p * base)
        if not np.all(np.isfinite(ratio)):
            raise WeightFloorError("weight floor: type ratio overflowed")
        best = max(best, float(ratio.max()))
    return best


def _ball_points(grid: Grid, ball: Ball) -> np.ndarray:
    mask = region_mask(grid, ball).reshape(-1)
    return grid.nodes[mask]


def muckenhoupt_constant(
    gf: GrowthFunction,
    grid: Grid,
    q: float,
    balls: Sequence[Ball],
    t_grid: np.ndarray | None = None,
) -> float:
    """Sampled A_q constant: sup over (t, ball) of the discrete A_q ratio.

    Ball volumes are quadrature measures (node count * h^n) so that constant
    weights give exactly 1. q = 1 uses the node minimum of phi for the
    essential infimum.
    """
    if q < 1:
        raise ConfigError("Muckenhoupt exponent must be >= 1")
    if t_grid is None:
        t_grid = IndexSearchConfig().t_grid
    t_grid = np.asarray(t_grid, dtype=float)
    vol = grid.cell_volume
    best = 0.0
    for ball in balls:
        pts = _ball_points(grid, ball)
        if pts.shape[0] == 0:
            continue
        size = pts.shape[0] * vol
        vals = gf.eval_outer(pts, t_grid)  # (M, T)
        if np.any(vals <= 0):
            raise SingularNodeError("singular node: phi vanishes at positive t")
        mean = vals.sum(axis=0) * vol / size
        if q == 1:
            ratio = mean * (1.0 / vals.min(axis=0))
        else:
            with np.errstate(over="raise"):
                try:
                    dual = (vals ** (-1.0 / (q - 1.0))).sum(axis=0) * vol / size
                except FloatingPointError as exc:
                    raise WeightFloorError(
                        "weight floor: dual exponent overflow in A_q sample"
                    ) from exc
            if not np.all(np.isfinite(dual)):
                raise WeightFloorError(
                    "weight floor: dual exponent overflow in A_q sample"
                )
            ratio = mean * dual ** (q - 1.0)
        best = max(best, float(ratio.max()))
    return best


@dataclass(frozen=True)
class IndexSearchConfig:
    p_grid: tuple[float, ...] = tuple(np.round(np.arange(0.05, 1.0001, 0.05), 10))
    q_grid: tuple[float, ...] = tuple(np.round(np.arange(1.0, 3.0001, 0.10), 10))
    divergence_threshold: float = 1e6
    # one grid doubling multiplies a borderline A_1 constant for |x|^{1/2}
    # by sqrt(2) ~ 1.414; convergent constants move by a few percent
    growth_factor: float = 1.25
    t_grid: tuple[float, ...] = tuple(np.geomspace(1e-3, 1e3, 7))
    type_cfg: TypeSampleConfig = field(default_factory=TypeSampleConfig)

    @property
    def p_step(self) -> float:
        return self.p_grid[1] - self.p_grid[0] if len(self.p_grid) > 1 else 0.0

    @property
    def q_step(self) -> float:
        return self.q_grid[1] - self.q_grid[0] if len(self.q_grid) > 1 else 0.0


@dataclass(frozen=True)
class GrowthIndices:
    """Grid certificates for the critical exponents.

    i_est: largest sampled lower-type exponent with a bounded constant.
    q_est: smallest sampled Muckenhoupt exponent with a bounded constant
    (a grid-limited lower bound for the true critical index).
    m_est = floor(n (q_est / i_est - 1)).
    """

    i_est: float
    q_est: float
    m_est: int
    n: int
    certificates: tuple = ()
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "i_est": self.i_est,
            "q_est": self.q_est,
            "m_est": self.m_est,
            "n": self.n,
            "certificates": [dict(c) for c in self.certificates],
            "notes": list(self.notes),
        }


def critical_indices(
    gf: GrowthFunction,
    grid: Grid,
    balls: Sequence[Ball],
    cfg: IndexSearchConfig = IndexSearchConfig(),
    grid_fine: Optional[Grid] = None,
    balls_fine: Optional[Sequence[Ball]] = None,
) -> GrowthIndices:
    """Scan exponent grids for bounded type / A_q constants.

    A constant counts as unbounded when it exceeds cfg.divergence_threshold or
    grows by more than cfg.growth_factor under sample refinement (lower type:
    s-grid floor squared; A_q: doubled grid resolution when grid_fine /
    balls_fine are supplied). Results are honest only up to the sampled
    ranges; saturation is flagged in notes.
    """
    certs = []
    notes = []

    bounded_p = []
    for p in cfg.p_grid:
        c1 = uniform_type_constant(gf, grid, p, "lower", cfg.type_cfg)
        fine_cfg = TypeSampleConfig(
            t_min=cfg.type_cfg.t_min,
            t_max=cfg.type_cfg.t_max,
            t_points=cfg.type_cfg.t_points,
            s_points=cfg.type_cfg.s_points,
            s_floor=cfg.type_cfg.s_floor**2,
            s_cap=cfg.type_cfg.s_cap,
            x_points=cfg.type_cfg.x_points,
        )
        c2 = uniform_type_constant(gf, grid, p, "lower", fine_cfg)
        ok = (
            c1 <= cfg.divergence_threshold
            and c2 <= cfg.divergence_threshold
            and c2 <= cfg.growth_factor * c1
        )
        certs.append(
            {
                "kind": "lower_type",
                "exponent": float(p),
                "constant": c1,
                "refined_constant": c2,
                "bounded": ok,
            }
        )
        if ok:
            bounded_p.append(float(p))
    if bounded_p:
        i_est = max(bounded_p)
        if i_est == cfg.p_grid[-1]:
            notes.append("lower type bounded up to the top of the exponent grid")
    else:
        i_est = float(cfg.p_grid[0])
        notes.append("no sampled lower-type exponent was bounded; i_est saturated low")

    t_grid = np.asarray(cfg.t_grid)
    q_est = None
    for q in cfg.q_grid:
        c1 = muckenhoupt_constant(gf, grid, q, balls, t_grid)
        c2 = None
        ok = c1 <= cfg.divergence_threshold
        if ok and grid_fine is not None and balls_fine is not None:
            c2 = muckenhoupt_constant(gf, grid_fine, q, balls_fine, t_grid)
            ok = c2 <= cfg.divergence_threshold and c2 <= cfg.growth_factor * max(
                c1, 1e-12
            )
        certs.append(
            {
                "kind": "muckenhoupt",
                "exponent": float(q),
                "constant": c1,
                "refined_constant": c2,
                "bounded": ok,
            }
        )
        if ok and q_est is None:
            q_est = float(q)
    if q_est is None:
        q_est = float(cfg.q_grid[-1])
        notes.append("no sampled Muckenhoupt exponent was bounded; q_est saturated high")

    m_est = max(0, math.floor(grid.n * (q_est / i_est - 1.0) + 1e-12))
    return GrowthIndices(
        i_est=i_est,
        q_est=q_est,
        m_est=m_est,
        n=grid.n,
        certificates=tuple(certs),
        notes=tuple(notes),
    )
