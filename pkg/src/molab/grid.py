"""Discretized boxes, midpoint grids, balls and quadrature.

Conventions, used everywhere downstream:

* nodes are cell midpoints x_j = lo + (j + 1/2) h, never cell corners, so
  origin-symmetric boxes with even resolution keep every node away from 0;
* integrals are midpoint sums: sum over nodes in the region of f(x_j) * h^n;
* a node belongs to a ball iff |x_j - c| < r (strict, Euclidean);
* node enumeration is lexicographic (C order), and reductions run in that
  fixed order so results do not depend on any thread budget.

Dimensions 1 and 2 are supported.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, EmptyRegionError

__all__ = [
    "Box",
    "Grid",
    "GridFunction",
    "Ball",
    "integrate",
    "region_mask",
    "ball_family",
    "indicator",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned box prod_i [lo_i, hi_i], 1 <= n <= 2."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ConfigError("box lo/hi dimension mismatch")
        if not 1 <= len(lo) <= 2:
            raise ConfigError(f"dimension {len(lo)} unsupported (need 1 or 2)")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError("box needs lo < hi componentwise")

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)


@dataclass(frozen=True)
class Grid:
    """Midpoint grid over a box: res_i cells along axis i."""

    box: Box
    res: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in self.res)
        object.__setattr__(self, "res", res)
        if len(res) != self.box.n:
            raise ConfigError("res dimension mismatch")
        if any(r < 2 for r in res):
            raise ConfigError("need at least 2 cells per axis")

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def h(self) -> np.ndarray:
        return self.box.sides / np.asarray(self.res)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.res

    def axis_nodes(self, i: int) -> np.ndarray:
        h = self.h[i]
        return self.box.lo[i] + (np.arange(self.res[i]) + 0.5) * h

    @cached_property
    def nodes(self) -> np.ndarray:
        """All nodes, shape (N, n), lexicographic (C) order."""
        axes = [self.axis_nodes(i) for i in range(self.n)]
        if self.n == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=1)

    def key(self) -> tuple:
        return (self.box.lo, self.box.hi, self.res)


class GridFunction:
    """Samples of a function at the grid nodes, stored in grid shape."""

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            if values.size == int(np.prod(grid.shape)):
                values = values.reshape(grid.shape)
            else:
                raise ConfigError(
                    f"values shape {values.shape} incompatible with grid {grid.shape}"
                )
        if not np.all(np.isfinite(values)):
            raise ConfigError("grid function samples must be finite")
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @property
    def box(self) -> Box:
        return self.grid.box

    @property
    def res(self) -> tuple[int, ...]:
        return self.grid.res

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __repr__(self):
        return f"GridFunction(res={self.res}, box=[{self.box.lo}..{self.box.hi}])"


@dataclass(frozen=True, order=True)
class Ball:
    """Open Euclidean ball; node membership is |x - center| < radius."""

    center: tuple[float, ...] = field(compare=True)
    radius: float = field(compare=True)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ConfigError("ball radius must be positive")

    @property
    def n(self) -> int:
        return len(self.center)

    def key(self) -> tuple:
        return (self.center, self.radius)

    def contains_ball(self, other: "Ball") -> bool:
        d = float(np.linalg.norm(np.asarray(other.center) - np.asarray(self.center)))
        return d + other.radius <= self.radius + 1e-12

    def label(self) -> str:
        c = ",".join(f"{v:g}" for v in self.center)
        return f"B({c};{self.radius:g})"


def _disjoint(grid: Grid, region) -> bool:
    box = grid.box
    if isinstance(region, Ball):
        c = np.asarray(region.center)
        nearest = np.clip(c, box.lo, box.hi)
        return float(np.linalg.norm(nearest - c)) >= region.radius
    if isinstance(region, Box):
        return any(
            region.hi[i] <= box.lo[i] or region.lo[i] >= box.hi[i]
            for i in range(box.n)
        )
    raise ConfigError(f"unsupported region type {type(region).__name__}")


def region_mask(grid: Grid, region) -> np.ndarray:
    """Boolean node-membership mask in grid shape."""
    if isinstance(region, Ball):
        if region.n != grid.n:
            raise ConfigError("region dimension mismatch")
        if grid.n == 1:
            d2 = (grid.axis_nodes(0) - region.center[0]) ** 2
        else:
            dx = grid.axis_nodes(0) - region.center[0]
            dy = grid.axis_nodes(1) - region.center[1]
            d2 = dx[:, None] ** 2 + dy[None, :] ** 2
        return d2 < region.radius**2
    if isinstance(region, Box):
        if region.n != grid.n:
            raise ConfigError("region dimension mismatch")
        masks = [
            (grid.axis_nodes(i) >= region.lo[i]) & (grid.axis_nodes(i) <= region.hi[i])
            for i in range(grid.n)
        ]
        if grid.n == 1:
            return masks[0]
        return masks[0][:, None] & masks[1][None, :]
    raise ConfigError(f"unsupported region type {type(region).__name__}")


def integrate(f: GridFunction, region=None) -> float:
    """Midpoint quadrature of f over region (default: the whole box)."""
    if region is None:
        return float(np.sum(f.values)) * f.grid.cell_volume
    if _disjoint(f.grid, region):
        raise EmptyRegionError("empty region: no overlap with the grid box")
    mask = region_mask(f.grid, region)
    return float(np.sum(f.values[mask])) * f.grid.cell_volume


def indicator(grid: Grid, region) -> GridFunction:
    return GridFunction(grid, region_mask(grid, region).astype(float))


def ball_family(
    grid: Grid,
    center_stride: int,
    radii_levels: int,
    min_radius_cells: int,
) -> list[Ball]:
    """Deterministic family of balls fully inside the grid box.

    Radii: the dyadic ladder descending from half the shortest box side,
    trimmed to >= min_radius_cells * max(h), keeping the smallest
    `radii_levels` rungs. Centers: per axis, walk from lo_i + r_top in steps
    of center_stride * h_i while <= hi_i - r_top, where r_top is the largest
    kept radius; the same centers are used for every rung, so each
    (center, radius) pair is inside the box by construction. Sorted by
    (radius descending, center lexicographic).
    """
    if center_stride < 1 or radii_levels < 1 or min_radius_cells < 1:
        raise ConfigError("ball family parameters must be positive")
    box = grid.box
    h = grid.h
    r_half = float(np.min(box.sides)) / 2.0
    r_min = min_radius_cells * float(np.max(h))
    ladder = []
    r = r_half
    while r >= r_min * (1 - 1e-12):
        ladder.append(r)
        r /= 2.0
    if not ladder:
        raise EmptyRegionError(
            "no admissible ball: min_radius_cells exceeds half the shortest side"
        )
    radii = ladder[-radii_levels:]  # smallest `radii_levels` rungs, descending
    r_top = radii[0]

    axes = []
    for i in range(grid.n):
        step = center_stride * float(h[i])
        start = box.lo[i] + r_top
        stop = box.hi[i] - r_top
        count = int(np.floor((stop - start) / step + 1e-12)) + 1 if stop >= start - 1e-12 else 0
        axes.append([start + k * step for k in range(count)])
    if any(len(a) == 0 for a in axes):
        raise EmptyRegionError("no admissible ball: top radius does not fit the box")

    if grid.n == 1:
        centers = [(c,) for c in axes[0]]
    else:
        centers = [(c0, c1) for c0 in axes[0] for c1 in axes[1]]

    balls = [Ball(center=c, radius=r) for r in radii for c in centers]
    balls.sort(key=lambda b: (-b.radius, b.center))
    return balls


def _fmt_box(box: Box) -> str:
    return ",".join(f"{lo:.17g}..{hi:.17g}" for lo, hi in zip(box.lo, box.hi))


def _parse_box(text: str) -> Box:
    lo, hi = [], []
    for part in text.split(","):
        a, b = part.split("..")
        lo.append(float(a))
        hi.append(float(b))
    return Box(lo=tuple(lo), hi=tuple(hi))


def write_csv(f: GridFunction, path: str) -> None:
    """One sample per line in lexicographic node order, header carries the
    grid geometry: `# box=lo..hi res=r` (per-axis fields comma separated)."""
    buf = io.StringIO()
    res = ",".join(str(r) for r in f.res)
    buf.write(f"# box={_fmt_box(f.box)} res={res}\n")
    for v in f.flat():
        buf.write(f"{v:.17g}\n")
    data = buf.getvalue()
    from .report import atomic_write_text

    atomic_write_text(path, data)


def read_csv(path: str) -> GridFunction:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ConfigError(f"{path}: missing grid header line")
        fields = dict(
            kv.split("=", 1) for kv in header.lstrip("#").split() if "=" in kv
        )
        try:
            box = _parse_box(fields["box"])
            res = tuple(int(r) for r in fields["res"].split(","))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: bad grid header ({exc})") from exc
        values = np.loadtxt(fh, dtype=float, ndmin=1)
    grid = Grid(box=box, res=res)
    if values.size != int(np.prod(res)):
        raise ConfigError(f"{path}: {values.size} samples, grid wants {np.prod(res)}")
    return GridFunction(grid, values.reshape(res))
