"""Half-space square transforms and phi-Carleson norms.

Kernels are radial polynomial bumps rho(|x|) = (sum_i a_i |x|^{2i}) (1-|x|^2)^4
supported in the unit ball, with the coefficients solving the closed-form
(beta-function) system that kills every moment through order s, then rescaled
so the band-limited Calderon integral

    I(xi) = integral over the band of |khat(xi t)|^2 dt/t

has mean 1 over the xi grid. square_transform convolves with the t-dilated
kernel t^{-n} k(./t) on a dyadic-refined ladder (8 levels per octave from 4h
to a quarter of the shortest side); the sampled taps get a per-level discrete
moment correction so that degree-<= s polynomials are annihilated at the
1e-8 level even at coarse dilations. The quadrature on the half-space uses
dt/t = (ln 2)/8 per level.

carleson_norm evaluates, per family ball B,

    |chi_B|^{-1} { sum over tent points (x, t) of
                   |field|^2 t^n / phi(B(x, t), 1/|chi_B|) h^n dln t }^{1/2}

with the strict tent |x - x_B| + t < r_B, and area_function the cone
counterpart per node.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.special import j0

from .errors import BandTooNarrowError, ConfigError, MolabError
from .grid import Ball, Grid, GridFunction
from .growth import GrowthFunction
from .luxembourg import chi_ball_norm
from .parallel import ordered_map

__all__ = [
    "Kernel",
    "HalfSpaceField",
    "build_kernel",
    "calderon_deviation",
    "default_t_levels",
    "square_transform",
    "carleson_norm",
    "area_function",
]

BUMP_POWER = 4
RADIAL_QUAD = 2048
CALDERON_T_POINTS = 640

_KERNEL_CACHE: dict = {}
_KERNEL_LOCK = threading.Lock()


@dataclass(frozen=True)
class Kernel:
    """Radial kernel: coefficients of the even polynomial factor, plus
    samples of the profile on a uniform [0, 1] grid."""

    s: int
    n: int
    coeffs: tuple[float, ...]
    samples: np.ndarray
    band: tuple[float, float]
    deviation: float

    def profile(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) <= 1.0
        poly = np.zeros_like(u)
        for i, a in enumerate(self.coeffs):
            poly += a * u ** (2 * i)
        return np.where(inside, poly * (1.0 - np.minimum(u**2, 1.0)) ** BUMP_POWER, 0.0)

    def fourier_sq(self, omega: np.ndarray) -> np.ndarray:
        """|khat|^2 on a radial frequency grid (cosine transform in 1D,
        order-zero Hankel in 2D)."""
        omega = np.asarray(omega, dtype=float)
        r = (np.arange(RADIAL_QUAD) + 0.5) / RADIAL_QUAD
        dr = 1.0 / RADIAL_QUAD
        rho = self.profile(r)
        out = np.empty(omega.shape)
        flat = omega.reshape(-1)
        for start in range(0, flat.size, 256):
            chunk = flat[start : start + 256]
            if self.n == 1:
                k = 2.0 * (np.cos(np.outer(chunk, r)) @ rho) * dr
            else:
                k = 2.0 * math.pi * (j0(np.outer(chunk, r)) @ (rho * r)) * dr
            out.reshape(-1)[start : start + chunk.size] = k * k
        return out

    def moment_residuals(self) -> dict:
        """Normalized continuous moments |int k(x) x^gamma| / int |k| for
        |gamma| <= s. Even orders evaluate exactly through the beta-function
        moments of the polynomial profile; odd orders vanish by symmetry."""
        r = (np.arange(RADIAL_QUAD) + 0.5) / RADIAL_QUAD
        dr = 1.0 / RADIAL_QUAD
        rho = self.profile(r)
        mass = float(np.sum(np.abs(rho) * r ** (self.n - 1))) * dr
        out = {}
        for order in range(self.s + 1):
            if order % 2 == 1:
                out[order] = 0.0
            else:
                m = sum(
                    a * _beta_moment(i, order // 2, self.n)
                    for i, a in enumerate(self.coeffs)
                )
                out[order] = abs(m) / mass
        return out


def _beta_moment(i: int, j: int, n: int) -> float:
    # int_0^1 u^{2i + 2j + n - 1} (1 - u^2)^4 du = (1/2) B(i + j + n/2, 5)
    k = i + j + n / 2.0
    return 0.5 * math.gamma(k) * math.gamma(5) / math.gamma(k + 5)


def build_kernel(
    s: int,
    n: int = 1,
    band: tuple[float, float] = (0.05, 51.2),
    xi_grid: np.ndarray | None = None,
) -> Kernel:
    """Kernel with vanishing moments through order s, Calderon-rescaled.
    Results for the default xi grid are memoized; kernels are immutable."""
    if n not in (1, 2):
        raise ConfigError("kernel dimension must be 1 or 2")
    if s < 0:
        raise ConfigError("moment order must be >= 0")
    cache_key = (s, n, tuple(band)) if xi_grid is None else None
    if cache_key is not None:
        with _KERNEL_LOCK:
            hit = _KERNEL_CACHE.get(cache_key)
        if hit is not None:
            return hit
    n_constraints = s // 2 + 1
    n_basis = n_constraints + 1
    system = np.array(
        [[_beta_moment(i, j, n) for i in range(n_basis)] for j in range(n_constraints)]
    )
    null = null_space(system)
    if null.shape[1] < 1:
        raise MolabError("kernel moment system has no null direction")
    coeffs = null[:, 0]
    lead = coeffs[np.argmax(np.abs(coeffs))]
    coeffs = coeffs / lead  # deterministic orientation
    kernel = Kernel(
        s=s, n=n, coeffs=tuple(coeffs), samples=np.zeros(1), band=band, deviation=0.0
    )
    grid_u = np.linspace(0.0, 1.0, 513)
    peak = float(np.max(np.abs(kernel.profile(grid_u))))
    coeffs = tuple(c / peak for c in coeffs)
    kernel = Kernel(
        s=s, n=n, coeffs=coeffs, samples=np.zeros(1), band=band, deviation=0.0
    )

    if xi_grid is None:
        xi_grid = np.geomspace(2.0**-0.5, 2.0**0.5, 64)
    ints = _band_integrals(kernel, band, xi_grid)
    mean = float(np.mean(ints))
    if mean <= 0:
        raise BandTooNarrowError("band too narrow: no spectral mass captured")
    coeffs = tuple(c / math.sqrt(mean) for c in coeffs)
    kernel = Kernel(
        s=s, n=n, coeffs=coeffs, samples=np.zeros(1), band=band, deviation=0.0
    )
    dev = calderon_deviation(kernel, band, xi_grid)
    samples = kernel.profile(grid_u)
    samples.setflags(write=False)
    out = Kernel(s=s, n=n, coeffs=coeffs, samples=samples, band=band, deviation=dev)
    if cache_key is not None:
        with _KERNEL_LOCK:
            _KERNEL_CACHE[cache_key] = out
    return out


def _band_integrals(kernel: Kernel, band, xi_grid) -> np.ndarray:
    t0, t1 = band
    if not 0 < t0 < t1:
        raise ConfigError("band must satisfy 0 < t0 < t1")
    # log-midpoint quadrature of |khat(xi t)|^2 dt/t
    edges = np.geomspace(t0, t1, CALDERON_T_POINTS + 1)
    mids = np.sqrt(edges[:-1] * edges[1:])
    dln = np.log(edges[1:]) - np.log(edges[:-1])
    xi = np.asarray(xi_grid, dtype=float).reshape(-1, 1)
    vals = kernel.fourier_sq(xi * mids[None, :])
    return vals @ dln


def calderon_deviation(
    kernel: Kernel, band=None, xi_grid: np.ndarray | None = None
) -> float:
    """Max relative deviation of the band integral from its xi-grid mean.
    Values above 0.5 indicate the band misses too much spectral mass."""
    band = band or kernel.band
    if xi_grid is None:
        xi_grid = np.geomspace(2.0**-0.5, 2.0**0.5, 64)
    ints = _band_integrals(kernel, band, xi_grid)
    mean = float(np.mean(ints))
    if mean <= 0:
        raise BandTooNarrowError("band too narrow: no spectral mass captured")
    dev = float(np.max(np.abs(ints / mean - 1.0)))
    if dev > 0.5:
        raise BandTooNarrowError(
            f"band too narrow: Calderon deviation {dev:.3g} exceeds 0.5"
        )
    return dev


@dataclass(frozen=True)
class HalfSpaceField:
    """Samples over grid nodes x dilation levels, with validity flags for
    nodes whose dilated kernel support stays inside the box."""

    grid: Grid
    t_levels: np.ndarray
    values: np.ndarray  # (levels,) + grid shape
    valid: np.ndarray  # bool, same shape
    kernel_s: int

    @property
    def dln_t(self) -> float:
        return float(np.log(self.t_levels[1] / self.t_levels[0])) if len(
            self.t_levels
        ) > 1 else math.log(2.0) / 8.0


def default_t_levels(grid: Grid) -> np.ndarray:
    """Dyadic-refined ladder, 8 per octave, from 4 max(h) to min side / 4."""
    h = float(np.max(grid.h))
    t_min = 4.0 * h
    t_max = float(np.min(grid.box.sides)) / 4.0
    if t_min > t_max * (1 + 1e-12):
        raise ConfigError("grid too coarse for the dilation ladder")
    count = int(np.floor(8.0 * np.log2(t_max / t_min) + 1e-9)) + 1
    return t_min * 2.0 ** (np.arange(count) / 8.0)


def _taps_1d(kernel: Kernel, t: float, h: float) -> np.ndarray:
    m = int(np.floor(t / h + 1e-9))
    offsets = np.arange(-m, m + 1) * h
    taps = kernel.profile(np.abs(offsets) / t) / t
    # discrete moment correction: remove the projection onto polynomials of
    # degree <= s in the offset variable so sampled polynomials are killed
    V = np.stack([(offsets / t) ** j for j in range(kernel.s + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(V, taps, rcond=None)
    return taps - V @ coef


def _taps_2d(kernel: Kernel, t: float, h: np.ndarray) -> np.ndarray:
    m0 = int(np.floor(t / h[0] + 1e-9))
    m1 = int(np.floor(t / h[1] + 1e-9))
    d0 = np.arange(-m0, m0 + 1) * h[0]
    d1 = np.arange(-m1, m1 + 1) * h[1]
    rr = np.sqrt(d0[:, None] ** 2 + d1[None, :] ** 2)
    taps = kernel.profile(rr / t) / t**2
    inside = rr <= t
    taps = np.where(inside, taps, 0.0)
    exps = [(a, b) for tot in range(kernel.s + 1) for a in range(tot + 1) for b in [tot - a]]
    cols = []
    for a, b in exps:
        cols.append(((d0[:, None] / t) ** a * (d1[None, :] / t) ** b)[inside])
    V = np.stack(cols, axis=1)
    flat = taps[inside]
    coef, *_ = np.linalg.lstsq(V, flat, rcond=None)
    corrected = taps.copy()
    corrected[inside] = flat - V @ coef
    return corrected


def square_transform(
    b: GridFunction, kernel: Kernel, t_levels: np.ndarray | None = None
) -> HalfSpaceField:
    """Discrete convolutions with the t-dilated kernel on every level."""
    grid = b.grid
    if kernel.n != grid.n:
        raise ConfigError("kernel dimension does not match the grid")
    if t_levels is None:
        t_levels = default_t_levels(grid)
    t_levels = np.asarray(t_levels, dtype=float)
    vol = grid.cell_volume
    shape = grid.shape
    values = np.zeros((t_levels.size,) + shape)
    valid = np.zeros((t_levels.size,) + shape, dtype=bool)
    for k, t in enumerate(t_levels):
        if grid.n == 1:
            taps = _taps_1d(kernel, t, float(grid.h[0]))
            values[k] = np.convolve(b.values, taps, mode="same") * vol
        else:
            from scipy.ndimage import convolve as nd_convolve

            taps = _taps_2d(kernel, t, grid.h)
            values[k] = nd_convolve(b.values, taps, mode="constant", cval=0.0) * vol
        ok = np.ones(shape, dtype=bool)
        for i in range(grid.n):
            ax = grid.axis_nodes(i)
            good = (ax - t >= grid.box.lo[i] - 1e-12) & (
                ax + t <= grid.box.hi[i] + 1e-12
            )
            ok &= good[:, None] if (grid.n == 2 and i == 0) else good
        valid[k] = ok
    return HalfSpaceField(
        grid=grid, t_levels=t_levels, values=values, valid=valid, kernel_s=kernel.s
    )


def _phi_prefix(gf: GrowthFunction, grid: Grid, t_b: float) -> np.ndarray:
    """Cumulative phi(x, t_b) h^n in grid shape (per row in 2D)."""
    phis = gf.eval(grid.nodes, t_b).reshape(grid.shape) * grid.cell_volume
    return np.cumsum(phis, axis=-1)


def _window_sum(prefix: np.ndarray, i: np.ndarray, half: int) -> np.ndarray:
    """Sum over index window [i-half, i+half] along the last axis; the same
    column windows are applied to every leading row."""
    n = prefix.shape[-1]
    hi = np.clip(i + half, -1, n - 1)
    lo = np.clip(i - half - 1, -1, n - 1)
    top = np.where(hi >= 0, prefix[..., np.maximum(hi, 0)], 0.0)
    bot = np.where(lo >= 0, prefix[..., np.maximum(lo, 0)], 0.0)
    return top - bot


def _window_sum_rows(
    prefix2: np.ndarray, rows: np.ndarray, cols: np.ndarray, half: int
) -> np.ndarray:
    """Pairwise window sum: entry k sums prefix row rows[k] over the column
    window [cols[k]-half, cols[k]+half]."""
    n = prefix2.shape[-1]
    hi = np.clip(cols + half, -1, n - 1)
    lo = np.clip(cols - half - 1, -1, n - 1)
    top = np.where(hi >= 0, prefix2[rows, np.maximum(hi, 0)], 0.0)
    bot = np.where(lo >= 0, prefix2[rows, np.maximum(lo, 0)], 0.0)
    return top - bot


def _ball_half_width(t: float, h: float) -> int:
    # node window: |j - i| h < t  <=>  |j - i| <= ceil(t/h) - 1
    return int(np.ceil(t / h - 1e-12)) - 1


def carleson_norm(
    field: HalfSpaceField,
    gf: GrowthFunction,
    balls,
    chi_tol: float = 1e-12,
    threads: int = 1,
) -> dict:
    """Tent energy per family ball; returns the sup, the per-ball table and
    any skip warnings (balls whose tent catches no valid point)."""
    grid = field.grid
    n = grid.n
    vol = grid.cell_volume
    dln = field.dln_t
    nodes = grid.nodes
    sq = field.values**2

    def one(ball: Ball) -> tuple[str, float, str | None]:
        chi = chi_ball_norm(gf, grid, ball, chi_tol)
        t_b = 1.0 / chi
        prefix = _phi_prefix(gf, grid, t_b)
        dist = np.linalg.norm(
            nodes - np.asarray(ball.center), axis=1
        ).reshape(grid.shape)
        total = 0.0
        hits = 0
        for k, t in enumerate(field.t_levels):
            if t >= ball.radius:
                continue
            tent = (dist + t < ball.radius) & field.valid[k]
            if not np.any(tent):
                continue
            if n == 1:
                idx = np.nonzero(tent)[0]
                half = _ball_half_width(t, float(grid.h[0]))
                meas = _window_sum(prefix, idx, half)
            else:
                idx0, idx1 = np.nonzero(tent)
                h0, h1 = float(grid.h[0]), float(grid.h[1])
                m0 = _ball_half_width(t, h0)
                meas = np.zeros(idx0.size)
                for d0 in range(-m0, m0 + 1):
                    rows = idx0 + d0
                    ok = (rows >= 0) & (rows < grid.shape[0])
                    rem = t**2 - (d0 * h0) ** 2
                    if rem <= 0:
                        continue
                    half1 = int(np.ceil(math.sqrt(rem) / h1 - 1e-12)) - 1
                    if half1 < 0:
                        continue
                    rows_c = np.clip(rows, 0, grid.shape[0] - 1)
                    contrib = _window_sum_rows(prefix, rows_c, idx1, half1)
                    meas += np.where(ok, contrib, 0.0)
            vals = sq[k][tent]
            total += float(np.sum(vals * (t**n) / meas)) * vol * dln
            hits += int(idx.size if n == 1 else idx0.size)
        if hits == 0:
            return ball.label(), 0.0, f"empty tent for {ball.label()}; skipped"
        return ball.label(), math.sqrt(total) / chi, None

    rows = ordered_map(one, list(balls), threads)
    warnings = [w for _, _, w in rows if w]
    live = [(lbl, v) for lbl, v, w in rows if w is None]
    if not live:
        raise MolabError("all tents empty: dilation ladder does not fit any ball")
    value = max(v for _, v in live)
    return {
        "value": value,
        "per_ball": [{"ball": lbl, "value": v} for lbl, v in live],
        "warnings": warnings,
    }


def area_function(field: HalfSpaceField) -> GridFunction:
    """Cone square function per node: sqrt of the cone integral of
    |field|^2 dy dt / t^{n+1} over valid points."""
    grid = field.grid
    n = grid.n
    vol = grid.cell_volume
    dln = field.dln_t
    acc = np.zeros(grid.shape)
    for k, t in enumerate(field.t_levels):
        sq = np.where(field.valid[k], field.values[k] ** 2, 0.0)
        scale = vol * dln / t**n
        if n == 1:
            prefix = np.cumsum(sq)
            idx = np.arange(grid.shape[0])
            half = _ball_half_width(t, float(grid.h[0]))
            acc += _window_sum(prefix, idx, half) * scale
        else:
            h0, h1 = float(grid.h[0]), float(grid.h[1])
            m0 = _ball_half_width(t, h0)
            prefix = np.cumsum(sq, axis=1)
            idx1 = np.arange(grid.shape[1])
            for d0 in range(-m0, m0 + 1):
                rem = t**2 - (d0 * h0) ** 2
                if rem <= 0:
                    continue
                half1 = int(np.ceil(math.sqrt(rem) / h1 - 1e-12)) - 1
                if half1 < 0:
                    continue
                shifted = np.zeros_like(prefix)
                if d0 >= 0:
                    shifted[: grid.shape[0] - d0 if d0 else grid.shape[0]] = prefix[d0:]
                else:
                    shifted[-d0:] = prefix[:d0]
                acc += _window_sum(shifted, idx1, half1) * scale
    return GridFunction(grid, np.sqrt(acc))
