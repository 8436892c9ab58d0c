"""Luxembourg norms on the discretized box.

norm(f) = inf { lam > 0 : Theta(lam) <= 1 },
Theta(lam) = integral of phi(x, |f(x)| / lam)

solved by geometric bracketing from lam0 = max |f| followed by bisection.
Theta is nonincreasing in lam, so the bracket is safe; the solver stops when
|Theta - 1| <= tol (relative to 1) or the iteration cap is hit.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NormOverflowError
from .grid import Ball, Grid, GridFunction, region_mask
from .growth import GrowthFunction, phi_measure

__all__ = [
    "LuxResult",
    "theta",
    "luxembourg_solve",
    "luxembourg_norm",
    "chi_ball_norm",
    "clear_chi_cache",
    "comparison_constant",
]

MAX_BISECT = 60
MAX_BRACKET = 2100  # covers the full double range in factor-2 steps


@dataclass(frozen=True)
class LuxResult:
    norm: float
    iterations: int
    theta_residual: float


def theta(f: GridFunction, gf: GrowthFunction, lam: float) -> float:
    """Modular at scale lam over the whole box (f vanishes off its support,
    and phi(x, 0) = 0, so the box integral is the full-space one)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    vals = np.abs(f.flat()) / lam
    return float(np.sum(gf.eval(f.grid.nodes, vals))) * f.grid.cell_volume


def _solve(theta_fn, lam0: float, tol: float) -> LuxResult:
    """Bisection for inf{lam : Theta(lam) <= 1}. Always returns a feasible
    scale: Theta(norm) <= 1, with theta_residual = 1 - Theta(norm) <= tol
    when the bisection budget suffices."""
    lam = lam0
    val = theta_fn(lam)
    evals = 1
    while not np.isfinite(val):
        # singular modular at the initial bracket: push the scale up
        lam *= 2.0
        val = theta_fn(lam)
        evals += 1
        if evals > MAX_BRACKET:
            raise NormOverflowError("norm overflow: modular stayed non-finite")
    if 0.0 <= 1.0 - val <= tol:
        return LuxResult(norm=lam, iterations=evals, theta_residual=1.0 - val)
    if val > 1.0:
        lo = lam
        while val > 1.0:
            lam *= 2.0
            val = theta_fn(lam)
            evals += 1
            if not np.isfinite(lam) or evals > MAX_BRACKET:
                raise NormOverflowError("norm overflow: no upper bracket found")
        lo, hi, hi_val = lam / 2.0, lam, val
    else:
        hi, hi_val = lam, val
        while val <= 1.0:
            lam /= 2.0
            if lam == 0.0 or evals > MAX_BRACKET:
                # modular stays <= 1 all the way down: norm is 0
                return LuxResult(norm=0.0, iterations=evals, theta_residual=0.0)
            hi, hi_val = lam * 2.0, val
            val = theta_fn(lam)
            evals += 1
        lo = lam
    # invariant: Theta(lo) > 1 >= Theta(hi); shrink until hi is tight
    for _ in range(MAX_BISECT):
        if 1.0 - hi_val <= tol:
            break
        mid = 0.5 * (lo + hi)
        val = theta_fn(mid)
        evals += 1
        if val > 1.0:
            lo = mid
        else:
            hi, hi_val = mid, val
    return LuxResult(
        norm=float(hi), iterations=evals, theta_residual=float(1.0 - hi_val)
    )


def luxembourg_solve(
    f: GridFunction, gf: GrowthFunction, tol: float = 1e-8
) -> LuxResult:
    lam0 = float(np.max(np.abs(f.values)))
    if lam0 == 0.0:
        return LuxResult(norm=0.0, iterations=0, theta_residual=0.0)
    return _solve(lambda lam: theta(f, gf, lam), lam0, tol)


def luxembourg_norm(f: GridFunction, gf: GrowthFunction, tol: float = 1e-8) -> float:
    return luxembourg_solve(f, gf, tol).norm


_chi_cache: dict[tuple, float] = {}
_chi_lock = threading.Lock()


def clear_chi_cache() -> None:
    with _chi_lock:
        _chi_cache.clear()


def chi_ball_norm(
    gf: GrowthFunction, grid: Grid, ball: Ball, tol: float = 1e-12
) -> float:
    """Luxembourg norm of the ball indicator, memoized per (growth, grid,
    ball, tol). Defaults to a tighter tolerance than luxembourg_norm: the
    Campanato machinery divides by this value inside sup/ratio comparisons
    whose slack is exactly the modular residual."""
    key = (gf.fingerprint, grid.key(), ball.key(), float(tol))
    with _chi_lock:
        hit = _chi_cache.get(key)
    if hit is not None:
        return hit
    mask = region_mask(grid, ball).reshape(-1)
    pts = grid.nodes[mask]
    if pts.shape[0] == 0:
        raise NormOverflowError(f"ball {ball.label()} contains no grid node")
    vol = grid.cell_volume

    def theta_fn(lam: float) -> float:
        return float(np.sum(gf.eval(pts, 1.0 / lam))) * vol

    res = _solve(theta_fn, 1.0, tol)
    with _chi_lock:
        _chi_cache[key] = res.norm
    return res.norm


def comparison_constant(
    gf: GrowthFunction,
    grid: Grid,
    balls: Sequence[Ball],
    tol: float = 1e-12,
) -> dict:
    """Empirical constant C for the nested-ball comparison

        phi(B, 1/|chi_B|) / |chi_B|  <=  C * phi(B', 1/|chi_B|) / |chi_B'|

    over pairs B' inside B from the family. Returns the max ratio and the
    per-pair table; a finite-family lower bound for the true constant."""
    chis = {b.key(): chi_ball_norm(gf, grid, b, tol) for b in balls}
    pairs = []
    worst = 0.0
    for big in balls:
        t_big = 1.0 / chis[big.key()]
        lhs = phi_measure(gf, grid, big, t_big) / chis[big.key()]
        for small in balls:
            if small is big or not big.contains_ball(small):
                continue
            rhs = phi_measure(gf, grid, small, t_big) / chis[small.key()]
            if rhs <= 0:
                continue
            ratio = lhs / rhs
            pairs.append(
                {
                    "outer": big.label(),
                    "inner": small.label(),
                    "ratio": ratio,
                }
            )
            worst = max(worst, ratio)
    return {"constant": worst, "pairs": pairs}
