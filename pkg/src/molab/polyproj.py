"""L^2 polynomial projections on balls (plain Lebesgue measure).

project(f, B, s) returns the degree-<= s polynomial P minimizing the midpoint
L^2(B) error, which is characterized by the discrete orthogonality

    sum over nodes in B of (f - P)(x_j) Q(x_j) h^n = 0   for all deg Q <= s.

The basis is scaled-centered monomials ((x - c)/r)^alpha, which keeps the Gram
matrix condition number tame for s <= 4; the system is solved by Cholesky.
Degree s = 0 reduces to the quadrature mean over the ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import IllConditionedError, UnderdeterminedError
from .grid import Ball, GridFunction, region_mask

__all__ = [
    "MultiPoly",
    "multi_indices",
    "project",
    "orthogonality_residuals",
    "lemma_pbg_ratio",
]

COND_LIMIT = 1e12


def multi_indices(n: int, s: int) -> list[tuple[int, ...]]:
    """Exponent tuples with |alpha| <= s, graded lexicographic."""
    if n == 1:
        return [(k,) for k in range(s + 1)]
    out = []
    for total in range(s + 1):
        for a in range(total, -1, -1):
            out.append((a, total - a))
    return out


@dataclass(frozen=True)
class MultiPoly:
    """Polynomial sum_alpha coeff_alpha ((x - center)/scale)^alpha."""

    center: tuple[float, ...]
    scale: float
    degree: int
    exponents: tuple[tuple[int, ...], ...]
    coeffs: tuple[float, ...]

    def eval(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xi = (points - np.asarray(self.center)) / self.scale
        out = np.zeros(points.shape[0])
        for alpha, c in zip(self.exponents, self.coeffs):
            term = np.ones(points.shape[0]) * c
            for i, a in enumerate(alpha):
                if a:
                    term = term * xi[:, i] ** a
            out += term
        return out

    def eval_grid(self, grid) -> np.ndarray:
        return self.eval(grid.nodes).reshape(grid.shape)


def _design(points: np.ndarray, ball: Ball, exponents) -> np.ndarray:
    xi = (points - np.asarray(ball.center)) / ball.radius
    cols = []
    for alpha in exponents:
        col = np.ones(points.shape[0])
        for i, a in enumerate(alpha):
            if a:
                col = col * xi[:, i] ** a
        cols.append(col)
    return np.stack(cols, axis=1)


def project(f: GridFunction, ball: Ball, s: int) -> MultiPoly:
    """Least-squares polynomial of degree <= s on the ball's nodes."""
    if s < 0:
        raise ValueError("degree must be >= 0")
    grid = f.grid
    mask = region_mask(grid, ball).reshape(-1)
    pts = grid.nodes[mask]
    exps = multi_indices(grid.n, s)
    if pts.shape[0] < len(exps):
        raise UnderdeterminedError(
            f"underdetermined projection on {ball.label()}: "
            f"{pts.shape[0]} nodes for {len(exps)} coefficients"
        )
    V = _design(pts, ball, exps)
    G = V.T @ V * grid.cell_volume
    rhs = V.T @ f.flat()[mask] * grid.cell_volume
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"ill-conditioned Gram matrix on {ball.label()} (cond ~ {cond:.3g})"
        )
    try:
        coeffs = cho_solve(cho_factor(G), rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond guard first
        raise IllConditionedError(str(exc)) from exc
    return MultiPoly(
        center=ball.center,
        scale=ball.radius,
        degree=s,
        exponents=tuple(exps),
        coeffs=tuple(float(c) for c in coeffs),
    )


def orthogonality_residuals(f: GridFunction, poly: MultiPoly, ball: Ball) -> np.ndarray:
    """Per-basis-function residuals of the orthogonality relations, scaled by
    the L^1(B) mass of f (zero mass means f vanishes on B; residuals are then
    reported raw)."""
    grid = f.grid
    mask = region_mask(grid, ball).reshape(-1)
    pts = grid.nodes[mask]
    diff = f.flat()[mask] - poly.eval(pts)
    V = _design(pts, ball, poly.exponents)
    raw = V.T @ diff * grid.cell_volume
    mass = float(np.sum(np.abs(f.flat()[mask]))) * grid.cell_volume
    if mass > 0:
        return np.abs(raw) / mass
    return np.abs(raw)


def lemma_pbg_ratio(f: GridFunction, ball: Ball, s: int) -> float:
    """sup over the ball's nodes of |P| times |B| / integral of |f| over B,
    with the quadrature ball measure. The analytic bound says this ratio is
    controlled by a constant depending only on (n, s)."""
    grid = f.grid
    mask = region_mask(grid, ball).reshape(-1)
    pts = grid.nodes[mask]
    poly = project(f, ball, s)
    sup = float(np.max(np.abs(poly.eval(pts))))
    mass = float(np.sum(np.abs(f.flat()[mask]))) * grid.cell_volume
    size = pts.shape[0] * grid.cell_volume
    if mass == 0.0:
        return 0.0
    return sup * size / mass
