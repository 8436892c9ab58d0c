"""Distribution-function decay of Campanato oscillations (John-Nirenberg).

For a base ball B0 with t0 = 1 / |chi_B0| and sub-balls B inside B0,

    lambda(alpha, B) = phi-measure at level t0 of
                       { x in B : |f - P_B^s f|(x) / phi(x, t0) > alpha }

with f pre-scaled so that (q=1 Campanato seminorm over the family) * |chi_B0|
equals 1. The decay SHAPE of alpha -> lambda(alpha, B0) is what gets fitted
(exponential for A_1-certified growth, power for the A_q range); the analytic
constants are never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, MolabError
from .grid import Ball, GridFunction, region_mask
from .growth import GrowthFunction
from .luxembourg import chi_ball_norm
from .polyproj import project

__all__ = ["JNCurve", "JNFit", "jn_distribution", "jn_fit"]


@dataclass(frozen=True)
class JNCurve:
    alphas: np.ndarray
    lambda_vals: np.ndarray  # lambda(alpha, base ball)
    f_vals: np.ndarray  # sup over the family of lambda(alpha, B)/phi(B, t0)
    base_ball: Ball
    chi_base: float
    seminorm: float  # q=1 Campanato seminorm used for normalization (0: none)
    phi_base: float  # phi(B0, t0)

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "lambda_vals": self.lambda_vals.tolist(),
            "f_vals": self.f_vals.tolist(),
            "base_ball": self.base_ball.label(),
            "chi_base": self.chi_base,
            "seminorm": self.seminorm,
            "phi_base": self.phi_base,
        }


@dataclass(frozen=True)
class JNFit:
    model: str
    c_front: float  # multiplicative constant of the fitted model
    rate: float  # decay rate (exp) or exponent magnitude (power)
    slope: float  # raw fitted slope in the linearized coordinates
    r_squared: float
    n_points: int
    alpha_window: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "c_front": self.c_front,
            "rate": self.rate,
            "slope": self.slope,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "alpha_window": list(self.alpha_window),
        }


def jn_distribution(
    f: GridFunction,
    gf: GrowthFunction,
    base_ball: Ball,
    s: int,
    sub_balls,
    alpha_grid: np.ndarray | None = None,
    normalize: bool = True,
    chi_tol: float = 1e-12,
) -> JNCurve:
    """Level-set phi-measure curve over a geometric alpha grid.

    The default grid is 64 points spanning [0.01 M, M] where M is the largest
    normalized oscillation on the base ball. normalize=False skips the
    seminorm pre-scaling and exposes the raw level sets (the scaling
    covariance invariant f -> c f, alpha -> c alpha is exact there).
    """
    grid = f.grid
    vol = grid.cell_volume
    family = list(sub_balls)
    for b in family:
        if not base_ball.contains_ball(b):
            raise ConfigError(f"sub-ball {b.label()} is not inside {base_ball.label()}")
    if base_ball not in family:
        family = [base_ball] + family

    chi0 = chi_ball_norm(gf, grid, base_ball, chi_tol)
    t0 = 1.0 / chi0

    scale = 1.0
    seminorm = 0.0
    if normalize:
        from .campanato import campanato_norm

        seminorm = campanato_norm(f, gf, 1.0, s, family, chi_tol)
        if seminorm > 0:
            scale = 1.0 / (seminorm * chi0)

    # per-ball data: normalized oscillation ratio and phi weights at t0
    per_ball = []
    for ball in family:
        mask = region_mask(grid, ball).reshape(-1)
        pts = grid.nodes[mask]
        w = gf.eval(pts, t0)
        poly = project(f, ball, s)
        osc = np.abs(f.flat()[mask] - poly.eval(pts)) * scale
        per_ball.append((ball, osc / w, w))

    base_idx = family.index(base_ball)
    base_osc_ratio, base_w = per_ball[base_idx][1], per_ball[base_idx][2]
    phi_base = float(np.sum(base_w)) * vol

    if alpha_grid is None:
        m = float(np.max(base_osc_ratio)) if base_osc_ratio.size else 0.0
        if m <= 0:
            alpha_grid = np.geomspace(1e-3, 1.0, 64)
        else:
            alpha_grid = np.geomspace(0.01 * m, m, 64)
    alphas = np.asarray(alpha_grid, dtype=float)

    lam = np.array(
        [float(np.sum(base_w[base_osc_ratio > a])) * vol for a in alphas]
    )
    f_vals = np.zeros_like(alphas)
    for ball, ratio, w in per_ball:
        phi_b = float(np.sum(w)) * vol
        vals = np.array([float(np.sum(w[ratio > a])) * vol for a in alphas]) / phi_b
        f_vals = np.maximum(f_vals, vals)

    return JNCurve(
        alphas=alphas,
        lambda_vals=lam,
        f_vals=f_vals,
        base_ball=base_ball,
        chi_base=chi0,
        seminorm=seminorm,
        phi_base=phi_base,
    )


def jn_fit(
    curve: JNCurve,
    model: str = "exp",
    lambda_window: tuple[float, float] = (1e-4, 0.5),
    min_points: int = 8,
) -> JNFit:
    """Least-squares fit of the decay shape inside a lambda window.

    exp model:   ln lambda = ln C - rate * alpha
    power model: ln lambda = ln C - rate * ln(1 + alpha)
    """
    if model not in ("exp", "power"):
        raise ConfigError(f"unknown decay model {model!r}")
    lam = curve.lambda_vals
    keep = (lam >= lambda_window[0]) & (lam <= lambda_window[1]) & (lam > 0)
    if int(np.count_nonzero(keep)) < min_points:
        raise MolabError(
            f"insufficient decay range: {int(np.count_nonzero(keep))} points "
            f"inside lambda window {lambda_window}"
        )
    a = curve.alphas[keep]
    y = np.log(lam[keep])
    x = a if model == "exp" else np.log1p(a)
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    slope = float(coef[1])
    return JNFit(
        model=model,
        c_front=float(np.exp(coef[0])),
        rate=-slope,
        slope=slope,
        r_squared=r2,
        n_points=int(np.count_nonzero(keep)),
        alpha_window=(float(a.min()), float(a.max())),
    )
