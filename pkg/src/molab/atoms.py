"""Atoms for the Musielak-Orlicz Hardy-type pairing experiments.

The ball-localized size norm is

    |f|_{L^q_phi(B)} = sup_t [ phi(B, t)^{-1} integral |f|^q phi(x, t) ]^{1/q}

(sup over a log t-grid scaled by 1 / |chi_B|; q = inf means the node sup). A
(phi, q, s)-atom is supported in a ball, has size norm <= |chi_B|^{-1} and
vanishing raw moments through order s. make_atom manufactures tight atoms by
subtracting the degree-s projection (which kills the moments at the discrete
level) and rescaling to the size bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateProfileError
from .grid import Ball, Grid, GridFunction, region_mask
from .growth import GrowthFunction
from .luxembourg import _solve, chi_ball_norm
from .parallel import ordered_map
from .polyproj import _design, multi_indices, project

__all__ = [
    "Atom",
    "AtomReport",
    "PairingReport",
    "default_t_grid",
    "lq_phi_ball_norm",
    "make_atom",
    "validate_atom",
    "raw_moments",
    "lambda_q",
    "duality_pairing",
]

MOMENT_TOL = 1e-8
SIZE_SLACK = 1e-6
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class AtomReport:
    support_ok: bool
    moments_ok: bool
    size_ok: bool
    margins: dict

    @property
    def ok(self) -> bool:
        return self.support_ok and self.moments_ok and self.size_ok

    def to_dict(self) -> dict:
        return {
            "support_ok": self.support_ok,
            "moments_ok": self.moments_ok,
            "size_ok": self.size_ok,
            "ok": self.ok,
            "margins": dict(self.margins),
        }


@dataclass(frozen=True)
class Atom:
    values: GridFunction
    ball: Ball
    q: float
    s: int
    report: AtomReport | None = None


def default_t_grid(gf: GrowthFunction, grid: Grid, ball: Ball, points: int = 121):
    """Log grid of 121 points spanning [1e-6, 1e6] around 1 / |chi_B|."""
    t_ref = 1.0 / chi_ball_norm(gf, grid, ball)
    return t_ref * np.geomspace(1e-6, 1e6, points)


def lq_phi_ball_norm(
    f: GridFunction,
    ball: Ball,
    q: float,
    gf: GrowthFunction,
    t_grid: np.ndarray | None = None,
) -> float:
    """Sampled sup over the t-grid; a lower bound for the true sup."""
    grid = f.grid
    if q != np.inf and q < 1:
        raise ConfigError("q must be >= 1 or inf")
    if q == np.inf:
        return float(np.max(np.abs(f.values)))
    if t_grid is None:
        t_grid = default_t_grid(gf, grid, ball)
    vol = grid.cell_volume
    flat = f.flat()
    supp = np.abs(flat) > 0
    ball_mask = region_mask(grid, ball).reshape(-1)
    pts_supp = grid.nodes[supp]
    pts_ball = grid.nodes[ball_mask]
    fq = np.abs(flat[supp]) ** q
    best = 0.0
    # chunk the t grid: keeps the (nodes x t) intermediates small
    t_grid = np.asarray(t_grid, dtype=float)
    for start in range(0, t_grid.size, 16):
        chunk = t_grid[start : start + 16]
        num = fq @ gf.eval_outer(pts_supp, chunk) * vol if fq.size else np.zeros(chunk.size)
        den = gf.eval_outer(pts_ball, chunk).sum(axis=0) * vol
        ratio = (num / den) ** (1.0 / q)
        best = max(best, float(ratio.max()))
    return best


def raw_moments(f: GridFunction, ball: Ball, s: int) -> dict:
    """Raw moments about the origin, int f(x) x^alpha, |alpha| <= s, plus
    normalized margins |m_alpha| / (|f|_L1 R^{|alpha|}) with R the coordinate
    sup over the ball's nodes (floored at 1e-12)."""
    grid = f.grid
    mask = region_mask(grid, ball).reshape(-1)
    pts = grid.nodes[mask]
    vals = f.flat()[mask]
    vol = grid.cell_volume
    mass = float(np.sum(np.abs(vals))) * vol
    r_scale = max(float(np.max(np.abs(pts))), 1e-12)
    moments = {}
    margins = {}
    for alpha in multi_indices(grid.n, s):
        mono = np.ones(pts.shape[0])
        for i, a in enumerate(alpha):
            if a:
                mono = mono * pts[:, i] ** a
        m = float(np.sum(vals * mono)) * vol
        moments[alpha] = m
        denom = mass * r_scale ** sum(alpha)
        margins[alpha] = abs(m) / denom if denom > 0 else abs(m)
    return {"moments": moments, "margins": margins, "mass": mass}


def make_atom(
    profile: GridFunction, ball: Ball, q: float, s: int, gf: GrowthFunction
) -> Atom:
    """Tight atom from an arbitrary profile: restrict to the ball, subtract
    the degree-s projection, normalize the size norm to |chi_B|^{-1}."""
    grid = profile.grid
    mask = region_mask(grid, ball)
    poly = project(profile, ball, s)
    corrected = np.where(mask, profile.values - poly.eval_grid(grid), 0.0)
    peak = float(np.max(np.abs(profile.values[mask]))) if np.any(mask) else 0.0
    if float(np.max(np.abs(corrected))) <= 1e-12 * (peak + 1e-300):
        raise DegenerateProfileError(
            f"degenerate profile: polynomial of degree <= {s} on {ball.label()}"
        )
    g = GridFunction(grid, corrected)
    nu = lq_phi_ball_norm(g, ball, q, gf)
    target = 1.0 / chi_ball_norm(gf, grid, ball)
    atom_vals = GridFunction(grid, corrected * (target / nu))
    atom = Atom(values=atom_vals, ball=ball, q=q, s=s)
    report = validate_atom(atom, gf)
    return Atom(values=atom_vals, ball=ball, q=q, s=s, report=report)


def validate_atom(atom: Atom, gf: GrowthFunction) -> AtomReport:
    grid = atom.values.grid
    mask = region_mask(grid, atom.ball)
    outside = np.abs(atom.values.values[~mask])
    peak = float(np.max(np.abs(atom.values.values)))
    leak = float(np.max(outside)) if outside.size else 0.0
    support_ok = leak <= SUPPORT_TOL * (peak + 1e-300)

    mom = raw_moments(atom.values, atom.ball, atom.s)
    moment_max = max(mom["margins"].values()) if mom["margins"] else 0.0
    moments_ok = moment_max <= MOMENT_TOL

    nu = lq_phi_ball_norm(atom.values, atom.ball, atom.q, gf)
    target = 1.0 / chi_ball_norm(gf, grid, atom.ball)
    size_ratio = nu / target
    size_ok = size_ratio <= 1.0 + SIZE_SLACK

    return AtomReport(
        support_ok=support_ok,
        moments_ok=moments_ok,
        size_ok=size_ok,
        margins={
            "support_leak": leak,
            "moment_max": moment_max,
            "size_ratio": size_ratio,
        },
    )


def lambda_q(gf: GrowthFunction, grid: Grid, items, tol: float = 1e-8) -> float:
    """Packing functional: inf { lam : sum_j phi(B_j, norm_j / lam) <= 1 }
    for (ball, size-norm) pairs, by the same bracketing bisection as the
    Luxembourg solver."""
    items = [(b, float(v)) for b, v in items if v > 0]
    if not items:
        return 0.0
    vol = grid.cell_volume
    cached = []
    for ball, norm in items:
        mask = region_mask(grid, ball).reshape(-1)
        cached.append((grid.nodes[mask], norm))

    def s_fn(lam: float) -> float:
        total = 0.0
        for pts, norm in cached:
            total += float(np.sum(gf.eval(pts, norm / lam))) * vol
        return total

    lam0 = max(norm for _, norm in items)
    return _solve(s_fn, lam0, tol).norm


@dataclass(frozen=True)
class PairingReport:
    pairing: float
    bound: float
    poly_leak: float
    fp_slack: float
    atom_norm: float
    passed: bool
    ball: str

    def to_dict(self) -> dict:
        return {
            "pairing": self.pairing,
            "bound": self.bound,
            "poly_leak": self.poly_leak,
            "fp_slack": self.fp_slack,
            "atom_norm": self.atom_norm,
            "passed": self.passed,
            "ball": self.ball,
        }


def duality_pairing(
    atom: Atom, g: GridFunction, gf: GrowthFunction, chi_tol: float = 1e-12
) -> PairingReport:
    """Test |int a g| <= (1 + 1e-6) * |a|_{L^q_phi} |chi_B| * (per-ball
    Campanato value of g at the conjugate exponent) + poly_leak + fp_slack.

    poly_leak = sum_alpha |c_alpha(P_B^s g)| |int a psi_alpha| is the exact
    price of the atom's finite-precision moment residuals (the |int a P|
    term of the analytic chain). fp_slack covers summation rounding in the
    pairing quadrature itself: without it a polynomial g (bound exactly 0)
    fails on ~1e-17 noise. Both are reported separately.
    """
    if not np.isfinite(atom.q) or atom.q <= 1:
        raise ConfigError("pairing bound needs finite q > 1")
    grid = atom.values.grid
    if grid is not g.grid and grid.key() != g.grid.key():
        raise ConfigError("atom and g live on different grids")
    vol = grid.cell_volume
    qp = atom.q / (atom.q - 1.0)

    pairing = float(np.sum(atom.values.values * g.values)) * vol

    ball = atom.ball
    mask = region_mask(grid, ball).reshape(-1)
    pts = grid.nodes[mask]
    chi = chi_ball_norm(gf, grid, ball, chi_tol)
    w = gf.eval(pts, 1.0 / chi)
    poly = project(g, ball, s=atom.s)
    osc = np.abs(g.flat()[mask] - poly.eval(pts))
    camp_val = (float(np.sum(osc**qp * w ** (1.0 - qp))) * vol) ** (1.0 / qp) / chi

    atom_norm = lq_phi_ball_norm(atom.values, ball, atom.q, gf)
    bound = atom_norm * chi * camp_val

    V = _design(pts, ball, poly.exponents)
    basis_moments = V.T @ atom.values.flat()[mask] * vol
    poly_leak = float(np.sum(np.abs(np.asarray(poly.coeffs)) * np.abs(basis_moments)))

    # rounding budget of the pairing sum: ~machine epsilon per absolute term
    fp_slack = 1e-13 * float(np.sum(np.abs(atom.values.values * g.values))) * vol

    passed = abs(pairing) <= (1.0 + 1e-6) * bound + poly_leak + fp_slack
    return PairingReport(
        pairing=pairing,
        bound=bound,
        poly_leak=poly_leak,
        fp_slack=fp_slack,
        atom_norm=atom_norm,
        passed=passed,
        ball=ball.label(),
    )
