import numpy as np
import pytest

from molab.atoms import (
    Atom,
    duality_pairing,
    lambda_q,
    lq_phi_ball_norm,
    make_atom,
    raw_moments,
    validate_atom,
)
from molab.corpus import DEFAULT_CORPUS, corpus
from molab.errors import DegenerateProfileError
from molab.grid import Ball, GridFunction, region_mask
from molab.growth import WeightSpec, ky_log, power, weighted_power
from molab.luxembourg import chi_ball_norm


def test_lq_norm_power_closed_form(grid1d):
    # phi = t^p: the t factor cancels, so the norm is the |B|-mean of |f|^q
    f = corpus("log_abs", grid1d)
    b = Ball(center=(0.5,), radius=0.5)
    gf = power(0.5)
    mask = region_mask(grid1d, b).reshape(-1)
    size = mask.sum() * grid1d.cell_volume
    expected = (
        float(np.sum(np.abs(f.flat()) ** 2)) * grid1d.cell_volume / size
    ) ** 0.5
    assert lq_phi_ball_norm(f, b, 2.0, gf) == pytest.approx(expected, rel=1e-12)


def test_lq_norm_weighted_closed_form(grid1d):
    # weighted power: same cancellation against the w-mass of the ball
    spec = WeightSpec(kind="abs_power", a=1.0 / 3.0)
    gf = weighted_power(0.75, spec)
    f = corpus("abs_power(0.4)", grid1d)
    b = Ball(center=(-0.5,), radius=0.5)
    mask = region_mask(grid1d, b).reshape(-1)
    w_all = spec.values(grid1d.nodes)
    wb = float(np.sum(w_all[mask])) * grid1d.cell_volume
    expected = (
        float(np.sum(np.abs(f.flat()) ** 2 * w_all)) * grid1d.cell_volume / wb
    ) ** 0.5
    assert lq_phi_ball_norm(f, b, 2.0, gf) == pytest.approx(expected, rel=1e-12)


def test_lq_norm_kylog_dense_scan(grid1d):
    # non-separable growth: check the default t grid against a 10x denser one
    f = corpus("log_abs", grid1d)
    b = Ball(center=(0.5,), radius=0.5)
    gf = ky_log()
    from molab.atoms import default_t_grid

    coarse = lq_phi_ball_norm(f, b, 2.0, gf)
    dense = lq_phi_ball_norm(
        f, b, 2.0, gf, t_grid=default_t_grid(gf, grid1d, b, points=1201)
    )
    assert coarse <= dense * (1.0 + 1e-12)
    assert dense <= coarse * 1.01


def test_lq_norm_inf(grid1d):
    f = corpus("sign", grid1d)
    b = Ball(center=(0.0,), radius=1.0)
    assert lq_phi_ball_norm(f, b, np.inf, power(1.0)) == 1.0


def test_raw_moments_linear(grid1d):
    x = grid1d.nodes[:, 0]
    f = GridFunction(grid1d, x.reshape(grid1d.shape))
    b = Ball(center=(0.0,), radius=1.0)
    m = raw_moments(f, b, 1)
    # odd function on a symmetric ball: zeroth moment vanishes, first does not
    assert abs(m["moments"][(0,)]) <= 1e-12
    assert m["moments"][(1,)] > 1e-3


def test_make_atom_properties(grid1d, family1d, growth_zoo):
    profile = corpus("random_seeded(42)", grid1d)
    for gf in (growth_zoo["power1"], growth_zoo["weighted13"]):
        for b in (family1d[0], family1d[-1]):
            for s in (0, 1, 2):
                atom = make_atom(profile, b, 2.0, s, gf)
                rep = atom.report
                assert rep.support_ok and rep.moments_ok and rep.size_ok
                # support: strictly zero outside the ball
                mask = region_mask(grid1d, b).reshape(-1)
                assert np.all(atom.values.flat()[~mask] == 0.0)
                # size: exactly the target norm bound up to the solver slack
                target = 1.0 / chi_ball_norm(gf, grid1d, b)
                got = lq_phi_ball_norm(atom.values, b, 2.0, gf)
                assert got <= target * (1.0 + 1e-6)
                assert got >= target * (1.0 - 1e-3)


def test_make_atom_moment_kill(grid1d, family1d):
    profile = corpus("log_abs", grid1d)
    atom = make_atom(profile, family1d[1], 2.0, 2, power(1.0))
    m = raw_moments(atom.values, family1d[1], 2)
    assert max(m["margins"].values()) <= 1e-8


def test_make_atom_degenerate_raises(grid1d, family1d):
    x = grid1d.nodes[:, 0]
    # profile already a polynomial of degree <= s: nothing survives
    f = GridFunction(grid1d, (1.0 + x).reshape(grid1d.shape))
    with pytest.raises(DegenerateProfileError):
        make_atom(f, family1d[0], 2.0, 1, power(1.0))


def test_validate_atom_catches_corruption(grid1d, family1d):
    gf = power(1.0)
    b = family1d[0]
    atom = make_atom(corpus("random_seeded(9)", grid1d), b, 2.0, 1, gf)

    # moment violation: add a constant inside the ball
    mask = region_mask(grid1d, b).reshape(-1)
    vals = atom.values.flat().copy()
    vals[mask] += 0.1 * np.max(np.abs(vals))
    bad = Atom(values=atom.values.with_values(vals.reshape(grid1d.shape)), ball=b, q=2.0, s=1)
    assert not validate_atom(bad, gf).moments_ok

    # support violation: poke a node outside
    vals2 = atom.values.flat().copy()
    outside = np.nonzero(~mask)[0][0]
    vals2[outside] = 1.0
    bad2 = Atom(values=atom.values.with_values(vals2.reshape(grid1d.shape)), ball=b, q=2.0, s=1)
    assert not validate_atom(bad2, gf).support_ok

    # size violation: double everything
    bad3 = Atom(values=atom.values.with_values(2.0 * atom.values.values), ball=b, q=2.0, s=1)
    assert not validate_atom(bad3, gf).size_ok


def test_lambda_q_single_ball_unit(grid1d, family1d):
    # S(lambda) = phi(B, t_B / lambda) = 1 exactly at lambda = 1
    gf = power(1.0)
    b = family1d[0]
    lam = lambda_q(gf, grid1d, [(b, 1.0 / chi_ball_norm(gf, grid1d, b))])
    assert lam == pytest.approx(1.0, rel=1e-7)


def test_lambda_q_brute_scan(grid1d, family1d):
    from molab.growth import phi_measure

    gf = power(0.75)
    items = [
        (b, 0.7 / chi_ball_norm(gf, grid1d, b)) for b in family1d[:4]
    ]

    def s_fn(lam):
        return sum(
            phi_measure(gf, grid1d, b, norm / lam) for b, norm in items
        )

    mine = lambda_q(gf, grid1d, items)
    lams = np.geomspace(mine / 10, mine * 10, 20_000)
    oracle = next(float(l) for l in lams if s_fn(float(l)) <= 1.0)
    assert mine == pytest.approx(oracle, rel=1e-3)
    assert s_fn(mine) <= 1.0 + 1e-12


def test_lambda_q_empty():
    from molab.grid import Box, Grid

    g = Grid(box=Box(lo=(-1.0,), hi=(1.0,)), res=(64,))
    assert lambda_q(power(1.0), g, []) == 0.0


def test_duality_pairing_corpus(grid1d, family1d):
    gf = power(1.0)
    atom = make_atom(corpus("random_seeded(3)", grid1d), family1d[4], 2.0, 1, gf)
    for name in DEFAULT_CORPUS:
        g = corpus(name, grid1d)
        rep = duality_pairing(atom, g, gf)
        assert rep.passed
        assert (
            abs(rep.pairing)
            <= (1.0 + 1e-6) * rep.bound + rep.poly_leak + rep.fp_slack
        )
        d = rep.to_dict()
        assert set(d) >= {"pairing", "bound", "poly_leak", "fp_slack", "passed"}


def test_duality_pairing_orthogonal_to_polynomials(grid1d, family1d):
    # g a polynomial of degree <= s pairs to zero against the atom
    x = grid1d.nodes[:, 0]
    g = GridFunction(grid1d, (2.0 - 0.5 * x).reshape(grid1d.shape))
    gf = power(1.0)
    atom = make_atom(corpus("random_seeded(3)", grid1d), family1d[0], 2.0, 1, gf)
    rep = duality_pairing(atom, g, gf)
    scale = float(np.max(np.abs(atom.values.values))) * float(np.max(np.abs(g.values)))
    assert abs(rep.pairing) <= 1e-10 * scale
    assert rep.passed
