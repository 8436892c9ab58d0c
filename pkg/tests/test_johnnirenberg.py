import numpy as np
import pytest

from molab.corpus import corpus
from molab.errors import ConfigError, MolabError
from molab.grid import Ball
from molab.growth import WeightSpec, power, weighted_power
from molab.johnnirenberg import JNCurve, jn_distribution, jn_fit


def synthetic_curve(rate, c_front, model="exp", n=40):
    alphas = np.linspace(0.05, 4.0, n)
    if model == "exp":
        lam = c_front * np.exp(-rate * alphas)
    else:
        lam = c_front * (1.0 + alphas) ** (-rate)
    return JNCurve(
        alphas=alphas,
        lambda_vals=lam,
        f_vals=np.zeros(n),
        base_ball=Ball(center=(0.0,), radius=1.0),
        chi_base=1.0,
        seminorm=1.0,
        phi_base=1.0,
    )


def test_fit_recovers_exp_slope_exactly():
    curve = synthetic_curve(3.0, 0.4, "exp")
    fit = jn_fit(curve, "exp", lambda_window=(1e-12, 1.0))
    assert fit.rate == pytest.approx(3.0, abs=1e-9)
    assert fit.c_front == pytest.approx(0.4, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_recovers_power_exponent_exactly():
    curve = synthetic_curve(2.5, 0.3, "power")
    fit = jn_fit(curve, "power", lambda_window=(1e-12, 1.0))
    assert fit.rate == pytest.approx(2.5, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_insufficient_window():
    curve = synthetic_curve(3.0, 0.4, "exp")
    with pytest.raises(MolabError):
        jn_fit(curve, "exp", lambda_window=(1e-30, 1e-29))


def test_distribution_monotone(grid1d, family1d):
    f = corpus("log_abs", grid1d)
    gf = power(1.0)
    base = family1d[0]
    subs = [b for b in family1d if base.contains_ball(b)]
    curve = jn_distribution(f, gf, base, 0, subs)
    assert np.all(np.diff(curve.lambda_vals) <= 1e-15)
    assert np.all(curve.lambda_vals >= 0)
    assert curve.alphas.shape == curve.lambda_vals.shape
    # F curve: sup over sub-balls is nonnegative and finite
    assert np.all(np.isfinite(curve.f_vals))


def test_distribution_requires_containment(grid1d, family1d):
    f = corpus("log_abs", grid1d)
    outside = Ball(center=(1.5,), radius=0.4)
    with pytest.raises(ConfigError):
        jn_distribution(f, power(1.0), Ball(center=(-1.0,), radius=1.0), 0, [outside])


def test_scaling_covariance_unnormalized(grid1d, family1d):
    # without normalization, 2f at level 2a has exactly the level sets of f
    # at level a (doubling is exact in binary floating point)
    f = corpus("log_abs", grid1d)
    gf = power(1.0)
    base = family1d[0]
    subs = [b for b in family1d if base.contains_ball(b)]
    alphas = np.geomspace(0.05, 5.0, 32)
    c1 = jn_distribution(f, gf, base, 0, subs, alpha_grid=alphas, normalize=False)
    f2 = f.with_values(2.0 * f.values)
    c2 = jn_distribution(
        f2, gf, base, 0, subs, alpha_grid=2.0 * alphas, normalize=False
    )
    assert np.array_equal(c1.lambda_vals, c2.lambda_vals)


def test_normalized_curve_invariant_under_scaling(grid1d, family1d):
    # with normalization the whole curve is scale-free
    f = corpus("log_abs", grid1d)
    gf = power(1.0)
    base = family1d[0]
    subs = [b for b in family1d if base.contains_ball(b)]
    alphas = np.geomspace(0.05, 5.0, 32)
    c1 = jn_distribution(f, gf, base, 0, subs, alpha_grid=alphas)
    f3 = f.with_values(4.0 * f.values)
    c2 = jn_distribution(f3, gf, base, 0, subs, alpha_grid=alphas)
    assert np.allclose(c1.lambda_vals, c2.lambda_vals, rtol=1e-12, atol=0)


def test_real_exp_fit_quality(grid1d, family1d):
    f = corpus("log_abs", grid1d)
    gf = power(1.0)
    base = family1d[0]
    subs = [b for b in family1d if base.contains_ball(b)]
    curve = jn_distribution(f, gf, base, 0, subs)
    fit = jn_fit(curve, "exp", lambda_window=(1e-3, 0.5))
    assert fit.rate > 0
    assert fit.r_squared >= 0.9
    d = fit.to_dict()
    assert set(d) >= {"model", "rate", "r_squared", "n_points"}


def test_weighted_power_model_fit(grid1d, family1d):
    f = corpus("log_abs", grid1d)
    gf = weighted_power(1.0, WeightSpec(kind="abs_power", a=0.5))
    base = family1d[0]
    subs = [b for b in family1d if base.contains_ball(b)]
    curve = jn_distribution(f, gf, base, 0, subs)
    fit = jn_fit(curve, "power", lambda_window=(1e-3, 0.5))
    assert fit.rate > 0
    assert np.isfinite(fit.r_squared)


def test_curve_to_dict(grid1d, family1d):
    f = corpus("sign", grid1d)
    base = family1d[0]
    subs = [b for b in family1d if base.contains_ball(b)]
    curve = jn_distribution(f, power(1.0), base, 0, subs)
    d = curve.to_dict()
    assert set(d) >= {"alphas", "lambda_vals", "f_vals", "base_ball"}
    assert len(d["alphas"]) == len(d["lambda_vals"])
