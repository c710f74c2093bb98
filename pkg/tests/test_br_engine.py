import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from proxbr import (
    LambdaBelowThreshold, NormedSpace, PreconditionError, br_approximate, catalog_get, ekeland_point,
    from_piecewise, minty_surjectivity_check, range_density_probe,
)
from proxbr.br_engine import ekeland_conditions, iterate_bound
from proxbr.catalog import zero
from proxbr.monotone import violation_measure, sample_graph

X_SQUARED = {"name": "x2", "convex": True, "pieces": [{"lo": None, "hi": None, "coeffs": [0, 0, 1]}]}


def test_br_abs_example(line):
    r = br_approximate(catalog_get("abs"), line, [-0.04], [1.0], 0.08, 1.0)
    assert r.constructed.x[0] == pytest.approx(0.0, abs=1e-12)
    assert r.constructed.xstar[0] == pytest.approx(0.96, abs=1e-9)
    assert r.dx == pytest.approx(0.04, abs=1e-9) and r.dxstar == pytest.approx(0.04, abs=1e-9)
    assert r.bound_x == pytest.approx(math.sqrt(0.08)) and r.bound_xstar == pytest.approx(math.sqrt(0.08))
    assert r.passed


def test_br_quad_in_graph(line):
    r = br_approximate(catalog_get("quad"), line, [0.3], [0.3], 0.0, 1.0)
    assert r.dx <= 1e-9 and r.dxstar <= 1e-9 and r.passed
    assert r.constructed.x[0] == pytest.approx(0.3, abs=1e-9)


def test_br_neg_quad_example(line):
    f = catalog_get("neg_quad_c:2")
    r = br_approximate(f, line, [0.0], [1.0], 9.0, 3.0)
    assert r.constructed.x[0] == pytest.approx(1.0, abs=1e-8)
    assert r.constructed.xstar[0] == pytest.approx(-2.0, abs=1e-7)
    assert r.dx == pytest.approx(1.0, abs=1e-8) and r.dxstar == pytest.approx(3.0, abs=1e-7)
    assert r.bound_x == pytest.approx(math.sqrt(3)) and r.bound_xstar == pytest.approx(math.sqrt(27))
    assert r.passed
    assert not br_approximate(f, line, [0.0], [1.0], 0.01, 3.0).passed


def test_br_abs_negative_control(line):
    r = br_approximate(catalog_get("abs"), line, [0.0], [1.5], 0.01, 1.0)
    assert r.constructed.x[0] == pytest.approx(0.5, abs=1e-9)
    assert r.constructed.xstar[0] == pytest.approx(1.0, abs=1e-9)
    assert r.dx == pytest.approx(0.5, abs=1e-9) and not r.passed
    s = sample_graph(catalog_get("abs"), line, ([-2.0], [2.0]), 100)
    assert violation_measure(s, [0.0], [1.5]) < -0.01


def test_br_refuses_small_lambda(line):
    with pytest.raises(LambdaBelowThreshold):
        br_approximate(catalog_get("neg_quad_c:2"), line, [0.0], [0.0], 0.1, 1.0)
    with pytest.raises(LambdaBelowThreshold):
        br_approximate(catalog_get("neg_quad_c:2"), line, [0.0], [0.0], 0.1, 2.0)
    with pytest.raises(ValueError):
        br_approximate(catalog_get("abs"), line, [0.0], [0.0], -1.0, 1.0)


def test_iterate_bound_reduces_to_radius():
    assert iterate_bound(0.0, 0.08, 2.0) == pytest.approx(math.sqrt(0.04))
    assert iterate_bound(0.0, 0.0, 1.0) == 0.0
    # positive root of lam t^2 - nu t - eps = 0
    t = iterate_bound(0.3, 0.5, 2.0)
    assert 2.0 * t * t - 0.3 * t - 0.5 == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40)
@given(x=st.floats(-3, 3), xs=st.floats(-3, 3), lam=st.floats(0.3, 8.0), eps=st.floats(0, 1),
       name=st.sampled_from(["abs", "quad", "indicator_box", "w_shape", "l0"]), p=st.sampled_from([1.5, 2.0, 3.0]))
def test_identity_and_pair_relation(x, xs, lam, eps, name, p):
    sp = NormedSpace(1, p)
    r = br_approximate(catalog_get(name), sp, [x], [xs], eps, lam)
    a, b, c = r.identity
    scale = max(1.0, b)
    assert abs(a - b) <= 1e-9 * scale and abs(b - c) <= 1e-9 * scale
    # <y* - x*, (x+y) - x> = -lam ||y||^2 and dx* = lam dx
    lhs = float((r.constructed.xstar - r.query_xstar) @ (r.constructed.x - r.query_x))
    assert lhs == pytest.approx(-lam * r.dx ** 2, abs=1e-9 * scale * lam)
    assert r.dxstar == pytest.approx(lam * r.dx, abs=1e-9 * (1 + lam))


@settings(max_examples=30)
@given(x=st.floats(-2, 2), xs=st.floats(-2, 2), lam=st.floats(0.3, 8.0))
def test_bound_holds_whenever_constructed_pair_is_related(x, xs, lam):
    # if the query is eps-related to the constructed pair, the radii follow
    r = br_approximate(catalog_get("abs"), NormedSpace(1), [x], [xs], 0.0, lam)
    eps = lam * r.dx ** 2
    r = br_approximate(catalog_get("abs"), NormedSpace(1), [x], [xs], eps, lam)
    assert r.passed


def test_two_dimensional_record():
    sp = NormedSpace(2, 3.0)
    r = br_approximate(catalog_get("quad2d"), sp, [0.2, -0.1], [0.5, 0.5], 0.1, 1.0)
    assert r.constructed.x.shape == (2,)
    assert "pass" in r.describe()


# -- Ekeland -------------------------------------------------------------------------------

def test_ekeland_x_squared_example(line):
    f = from_piecewise(X_SQUARED)
    G = np.round(np.linspace(-1, 1, 2001), 12)
    xl = ekeland_point(f, line, [0.1], 0.01, 0.1, G)
    assert 0.0 <= xl[0] <= 0.05
    assert all(ekeland_conditions(f, line, [0.1], xl, 0.01, 0.1, G))


def test_ekeland_grid_minimizer_is_fixed(line):
    f = catalog_get("w_shape")
    G = np.linspace(-2, 2, 401)
    xl = ekeland_point(f, line, [1.0], 0.2, 0.5, G)
    assert xl[0] == 1.0


def test_ekeland_abs_example(line):
    G = np.linspace(-2, 2, 2001)
    xl = ekeland_point(catalog_get("abs"), line, [0.3], 0.3, 1.0, G)
    assert xl[0] == 0.0


def test_ekeland_rejects_non_minimizer(line):
    with pytest.raises(PreconditionError):
        ekeland_point(catalog_get("abs"), line, [1.0], 0.1, 1.0, np.linspace(-2, 2, 401))
    with pytest.raises(ValueError):
        ekeland_point(catalog_get("abs"), line, [0.0], 0.0, 1.0, np.linspace(-2, 2, 401))


def brute_ekeland_ok(f, xbar, xl, eps, lam, G):
    """Independent check of (a)-(c) with plain loops."""
    fx, fb = float(f(np.array([xl]))), float(f(np.array([xbar])))
    if abs(xl - xbar) > lam + 1e-12 or fx > fb + 1e-12:
        return False
    for g in G:
        if fx > float(f(np.array([g]))) + eps / lam * abs(g - xl) + 1e-9 * (1 + abs(fx)):
            return False
    return True


@pytest.mark.parametrize("name", ["abs", "quad", "w_shape", "l0", "indicator_box"])
def test_ekeland_random_cases_against_loop_oracle(name, line, rng):
    f = catalog_get(name)
    G = np.linspace(-2, 2, 401)
    fG = f.values(G[:, None])
    for _ in range(5):
        eps = rng.uniform(0.05, 1.0)
        lam = rng.uniform(0.1, 2.0)
        cand = G[fG <= fG.min() + eps]
        xbar = cand[rng.integers(len(cand))]
        xl = ekeland_point(f, line, [xbar], eps, lam, G)
        assert brute_ekeland_ok(f, xbar, xl[0], eps, lam, G)


# -- range density -------------------------------------------------------------------------

def test_range_density_indicator(line):
    box = from_piecewise({"name": "box11", "convex": True, "pieces": [{"lo": -1, "hi": 1, "coeffs": [0]}]})
    x, fs, ps = range_density_probe(box, zero(1), line, [0.5], 0.01)
    assert x[0] == pytest.approx(1.0, abs=0.01)
    assert fs[0] + ps[0] == pytest.approx(0.5, abs=0.01)


def test_range_density_quad(line):
    x, fs, ps = range_density_probe(catalog_get("quad"), zero(1), line, [0.7], 1e-6)
    assert x[0] == pytest.approx(0.7, abs=1e-5)
    assert fs[0] == pytest.approx(0.7, abs=1e-5)


def w_plus_abs_gap(x):
    """Distance of 0 to the subgradient sum of w_shape and |.| at x, from first principles."""
    def w_sub(z):
        if z in (-1.0, 1.0):
            return (-1.0, 1.0)
        if z == 0.0:
            return None  # concave kink: no proximal subgradient
        s = np.sign(z - 1) if z > 0 else np.sign(z + 1)
        return (s, s)

    def a_sub(z):
        return (-1.0, 1.0) if z == 0.0 else (np.sign(z), np.sign(z))

    w = w_sub(x)
    if w is None:
        return np.inf
    a = a_sub(x)
    lo, hi = w[0] + a[0], w[1] + a[1]
    return max(lo, 0.0, -hi)


def test_range_density_w_shape_plus_abs_against_grid_oracle(line):
    G = np.union1d(np.linspace(-3, 3, 6001), [-1.0, 0.0, 1.0])
    good = [g for g in G if w_plus_abs_gap(g) <= 0.01]
    assert good
    x, fs, ps = range_density_probe(catalog_get("w_shape"), catalog_get("abs"), line, [0.0], 0.01)
    assert w_plus_abs_gap(float(x[0])) <= 0.01
    assert abs(fs[0] + ps[0]) <= 0.01
    assert min(good) <= x[0] <= max(good)


def test_range_density_preconditions(line):
    with pytest.raises(PreconditionError):
        range_density_probe(catalog_get("abs"), catalog_get("w_shape"), line, [0.0], 0.1)
    with pytest.raises(PreconditionError):
        # |.|* is the indicator of [-1, 1]: x* = 3 lies outside its domain
        range_density_probe(catalog_get("abs"), zero(1), line, [3.0], 0.1)


# -- resolvent -----------------------------------------------------------------------------

@pytest.mark.parametrize("name, xstar, x", [("abs", 2.0, 1.0), ("abs", 0.5, 0.0), ("quad", 4.0, 2.0)])
def test_minty_examples(name, xstar, x, line):
    pair = minty_surjectivity_check(catalog_get(name), line, [xstar])
    assert pair.x[0] == pytest.approx(x, abs=1e-9)
    assert pair.xstar[0] == pytest.approx(xstar - x, abs=1e-9)
    assert pair.residual <= 1e-8


def test_minty_preconditions(line):
    with pytest.raises(PreconditionError):
        minty_surjectivity_check(catalog_get("w_shape"), line, [0.0])
    with pytest.raises(PreconditionError):
        minty_surjectivity_check(catalog_get("abs"), NormedSpace(1, 3.0), [0.0])


@settings(max_examples=30)
@given(t=st.floats(-5, 5))
def test_minty_matches_soft_threshold(t):
    pair = minty_surjectivity_check(catalog_get("abs"), NormedSpace(1), [t])
    assert pair.x[0] == pytest.approx(np.sign(t) * max(abs(t) - 1, 0.0), abs=1e-9)
