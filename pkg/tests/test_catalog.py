import numpy as np
import pytest

from proxbr import (
    InvalidFunctionError, NormedSpace, SubdiffDescription, UnknownFunctionError, add, catalog_get,
    catalog_names, from_piecewise, resolve_function, subgradient_residual, tilt,
)
from proxbr.catalog import zero
from proxbr.errors import PreconditionError
from proxbr.prox_bounded import boundedness_probe

MANDATORY = ["abs", "quad", "indicator_box", "neg_quad_c", "l0", "w_shape", "quad2d"]


def grid_over_box(f, k=401):
    axes = [np.linspace(a, b, k if f.dim == 1 else 41) for a, b in zip(f.box_lo, f.box_hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def test_all_mandatory_entries_present():
    assert set(MANDATORY) <= set(catalog_names())


@pytest.mark.parametrize("name", MANDATORY)
def test_entry_is_proper_and_never_minus_inf(name):
    f = catalog_get(name)
    assert np.isfinite(f(f.dom_point))
    v = f.values(grid_over_box(f))
    assert not np.any(np.isnan(v))
    assert not np.any(v == -np.inf)


def test_values_match_formulas():
    z = np.linspace(-3, 3, 121)
    Z = z[:, None]
    np.testing.assert_array_equal(catalog_get("abs").values(Z), np.abs(z))
    np.testing.assert_allclose(catalog_get("quad").values(Z), z ** 2 / 2)
    np.testing.assert_allclose(catalog_get("neg_quad_c:3").values(Z), -1.5 * z ** 2)
    np.testing.assert_array_equal(catalog_get("l0").values(Z), (z != 0).astype(float))
    np.testing.assert_allclose(catalog_get("w_shape").values(Z), np.minimum(abs(z - 1), abs(z + 1)))
    ind = catalog_get("indicator_box").values(Z)
    assert np.all(ind[(z >= 0) & (z <= 1)] == 0)
    assert np.all(np.isinf(ind[(z < 0) | (z > 1)]))
    q2 = catalog_get("quad2d")
    assert q2([3.0, 4.0]) == pytest.approx(12.5)


def test_abs_subdifferential():
    f = catalog_get("abs")
    d0 = f.subdiff([0.0])
    assert d0.kind == "interval_box" and d0.lo[0] == -1 and d0.hi[0] == 1
    assert f.subdiff([2.0]).kind == "singleton" and f.subdiff([2.0]).lo[0] == 1
    assert f.subdiff([-0.1]).lo[0] == -1


def test_neg_quad_parameter_and_threshold():
    f = catalog_get("neg_quad_c", c=3)
    assert f.known_threshold == 3
    assert catalog_get("neg_quad_c:3").known_threshold == 3
    sp = NormedSpace(1)
    assert boundedness_probe(f, sp, 3.5).verdict == "bounded"
    assert boundedness_probe(f, sp, 2.5).verdict == "unbounded"


def test_indicator_normal_cone():
    f = catalog_get("indicator_box")
    d0, d1 = f.subdiff([0.0]), f.subdiff([1.0])
    assert d0.lo[0] == -np.inf and d0.hi[0] == 0
    assert d1.lo[0] == 0 and d1.hi[0] == np.inf
    assert f.subdiff([0.5]).kind == "singleton" and f.subdiff([0.5]).lo[0] == 0
    assert f.subdiff([1.5]).is_empty and f.subdiff([-0.2]).is_empty
    T = np.linspace(-1, 2, 301)
    for x, s in [(0.0, -3.0), (1.0, 7.0), (0.3, 0.0)]:
        assert subgradient_residual(f, (x, s), T) == 0.0
    assert subgradient_residual(f, (1.0, -0.5), T) > 0


def test_unknown_names():
    with pytest.raises(UnknownFunctionError):
        catalog_get("nope")
    with pytest.raises(UnknownFunctionError):
        catalog_get("abs:3")
    with pytest.raises(UnknownFunctionError):
        catalog_get("neg_quad_c:x")


def test_subgradient_residual_examples():
    a = catalog_get("abs")
    T = np.linspace(-2, 2, 401)
    assert subgradient_residual(a, (0.0, 0.5), T) <= 0
    assert subgradient_residual(a, (0.0, 1.5), T) >= 0.5
    assert subgradient_residual(a, (0.0, 1.5), T) == pytest.approx(1.0)
    assert subgradient_residual(catalog_get("quad"), (1.0, 1.0), np.linspace(-10, 10, 1001)) <= 0


def test_subgradient_residual_preconditions():
    T = np.linspace(-2, 2, 11)
    with pytest.raises(PreconditionError):
        subgradient_residual(catalog_get("indicator_box"), (3.0, 0.0), T)
    with pytest.raises(PreconditionError):
        subgradient_residual(catalog_get("w_shape"), (0.5, -1.0), T)


@pytest.mark.parametrize("name", ["abs", "quad", "indicator_box", "quad2d"])
def test_analytic_subgradients_pass_residual(name, rng):
    f = catalog_get(name)
    T = grid_over_box(f)
    lo, hi = f.box_lo, f.box_hi
    # concentrate draws on the kinks, where the subdifferential is widest
    special = np.array(f.breakpoints)[:, None] if f.breakpoints else np.empty((0, f.dim))
    checked = 0
    while checked < 200:
        if special.size and rng.random() < 0.3:
            x = special[rng.integers(len(special))]
        else:
            x = rng.uniform(lo, hi)
        d = f.subdiff(x)
        if d.is_empty:
            continue
        s = rng.uniform(np.maximum(d.lo, -50), np.minimum(d.hi, 50))
        assert subgradient_residual(f, (x, s), T) <= 1e-9
        checked += 1


@pytest.mark.parametrize("name, points", [("l0", [0.0]), ("indicator_box", [0.0, 1.0])])
def test_lower_semicontinuity_at_jumps(name, points):
    f = catalog_get(name)
    for x in points:
        for sign in (-1, 1):
            seq = x + sign * 2.0 ** -np.arange(1, 40)
            assert np.min(f.values(seq[:, None])) >= f(np.array([x])) - 1e-9


@pytest.mark.parametrize("name", ["abs", "quad", "indicator_box", "quad2d"])
def test_declared_convex_entries_are_midpoint_convex(name, rng):
    f = catalog_get(name)
    lo, hi = f.box_lo, f.box_hi
    X = rng.uniform(lo, hi, size=(3000, f.dim))
    Y = rng.uniform(lo, hi, size=(3000, f.dim))
    fx, fy, fm = f.values(X), f.values(Y), f.values((X + Y) / 2)
    ok = np.isfinite(fx) & np.isfinite(fy)
    assert np.all(fm[ok] <= (fx[ok] + fy[ok]) / 2 + 1e-9)


def test_subdiff_description_algebra():
    a = SubdiffDescription.box(-1, 1)
    b = SubdiffDescription.point(0.5)
    s = a + b
    assert s.lo[0] == -0.5 and s.hi[0] == 1.5
    assert (a + SubdiffDescription.empty()).is_empty
    assert a.distance([3.0]) == 2.0
    assert SubdiffDescription.empty().distance([0.0]) == np.inf
    with pytest.raises(ValueError):
        SubdiffDescription.box(1, 0)
    pts = SubdiffDescription.box(0, np.inf).discretize(10, 2.0)
    assert pts[0, 0] == 0 and pts[-1, 0] == 2.0 and len(pts) == 21


def test_tilt_and_add():
    a, q = catalog_get("abs"), catalog_get("quad")
    t = tilt(a, [0.5])
    assert t([2.0]) == pytest.approx(1.0)
    assert t.subdiff([0.0]).lo[0] == -1.5
    s = add(a, q)
    assert s([2.0]) == pytest.approx(4.0)
    assert s.subdiff([0.0]).hi[0] == 1.0
    assert s.convex and not add(a, catalog_get("w_shape")).convex
    assert zero(2)([1.0, 2.0]) == 0.0


def test_piecewise_definition():
    defn = {"name": "hinge", "convex": True,
            "pieces": [{"lo": None, "hi": 0, "coeffs": [0]}, {"lo": 0, "hi": None, "coeffs": [0, 2]}]}
    f = resolve_function(defn)
    assert f(np.array([-3.0])) == 0 and f(np.array([1.5])) == 3.0
    d = f.subdiff([0.0])
    assert d.lo[0] == 0 and d.hi[0] == 2
    assert f.breakpoints == (0.0,)


def test_piecewise_with_gap_is_infinite_outside():
    f = from_piecewise({"pieces": [{"lo": -1, "hi": 1, "coeffs": [0]}], "convex": True})
    assert f(np.array([2.0])) == np.inf
    assert f.subdiff([1.0]).hi[0] == np.inf


@pytest.mark.parametrize("bad", [
    {"pieces": []},
    {"pieces": [{"lo": 0, "hi": 1, "coeffs": [0, 0, 0, 1]}]},
    {"pieces": [{"lo": 0, "hi": 2, "coeffs": [0]}, {"lo": 1, "hi": 3, "coeffs": [0]}]},
    {"pieces": [{"lo": 0, "hi": 1, "coeffs": [0]}], "colour": "red"},
    {"pieces": [{"lo": None, "hi": None, "coeffs": [0, 0, -1]}], "convex": True},
])
def test_piecewise_rejects_bad_definitions(bad):
    with pytest.raises(InvalidFunctionError):
        from_piecewise(bad)


def test_snap_to_breakpoint():
    f = catalog_get("w_shape")
    assert f.snap([1.0 + 1e-12])[0] == 1.0
    assert f.snap([0.5])[0] == 0.5
