import numpy as np
import pytest

from proxbr import (
    InconclusiveError, NormedSpace, add, boundedness_probe, catalog_get, estimate_threshold,
    shifted_boundedness, tilt,
)
from proxbr.catalog import FunctionSpec
from proxbr.prox_bounded import conjugate_domain_member

ENTRIES = ["abs", "quad", "indicator_box", "l0", "w_shape", "neg_quad_c:0.5", "neg_quad_c:2", "neg_quad_c:3"]
TOL = 0.05


@pytest.fixture(scope="module")
def estimates():
    sp = NormedSpace(1)
    return {n: estimate_threshold(catalog_get(n), sp, TOL) for n in ENTRIES}


def test_probe_examples(line):
    assert boundedness_probe(catalog_get("neg_quad_c:3"), line, 4.0).verdict == "bounded"
    assert boundedness_probe(catalog_get("neg_quad_c:3"), line, 2.0).verdict == "unbounded"
    assert boundedness_probe(catalog_get("abs"), line, 0.001).verdict == "bounded"


def test_probe_records_radius(line):
    pr = boundedness_probe(catalog_get("neg_quad_c:3"), line, 2.0)
    assert pr.radius >= 2 ** 6


def test_probe_inconclusive_when_cap_is_small(line):
    pr = boundedness_probe(catalog_get("neg_quad_c:3"), line, 2.0, radius_cap=4.0)
    assert pr.verdict == "inconclusive"


def test_threshold_examples(estimates):
    e = estimates["neg_quad_c:3"]
    assert e.lower <= 3 <= e.upper and e.upper - e.lower <= TOL
    assert estimates["abs"].value == 0.0
    assert estimates["l0"].value == 0.0


def test_estimate_invariants(estimates):
    for e in estimates.values():
        assert e.lower <= e.upper
        for pr in e.probes:
            if pr.lam >= e.upper:
                assert pr.verdict == "bounded"
            if e.lower > 0 and pr.lam <= e.lower:
                assert pr.verdict == "unbounded"


def test_consistent_with_known_thresholds(estimates):
    for name, e in estimates.items():
        known = catalog_get(name).known_threshold
        assert e.consistent_with(known, TOL), (name, e.value, known)


def test_shifted_examples(line):
    f = catalog_get("neg_quad_c:2")
    assert shifted_boundedness(f, line, [5.0], 3.0).verdict == "bounded"
    assert shifted_boundedness(f, line, [5.0], 1.0).verdict == "unbounded"
    for x in (-7.0, 0.3, 11.0):
        for lam in (0.01, 1.0, 50.0):
            assert shifted_boundedness(catalog_get("quad"), line, [x], lam).verdict == "bounded"


@pytest.mark.parametrize("name", ENTRIES)
def test_shift_invariance(name, estimates, line):
    f = catalog_get(name)
    t = estimates[name].value
    lams = [t * 1.5] if t > 0 else [0.5]
    if t > 0:
        lams.append(t * 0.5)
    for x in (-1.0, 0.0, 2.0):
        for lam in lams:
            assert shifted_boundedness(f, line, [x], lam).verdict == boundedness_probe(f, line, lam).verdict


@pytest.mark.parametrize("name", ENTRIES)
def test_tilt_invariance(name, estimates, line):
    for xs in (-1.0, 1.0):
        e = estimate_threshold(tilt(catalog_get(name), [xs]), line, TOL)
        assert abs(e.value - estimates[name].value) <= TOL


@pytest.mark.parametrize("name", ENTRIES)
def test_adding_convex_function_does_not_raise_threshold(name, estimates, line):
    e = estimate_threshold(add(catalog_get(name), catalog_get("abs")), line, TOL)
    assert e.value <= estimates[name].value + TOL


def _neg_quartic(scale):
    return FunctionSpec(name="neg_quartic", dim=1, value_oracle=lambda Z: -scale * Z[:, 0] ** 4,
                        convex=False, effective_box=(np.array([-4.0]), np.array([4.0])),
                        curvature=np.inf, dom_point=np.zeros(1))


def test_not_prox_bounded_function(line):
    # -100 z^4 beats every probed quadratic before the minimum can settle
    e = estimate_threshold(_neg_quartic(100.0), line)
    assert not e.prox_bounded
    assert all(pr.verdict == "unbounded" for pr in e.probes)


def test_probe_is_fooled_by_late_decrease(line):
    # documented limitation: m(R) = 0 for R = 1, 2, 4 when lam = 32, so -z^4 + 16 z^2 looks bounded
    assert boundedness_probe(_neg_quartic(1.0), line, 32.0).verdict == "bounded"


def test_all_inconclusive_raises(line):
    with pytest.raises(InconclusiveError):
        estimate_threshold(catalog_get("neg_quad_c:3"), line, radius_cap=2.0)


def test_conjugate_domain_probe(line):
    assert conjugate_domain_member(catalog_get("abs"), line, [0.5]).verdict == "bounded"
    assert conjugate_domain_member(catalog_get("abs"), line, [1.5]).verdict == "unbounded"


def test_two_dimensional_threshold():
    e = estimate_threshold(catalog_get("quad2d"), NormedSpace(2))
    assert e.value == 0.0
