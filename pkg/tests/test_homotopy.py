import functools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from germflow.analysis import critical_samples
from germflow.germ import GermCase
from germflow.grid import SampleGrid
from germflow.homotopy import (
    GapViolation,
    HomotopyField,
    certify_domain,
    dist_to_Z_proxy,
)
from germflow.poly import DimensionError, parse_poly

from conftest import make_case

X = ["x"]


@pytest.fixture
def sextic():
    return HomotopyField(make_case(X, "x^2", "1", 1))


@pytest.fixture
def counter(counter_case):
    return HomotopyField(counter_case)


def identity_field(vars=("x", "y"), f="x^2 + y^2"):
    p = parse_poly(f, list(vars))
    return HomotopyField(GermCase(p, p, 1))


def exact_X(field, xi, x):
    """X from exact rational arithmetic on the stored polynomials."""
    xi = Fraction(xi)
    x = [Fraction(v) for v in x]
    d = field.d.eval_exact(x)
    grad = [d] + [a.eval_exact(x) + xi * b.eval_exact(x) for a, b in zip(field.grad_f, field.grad_d)]
    n2 = sum(v * v for v in grad)
    return [d * v / n2 for v in grad]


def test_F_eval_examples(counter, sextic):
    assert counter.F_eval(0.5, [0.1]) == 0.0
    assert sextic.F_eval(0.0, [0.2]) == pytest.approx(0.04)
    assert sextic.F_eval(1.0, [0.2]) == pytest.approx(0.04 + 0.2**6)


def test_gradF_examples(sextic, counter):
    np.testing.assert_allclose(sextic.gradF_eval(0.0, [0.1]), [1e-6, 0.2], rtol=1e-14)
    np.testing.assert_allclose(identity_field().gradF_eval(0.3, [0.1, 0.2]), [0.0, 0.2, 0.4])
    np.testing.assert_allclose(counter.gradF_eval(0.5, [0.1]), [-0.02, 0.0], atol=1e-17)


def test_X_examples(sextic, counter):
    np.testing.assert_array_equal(identity_field().X_eval(0.7, [0.1, 0.2]), [0.0, 0.0, 0.0])
    X_ = sextic.X_eval(0.0, [0.1])
    np.testing.assert_allclose(X_, [2.5e-11, 5.0e-6], rtol=1e-3)
    np.testing.assert_allclose(X_, [float(v) for v in exact_X(sextic, 0, Fraction(1, 10) * np.ones(1))], rtol=1e-12)
    np.testing.assert_allclose(counter.X_eval(0.5, [0.1]), [1.0, 0.0], atol=1e-15)


def test_W_examples(sextic, counter):
    np.testing.assert_array_equal(identity_field().W_eval(0.2, [0.1, 0.1]), [0.0, 0.0])
    np.testing.assert_allclose(sextic.W_eval(0.0, [0.1]), [-5.0e-6], rtol=1e-6)
    with pytest.raises(GapViolation):
        counter.W_eval(0.5, [0.1])


def test_dimension_errors(sextic):
    with pytest.raises(DimensionError):
        sextic.X_eval(0.0, [0.1, 0.2])
    with pytest.raises(DimensionError):
        sextic.F_eval(0.0, [])


def test_cutoff_at_origin(sextic):
    s = sextic.sample(0.3, [0.0])
    assert s.on_cutoff
    np.testing.assert_array_equal(s.X, [0.0, 0.0])
    np.testing.assert_array_equal(s.W, [0.0])


CASES_2D = ["x^2 + y^2", "x^2 y", "x^2 + y^4"]


@functools.lru_cache(maxsize=None)
def field_2d(f):
    h = "x" if f == "x^2 + y^4" else "1"
    return HomotopyField(make_case(["x", "y"], f, h, 1))


pts = st.floats(-0.3, 0.3, allow_nan=False)
xis = st.floats(-1, 1, allow_nan=False)


@pytest.mark.parametrize("f", CASES_2D)
@settings(max_examples=50, deadline=None)
@given(xi=xis, a=pts, b=pts)
def test_field_invariants(f, xi, a, b):
    field = field_2d(f)
    x = [a, b]
    assert field.F_eval(0.0, x) == pytest.approx(field.case.f.eval(x), rel=1e-14, abs=1e-300)
    assert field.F_eval(1.0, x) == pytest.approx(field.case.g.eval(x), rel=1e-14, abs=1e-300)
    s = field.sample(xi, x)
    assert s.X[0] >= 0.0
    assert s.gradF[0] == pytest.approx(field.d.eval(x), rel=1e-12, abs=1e-300)
    if not s.on_cutoff:
        # <grad F, X> = d exactly off the cutoff
        d = field.d.eval(x)
        assert np.dot(s.gradF, s.X) == pytest.approx(d, rel=1e-10, abs=1e-300)
        if s.W is not None:
            assert abs(s.X[0] - 1) > 0.5


@pytest.fixture(params=CASES_2D)
def suite_case_2d(request):
    return field_2d(request.param)


def test_orthogonality_exact(suite_case_2d):
    field = suite_case_2d
    for x in ([Fraction(1, 7), Fraction(-2, 9)], [Fraction(1, 4), Fraction(1, 3)]):
        for xi in (Fraction(-1), Fraction(1, 3), Fraction(1)):
            Xe = exact_X(field, xi, x)
            d = field.d.eval_exact(x)
            grad = [d] + [a.eval_exact(x) + xi * b.eval_exact(x)
                          for a, b in zip(field.grad_f, field.grad_d)]
            if d:
                assert sum(g * v for g, v in zip(grad, Xe)) == d


def test_certify_examples(sextic, counter):
    cert = certify_domain(sextic, 0.3, SampleGrid(0.3, 101))
    assert cert.ok and cert.min_gap >= 0.99
    cert = certify_domain(identity_field(), 0.3, SampleGrid(0.3, 21))
    assert cert.ok and cert.min_gap == 1.0
    assert cert.C1_hat == pytest.approx(1.0) and cert.C3_hat == pytest.approx(1.0)
    cert = certify_domain(counter, 0.1, SampleGrid(0.1, 101))
    assert not cert.ok
    assert cert.min_gap < 1e-12 and cert.worst_xi == pytest.approx(0.5)


def test_certificate_constants(sextic):
    cert = certify_domain(sextic, 0.3, SampleGrid(0.3, 41))
    # |grad f| = 2|x| = 2 dist(x, {0})
    assert cert.A_hat == pytest.approx(2.0)
    assert cert.C3_hat <= 1.0 <= cert.C1_hat + 1e-12


def test_dist_proxy_examples():
    assert dist_to_Z_proxy(None, [0.1], [[0.0]]) == pytest.approx(0.1)
    assert dist_to_Z_proxy(None, [0.1], np.zeros((0, 1))) == 1.0
    line = np.column_stack([np.zeros(11), np.linspace(0, 1, 11)])
    assert dist_to_Z_proxy(None, [0.2, 0.5], line) == pytest.approx(0.2)


def test_decay_step1(suite_case):
    """|X| <= A' dist^(r+1): fit A' on a coarse grid, verify on a fine one."""
    field = HomotopyField(suite_case)
    z = critical_samples(suite_case.f, 0.3)
    r = suite_case.r

    def ratios(k):
        g = SampleGrid(0.3, k, "sphere-shells")
        x = g.points(field.n)
        dist = dist_to_Z_proxy(field, x, z)
        keep = dist > 1e-3
        x, dist = x[keep], dist[keep]
        best = np.zeros(len(x))
        for xi in np.linspace(-1, 1, 9):
            X_, _ = field.X_many(np.full(len(x), xi), x)
            best = np.maximum(best, np.linalg.norm(X_, axis=1))
        return best / dist ** (r + 1)

    a_prime = ratios(9).max()
    assert np.all(ratios(33) <= 1.1 * a_prime)
