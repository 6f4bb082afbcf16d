import pytest
from hypothesis import given, settings, strategies as st

from germflow.germ import (
    CaseError,
    GermCase,
    build_g,
    check_hypotheses,
    lemma1_check,
    multi_indices,
)
from germflow.grid import SampleGrid
from germflow.poly import DimensionError, MultiPoly, parse_poly

X = ["x"]
XY = ["x", "y"]


def test_build_g_examples():
    f = parse_poly("x^2", X)
    assert build_g(f, parse_poly("1", X), 1) == parse_poly("x^2 + x^6", X)
    assert build_g(f, parse_poly("-1", X), 1) == parse_poly("x^2 - x^6", X)
    f2 = parse_poly("x^2 + y^2", XY)
    assert build_g(f2, parse_poly("1", XY), 1) == f2 + f2**3


def test_build_g_errors():
    with pytest.raises(DimensionError):
        build_g(parse_poly("x^2", X), parse_poly("1", XY), 1)
    with pytest.raises(CaseError):
        build_g(parse_poly("x^2 + 1", X), parse_poly("1", X), 1)


def test_check_hypotheses_examples(counter_case):
    f = parse_poly("x^2", X)
    rep = check_hypotheses(GermCase(f, parse_poly("x^2 + x^6", X), 1))
    assert rep.ok and rep.quotient == MultiPoly.const(1, 1)

    rep = check_hypotheses(counter_case)
    assert rep.f_vanishes and rep.g_vanishes and rep.grad_f_vanishes
    assert rep.membership is False and not rep.ok and rep.quotient is None

    p = parse_poly("x + x^2", X)
    rep = check_hypotheses(GermCase(p, p, 1))
    assert rep.grad_f_vanishes is False and rep.membership


def test_check_reports_nonvanishing():
    rep = check_hypotheses(GermCase(parse_poly("x^2 + 1", X), parse_poly("x^2", X), 1))
    assert not rep.f_vanishes and rep.g_vanishes
    assert any("f(0)" in m for m in rep.messages)


def test_case_consistency():
    f, h = parse_poly("x^2", X), parse_poly("1", X)
    with pytest.raises(CaseError):
        GermCase(f, parse_poly("x^2", X), 1, h=h)
    with pytest.raises(CaseError):
        GermCase(f, f, 0)


small = st.dictionaries(
    st.tuples(st.integers(0, 2), st.integers(0, 2)),
    st.integers(-3, 3),
    max_size=3,
)


@settings(max_examples=30, deadline=None)
@given(small, small, st.integers(1, 2))
def test_witness_cases_pass_membership(fterms, hterms, r):
    fterms = {m: c for m, c in fterms.items() if m != (0, 0)}
    f = MultiPoly(2, fterms)
    if f.is_zero():
        return
    case = GermCase.from_witness(f, MultiPoly(2, hterms), r)
    rep = check_hypotheses(case)
    assert rep.membership
    assert rep.quotient == MultiPoly(2, hterms)
    # determinism
    assert check_hypotheses(case).to_dict() == rep.to_dict()


def test_multi_indices():
    assert sorted(multi_indices(2, 1)) == [(0, 0), (0, 1), (1, 0)]
    assert len(list(multi_indices(3, 2))) == 10
    assert list(multi_indices(2, 2, 2)) == [(0, 2), (1, 1), (2, 0)]


def test_lemma1_examples():
    grid = SampleGrid(0.5, 21)
    rep = lemma1_check(parse_poly("x^6", X), parse_poly("x^2", X), 3, 1, grid)
    assert rep.symbolic_ok and rep.symbolic["(1,)"]
    assert rep.C_hat == pytest.approx(1.0)

    s = parse_poly("x^2 + y^2", XY)
    rep = lemma1_check(s**3, s, 3, 2, SampleGrid(0.5, 11))
    assert rep.ok
    assert rep.symbolic["(1, 1)"]
    # the mixed partial is 24xy(x^2+y^2)
    assert (s**3).higher_partial((1, 1)) == parse_poly("24 x y", XY) * s


def test_lemma1_precondition():
    with pytest.raises(CaseError):
        lemma1_check(parse_poly("x^4", X), parse_poly("x^2", X), 3, 1, SampleGrid(0.5, 5))
    with pytest.raises(CaseError):
        lemma1_check(parse_poly("x^6", X), parse_poly("x^2", X), 1, 1, SampleGrid(0.5, 5))


def test_lemma1_suite(suite_case):
    c = suite_case
    rep = lemma1_check(c.g - c.f, c.f, c.r + 2, c.r, SampleGrid(0.3, 21))
    assert rep.symbolic_ok and rep.numeric_ok
    assert len(rep.symbolic) == len(list(multi_indices(c.n, c.r)))
