import pytest

from germflow.germ import GermCase
from germflow.poly import parse_poly

# (label, vars, f, h, r); the right-equivalence suite used across the tests
SUITE = [
    ("x2_h1_r1", ["x"], "x^2", "1", 1),
    ("x2_h1_r2", ["x"], "x^2", "1", 2),
    ("x2y2_h1_r1", ["x", "y"], "x^2 + y^2", "1", 1),
    ("x2y_h1_r1", ["x", "y"], "x^2 y", "1", 1),
    ("x2y4_hx_r1", ["x", "y"], "x^2 + y^4", "x", 1),
]


def make_case(vars, f, h, r, label=""):
    return GermCase.from_witness(parse_poly(f, vars), parse_poly(h, vars), r, vars=tuple(vars), label=label)


def counterexample():
    return GermCase(parse_poly("x^2", ["x"]), parse_poly("-x^2", ["x"]), 1, vars=("x",), label="counter")


@pytest.fixture(params=SUITE, ids=[s[0] for s in SUITE])
def suite_case(request):
    label, vars, f, h, r = request.param
    return make_case(vars, f, h, r, label)


@pytest.fixture
def counter_case():
    return counterexample()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(mod.TITLES):
        parts = mod.RESULTS.get(n)
        if not parts:
            tr.write_line(f"criterion {n:2d}: NOT RUN  {mod.TITLES[n]}")
            continue
        ok = all(p[1] for p in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {mod.TITLES[n]}")
        for part, pok, detail in parts:
            tr.write_line(f"    [{part}] {'pass' if pok else 'FAIL'}: {detail}")
