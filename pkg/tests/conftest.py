import itertools
from fractions import Fraction

import pytest
import sympy
from hypothesis import strategies as st

from equivar.certify import Decomposition, assemble
from equivar.poly import GenUniverse, Polynomial, Var, VarUniverse

# d=2, n=2: four V-block and two l-block variables
U22 = VarUniverse(2, 2)
VARS22 = U22.variables


@st.composite
def polynomials(draw, universe=U22, max_degree=4, max_terms=5):
    variables = universe.variables
    terms = []
    for _ in range(draw(st.integers(0, max_terms))):
        deg = draw(st.integers(0, max_degree))
        picks = draw(st.lists(st.sampled_from(variables), min_size=deg, max_size=deg))
        mono = {}
        for v in picks:
            mono[v] = mono.get(v, 0) + 1
        c = Fraction(draw(st.integers(-9, 9)), draw(st.integers(1, 5)))
        terms.append((tuple(mono.items()), c))
    return Polynomial(universe, terms)


def to_sympy(p: Polynomial):
    syms = {v: sympy.Symbol(v.name) for v in p.universe.variables}
    expr = sympy.Integer(0)
    for mono, c in p.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for v, e in mono:
            term *= syms[v] ** e
        expr += term
    return sympy.expand(expr)


def from_sympy(expr, universe) -> Polynomial:
    syms = [sympy.Symbol(v.name) for v in universe.variables]
    poly = sympy.Poly(sympy.expand(expr), *syms)
    terms = []
    for exps, c in poly.terms():
        c = sympy.Rational(c)
        mono = tuple((v, e) for v, e in zip(universe.variables, exps) if e)
        terms.append((mono, Fraction(int(c.p), int(c.q))))
    return Polynomial(universe, terms)


@pytest.fixture
def u22():
    return U22


def all_catalog_specs(ds=(2, 3, 4), ns=range(1, 7)):
    from equivar.groups import GroupSpec

    for family, d, n in itertools.product(("O", "SO", "Lorentz", "Sp"), ds, ns):
        if family == "Sp" and d % 2:
            continue
        yield GroupSpec(family, d, n)


def random_coefficient(rng, r, max_deg=2):
    gu = GenUniverse(r)
    terms = []
    for _ in range(rng.randint(1, 3)):
        deg = rng.randint(0, max_deg) if r else 0
        mono = {}
        for k in rng.sample(range(1, r + 1), min(deg, r)) if r else []:
            mono[Var.x(k)] = mono.get(Var.x(k), 0) + 1
        if deg == 2 and r and rng.random() < 0.3:
            k = rng.randint(1, r)
            mono = {Var.x(k): 2}
        terms.append((tuple(mono.items()), Fraction(rng.randint(-6, 6), rng.randint(1, 4))))
    return Polynomial(gu, terms)


def random_equivariant_map(rng, param):
    qs = tuple(random_coefficient(rng, param.r) for _ in param.basis)
    return assemble(Decomposition(qs, param)), qs


# one line per acceptance criterion, repeated after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
