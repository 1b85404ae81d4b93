import json
import random
from fractions import Fraction

import pytest

from equivar.catalog import check_invariance, generators, polynomial_invariance, sample_trials
from equivar.certify import (
    CertificationFailure,
    Decomposition,
    NoExpression,
    PolyMap,
    assemble,
    certify_identity,
    curry,
    decompose,
    default_degree_bound,
    express_in_generators,
    map_violation,
)
from equivar.groups import GroupSpec
from equivar.malgrange import derive
from conftest import random_equivariant_map
from equivar.poly import GenUniverse, VarUniverse


def setup(family, d, n):
    gs = generators(GroupSpec(family, d, n))
    return gs, derive(gs), gs.universe


def vec(u, j):
    return [u.v(j, i) for i in range(1, u.d + 1)]


def dot(a, b):
    return sum((x * y for x, y in zip(a, b)), a[0].universe.zero())


def test_curry_identity():
    u = VarUniverse(2, 1)
    assert curry(PolyMap(tuple(vec(u, 1)))) == u.l(1) * u.v(1, 1) + u.l(2) * u.v(1, 2)


def test_curry_zero():
    assert curry(PolyMap.zero(VarUniverse(3, 2))).is_zero()


def test_curry_hand_expansion():
    u = VarUniverse(2, 2)
    g12 = u.v(1, 1) * u.v(2, 1) + u.v(1, 2) * u.v(2, 2)
    f = PolyMap((g12 * u.v(1, 1), g12 * u.v(1, 2)))
    assert curry(f) == g12 * (u.l(1) * u.v(1, 1) + u.l(2) * u.v(1, 2))


def test_curry_linear_and_degree_one():
    u = VarUniverse(2, 2)
    f = PolyMap((u.v(1, 1) ** 2, u.v(2, 2) * u.v(1, 1)))
    h = PolyMap((u.v(2, 1), u.const(3)))
    a, b = Fraction(2, 3), Fraction(-5)
    assert curry(f.scale(a) + h.scale(b)) == curry(f) * a + curry(h) * b
    for mono, _ in curry(f + h).items():
        assert sum(e for v, e in mono if v.block == 1) == 1


def test_express_generator_itself():
    gs, _, u = setup("O", 2, 1)
    expr = express_in_generators(u.v(1, 1) ** 2 + u.v(1, 2) ** 2, gs, 1)
    assert expr.P == GenUniverse(3).x(1)


def test_express_gram_determinant():
    gs, _, u = setup("O", 2, 2)
    a, b = vec(u, 1), vec(u, 2)
    target = dot(a, a) * dot(b, b) - dot(a, b) ** 2
    X = GenUniverse(len(gs.all)).x
    expr = express_in_generators(target, gs)
    assert expr.P == X(1) * X(3) - X(2) ** 2


def test_express_non_invariant():
    gs, _, u = setup("O", 2, 1)
    for bound in (1, 2, 3):
        with pytest.raises(NoExpression) as info:
            express_in_generators(u.v(1, 1), gs, bound)
        assert info.value.invariance_violation > 1e-6


def test_decompose_weighted_sum():
    gs, param, u = setup("O", 3, 2)
    a, b = vec(u, 1), vec(u, 2)
    f = PolyMap(tuple(dot(a, b) * x + dot(b, b) * y for x, y in zip(a, b)))
    dec = decompose(f, gs, param)
    X = GenUniverse(3).x
    assert dec.coefficients == (X(2), X(3))
    assert certify_identity(f, dec).passed


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_decompose_identity(d):
    gs, param, u = setup("O", d, 1)
    dec = decompose(PolyMap(tuple(vec(u, 1))), gs, param)
    assert dec.coefficients == (GenUniverse(1).const(1),)


def test_decompose_cross_product():
    gs, param, u = setup("SO", 3, 2)
    a, b = vec(u, 1), vec(u, 2)
    cross = PolyMap((a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]))
    dec = decompose(cross, gs, param)
    by = {bm.source_label: p for bm, p in zip(param.basis, dec.coefficients)}
    assert by["pair(1)"].is_zero() and by["pair(2)"].is_zero()
    assert by["crossdet(1,2)"] == 1


def test_certify_perturbed_coefficient():
    gs, param, u = setup("O", 3, 2)
    a, b = vec(u, 1), vec(u, 2)
    f = PolyMap(tuple(dot(a, b) * x for x in a))
    dec = decompose(f, gs, param)
    bad = dec.with_coefficient(1, dec.coefficients[1] + 1)
    rep = certify_identity(f, bad)
    assert not rep.passed
    # residual is f - sum p_j F_j, so a +1 on p_2 leaves -F_2
    assert rep.residual == PolyMap(param.basis[1].components).scale(-1)


def test_certify_zero_map():
    gs, param, u = setup("O", 3, 2)
    f = PolyMap.zero(u)
    dec = decompose(f, gs, param)
    assert all(p.is_zero() for p in dec.coefficients)
    assert certify_identity(f, Decomposition((GenUniverse(3).zero(),) * 2, param)).passed


def test_decompose_raises_certification_failure(monkeypatch):
    import equivar.certify as cert

    gs, param, u = setup("O", 2, 1)
    f = PolyMap(tuple(vec(u, 1)))
    monkeypatch.setattr(cert, "assemble", lambda dec: PolyMap.zero(u))
    with pytest.raises(CertificationFailure):
        cert.decompose(f, gs, param)


def test_default_degree_bound():
    gs, _, u = setup("SO", 3, 3)
    assert default_degree_bound(u.v(1, 1) ** 5 * u.l(1), gs) == 3
    assert default_degree_bound(u.zero(), gs) == 1


@pytest.mark.parametrize("family,d,n", [("O", 2, 3), ("Lorentz", 3, 2), ("Sp", 4, 2), ("SO", 2, 2), ("O", 4, 2)])
def test_round_trip_other_groups(family, d, n):
    rng = random.Random(11)
    gs, param, u = setup(family, d, n)
    for _ in range(4):
        f, _ = random_equivariant_map(rng, param)
        dec = decompose(f, gs, param)
        assert certify_identity(f, dec).passed


def test_recovered_coefficients_match_when_generators_independent():
    # O(3), n=2: grams of two vectors in R^3 satisfy no relations
    rng = random.Random(5)
    gs, param, u = setup("O", 3, 2)
    for _ in range(5):
        f, qs = random_equivariant_map(rng, param)
        assert decompose(f, gs, param).coefficients == qs


def non_invariant_targets(u):
    a, b = vec(u, 1), vec(u, 2)
    ell = [u.l(i) for i in range(1, 4)]
    return [
        a[0],
        a[0] ** 2,
        a[0] * ell[0],
        a[0] * b[1],
        a[0] ** 2 * ell[1],
        dot(a, a) * ell[0],
        a[0] * b[0] + a[1] * b[1],
        a[0] ** 3 * ell[2] + dot(a, b) * dot(a, ell),
        ell[0] ** 2,
        a[1] * a[2] * b[0] * b[1],
    ]


def test_no_expression_soundness():
    gs, _, u = setup("O", 3, 2)
    elements, X, L = sample_trials(gs.spec, 100, seed=1)
    for t in non_invariant_targets(u):
        assert polynomial_invariance(t, elements, X, L) > 1e-6
        for bound in range(1, t.degree() + 1):
            with pytest.raises(NoExpression):
                express_in_generators(t, gs, bound, diagnose=False)


def test_no_expression_hint_for_invariant_target_with_small_bound():
    gs, _, u = setup("O", 3, 2)
    a = vec(u, 1)
    with pytest.raises(NoExpression) as info:
        express_in_generators(dot(a, a) ** 2, gs, 1)
    assert info.value.invariance_violation < 1e-9
    assert "larger bound" in str(info.value)


def test_map_violation_detects_pseudovector():
    # the cross product is SO(3)- but not O(3)-equivariant
    gs, param, u = setup("SO", 3, 2)
    cross = PolyMap(param.basis[2].components)
    assert map_violation(cross, GroupSpec("SO", 3, 2)) < 1e-12
    assert map_violation(cross, GroupSpec("O", 3, 2)) > 1e-3
    with pytest.raises(NoExpression):
        decompose(cross, *setup("O", 3, 2)[:2])


def test_polymap_json_round_trip():
    gs, param, u = setup("SO", 3, 2)
    f = PolyMap(param.basis[2].components)
    assert PolyMap.from_json(json.loads(json.dumps(f.to_json()))) == f


def test_decomposition_json_legend():
    gs, param, u = setup("O", 3, 2)
    data = decompose(PolyMap(tuple(vec(u, 1))), gs, param).to_json()
    assert data["legend"] == {"X1": "gram(1,1)", "X2": "gram(1,2)", "X3": "gram(2,2)"}
    assert [c["basis"] for c in data["coefficients"]] == ["pair(1)", "pair(2)"]
