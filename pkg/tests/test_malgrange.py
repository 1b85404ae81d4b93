import numpy as np
import pytest

from conftest import all_catalog_specs
from equivar.catalog import Generator, GeneratorSet, generators
from equivar.groups import GroupSpec
from equivar.malgrange import (
    CatalogCorruption,
    Parametrization,
    check_equivariance,
    derive,
    eval_basis,
    eval_features,
)
from equivar.poly import L_BLOCK, Bidegree, StructuralError, VarUniverse


@pytest.mark.parametrize("d,n", [(2, 1), (3, 2), (4, 3)])
def test_orthogonal_basis_is_projection(d, n):
    u = VarUniverse(d, n)
    param = derive(generators(GroupSpec("O", d, n)))
    for j, bm in enumerate(param.basis, start=1):
        assert bm.components == tuple(u.v(j, i) for i in range(1, d + 1))


def test_so3_cross_product_map():
    u = VarUniverse(3, 2)
    param = derive(generators(GroupSpec("SO", 3, 2)))
    cross = {b.source_label: b for b in param.basis}["crossdet(1,2)"]
    v = lambda j, i: u.v(j, i)  # noqa: E731
    assert cross.components == (
        v(1, 2) * v(2, 3) - v(1, 3) * v(2, 2),
        v(1, 3) * v(2, 1) - v(1, 1) * v(2, 3),
        v(1, 1) * v(2, 2) - v(1, 2) * v(2, 1),
    )


def test_symplectic_single_projection():
    u = VarUniverse(2, 1)
    param = derive(generators(GroupSpec("Sp", 2, 1)))
    assert len(param.basis) == 1 and param.basis[0].components == (u.v(1, 1), u.v(1, 2))


def test_corrupted_catalog():
    spec = GroupSpec("O", 2, 1)
    u = VarUniverse(2, 1)
    bad = u.l(1) ** 2 * u.v(1, 1)
    gs = GeneratorSet(spec, (), (Generator("bad(1)", bad, Bidegree(1, 2)),))
    with pytest.raises(CatalogCorruption):
        derive(gs)
    gs = GeneratorSet(spec, (), (Generator("bad(1)", bad, Bidegree(1, 1)),))
    with pytest.raises(CatalogCorruption):
        derive(gs)
    with pytest.raises(CatalogCorruption):
        derive(gs, method="coefficients")


@pytest.mark.parametrize("spec", list(all_catalog_specs()), ids=str)
def test_gradient_and_coefficient_paths_agree(spec):
    gs = generators(spec)
    a, b = derive(gs), derive(gs, method="coefficients")
    assert a.basis == b.basis
    for bm in a.basis:
        for c in bm.components:
            assert not any(v.block == L_BLOCK for v in c.variables())
    assert (len(a.features), len(a.basis)) == (len(gs.deg0), len(gs.deg1))


def test_eval_features_examples():
    p = derive(generators(GroupSpec("O", 2, 1)))
    assert eval_features(p, [[3.0, 4.0]]).tolist() == [25.0]
    p = derive(generators(GroupSpec("SO", 3, 3)))
    assert eval_features(p, np.eye(3)).tolist() == [1, 0, 0, 1, 0, 1, 1]


def test_eval_features_symplectic_convention():
    p = derive(generators(GroupSpec("Sp", 2, 2)))
    # e1^T J e2 with J = [[0, -1], [1, 0]] is J[0, 1] = -1
    assert eval_features(p, np.eye(2)).tolist() == [-1.0]


def test_eval_basis_examples():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2, 3))
    p = derive(generators(GroupSpec("O", 3, 2)))
    assert np.array_equal(eval_basis(p, X), X)
    p = derive(generators(GroupSpec("SO", 3, 2)))
    vals = eval_basis(p, np.array([[1.0, 0, 0], [0, 1, 0]]))
    assert vals[2].tolist() == [0, 0, 1]
    vals = eval_basis(p, np.array([[1.0, 0, 0], [1, 0, 0]]))
    assert vals[2].tolist() == [0, 0, 0]


def test_eval_shape_mismatch():
    p = derive(generators(GroupSpec("O", 3, 2)))
    with pytest.raises(StructuralError):
        eval_features(p, np.zeros((3, 3)))
    with pytest.raises(StructuralError):
        eval_basis(p, np.zeros((2, 2)))


def test_batch_matches_single():
    p = derive(generators(GroupSpec("SO", 3, 3)))
    X = np.random.default_rng(1).standard_normal((5, 3, 3))
    fb, bb = eval_features(p, X), eval_basis(p, X)
    for k in range(5):
        assert np.array_equal(fb[k], eval_features(p, X[k]))
        assert np.array_equal(bb[k], eval_basis(p, X[k]))


@pytest.mark.parametrize(
    "spec",
    [GroupSpec("O", 3, 3), GroupSpec("SO", 3, 3), GroupSpec("SO", 4, 4), GroupSpec("Lorentz", 4, 3), GroupSpec("Sp", 4, 3)],
    ids=str,
)
def test_equivariance(spec):
    items = check_equivariance(derive(generators(spec)), trials=100)
    assert all(i.passed for i in items), [i for i in items if not i.passed]


def test_parametrization_json_round_trip():
    p = derive(generators(GroupSpec("SO", 3, 3)))
    q = Parametrization.from_json(p.to_json())
    assert q.basis == p.basis
    assert [f.poly for f in q.features] == [f.poly for f in p.features]
