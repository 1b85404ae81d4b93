"""Equivariant polynomial maps from generators of invariant rings."""

from .catalog import Generator, GeneratorSet, check_invariance, generators
from .certify import (
    CertificationFailure,
    Decomposition,
    NoExpression,
    PolyMap,
    certify_identity,
    curry,
    decompose,
    express_in_generators,
)
from .fit import Dataset, EquiModel, evaluate, fit, make_task, predict
from .groups import GroupElement, GroupSpec, act_input, contragredient, sample, verify_membership
from .malgrange import EquivariantBasisMap, Parametrization, derive, eval_basis, eval_features
from .poly import Bidegree, GenUniverse, Polynomial, StructuralError, Var, VarUniverse

__version__ = "0.1.0"
