"""Equivariant basis maps from invariant generators.

Generators of degree 0 in ``l`` become the invariant features.  Each
generator of degree 1 in ``l`` is differentiated in ``l``; the gradient,
read as a vector in W, is an equivariant map V -> W.  Generators of higher
degree in ``l`` are dropped.  Every equivariant polynomial map is then
``sum_j p_j(features) * basis_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Generator, GeneratorSet, relative_error, sample_trials
from .groups import GroupSpec, act_input, act_vector, check_inputs
from .poly import L_BLOCK, Polynomial, StructuralError, VarUniverse


class CatalogCorruption(ValueError):
    """A degree-1 generator whose l-gradient still depends on l."""


@dataclass(frozen=True)
class EquivariantBasisMap:
    components: tuple[Polynomial, ...]
    source_label: str

    def __post_init__(self):
        for c in self.components:
            if any(v.block == L_BLOCK for v in c.variables()):
                raise CatalogCorruption(f"basis map from {self.source_label} mentions l")

    def eval_at(self, X: np.ndarray) -> np.ndarray:
        """Values at inputs of shape ``(..., n, d)``; result has shape ``(..., d)``."""
        return np.stack([np.asarray(c.eval_at(X), dtype=float) for c in self.components], axis=-1)

    def to_json(self) -> dict:
        return {"source_label": self.source_label, "components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, data) -> "EquivariantBasisMap":
        return cls(tuple(Polynomial.from_json(c) for c in data["components"]), str(data["source_label"]))


@dataclass(frozen=True)
class Parametrization:
    spec: GroupSpec
    features: tuple[Generator, ...]
    basis: tuple[EquivariantBasisMap, ...]

    @property
    def r(self) -> int:
        return len(self.features)

    @property
    def universe(self) -> VarUniverse:
        return VarUniverse(self.spec.d, self.spec.n)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "features": [f.to_json() for f in self.features],
            "basis": [b.to_json() for b in self.basis],
        }

    @classmethod
    def from_json(cls, data) -> "Parametrization":
        try:
            spec = GroupSpec.from_json(data["spec"])
            features = tuple(Generator.from_json(f) for f in data["features"])
            basis = tuple(EquivariantBasisMap.from_json(b) for b in data["basis"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed Parametrization JSON: {exc}") from exc
        u = VarUniverse(spec.d, spec.n)
        for poly in [f.poly for f in features] + [c for b in basis for c in b.components]:
            if poly.universe != u:
                raise StructuralError("parametrization polynomial has the wrong universe")
        return cls(spec, features, basis)


def basis_from_gradient(gen: Generator) -> EquivariantBasisMap:
    comps = gen.poly.d_ell()
    for c in comps:
        if any(v.block == L_BLOCK for v in c.variables()):
            raise CatalogCorruption(
                f"generator {gen.label} has l-degree {gen.bidegree.deg_l}, expected 1"
            )
    return EquivariantBasisMap(tuple(comps), gen.label)


def basis_from_coefficients(gen: Generator) -> EquivariantBasisMap:
    """Read the basis map off as the coefficients of ``l[1..d]``.

    Independent of differentiation; agrees with :func:`basis_from_gradient`
    exactly when the generator is linear in ``l``.
    """
    u = gen.poly.universe
    parts: list[dict] = [{} for _ in range(u.d)]
    for mono, c in gen.poly.items():
        ells = [(v, e) for v, e in mono if v.block == L_BLOCK]
        if len(ells) != 1 or ells[0][1] != 1:
            raise CatalogCorruption(f"generator {gen.label} is not linear homogeneous in l")
        (lv, _), = ells
        rest = tuple((v, e) for v, e in mono if v.block != L_BLOCK)
        parts[lv.i - 1][rest] = c
    return EquivariantBasisMap(tuple(Polynomial(u, p) for p in parts), gen.label)


def derive(genset: GeneratorSet, method: str = "gradient") -> Parametrization:
    """Features and equivariant basis maps for a generator set.

    ``method`` is ``"gradient"`` (differentiate in ``l``) or
    ``"coefficients"`` (read off the ``l`` coefficients).
    """
    build = {"gradient": basis_from_gradient, "coefficients": basis_from_coefficients}[method]
    for gen in genset.deg1:
        if gen.bidegree.deg_l != 1:
            raise CatalogCorruption(f"{gen.label} filed as degree 1 but has l-degree {gen.bidegree.deg_l}")
    return Parametrization(genset.spec, tuple(genset.deg0), tuple(build(g) for g in genset.deg1))


def eval_features(param: Parametrization, X) -> np.ndarray:
    """Feature values; ``X`` of shape ``(n, d)`` gives ``(r,)``, a batch gives ``(N, r)``."""
    X = check_inputs(param.spec, X)
    if not param.features:
        return np.zeros(X.shape[:-2] + (0,))
    return np.stack([np.asarray(f.poly.eval_at(X), dtype=float) for f in param.features], axis=-1)


def eval_basis(param: Parametrization, X) -> np.ndarray:
    """Basis map values; shape ``(s - r, d)`` for one tuple, ``(N, s - r, d)`` for a batch."""
    X = check_inputs(param.spec, X)
    if not param.basis:
        return np.zeros(X.shape[:-2] + (0, param.spec.d))
    return np.stack([b.eval_at(X) for b in param.basis], axis=-2)


def vector_relative_error(a, b) -> np.ndarray:
    """``||a - b|| / max(||a||, ||b||, 1)`` along the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    return np.linalg.norm(a - b, axis=-1) / np.maximum(np.maximum(na, nb), 1.0)


@dataclass(frozen=True)
class EquivarianceItem:
    label: str
    kind: str
    max_violation: float
    passed: bool

    def to_json(self) -> dict:
        return {"item": self.label, "kind": self.kind, "max_violation": self.max_violation, "pass": self.passed}


def check_equivariance(
    param: Parametrization,
    trials: int = 100,
    tol: float | None = None,
    seed: int = 0,
    elements=None,
) -> list[EquivarianceItem]:
    """Invariance of every feature and equivariance of every basis map, numerically."""
    tol = param.spec.default_tol if tol is None else tol
    elements, X, _ = sample_trials(param.spec, trials, seed, elements)
    gX = np.stack([act_input(g, x) for g, x in zip(elements, X)])
    items = []
    if param.features:
        f0, f1 = eval_features(param, X), eval_features(param, gX)
        for k, feat in enumerate(param.features):
            v = float(np.max(relative_error(f1[:, k], f0[:, k])))
            items.append(EquivarianceItem(feat.label, "feature", v, v <= tol))
    if param.basis:
        b0, b1 = eval_basis(param, X), eval_basis(param, gX)
        for k, bm in enumerate(param.basis):
            moved = np.stack([act_vector(g, b0[t, k]) for t, g in enumerate(elements)])
            v = float(np.max(vector_relative_error(b1[:, k], moved)))
            items.append(EquivarianceItem(bm.source_label, "basis", v, v <= tol))
    return items


def map_equivariance_violation(components, spec: GroupSpec, trials: int = 100, seed: int = 0, elements=None) -> float:
    """Max relative equivariance defect of a polynomial map given by its d components."""
    elements, X, _ = sample_trials(spec, trials, seed, elements)
    gX = np.stack([act_input(g, x) for g, x in zip(elements, X)])

    def values(inputs):
        return np.stack([np.broadcast_to(np.asarray(c.eval_at(inputs), dtype=float), inputs.shape[:-2])
                         for c in components], axis=-1)

    f0, f1 = values(X), values(gX)
    moved = np.stack([act_vector(g, f0[t]) for t, g in enumerate(elements)])
    return float(np.max(vector_relative_error(f1, moved)))
