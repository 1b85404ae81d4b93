"""Bihomogeneous generators of the invariant ring on V x W* for catalog groups.

The dual vector ``l`` is kept in dual-basis coordinates and transforms by
the contragredient, so the natural pairing ``sum_k v[i][k] * l[k]`` is
invariant for every family.  Generators come out split by their degree in
``l``: degree 0 (``deg0``), degree 1 (``deg1``), and higher degree, which
are kept aside and only counted by the equivariant-map construction.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .groups import (
    GroupElement,
    GroupSpec,
    act_input,
    contragredient,
    minkowski,
    sample,
    symplectic_form,
)
from .poly import Bidegree, Polynomial, StructuralError, VarUniverse
from .seeding import derive_seed, rng_for

MAX_DET_DIM = 6

# label kind -> rank, used for ordering within a degree class
KIND_ORDER = {"gram": 0, "omega": 0, "det": 1, "pair": 0, "crossdet": 1, "ellnorm": 0}


@dataclass(frozen=True)
class Generator:
    label: str
    poly: Polynomial
    bidegree: Bidegree

    @property
    def kind(self) -> str:
        return self.label.split("(", 1)[0]

    @property
    def indices(self) -> tuple[int, ...]:
        inner = self.label.split("(", 1)[1].rstrip(")") if "(" in self.label else ""
        return tuple(int(t) for t in inner.split(",") if t)

    def sort_key(self):
        return KIND_ORDER.get(self.kind, 9), self.indices

    def to_json(self) -> dict:
        return {"label": self.label, "poly": self.poly.to_json(), "bidegree": self.bidegree.to_json()}

    @classmethod
    def from_json(cls, data) -> "Generator":
        poly = Polynomial.from_json(data["poly"])
        return cls(str(data["label"]), poly, poly.bidegree())


@dataclass(frozen=True)
class GeneratorSet:
    spec: GroupSpec
    deg0: tuple[Generator, ...]
    deg1: tuple[Generator, ...]
    higher: tuple[Generator, ...] = field(default=())

    @property
    def discarded_count(self) -> int:
        return len(self.higher)

    @property
    def universe(self) -> VarUniverse:
        return VarUniverse(self.spec.d, self.spec.n)

    @property
    def all(self) -> tuple[Generator, ...]:
        """Every generator in X-variable order: deg0, then deg1, then higher."""
        return self.deg0 + self.deg1 + self.higher

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "deg0": [g.to_json() for g in self.deg0],
            "deg1": [g.to_json() for g in self.deg1],
            "discarded": [g.to_json() for g in self.higher],
            "counts": {
                "deg0": len(self.deg0),
                "deg1": len(self.deg1),
                "discarded": self.discarded_count,
            },
        }


def bilinear(u: VarUniverse, a, b, form: np.ndarray | None = None) -> Polynomial:
    """``a^T form b`` for coordinate lists of polynomials; identity form if None."""
    d = u.d
    total = u.zero()
    for r in range(d):
        for c in range(d):
            w = (1 if r == c else 0) if form is None else int(form[r, c])
            if w:
                total = total + a[r] * b[c] * w
    return total


def determinant(columns: list[list[Polynomial]]) -> Polynomial:
    """Leibniz expansion of the determinant whose columns are ``columns``."""
    d = len(columns)
    if d > MAX_DET_DIM:
        raise StructuralError(f"determinant expansion is capped at d <= {MAX_DET_DIM}")
    u = columns[0][0].universe
    total = u.zero()
    for perm in itertools.permutations(range(d)):
        sign = _perm_sign(perm)
        term = u.const(sign)
        for row in range(d):
            term = term * columns[perm[row]][row]
        total = total + term
    return total


def _perm_sign(perm) -> int:
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def _make(label: str, poly: Polynomial) -> Generator:
    bd = poly.bidegree()
    if bd.kind != "homogeneous":
        raise StructuralError(f"generator {label} is not bihomogeneous")
    return Generator(label, poly, bd)


def generators(spec: GroupSpec) -> GeneratorSet:
    """First-fundamental-theorem generators for ``spec``, sorted and split by l-degree."""
    u = VarUniverse(spec.d, spec.n)
    d, n = spec.d, spec.n
    vec = [[u.v(j, i) for i in range(1, d + 1)] for j in range(1, n + 1)]
    ell = [u.l(i) for i in range(1, d + 1)]

    deg0: list[Generator] = []
    deg1: list[Generator] = []
    higher: list[Generator] = []

    if spec.family in ("O", "SO", "Lorentz"):
        form = minkowski(d) if spec.family == "Lorentz" else None
        for i, j in itertools.combinations_with_replacement(range(1, n + 1), 2):
            deg0.append(_make(f"gram({i},{j})", bilinear(u, vec[i - 1], vec[j - 1], form)))
        # the dual form on W* is the inverse metric; eta is its own inverse
        higher.append(_make("ellnorm()", bilinear(u, ell, ell, form)))
    else:
        J = symplectic_form(d)
        for i, j in itertools.combinations(range(1, n + 1), 2):
            deg0.append(_make(f"omega({i},{j})", bilinear(u, vec[i - 1], vec[j - 1], J)))
        # l^T J^-1 l vanishes identically, so Sp has no degree-2 generator in l

    for i in range(1, n + 1):
        deg1.append(_make(f"pair({i})", bilinear(u, vec[i - 1], ell)))

    if spec.family == "SO":
        for subset in itertools.combinations(range(1, n + 1), d):
            label = "det(" + ",".join(map(str, subset)) + ")"
            deg0.append(_make(label, determinant([vec[k - 1] for k in subset])))
        for subset in itertools.combinations(range(1, n + 1), d - 1):
            label = "crossdet(" + ",".join(map(str, subset)) + ")"
            deg1.append(_make(label, determinant([vec[k - 1] for k in subset] + [ell])))

    return GeneratorSet(
        spec,
        tuple(sorted(deg0, key=Generator.sort_key)),
        tuple(sorted(deg1, key=Generator.sort_key)),
        tuple(higher),
    )


def relative_error(a, b) -> np.ndarray:
    """``|a - b| / max(|a|, |b|, 1)``: relative for large values, absolute near zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return np.abs(a - b) / scale


@dataclass(frozen=True)
class InvarianceItem:
    label: str
    max_violation: float
    passed: bool

    def to_json(self) -> dict:
        return {"item": self.label, "max_violation": self.max_violation, "pass": self.passed}


@dataclass(frozen=True)
class InvarianceReport:
    items: tuple[InvarianceItem, ...]
    trials: int
    tol: float

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    @property
    def max_violation(self) -> float:
        return max((i.max_violation for i in self.items), default=0.0)

    def __getitem__(self, label: str) -> InvarianceItem:
        for item in self.items:
            if item.label == label:
                return item
        raise KeyError(label)


def sample_trials(spec: GroupSpec, trials: int, seed: int, elements=None):
    """Group elements, input tuples and dual vectors for ``trials`` random trials."""
    if trials < 1:
        raise StructuralError("trials must be >= 1")
    if elements is None:
        elements = [sample(spec, derive_seed(seed, "trial-group", t)) for t in range(trials)]
    else:
        elements = [elements[t % len(elements)] for t in range(trials)]
    rng = rng_for(seed, "trial-inputs")
    X = rng.standard_normal((trials, spec.n, spec.d))
    L = rng.standard_normal((trials, spec.d))
    return elements, X, L


def polynomial_invariance(poly: Polynomial, elements, X, L) -> float:
    """Max relative change of ``poly`` under the joint action over the given trials."""
    gX = np.stack([act_input(g, x) for g, x in zip(elements, X)])
    gL = np.stack([contragredient(g) @ l for g, l in zip(elements, L)])
    return float(np.max(relative_error(poly.eval_at(gX, gL), poly.eval_at(X, L))))


def check_invariance(
    genset: GeneratorSet,
    trials: int = 100,
    tol: float | None = None,
    seed: int = 0,
    elements: list[GroupElement] | None = None,
    include_discarded: bool = True,
    workers: int = 1,
) -> InvarianceReport:
    """Numerically test each generator for invariance under sampled group elements.

    ``elements`` overrides the sampler (cycled over trials); used for
    negative controls such as feeding reflections to SO(d) generators.
    """
    tol = genset.spec.default_tol if tol is None else tol
    elements, X, L = sample_trials(genset.spec, trials, seed, elements)
    gens = genset.all if include_discarded else genset.deg0 + genset.deg1

    def one(gen: Generator) -> InvarianceItem:
        v = polynomial_invariance(gen.poly, elements, X, L)
        return InvarianceItem(gen.label, v, v <= tol)

    if workers > 1 and len(gens) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            items = list(pool.map(one, gens))
    else:
        items = [one(g) for g in gens]
    return InvarianceReport(tuple(items), trials, tol)
