"""Express equivariant polynomial maps in an invariant-generator parametrization.

Given a polynomial map ``f: V -> W``:

1. curry it into the scalar ``(v, l) -> l(f(v))``, linear in ``l``;
2. write that scalar as a polynomial ``P`` in the generators by solving an
   exact linear system, one bihomogeneous stratum at a time;
3. take ``p_j = dP/dX_j`` for each degree-1 generator, with the generators
   that depend on ``l`` set to zero;
4. check ``f == sum_j p_j(features) * basis_j`` in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .catalog import GeneratorSet, polynomial_invariance, sample_trials
from .linsolve import Inconsistent, solve
from .malgrange import Parametrization, map_equivariance_violation
from .poly import (
    L_BLOCK,
    GenUniverse,
    Polynomial,
    StructuralError,
    Var,
    VarUniverse,
    monomial_key,
)


class NoExpression(ValueError):
    """The target is not a polynomial in the generators within the degree bound."""

    def __init__(self, degree_bound: int, stratum=None, invariance_violation: float | None = None):
        self.degree_bound = degree_bound
        self.stratum = stratum
        self.invariance_violation = invariance_violation
        msg = f"no expression in the generators at degree bound {degree_bound}"
        if stratum is not None:
            msg += f" (stratum deg_v={stratum[0]}, deg_l={stratum[1]})"
        if invariance_violation is not None:
            if invariance_violation > 1e-6:
                msg += f"; target is not invariant (numeric violation {invariance_violation:.3g})"
            else:
                msg += f"; target looks invariant (violation {invariance_violation:.3g}), try a larger bound"
        super().__init__(msg)

    def diagnostics(self) -> dict:
        return {
            "degree_bound": self.degree_bound,
            "stratum": list(self.stratum) if self.stratum is not None else None,
            "invariance_violation": self.invariance_violation,
        }


class CertificationFailure(AssertionError):
    """The decomposition does not reproduce the map."""

    def __init__(self, residual: "PolyMap"):
        self.residual = residual
        nonzero = sum(len(c) for c in residual.components)
        super().__init__(f"certified identity failed; residual has {nonzero} nonzero terms")

    def diagnostics(self) -> dict:
        return {"residual": self.residual.to_json()}


@dataclass(frozen=True)
class PolyMap:
    """A polynomial map V -> W given by its d coordinate polynomials."""

    components: tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise StructuralError("a map needs at least one component")
        u = comps[0].universe
        if not isinstance(u, VarUniverse) or len(comps) != u.d:
            raise StructuralError(f"expected {getattr(u, 'd', '?')} components over a VarUniverse")
        for c in comps:
            if c.universe != u:
                raise StructuralError("map components live in different universes")
            if any(v.block == L_BLOCK for v in c.variables()):
                raise StructuralError("map components must not mention l")

    @property
    def universe(self) -> VarUniverse:
        return self.components[0].universe

    @classmethod
    def zero(cls, universe: VarUniverse) -> "PolyMap":
        return cls(tuple(universe.zero() for _ in range(universe.d)))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __add__(self, other: "PolyMap") -> "PolyMap":
        return PolyMap(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "PolyMap") -> "PolyMap":
        return PolyMap(tuple(a - b for a, b in zip(self.components, other.components)))

    def scale(self, c) -> "PolyMap":
        """Multiply by a rational or by a scalar polynomial."""
        return PolyMap(tuple(comp * c for comp in self.components))

    def degree(self) -> int:
        return max(c.degree() for c in self.components)

    def to_json(self) -> dict:
        u = self.universe
        return {"d": u.d, "n": u.n, "components": [c.to_json() for c in self.components]}

    @classmethod
    def from_json(cls, data) -> "PolyMap":
        try:
            comps = tuple(Polynomial.from_json(c) for c in data["components"])
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed map JSON: {exc}") from exc
        if "d" in data and "n" in data:
            u = VarUniverse(int(data["d"]), int(data["n"]))
            if any(c.universe != u for c in comps):
                raise StructuralError("component universe disagrees with the map's d, n")
        return cls(comps)


def curry(f: PolyMap) -> Polynomial:
    """``sum_i l[i] * f_i(v)``."""
    u = f.universe
    total = u.zero()
    for i, comp in enumerate(f.components, start=1):
        total = total + u.l(i) * comp
    return total


@dataclass(frozen=True)
class SubalgebraExpression:
    P: Polynomial
    degree_bound: int
    labels: tuple[str, ...]

    def legend(self) -> dict[str, str]:
        return {f"X{k}": lab for k, lab in enumerate(self.labels, start=1)}


def default_degree_bound(target: Polynomial, genset: GeneratorSet) -> int:
    """``ceil(deg(target) / min generator degree)``, at least 1."""
    if target.is_zero():
        return 1
    min_deg = min(g.poly.degree() for g in genset.all)
    return max(1, math.ceil(target.degree() / min_deg))


def _exponent_vectors(bidegs, stratum, bound):
    """All exponent vectors over generators whose weighted bidegree equals ``stratum``."""
    m = len(bidegs)
    out = []

    def rec(k, dv, dl, left, acc):
        if dv == 0 and dl == 0:
            out.append(tuple(acc) + (0,) * (m - k))
            return
        if k == m or left == 0:
            return
        gv, gl = bidegs[k]
        e = 0
        while e <= left and e * gv <= dv and e * gl <= dl:
            acc.append(e)
            rec(k + 1, dv - e * gv, dl - e * gl, left - e, acc)
            acc.pop()
            e += 1

    rec(0, stratum[0], stratum[1], bound, [])
    return out


def _x_monomial(alpha) -> tuple:
    return tuple((Var.x(k), e) for k, e in enumerate(alpha, start=1) if e)


def express_in_generators(
    target: Polynomial,
    genset: GeneratorSet,
    degree_bound: int | None = None,
    diagnose: bool = True,
) -> SubalgebraExpression:
    """Find ``P`` with ``P(f_1, ..., f_m) == target`` exactly.

    ``X1..Xm`` stand for the generators in ``genset.all`` order (degree 0 in
    l, then degree 1, then higher).  Raises :class:`NoExpression` when no
    such ``P`` of total degree at most ``degree_bound`` exists.
    """
    u = genset.universe
    if target.universe != u:
        raise StructuralError("target and generators live in different universes")
    gens = genset.all
    if degree_bound is None:
        degree_bound = default_degree_bound(target, genset)
    if degree_bound < 1:
        raise StructuralError("degree_bound must be >= 1")
    gu = GenUniverse(len(gens))
    bidegs = [(g.bidegree.deg_v, g.bidegree.deg_l) for g in gens]

    @lru_cache(maxsize=None)
    def product(alpha: tuple) -> Polynomial:
        for k, e in enumerate(alpha):
            if e:
                rest = alpha[:k] + (e - 1,) + alpha[k + 1:]
                return product(rest) * gens[k].poly
        return u.const(1)

    P_terms: dict = {}
    for stratum, piece in target.strata().items():
        alphas = _exponent_vectors(bidegs, stratum, degree_bound)
        alphas.sort(key=lambda a: monomial_key(_x_monomial(a)))
        row_index: dict = {}
        rows: list[dict] = []
        for col, alpha in enumerate(alphas):
            for mono, c in product(alpha).terms.items():
                if mono not in row_index:
                    row_index[mono] = len(rows)
                    rows.append({})
                rows[row_index[mono]][col] = c
        rhs = [Fraction(0)] * len(rows)
        for mono, c in piece.terms.items():
            if mono not in row_index:
                raise _no_expression(target, genset, degree_bound, stratum, diagnose)
            rhs[row_index[mono]] = c
        try:
            x = solve(rows, rhs, len(alphas))
        except Inconsistent:
            raise _no_expression(target, genset, degree_bound, stratum, diagnose) from None
        for alpha, c in zip(alphas, x):
            if c:
                P_terms[_x_monomial(alpha)] = c

    P = Polynomial(gu, P_terms)
    values = {Var.x(k): g.poly for k, g in enumerate(gens, start=1)}
    if P.substitute(values, u) != target:
        raise AssertionError("solver returned a non-solution")
    return SubalgebraExpression(P, degree_bound, tuple(g.label for g in gens))


def _no_expression(target, genset, bound, stratum, diagnose) -> NoExpression:
    violation = None
    if diagnose:
        elements, X, L = sample_trials(genset.spec, 50, seed=0)
        violation = polynomial_invariance(target, elements, X, L)
    return NoExpression(bound, stratum, violation)


@dataclass(frozen=True)
class Decomposition:
    """Coefficient polynomials ``p_j`` in ``X1..Xr`` (the features), one per basis map."""

    coefficients: tuple[Polynomial, ...]
    param: Parametrization
    expression: SubalgebraExpression | None = field(default=None, compare=False)

    def with_coefficient(self, j: int, p: Polynomial) -> "Decomposition":
        coeffs = list(self.coefficients)
        coeffs[j] = p
        return Decomposition(tuple(coeffs), self.param, self.expression)

    def legend(self) -> dict[str, str]:
        return {f"X{k}": f.label for k, f in enumerate(self.param.features, start=1)}

    def to_json(self) -> dict:
        return {
            "spec": self.param.spec.to_json(),
            "legend": self.legend(),
            "coefficients": [
                {"basis": b.source_label, "p": p.to_json()}
                for b, p in zip(self.param.basis, self.coefficients)
            ],
        }


def assemble(dec: Decomposition) -> PolyMap:
    """``sum_j p_j(features) * basis_j`` as an explicit polynomial map."""
    u = dec.param.universe
    values = {Var.x(k): f.poly for k, f in enumerate(dec.param.features, start=1)}
    total = PolyMap.zero(u)
    for p, b in zip(dec.coefficients, dec.param.basis):
        if p.is_zero():
            continue
        scalar = p.substitute(values, u)
        total = total + PolyMap(b.components).scale(scalar)
    return total


@dataclass(frozen=True)
class CertificationReport:
    passed: bool
    residual: PolyMap


def certify_identity(f: PolyMap, dec: Decomposition) -> CertificationReport:
    """Residual ``f - sum_j p_j(features) * basis_j``, computed exactly."""
    if f.universe != dec.param.universe:
        raise StructuralError("map and parametrization live in different universes")
    residual = f - assemble(dec)
    return CertificationReport(residual.is_zero(), residual)


def decompose(
    f: PolyMap,
    genset: GeneratorSet,
    param: Parametrization,
    degree_bound: int | None = None,
) -> Decomposition:
    """Coefficients ``p_j`` with ``f == sum_j p_j(features) * basis_j``, certified."""
    if f.universe != genset.universe:
        raise StructuralError("map and generators live in different universes")
    if len(param.features) != len(genset.deg0) or len(param.basis) != len(genset.deg1):
        raise StructuralError("parametrization does not match the generator set")
    expr = express_in_generators(curry(f), genset, degree_bound)
    r, s = len(genset.deg0), len(genset.deg0) + len(genset.deg1)
    m = len(genset.all)
    at_zero = {Var.x(k): 0 for k in range(r + 1, m + 1)}
    feature_universe = GenUniverse(r)
    coeffs = []
    for j in range(r + 1, s + 1):
        p = expr.P.partial(Var.x(j)).substitute(at_zero).restrict(feature_universe)
        coeffs.append(p)
    dec = Decomposition(tuple(coeffs), param, expr)
    report = certify_identity(f, dec)
    if not report.passed:
        raise CertificationFailure(report.residual)
    return dec


def map_violation(f: PolyMap, spec, trials: int = 100, seed: int = 0) -> float:
    """Numeric equivariance defect of ``f`` under sampled elements of ``spec``."""
    return map_equivariance_violation(f.components, spec, trials, seed)
