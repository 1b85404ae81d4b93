"""Exact sparse multivariate polynomials over the rationals.

Variables live in a named universe.  A :class:`VarUniverse` holds the
coordinates ``v{j}_{i}`` of the input vectors (the V-block) and the dual
coordinates ``l_{i}`` of a linear functional on the output space (the
l-block).  A :class:`GenUniverse` holds abstract generator variables
``X{k}`` used when a polynomial is expressed in terms of invariant
generators.

Polynomials are immutable.  A monomial is a tuple of ``(Var, exponent)``
pairs sorted by variable, with no zero exponents; coefficients are
:class:`fractions.Fraction` and zero coefficients are never stored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Union

import numpy as np

__all__ = [
    "StructuralError",
    "Var",
    "VarUniverse",
    "GenUniverse",
    "Monomial",
    "Polynomial",
    "Bidegree",
    "NON_HOMOGENEOUS",
    "ANY_BIDEGREE",
    "monomial_key",
    "parse_fraction",
    "format_fraction",
]


class StructuralError(ValueError):
    """Malformed input: universe mismatch, unknown variable, bad shape."""


V_BLOCK, L_BLOCK, X_BLOCK = 0, 1, 2


class Var(NamedTuple):
    """A variable identified by block and indices, never by position.

    Tuple order gives the fixed variable order: V-block before l-block
    before abstract generators, then (j, i) lexicographic.
    """

    block: int
    j: int
    i: int

    @classmethod
    def v(cls, j: int, i: int) -> "Var":
        return cls(V_BLOCK, j, i)

    @classmethod
    def l(cls, i: int) -> "Var":
        return cls(L_BLOCK, 0, i)

    @classmethod
    def x(cls, k: int) -> "Var":
        return cls(X_BLOCK, 0, k)

    @property
    def name(self) -> str:
        if self.block == V_BLOCK:
            return f"v{self.j}_{self.i}"
        if self.block == L_BLOCK:
            return f"l_{self.i}"
        return f"X{self.i}"

    @classmethod
    def parse(cls, name: str) -> "Var":
        m = re.fullmatch(r"v(\d+)_(\d+)|l_(\d+)|X(\d+)", name)
        if m is None:
            raise StructuralError(f"bad variable name {name!r}")
        if m.group(1) is not None:
            return cls.v(int(m.group(1)), int(m.group(2)))
        if m.group(3) is not None:
            return cls.l(int(m.group(3)))
        return cls.x(int(m.group(4)))

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class VarUniverse:
    """Variables ``v[j][i]`` (j in 1..n, i in 1..d) and ``l[i]`` (i in 1..d)."""

    d: int
    n: int

    def __post_init__(self):
        if not (isinstance(self.d, int) and isinstance(self.n, int)):
            raise StructuralError("d and n must be integers")
        if self.d < 1 or self.n < 1:
            raise StructuralError(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")

    def __contains__(self, var: Var) -> bool:
        if var.block == V_BLOCK:
            return 1 <= var.j <= self.n and 1 <= var.i <= self.d
        if var.block == L_BLOCK:
            return var.j == 0 and 1 <= var.i <= self.d
        return False

    @property
    def variables(self) -> tuple[Var, ...]:
        vs = [Var.v(j, i) for j in range(1, self.n + 1) for i in range(1, self.d + 1)]
        return tuple(vs) + tuple(Var.l(i) for i in range(1, self.d + 1))

    def v(self, j: int, i: int) -> "Polynomial":
        return Polynomial.variable(self, Var.v(j, i))

    def l(self, i: int) -> "Polynomial":
        return Polynomial.variable(self, Var.l(i))

    def zero(self) -> "Polynomial":
        return Polynomial(self)

    def const(self, c) -> "Polynomial":
        return Polynomial.constant(self, c)

    def to_json(self) -> dict:
        return {"d": self.d, "n": self.n}


@dataclass(frozen=True)
class GenUniverse:
    """Abstract generator variables ``X1..Xm``."""

    m: int

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 0:
            raise StructuralError(f"bad generator count {self.m!r}")

    def __contains__(self, var: Var) -> bool:
        return var.block == X_BLOCK and var.j == 0 and 1 <= var.i <= self.m

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(Var.x(k) for k in range(1, self.m + 1))

    def x(self, k: int) -> "Polynomial":
        return Polynomial.variable(self, Var.x(k))

    def zero(self) -> "Polynomial":
        return Polynomial(self)

    def const(self, c) -> "Polynomial":
        return Polynomial.constant(self, c)

    def to_json(self) -> dict:
        return {"m": self.m}


Universe = Union[VarUniverse, GenUniverse]
Monomial = tuple  # tuple[tuple[Var, int], ...], sorted by Var, exponents > 0
Scalar = Union[int, Fraction]

ONE: Monomial = ()


def monomial_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def monomial_key(m: Monomial):
    """Ascending sort key for graded-lex order.

    Higher total degree is larger; ties go to the monomial with the larger
    exponent on the earliest variable where the two differ.
    """
    return (
        monomial_degree(m),
        tuple(((-v.block, -v.j, -v.i), e) for v, e in m),
    )


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)) and not isinstance(c, bool):
        return Fraction(c)
    raise StructuralError(f"coefficient must be an exact rational, got {type(c).__name__}")


def parse_fraction(s: str) -> Fraction:
    m = re.fullmatch(r"\s*(-?\d+)(?:/(\d+))?\s*", s)
    if m is None:
        raise StructuralError(f"bad rational {s!r}; expected 'p/q' or 'p'")
    q = int(m.group(2)) if m.group(2) else 1
    if q == 0:
        raise StructuralError(f"zero denominator in {s!r}")
    return Fraction(int(m.group(1)), q)


def format_fraction(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class Bidegree:
    """Bidegree ``(deg_v, deg_l)`` or one of two sentinels.

    ``kind`` is ``"homogeneous"`` for an honest bidegree, ``"mixed"`` for a
    polynomial with terms of different bidegrees, and ``"any"`` for the zero
    polynomial, which is bihomogeneous of every bidegree.
    """

    deg_v: int | None
    deg_l: int | None
    kind: str = "homogeneous"

    @property
    def is_bihomogeneous(self) -> bool:
        return self.kind != "mixed"

    def __add__(self, other: "Bidegree") -> "Bidegree":
        if self.kind == "mixed" or other.kind == "mixed":
            return NON_HOMOGENEOUS
        if self.kind == "any" or other.kind == "any":
            return ANY_BIDEGREE
        return Bidegree(self.deg_v + other.deg_v, self.deg_l + other.deg_l)

    def to_json(self):
        if self.kind == "homogeneous":
            return [self.deg_v, self.deg_l]
        return self.kind

    def __repr__(self) -> str:
        if self.kind == "homogeneous":
            return f"Bidegree({self.deg_v}, {self.deg_l})"
        return f"Bidegree<{self.kind}>"


NON_HOMOGENEOUS = Bidegree(None, None, "mixed")
ANY_BIDEGREE = Bidegree(None, None, "any")


def monomial_bidegree(m: Monomial) -> tuple[int, int]:
    dv = dl = 0
    for v, e in m:
        if v.block == V_BLOCK:
            dv += e
        elif v.block == L_BLOCK:
            dl += e
        else:
            raise StructuralError("bidegree is defined only over a VarUniverse")
    return dv, dl


class Polynomial:
    """Immutable sparse polynomial with rational coefficients."""

    __slots__ = ("universe", "_terms", "_hash")

    def __init__(self, universe: Universe, terms: Mapping | Iterable = ()):
        self.universe = universe
        clean: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for mono, c in items:
            mono = _normalize_monomial(universe, mono)
            c = _as_fraction(c)
            if c:
                total = clean.get(mono, 0) + c
                if total:
                    clean[mono] = total
                else:
                    clean.pop(mono, None)
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, universe: Universe, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.universe = universe
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, universe: Universe, c) -> "Polynomial":
        return cls(universe, {ONE: c})

    @classmethod
    def variable(cls, universe: Universe, var: Var) -> "Polynomial":
        if var not in universe:
            raise StructuralError(f"{var.name} is not in {universe}")
        return cls._raw(universe, {((var, 1),): Fraction(1)})

    # -- inspection ----------------------------------------------------

    @property
    def terms(self) -> dict:
        """Copy of the term map ``{monomial: Fraction}``."""
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Monomial, Fraction]]:
        """Terms in ascending graded-lex order."""
        for mono in sorted(self._terms, key=monomial_key):
            yield mono, self._terms[mono]

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def variables(self) -> set[Var]:
        return {v for mono in self._terms for v, _ in mono}

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((monomial_degree(m) for m in self._terms), default=-1)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(_normalize_monomial(self.universe, mono), Fraction(0))

    def bidegree(self) -> Bidegree:
        if not self._terms:
            return ANY_BIDEGREE
        degs = {monomial_bidegree(m) for m in self._terms}
        if len(degs) > 1:
            return NON_HOMOGENEOUS
        (dv, dl), = degs
        return Bidegree(dv, dl)

    def strata(self) -> dict[tuple[int, int], "Polynomial"]:
        """Split into bihomogeneous pieces keyed by ``(deg_v, deg_l)``."""
        parts: dict = {}
        for mono, c in self._terms.items():
            parts.setdefault(monomial_bidegree(mono), {})[mono] = c
        return {k: Polynomial._raw(self.universe, parts[k]) for k in sorted(parts)}

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.universe != self.universe:
                raise StructuralError(
                    f"universe mismatch: {self.universe} vs {other.universe}"
                )
            return other
        return Polynomial.constant(self.universe, other)

    def __add__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except StructuralError:
            if isinstance(other, Polynomial):
                raise
            return NotImplemented
        out = dict(self._terms)
        for mono, c in other._terms.items():
            total = out.get(mono, 0) + c
            if total:
                out[mono] = total
            else:
                out.pop(mono, None)
        return Polynomial._raw(self.universe, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.universe, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _as_fraction(c)
        if not c:
            return Polynomial._raw(self.universe, {})
        return Polynomial._raw(self.universe, {m: c * a for m, a in self._terms.items()})

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            try:
                return self.scale(other)
            except StructuralError:
                return NotImplemented
        other = self._coerce(other)
        out: dict = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mono = monomial_mul(ma, mb)
                total = out.get(mono, 0) + ca * cb
                if total:
                    out[mono] = total
                else:
                    del out[mono]
        return Polynomial._raw(self.universe, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise StructuralError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.universe, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.universe == other.universe and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({ONE: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.universe, frozenset(self._terms.items())))
        return self._hash

    # -- calculus ------------------------------------------------------

    def partial(self, var: Var | str) -> "Polynomial":
        """Formal partial derivative with respect to ``var``."""
        if isinstance(var, str):
            var = Var.parse(var)
        if var not in self.universe:
            raise StructuralError(f"{var.name} is not a variable of {self.universe}")
        out: dict = {}
        for mono, c in self._terms.items():
            for k, (v, e) in enumerate(mono):
                if v == var:
                    rest = mono[:k] + (((v, e - 1),) if e > 1 else ()) + mono[k + 1:]
                    out[rest] = out.get(rest, 0) + c * e
                    break
        return Polynomial._raw(self.universe, {m: c for m, c in out.items() if c})

    def d_ell(self) -> list["Polynomial"]:
        """Gradient in the l-block: component i is the partial in ``l[i]``."""
        if not isinstance(self.universe, VarUniverse):
            raise StructuralError("d_ell needs a VarUniverse")
        return [self.partial(Var.l(i)) for i in range(1, self.universe.d + 1)]

    # -- substitution and evaluation ----------------------------------

    def substitute(self, values: Mapping[Var, "Polynomial | Scalar"], universe: Universe | None = None) -> "Polynomial":
        """Replace variables by polynomials (or exact scalars) over ``universe``.

        Variables not in ``values`` are kept, so they must also belong to the
        target universe.  Powers of substituted polynomials are cached.
        """
        universe = universe or self.universe
        powers: dict = {}

        def power(v: Var, e: int) -> Polynomial:
            key = (v, e)
            if key not in powers:
                val = values[v]
                if not isinstance(val, Polynomial):
                    val = Polynomial.constant(universe, val)
                elif val.universe != universe:
                    raise StructuralError("substituted polynomial has the wrong universe")
                powers[key] = val ** e
            return powers[key]

        result: dict = {}
        for mono, c in self._terms.items():
            term = Polynomial._raw(universe, {ONE: c})
            kept = []
            for v, e in mono:
                if v in values:
                    term = term * power(v, e)
                    if not term:
                        break
                else:
                    if v not in universe:
                        raise StructuralError(f"{v.name} left unsubstituted but absent from {universe}")
                    kept.append((v, e))
            if kept and term:
                term = term * Polynomial._raw(universe, {tuple(kept): Fraction(1)})
            for m2, c2 in term._terms.items():
                total = result.get(m2, 0) + c2
                if total:
                    result[m2] = total
                else:
                    del result[m2]
        return Polynomial._raw(universe, result)

    def restrict(self, universe: Universe) -> "Polynomial":
        """Re-home the polynomial in a universe that contains all its variables."""
        for v in self.variables():
            if v not in universe:
                raise StructuralError(f"{v.name} is not in {universe}")
        return Polynomial._raw(universe, dict(self._terms))

    def eval(self, point: Mapping) -> object:
        """Evaluate at ``point`` (keys are :class:`Var` or variable names).

        Exact when every value is an int or Fraction; float otherwise.  Terms
        are summed in ascending graded-lex order so float results are
        reproducible.
        """
        pt = {}
        for k, val in point.items():
            pt[Var.parse(k) if isinstance(k, str) else k] = val
        total = Fraction(0)
        for mono, c in self.items():
            term = c
            for v, e in mono:
                if v not in pt:
                    raise StructuralError(f"no value given for {v.name}")
                term = term * pt[v] ** e
            total = total + term
        return total

    def eval_with(self, lookup: Callable[[Var], np.ndarray | float]):
        """Float evaluation, vectorised over whatever ``lookup`` returns.

        Powers are formed by repeated multiplication and terms are summed in
        ascending graded-lex order, so the result is bitwise reproducible.
        """
        total = 0.0
        for mono, c in self.items():
            term = float(c)
            for v, e in mono:
                x = lookup(v)
                for _ in range(e):
                    term = term * x
            total = total + term
        return total

    def eval_at(self, vectors: np.ndarray, ell: np.ndarray | None = None):
        """Float evaluation at input vectors of shape ``(..., n, d)`` and ``ell`` of shape ``(..., d)``."""
        if not isinstance(self.universe, VarUniverse):
            raise StructuralError("eval_at needs a VarUniverse")
        u = self.universe
        vectors = np.asarray(vectors, dtype=float)
        if vectors.shape[-2:] != (u.n, u.d):
            raise StructuralError(f"expected input shape (..., {u.n}, {u.d}), got {vectors.shape}")
        if ell is not None:
            ell = np.asarray(ell, dtype=float)
            if ell.shape[-1:] != (u.d,):
                raise StructuralError(f"expected ell of length {u.d}, got shape {ell.shape}")

        def lookup(v: Var):
            if v.block == V_BLOCK:
                return vectors[..., v.j - 1, v.i - 1]
            if ell is None:
                raise StructuralError(f"no value given for {v.name}")
            return ell[..., v.i - 1]

        out = self.eval_with(lookup)
        if np.ndim(out) == 0 and vectors.ndim > 2:
            out = np.full(vectors.shape[:-2], out)
        return out

    # -- I/O -----------------------------------------------------------

    def to_json(self) -> dict:
        data = self.universe.to_json()
        data["terms"] = [
            {"coeff": format_fraction(c), "exps": {v.name: e for v, e in mono}}
            for mono, c in self.items()
        ]
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "Polynomial":
        try:
            if "m" in data:
                universe: Universe = GenUniverse(int(data["m"]))
            else:
                universe = VarUniverse(int(data["d"]), int(data["n"]))
            terms = []
            for t in data["terms"]:
                coeff = t["coeff"]
                if not isinstance(coeff, (str, int)) or isinstance(coeff, bool):
                    raise StructuralError(f"coefficient must be a 'p/q' string, got {coeff!r}")
                c = parse_fraction(str(coeff))
                mono = tuple((Var.parse(name), int(e)) for name, e in t["exps"].items())
                terms.append((mono, c))
        except (KeyError, TypeError, AttributeError) as exc:
            raise StructuralError(f"malformed polynomial JSON: {exc}") from exc
        return cls(universe, terms)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, c in reversed(list(self.items())):
            body = "*".join(v.name if e == 1 else f"{v.name}^{e}" for v, e in mono)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append("-" + body)
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Polynomial({self})"


def _normalize_monomial(universe: Universe, mono) -> Monomial:
    if isinstance(mono, Mapping):
        mono = mono.items()
    exps: dict = {}
    for v, e in mono:
        if isinstance(v, str):
            v = Var.parse(v)
        if v not in universe:
            raise StructuralError(f"{v.name} is not a variable of {universe}")
        if not isinstance(e, int) or e < 0:
            raise StructuralError(f"bad exponent {e!r} for {v.name}")
        if e:
            exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))

