"""Matrix groups of the catalog and their actions.

Families: ``O`` (orthogonal), ``SO`` (special orthogonal), ``Lorentz``
(``O(1, d-1)`` with metric ``diag(-1, 1, ..., 1)``) and ``Sp`` (symplectic,
``d`` even).  Each group acts on ``W = R^d`` by matrix multiplication, on
``V = (R^d)^n`` diagonally, and on ``W*`` by the contragredient
``(g^-1)^T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .poly import StructuralError
from .seeding import derive_seed

FAMILIES = ("O", "SO", "Lorentz", "Sp")


class NumericError(ArithmeticError):
    """A numerical computation left its safe regime (singular matrix, rank loss)."""


@dataclass(frozen=True)
class GroupSpec:
    family: str
    d: int
    n: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise StructuralError(f"unknown group family {self.family!r}; choose from {FAMILIES}")
        if not isinstance(self.d, int) or self.d < 1:
            raise StructuralError(f"d must be a positive integer, got {self.d!r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise StructuralError(f"n must be a positive integer, got {self.n!r}")
        if self.family == "Lorentz" and self.d < 2:
            raise StructuralError("the Lorentz group needs d >= 2")
        if self.family == "Sp" and self.d % 2:
            raise StructuralError("the symplectic group needs even d")

    @property
    def compact(self) -> bool:
        return self.family in ("O", "SO")

    @property
    def default_tol(self) -> float:
        return 1e-9 if self.compact else 1e-7

    def to_json(self) -> dict:
        return {"family": self.family, "d": self.d, "n": self.n}

    @classmethod
    def from_json(cls, data) -> "GroupSpec":
        try:
            return cls(str(data["family"]), int(data["d"]), int(data["n"]))
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed GroupSpec JSON: {exc}") from exc

    def __str__(self) -> str:
        return f"{self.family}({self.d}), n={self.n}"


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    spec: GroupSpec

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.spec.d, self.spec.d):
            raise StructuralError(f"expected a {self.spec.d}x{self.spec.d} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.spec)


def minkowski(d: int) -> np.ndarray:
    eta = np.eye(d)
    eta[0, 0] = -1.0
    return eta


def symplectic_form(d: int) -> np.ndarray:
    """Block diagonal with ``[[0, -1], [1, 0]]`` blocks."""
    if d % 2:
        raise StructuralError("symplectic form needs even d")
    J = np.zeros((d, d))
    for k in range(0, d, 2):
        J[k, k + 1] = -1.0
        J[k + 1, k] = 1.0
    return J


def identity(spec: GroupSpec) -> GroupElement:
    return GroupElement(np.eye(spec.d), spec)


def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian with sign-corrected R diagonal."""
    a = rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def expm_taylor(a: np.ndarray, terms: int = 12, squarings: int = 4) -> np.ndarray:
    """Matrix exponential by scaling, a truncated Taylor series, and squaring."""
    scaled = a / (2.0 ** squarings)
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms + 1):
        term = term @ scaled / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def sample(spec: GroupSpec, seed: int, max_rapidity: float = 1.0) -> GroupElement:
    """Deterministic pseudo-random element of the group named by ``spec``."""
    d = spec.d
    rng = np.random.default_rng(derive_seed(seed, "group", *_family_tag(spec)))
    if spec.family == "O":
        g = haar_orthogonal(d, rng)
    elif spec.family == "SO":
        g = haar_orthogonal(d, rng)
        if np.linalg.det(g) < 0:
            g[:, 0] = -g[:, 0]
    elif spec.family == "Lorentz":
        g = _lorentz(d, rng, max_rapidity)
    else:
        s = rng.uniform(-0.5, 0.5, size=(d, d))
        s = np.triu(s) + np.triu(s, 1).T
        g = expm_taylor(symplectic_form(d) @ s)
    return GroupElement(g, spec)


def _family_tag(spec: GroupSpec) -> tuple[int, int]:
    return FAMILIES.index(spec.family), spec.d


def _lorentz(d: int, rng: np.random.Generator, max_rapidity: float) -> np.ndarray:
    def spatial() -> np.ndarray:
        r = np.eye(d)
        if d > 1:
            r[1:, 1:] = haar_orthogonal(d - 1, rng)
        return r

    phi = rng.uniform(-max_rapidity, max_rapidity)
    boost = np.eye(d)
    boost[0, 0] = boost[1, 1] = np.cosh(phi)
    boost[0, 1] = boost[1, 0] = np.sinh(phi)
    return spatial() @ boost @ spatial()


def act_input(g: GroupElement, X: np.ndarray) -> np.ndarray:
    """Diagonal action on a tuple (or batch of tuples) of shape ``(..., n, d)``."""
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != g.spec.d:
        raise StructuralError(f"vectors have length {X.shape[-1]}, group acts on R^{g.spec.d}")
    return X @ g.matrix.T


def act_vector(g: GroupElement, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != g.spec.d:
        raise StructuralError(f"vector has length {w.shape[-1]}, group acts on R^{g.spec.d}")
    return w @ g.matrix.T


def contragredient(g: GroupElement) -> np.ndarray:
    """Matrix of the dual action, ``(g^-1)^T``."""
    if np.linalg.cond(g.matrix) > 1e12:
        raise NumericError("group element is numerically singular")
    return np.linalg.inv(g.matrix).T


@dataclass(frozen=True)
class MembershipReport:
    max_violation: float
    passed: bool

    def to_json(self) -> dict:
        return {"max_violation": self.max_violation, "pass": self.passed}


def membership_violation(g: GroupElement) -> float:
    m, d = g.matrix, g.spec.d
    family = g.spec.family
    if family in ("O", "SO"):
        v = np.max(np.abs(m.T @ m - np.eye(d)))
        if family == "SO":
            v = max(v, abs(np.linalg.det(m) - 1.0))
    elif family == "Lorentz":
        eta = minkowski(d)
        v = np.max(np.abs(m.T @ eta @ m - eta))
    else:
        J = symplectic_form(d)
        v = np.max(np.abs(m.T @ J @ m - J))
    return float(v)


def verify_membership(g: GroupElement, tol: float) -> MembershipReport:
    v = membership_violation(g)
    return MembershipReport(v, v <= tol)


def random_inputs(spec: GroupSpec, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Standard normal input tuples, shape ``(n, d)`` or ``(count, n, d)``."""
    shape = (spec.n, spec.d) if count is None else (count, spec.n, spec.d)
    return rng.standard_normal(shape)


def check_inputs(spec: GroupSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-2:] != (spec.n, spec.d):
        raise StructuralError(f"expected input of shape ({spec.n}, {spec.d}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise StructuralError("input contains non-finite values")
    return X
