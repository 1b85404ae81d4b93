"""Equivariant regression on invariant features.

The predictor is ``sum_j p_j(features(X)) * basis_j(X)`` where each
``p_j`` is a polynomial of degree ``D`` in the standardized invariant
features, fitted by ridge regression.  Because the coefficients only see
invariants and the basis maps are equivariant, every fitted model is
equivariant up to rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, qr, solve_triangular

from .catalog import generators
from .groups import GroupSpec, NumericError, act_input, act_vector, check_inputs, minkowski, sample
from .malgrange import Parametrization, derive, eval_basis, eval_features
from .poly import StructuralError
from .seeding import derive_seed, rng_for

TASKS = ("weighted-gram", "cross-target", "lorentz-sum")


@dataclass
class Dataset:
    spec: GroupSpec
    X: np.ndarray  # (N, n, d)
    Y: np.ndarray  # (N, d)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d, n = self.spec.d, self.spec.n
        self.X = np.asarray(self.X, dtype=float).reshape(-1, n, d)
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1, d)
        if len(self.X) != len(self.Y):
            raise StructuralError("X and Y have different sample counts")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise StructuralError("dataset contains non-finite values")

    def __len__(self) -> int:
        return len(self.X)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "samples": [{"X": x.tolist(), "y": y.tolist()} for x, y in zip(self.X, self.Y)],
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, data) -> "Dataset":
        try:
            spec = GroupSpec.from_json(data["spec"])
            X = [s["X"] for s in data["samples"]]
            Y = [s["y"] for s in data["samples"]]
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed dataset JSON: {exc}") from exc
        return cls(spec, np.array(X, dtype=float), np.array(Y, dtype=float), dict(data.get("metadata", {})))


def ground_truth(task: str, X: np.ndarray) -> np.ndarray:
    """Noise-free target for a batch ``X`` of shape ``(N, n, d)``."""
    v1, v2 = X[:, 0], X[:, 1] if X.shape[1] > 1 else None
    if task == "weighted-gram":
        g11 = np.einsum("ni,ni->n", v1, v1)
        g12 = np.einsum("ni,ni->n", v1, v2)
        return g11[:, None] * v2 + 2.0 * g12[:, None] * v1
    if task == "cross-target":
        g12 = np.einsum("ni,ni->n", v1, v2)
        return np.cross(v1, v2) + 0.5 * g12[:, None] * v1
    if task == "lorentz-sum":
        eta = np.diag(minkowski(X.shape[2]))
        mink = np.einsum("nji,i,nji->nj", X, eta, X)
        return np.einsum("nj,nji->ni", mink, X)
    raise StructuralError(f"unknown task {task!r}; choose from {TASKS}")


def _check_task(task: str, spec: GroupSpec) -> None:
    if task == "weighted-gram":
        ok = spec.family in ("O", "SO") and spec.n >= 2
        need = "O or SO with n >= 2"
    elif task == "cross-target":
        ok = spec.family == "SO" and spec.d == 3 and spec.n >= 2
        need = "SO(3) with n >= 2"
    elif task == "lorentz-sum":
        ok = spec.family == "Lorentz"
        need = "the Lorentz group"
    else:
        raise StructuralError(f"unknown task {task!r}; choose from {TASKS}")
    if not ok:
        raise StructuralError(f"task {task} needs {need}, got {spec}")


def make_task(name: str, spec: GroupSpec, count: int, seed: int = 0, noise: float = 0.0) -> Dataset:
    """Synthetic dataset with standard normal inputs and Gaussian target noise."""
    _check_task(name, spec)
    if count < 0:
        raise StructuralError("count must be non-negative")
    X = rng_for(seed, "task-inputs").standard_normal((count, spec.n, spec.d))
    Y = ground_truth(name, X) if count else np.zeros((0, spec.d))
    if noise:
        Y = Y + noise * rng_for(seed, "task-noise").standard_normal(Y.shape)
    return Dataset(spec, X, Y, {"task": name, "seed": seed, "noise": noise})


def monomial_exponents(r: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors of all monomials in ``r`` variables of total degree <= ``degree``."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(r), total):
            e = [0] * r
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return out


def feature_monomials(Z: np.ndarray, exps: list[tuple[int, ...]]) -> np.ndarray:
    """``(N, len(exps))`` matrix of monomials of the columns of ``Z``."""
    cols = []
    for e in exps:
        col = np.ones(len(Z))
        for k, p in enumerate(e):
            for _ in range(p):
                col = col * Z[:, k]
        cols.append(col)
    return np.stack(cols, axis=1) if cols else np.zeros((len(Z), 0))


@dataclass
class EquiModel:
    param: Parametrization
    degree: int
    ridge_lambda: float
    exponents: list[tuple[int, ...]]
    mean: np.ndarray  # (r,)
    scale: np.ndarray  # (r,)
    coefficients: np.ndarray  # (s - r, len(exponents)), in standardized features

    @classmethod
    def zero(cls, param: Parametrization, degree: int = 0) -> "EquiModel":
        exps = monomial_exponents(param.r, degree)
        return cls(param, degree, 0.0, exps, np.zeros(param.r), np.ones(param.r),
                   np.zeros((len(param.basis), len(exps))))

    def design(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Monomials of standardized features ``(N, K)`` and basis values ``(N, s-r, d)``."""
        Z = (eval_features(self.param, X) - self.mean) / self.scale
        return feature_monomials(Z, self.exponents), eval_basis(self.param, X)

    def raw_coefficients(self) -> list[dict[tuple[int, ...], float]]:
        """Per basis map, coefficients over monomials of the unstandardized features."""
        out = []
        for row in self.coefficients:
            acc: dict = {}
            for c, e in zip(row, self.exponents):
                # expand prod_k ((f_k - mean_k) / scale_k)^e_k
                factors = []
                for k, p in enumerate(e):
                    factors.append([
                        (a, math.comb(p, a) * (-self.mean[k]) ** (p - a) / self.scale[k] ** p)
                        for a in range(p + 1)
                    ])
                for choice in itertools.product(*factors):
                    exps = tuple(a for a, _ in choice)
                    w = c * np.prod([w for _, w in choice])
                    acc[exps] = acc.get(exps, 0.0) + w
            out.append(acc)
        return out

    def to_json(self) -> dict:
        return {
            "spec": self.param.spec.to_json(),
            "degree": self.degree,
            "lambda": self.ridge_lambda,
            "feature_labels": [f.label for f in self.param.features],
            "basis_labels": [b.source_label for b in self.param.basis],
            "exponents": [list(e) for e in self.exponents],
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def from_json(cls, data) -> "EquiModel":
        try:
            spec = GroupSpec.from_json(data["spec"])
            param = derive(generators(spec))
            model = cls(
                param,
                int(data["degree"]),
                float(data["lambda"]),
                [tuple(int(a) for a in e) for e in data["exponents"]],
                np.array(data["mean"], dtype=float).reshape(param.r),
                np.array(data["scale"], dtype=float).reshape(param.r),
                np.array(data["coefficients"], dtype=float).reshape(len(param.basis), -1),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StructuralError(f"malformed model JSON: {exc}") from exc
        if model.coefficients.shape[1] != len(model.exponents):
            raise StructuralError("coefficient array does not match the exponent list")
        if "feature_labels" in data and list(data["feature_labels"]) != [f.label for f in param.features]:
            raise StructuralError("model feature labels disagree with the derived parametrization")
        return model


def fit(data: Dataset, degree: int = 1, ridge_lambda: float = 1e-8, param: Parametrization | None = None) -> EquiModel:
    """Ridge fit of the coefficient polynomials.

    Columns of the design matrix are (feature monomial) x (basis map)
    products, one row per sample coordinate.  ``ridge_lambda > 0`` solves
    the normal equations by Cholesky; ``ridge_lambda == 0`` uses QR and
    refuses rank-deficient designs.
    """
    if len(data) < 1:
        raise StructuralError("cannot fit an empty dataset")
    if degree < 0 or ridge_lambda < 0:
        raise StructuralError("degree and ridge_lambda must be non-negative")
    param = param or derive(generators(data.spec))
    F = eval_features(param, data.X)
    mean = F.mean(axis=0)
    scale = F.std(axis=0)
    scale[scale == 0] = 1.0
    model = EquiModel(param, degree, float(ridge_lambda), monomial_exponents(param.r, degree),
                      mean, scale, np.zeros((0, 0)))
    M, B = model.design(data.X)
    N, K = M.shape
    nb = B.shape[1]
    # A[(sample, coord), (basis, monomial)] = M[sample, monomial] * B[sample, basis, coord]
    A = np.einsum("nk,nbi->nibk", M, B).reshape(N * data.spec.d, nb * K)
    y = data.Y.reshape(-1)
    if A.shape[1] == 0:
        model.coefficients = np.zeros((nb, K))
        return model
    if ridge_lambda > 0:
        G = A.T @ A + ridge_lambda * np.eye(A.shape[1])
        coef = cho_solve(cho_factor(G), A.T @ y)
    else:
        Q, R = qr(A, mode="economic")
        diag = np.abs(np.diag(R))
        if len(diag) < A.shape[1] or diag.min() <= 1e-12 * max(diag.max(), 1.0):
            raise NumericError("design matrix is rank deficient; use ridge_lambda > 0")
        coef = solve_triangular(R, Q.T @ y)
    model.coefficients = coef.reshape(nb, K)
    return model


def predict(model: EquiModel, X) -> np.ndarray:
    """Prediction for one tuple ``(n, d)`` or a batch ``(N, n, d)``."""
    X = check_inputs(model.param.spec, X)
    single = X.ndim == 2
    Xb = X[None] if single else X
    M, B = model.design(Xb)
    P = M @ model.coefficients.T  # (N, s-r): p_j at each sample
    out = np.einsum("nb,nbi->ni", P, B)
    return out[0] if single else out


@dataclass(frozen=True)
class Evaluation:
    mse: float
    max_err: float
    equivariance_violation: float

    def to_json(self) -> dict:
        return {"mse": self.mse, "max_err": self.max_err, "equivariance_violation": self.equivariance_violation}


def equivariance_violation(model: EquiModel, X: np.ndarray, group_samples: int = 50, seed: int = 0) -> float:
    """``max ||predict(gX) - g predict(X)|| / (1 + ||predict(X)||)`` over sampled g."""
    base = predict(model, X)
    denom = 1.0 + np.linalg.norm(base, axis=-1)
    worst = 0.0
    for t in range(group_samples):
        g = sample(model.param.spec, derive_seed(seed, "evaluate-group", t))
        diff = predict(model, act_input(g, X)) - act_vector(g, base)
        worst = max(worst, float(np.max(np.linalg.norm(diff, axis=-1) / denom)))
    return worst


def evaluate(model: EquiModel, data: Dataset, group_samples: int = 50, points: int = 20, seed: int = 0) -> Evaluation:
    """Per-coordinate MSE, worst per-sample error norm, and equivariance defect."""
    if len(data) == 0:
        raise StructuralError("cannot evaluate on an empty dataset")
    pred = predict(model, data.X)
    err = pred - data.Y
    mse = float(np.mean(err ** 2))
    max_err = float(np.max(np.linalg.norm(err, axis=-1)))
    viol = equivariance_violation(model, data.X[:points], group_samples, seed)
    return Evaluation(mse, max_err, viol)
