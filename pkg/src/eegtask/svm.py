"""Kernel SVM trained by sequential minimal optimization, one-vs-rest for 3 classes.

The solver is a simplified SMO with deterministic working-set selection:
the first index is the maximum KKT violator, the second maximizes
|E_i - E_j| among pairs that can make progress. The dual objective is
recorded once per sweep (n pair updates) and never decreases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateLabels, DimensionMismatch, IoFailure

N_CLASSES = 3


@dataclass
class KernelSpec:
    kind: str = "rbf"  # "linear" or "rbf"
    gamma: float | None = None  # rbf width; defaults to 1 / n_features

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"kernel kind must be 'linear' or 'rbf', got {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def resolve_gamma(self, n_features: int) -> float:
        return self.gamma if self.gamma is not None else 1.0 / n_features


def kernel_matrix(kernel: KernelSpec, a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    if kernel.kind == "linear":
        return a @ b.T
    sq_a = np.sum(a * a, axis=1)
    sq_b = np.sum(b * b, axis=1)
    d2 = np.maximum(sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T), 0.0)
    return np.exp(-gamma * d2)


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray  # zero-variance features carry std 1 (they standardize to 0)

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass
class SvmModel:
    """Binary SVM: standardized support vectors with signed multipliers."""

    support_vectors: np.ndarray  # standardized coordinates
    alphas: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    c: float
    gamma: float
    scaler: Scaler
    converged: bool = True
    objective: np.ndarray = field(default_factory=lambda: np.zeros(0))
    kkt: float = 0.0  # largest KKT violation at the returned iterate

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.scaler.mean.shape[0]:
            raise DimensionMismatch(
                f"expected {self.scaler.mean.shape[0]} features, got {x.shape[1]}"
            )
        xs = self.scaler.transform(x)
        if len(self.alphas) == 0:
            return np.full(len(xs), self.bias)
        k = kernel_matrix(self.kernel, xs, self.support_vectors, self.gamma)
        return k @ self.alphas + self.bias


def train_smo(x: np.ndarray, y: np.ndarray, kernel: KernelSpec = KernelSpec(),
              c: float = 1.0, tol: float = 1e-3, max_passes: int = 1000) -> SvmModel:
    """Train a binary SVM on labels in {-1, +1}.

    Features are standardized with statistics stored in the model, so
    prediction never re-derives them from test data. If the update budget
    (max_passes sweeps of n pair updates) is exhausted, or no pair can
    make progress (e.g. duplicated points with conflicting labels), the
    best iterate is returned with converged=False.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    classes = np.unique(y)
    if not np.all(np.isin(classes, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if len(classes) < 2:
        raise DegenerateLabels("training set contains a single class")
    n = len(y)
    scaler = Scaler.fit(x)
    xs = scaler.transform(x)
    gamma = kernel.resolve_gamma(x.shape[1])
    k = kernel_matrix(kernel, xs, xs, gamma)
    kd = np.diag(k).copy()

    alpha = np.zeros(n)
    b = 0.0
    errors = -y.copy()  # E_i = f(x_i) - y_i with f = 0
    idx = np.arange(n)
    objective = []
    max_updates = max_passes * n
    updates = 0
    converged = False

    def dual_objective():
        # f = K a + b and sum(a) = 0 give W = 0.5*sum(alpha) - 0.5*a.E
        a = alpha * y
        return 0.5 * alpha.sum() - 0.5 * (a @ errors)

    while updates < max_updates:
        r = y * errors  # y_i f_i - 1
        viol = np.maximum(
            np.where(alpha < c - 1e-12, -r, 0.0),
            np.where(alpha > 1e-12, r, 0.0),
        )
        i = int(np.argmax(viol))
        if viol[i] <= tol:
            converged = True
            break
        # vectorized second-choice scan over all j
        eta = kd[i] + kd - 2.0 * k[:, i]
        same = y == y[i]
        lo = np.where(same, np.maximum(0.0, alpha + alpha[i] - c), np.maximum(0.0, alpha - alpha[i]))
        hi = np.where(same, np.minimum(c, alpha + alpha[i]), np.minimum(c, c + alpha - alpha[i]))
        with np.errstate(divide="ignore", invalid="ignore"):
            aj_new = np.clip(alpha + y * (errors[i] - errors) / eta, lo, hi)
        usable = (eta > 1e-12) & (hi - lo > 1e-12) & (idx != i)
        usable &= np.abs(aj_new - alpha) > 1e-12
        if not usable.any():
            break  # the max violator cannot make progress with any partner
        gap = np.where(usable, np.abs(errors[i] - errors), -1.0)
        j = int(np.argmax(gap))

        aj = aj_new[j]
        daj = aj - alpha[j]
        ai = alpha[i] + y[i] * y[j] * (alpha[j] - aj)
        dai = ai - alpha[i]
        b1 = b - errors[i] - y[i] * dai * k[i, i] - y[j] * daj * k[i, j]
        b2 = b - errors[j] - y[i] * dai * k[i, j] - y[j] * daj * k[j, j]
        if 1e-12 < ai < c - 1e-12:
            nb = b1
        elif 1e-12 < aj < c - 1e-12:
            nb = b2
        else:
            nb = 0.5 * (b1 + b2)
        errors += y[i] * dai * k[:, i] + y[j] * daj * k[:, j] + (nb - b)
        alpha[i] = ai
        alpha[j] = aj
        b = nb
        updates += 1
        if updates % n == 0:
            objective.append(dual_objective())

    objective.append(dual_objective())
    r = y * errors
    final_viol = np.maximum(
        np.where(alpha < c - 1e-12, np.maximum(0.0, -r), 0.0),
        np.where(alpha > 1e-12, np.maximum(0.0, r), 0.0),
    ).max()
    sv = alpha > 1e-12
    return SvmModel(
        support_vectors=xs[sv].copy(),
        alphas=(alpha * y)[sv],
        bias=b,
        kernel=kernel,
        c=c,
        gamma=gamma,
        scaler=scaler,
        converged=converged,
        objective=np.array(objective),
        kkt=float(final_viol),
    )


@dataclass
class MulticlassSvm:
    """Three one-vs-rest binary models, one per difficulty class."""

    models: list

    def __post_init__(self):
        if len(self.models) != N_CLASSES:
            raise ValueError(f"expected {N_CLASSES} binary models")

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.models)

    def decision_values(self, x: np.ndarray) -> np.ndarray:
        return np.stack([m.decision_function(x) for m in self.models], axis=1)


def train_multiclass(x: np.ndarray, y: np.ndarray, kernel: KernelSpec = KernelSpec(),
                     c: float = 1.0, tol: float = 1e-3, max_passes: int = 1000) -> MulticlassSvm:
    y = np.asarray(y)
    present = np.unique(y)
    if len(present) < 2:
        raise DegenerateLabels("need at least two classes to train")
    if not np.all(np.isin(present, np.arange(N_CLASSES))):
        raise ValueError("labels must be 0, 1 or 2")
    models = []
    for cls in range(N_CLASSES):
        ypm = np.where(y == cls, 1.0, -1.0)
        if len(np.unique(ypm)) < 2:
            raise DegenerateLabels(f"class {cls} is absent or covers all examples")
        models.append(train_smo(x, ypm, kernel=kernel, c=c, tol=tol, max_passes=max_passes))
    return MulticlassSvm(models=models)


def predict(model: MulticlassSvm, x: np.ndarray):
    """Predicted labels and per-class decision values; ties go to the lowest class."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    values = model.decision_values(x)
    labels = values.argmax(axis=1)
    return labels, values


def save_multiclass(model: MulticlassSvm, path) -> None:
    payload = []
    for m in model.models:
        payload.append({
            "kernel": m.kernel.kind,
            "gamma": m.gamma,
            "c": m.c,
            "bias": m.bias,
            "converged": bool(m.converged),
            "scaler_mean": m.scaler.mean.tolist(),
            "scaler_std": m.scaler.std.tolist(),
            "support_vectors": m.support_vectors.tolist(),
            "alphas": m.alphas.tolist(),
        })
    try:
        Path(path).write_text(json.dumps({"models": payload}, indent=1) + "\n")
    except OSError as exc:
        raise IoFailure(f"failed writing model to {path}: {exc}") from exc


def load_multiclass(path) -> MulticlassSvm:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(f"failed reading model {path}: {exc}") from exc
    models = []
    for m in payload["models"]:
        n_features = len(m["scaler_mean"])
        models.append(SvmModel(
            support_vectors=np.array(m["support_vectors"], dtype=np.float64).reshape(-1, n_features),
            alphas=np.array(m["alphas"], dtype=np.float64),
            bias=float(m["bias"]),
            kernel=KernelSpec(kind=m["kernel"], gamma=m["gamma"]),
            c=float(m["c"]),
            gamma=float(m["gamma"]),
            scaler=Scaler(mean=np.array(m["scaler_mean"]), std=np.array(m["scaler_std"])),
            converged=bool(m["converged"]),
        ))
    return MulticlassSvm(models=models)
