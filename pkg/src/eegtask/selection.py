"""Recursive feature elimination driven by linear-SVM weights.

Each iteration trains one-vs-rest linear SVMs on the surviving features,
scores every feature by the sum of squared weights across the three
binary models, and removes the lowest-scoring ceil(drop_fraction * n)
features (at least one) until exactly target_k survive. Stability comes
from repeating the whole procedure on bootstrap resamples and voting.

The inner linear SVM is the L2-regularized squared-hinge primal solved
by a damped Newton method; the weight ranking matches the dual solution
and each fit costs a handful of Hessian solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels
from .seeding import derive_rng

N_CLASSES = 3


@dataclass
class RfeConfig:
    target_k: int = 5
    drop_fraction: float = 0.1
    n_repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.target_k < 1:
            raise ValueError("target_k must be >= 1")
        if not 0.0 < self.drop_fraction < 1.0:
            raise ValueError("drop_fraction must lie in (0, 1)")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")


@dataclass
class SelectionResult:
    ranked: list  # (feature index, frequency over repeats), most frequent first
    selected: list  # top target_k feature indices


class _LinearHinge:
    """Squared-hinge linear SVM primal with cached feature Gram.

    minimize 0.5 ||w||^2 + c * sum_i max(0, 1 - y_i (x_i.w + b))^2
    """

    def __init__(self, x: np.ndarray, c: float = 1.0):
        self.x = x
        self.c = c
        self.gram = x.T @ x
        self.col_sum = x.sum(axis=0)

    def drop_columns(self, keep: np.ndarray) -> "_LinearHinge":
        sub = _LinearHinge.__new__(_LinearHinge)
        sub.x = self.x[:, keep]
        sub.c = self.c
        sub.gram = self.gram[np.ix_(keep, keep)]
        sub.col_sum = self.col_sum[keep]
        return sub

    def _value_grad(self, theta: np.ndarray, ypm: np.ndarray):
        x = self.x
        f = theta.shape[0] - 1
        w, b = theta[:f], theta[f]
        margin = 1.0 - ypm * (x @ w + b)
        active = margin > 0.0
        dfv = np.where(active, -2.0 * self.c * ypm * margin, 0.0)
        value = 0.5 * (w @ w) + self.c * np.sum(np.where(active, margin * margin, 0.0))
        grad = np.concatenate([w + x.T @ dfv, [dfv.sum()]])
        return value, grad, active

    def fit(self, ypm: np.ndarray, warm=None, max_newton: int = 25, tol: float = 1e-4):
        x, c = self.x, self.c
        n, f = x.shape
        theta = np.zeros(f + 1) if warm is None else warm.copy()
        value, grad, active = self._value_grad(theta, ypm)
        for _ in range(max_newton):
            if np.linalg.norm(grad) <= tol * max(1.0, np.linalg.norm(theta)):
                break
            n_active = int(active.sum())
            hess = np.empty((f + 1, f + 1))
            # Hessian of the data term uses only active rows; assemble from
            # whichever of the active/inactive sets is smaller.
            if n - n_active <= n_active:
                xi = x[~active]
                hess[:f, :f] = 2.0 * c * (self.gram - xi.T @ xi)
                cross = 2.0 * c * (self.col_sum - xi.sum(axis=0))
            else:
                xa = x[active]
                hess[:f, :f] = 2.0 * c * (xa.T @ xa)
                cross = 2.0 * c * xa.sum(axis=0)
            diag = np.arange(f)
            hess[diag, diag] += 1.0
            hess[:f, f] = cross
            hess[f, :f] = cross
            hess[f, f] = 2.0 * c * n_active + 1e-10
            try:
                direction = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                direction = -grad
            descent = grad @ direction
            step = 1.0
            accepted = False
            for _ in range(30):
                cand = theta + step * direction
                cv, cg, ca = self._value_grad(cand, ypm)
                if cv <= value + 1e-4 * step * descent:
                    theta, value, grad, active = cand, cv, cg, ca
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
        return theta


def _ovr_scores(solver: _LinearHinge, y: np.ndarray, warm: dict):
    """Sum of squared one-vs-rest weights per surviving feature."""
    n_features = solver.x.shape[1]
    scores = np.zeros(n_features)
    for cls in range(N_CLASSES):
        ypm = np.where(y == cls, 1.0, -1.0)
        theta = solver.fit(ypm, warm=warm.get(cls))
        warm[cls] = theta
        scores += theta[:-1] ** 2
    return scores


def rfe_once(x: np.ndarray, y: np.ndarray, cfg: RfeConfig, seed: int = 0) -> np.ndarray:
    """One elimination run; returns the sorted indices of the target_k survivors.

    Features are standardized on the given data; zero-variance columns get
    score 0 and are eliminated first. The solver is deterministic, so the
    seed only labels the run.
    """
    del seed  # randomness lives in rfe_stable's resampling; fits are deterministic
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("need at least two classes for elimination")
    n, n_features = x.shape
    if not 1 <= cfg.target_k < n_features:
        raise ValueError(f"target_k must lie in [1, {n_features}), got {cfg.target_k}")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    zero_var = std == 0.0
    xs = (x - mean) / np.where(zero_var, 1.0, std)

    solver = _LinearHinge(xs)
    surviving = np.arange(n_features)
    warm: dict = {}
    while len(surviving) > cfg.target_k:
        scores = _ovr_scores(solver, y, warm)
        scores[zero_var[surviving]] = 0.0
        n_drop = min(
            max(1, int(np.ceil(cfg.drop_fraction * len(surviving)))),
            len(surviving) - cfg.target_k,
        )
        order = np.argsort(scores, kind="stable")  # ties drop the lower index first
        keep = np.ones(len(surviving), dtype=bool)
        keep[order[:n_drop]] = False
        for cls in list(warm):
            theta = warm[cls]
            warm[cls] = np.concatenate([theta[:-1][keep], theta[-1:]])
        surviving = surviving[keep]
        solver = solver.drop_columns(keep)
    return surviving


def bootstrap_indices(n: int, seed: int, repeat: int) -> np.ndarray:
    """The resample used by repeat `repeat` of a run seeded with `seed`."""
    return derive_rng(seed, "rfe-bootstrap", repeat).integers(0, n, size=n)


def rfe_stable(x: np.ndarray, y: np.ndarray, cfg: RfeConfig) -> SelectionResult:
    """Run rfe_once on n_repeats bootstrap resamples and vote by frequency.

    selected holds the target_k most frequently surviving features, ties
    broken toward the lower feature index.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    n, n_features = x.shape
    freq = np.zeros(n_features, dtype=np.int64)
    for rep in range(cfg.n_repeats):
        idx = bootstrap_indices(n, cfg.seed, rep)
        survivors = rfe_once(x[idx], y[idx], cfg, seed=cfg.seed + rep)
        freq[survivors] += 1
    order = sorted(range(n_features), key=lambda j: (-freq[j], j))
    ranked = [(j, int(freq[j])) for j in order]
    return SelectionResult(ranked=ranked, selected=order[: cfg.target_k])
