"""Class balancing, data-splitting schemes, expert/novice labeling, evaluation.

Three splitting schemes are supported:

* subject independent: pool everything, balance, random stratified
  66/33 split, re-randomized on every repeat;
* subject dependent (leave-one-subject-out): one fold per subject, folds
  fixed, repeats only re-seed model training;
* expertise groups: the cohort is partitioned into experts and novices
  by skill-test scores and each group is evaluated subject-independently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyClass, SingleSubject, TooFewEpochs
from .formats import EvalReport
from .nn.training import TrainConfig, evaluate_network, fit_network, stratified_split
from .seeding import derive_rng, derive_seed
from .svm import KernelSpec, predict, train_multiclass

N_CLASSES = 3


@dataclass
class SplitPlan:
    scheme: str  # SubjectIndependent | SubjectDependent | ExpertiseGroup
    folds: list  # [(train indices, test indices)]

    def __post_init__(self):
        for train, test in self.folds:
            if np.intersect1d(train, test).size:
                raise ValueError("train and test indices overlap")


@dataclass
class ExpertiseRule:
    mot_threshold: float
    vs_threshold: float

    def is_expert(self, mot: float, vs: float) -> bool:
        return mot >= self.mot_threshold and vs >= self.vs_threshold


def median_rule(subjects) -> ExpertiseRule:
    """Thresholds at the cohort medians of both skill tests."""
    mot = np.median([s.mot_score for s in subjects])
    vs = np.median([s.vs_score for s in subjects])
    return ExpertiseRule(mot_threshold=float(mot), vs_threshold=float(vs))


def label_expertise(subjects, rule: ExpertiseRule | None = None):
    """Partition subjects into (experts, novices) by id.

    A subject is an expert iff it scores at or above threshold on BOTH
    tests; thresholds default to the cohort medians.
    """
    subjects = list(subjects)
    if rule is None:
        rule = median_rule(subjects)
    experts, novices = [], []
    for s in subjects:
        (experts if rule.is_expert(s.mot_score, s.vs_score) else novices).append(s.subject_id)
    return experts, novices


def balance_indices(y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Undersample without replacement to the minority class count.

    Returns kept indices in ascending order, so relative epoch order is
    preserved.
    """
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts == 0) or len(classes) == 0:
        raise EmptyClass("every present class needs at least one epoch")
    n_min = counts.min()
    kept = []
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        kept.extend(rng.choice(idx, size=n_min, replace=False).tolist())
    return np.array(sorted(kept), dtype=np.int64)


def balance_classes(epochs, seed: int):
    """Epoch-list version of balance_indices."""
    y = np.array([ep.difficulty for ep in epochs])
    kept = balance_indices(y, derive_rng(seed, "balance"))
    return [epochs[i] for i in kept]


def split_subject_independent(y: np.ndarray, rng: np.random.Generator,
                              train_fraction: float = 2.0 / 3.0) -> SplitPlan:
    """Single stratified fold: floor(train_fraction * n_c) of each class trains."""
    y = np.asarray(y)
    train, test = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < 2:
            raise TooFewEpochs(f"class {cls} has {len(idx)} epoch(s); need at least 2")
        perm = rng.permutation(idx)
        n_train = int(len(idx) * train_fraction)
        train.extend(perm[:n_train].tolist())
        test.extend(perm[n_train:].tolist())
    return SplitPlan(scheme="SubjectIndependent",
                     folds=[(np.array(sorted(train)), np.array(sorted(test)))])


def split_loso(subjects: np.ndarray, y: np.ndarray, seed: int = 0) -> SplitPlan:
    """One fold per subject; the training side of each fold is class-balanced."""
    subjects = np.asarray(subjects)
    y = np.asarray(y)
    unique = sorted(set(subjects.tolist()))
    if len(unique) < 2:
        raise SingleSubject("leave-one-subject-out needs at least two subjects")
    folds = []
    for k, held_out in enumerate(unique):
        test = np.flatnonzero(subjects == held_out)
        train_all = np.flatnonzero(subjects != held_out)
        kept = balance_indices(y[train_all], derive_rng(seed, "loso-balance", k))
        folds.append((train_all[kept], test))
    return SplitPlan(scheme="SubjectDependent", folds=folds)


class SvmClassifier:
    """Adapter: RBF/linear SVM trained by SMO; deterministic, so fit ignores the seed."""

    name = "SVM"

    def __init__(self, kernel: KernelSpec = KernelSpec(), c: float = 1.0,
                 tol: float = 1e-3, max_passes: int = 1000):
        self.kernel = kernel
        self.c = c
        self.tol = tol
        self.max_passes = max_passes
        self.model = None

    def fit(self, x, y, seed: int = 0):
        del seed
        self.model = train_multiclass(x, y, kernel=self.kernel, c=self.c,
                                      tol=self.tol, max_passes=self.max_passes)
        return self

    def predict(self, x):
        return predict(self.model, x)[0]


class CnnClassifier:
    """Adapter: raw-epoch network; a validation split for early stopping is carved
    out of each training fold."""

    name = "CNN"

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.model = None

    def fit(self, x, y, seed: int = 0):
        cfg = replace(self.cfg, seed=seed)
        rest, hold = stratified_split(np.asarray(y), cfg.validation_fraction,
                                      derive_rng(seed, "cnn-val"))
        self.model = fit_network(x[rest], np.asarray(y)[rest], x[hold],
                                 np.asarray(y)[hold], cfg)
        return self

    def predict(self, x):
        return evaluate_network(self.model.net, x)


def evaluate(classifier, x: np.ndarray, y: np.ndarray, subjects: np.ndarray,
             scheme: str, n_repeats: int = 10, seed: int = 0,
             train_fraction: float = 2.0 / 3.0,
             selected_features=None) -> EvalReport:
    """Repeated train/test evaluation under one splitting scheme.

    Subject-independent (and expertise-group) runs re-balance and
    re-split on every repeat; leave-one-subject-out keeps its folds fixed
    and varies only the model seed. Accuracy is pooled over folds within
    a repeat; the reported std is the population std over repeats.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    subjects = np.asarray(subjects)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    accuracies = []

    loso = scheme == "SubjectDependent"
    if loso:
        fixed_plan = split_loso(subjects, y, seed=derive_seed(seed, "plan"))

    for rep in range(n_repeats):
        if loso:
            plan, xb, yb = fixed_plan, x, y
        else:
            kept = balance_indices(y, derive_rng(seed, "eval-balance", rep))
            xb, yb = x[kept], y[kept]
            plan = split_subject_independent(
                yb, derive_rng(seed, "eval-split", rep), train_fraction)
        correct = 0
        total = 0
        for fold_id, (train, test) in enumerate(plan.folds):
            classifier.fit(xb[train], yb[train],
                           seed=derive_seed(seed, "model", rep, fold_id))
            pred = np.asarray(classifier.predict(xb[test]))
            truth = yb[test]
            correct += int((pred == truth).sum())
            total += len(test)
            for t, p in zip(truth, pred):
                confusion[int(t), int(p)] += 1
        accuracies.append(correct / total)

    accuracies = np.array(accuracies)
    return EvalReport(
        scheme=scheme,
        classifier=classifier.name,
        accuracy_mean=float(accuracies.mean()),
        accuracy_std=float(accuracies.std()),
        confusion=confusion,
        selected_features=list(selected_features or []),
        n_repeats=n_repeats,
    )


def epochs_to_arrays(epochs):
    """Stack epochs into (x [N, C, T] float32, y int64, subjects str array)."""
    x = np.stack([ep.samples for ep in epochs])
    y = np.array([ep.difficulty for ep in epochs], dtype=np.int64)
    subjects = np.array([ep.subject_id for ep in epochs])
    return x, y, subjects
