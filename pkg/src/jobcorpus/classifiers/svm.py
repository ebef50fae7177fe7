"""Kernel SVM trained by sequential minimal optimization.

The binary trainer maximizes the standard dual with box constraint 0 <= a <= C
and equality constraint sum(a * y) = 0, picking working pairs the usual way:
an outer sweep over KKT violators (all points alternating with the non-bound
subset) and a second choice maximizing the error gap.  The Gaussian kernel is
parameterized as K(x, z) = exp(-gamma * ||x - z||^2).

Multiclass is one-vs-rest over category codes sorted ascending; prediction
takes the argmax of raw decision values, so ties fall to the lowest code.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DomainError, TrainingError
from ..taxonomy import CategoryCode
from .features import FeatureVector, design_matrix


def rbf_kernel(x: FeatureVector, z: FeatureVector, gamma: float) -> float:
    """exp(-gamma * ||x - z||^2) over sparse vectors; K(x, x) is exactly 1."""
    if gamma <= 0.0:
        raise DomainError(f"gamma must be > 0, got {gamma}")
    sq = x.sq_norm() + z.sq_norm() - 2.0 * x.dot(z)
    if sq < 0.0:  # rounding in the expansion; distances cannot be negative
        sq = 0.0
    return math.exp(-gamma * sq)


def kernel_matrix(X: np.ndarray, gamma: float, Z: np.ndarray | None = None) -> np.ndarray:
    """Dense Gaussian kernel matrix between rows of X and Z (Z defaults to X)."""
    if Z is None:
        Z = X
    xn = np.einsum("ij,ij->i", X, X)
    zn = np.einsum("ij,ij->i", Z, Z)
    sq = xn[:, None] + zn[None, :] - 2.0 * (X @ Z.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class SvmBinaryModel:
    """Support vectors with multipliers; decision f(x) = sum a*y*K(x, sv) + b."""

    support_vectors: list[FeatureVector]
    alphas: np.ndarray
    labels: np.ndarray  # +1 / -1 per support vector
    bias: float
    gamma: float
    c: float

    def decision(self, x: FeatureVector) -> float:
        total = self.bias
        for sv, alpha, y in zip(self.support_vectors, self.alphas, self.labels):
            total += alpha * y * rbf_kernel(x, sv, self.gamma)
        return float(total)

    def decision_batch(self, X: np.ndarray) -> np.ndarray:
        if not self.support_vectors:
            return np.full(X.shape[0], self.bias)
        dim = X.shape[1]
        SV = design_matrix(self.support_vectors, dim)
        K = kernel_matrix(X, self.gamma, SV)
        return K @ (self.alphas * self.labels) + self.bias

    def predict(self, x: FeatureVector) -> int:
        return 1 if self.decision(x) >= 0.0 else -1


class _Smo:
    """One SMO solve over a precomputed kernel matrix."""

    def __init__(self, K: np.ndarray, y: np.ndarray, c: float, tol: float, max_passes: int):
        self.K = K
        self.y = y.astype(np.float64)
        self.c = c
        self.tol = tol
        self.max_passes = max_passes
        self.n = len(y)
        self.alphas = np.zeros(self.n)
        self.b = 0.0
        # f(x) starts at 0 everywhere, so the error cache starts at -y
        self.errors = -self.y.copy()
        self.eps = max(1e-15, tol * 1e-2)

    def solve(self) -> tuple[np.ndarray, float]:
        examine_all = True
        sweeps = 0
        sweep_cap = max(1000, 50 * self.max_passes * max(self.n, 1))
        while True:
            sweeps += 1
            if sweeps > sweep_cap:
                raise TrainingError(f"working-set loop made no progress after {sweeps} sweeps")
            changed = 0
            if examine_all:
                for i in range(self.n):
                    changed += self._examine(i)
                if changed == 0:
                    # A deterministic full sweep with no update would repeat
                    # identically, so one clean sweep certifies max_passes of them.
                    break
                examine_all = False
            else:
                nonbound = np.nonzero((self.alphas > 0.0) & (self.alphas < self.c))[0]
                for i in nonbound:
                    changed += self._examine(int(i))
                if changed == 0:
                    examine_all = True
        return self.alphas, self.b

    def _examine(self, i2: int) -> int:
        y2 = self.y[i2]
        a2 = self.alphas[i2]
        e2 = self.errors[i2]
        r2 = e2 * y2
        if not ((r2 < -self.tol and a2 < self.c) or (r2 > self.tol and a2 > 0.0)):
            return 0
        nonbound = np.nonzero((self.alphas > 0.0) & (self.alphas < self.c))[0]
        if len(nonbound) > 1:
            gaps = np.abs(self.errors[nonbound] - e2)
            i1 = int(nonbound[int(np.argmax(gaps))])
            if self._step(i1, i2):
                return 1
        for i1 in self._rotated(nonbound, i2):
            if self._step(int(i1), i2):
                return 1
        for i1 in self._rotated(np.arange(self.n), i2):
            if self._step(int(i1), i2):
                return 1
        return 0

    @staticmethod
    def _rotated(indices: np.ndarray, start_after: int) -> np.ndarray:
        if not len(indices):
            return indices
        cut = int(np.searchsorted(indices, start_after + 1))
        return np.concatenate([indices[cut:], indices[:cut]])

    def _step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alphas[i1], self.alphas[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1, e2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        if s < 0:
            low = max(0.0, a2 - a1)
            high = min(self.c, self.c + a2 - a1)
        else:
            low = max(0.0, a1 + a2 - self.c)
            high = min(self.c, a1 + a2)
        if high - low < 1e-15:
            return False
        k11 = self.K[i1, i1]
        k12 = self.K[i1, i2]
        k22 = self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(high, max(low, a2_new))
        else:
            # Degenerate curvature: compare the dual objective at both clip ends.
            # With f(x) = sum(a*y*K) + b and E = f - y, the bias enters negated.
            f1 = y1 * (e1 - self.b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (e2 - self.b) - s * a1 * k12 - a2 * k22
            l1 = a1 + s * (a2 - low)
            h1 = a1 + s * (a2 - high)
            obj_low = l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22 + s * low * l1 * k12
            obj_high = h1 * f1 + high * f2 + 0.5 * h1 * h1 * k11 + 0.5 * high * high * k22 + s * high * h1 * k12
            if obj_low < obj_high - self.eps:
                a2_new = low
            elif obj_low > obj_high + self.eps:
                a2_new = high
            else:
                return False
        if abs(a2_new - a2) < self.eps * (a2_new + a2 + self.eps):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        if a1_new < 0.0:
            a1_new = 0.0
        elif a1_new > self.c:
            a1_new = self.c
        b_old = self.b
        b1 = self.b - e1 - y1 * (a1_new - a1) * k11 - y2 * (a2_new - a2) * k12
        b2 = self.b - e2 - y1 * (a1_new - a1) * k12 - y2 * (a2_new - a2) * k22
        if 0.0 < a1_new < self.c:
            self.b = b1
        elif 0.0 < a2_new < self.c:
            self.b = b2
        else:
            self.b = 0.5 * (b1 + b2)
        self.alphas[i1] = a1_new
        self.alphas[i2] = a2_new
        self.errors += (
            y1 * (a1_new - a1) * self.K[:, i1]
            + y2 * (a2_new - a2) * self.K[:, i2]
            + (self.b - b_old)
        )
        return True


def train_svm_binary(
    data: Sequence[tuple[FeatureVector, int]],
    gamma: float,
    c: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 10,
    kernel: np.ndarray | None = None,
) -> SvmBinaryModel:
    """Train one binary classifier; labels must be +1/-1 with both present."""
    if gamma <= 0.0:
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    if c <= 0.0:
        raise ConfigError(f"C must be > 0, got {c}")
    if tol <= 0.0:
        raise ConfigError(f"tol must be > 0, got {tol}")
    vectors = [fv for fv, _ in data]
    y = np.array([label for _, label in data], dtype=np.float64)
    if not len(y):
        raise TrainingError("no training data")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise TrainingError("binary training needs both classes present")
    if set(np.unique(y)) - {1.0, -1.0}:
        raise TrainingError("binary labels must be +1 or -1")
    if kernel is None:
        dim = 1 + max((int(fv.cols[-1]) for fv in vectors if fv.nnz), default=0)
        X = design_matrix(vectors, dim)
        kernel = kernel_matrix(X, gamma)
    alphas, bias = _Smo(kernel, y, c, tol, max_passes).solve()
    # Snap round-off dust so stored multipliers satisfy 0 < a <= C.
    alphas = alphas.copy()
    alphas[alphas < 1e-10] = 0.0
    alphas[alphas > c - 1e-10] = c
    keep = np.nonzero(alphas > 0.0)[0]
    return SvmBinaryModel(
        support_vectors=[vectors[i] for i in keep],
        alphas=alphas[keep],
        labels=y[keep].astype(np.int64),
        bias=float(bias),
        gamma=gamma,
        c=c,
    )


def dual_objective(model: SvmBinaryModel) -> float:
    """Value of the dual at the trained multipliers (zero alphas drop out)."""
    a = model.alphas
    y = model.labels.astype(np.float64)
    if not len(a):
        return 0.0
    dim = 1 + max((int(fv.cols[-1]) for fv in model.support_vectors if fv.nnz), default=0)
    SV = design_matrix(model.support_vectors, dim)
    K = kernel_matrix(SV, model.gamma)
    return float(a.sum() - 0.5 * (a * y) @ K @ (a * y))


def kkt_max_violation(
    model: SvmBinaryModel, data: Sequence[tuple[FeatureVector, int]]
) -> float:
    """Largest violation of the stationarity conditions over the training set.

    For a = 0: y*f >= 1; for a = C: y*f <= 1; for interior a: y*f = 1.
    """
    by_key = {}
    for sv, alpha in zip(model.support_vectors, model.alphas):
        by_key[id(sv)] = alpha
    worst = 0.0
    for fv, label in data:
        margin = label * model.decision(fv)
        alpha = by_key.get(id(fv), 0.0)
        if alpha <= 0.0:
            worst = max(worst, 1.0 - margin)
        elif alpha >= model.c:
            worst = max(worst, margin - 1.0)
        else:
            worst = max(worst, abs(margin - 1.0))
    return worst


@dataclass
class SvmModel:
    classes: tuple[CategoryCode, ...]
    binaries: tuple[SvmBinaryModel, ...]
    gamma: float
    c: float

    def decision_values(self, x: FeatureVector) -> np.ndarray:
        return np.array([b.decision(x) for b in self.binaries])

    def decision_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([b.decision_batch(X) for b in self.binaries])


def _degenerate_binary(gamma: float, c: float) -> SvmBinaryModel:
    return SvmBinaryModel(
        support_vectors=[],
        alphas=np.zeros(0),
        labels=np.zeros(0, dtype=np.int64),
        bias=1.0,
        gamma=gamma,
        c=c,
    )


def train_svm(
    data: Sequence[tuple[FeatureVector, CategoryCode]],
    gamma: float,
    c: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 10,
    dim: int | None = None,
    n_jobs: int = 1,
) -> SvmModel:
    """One-vs-rest training; the kernel matrix is shared across all binaries."""
    if not data:
        raise TrainingError("no training data")
    classes = tuple(sorted({code for _, code in data}))
    vectors = [fv for fv, _ in data]
    if dim is None:
        dim = 1 + max((int(fv.cols[-1]) for fv in vectors if fv.nnz), default=0)
    if len(classes) == 1:
        return SvmModel(
            classes=classes, binaries=(_degenerate_binary(gamma, c),), gamma=gamma, c=c
        )
    X = design_matrix(vectors, dim)
    K = kernel_matrix(X, gamma)

    def train_one(cls: CategoryCode) -> SvmBinaryModel:
        labeled = [(fv, 1 if code == cls else -1) for (fv, code) in data]
        return train_svm_binary(labeled, gamma, c, tol, max_passes, kernel=K)

    if n_jobs > 1 and len(classes) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            binaries = tuple(pool.map(train_one, classes))
    else:
        binaries = tuple(train_one(cls) for cls in classes)
    return SvmModel(classes=classes, binaries=binaries, gamma=gamma, c=c)


def svm_predict(model: SvmModel, x: FeatureVector) -> CategoryCode:
    """Argmax of raw decision values; ties resolve to the lowest code."""
    if len(model.classes) == 1:
        return model.classes[0]
    values = model.decision_values(x)
    return model.classes[int(np.argmax(values))]


def svm_predict_batch(model: SvmModel, X: np.ndarray) -> list[CategoryCode]:
    if len(model.classes) == 1:
        return [model.classes[0]] * X.shape[0]
    values = model.decision_matrix(X)
    return [model.classes[int(i)] for i in np.argmax(values, axis=1)]
