"""Linear soft-margin SVM trained by sequential minimal optimization.

Each binary problem solves the dual

    max  sum(a) - 1/2 a^T Q a    s.t.  0 <= a_i <= C,  sum(a_i y_i) = 0

with ``Q_ij = y_i y_j <x_i, x_j>``. The working pair is the maximal
violating index ``i`` plus the partner ``j`` with the largest second-order
objective gain; the loop stops once the KKT violation ``m - M`` falls to
``tol``. Multi-class problems are split one-vs-one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from gaitline.classify.dataset import Dataset, majority_vote
from gaitline.errors import ConvergenceError, DataError

TAU = 1e-12
# precompute the Gram matrix below this many rows, compute columns lazily above
_GRAM_LIMIT = 4000


@dataclass(frozen=True, eq=False)
class BinarySvm:
    """Separating hyperplane for the pair (``positive``, ``negative``).

    ``w . x + b >= 0`` votes for ``positive``, the lower class id. The
    solver diagnostics (``alpha``, ``y``, ``objective_history``) are kept
    after training but are not serialized.
    """

    positive: int
    negative: int
    w: np.ndarray
    b: float
    C: float
    alpha: np.ndarray | None = None
    y: np.ndarray | None = None
    objective_history: tuple[float, ...] = ()
    n_iter: int = 0
    gap: float = 0.0

    def decision(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.w + self.b

    def to_dict(self) -> dict:
        return {
            "pair": [self.positive, self.negative],
            "w": self.w.tolist(),
            "b": self.b,
            "C": self.C,
        }

    @classmethod
    def from_dict(cls, d: dict) -> BinarySvm:
        return cls(d["pair"][0], d["pair"][1], np.array(d["w"], dtype=np.float64), float(d["b"]), float(d["C"]))


@dataclass(frozen=True, eq=False)
class SvmModel:
    classes: tuple[str, ...]
    pairs: tuple[BinarySvm, ...] = field(default_factory=tuple)

    kind = "svm"

    @property
    def n_features(self) -> int:
        return int(self.pairs[0].w.shape[0])

    def votes(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {x.shape[1]}")
        tally = np.zeros((x.shape[0], len(self.classes)), dtype=np.int64)
        rows = np.arange(x.shape[0])
        for m in self.pairs:
            winner = np.where(m.decision(x) >= 0.0, m.positive, m.negative)
            np.add.at(tally, (rows, winner), 1)
        return tally

    def predict(self, x) -> np.ndarray:
        return majority_vote(self.votes(x))

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "pairs": [m.to_dict() for m in self.pairs]}

    @classmethod
    def from_dict(cls, d: dict) -> SvmModel:
        return cls(tuple(d["classes"]), tuple(BinarySvm.from_dict(p) for p in d["pairs"]))


def dual_objective(alpha: np.ndarray, y: np.ndarray, x: np.ndarray) -> float:
    """``sum(a) - 1/2 |sum(a_i y_i x_i)|^2`` evaluated directly."""
    v = (alpha * y) @ x
    return float(alpha.sum() - 0.5 * v @ v)


@njit(cache=True)
def _column(x, gram, i, out):
    if gram.shape[0] > 0:
        out[:] = gram[i]  # symmetric, rows are contiguous
    else:
        n, d = x.shape
        for t in range(n):
            acc = 0.0
            for k in range(d):
                acc += x[t, k] * x[i, k]
            out[t] = acc


@njit(cache=True)
def _smo_kernel(x, gram, y, diag, C, tol, max_iter, history):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - sum(a)
    k_i = np.empty(n)
    k_j = np.empty(n)
    n_hist = 1
    history[0] = 0.0
    it = 0
    gap = 0.0
    converged = False
    while True:
        # i: maximal violator in I_up
        g_max = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v > g_max:
                    g_max = v
                    i = t
        g_min = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * grad[t]
                if v < g_min:
                    g_min = v
        if i < 0 or g_min == np.inf:
            gap = 0.0
            converged = True
            break
        gap = g_max - g_min
        if gap <= tol:
            converged = True
            break
        if it >= max_iter:
            break

        # j: largest second-order decrease among I_low violators
        _column(x, gram, i, k_i)
        j = -1
        best = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                diff = g_max + y[t] * grad[t]
                if diff > 0:
                    quad = diag[i] + diag[t] - 2.0 * k_i[t]
                    if quad <= 0:
                        quad = TAU
                    obj = -(diff * diff) / quad
                    if obj < best:
                        best = obj
                        j = t
        _column(x, gram, j, k_j)

        a_i = alpha[i]
        a_j = alpha[j]
        quad = diag[i] + diag[j] - 2.0 * k_i[j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            d = a_i - a_j
            a_i += delta
            a_j += delta
            if d > 0:
                if a_j < 0:
                    a_j = 0.0
                    a_i = d
            elif a_i < 0:
                a_i = 0.0
                a_j = -d
            if d > 0:
                if a_i > C:
                    a_i = C
                    a_j = C - d
            elif a_j > C:
                a_j = C
                a_i = C + d
        else:
            delta = (grad[i] - grad[j]) / quad
            s = a_i + a_j
            a_i -= delta
            a_j += delta
            if s > C:
                if a_i > C:
                    a_i = C
                    a_j = s - C
                if a_j > C:
                    a_j = C
                    a_i = s - C
            else:
                if a_j < 0:
                    a_j = 0.0
                    a_i = s
                if a_i < 0:
                    a_i = 0.0
                    a_j = s

        d_i = (a_i - alpha[i]) * y[i]
        d_j = (a_j - alpha[j]) * y[j]
        alpha[i] = a_i
        alpha[j] = a_j
        for t in range(n):
            grad[t] += y[t] * (d_i * k_i[t] + d_j * k_j[t])
        it += 1
        if it % n == 0:
            history[n_hist] = _objective(alpha, grad)
            n_hist += 1

    history[n_hist] = _objective(alpha, grad)
    n_hist += 1
    return alpha, grad, it, gap, converged, n_hist


@njit(cache=True)
def _objective(alpha, grad):
    # dual objective sum(a) - 1/2 a^T Q a, with grad = Q a - 1
    acc = 0.0
    for t in range(alpha.shape[0]):
        acc += alpha[t] * (1.0 - grad[t])
    return 0.5 * acc


def smo_binary(
    x: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 1000,
) -> tuple[np.ndarray, float, dict]:
    """Solve one binary dual; ``y`` holds +1/-1.

    Returns ``(alpha, b, info)`` where the decision function is
    ``sum(alpha_i y_i <x_i, x>) + b``. ``info`` carries the iteration count,
    the final KKT gap and the dual objective recorded after every sweep of
    ``n`` pair updates. Raises :class:`ConvergenceError` when
    ``max_passes`` sweeps do not reach ``tol``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    gram = x @ x.T if n <= _GRAM_LIMIT else np.zeros((0, 0))
    diag = np.einsum("ij,ij->i", x, x)
    history = np.empty(max_passes + 3)
    alpha, grad, it, gap, converged, n_hist = _smo_kernel(
        x, gram, y, diag, float(C), float(tol), int(max_passes) * n, history
    )
    if not converged:
        raise ConvergenceError(f"SMO did not converge in {max_passes} passes (KKT gap {gap:.3e} > {tol:g})")
    info = {"n_iter": int(it), "gap": float(gap), "objective_history": tuple(history[:n_hist].tolist())}
    return alpha, _bias(alpha, y, grad, C), info


def _bias(alpha: np.ndarray, y: np.ndarray, grad: np.ndarray, C: float) -> float:
    yg = y * grad
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yg[free].mean())
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = float((ub + lb) / 2)
        else:
            rho = float(ub if np.isfinite(ub) else lb)
    return -rho


def minmax_scaling(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Offset and scale mapping each column onto [0, 1]; constant columns keep scale 1."""
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    return lo, np.where(span > 0, span, 1.0)


def train_pair(
    data: Dataset,
    positive: int,
    negative: int,
    C: float,
    tol: float,
    max_passes: int = 1000,
    normalize: bool = True,
) -> BinarySvm:
    mask = (data.labels == positive) | (data.labels == negative)
    x = data.features[mask]
    y = np.where(data.labels[mask] == positive, 1.0, -1.0)
    if normalize:
        lo, span = minmax_scaling(x)
        x = (x - lo) / span
    alpha, b, info = smo_binary(x, y, C, tol, max_passes)
    w = (alpha * y) @ x
    if normalize:
        # fold the scaling back so the hyperplane acts on raw inputs
        w = w / span
        b = float(b - w @ lo)
    return BinarySvm(positive, negative, w, b, C, alpha, y, info["objective_history"], info["n_iter"], info["gap"])


def svm_train(
    data: Dataset,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 1000,
    normalize: bool = True,
) -> SvmModel:
    """One-vs-one linear SVM over every pair of classes present in ``data``.

    With ``normalize`` (the default) each pair problem is solved on inputs
    min-max scaled to [0, 1] over its training rows; the stored ``w`` and
    ``b`` already include that scaling.
    """
    if C <= 0:
        raise DataError(f"C must be positive, got {C}")
    present = np.flatnonzero(data.class_counts() > 0)
    if present.size < 2:
        raise DataError("SVM training needs at least two classes")
    pairs = [
        train_pair(data, int(a), int(b), C, tol, max_passes, normalize)
        for ai, a in enumerate(present)
        for b in present[ai + 1 :]
    ]
    return SvmModel(data.classes, tuple(pairs))


def svm_predict(model: SvmModel, row) -> int:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise DataError("svm_predict expects a single row")
    return int(model.predict(row[None, :])[0])
