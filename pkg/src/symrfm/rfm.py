"""Recursive Feature Machines with Mahalanobis Gaussian and quadratic kernels.

Each round fits kernel regression ``alpha = (K_M + eps I)^-1 Y`` and then
replaces the feature matrix with a power of the average gradient outer
product (AGOP) of the fitted predictor over the training inputs.

Inputs that are one-hot pair encodings (``e_a || e_b``) take a fast path:
kernel matrices are assembled from entries of ``M`` by the compiled backend
and per-position gradient sums are grouped GEMMs. Other inputs use plain
dense algebra. Both paths compute the same quantities.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy.linalg.blas import dsyrk as _syrk

from ._backend import kernels as _kernels

log = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
QUADRATIC = "quadratic"

# bound on the temporary (rows x classes x features) gradient block, in floats
_CHUNK_FLOATS = 1 << 22


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelConfig:
    kind: str = GAUSSIAN
    bandwidth: float = 2.5
    power: float = 0.5
    iterations: int = 60
    ridge: float = 1e-8
    centering: bool = True

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, QUADRATIC):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.power > 0:
            raise ValueError("power must be positive")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bandwidth": self.bandwidth,
            "power": self.power,
            "iterations": self.iterations,
            "ridge": self.ridge,
            "centering": self.centering,
        }


# --------------------------------------------------------------------------
# kernels


def one_hot_pairs(X: np.ndarray):
    """Column positions ``(a, b)`` if every row of ``X`` is ``e_a || e_b``, else ``None``."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] % 2 or len(X) == 0:
        return None
    n = X.shape[1] // 2
    if not np.isin(X, (0.0, 1.0)).all():
        return None
    left, right = X[:, :n], X[:, n:]
    if not ((left.sum(1) == 1).all() and (right.sum(1) == 1).all()):
        return None
    return np.argmax(left, 1).astype(np.intp), (np.argmax(right, 1) + n).astype(np.intp)


def kernel_value(x, xp, M, config: KernelConfig) -> float:
    x, xp = np.asarray(x, float), np.asarray(xp, float)
    if config.kind == GAUSSIAN:
        diff = x - xp
        return float(np.exp(-(diff @ M @ diff) / config.bandwidth))
    return float((x @ M @ xp) ** 2)


def _linear_gram(X1, X2, M, p1, p2):
    if p1 is not None and p2 is not None:
        return _kernels.pair_gram(M, p1[0], p1[1], p2[0], p2[1])
    return X1 @ M @ X2.T


def _kernel(X1, X2, M, config, p1=None, p2=None):
    """Kernel matrix ``k_M(X1_i, X2_j)``."""
    if p1 is not None and p2 is not None:
        if config.kind == GAUSSIAN:
            return _kernels.pair_gaussian(M, p1[0], p1[1], p2[0], p2[1], float(config.bandwidth))
        return _kernels.pair_quadratic(M, p1[0], p1[1], p2[0], p2[1])
    G = X1 @ M @ X2.T
    if config.kind == QUADRATIC:
        return G**2
    q1 = np.einsum("ij,ij->i", X1 @ M, X1)
    q2 = np.einsum("ij,ij->i", X2 @ M, X2)
    return np.exp(-(q1[:, None] + q2[None, :] - 2.0 * G) / config.bandwidth)


def kernel_matrix(X1, X2, M, config: KernelConfig) -> np.ndarray:
    X1, X2 = np.asarray(X1, float), np.asarray(X2, float)
    M = np.ascontiguousarray(M, dtype=float)
    return _kernel(X1, X2, M, config, one_hot_pairs(X1), one_hot_pairs(X2))


# --------------------------------------------------------------------------
# estimator


@dataclass(eq=False)
class Estimator:
    alphas: np.ndarray
    X: np.ndarray
    M: np.ndarray
    config: KernelConfig
    residual: float = 0.0
    pairs: Optional[tuple] = field(default=None, repr=False)

    @property
    def n_outputs(self) -> int:
        return self.alphas.shape[1]


def _solve(K: np.ndarray, Y: np.ndarray, ridge: float):
    """Return ``(alpha, relative residual, K @ alpha)``."""
    A = K.copy()
    A[np.diag_indices_from(A)] += ridge
    try:
        factor = sla.cho_factor(A, lower=True, overwrite_a=True, check_finite=False)
        alpha = sla.cho_solve(factor, Y, check_finite=False)
        solve = lambda R: sla.cho_solve(factor, R, check_finite=False)  # noqa: E731
    except np.linalg.LinAlgError:
        A = K.copy()
        A[np.diag_indices_from(A)] += ridge
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)  # reported below instead
                lu = sla.lu_factor(A, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"kernel system is singular (ridge={ridge}): {exc}") from exc
        if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) == 0.0:
            raise NumericalError(f"kernel system is singular (ridge={ridge})")
        alpha = sla.lu_solve(lu, Y, check_finite=False)
        solve = lambda R: sla.lu_solve(lu, R, check_finite=False)  # noqa: E731

    def residual(alpha):
        R = Y - K @ alpha - ridge * alpha
        return R, np.linalg.norm(R) / max(np.linalg.norm(Y), np.finfo(float).tiny)

    R, res = residual(alpha)
    if res > 1e-6:
        alpha = alpha + solve(R)  # one step of iterative refinement
        R, res = residual(alpha)
    if not np.all(np.isfinite(alpha)):
        raise NumericalError("non-finite coefficients; the kernel matrix is numerically singular")
    return alpha, float(res), Y - R - ridge * alpha


def fit(X, Y, M, config: KernelConfig) -> Estimator:
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    M = np.ascontiguousarray(M, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    pairs = one_hot_pairs(X)
    K = _kernel(X, X, M, config, pairs, pairs)
    alphas, res, _ = _solve(K, Y, config.ridge)
    if res > 1e-6:
        log.warning("kernel solve relative residual %.2e exceeds 1e-6", res)
    return Estimator(alphas, X, M, config, res, pairs)


def predict(est: Estimator, X) -> np.ndarray:
    X = np.asarray(X, float)
    if len(X) == 0:
        return np.zeros((0, est.n_outputs))
    K = _kernel(X, est.X, est.M, est.config, one_hot_pairs(X), est.pairs)
    return K @ est.alphas


def classify(scores) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest index."""
    return np.argmax(np.asarray(scores), axis=1)


# --------------------------------------------------------------------------
# gradients


def jacobian(est: Estimator, x) -> np.ndarray:
    """Analytic ``d f / d x`` of shape ``(outputs, features)``."""
    x = np.asarray(x, float)
    X, M, alpha, cfg = est.X, est.M, est.alphas, est.config
    if cfg.kind == GAUSSIAN:
        k = _kernel(X, x[None, :], M, cfg)[:, 0]
        return (2.0 / cfg.bandwidth) * (alpha * k[:, None]).T @ (X - x) @ M
    lin = X @ M @ x
    return 2.0 * (alpha * lin[:, None]).T @ X @ M


class _PositionGroups:
    """Weight rows grouped by the hot position of the matching train input."""

    def __init__(self, pairs, d, W, alpha):
        self.d = d
        self.groups = []
        for pos in pairs:
            order = np.argsort(pos, kind="stable")
            starts = np.searchsorted(pos[order], np.arange(d + 1))
            bounds = [(q, starts[q], starts[q + 1]) for q in np.flatnonzero(np.diff(starts))]
            # one gather per AGOP; chunks below are column slices of it
            self.groups.append((W[order], alpha[order], bounds))

    def weighted_sums(self, lo, hi):
        """``S[q, x, c] = sum_i W[i, x] alpha[i, c] X[i, q]`` for columns ``lo:hi``."""
        c = self.groups[0][1].shape[1]
        S = np.zeros((self.d, hi - lo, c))
        for Wo, Ao, bounds in self.groups:
            Wc = Wo[:, lo:hi]
            for q, s, e in bounds:
                np.matmul(Wc[s:e].T, Ao[s:e], out=S[q])
        return S


def _agop_from_weights(W, est: Estimator, X, pairs, centered: bool, f=None) -> np.ndarray:
    """AGOP given ``W[i, x]``: kernel values (Gaussian) or ``x_i^T M x`` (quadratic).

    ``f`` may pass in the precomputed predictions ``W.T @ alpha``.
    """
    Xtr, M, alpha, cfg = est.X, est.M, est.alphas, est.config
    N, d = X.shape
    c = alpha.shape[1]
    gaussian = cfg.kind == GAUSSIAN
    coef = 2.0 / cfg.bandwidth if gaussian else 2.0
    if gaussian and f is None:
        f = W.T @ alpha

    groups = _PositionGroups(est.pairs, d, W, alpha) if est.pairs is not None else None
    mean = None
    if centered:
        mean = (alpha * W.sum(1)[:, None]).T @ Xtr
        if gaussian:
            mean -= f.T @ X
        mean = (mean / N).T  # (d, c)

    # Project onto the range of M before the outer products: M (S S^T) M would
    # keep the rounding of large null-space components of S and can go
    # visibly indefinite when M is rank deficient.
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    keep = w > d * np.finfo(float).eps * max(w[-1], 0.0)
    V = V[:, keep]
    P = np.ascontiguousarray(w[keep][:, None] * V.T)
    r = P.shape[0]
    acc = np.zeros((r, r), order="F")
    step = max(1, _CHUNK_FLOATS // (c * d))
    for lo in range(0, N, step):
        if r == 0:
            break
        hi = min(N, lo + step)
        if groups is not None:
            S = groups.weighted_sums(lo, hi)
        else:
            S = np.einsum("ib,ic,iq->qbc", W[:, lo:hi], alpha, Xtr, optimize=True)
        if gaussian:
            if pairs is not None:
                rows = np.arange(hi - lo)
                for pos in pairs:
                    S[pos[lo:hi], rows] -= f[lo:hi]
            else:
                S -= X[lo:hi].T[:, :, None] * f[lo:hi][None, :, :]
        if mean is not None:
            S -= mean[:, None, :]
        T = P @ S.reshape(d, -1)
        # sum over (x, c) of outer products, as one rank-k update
        acc = _syrk(1.0, T.T, beta=1.0, c=acc, trans=1, overwrite_c=True)
    acc = np.triu(acc) + np.triu(acc, 1).T
    G = (coef * coef / N) * (V @ acc @ V.T)
    return 0.5 * (G + G.T)


def agop(est: Estimator, X, centered: bool = False) -> np.ndarray:
    """``(1/N) sum_x J(x)^T J(x)`` over the rows of ``X``.

    With ``centered=True`` the Jacobians are centered over the rows first,
    i.e. the covariance of the gradients instead of their second moment.
    """
    X = np.asarray(X, float)
    if len(X) == 0:
        raise ValueError("AGOP needs at least one row")
    pairs = one_hot_pairs(X)
    cfg = est.config
    if cfg.kind == GAUSSIAN:
        W = _kernel(est.X, X, est.M, cfg, est.pairs, pairs)
    else:
        W = _linear_gram(est.X, X, est.M, est.pairs, pairs)
    return _agop_from_weights(W, est, X, pairs, centered)


def matrix_power(M, s: float) -> np.ndarray:
    """Symmetric PSD power: clamp negative eigenvalues to zero, raise to ``s``."""
    M = np.asarray(M, float)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    w = np.clip(w, 0.0, None) ** s
    out = (V * w) @ V.T
    return np.ascontiguousarray(0.5 * (out + out.T))


# --------------------------------------------------------------------------
# the loop


@dataclass
class IterationMetrics:
    iteration: int
    train_accuracy: float
    test_accuracy: float
    train_loss: float
    test_loss: float
    seconds: float
    agop_min_eigenvalue: float = float("nan")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(eq=False)
class RunRecord:
    config: KernelConfig
    history: list
    feature_matrix: np.ndarray  # M after the last update
    estimator_matrix: np.ndarray  # M used by the final estimator
    train_rows: np.ndarray
    test_rows: np.ndarray
    test_predictions: np.ndarray
    test_correct: np.ndarray

    @property
    def final(self) -> IterationMetrics:
        return self.history[-1]

    @property
    def test_accuracy(self) -> float:
        return self.final.test_accuracy

    @property
    def train_accuracy(self) -> float:
        return self.final.train_accuracy


def _accuracy(pred, y) -> float:
    return float(np.mean(pred == y)) if len(y) else float("nan")


def _mse(scores, Y) -> float:
    return float(np.mean((scores - Y) ** 2)) if len(Y) else float("nan")


def rfm(dataset, partition, config: KernelConfig, M0=None,
        callback: Optional[Callable[[int, IterationMetrics], None]] = None) -> RunRecord:
    """Run ``config.iterations`` rounds of fit + AGOP update on ``partition.train``."""
    X, Y, y = dataset.X, dataset.Y, dataset.y
    tr, te = partition.train, partition.test
    if len(tr) == 0:
        raise ValueError("empty training set")
    d = X.shape[1]
    M = np.eye(d) if M0 is None else np.ascontiguousarray(M0, dtype=float)
    if M.shape != (d, d):
        raise ValueError(f"M0 must be {d}x{d}, got {M.shape}")
    if not np.allclose(M, M.T, atol=1e-10):
        raise ValueError("M0 must be symmetric")

    Xtr, Ytr, Xte = X[tr], Y[tr], X[te]
    p_tr = one_hot_pairs(Xtr)
    p_te = one_hot_pairs(Xte)
    history = []
    for t in range(config.iterations):
        t0 = time.perf_counter()
        if config.kind == GAUSSIAN:
            K = _kernel(Xtr, Xtr, M, config, p_tr, p_tr)
            W = K
        else:
            W = _linear_gram(Xtr, Xtr, M, p_tr, p_tr)
            K = W**2
        alphas, res, train_scores = _solve(K, Ytr, config.ridge)
        est = Estimator(alphas, Xtr, M, config, res, p_tr)
        test_scores = predict(est, Xte)
        test_pred = classify(test_scores)
        G = _agop_from_weights(W, est, Xtr, p_tr, config.centering, f=train_scores)
        M_next = matrix_power(G, config.power)
        m = IterationMetrics(
            iteration=t + 1,
            train_accuracy=_accuracy(classify(train_scores), y[tr]),
            test_accuracy=_accuracy(test_pred, y[te]),
            train_loss=_mse(train_scores, Ytr),
            test_loss=_mse(test_scores, Y[te]),
            seconds=time.perf_counter() - t0,
            agop_min_eigenvalue=float(np.linalg.eigvalsh(G)[0]),
        )
        history.append(m)
        if callback is not None:
            callback(t + 1, m)
        log.debug("iter %d train %.4f test %.4f", m.iteration, m.train_accuracy, m.test_accuracy)
        M_est, M = M, M_next

    return RunRecord(
        config=config,
        history=history,
        feature_matrix=M,
        estimator_matrix=M_est,
        train_rows=np.asarray(tr),
        test_rows=np.asarray(te),
        test_predictions=test_pred,
        test_correct=test_pred == y[te],
    )
