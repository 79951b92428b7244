"""Soft-margin SVM on precomputed kernels, solved in the dual by SMO.

The dual problem

    max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t.   sum_i a_i y_i = 0,  0 <= a_i <= C

is solved by sequential minimal optimization: at every step the pair of
variables that most violates the KKT conditions is optimized analytically.
Training stops when the maximal violation drops below ``tol``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .linalg import ContractError

KKT_TOL = 1e-3
SUPPORT_THRESHOLD = 1e-8
SYMMETRY_TOL = 1e-10
_TAU = 1e-12


class ConvergenceError(RuntimeError):
    """SMO hit its iteration cap; carries the last iterate and a diagnostic."""

    def __init__(self, message: str, model: "SvmModel", violation: float, iterations: int):
        super().__init__(message)
        self.model = model
        self.violation = violation
        self.iterations = iterations


@dataclass(frozen=True)
class SvmModel:
    """A trained soft-margin classifier over a precomputed kernel.

    Attributes:
        dual_coefs: Dual variables alpha, one per training point, in [0, C].
        labels: Training labels in {-1, +1}.
        bias: Offset b of the decision function.
        C: Box constraint used for training.
        support_indices: Indices of the points whose alpha exceeds a tiny fraction of C.
        iterations: Pair updates the solver performed.
        violation: Final maximal KKT violation.
        kernel_ref: Free-form provenance (kernel kind, hyperparameters).
    """

    dual_coefs: np.ndarray
    labels: np.ndarray
    bias: float
    C: float
    support_indices: np.ndarray = field(default=None)
    iterations: int = 0
    violation: float = 0.0
    kernel_ref: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.support_indices is None:
            sv = np.flatnonzero(self.dual_coefs > SUPPORT_THRESHOLD * self.C)
            object.__setattr__(self, "support_indices", sv)

    @property
    def n_train(self) -> int:
        return len(self.dual_coefs)

    def to_dict(self) -> dict:
        return {
            "dual_coefs": self.dual_coefs.tolist(),
            "labels": self.labels.astype(int).tolist(),
            "bias": self.bias,
            "support_indices": self.support_indices.tolist(),
            "C": self.C,
            "iterations": self.iterations,
            "violation": self.violation,
            "kernel_ref": self.kernel_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            dual_coefs=np.asarray(d["dual_coefs"], dtype=float),
            labels=np.asarray(d["labels"], dtype=float),
            bias=float(d["bias"]),
            C=float(d["C"]),
            support_indices=np.asarray(d["support_indices"], dtype=int),
            iterations=int(d.get("iterations", 0)),
            violation=float(d.get("violation", 0.0)),
            kernel_ref=d.get("kernel_ref", {}),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    @classmethod
    def load(cls, path) -> "SvmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@numba.njit(cache=True, nogil=True)
def _smo(Q, y, C, tol, max_iter, second_order, alpha, G):
    M = y.shape[0]
    QD = np.empty(M)
    for t in range(M):
        QD[t] = Q[t, t]
    it = 0
    gap = np.inf
    # i: maximal -y G over I_up; tracked while the gradient is updated
    gmax = -np.inf
    i = -1
    for t in range(M):
        if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
            v = -y[t] * G[t]
            if v >= gmax:
                gmax = v
                i = t
    while True:
        # j: minimal -y G over I_low, or the largest second-order gain
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(M):
            if (y[t] < 0 and alpha[t] < C) or (y[t] > 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v <= gmin:
                    gmin = v
                    if not second_order:
                        j = t
                if second_order and i >= 0:
                    b = gmax - v
                    if b > 0:
                        a = QD[i] + QD[t] - 2.0 * y[i] * y[t] * Q[i, t]
                        if a <= 0:
                            a = _TAU
                        gain = -(b * b) / a
                        if gain <= best:
                            best = gain
                            j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < tol:
            break
        if it >= max_iter:
            break
        it += 1

        ai_old = alpha[i]
        aj_old = alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        pi = i
        pj = j
        gmax = -np.inf
        i = -1
        for t in range(M):
            # Q is symmetric; row access keeps the update contiguous
            G[t] += Q[pi, t] * dai + Q[pj, t] * daj
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v >= gmax:
                    gmax = v
                    i = t
    return alpha, G, it, gap


def _bias(alpha, y, G, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return -float(np.mean(yG[free]))
    at_upper = alpha >= C
    at_lower = alpha <= 0
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = np.min(yG[ub_mask]) if np.any(ub_mask) else np.inf
    lb = np.max(yG[lb_mask]) if np.any(lb_mask) else -np.inf
    if not np.isfinite(ub):
        ub = lb
    if not np.isfinite(lb):
        lb = ub
    return -0.5 * (ub + lb)


def check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all((y == 1) | (y == -1)):
        raise ContractError("labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ContractError("training labels must contain both classes")
    return y


def _gradient(Q, alpha):
    return Q @ alpha - 1.0


def _violation(alpha, y, G, C) -> float:
    v = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    if not up.any() or not low.any():
        return 0.0
    return float(v[up].max() - v[low].min())


def _polish(Q, y, C, alpha, tol=1e-4, max_steps=None):
    """Primal active-set iterations on the dual QP, started from ``alpha``.

    The working set starts as the free variables. Each step solves the
    equality-constrained Newton system on the working set; when that
    system is singular and inconsistent, its residual is a direction of
    zero curvature along which the objective improves linearly, and the
    step follows it instead. Steps are cut at the first bound, which
    removes that variable from the working set. After a full Newton step
    the bound variable with the largest KKT violation is added. The dual
    objective never decreases.
    """
    M = len(y)
    if max_steps is None:
        max_steps = 4 * M
    alpha = alpha.copy()
    G = Q @ alpha - 1.0
    W = (alpha > 0) & (alpha < C)
    released = -1
    for _ in range(max_steps):
        F = np.flatnonzero(W)
        nf = len(F)
        if nf == 0:
            # everything sits at a bound: seed the set with the maximal violating pair
            v = -y * G
            up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
            low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
            if not up.any() or not low.any():
                break
            i = int(np.flatnonzero(up)[np.argmax(v[up])])
            j = int(np.flatnonzero(low)[np.argmin(v[low])])
            if v[i] - v[j] <= tol:
                break
            W[i] = W[j] = True
            continue
        A = np.zeros((nf + 1, nf + 1))
        A[:nf, :nf] = Q[np.ix_(F, F)]
        A[:nf, nf] = y[F]
        A[nf, :nf] = y[F]
        rhs = np.empty(nf + 1)
        rhs[:nf] = -G[F]
        rhs[nf] = -(y @ alpha)
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
        res = rhs - A @ sol
        newton = np.abs(res).max() <= 1e-9 * max(1.0, float(np.abs(rhs).max()))
        step = sol[:nf] if newton else res[:nf]
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(step > 0, (C - alpha[F]) / step,
                            np.where(step < 0, -alpha[F] / step, np.inf))
        k = int(np.argmin(room))
        t = min(float(room[k]), 1.0) if newton else float(room[k])
        if not np.isfinite(t):
            break
        if t < 1.0 or not newton:
            if t <= 0 and F[k] == released:
                break
            alpha[F] += t * step
            alpha[F[k]] = C if step[k] > 0 else 0.0
            np.clip(alpha, 0.0, C, out=alpha)
            W[F[k]] = False
            G = Q @ alpha - 1.0
            released = -1
            continue
        alpha[F] += step
        np.clip(alpha, 0.0, C, out=alpha)
        G = Q @ alpha - 1.0
        r = G + sol[nf] * y
        viol = np.where(W, 0.0, np.where(alpha <= 0, -r, r))
        j = int(np.argmax(viol))
        if viol[j] <= tol:
            break
        W[j] = True
        released = j
    return alpha


def _objective(Q, alpha) -> float:
    return float(alpha.sum() - 0.5 * alpha @ Q @ alpha)


def train(K, y, C: float = 1.0, tol: float = KKT_TOL, max_iter: int | None = None,
          selection: str = "second-order", polish: bool = True) -> SvmModel:
    """Fit the dual coefficients and bias on a square training Gram matrix.

    SMO runs in rounds of pair updates. Between rounds, when ``polish`` is
    on, an active-set pass (Newton steps on the free variables, releasing
    violating bound variables) is tried and kept if it does not lower the
    dual objective. This settles ill-conditioned large-``C`` problems that
    pairwise updates approach very slowly. A final pass at a much tighter
    tolerance removes most of the residual error of the stopping rule.

    Args:
        K: Symmetric ``(M, M)`` kernel over the training points.
        y: Labels in ``{+1, -1}``; both classes must be present.
        C: Box constraint on the dual coefficients.
        tol: Stop once the maximal KKT violation is below this value.
        max_iter: Pair-update cap; defaults to ``100000 * M``.
        selection: ``"second-order"`` (gain-based choice of the second
            index) or ``"mvp"`` (plain maximal violating pair).
        polish: Enable the active-set passes.

    Raises:
        ContractError: on non-square or non-symmetric ``K``, bad labels or
            ``C <= 0``.
        ConvergenceError: when the cap is reached before the tolerance.
    """
    K = np.asarray(K, dtype=float)
    y = check_labels(y)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ContractError(f"training kernel must be square, got shape {K.shape}")
    if K.shape[0] != len(y):
        raise ContractError(f"kernel size {K.shape[0]} does not match {len(y)} labels")
    if np.max(np.abs(K - K.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(K))):
        raise ContractError("training kernel is not symmetric")
    if not C > 0:
        raise ContractError(f"C must be positive, got {C}")
    if selection not in ("second-order", "mvp"):
        raise ContractError(f"unknown working-set selection {selection!r}")
    M = len(y)
    C = float(C)
    if max_iter is None:
        max_iter = 100_000 * M
    Q = np.ascontiguousarray((y[:, None] * y[None, :]) * K)
    alpha = np.zeros(M)
    G = -np.ones(M)
    round_len = max(50 * M, 10_000) if polish else max_iter
    total = 0
    while True:
        budget = min(round_len, max_iter - total)
        alpha, G, it, gap = _smo(Q, y, C, float(tol), int(budget),
                                 selection == "second-order", alpha, G)
        total += int(it)
        if gap < tol or total >= max_iter:
            break
        # fresh gradient between rounds removes accumulated drift
        G = _gradient(Q, alpha)
        if polish:
            cand = _polish(Q, y, C, alpha, tol=0.1 * float(tol))
            if _objective(Q, cand) >= _objective(Q, alpha):
                alpha = cand
                G = _gradient(Q, alpha)
        gap = _violation(alpha, y, G, C)
        if gap < tol:
            break
    if polish and gap < tol:
        # one more active-set pass at a much tighter tolerance removes the
        # residual error of the stopping rule; kept only if no worse
        cand = _polish(Q, y, C, alpha, tol=float(tol) * 1e-3)
        if _objective(Q, cand) >= _objective(Q, alpha):
            G_cand = _gradient(Q, cand)
            gap_cand = _violation(cand, y, G_cand, C)
            if gap_cand <= gap:
                alpha, G, gap = cand, G_cand, gap_cand
    model = SvmModel(alpha, y, _bias(alpha, y, G, C), C, iterations=total, violation=float(gap))
    if gap >= tol:
        raise ConvergenceError(
            f"SMO stopped after {total} pair updates with KKT violation {gap:.3g} > {tol:g}",
            model, float(gap), total)
    return model


def dual_objective(alpha, K, y) -> float:
    """``sum a - 1/2 a^T (yy^T * K) a``; the quantity SMO maximizes."""
    alpha = np.asarray(alpha, dtype=float)
    v = alpha * np.asarray(y, dtype=float)
    return float(alpha.sum() - 0.5 * v @ np.asarray(K, dtype=float) @ v)


def decision(model: SvmModel, K_cross) -> np.ndarray:
    """Scores ``sum_{i in S} a_i y_i K(x_i, x) + b`` for each row of an (eval x train) kernel."""
    K_cross = np.asarray(K_cross, dtype=float)
    if K_cross.ndim != 2 or K_cross.shape[1] != model.n_train:
        raise ContractError(
            f"cross kernel needs {model.n_train} columns, got shape {K_cross.shape}")
    sv = model.support_indices
    coef = model.dual_coefs[sv] * model.labels[sv]
    return K_cross[:, sv] @ coef + model.bias


def sign_labels(scores) -> np.ndarray:
    """Sign with ties going to +1."""
    return np.where(np.asarray(scores) >= 0, 1, -1)


def predict(model: SvmModel, K_cross) -> np.ndarray:
    return sign_labels(decision(model, K_cross))


def accuracy(predicted, truth) -> float:
    """Fraction of correct predictions."""
    predicted = np.asarray(predicted).ravel()
    truth = np.asarray(truth).ravel()
    if predicted.size == 0 or predicted.shape != truth.shape:
        raise ContractError("accuracy needs two non-empty label vectors of equal length")
    return float(np.mean(predicted == truth))
