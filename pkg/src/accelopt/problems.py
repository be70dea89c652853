"""Shipped objective instances and data ingestion.

Covers sparse LIBSVM-format classification data, the averaged logistic
loss over that data, quadratics with known minimizers, and l1-composite
least squares. Oracles built here are immutable closures over the data.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import ParseError
from .oracle import ObjectiveOracle, SimpleConvexTerm, l1_term


@dataclass(frozen=True)
class SparseDataset:
    """Rows of (label, sorted sparse features); labels normalized to +-1."""
    n: int
    d: int
    rows: Tuple[Tuple[int, Tuple[Tuple[int, float], ...]], ...]

    def to_dense(self) -> Tuple[np.ndarray, np.ndarray]:
        """(features n x d, labels n) as dense arrays."""
        X = np.zeros((self.n, self.d))
        y = np.empty(self.n)
        for i, (label, feats) in enumerate(self.rows):
            y[i] = label
            for idx, val in feats:
                X[i, idx - 1] = val
        return X, y

    def to_csr(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        data, indices, indptr, labels = [], [], [0], []
        for label, feats in self.rows:
            labels.append(label)
            for idx, val in feats:
                indices.append(idx - 1)
                data.append(val)
            indptr.append(len(data))
        X = sp.csr_matrix((data, indices, indptr), shape=(self.n, self.d))
        return X, np.asarray(labels, dtype=float)


def parse_libsvm(stream) -> SparseDataset:
    """Parse "label idx:val idx:val ..." lines into a SparseDataset.

    Blank lines and '#' comments are skipped. Indices must be >= 1 and
    strictly increasing within a row; 0/1 labels are remapped to -1/+1
    with a warning, other non-(+-1) labels are rejected.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream.decode() if isinstance(stream, bytes)
                             else stream)
    rows: List[Tuple[int, Tuple[Tuple[int, float], ...]]] = []
    d = 0
    warned_01 = False
    for line_no, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label_val = float(tokens[0])
        except ValueError:
            raise ParseError(f"non-numeric label {tokens[0]!r}", line_no)
        if label_val in (1.0, -1.0):
            label = int(label_val)
        elif label_val in (0.0,):
            label = -1
            if not warned_01:
                warnings.warn("0/1 labels remapped to -1/+1", stacklevel=2)
                warned_01 = True
        else:
            raise ParseError(f"unsupported label {tokens[0]!r}", line_no)
        feats: List[Tuple[int, float]] = []
        prev_idx = 0
        for tok in tokens[1:]:
            if ":" not in tok:
                raise ParseError(f"missing colon in token {tok!r}", line_no)
            idx_s, val_s = tok.split(":", 1)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"non-numeric token {tok!r}", line_no)
            if idx < 1:
                raise ParseError(f"feature index {idx} below 1", line_no)
            if idx <= prev_idx:
                raise ParseError(
                    f"non-increasing index {idx} after {prev_idx}", line_no)
            prev_idx = idx
            feats.append((idx, val))
            d = max(d, idx)
        rows.append((label, tuple(feats)))
    return SparseDataset(n=len(rows), d=d, rows=tuple(rows))


def serialize_libsvm(dataset: SparseDataset) -> str:
    lines = []
    for label, feats in dataset.rows:
        parts = [f"{label:+d}"] + [f"{idx}:{val!r}" for idx, val in feats]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def logistic_eval(dataset: SparseDataset):
    """(value, gradient, hess_vec) closures for the averaged logistic loss.

    Values use the overflow-stable log1p-of-exp branch; the Hessian action
    uses the sigmoid curvature weights row by row.
    """
    X, y = dataset.to_csr()
    n = dataset.n

    def margins(x):
        return y * (X @ x)

    def value(x):
        t = -margins(x)
        # log(1 + e^t): branch on the sign of t to avoid overflow
        out = np.where(t > 0, t + np.log1p(np.exp(-np.abs(t))),
                       np.log1p(np.exp(-np.abs(t))))
        return float(out.sum()) / n

    def gradient(x):
        m = margins(x)
        sig = _sigmoid(-m)
        return np.asarray(X.T @ (-y * sig)).ravel() / n

    def hess_vec(x, v):
        m = margins(x)
        sig = _sigmoid(m)
        w = sig * (1.0 - sig)
        return np.asarray(X.T @ (w * (X @ v))).ravel() / n

    return value, gradient, hess_vec


def _sigmoid(t):
    out = np.empty_like(t, dtype=float)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def make_logistic(dataset: SparseDataset) -> ObjectiveOracle:
    value, gradient, hess_vec = logistic_eval(dataset)
    return ObjectiveOracle(dim=dataset.d, smooth_order=2,
                           smooth_value=value, gradient=gradient,
                           hess_vec=hess_vec)


def make_quadratic(Q, b, default_holder_L: float = 1e-3) -> ObjectiveOracle:
    """f(x) = 1/2 x^T Q x - b^T x for symmetric positive semidefinite Q.

    Q may be a 1-D array (diagonal) or a dense matrix. The oracle carries
    metadata: gradient-Lipschitz constant, the known minimizer when Q is
    definite, and a default third-derivative Hölder constant (any positive
    value is admissible since the third derivative vanishes).
    """
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)
    if Q.ndim == 1:
        Q = np.diag(Q)
    Q = 0.5 * (Q + Q.T)
    eigvals = np.linalg.eigvalsh(Q)
    if eigvals[0] < -1e-10 * max(1.0, abs(eigvals[-1])):
        raise ValueError("Q must be positive semidefinite")
    d = Q.shape[0]
    oracle = ObjectiveOracle(
        dim=d, smooth_order=2,
        smooth_value=lambda x: 0.5 * float(x @ (Q @ x)) - float(b @ x),
        gradient=lambda x: Q @ x - b,
        hess_vec=lambda x, v: Q @ v)
    oracle.lipschitz_gradient = float(max(eigvals[-1], 0.0))
    oracle.strong_convexity = float(max(eigvals[0], 0.0))
    oracle.holder_L_order2 = default_holder_L
    if eigvals[0] > 1e-12:
        oracle.x_star = np.linalg.solve(Q, b)
        oracle.f_star = -0.5 * float(b @ oracle.x_star)
    else:
        oracle.x_star = None
        oracle.f_star = None
    return oracle


def make_l1_least_squares(A, b, reg: float) -> ObjectiveOracle:
    """g(x) = 1/2 ||Ax - b||^2 with l(x) = reg * ||x||_1."""
    if reg < 0:
        raise ValueError("reg must be nonnegative")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    composite = l1_term(reg) if reg > 0 else None
    oracle = ObjectiveOracle(
        dim=A.shape[1], smooth_order=2,
        smooth_value=lambda x: 0.5 * float(np.sum((A @ x - b) ** 2)),
        gradient=lambda x: A.T @ (A @ x - b),
        hess_vec=lambda x, v: A.T @ (A @ v),
        composite_part=composite)
    oracle.lipschitz_gradient = float(np.linalg.norm(A, 2) ** 2)
    return oracle


def synthetic_logistic_dataset(n: int, d: int, seed: int,
                               noise: float = 0.15) -> SparseDataset:
    """Seeded separator-plus-noise classification data, dense features."""
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(d)
    X = rng.standard_normal((n, d)) / np.sqrt(d)
    logits = X @ w_true
    labels = np.where(logits + noise * rng.standard_normal(n) >= 0, 1, -1)
    rows = []
    for i in range(n):
        feats = tuple((j + 1, float(X[i, j])) for j in range(d))
        rows.append((int(labels[i]), feats))
    return SparseDataset(n=n, d=d, rows=tuple(rows))


def random_sparse_dataset(rng: np.random.Generator, max_rows: int = 8,
                          max_dim: int = 12) -> SparseDataset:
    """Small random dataset for parser round-trip tests."""
    rows = []
    d = 0
    for _ in range(rng.integers(1, max_rows + 1)):
        label = int(rng.choice([-1, 1]))
        k = int(rng.integers(0, max_dim + 1))
        idxs = np.sort(rng.choice(np.arange(1, max_dim + 1), size=k,
                                  replace=False))
        feats = tuple((int(j), float(np.round(rng.standard_normal(), 6)))
                      for j in idxs)
        if feats:
            d = max(d, feats[-1][0])
        rows.append((label, feats))
    return SparseDataset(n=len(rows), d=d, rows=tuple(rows))
