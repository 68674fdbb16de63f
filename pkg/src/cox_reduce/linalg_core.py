"""Dense linear-algebra kernel for cox-reduce.

Least squares goes through the thin SVD, which doubles as the rank-revealing
decomposition. A singular value counts as zero when it falls below
``sigma_max * n * eps``. All functions are pure and safe to call from threads.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import (
    ConfigError,
    DataError,
    OverlappingSetsError,
    RankDeficientError,
    ZeroVectorError,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
ZERO_NORM = 1e-300


def as_matrix(values) -> np.ndarray:
    """Return a read-only float copy of ``values`` as an (n, p) matrix."""
    matrix = np.array(values, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2:
        raise DataError(f"Expected a 2-D matrix, got {matrix.ndim} dimensions")
    if not np.all(np.isfinite(matrix)):
        raise DataError("Matrix contains NaN or infinite entries")
    matrix.setflags(write=False)
    return matrix


def as_vector(values) -> np.ndarray:
    vector = np.array(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(vector)):
        raise DataError("Vector contains NaN or infinite entries")
    return vector


@dataclass(frozen=True)
class CentredView:
    """Column-centred copy of a matrix together with the removed means."""

    values: np.ndarray
    means: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def restore(self) -> np.ndarray:
        """Undo the centring."""
        return self.values + self.means


def centre(m) -> CentredView:
    """Centre every column of ``m``; the means are kept for restoring."""
    matrix = as_matrix(m)
    if matrix.shape[0] < 2:
        raise DataError(f"Centring needs at least 2 observations, got {matrix.shape[0]}")

    means = matrix.mean(axis=0)
    values = matrix - means
    # second pass removes the rounding left by the first
    correction = values.mean(axis=0)
    values -= correction
    values.setflags(write=False)
    means = means + correction
    means.setflags(write=False)
    return CentredView(values=values, means=means)


def centre_vector(v) -> Tuple[np.ndarray, float]:
    """Centre a single vector, returning it with its mean."""
    view = centre(as_vector(v).reshape(-1, 1))
    return view.values[:, 0].copy(), float(view.means[0])


@dataclass(frozen=True)
class LstsqFit:
    """Output of one least-squares regression of y on X_K."""

    coefficients: np.ndarray
    residuals: np.ndarray
    rank: int
    xtx_inv_diag: np.ndarray

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.residuals))


def _svd(xk: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    u, s, vt = np.linalg.svd(xk, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u, s, vt, 0
    tol = s[0] * xk.shape[0] * EPS
    return u, s, vt, int(np.sum(s > tol))


def _full_rank_svd(xk: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    u, s, vt, rank = _svd(xk)
    if rank < xk.shape[1]:
        raise RankDeficientError(rank, xk.shape[1])
    return u, s, vt


def _check_rows(y: np.ndarray, xk: np.ndarray) -> None:
    if xk.shape[0] != y.shape[0]:
        raise DataError(
            f"Response has {y.shape[0]} observations but design has {xk.shape[0]}"
        )


def numerical_rank(xk) -> int:
    """Column rank of ``xk`` under the kernel's rank tolerance."""
    matrix = as_matrix(xk)
    if matrix.shape[1] == 0:
        return 0
    return _svd(matrix)[3]


def orthonormal_basis(xk) -> np.ndarray:
    """Orthonormal basis of the column span of ``xk`` (rank-tolerant)."""
    matrix = as_matrix(xk)
    if matrix.shape[1] == 0:
        return np.zeros((matrix.shape[0], 0))
    u, _, _, rank = _svd(matrix)
    return u[:, :rank]


def least_squares(y, xk) -> LstsqFit:
    """Regress ``y`` on the columns of ``xk``.

    Raises:
        RankDeficientError: when the numerical rank is below the column count.
    """
    y = as_vector(y)
    xk = as_matrix(xk)
    _check_rows(y, xk)

    k = xk.shape[1]
    if k == 0:
        empty = np.zeros(0)
        return LstsqFit(coefficients=empty, residuals=y.copy(), rank=0, xtx_inv_diag=empty)

    u, s, vt = _full_rank_svd(xk)
    uty = u.T @ y
    coefficients = vt.T @ (uty / s)
    residuals = y - u @ uty
    xtx_inv_diag = np.sum((vt.T / s) ** 2, axis=1)
    return LstsqFit(
        coefficients=coefficients,
        residuals=residuals,
        rank=k,
        xtx_inv_diag=xtx_inv_diag,
    )


def regression_coefficients(xk, rhs) -> np.ndarray:
    """Coefficients of every column of ``rhs`` regressed on ``xk`` (|K| x columns)."""
    xk = as_matrix(xk)
    rhs = as_matrix(rhs)
    if xk.shape[1] == 0:
        return np.zeros((0, rhs.shape[1]))
    u, s, vt = _full_rank_svd(xk)
    return vt.T @ ((u.T @ rhs) / s[:, None])


def project(y, xk) -> np.ndarray:
    """Return P_K y, the projection of ``y`` onto the column span of ``xk``."""
    y = as_vector(y)
    xk = as_matrix(xk)
    _check_rows(y, xk)
    if xk.shape[1] == 0:
        return np.zeros_like(y)
    u, _, _ = _full_rank_svd(xk)
    return u @ (u.T @ y)


def residualise(v, xk) -> np.ndarray:
    """Return (I - P_K) v using a rank-tolerant basis of ``xk``."""
    v = as_vector(v)
    basis = orthonormal_basis(xk)
    return v - basis @ (basis.T @ v)


def inverse_gram_form(xk, v) -> float:
    """Evaluate v^T (X_K^T X_K)^{-1} v without forming the inverse."""
    xk = as_matrix(xk)
    v = as_vector(v)
    if xk.shape[1] == 0:
        return 0.0
    _, s, vt = _full_rank_svd(xk)
    return float(np.sum((vt @ v / s) ** 2))


def corr(u, v) -> float:
    """Sample correlation u^T v / (|u| |v|) of two centred vectors."""
    u = as_vector(u)
    v = as_vector(v)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < ZERO_NORM or nv < ZERO_NORM:
        raise ZeroVectorError("Correlation of a zero-norm vector is undefined")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def multiple_corr(u, x) -> float:
    """Sample multiple correlation R(u, X) = |P_X u| / |u|."""
    u = as_vector(u)
    nu = np.linalg.norm(u)
    if nu < ZERO_NORM:
        raise ZeroVectorError("Multiple correlation of a zero-norm vector is undefined")
    basis = orthonormal_basis(x)
    if basis.shape[1] == 0:
        return 0.0
    return float(np.clip(np.linalg.norm(basis.T @ u) / nu, 0.0, 1.0))


def block_corr(xa, xb) -> float:
    """R(X_A, X_B) = |P_A P_B|_2, the largest canonical correlation.

    Evaluated as the square root of the top eigenvalue of the |A| x |A| matrix
    Q_A^T P_B Q_A; no n x n projector is formed.
    """
    xa = as_matrix(xa)
    xb = as_matrix(xb)
    if xa.shape[0] != xb.shape[0]:
        raise DataError("Blocks must have the same number of observations")
    if xa.shape[1] == 0 or xb.shape[1] == 0:
        return 0.0

    qa = _full_rank_svd(xa)[0]
    qb = _full_rank_svd(xb)[0]
    cross = qa.T @ qb
    top = linalg.eigh(cross @ cross.T, eigvals_only=True)[-1]
    return float(np.sqrt(np.clip(top, 0.0, 1.0)))


def cochran_decompose(
    y, e: Sequence[int], f: Sequence[int], x
) -> Tuple[np.ndarray, np.ndarray]:
    """Both sides of theta_{Y:E} = theta_{Y:E.F} + theta_{F:E} theta_{Y:F.E}.

    The left side is the regression of y on X_E alone; the right side is built
    from the joint fit on X_{E u F} and the regression of X_F on X_E.
    """
    e = list(e)
    f = list(f)
    if not e:
        raise ConfigError("Index set E must not be empty")
    if set(e) & set(f):
        raise OverlappingSetsError(f"E and F overlap in {sorted(set(e) & set(f))}")

    x = as_matrix(x)
    xe = x[:, e]
    lhs = least_squares(y, xe).coefficients

    joint = least_squares(y, x[:, e + f]).coefficients
    partial_e = joint[: len(e)]
    partial_f = joint[len(e) :]
    f_on_e = regression_coefficients(xe, x[:, f]) if f else np.zeros((len(e), 0))
    rhs = partial_e + f_on_e @ partial_f
    return lhs, rhs
