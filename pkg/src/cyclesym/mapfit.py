"""Least-squares estimation of linear section maps and prediction error.

A section map A sends input residuals to predicted output residuals,
``y_hat = A x``. With pairs stacked as rows of X and Y, the minimum-norm
least-squares estimate is ``A = (pinv(X) Y)^T``. No intercept is fitted:
residuals are already centered by fixed-point subtraction. No regularization
is applied; rank deficiency is handled by singular-value truncation alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PairedDataset
from .errors import NumericalError, ValidationError


@dataclass(frozen=True, eq=False)
class SectionMap:
    """Fitted linear map for one transition kind."""

    matrix: np.ndarray
    kind: str
    n_train: int

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"map matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericalError("map matrix contains NaN or infinite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def default_rcond(dim: int) -> float:
    """Relative singular-value cutoff: state dimension times machine epsilon."""
    return dim * float(np.finfo(float).eps)


def pseudoinverse(x: np.ndarray, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with relative truncation.

    Singular values at or below ``rcond * sigma_max`` are treated as zero.
    Accepts stacked input ``(..., n, d)`` and inverts each matrix in the
    stack independently.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-2] < 1 or x.shape[-1] < 1:
        raise ValidationError(f"cannot invert shape {x.shape}")
    if rcond is None:
        rcond = default_rcond(x.shape[-1])
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    cutoff = rcond * np.max(s, axis=-1, keepdims=True)
    keep = s > cutoff
    inv_s = np.where(keep, 1.0, 0.0) / np.where(keep, s, 1.0)
    return (vt.swapaxes(-1, -2) * inv_s[..., None, :]) @ u.swapaxes(-1, -2)


def fit_matrices(x: np.ndarray, y: np.ndarray, rcond: float | None = None) -> np.ndarray:
    """Map estimate ``(pinv(x) y)^T`` for one or a stack of row-paired matrices.

    Among all least-squares minimizers of ``||y - x A^T||_F`` this is the one
    with minimum Frobenius norm, which is what the truncated pseudoinverse
    yields for rank-deficient x.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError(f"x and y shapes differ: {x.shape} vs {y.shape}")
    a = (pseudoinverse(x, rcond) @ y).swapaxes(-1, -2)
    if not np.all(np.isfinite(a)):
        raise NumericalError("least-squares fit produced non-finite coefficients")
    return a


def fit_map(dataset: PairedDataset, rcond: float | None = None) -> SectionMap:
    """Fit the linear section map of a paired dataset."""
    a = fit_matrices(dataset.x, dataset.y, rcond)
    return SectionMap(matrix=a, kind=dataset.kind, n_train=dataset.n_pairs)


def cve_matrices(a: np.ndarray, x_val: np.ndarray, y_val: np.ndarray) -> np.ndarray:
    """Normalized squared prediction error, batched over leading axes."""
    a = np.asarray(a, dtype=float)
    x_val = np.asarray(x_val, dtype=float)
    y_val = np.asarray(y_val, dtype=float)
    resid = y_val - x_val @ a.swapaxes(-1, -2)
    num = np.sum(resid * resid, axis=(-2, -1))
    den = np.sum(y_val * y_val, axis=(-2, -1))
    if np.any(den == 0.0):
        raise ValidationError("validation outputs have zero norm; error undefined")
    return num / den


def cve(section_map: SectionMap | np.ndarray, x_val: np.ndarray, y_val: np.ndarray) -> float:
    """Cross-validation error ``||Yv - Xv A^T||^2 / ||Yv||^2`` (Frobenius).

    0 means perfect prediction; 1 is the score of the all-zero map.
    """
    a = section_map.matrix if isinstance(section_map, SectionMap) else section_map
    x_val = np.atleast_2d(np.asarray(x_val, dtype=float))
    y_val = np.atleast_2d(np.asarray(y_val, dtype=float))
    if x_val.shape != y_val.shape:
        raise ValidationError(f"validation shapes differ: {x_val.shape} vs {y_val.shape}")
    if x_val.shape[0] < 1:
        raise ValidationError("validation set is empty")
    return float(cve_matrices(a, x_val, y_val))
