"""Shared containers and input validation helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.utils import check_array

from .sparse_model import RawSample

SIGN_CONVENTIONS = ("symmetric", "binary")


@dataclass(frozen=True)
class PrivateSample:
    """n x d matrix of private releases tagged with its mechanism and budget."""

    Z: np.ndarray
    mechanism: str
    alpha: float

    @property
    def shape(self):
        return self.Z.shape

    def column_means(self) -> np.ndarray:
        return self.Z.mean(axis=0)


def sgn(x, convention: str = "symmetric") -> np.ndarray:
    """Sign with sgn(0) = +1; the negative branch is -1 ("symmetric") or 0 ("binary")."""
    x = np.asarray(x)
    if convention == "symmetric":
        return np.where(x >= 0, 1, -1).astype(np.int8)
    if convention == "binary":
        return (x >= 0).astype(np.int8)
    raise ValueError(f"sign convention must be one of {SIGN_CONVENTIONS}, got {convention!r}")


def as_rows(X, *, allow_1d: bool = False) -> np.ndarray:
    if isinstance(X, RawSample):
        X = X.rows
    if allow_1d and np.ndim(X) == 1:
        return check_array(np.asarray(X, dtype=float)[None, :], ensure_all_finite=True)[0]
    return check_array(X, dtype=float, ensure_all_finite=True)


def as_private_matrix(Z) -> np.ndarray:
    if isinstance(Z, PrivateSample):
        Z = Z.Z
    return check_array(Z, dtype=float, ensure_all_finite=True)


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"alpha must be a positive finite number, got {alpha}")
    return alpha


def check_dimension(d) -> int:
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    return int(d)
