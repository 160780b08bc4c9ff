"""Separable threshold selectors over column means of private releases.

Both selectors are free of the sparsity s. ``ThresholdSelector`` wraps them
as a scikit-learn ``SelectorMixin`` so it can sit at the end of a pipeline
whose first step is a privacy mechanism.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from ._base import as_private_matrix
from .noise import NoiseModel, constants

__all__ = [
    "Mechanism",
    "PolicyKind",
    "SelectorOutput",
    "ThresholdPolicy",
    "ThresholdSelector",
    "resolve_policy",
    "select_abs",
    "select_plus",
    "threshold_means",
]


class PolicyKind(str, enum.Enum):
    LARGE_A = "LARGE_A"
    SMALL_A = "SMALL_A"
    MANUAL = "MANUAL"
    AUTO = "AUTO"


class Mechanism(str, enum.Enum):
    LOCAL = "LOCAL"
    GLOBAL = "GLOBAL"


@dataclass(frozen=True)
class SelectorOutput:
    eta_hat: np.ndarray
    tau: float


@dataclass(frozen=True)
class ThresholdPolicy:
    """A resolved threshold plus the preconditions it violates (if any)."""

    kind: PolicyKind
    tau: float
    validity_flags: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.validity_flags


def _check_tau(tau) -> float:
    tau = float(tau)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return tau


def threshold_means(means, tau: float, absolute: bool = False) -> np.ndarray:
    """Indicator of column means (or their absolute values) that reach tau."""
    means = np.asarray(means, dtype=float)
    stat = np.abs(means) if absolute else means
    return (stat >= tau).astype(np.int8)


def select_plus(Z, tau: float) -> SelectorOutput:
    """eta_j = 1 iff the mean of column j is >= tau."""
    tau = _check_tau(tau)
    return SelectorOutput(threshold_means(as_private_matrix(Z).mean(axis=0), tau), tau)


def select_abs(Z, tau: float) -> SelectorOutput:
    """eta_j = 1 iff the absolute mean of column j is >= tau."""
    tau = _check_tau(tau)
    return SelectorOutput(threshold_means(as_private_matrix(Z).mean(axis=0), tau, True), tau)


def resolve_policy(kind, mech, noise: NoiseModel, a: float, sigma: float, alpha: float,
                   d: int, n: Optional[int] = None, tau: Optional[float] = None) -> ThresholdPolicy:
    """Resolve a threshold and record which guarantee preconditions fail.

    LARGE_A uses tau = C1 / 2 and SMALL_A uses tau = p(2) a / sigma. AUTO picks
    LARGE_A when a >= 2 sigma and SMALL_A otherwise. MANUAL takes ``tau`` as
    given. Violations are reported in ``validity_flags`` and are never fatal.
    """
    kind = PolicyKind(kind)
    mech = Mechanism(mech)
    if kind is PolicyKind.AUTO:
        kind = PolicyKind.LARGE_A if a >= 2 * sigma else PolicyKind.SMALL_A
    c1, p2 = constants(noise)
    signal = p2 * a / sigma
    if kind is PolicyKind.LARGE_A:
        tau_v = c1 / 2
    elif kind is PolicyKind.SMALL_A:
        tau_v = signal
    else:
        if tau is None:
            raise ValueError("MANUAL policy needs an explicit tau")
        tau_v = _check_tau(tau)

    flags = []

    def need(ok, text):
        if not ok:
            flags.append(text)

    large_like = kind is PolicyKind.LARGE_A or (kind is PolicyKind.MANUAL and a >= 2 * sigma)
    if large_like:
        need(a >= 2 * sigma, "regime mismatch: a < 2*sigma for LARGE_A")
        need(c1 - tau_v > 0, "C1 - tau > 0 fails")
        if mech is Mechanism.LOCAL:
            need(tau_v * alpha / (8 * d) <= 1, "tau*alpha/(8d) <= 1 fails")
            need(alpha * (c1 - tau_v) / (8 * d) <= 1, "alpha*(C1-tau)/(8d) <= 1 fails")
    else:
        if mech is Mechanism.LOCAL:
            if a >= 2 * sigma and tau_v < 2 * signal:
                flags.append("tau < 2a/sigma*p(2) holds but regime mismatched (a >= 2*sigma)")
            elif a >= 2 * sigma:
                flags.append("regime mismatch: a >= 2*sigma for SMALL_A")
            need(tau_v < 2 * signal, "tau < 2a/sigma*p(2) fails")
            need(tau_v * alpha / (8 * d) < 1, "tau*alpha/(8d) < 1 fails")
            need(alpha * (signal - tau_v / 2) / (4 * d) <= 1,
                 "alpha*(a/sigma*p(2) - tau/2)/(4d) <= 1 fails")
        else:
            need(a <= 2 * sigma, "regime mismatch: a > 2*sigma for SMALL_A")
            need(tau_v < 2 * signal, "tau < 2p(2)a/sigma fails")
    if kind is PolicyKind.MANUAL and math.isinf(tau_v):
        flags.append("tau is infinite: selector never fires")
    return ThresholdPolicy(kind, tau_v, flags)


class ThresholdSelector(SelectorMixin, BaseEstimator):
    """Keep the columns whose private mean clears a threshold.

    Parameters
    ----------
    tau : float
        Threshold (> 0).
    absolute : bool
        Threshold the absolute column mean (signed supports) instead of the
        raw mean.

    Attributes
    ----------
    column_means_ : ndarray of shape (d,)
    support_ : ndarray of int8, shape (d,)
        Estimated support indicator.
    """

    def __init__(self, tau=0.5, absolute=False):
        self.tau = tau
        self.absolute = absolute

    def fit(self, Z, y=None):
        Z = as_private_matrix(Z)
        self.n_features_in_ = Z.shape[1]
        out = (select_abs if self.absolute else select_plus)(Z, self.tau)
        self.column_means_ = Z.mean(axis=0)
        self.support_ = out.eta_hat
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        return self.support_.astype(bool)
