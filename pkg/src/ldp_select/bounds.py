"""Closed-form risk bounds and critical signal levels.

Every evaluator is a pure function of a :class:`BoundInput`. Upper bounds take
the support size |S| = s, which is the worst case over the parameter class.
Lower bounds built on Fano's method are clamped at zero because a negative
bracket carries no information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Tuple

from .mech_global import compute_kd
from .noise import Divergence, NoiseModel, constants, divergence
from .selectors import PolicyKind
from .sparse_model import Variant

__all__ = [
    "BoundInput",
    "CriticalValues",
    "chi2_for",
    "critical_values",
    "fano_lower_bound_afr",
    "fano_lower_bound_exact_recovery",
    "lower_bound_local",
    "upper_bound_global",
    "upper_bound_local",
]


@dataclass(frozen=True)
class BoundInput:
    n: int
    d: int
    s: int
    a: float
    sigma: float
    alpha: float
    c: float
    c_plus: Optional[float]
    C1: float
    p2: float

    def __post_init__(self):
        if not 1 <= self.s <= self.d:
            raise ValueError(f"need 1 <= s <= d, got s={self.s}, d={self.d}")
        for name in ("n", "a", "sigma", "alpha", "c", "C1", "p2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_noise(cls, noise: NoiseModel, *, n, d, s, a, sigma, alpha) -> "BoundInput":
        c1, p2 = constants(noise)
        return cls(n=n, d=d, s=s, a=a, sigma=sigma, alpha=alpha,
                   c=noise.c_lower, c_plus=noise.c_upper, C1=c1, p2=p2)

    @property
    def effective_sample_size(self) -> float:
        """N = n alpha^2 / d^2."""
        return self.n * self.alpha**2 / self.d**2

    def with_(self, **changes) -> "BoundInput":
        return replace(self, **changes)


class CriticalValues(NamedTuple):
    a_star_local: float
    a_star_global: float
    L: float


def _exp(x: float) -> float:
    return math.exp(x) if x > -745 else 0.0


def lower_bound_local(inp: BoundInput) -> float:
    """Risk lower bound over all coordinate-local mechanisms and separable selectors.

    (1 - s/d) exp(-4 n (e^{alpha/d} - 1)^2 min(c_+ a^2 / (4 sigma^2), 1))
    """
    if inp.c_plus is None:
        raise ValueError("lower_bound_local needs a finite curvature cap c_plus")
    shrink = math.expm1(inp.alpha / inp.d) ** 2
    m = min(inp.c_plus * inp.a**2 / (4 * inp.sigma**2), 1.0)
    return (1 - inp.s / inp.d) * _exp(-4 * inp.n * shrink * m)


def _default_tau(inp: BoundInput, regime: PolicyKind, tau) -> float:
    if tau is not None:
        return float(tau)
    if regime is PolicyKind.LARGE_A:
        return inp.C1 / 2
    return inp.p2 * inp.a / inp.sigma


def _local_flags(inp: BoundInput, regime: PolicyKind, tau: float) -> List[str]:
    d, alpha = inp.d, inp.alpha
    flags = []
    if regime is PolicyKind.LARGE_A:
        if inp.a < 2 * inp.sigma:
            flags.append("a >= 2*sigma fails")
        if not inp.C1 - tau > 0:
            flags.append("C1 - tau > 0 fails")
        if not tau * alpha / (8 * d) <= 1:
            flags.append("tau*alpha/(8d) <= 1 fails")
        if not alpha * (inp.C1 - tau) / (8 * d) <= 1:
            flags.append("alpha*(C1-tau)/(8d) <= 1 fails")
    else:
        signal = inp.p2 * inp.a / inp.sigma
        if not tau < 2 * signal:
            flags.append("tau < 2a/sigma*p(2) fails")
        if not tau * alpha / (8 * d) < 1:
            flags.append("tau*alpha/(8d) < 1 fails")
        if not alpha * (signal - tau / 2) / (4 * d) <= 1:
            flags.append("alpha*(a/sigma*p(2) - tau/2)/(4d) <= 1 fails")
    return flags


def upper_bound_local(inp: BoundInput, regime="LARGE_A", variant="PLUS",
                      tau: Optional[float] = None) -> Tuple[float, List[str]]:
    """Risk upper bound of the threshold selector on Laplace-sign releases.

    Returns ``(bound, flags)``; flags list the violated tau preconditions.
    The SIGNED class doubles the bound.
    """
    regime = PolicyKind(regime)
    variant = Variant(variant)
    if regime not in (PolicyKind.LARGE_A, PolicyKind.SMALL_A):
        raise ValueError("regime must be LARGE_A or SMALL_A")
    tau = _default_tau(inp, regime, tau)
    n, d, s = inp.n, inp.d, inp.s
    priv = n * inp.alpha**2 / d**2
    null_part = _exp(-n * tau**2 / 2**3) + _exp(-tau**2 * priv / 2**7)
    if regime is PolicyKind.LARGE_A:
        gap = inp.C1 - tau
        signal_part = _exp(-n * gap**2 / 2**3) + _exp(-gap**2 * priv / 2**7)
    else:
        gap = inp.p2 * inp.a / inp.sigma - tau / 2
        signal_part = _exp(-n * gap**2 / 2**3) + _exp(-gap**2 * priv / 2**5)
    bound = (d - s) / s * null_part + signal_part
    if variant is Variant.SIGNED:
        bound *= 2
    return bound, _local_flags(inp, regime, tau)


def upper_bound_global(inp: BoundInput, regime="LARGE_A", variant="PLUS",
                       tau: Optional[float] = None) -> Tuple[float, List[str]]:
    """Risk upper bound of the threshold selector on hypercube releases.

    With the default thresholds this is (d/s) exp(-C1^2 n / (8 B^2)) for
    LARGE_A and (d/s) exp(-n p(2)^2 a^2 / (2 sigma^2 B^2)) for SMALL_A, where
    B = K_d (e^alpha + 1) / (e^alpha - 1).
    """
    regime = PolicyKind(regime)
    variant = Variant(variant)
    if regime not in (PolicyKind.LARGE_A, PolicyKind.SMALL_A):
        raise ValueError("regime must be LARGE_A or SMALL_A")
    B = compute_kd(inp.d) / math.tanh(inp.alpha / 2)
    tau = _default_tau(inp, regime, tau)
    n, d, s = inp.n, inp.d, inp.s
    flags = []
    if regime is PolicyKind.LARGE_A:
        gap = inp.C1 - tau
        if inp.a < 2 * inp.sigma:
            flags.append("a >= 2*sigma fails")
        if not gap > 0:
            flags.append("C1 - tau > 0 fails")
    else:
        gap = 2 * inp.p2 * inp.a / inp.sigma - tau
        if inp.a > 2 * inp.sigma:
            flags.append("a <= 2*sigma fails")
        if not gap > 0:
            flags.append("tau < 2p(2)a/sigma fails")
    bound = (d - s) / s * _exp(-n * tau**2 / (2 * B**2)) + _exp(-n * gap**2 / (2 * B**2))
    if variant is Variant.SIGNED:
        bound *= 2
    return bound, flags


def fano_lower_bound_exact_recovery(inp: BoundInput, chi2: float) -> Tuple[float, List[str]]:
    """(1/4)(1 - 2 n (e^alpha - 1)^2 chi2 / (d log d)), clamped at 0.

    Lower-bounds the unnormalised Hamming risk over all non-interactive
    alpha-LDP mechanisms. Stated for d >= 4.
    """
    if chi2 < 0:
        raise ValueError("chi2 must be non-negative")
    flags = [] if inp.d >= 4 else ["d >= 4 fails"]
    if inp.d < 2:
        return 0.0, flags
    bracket = 1 - 2 * inp.n * math.expm1(inp.alpha) ** 2 * chi2 / (inp.d * math.log(inp.d))
    return max(0.0, 0.25 * bracket), flags


def fano_lower_bound_afr(inp: BoundInput, chi2: Optional[float] = None) -> Tuple[float, List[str]]:
    """Fano bound on the normalised risk using blocks of s coordinates.

    (1/4)(1 - 2 n (e^alpha - 1)^2 ((chi2 + 1)^s - 1) / (m log m)) with
    m = floor(d / s), clamped at 0. ``chi2`` defaults to exp(c_+ a^2/sigma^2) - 1.
    """
    m = inp.d // inp.s
    if m < 2:
        raise ValueError(f"floor(d/s) must be >= 2, got {m}")
    if chi2 is None:
        if inp.c_plus is None:
            raise ValueError("chi2 not given and no curvature cap to bound it")
        chi2 = math.expm1(inp.c_plus * (inp.a / inp.sigma) ** 2)
    flags = [] if inp.d / inp.s <= 4 else ["d/s <= 4 fails (condition as stated)"]
    log_tensor = inp.s * math.log1p(chi2)
    chi2_s = math.expm1(log_tensor) if log_tensor < 700 else math.inf
    bracket = 1 - 2 * inp.n * math.expm1(inp.alpha) ** 2 * chi2_s / (m * math.log(m))
    return max(0.0, 0.25 * bracket), flags


def critical_values(inp: BoundInput) -> CriticalValues:
    """Phase-transition levels for the two mechanism classes.

    a*_local = sigma d / (alpha sqrt(n)); a*_global = sigma / (16 L)
    sqrt(d log d / (n alpha^2)) with L = (exp(2 c_+) - 1) / 2.
    """
    a_local = inp.sigma * inp.d / (inp.alpha * math.sqrt(inp.n))
    if inp.c_plus is None:
        return CriticalValues(a_local, math.nan, math.nan)
    L = math.expm1(2 * inp.c_plus) / 2
    a_global = inp.sigma / (16 * L) * math.sqrt(inp.d * math.log(inp.d) / (inp.n * inp.alpha**2))
    return CriticalValues(a_local, a_global, L)


def chi2_for(noise: NoiseModel, a_over_sigma: float) -> float:
    """chi^2 between the noise law and its shift; closed form for the Gaussian."""
    if noise.params.get("family") == "gaussian":
        return math.expm1(a_over_sigma**2)
    return divergence(noise, a_over_sigma, Divergence.CHI2)
