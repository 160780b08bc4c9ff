"""Sparse mean parameters, raw data generation and Hamming losses."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .noise import NoiseModel

__all__ = [
    "RawSample",
    "SparseMean",
    "Variant",
    "generate",
    "hamming",
    "normalized_hamming",
    "support_indicator",
    "worst_case_theta",
]


class Variant(str, enum.Enum):
    PLUS = "PLUS"
    SIGNED = "SIGNED"


@dataclass(frozen=True)
class SparseMean:
    """An (s, a)-sparse mean vector with its class membership."""

    entries: np.ndarray
    s: int
    a: float
    variant: Variant = Variant.PLUS

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "variant", Variant(self.variant))
        if entries.ndim != 1:
            raise ValueError("entries must be a vector")
        if not 1 <= self.s <= entries.size:
            raise ValueError(f"need 1 <= s <= d, got s={self.s}, d={entries.size}")
        if not self.a > 0:
            raise ValueError("a must be positive")
        nz = entries[entries != 0]
        if nz.size > self.s:
            raise ValueError(f"support size {nz.size} exceeds s={self.s}")
        mags = nz if self.variant is Variant.PLUS else np.abs(nz)
        if np.any(mags < self.a):
            raise ValueError(f"nonzero entries violate the {self.variant.value} separation a={self.a}")

    @property
    def d(self) -> int:
        return self.entries.size

    @property
    def support(self) -> np.ndarray:
        return support_indicator(self.entries)


@dataclass(frozen=True)
class RawSample:
    """n x d matrix of observations X = theta + sigma * xi."""

    rows: np.ndarray
    sigma: float
    noise: Optional[NoiseModel] = None

    @property
    def shape(self):
        return self.rows.shape


def support_indicator(theta) -> np.ndarray:
    """eta_j = 1 exactly when theta_j != 0, as an int8 vector."""
    return (np.asarray(theta) != 0).astype(np.int8)


def worst_case_theta(
    d: int,
    s: int,
    a: float,
    variant=Variant.PLUS,
    sign_pattern: Optional[Sequence[int]] = None,
    support_placement: Optional[Sequence[int]] = None,
) -> SparseMean:
    """theta with exactly ``s`` entries of magnitude ``a``.

    The support defaults to the first ``s`` coordinates and the signs to ``+``.
    ``sign_pattern`` is honoured only for the SIGNED variant.
    """
    variant = Variant(variant)
    if not 1 <= s <= d:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={d}")
    idx = np.arange(s) if support_placement is None else np.asarray(support_placement, dtype=int)
    if idx.shape != (s,) or len(set(idx.tolist())) != s or idx.min() < 0 or idx.max() >= d:
        raise ValueError("support_placement must list s distinct indices in [0, d)")
    signs = np.ones(s)
    if variant is Variant.SIGNED and sign_pattern is not None:
        signs = np.sign(np.asarray(sign_pattern, dtype=float))
        if signs.shape != (s,) or np.any(signs == 0):
            raise ValueError("sign_pattern must hold s nonzero signs")
    theta = np.zeros(d)
    theta[idx] = a * signs
    return SparseMean(theta, s=s, a=a, variant=variant)


def generate(theta: SparseMean, n: int, sigma: float, noise: NoiseModel,
             rng: np.random.Generator) -> RawSample:
    """Draw n i.i.d. rows theta + sigma * xi with xi from ``noise``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not sigma > 0:
        raise ValueError("sigma must be positive; the model needs genuine noise")
    xi = noise.sample(rng, (n, theta.d))
    return RawSample(theta.entries + sigma * xi, sigma=sigma, noise=noise)


def hamming(eta_hat, eta) -> int:
    """Number of coordinates where the two indicator vectors differ."""
    eta_hat = np.asarray(eta_hat)
    eta = np.asarray(eta)
    if eta_hat.shape != eta.shape:
        raise ValueError(f"dimension mismatch: {eta_hat.shape} vs {eta.shape}")
    return int(np.count_nonzero(eta_hat != eta))


def normalized_hamming(eta_hat, eta, s: int) -> float:
    return hamming(eta_hat, eta) / s
