"""Coordinate-global hypercube mechanism and its exact enumeration oracle.

Each row is reduced to its sign vector x in {-1, 1}^d. With probability
pi_alpha = e^alpha / (e^alpha + 1) the release is uniform on the half-cube
A_x = {z in {-B, B}^d : <z, x> > 0, or <z, x> = 0 and z_1 = B x_1}, otherwise
uniform on its mirror image C_x = -A_x. For even d the first coordinate is
then shrunk by (d - 2) / (2 (d - 1)). B = K_d (e^alpha + 1) / (e^alpha - 1)
makes the release conditionally unbiased for the sign vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._base import PrivateSample, as_rows, check_alpha, check_dimension, sgn
from .mech_local import _as_generator

MECHANISM_ID = "global-hypercube"
EXACT_KD_MAX_D = 64
ENUMERATION_MAX_D = 20

__all__ = [
    "GlobalMechConfig",
    "HypercubeSignMechanism",
    "compute_kd",
    "conditional_mean_exact",
    "dp_certificate_global",
    "enumerate_pmf",
    "even_rescale_factor",
    "half_cube_membership",
    "kd_exact",
    "privatize_global",
    "sample_half_cube",
]


def _check_kd_dimension(d) -> int:
    d = check_dimension(d)
    if d % 2 == 0 and d <= 2:
        raise ValueError(
            f"d={d} is not supported: the even-d branch of the K_d formula gives "
            "1/K_d = 0, so the output magnitude B would be infinite"
        )
    return d


def kd_exact(d: int) -> Fraction:
    """K_d as an exact rational (d <= 64)."""
    d = _check_kd_dimension(d)
    if d > EXACT_KD_MAX_D:
        raise ValueError(f"exact K_d is limited to d <= {EXACT_KD_MAX_D}")
    if d % 2:
        inv = Fraction(math.comb(d - 1, (d - 1) // 2), 2 ** (d - 1))
    else:
        h = d // 2
        inv = Fraction(math.factorial(d - 2) * (d - 2),
                       2 ** (d - 1) * math.factorial(h - 1) * math.factorial(h))
    return 1 / inv


def _log_inv_kd(d: int) -> float:
    if d % 2:
        return math.lgamma(d) - 2.0 * math.lgamma((d + 1) / 2) - (d - 1) * math.log(2.0)
    h = d // 2
    return (math.lgamma(d - 1) + math.log(d - 2) - (d - 1) * math.log(2.0)
            - math.lgamma(h) - math.lgamma(h + 1))


def compute_kd(d: int) -> float:
    """Normaliser K_d: exact rational arithmetic up to d = 64, log-gamma beyond."""
    d = _check_kd_dimension(d)
    if d <= EXACT_KD_MAX_D:
        return float(kd_exact(d))
    return math.exp(-_log_inv_kd(d))


def even_rescale_factor(d: int) -> float:
    return (d - 2) / (2 * (d - 1)) if d % 2 == 0 else 1.0


@dataclass(frozen=True)
class GlobalMechConfig:
    """Parameters of the hypercube mechanism.

    ``b_scale`` multiplies B and exists only as a negative-control hook for
    audits; leave it at 1.
    """

    alpha: float
    d: int
    b_scale: float = 1.0
    pi_alpha: float = field(init=False)
    K_d: float = field(init=False)
    B: float = field(init=False)

    def __post_init__(self):
        alpha = check_alpha(self.alpha)
        d = _check_kd_dimension(self.d)
        kd = compute_kd(d)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "d", d)
        # e^a / (e^a + 1) written to stay finite for large alpha
        object.__setattr__(self, "pi_alpha", 1.0 / (1.0 + math.exp(-alpha)))
        object.__setattr__(self, "K_d", kd)
        object.__setattr__(self, "B", self.b_scale * kd / math.tanh(alpha / 2.0))
        if not (math.isfinite(self.B) and self.B > 0):
            raise ValueError("B must be finite and positive")


def half_cube_membership(z_signs, x_tilde) -> np.ndarray:
    """True where sign pattern z lies in A_x (ties broken on the first coordinate)."""
    z = np.asarray(z_signs)
    x = np.asarray(x_tilde)
    k = np.sum(z * x, axis=-1, dtype=np.int64)
    return (k > 0) | ((k == 0) & (z[..., 0] == x[..., 0]))


def sample_half_cube(x_tilde, orientation, B: float, rng) -> np.ndarray:
    """Uniform draw from A_x ("A") or C_x ("C"), scaled by B.

    A uniform vertex is drawn and negated when it falls in the wrong half.
    Negation maps A_x onto C_x bijectively, so the result is exactly uniform
    with no rejection loop. ``x_tilde`` may be a single sign vector or an
    (m, d) batch; ``orientation`` may be a string or a boolean array (True = A).
    """
    x = np.asarray(x_tilde, dtype=np.int8)
    want_a = np.asarray(orientation == "A" if isinstance(orientation, str) else orientation, dtype=bool)
    if isinstance(orientation, str) and orientation not in ("A", "C"):
        raise ValueError("orientation must be 'A' or 'C'")
    v = 2 * rng.integers(0, 2, size=x.shape, dtype=np.int8) - 1
    flip = half_cube_membership(v, x) != want_a
    v = np.where(flip[..., None], -v, v) if v.ndim > 1 else (-v if flip else v)
    return B * v.astype(float)


def privatize_global(X, cfg: GlobalMechConfig, rng=None, *, check_membership: bool = False) -> PrivateSample:
    """Release one hypercube vertex per row of X.

    ``check_membership`` re-verifies that every draw lies in the half-cube its
    Bernoulli orientation selected (test mode).
    """
    rows = as_rows(X)
    if rows.shape[1] != cfg.d:
        raise ValueError(f"X has {rows.shape[1]} columns, mechanism configured for d={cfg.d}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    x_tilde = sgn(rows)
    y = rng.random(rows.shape[0]) < cfg.pi_alpha
    z_tilde = sample_half_cube(x_tilde, y, cfg.B, rng)
    if check_membership:
        in_a = half_cube_membership(np.sign(z_tilde).astype(np.int8), x_tilde)
        if not np.array_equal(in_a, y):
            raise AssertionError("hypercube draw outside its selected half-cube")
    if cfg.d % 2 == 0:
        z_tilde[:, 0] *= even_rescale_factor(cfg.d)
    return PrivateSample(z_tilde, mechanism=MECHANISM_ID, alpha=cfg.alpha)


def _vertices(d: int) -> np.ndarray:
    codes = np.arange(2**d, dtype=np.int64)[:, None]
    return (2 * ((codes >> np.arange(d)) & 1) - 1).astype(np.int8)


def _pmf_arrays(x, cfg: GlobalMechConfig):
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.d,):
        raise ValueError(f"x must have shape ({cfg.d},)")
    if cfg.d > ENUMERATION_MAX_D:
        raise ValueError(f"enumeration is limited to d <= {ENUMERATION_MAX_D}, got {cfg.d}")
    verts = _vertices(cfg.d)
    in_a = half_cube_membership(verts, sgn(x))
    denom = 2.0 ** (cfg.d - 1)
    probs = np.where(in_a, cfg.pi_alpha / denom, (1.0 - cfg.pi_alpha) / denom)
    return verts, in_a, probs


def enumerate_pmf(x, cfg: GlobalMechConfig) -> dict:
    """Exact law of the unscaled release given X = x, keyed by vertex tuples in {-B, B}^d."""
    verts, _, probs = _pmf_arrays(x, cfg)
    B = cfg.B
    return {tuple(B * float(c) for c in v): float(p) for v, p in zip(verts, probs)}


def dp_certificate_global(cfg: GlobalMechConfig, x, x_prime) -> float:
    """max_z P(z | x) / P(z | x') over every vertex, by enumeration."""
    _, _, p = _pmf_arrays(x, cfg)
    _, _, q = _pmf_arrays(x_prime, cfg)
    return float(np.max(p / q))


def conditional_mean_exact(x, cfg: GlobalMechConfig) -> np.ndarray:
    """E[Z | X = x] by summing the enumerated law, including the even-d shrink."""
    verts, in_a, _ = _pmf_arrays(x, cfg)
    sum_a = verts[in_a].sum(axis=0, dtype=np.int64)
    sum_c = verts[~in_a].sum(axis=0, dtype=np.int64)
    denom = 2.0 ** (cfg.d - 1)
    mean = cfg.B * (cfg.pi_alpha * sum_a + (1.0 - cfg.pi_alpha) * sum_c) / denom
    mean[0] *= even_rescale_factor(cfg.d)
    return mean


class HypercubeSignMechanism(TransformerMixin, BaseEstimator):
    """Coordinate-global alpha-LDP release as a scikit-learn transformer.

    Parameters
    ----------
    alpha : float
        Privacy budget for the whole vector.
    random_state : int, Generator or None

    Attributes
    ----------
    config_ : GlobalMechConfig
    kd_ : float
    bound_ : float
        Output magnitude B.
    """

    def __init__(self, alpha=1.0, random_state=None):
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        rows = as_rows(X)
        self.n_features_in_ = rows.shape[1]
        self.config_ = GlobalMechConfig(self.alpha, self.n_features_in_)
        self.kd_ = self.config_.K_d
        self.bound_ = self.config_.B
        self._rng = _as_generator(self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        return privatize_global(X, self.config_, self._rng).Z
