"""Symmetric, unit-variance, strongly log-concave noise laws on the real line.

A :class:`NoiseModel` bundles the density, distribution function and sampler of
the coordinate noise together with its curvature constants ``c_lower`` (strong
convexity of the potential) and ``c_upper`` (curvature cap, ``None`` when no
finite cap exists). Models are immutable; samplers take the generator as an
argument.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate, special

__all__ = [
    "Divergence",
    "NoiseConstants",
    "NoiseModel",
    "QuadratureError",
    "constants",
    "density_cap",
    "divergence",
    "make_gaussian",
    "make_tilted",
    "mills_tail_bound",
    "sign_mean",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
# sqrt(c) * T >= 7.5 keeps 2 * (1 - Phi(sqrt(c) T)) below 1e-13.
_TAIL_Z = 7.5


class QuadratureError(ArithmeticError):
    """Raised when adaptive quadrature does not reach its tolerance."""


class Divergence(str, enum.Enum):
    KL = "kl"
    CHI2 = "chi2"
    TV = "tv"


@dataclass(frozen=True)
class NoiseModel:
    """Symmetric unit-variance noise law with curvature bounds.

    Attributes:
        name: Identifier, e.g. ``"gaussian"`` or ``"tilted(c=1,lam=0.5)"``.
        c_lower: Strong convexity constant of the potential.
        c_upper: Curvature cap of the potential, or ``None`` if unbounded.
        logpdf: Vectorised log-density.
        cdf: Vectorised distribution function.
        sf: Vectorised survival function ``P(xi > x)``.
        sampler: ``sampler(rng, size)`` returning i.i.d. draws.
    """

    name: str
    c_lower: float
    c_upper: Optional[float]
    logpdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    cdf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sf: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sampler: Callable[[np.random.Generator, object], np.ndarray] = field(repr=False)
    params: dict = field(default_factory=dict, compare=False)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return self.sampler(rng, size)

    @property
    def support_radius(self) -> float:
        """Half-width T with P(|xi| >= T) < 1e-13 by the Gaussian tail cap."""
        return _TAIL_Z / math.sqrt(self.c_lower)


class NoiseConstants(NamedTuple):
    C1: float
    p2: float


def _quad(f, lo, hi, points=None, epsrel=1e-12, epsabs=0.0):
    pts = None
    if points is not None:
        pts = sorted(p for p in points if lo < p < hi) or None
    res = integrate.quad(
        f, lo, hi, points=pts, epsabs=epsabs, epsrel=epsrel, limit=500, full_output=1
    )
    value, abserr = res[0], res[1]
    # a fourth element is QUADPACK's warning message; accept it only if the
    # reported error still meets a loose 1e-7 relative floor
    if len(res) > 3 and abserr > max(epsabs, 1e-7 * abs(value), 1e-15):
        raise QuadratureError(
            f"quadrature on [{lo}, {hi}] did not converge (err={abserr:.3g})"
        )
    return value


def make_gaussian() -> NoiseModel:
    """Standard normal noise, for which c_lower = c_upper = 1."""

    def logpdf(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x - _LOG_SQRT_2PI

    def sampler(rng, size=None):
        return rng.standard_normal(size)

    return NoiseModel(
        name="gaussian",
        c_lower=1.0,
        c_upper=1.0,
        logpdf=logpdf,
        cdf=special.ndtr,
        sf=lambda x: special.ndtr(-np.asarray(x, dtype=float)),
        sampler=sampler,
        params={"family": "gaussian"},
    )


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def make_tilted(c_raw: float, lam: float, tilt: str = "logcosh") -> NoiseModel:
    """Gaussian potential tilted by an even convex term, rescaled to unit variance.

    The raw density is proportional to ``exp(-lam * g(x) - c_raw * x**2 / 2)``
    with ``g = log cosh`` (default) or ``g = |x|`` (``tilt="abs"``). After the
    rescaling ``y = x / sqrt(v0)``, where v0 is the raw variance, the potential's
    curvature is multiplied by ``v0``. ``g = log cosh`` has ``0 <= g'' <= 1``, so
    ``c_upper = (c_raw + lam) * v0``. The ``|x|`` tilt has a kink at zero and
    no finite curvature cap unless ``lam == 0``.
    """
    if not (math.isfinite(c_raw) and math.isfinite(lam)):
        raise ValueError("c_raw and lam must be finite")
    if c_raw <= 0:
        raise ValueError(f"c_raw must be positive, got {c_raw}")
    if lam < 0:
        raise ValueError(f"lam must be non-negative, got {lam}")
    if tilt == "logcosh":
        g = _log_cosh
    elif tilt == "abs":
        g = np.abs
    else:
        raise ValueError(f"unknown tilt {tilt!r}")

    def raw_potential(x):
        x = np.asarray(x, dtype=float)
        return lam * g(x) + 0.5 * c_raw * x * x

    t_raw = (_TAIL_Z + 4.0) / math.sqrt(c_raw)
    z0 = _quad(lambda x: math.exp(-raw_potential(x)), -t_raw, t_raw, points=[0.0])
    v0 = _quad(lambda x: x * x * math.exp(-raw_potential(x)), -t_raw, t_raw, points=[0.0]) / z0
    scale = math.sqrt(v0)
    log_z0 = math.log(z0)

    def logpdf(y):
        y = np.asarray(y, dtype=float)
        return math.log(scale) - raw_potential(scale * y) - log_z0

    c_lower = c_raw * v0
    if tilt == "logcosh" or lam == 0:
        c_upper: Optional[float] = (c_raw + (lam if tilt == "logcosh" else 0.0)) * v0
    else:
        c_upper = None
    radius = (_TAIL_Z + 4.0) / math.sqrt(c_lower)

    def _pdf_scalar(t):
        return math.exp(float(logpdf(t)))

    def _sf_scalar(t):
        if t >= radius:
            return 0.0
        if t <= -radius:
            return 1.0
        if t >= 0:
            return _quad(_pdf_scalar, t, radius, epsrel=1e-11)
        return 0.5 + _quad(_pdf_scalar, t, 0.0, epsrel=1e-11)

    sf_vec = np.vectorize(_sf_scalar, otypes=[float])

    def sf(y):
        out = sf_vec(y)
        return out if np.ndim(out) else float(out)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        out = sf_vec(-y)
        return out if np.ndim(out) else float(out)

    # N(0, 1/c_raw) proposal; the tilt satisfies g >= g(0) = 0 so exp(-lam*g) <= 1
    # is a valid acceptance ratio, with mean acceptance z0 * sqrt(c_raw / (2 pi)).
    proposal_sd = 1.0 / math.sqrt(c_raw)
    acceptance = z0 * math.sqrt(c_raw / (2.0 * math.pi))

    def sampler(rng, size=None):
        total = 1 if size is None else int(np.prod(size))
        out = np.empty(total)
        filled = 0
        while filled < total:
            need = total - filled
            batch = int(need / acceptance * 1.1) + 16
            x = rng.standard_normal(batch) * proposal_sd
            keep = x[rng.random(batch) < np.exp(-lam * g(x))]
            take = min(need, keep.size)
            out[filled : filled + take] = keep[:take]
            filled += take
        out /= scale
        return float(out[0]) if size is None else out.reshape(size)

    return NoiseModel(
        name=f"tilted(c={c_raw:g},lam={lam:g},{tilt})",
        c_lower=c_lower,
        c_upper=c_upper,
        logpdf=logpdf,
        cdf=cdf,
        sf=sf,
        sampler=sampler,
        params={"family": "tilted", "c_raw": c_raw, "lam": lam, "tilt": tilt,
                "raw_variance": v0, "acceptance": acceptance},
    )


def sign_mean(m: NoiseModel, a_over_sigma: float) -> float:
    """E[sgn(a + sigma * xi)] = 2 F(a / sigma) - 1 for the symmetric sign."""
    if a_over_sigma < 0:
        raise ValueError("a_over_sigma must be non-negative")
    return float(1.0 - 2.0 * m.sf(a_over_sigma))


def constants(m: NoiseModel) -> NoiseConstants:
    """The constants C1 = 2 Phi(2 sqrt(c)) - 1 and p2 = p(2)."""
    c1 = 2.0 * special.ndtr(2.0 * math.sqrt(m.c_lower)) - 1.0
    return NoiseConstants(C1=float(c1), p2=float(m.pdf(2.0)))


def density_cap(m: NoiseModel, x):
    """Upper envelope exp(-c x^2 / 2) / sqrt(2) of any admissible density."""
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * m.c_lower * x * x) / math.sqrt(2.0)


def mills_tail_bound(m: NoiseModel, r):
    """Upper bound 2 (1 - Phi(sqrt(c) r)) on P(|xi| >= r)."""
    r = np.asarray(r, dtype=float)
    return 2.0 * special.ndtr(-math.sqrt(m.c_lower) * r)


def divergence(m: NoiseModel, a_over_sigma: float, kind) -> float:
    """Divergence between the law of xi and the law of xi + a_over_sigma.

    Computed by adaptive quadrature on a window wide enough that the neglected
    tails are below 1e-13 by the Gaussian cap.

    Raises:
        ValueError: ``a_over_sigma <= 0``, or CHI2 on a model without c_upper.
        QuadratureError: the integrator did not converge.
    """
    kind = Divergence(kind)
    a = float(a_over_sigma)
    if not a > 0:
        raise ValueError("a_over_sigma must be positive")
    if kind is Divergence.CHI2 and m.c_upper is None:
        raise ValueError(f"chi-square needs a finite curvature cap; {m.name} has none")

    lo = -m.support_radius - 3.0 * a
    hi = m.support_radius + 4.0 * a
    # pointwise logpdf keeps ratios finite deep in the tails
    lp = lambda x: float(m.logpdf(x))  # noqa: E731
    breaks = [0.0, a, 0.5 * a, 2.0 * a]

    if kind is Divergence.KL:
        val = _quad(lambda x: math.exp(lp(x)) * (lp(x) - lp(x - a)), lo, hi, breaks, epsrel=1e-10)
    elif kind is Divergence.CHI2:
        def integrand(x):
            l0 = lp(x)
            return math.exp(l0) * math.expm1(lp(x - a) - l0) ** 2
        val = _quad(integrand, lo, hi, breaks, epsrel=1e-10)
    else:
        val = 0.5 * _quad(lambda x: abs(math.exp(lp(x)) - math.exp(lp(x - a))), lo, hi,
                          breaks, epsrel=1e-10)
    return max(val, 0.0)
