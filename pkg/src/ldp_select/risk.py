"""Monte Carlo estimation of the normalised Hamming risk and parameter sweeps.

A trial generates data at the worst-case mean (first s coordinates equal to
a), privatises it, thresholds the column means and scores the result. Trial
``i`` draws from its own Philox stream keyed by ``(seed, i)``. Per-trial
losses land in index order and are reduced sequentially, so results do not
depend on how many threads run the trials.
"""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .bounds import (BoundInput, chi2_for, critical_values, fano_lower_bound_afr,
                     fano_lower_bound_exact_recovery, lower_bound_local,
                     upper_bound_global, upper_bound_local)
from .mech_global import GlobalMechConfig, privatize_global
from .mech_local import LocalMechConfig, privatize_local
from .noise import NoiseModel, make_gaussian, make_tilted
from .selectors import Mechanism, PolicyKind, ThresholdPolicy, resolve_policy, threshold_means
from .sparse_model import Variant, generate, normalized_hamming, worst_case_theta

__all__ = [
    "ExperimentConfig",
    "RiskEstimate",
    "SWEEP_AXES",
    "SweepRow",
    "bound_values",
    "estimate_risk",
    "make_noise",
    "run_trial",
    "sweep",
    "trial_generator",
]

THREADS_ENV = "LDP_SELECT_THREADS"
# rows per chunk are CHUNK_ELEMS // d; fixed so output never depends on threads
CHUNK_ELEMS = 1 << 20
SWEEP_AXES = ("A", "N", "ALPHA", "D")


@functools.lru_cache(maxsize=32)
def _noise_cached(key) -> NoiseModel:
    spec = dict(key)
    family = spec.get("family", "gaussian")
    if family == "gaussian":
        return make_gaussian()
    if family == "tilted":
        return make_tilted(float(spec["c_raw"]), float(spec["lam"]), spec.get("tilt", "logcosh"))
    raise ValueError(f"unknown noise family {family!r}")


def make_noise(spec) -> NoiseModel:
    """Build a noise model from ``{"family": "gaussian"}`` or
    ``{"family": "tilted", "c_raw": .., "lam": .., "tilt": ..}``."""
    if isinstance(spec, NoiseModel):
        return spec
    if isinstance(spec, str):
        spec = {"family": spec}
    return _noise_cached(tuple(sorted(spec.items())))


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    s: int
    n: int
    a: float
    sigma: float = 1.0
    alpha: float = 1.0
    noise: dict = field(default_factory=lambda: {"family": "gaussian"})
    mechanism: str = "LOCAL"
    selector: str = "PLUS"
    policy: str = "AUTO"
    tau: Optional[float] = None
    variant: str = "PLUS"
    signs: Optional[Sequence[int]] = None
    trials: int = 100
    seed: int = 0
    sign_convention: str = "symmetric"

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism).value)
        object.__setattr__(self, "policy", PolicyKind(self.policy).value)
        object.__setattr__(self, "variant", Variant(self.variant).value)
        if self.selector not in ("PLUS", "ABS"):
            raise ValueError(f"selector must be PLUS or ABS, got {self.selector!r}")
        for name in ("d", "s", "n", "trials"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        if not 1 <= self.s <= self.d:
            raise ValueError(f"need 1 <= s <= d, got s={self.s}, d={self.d}")
        if not (self.a > 0 and self.sigma > 0 and self.alpha > 0):
            raise ValueError("a, sigma and alpha must be positive")
        if self.signs is not None:
            object.__setattr__(self, "signs", tuple(int(v) for v in self.signs))
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.mechanism == "GLOBAL":
            GlobalMechConfig(self.alpha, self.d)
        else:
            LocalMechConfig(self.alpha, self.d, self.sign_convention)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["signs"] is not None:
            out["signs"] = list(out["signs"])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def noise_model(self) -> NoiseModel:
        return make_noise(self.noise)

    def resolved_policy(self) -> ThresholdPolicy:
        pol = resolve_policy(self.policy, self.mechanism, self.noise_model(), self.a,
                             self.sigma, self.alpha, self.d, self.n, tau=self.tau)
        if self.sign_convention != "symmetric":
            pol.validity_flags.append("binary sign convention: thresholds assume symmetric signs")
        return pol


@dataclass(frozen=True)
class RiskEstimate:
    mean_normalized_loss: float
    std_error: float
    trials: int
    per_trial_losses: Optional[np.ndarray] = None
    validity_flags: List[str] = field(default_factory=list)


def trial_generator(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based stream for one trial."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial_index),))
    return np.random.Generator(np.random.Philox(ss))


def _column_means(cfg: ExperimentConfig, theta, noise: NoiseModel, rng) -> np.ndarray:
    if cfg.mechanism == "LOCAL":
        mcfg = LocalMechConfig(cfg.alpha, cfg.d, cfg.sign_convention)
        release = functools.partial(privatize_local, cfg=mcfg)
    else:
        mcfg = GlobalMechConfig(cfg.alpha, cfg.d)
        release = functools.partial(privatize_global, cfg=mcfg)
    rows_per_chunk = max(1, CHUNK_ELEMS // cfg.d)
    sums = np.zeros(cfg.d)
    done = 0
    while done < cfg.n:
        m = min(rows_per_chunk, cfg.n - done)
        X = generate(theta, m, cfg.sigma, noise, rng)
        sums += release(X, rng=rng).Z.sum(axis=0)
        done += m
    return sums / cfg.n


def run_trial(cfg: ExperimentConfig, trial_index: int, *, policy: Optional[ThresholdPolicy] = None) -> float:
    """Normalised Hamming loss of one simulated run."""
    noise = cfg.noise_model()
    policy = policy or cfg.resolved_policy()
    theta = worst_case_theta(cfg.d, cfg.s, cfg.a, cfg.variant, cfg.signs)
    rng = trial_generator(cfg.seed, trial_index)
    means = _column_means(cfg, theta, noise, rng)
    eta_hat = threshold_means(means, policy.tau, absolute=cfg.selector == "ABS")
    return normalized_hamming(eta_hat, theta.support, cfg.s)


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, int(threads))


def estimate_risk(cfg: ExperimentConfig, threads: Optional[int] = None,
                  keep_losses: bool = False) -> RiskEstimate:
    """Mean normalised loss over ``cfg.trials`` trials with its standard error."""
    if cfg.trials < 2:
        raise ValueError("estimate_risk needs at least 2 trials")
    policy = cfg.resolved_policy()
    run = functools.partial(run_trial, cfg, policy=policy)
    n_threads = _resolve_threads(threads)
    if n_threads == 1:
        losses = [run(i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            losses = list(pool.map(run, range(cfg.trials)))
    losses = np.asarray(losses, dtype=float)
    mean = float(np.mean(losses))
    se = float(np.std(losses, ddof=1) / math.sqrt(cfg.trials))
    return RiskEstimate(mean, se, cfg.trials, losses if keep_losses else None,
                        list(policy.validity_flags))


@dataclass
class SweepRow:
    axis_name: str
    axis_value: float
    config: ExperimentConfig
    estimate: Optional[RiskEstimate]
    tau: float = math.nan
    lb_local: float = math.nan
    ub_matched: float = math.nan
    fano_er: float = math.nan
    fano_afr: float = math.nan
    a_star_local: float = math.nan
    a_star_global: float = math.nan
    flags: List[str] = field(default_factory=list)
    error: Optional[str] = None


def _regime_of(cfg: ExperimentConfig, policy: ThresholdPolicy) -> str:
    if policy.kind in (PolicyKind.LARGE_A, PolicyKind.SMALL_A):
        return policy.kind.value
    return "LARGE_A" if cfg.a >= 2 * cfg.sigma else "SMALL_A"


def bound_values(cfg: ExperimentConfig, policy: Optional[ThresholdPolicy] = None) -> dict:
    """Every bound the theory offers for this configuration, with flags."""
    noise = cfg.noise_model()
    policy = policy or cfg.resolved_policy()
    inp = BoundInput.from_noise(noise, n=cfg.n, d=cfg.d, s=cfg.s, a=cfg.a,
                                sigma=cfg.sigma, alpha=cfg.alpha)
    flags: List[str] = []
    out = {"tau": policy.tau}
    out["lb_local"] = lower_bound_local(inp) if inp.c_plus is not None else math.nan
    regime = _regime_of(cfg, policy)
    variant = "SIGNED" if cfg.selector == "ABS" else "PLUS"
    manual_tau = policy.tau if policy.kind is PolicyKind.MANUAL else None
    ub_fn = upper_bound_local if cfg.mechanism == "LOCAL" else upper_bound_global
    ub, ub_flags = ub_fn(inp, regime, variant, tau=manual_tau)
    out["ub_matched"] = ub
    flags += [f"ub: {f}" for f in ub_flags]
    chi2 = chi2_for(noise, cfg.a / cfg.sigma) if noise.c_upper is not None else math.nan
    if math.isnan(chi2):
        out["fano_er"] = out["fano_afr"] = math.nan
    else:
        fer, fer_flags = fano_lower_bound_exact_recovery(inp, chi2)
        out["fano_er"] = fer
        flags += [f"fano_er: {f}" for f in fer_flags]
        if cfg.d // cfg.s >= 2:
            fafr, fafr_flags = fano_lower_bound_afr(inp, chi2)
            out["fano_afr"] = fafr
            flags += [f"fano_afr: {f}" for f in fafr_flags]
        else:
            out["fano_afr"] = math.nan
    cv = critical_values(inp)
    out["a_star_local"] = cv.a_star_local
    out["a_star_global"] = cv.a_star_global
    out["flags"] = flags
    return out


def _apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "A":
        return cfg.replace(a=float(value))
    if axis == "ALPHA":
        return cfg.replace(alpha=float(value))
    if axis == "N":
        return cfg.replace(n=int(value))
    if axis == "D":
        return cfg.replace(d=int(value))
    raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")


def sweep(base_cfg: ExperimentConfig, axis: str, grid: Sequence, threads: Optional[int] = None,
          keep_losses: bool = False) -> List[SweepRow]:
    """One risk estimate plus bound values per grid point.

    A failing grid point records its error in the row and the sweep goes on.
    """
    axis = str(axis).upper()
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    if len(grid) == 0:
        raise ValueError("grid must be non-empty")
    rows = []
    for value in grid:
        row = SweepRow(axis, value, base_cfg, None)
        try:
            cfg = _apply_axis(base_cfg, axis, value)
            row.config = cfg
            policy = cfg.resolved_policy()
            est = estimate_risk(cfg, threads=threads, keep_losses=keep_losses)
            row.estimate = est
            bv = bound_values(cfg, policy)
            row.flags = list(est.validity_flags) + bv.pop("flags")
            for k, v in bv.items():
                setattr(row, k, v)
        except (ValueError, ArithmeticError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
