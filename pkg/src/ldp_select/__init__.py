"""Support recovery of sparse means under local differential privacy."""

__version__ = "0.1.0"

from .bounds import (BoundInput, CriticalValues, chi2_for, critical_values,
                     fano_lower_bound_afr, fano_lower_bound_exact_recovery,
                     lower_bound_local, upper_bound_global, upper_bound_local)
from .mech_global import (GlobalMechConfig, HypercubeSignMechanism, compute_kd,
                          conditional_mean_exact, dp_certificate_global, enumerate_pmf,
                          kd_exact, privatize_global, sample_half_cube)
from .mech_local import (LaplaceSignMechanism, LocalMechConfig, dp_ratio_certificate_local,
                         privatize_local)
from .noise import (Divergence, NoiseModel, QuadratureError, constants, density_cap,
                    divergence, make_gaussian, make_tilted, mills_tail_bound, sign_mean)
from .risk import ExperimentConfig, RiskEstimate, estimate_risk, run_trial, sweep
from .selectors import (Mechanism, PolicyKind, ThresholdPolicy, ThresholdSelector,
                        resolve_policy, select_abs, select_plus)
from .sparse_model import (SparseMean, Variant, generate, hamming, normalized_hamming,
                           worst_case_theta)
