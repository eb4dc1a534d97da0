"""Multi-strand threshold-signed chain simulator."""

from ._unitychain import (
    analyze_log,
    canonical_scenario,
    dkg_sign_verify,
    field_modulus,
    kendall_tau,
    majority_threshold,
    reconstruct_secret,
    run_scenario,
    split_secret,
    validate_scenario,
)

__all__ = [
    "analyze_log",
    "canonical_scenario",
    "dkg_sign_verify",
    "field_modulus",
    "kendall_tau",
    "majority_threshold",
    "reconstruct_secret",
    "run_scenario",
    "split_secret",
    "validate_scenario",
]
