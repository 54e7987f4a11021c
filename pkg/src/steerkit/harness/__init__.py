"""Sampling, verification campaigns and reports."""

from __future__ import annotations

from .report import DISCLAIMER, TrialRecord, VerificationReport
from .sampling import (
    InstanceSpec,
    Sampler,
    random_povm_projective,
    random_pure_state,
    random_state,
    random_unitary,
    sample_random_bipartite,
    sample_random_ma,
    sample_random_sa,
    sample_random_state,
)
from .verify import (
    CHECKS,
    run_campaign,
    thread_cap,
    verify_appc,
    verify_eq7,
    verify_obs1,
    verify_result1,
    verify_result2,
    verify_result3,
    verify_result4,
    verify_result5,
    verify_result6,
    verify_sr_le_ir,
)

__all__ = [
    "DISCLAIMER",
    "TrialRecord",
    "VerificationReport",
    "InstanceSpec",
    "Sampler",
    "random_povm_projective",
    "random_pure_state",
    "random_state",
    "random_unitary",
    "sample_random_bipartite",
    "sample_random_ma",
    "sample_random_sa",
    "sample_random_state",
    "CHECKS",
    "run_campaign",
    "thread_cap",
    "verify_appc",
    "verify_eq7",
    "verify_obs1",
    "verify_result1",
    "verify_result2",
    "verify_result3",
    "verify_result4",
    "verify_result5",
    "verify_result6",
    "verify_sr_le_ir",
]
