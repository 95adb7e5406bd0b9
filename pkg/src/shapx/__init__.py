"""Exact SHAP explanations via expectation oracles, with reduction and audit tooling."""

from __future__ import annotations

from .distributions import (
    EmpiricalDataset,
    NaiveBayesNet,
    ProductDistribution,
    conditional_expectation,
    event_probability,
    nbn_posterior,
)
from .empirical import (
    Pp2Cnf,
    QuasiSymmetricAssignment,
    build_pp2cnf,
    empirical_shap_direct,
    empirical_shap_via_pp2cnf,
    pp2cnf_expectation,
    pp2cnf_expectation_via_shap,
    subset_polynomial,
)
from .engine import (
    ShapReport,
    add_report_hook,
    collect_vk,
    project_and_shap,
    shap_all,
    shap_brute_permutation,
    shap_brute_subset,
    shap_reduction,
)
from .errors import (
    CapacityError,
    ModelFormatError,
    PrecisionAuditError,
    ReductionMismatch,
    ShapxError,
    SignatureError,
    StructureError,
    ZeroProbabilityError,
)
from .gadgets import (
    NumparInstance,
    count_partitions_via_expectation,
    logistic_gadget,
    nbn_gadget,
    numpar_decide_via_shap,
)
from .models import (
    CnfFormula,
    DdnnfCircuit,
    EnsembleModel,
    FactorizationMachine,
    LinearModel,
    LogisticModel,
    TreeModel,
    evaluate,
    expectation,
)
from .treeshap import AuditFinding, audit, correct_expvalue, expvalue

__version__ = "0.1.0"
