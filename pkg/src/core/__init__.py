"""Core modules - kernel, product-limit engine, estimators, uncertainty, simulation, services."""

from src.core.analysis_service import (
    AnalysisService,
    CompareReport,
    CurveExport,
    EstimateReport,
    percent_difference,
)
from src.core.baselines import AftFamily, AftFit, aft_fit, aft_survival, km_naive
from src.core.estimators import (
    STANDARD_METHODS,
    CovariateEstimator,
    GmiEstimator,
    KaplanMeierEstimator,
    ParametricEstimator,
    ProposedEstimator,
    make_estimator,
    standard_estimators,
)
from src.core.export_service import ExportService
from src.core.gmi_estimator import (
    conditional_survival_gmi,
    covariate_survival_gmi,
    influence_values,
    plugin_variance,
    survival_gmi,
    survival_gmi_curve,
)
from src.core.kernel import BandwidthRule, KernelSpec, default_bandwidth, silverman_kernel
from src.core.scenario_runner import (
    ScenarioGrid,
    ScenarioResult,
    SimScenario,
    build_scenarios,
    grid_frame,
    run_grid,
    run_scenario,
)
from src.core.simulation import (
    FrailtyModel,
    apply_censoring,
    calibrate_alpha,
    calibrate_tau,
    closed_form_survival,
    sample_pairs,
    synthetic_trial_dataset,
    true_survival,
)
from src.core.uncertainty import (
    BootstrapConfig,
    bootstrap_distribution,
    bootstrap_se,
    loglog_ci,
    threshold_test,
    two_group_wald,
    wald_difference,
    wald_test,
)

__all__ = [
    "AnalysisService",
    "CompareReport",
    "CurveExport",
    "EstimateReport",
    "percent_difference",
    "AftFamily",
    "AftFit",
    "aft_fit",
    "aft_survival",
    "km_naive",
    "STANDARD_METHODS",
    "CovariateEstimator",
    "GmiEstimator",
    "KaplanMeierEstimator",
    "ParametricEstimator",
    "ProposedEstimator",
    "make_estimator",
    "standard_estimators",
    "ExportService",
    "conditional_survival_gmi",
    "covariate_survival_gmi",
    "influence_values",
    "plugin_variance",
    "survival_gmi",
    "survival_gmi_curve",
    "BandwidthRule",
    "KernelSpec",
    "default_bandwidth",
    "silverman_kernel",
    "ScenarioGrid",
    "ScenarioResult",
    "SimScenario",
    "build_scenarios",
    "grid_frame",
    "run_grid",
    "run_scenario",
    "FrailtyModel",
    "apply_censoring",
    "calibrate_alpha",
    "calibrate_tau",
    "closed_form_survival",
    "sample_pairs",
    "synthetic_trial_dataset",
    "true_survival",
    "BootstrapConfig",
    "bootstrap_distribution",
    "bootstrap_se",
    "loglog_ci",
    "threshold_test",
    "two_group_wald",
    "wald_difference",
    "wald_test",
]
