"""Kernel regression with an m-power RKHS-norm regularizer.

The solver reduces the problem to one eigendecomposition of the Gram
matrix plus a scalar root search, and exposes the induced map to kernel
ridge regression, a multiset Hamming metric on training sets, stability
bounds and the experiment drivers used to compare the two learners.
"""

from .data import (SplitPlan, Standardizer, TrainingSet, derive_seed, friedman_synthetic, kfold,
                   load_csv, make_rng, rmse, save_csv, scaled_rmse, split)
from .equivalence import (EquivalenceReport, phi_map, probe_phi_sensitivity, regpath_compare,
                          strong_equivalence_experiment, verify_weak_equivalence)
from .estimators import KernelRidgeRegression, ModifiedKernelRidge, MPowerRLSR, make_estimator
from .exceptions import (DegenerateProblemError, InputError, NonPSDError, NumericalError,
                         RootFindingError, ZeroBandwidthError)
from .experiments import (CvProtocol, ExperimentResult, run_accuracy_experiment,
                          run_convergence_experiment, run_equivalence_experiment)
from .hamming import g_n, h_distance, h_metric
from .kernel import GramSpectrum, KernelConfig, build_gram, eigendecompose, kernel_eval, resolve_bandwidth
from .solvers import (FittedModel, f_of_c, find_root, fit, krr_fit, load_model, modified_krr_fit,
                      mrlsr_fit, predict, save_model)
from .stability import (StabilityBoundInputs, StabilityReport, empirical_stability, modified_krr_beta,
                        theoretical_beta)

__version__ = "0.1.0"

__all__ = [
    "CvProtocol", "DegenerateProblemError", "EquivalenceReport", "ExperimentResult", "FittedModel",
    "GramSpectrum", "InputError", "KernelConfig", "KernelRidgeRegression", "MPowerRLSR",
    "ModifiedKernelRidge", "NonPSDError", "NumericalError", "RootFindingError", "SplitPlan",
    "StabilityBoundInputs", "StabilityReport", "Standardizer", "TrainingSet", "ZeroBandwidthError",
    "build_gram", "derive_seed", "eigendecompose", "empirical_stability", "f_of_c", "find_root",
    "fit", "friedman_synthetic", "g_n", "h_distance", "h_metric", "kernel_eval", "kfold", "krr_fit",
    "load_csv", "load_model", "make_estimator", "make_rng", "modified_krr_beta", "modified_krr_fit",
    "mrlsr_fit", "phi_map", "predict", "probe_phi_sensitivity", "regpath_compare",
    "resolve_bandwidth", "rmse", "run_accuracy_experiment", "run_convergence_experiment",
    "run_equivalence_experiment", "save_csv", "save_model", "scaled_rmse", "split",
    "strong_equivalence_experiment", "theoretical_beta", "verify_weak_equivalence",
]
