"""Quantum-kernel SVM laboratory.

Pauli feature-map circuits, exact and shot-sampled fidelity kernels, a
precomputed-kernel SVM trained by SMO, a financial direction-labeling
data pipeline, reproducible experiment sweeps with ruggedness (PTRI)
scoring, and closed-form circuit resource estimation.
"""
from .circuits import Circuit, Gate, GateKind, adjoint, compose, dag_depth
from .feature_maps import PRESETS, FeatureMapSpec, build_feature_map, data_map_pair, data_map_single
from .simulator import ShotResult, Statevector, sample_zero_count, simulate, zero_probability
from .kernels import (GramMatrix, KernelConfig, gram_matrix, gram_pair, psd_clip,
                      quantum_config, quantum_kernel_entry, rbf_config, rbf_kernel_entry)
from .svm import SvmModel, decision_values, predict, train
from .metrics import ConfusionMatrix, balanced_accuracy, confusion, f1
from .data import (Dataset, RawSeries, SubsetSpec, fit_scale, apply_scale, ingest,
                   label_direction, sample_subset, scale_split, synthetic_dataset,
                   quantum_separable_dataset)
from .experiment import (ConfigPoint, PTRIGrid, SweepResult, VariabilityResult,
                         eqa_difference, ptri, run_sweep, select_reference_trials,
                         variability_study)
from .resources import ResourceEstimate, estimate, verify_against_circuit

__version__ = "0.1.0"
