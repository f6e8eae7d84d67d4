"""Layered recurrent energy networks with feedforward-initialized inference.

The package implements a chain of hidden layers over a clamped visible
vector, where each hidden layer integrates a bottom-up and a top-down
dendritic branch. It provides the branch predictions and feedforward
initialization (:mod:`ffinit.network`), a scalar energy with analytic
gradient for tied weights (:mod:`ffinit.energy`), direct / leaky /
Langevin relaxation with convergence tracing (:mod:`ffinit.inference`),
random-tied and trained auto-encoder weight regimes
(:mod:`ffinit.learning`), dataset and checkpoint handling
(:mod:`ffinit.data`), and an experiment harness plus CLI
(:mod:`ffinit.harness`, ``ffinit``).
"""

from .exceptions import (
    CheckpointError,
    ConfigurationError,
    ConstructionError,
    DatasetError,
    DimensionError,
    DivergenceError,
    FfinitError,
    IdxFormatError,
    IdxLengthError,
    InvalidInputError,
    NotAnEnergyModelError,
)
from .network import (
    Activation,
    LayerSpec,
    NetworkParams,
    NetworkState,
    apply_activation,
    activation_subderivative,
    bottom_up,
    branch_combine,
    feedforward_init,
    mutual_prediction_residual,
    top_down,
)
from .energy import EnergyModel, energy, energy_gradient
from .inference import (
    ConvergenceTrace,
    RelaxationConfig,
    Scheme,
    direct_update_layer,
    infer_from_feedforward,
    relax,
)
from .data import (
    DataSource,
    DatasetHandle,
    load_idx_images,
    load_params,
    save_params,
    subset,
    synth_autoencodable,
    synth_blobs,
)
from .learning import (
    TrainConfig,
    TrainRule,
    init_random_tied,
    local_branch_update,
    reconstruction_error,
    train_stacked_ae,
)
from .harness import (
    DatasetSpec,
    ExperimentReport,
    ExperimentSpec,
    RegimeResult,
    emit_csv,
    experiment_spec_from_config,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "Activation", "LayerSpec", "NetworkParams", "NetworkState",
    "apply_activation", "activation_subderivative", "bottom_up", "top_down",
    "branch_combine", "feedforward_init", "mutual_prediction_residual",
    "EnergyModel", "energy", "energy_gradient",
    "Scheme", "RelaxationConfig", "ConvergenceTrace",
    "direct_update_layer", "relax", "infer_from_feedforward",
    "TrainConfig", "TrainRule", "init_random_tied", "train_stacked_ae",
    "local_branch_update", "reconstruction_error",
    "DataSource", "DatasetHandle", "load_idx_images", "synth_blobs",
    "synth_autoencodable", "subset", "save_params", "load_params",
    "DatasetSpec", "ExperimentSpec", "ExperimentReport", "RegimeResult",
    "run_experiment", "emit_csv", "experiment_spec_from_config",
    "FfinitError", "InvalidInputError", "DimensionError", "ConfigurationError",
    "NotAnEnergyModelError", "IdxFormatError", "IdxLengthError", "DatasetError",
    "DivergenceError", "ConstructionError", "CheckpointError",
]
