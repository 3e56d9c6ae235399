"""Learned compressed sensing for sparse beamspace channel feedback.

A channel simulator produces exactly sparse beamspace vectors; an
unrolled l1-minimization autoencoder trains a measurement matrix on
them; basis pursuit recovers vectors from compressed measurements; and
an evaluation harness compares the learned matrix against random
baselines by exact-recovery rate, normalized error, and effective rate.
"""

from .channels import (
    AngleMode,
    ChannelConfig,
    ChannelDataset,
    GainModel,
    PreprocessParams,
    SpatialChannel,
    dft_grid_matrix,
    generate_dataset,
    generate_spatial_channel,
    grid_directions,
    invert_preprocess,
    preprocess,
    stack_real,
    steering_vector,
    to_beamspace,
    unstack_real,
)
from .config import ConfigError, ExperimentConfig, load_experiment, profile_defaults
from .evaluate import (
    MatrixSpec,
    MetricConfig,
    SweepReport,
    SweepRow,
    effective_rate,
    exact_recovery_rate,
    mean_nrse,
    run_sweep,
)
from .fileio import (
    FileFormatError,
    load_checkpoint,
    load_dataset,
    load_matrix,
    save_checkpoint,
    save_dataset,
    save_matrix,
)
from .matrices import MatrixKind, MeasurementMatrix, generate_baseline, measure
from .network import (
    BatchNormLayer,
    ForwardTrace,
    Gradients,
    Mode,
    UnrolledAutoencoder,
    backward,
    decoder_init,
    decoder_update,
    encode,
    forward,
    mse_loss,
)
from .recovery import (
    BasisPursuitSolver,
    OracleRecovery,
    RecoveryConfig,
    RecoveryResult,
    RecoveryStatus,
    SolverKind,
    basis_pursuit,
    oracle_sparse_recover,
    projected_subgradient,
    recover,
)
from .training import (
    TrainConfig,
    TrainReport,
    TrainingDivergedError,
    extract_matrix,
    init_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AngleMode",
    "BasisPursuitSolver",
    "BatchNormLayer",
    "ChannelConfig",
    "ChannelDataset",
    "ConfigError",
    "ExperimentConfig",
    "FileFormatError",
    "ForwardTrace",
    "GainModel",
    "Gradients",
    "MatrixKind",
    "MatrixSpec",
    "MeasurementMatrix",
    "MetricConfig",
    "Mode",
    "OracleRecovery",
    "PreprocessParams",
    "RecoveryConfig",
    "RecoveryResult",
    "RecoveryStatus",
    "SolverKind",
    "SpatialChannel",
    "SweepReport",
    "SweepRow",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "UnrolledAutoencoder",
    "backward",
    "basis_pursuit",
    "decoder_init",
    "decoder_update",
    "dft_grid_matrix",
    "effective_rate",
    "encode",
    "exact_recovery_rate",
    "extract_matrix",
    "forward",
    "generate_baseline",
    "generate_dataset",
    "generate_spatial_channel",
    "grid_directions",
    "init_model",
    "invert_preprocess",
    "load_checkpoint",
    "load_dataset",
    "load_experiment",
    "load_matrix",
    "mean_nrse",
    "measure",
    "mse_loss",
    "oracle_sparse_recover",
    "preprocess",
    "profile_defaults",
    "projected_subgradient",
    "recover",
    "run_sweep",
    "save_checkpoint",
    "save_dataset",
    "save_matrix",
    "stack_real",
    "steering_vector",
    "to_beamspace",
    "train",
    "unstack_real",
]
