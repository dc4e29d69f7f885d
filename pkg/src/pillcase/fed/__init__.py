from .population import (
    FEATURE_DIM,
    ClientDataset,
    PopulationSpec,
    PopulationSpecError,
    build_features,
    generate_population,
)
from .model import (
    PARAM_DIM,
    ClientUpdate,
    init_params,
    local_train,
    loss_and_gradient,
    predict_proba,
)
from .coordinator import (
    FAIR,
    PLAIN,
    FairnessReport,
    FederationHistory,
    RoundMetrics,
    aggregate,
    evaluate_fairness,
    run_federation,
)
from .config import ConfigError, ExperimentConfig, load_experiment_config, parse_experiment_config

__all__ = [
    "FEATURE_DIM",
    "PARAM_DIM",
    "FAIR",
    "PLAIN",
    "ClientDataset",
    "ClientUpdate",
    "ConfigError",
    "ExperimentConfig",
    "FairnessReport",
    "FederationHistory",
    "PopulationSpec",
    "PopulationSpecError",
    "RoundMetrics",
    "aggregate",
    "build_features",
    "evaluate_fairness",
    "generate_population",
    "init_params",
    "load_experiment_config",
    "local_train",
    "loss_and_gradient",
    "parse_experiment_config",
    "predict_proba",
    "run_federation",
]
