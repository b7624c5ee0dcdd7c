"""The five forecaster families and their training drivers."""

from .gbt import GbtModel, GbtParams, fit_gbt  # noqa: F401
from .linear import LinearArxModel, fit_linear_arx  # noqa: F401
from .mlp import (  # noqa: F401
    MlpModel,
    TrainConfig,
    TrainingTrace,
    init_model,
    mlp_forward,
    mlp_train,
    mse_loss_and_grads,
)
from .persistence import persistence_forecast, persistence_forecast_arrays  # noqa: F401
from .suite import (  # noqa: F401
    GlobalModel,
    LocalSuite,
    predict_local_scalar,
    train_global,
    train_local_suite,
)
