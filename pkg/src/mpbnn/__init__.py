"""Deterministic moment-propagation Bayesian neural networks for regression."""

from .moments import (
    DIAG,
    FULL,
    GateRates,
    MomentError,
    MomentVector,
    counters,
    dense_propagate,
    dropout_propagate,
    lift_deterministic,
    mp_gelu_propagate,
    mp_gelu_rates,
    relu_propagate,
)
from .network import (
    ARCH_MP_GELU,
    ARCH_RELU,
    HEAD_HETEROSCEDASTIC,
    HEAD_HOMOSCEDASTIC,
    LayerSpec,
    ModelConfig,
    ParameterSet,
    build_mp_gelu_model,
    build_relu_model,
    forward,
    init_parameters,
    load_model,
    save_model,
)
from .objective import (
    PredictiveMoments,
    expected_log_likelihood,
    expected_log_likelihood_1out,
    nll_metric,
    predictive_moments,
    rmse,
)
from .training import GradientSet, TrainConfig, loss_and_gradients, sgd_step, train
from .data import (
    Dataset,
    DatasetSplit,
    Standardizer,
    grid_search_dropout,
    load_csv,
    make_splits,
    toy_generate,
)
from .mc_oracle import McEstimate, mc_expected_ll, mc_layer_moments

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
