"""QAOA angle prediction for Max-Cut with a parameter-to-parameter CNN."""
from .graphs import CutAssignment, Graph, cut_value, erdos_renyi, max_cut_brute_force
from .optimize import (
    OptimizeResult,
    RecommendedList,
    bounded_minimize,
    depth1_solve,
    fit_depth1_regression,
    generate_labels,
    optimize_qaoa,
    pearson,
)
from .ppn import (
    ConvLayer,
    PpnModel,
    TrainConfig,
    composed_loss,
    conv2d,
    denormalize,
    load_model,
    normalize,
    ppn_compose,
    ppn_forward,
    prediction_error,
    save_model,
    train,
)
from .schedules import random_params, tqa_params
from .simulator import (
    EvalCounter,
    ParameterSet,
    QaoaObjective,
    apply_cost_unitary,
    apply_mixer_unitary,
    approximation_ratio,
    expected_value,
    plus_state,
    prepare_state,
)
from .strategies import StrategyOutcome, run_baseline, strategy_ppn1, strategy_ppn2

__all__ = [
    "ConvLayer",
    "CutAssignment",
    "EvalCounter",
    "Graph",
    "OptimizeResult",
    "ParameterSet",
    "PpnModel",
    "QaoaObjective",
    "RecommendedList",
    "StrategyOutcome",
    "TrainConfig",
    "apply_cost_unitary",
    "apply_mixer_unitary",
    "approximation_ratio",
    "bounded_minimize",
    "composed_loss",
    "conv2d",
    "cut_value",
    "denormalize",
    "depth1_solve",
    "erdos_renyi",
    "expected_value",
    "fit_depth1_regression",
    "generate_labels",
    "load_model",
    "max_cut_brute_force",
    "normalize",
    "optimize_qaoa",
    "pearson",
    "plus_state",
    "ppn_compose",
    "ppn_forward",
    "prediction_error",
    "prepare_state",
    "random_params",
    "run_baseline",
    "save_model",
    "strategy_ppn1",
    "strategy_ppn2",
    "tqa_params",
    "train",
]

__version__ = "0.1.0"
