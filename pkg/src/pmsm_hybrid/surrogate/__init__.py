"""Neural surrogates: the multi-branch measures network and the direct KPI network."""

from .network import ACTIVATIONS, LOSSES, Branch, NetTopology, SurrogateNet, build_net, loss_mae
from .optim import OPTIMIZERS, Optimizer
from .presets import PRESETS, direct_preset, hybrid_preset
from .training import (FitResult, TrainConfig, build_direct_net, build_hybrid_net, fit, predict_arrays,
                       predict_kpis, predict_measures, train_direct, train_hybrid)

__all__ = [
    "ACTIVATIONS", "Branch", "FitResult", "LOSSES", "NetTopology", "OPTIMIZERS", "Optimizer", "PRESETS",
    "SurrogateNet", "TrainConfig", "build_direct_net", "build_hybrid_net", "build_net", "direct_preset", "fit",
    "hybrid_preset", "loss_mae", "predict_arrays", "predict_kpis", "predict_measures", "train_direct",
    "train_hybrid",
]
