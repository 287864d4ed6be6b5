"""Quantum adversarial metric learning on a dense statevector simulator."""
from ._backend import BACKEND
from .adversarial import AttackConfig, perturb_anchor, pgd_attack, robust_ordering
from .data import Dataset, TripletSet, load_iris_csv, load_mnist_idx, mine_triplets
from .model import (
    AnsatzConfig,
    MetricModel,
    embed,
    pair_inner,
    triplet_loss,
    triplet_readout,
)
from .training import TrainConfig, evaluate, robust_accuracy, train

__version__ = "0.1.0"
