"""Training loop, evaluation metrics and the optimizers behind them."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .adversarial import AttackConfig, perturb_anchor, robust_ordering
from .data import mine_triplets
from .errors import DivergenceError, PreconditionError
from .gradients import grad_params
from .model import AnsatzConfig, MetricModel, triplet_loss, triplet_readout

log = logging.getLogger(__name__)


# --- optimizers ------------------------------------------------------------

class SGD:
    def __init__(self, lr=0.1):
        self.lr = lr

    def step(self, params, grad):
        return params - self.lr * grad


class Adam:
    def __init__(self, lr=0.1, beta1=0.9, beta2=0.999, eps_hat=1e-8):
        self.lr, self.beta1, self.beta2, self.eps_hat = lr, beta1, beta2, eps_hat
        self.m = self.v = None
        self.t = 0

    def step(self, params, grad):
        if self.m is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps_hat)


# --- configuration ---------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    margin: float = 0.5
    learning_rate: float = 0.1
    optimizer: str = "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    adversarial: bool = False
    attack: AttackConfig = field(default_factory=AttackConfig)
    shots: int = None  # evaluation readout; None is exact
    seed: int = 0
    layers: int = 3
    entangler: str = "ring"
    eval_triplets: int = 200
    eval_seed: int = 12345
    track_robust: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise PreconditionError("epochs must be >= 1")
        if self.batch_size < 1:
            raise PreconditionError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise PreconditionError("learning_rate must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise PreconditionError(f"unknown optimizer {self.optimizer!r}")
        if self.shots is not None and self.shots < 1:
            raise PreconditionError("shots must be >= 1")
        if isinstance(self.attack, dict):
            self.attack = attack_from_dict(self.attack)

    def make_optimizer(self):
        if self.optimizer == "adam":
            return Adam(self.learning_rate, self.beta1, self.beta2, self.eps_hat)
        return SGD(self.learning_rate)

    def ansatz(self, num_data_qubits):
        return AnsatzConfig(self.layers, num_data_qubits, self.entangler)

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self):
        doc = asdict(self)
        doc["attack"] = attack_to_dict(self.attack)
        return doc

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def attack_from_dict(doc):
    doc = dict(doc)
    if "lambda" in doc:
        doc["lam"] = doc.pop("lambda")
    return AttackConfig(**doc)


def attack_to_dict(cfg):
    doc = asdict(cfg)
    doc["lambda"] = doc.pop("lam")
    return doc


# --- evaluation ------------------------------------------------------------

def eval_triplets(ds, count, seed):
    """Triplets used by :func:`evaluate` and :func:`robust_accuracy` for ``seed``."""
    return mine_triplets(ds, count, np.random.default_rng(seed))


def evaluate(model, ds, count, seed, shots=None):
    triplets = eval_triplets(ds, count, seed)
    shot_rng = np.random.default_rng([seed, 1]) if shots else None
    dps, dns = [], []
    for t in triplets:
        r = triplet_readout(t.anchor, t.positive, t.negative, model, shots, shot_rng)
        dps.append(r.d_p)
        dns.append(r.d_n)
    dps, dns = np.array(dps), np.array(dns)
    gap = dns - dps
    return {
        "count": len(triplets),
        "loss": float(np.mean(np.maximum(0.0, model.margin - gap))),
        "mean_d_p": float(dps.mean()),
        "mean_d_n": float(dns.mean()),
        "ordering_accuracy": float(np.mean(gap > 0)),
        "margin_accuracy": float(np.mean(gap >= model.margin)),
    }


def robust_accuracy(model, ds, cfg, count, seed):
    triplets = eval_triplets(ds, count, seed)
    return float(np.mean([robust_ordering(t, model, cfg) for t in triplets]))


# --- training --------------------------------------------------------------

@dataclass
class MetricsLog:
    records: list = field(default_factory=list)
    config: dict = None

    def to_dict(self):
        return {"config": self.config, "epochs": self.records}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def column(self, key):
        return [r.get(key) for r in self.records]


def _finite_or_raise(value, epoch):
    if not np.isfinite(value):
        raise DivergenceError(epoch, value)


def train(cfg, train_ds, val_ds=None, model=None, callback=None):
    """Alternating natural/adversarial training.

    Epochs are 1-based; with ``cfg.adversarial`` the even epochs replace
    every anchor by its single-step perturbation under the current
    parameters. Returns the final model and its per-epoch log.
    """
    init_seq, mine_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    mine_rng = np.random.default_rng(mine_seq)
    if model is None:
        ansatz = cfg.ansatz(train_ds.dim)
        model = MetricModel.initial(ansatz, np.random.default_rng(init_seq),
                                    margin=cfg.margin, seed=cfg.seed)
    opt = cfg.make_optimizer()
    attack_cfg = replace(cfg.attack, mode="single_step")
    eval_ds = val_ds if val_ds is not None else train_ds
    mlog = MetricsLog(config=cfg.to_dict())
    best = np.inf

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        batch = mine_triplets(train_ds, cfg.batch_size, mine_rng)
        natural = triplet_loss(batch, model)
        _finite_or_raise(natural.loss, epoch)
        record = {"epoch": epoch, "kind": "natural", "loss_natural": natural.loss}

        if cfg.adversarial and epoch % 2 == 0:
            batch = [perturb_anchor(t, model, attack_cfg).triplet for t in batch]
            adv = triplet_loss(batch, model)
            _finite_or_raise(adv.loss, epoch)
            record["kind"] = "adversarial"
            record["loss_adversarial"] = adv.loss

        grad = grad_params(batch, model)
        theta = opt.step(model.theta.ravel(), grad)
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(epoch, float("nan"))
        model = model.with_theta(theta)

        best = min(best, natural.loss)
        record["best_loss"] = best
        record["grad_norm"] = float(np.linalg.norm(grad))
        metrics = evaluate(model, eval_ds, cfg.eval_triplets, cfg.eval_seed, cfg.shots)
        for key in ("mean_d_p", "mean_d_n", "ordering_accuracy", "margin_accuracy"):
            record[key] = metrics[key]
        if cfg.track_robust:
            record["robust_accuracy"] = robust_accuracy(
                model, eval_ds, replace(cfg.attack, mode="pgd"), cfg.eval_triplets, cfg.eval_seed)
        record["wall_time"] = time.perf_counter() - t0
        mlog.records.append(record)
        log.info("epoch %d (%s): loss %.4f, ordering %.3f", epoch, record["kind"],
                 natural.loss, record["ordering_accuracy"])
        if callback is not None:
            callback(record, model)
    return model, mlog
