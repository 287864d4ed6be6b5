"""Gradient-ascent attacks on the anchor's encoding angles.

Adding ``delta_j`` to an anchor angle is the same as composing an extra
controlled ``RY(delta_j)`` onto each of the anchor's encoding gates, since
RY angles on one qubit add. The perturbation is therefore a unitary acting
on the encoded anchor, not an edit of raw pixels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gradients import grad_anchor, hinge_term
from .model import triplet_readout

MODES = ("single_step", "pgd")


@dataclass(frozen=True)
class AttackConfig:
    lam: float = 0.05
    epsilon: float = 0.1
    steps: int = 1
    mode: str = "single_step"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("step size lambda must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"unknown attack mode {self.mode!r}")


@dataclass(frozen=True)
class AdversarialTriplet:
    base: object  # data.TripletSet
    perturbed_anchor: np.ndarray
    delta: np.ndarray

    @property
    def triplet(self):
        return self.base.replace_anchor(self.perturbed_anchor)


def _project(a, delta, eps):
    """Clip to the eps-box, then to [0, pi]; returns (anchor, applied delta)."""
    delta = np.clip(delta, -eps, eps)
    x = np.clip(a + delta, 0.0, np.pi)
    return x, x - a


def perturb_anchor(triplet, model, cfg):
    a = np.asarray(triplet.anchor, dtype=float)
    if cfg.epsilon == 0:
        return AdversarialTriplet(triplet, a.copy(), np.zeros_like(a))
    step = cfg.lam * grad_anchor(triplet, model)
    x, delta = _project(a, step, cfg.epsilon)
    return AdversarialTriplet(triplet, x, delta)


def pgd_attack(triplet, model, cfg):
    """Projected ascent for ``cfg.steps`` iterations; returns the iterate with
    the largest hinge term (first one on ties)."""
    a = np.asarray(triplet.anchor, dtype=float)
    if cfg.epsilon == 0:
        return AdversarialTriplet(triplet, a.copy(), np.zeros_like(a))
    delta = np.zeros_like(a)
    best = None
    best_val = -np.inf
    for _ in range(cfg.steps):
        current = triplet.replace_anchor(a + delta)
        g = grad_anchor(current, model)
        x, delta = _project(a, delta + cfg.lam * g, cfg.epsilon)
        val = hinge_term(triplet, model, anchor=x)
        if val > best_val:
            best_val = val
            best = AdversarialTriplet(triplet, x, delta.copy())
    return best


def attack(triplet, model, cfg):
    return pgd_attack(triplet, model, cfg) if cfg.mode == "pgd" else perturb_anchor(triplet, model, cfg)


def robust_ordering(triplet, model, cfg):
    """Whether ``d_n > d_p`` survives a PGD attack with budget ``cfg.epsilon``."""
    adv = pgd_attack(triplet, model, cfg)
    r = triplet_readout(adv.perturbed_anchor, triplet.positive, triplet.negative, model)
    return r.d_n > r.d_p
