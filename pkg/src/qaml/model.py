"""The trainable metric.

An input ``x`` (angles in ``[0, pi]``) is embedded as
``U(x) W(theta) U(x) |0...0>`` where ``U`` is the RY angle encoding and
``W`` is a layered RY + CNOT ansatz. Distances are ``1 - |<g(a)|g(b)>|``.

The triplet readout runs a single circuit on ``d + 2`` qubits: the three
embeddings sit in ancilla-selected branches sharing one copy of ``W``, and
a Hadamard on ``reg1`` interferes the anchor branch with the positive and
negative branches. Conditioned on ``reg2 = b``::

    P(0, b) - P(1, b) = Re<A|B_b> / 2,   P(0, b) + P(1, b) = 1 / 2

so the ratio is the inner product itself. All gates are real, hence the
real part is the whole inner product.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .encoding import RegisterLayout, branch_controls
from .errors import EstimationError, FormatError, PreconditionError, ShapeError
from .sim import CNOT, CRY, RY, Circuit, H, StateVector, probabilities, run_circuit, sample_shots, zero_state

MODEL_VERSION = 1
ENTANGLERS = ("ring", "line")


@dataclass(frozen=True)
class AnsatzConfig:
    num_layers: int = 3
    num_data_qubits: int = 4
    entangler: str = "ring"

    def __post_init__(self):
        if self.num_layers < 1 or self.num_data_qubits < 1:
            raise ShapeError("ansatz needs at least one layer and one qubit")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"unknown entangler {self.entangler!r}; expected one of {ENTANGLERS}")

    @property
    def num_params(self):
        return self.num_layers * self.num_data_qubits

    def entangling_pairs(self):
        d = self.num_data_qubits
        if d == 1:
            return []
        if self.entangler == "line" or d == 2:
            return [(j, j + 1) for j in range(d - 1)]
        return [(j, (j + 1) % d) for j in range(d)]


def init_theta(cfg, rng):
    """Uniform on [-pi/10, pi/10]."""
    return rng.uniform(-np.pi / 10, np.pi / 10, size=(cfg.num_layers, cfg.num_data_qubits))


def _theta_matrix(cfg, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.size != cfg.num_params:
        raise ShapeError(f"expected {cfg.num_params} parameters, got {theta.size}")
    return theta.reshape(cfg.num_layers, cfg.num_data_qubits)


@dataclass
class MetricModel:
    ansatz: AnsatzConfig
    theta: np.ndarray
    layout: RegisterLayout = None
    margin: float = 0.5
    scaling: object = None  # data.ScalingModel, kept for persistence
    seed: int = None

    def __post_init__(self):
        self.theta = _theta_matrix(self.ansatz, self.theta).copy()
        if self.layout is None:
            self.layout = RegisterLayout.default(self.ansatz.num_data_qubits)
        if self.layout.num_data != self.ansatz.num_data_qubits:
            raise ShapeError("layout and ansatz disagree on the data register size")
        if self.margin < 0:
            raise PreconditionError("margin must be non-negative")

    @classmethod
    def initial(cls, ansatz, rng, **kwargs):
        return cls(ansatz, init_theta(ansatz, rng), **kwargs)

    def with_theta(self, theta):
        return replace(self, theta=_theta_matrix(self.ansatz, theta).copy())

    @property
    def num_qubits(self):
        return self.layout.num_qubits


def ansatz_circuit(cfg, theta, layout):
    theta = _theta_matrix(cfg, theta)
    if layout.num_data != cfg.num_data_qubits:
        raise ShapeError("layout and ansatz disagree on the data register size")
    return Circuit(layout.num_qubits, _ansatz_gates(cfg, theta, layout.data))


def _ansatz_gates(cfg, theta, data):
    gates = []
    pairs = cfg.entangling_pairs()
    for layer in theta:
        gates.extend(RY(q, float(t)) for q, t in zip(data, layer))
        gates.extend(CNOT(data[i], data[j]) for i, j in pairs)
    return gates


def _check_features(x, d):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != d:
        raise ShapeError(f"feature vector has {x.shape[0]} entries, model expects {d}")
    return x


def embed(x, model):
    """Embedding ``g(x)`` as a ``d``-qubit state (no ancillas)."""
    d = model.ansatz.num_data_qubits
    x = _check_features(x, d)
    data = tuple(range(d))
    enc = [RY(q, float(v)) for q, v in zip(data, x)]
    gates = enc + _ansatz_gates(model.ansatz, model.theta, data) + enc
    state, _ = run_circuit(zero_state(d), Circuit(d, gates))
    return state


# --- readouts --------------------------------------------------------------

@dataclass(frozen=True)
class DistancePair:
    d_p: float
    d_n: float
    s_p: float
    s_n: float


def angular_distance(s):
    return 1.0 - abs(s)


def readout_circuit(a, p, n, model, theta=None, anchor_offsets=(None, None)):
    """Full triplet circuit up to and including the readout Hadamard.

    ``anchor_offsets`` adds per-feature angle offsets to the anchor's first
    and second encoding gates separately; gradients use it to shift one
    gate occurrence at a time.
    """
    layout = model.layout
    d = layout.num_data
    a, p, n = (_check_features(v, d) for v in (a, p, n))
    theta = model.theta if theta is None else _theta_matrix(model.ansatz, theta)
    ca, cp, cn = branch_controls(layout)

    def encode(anchor):
        return ([CRY(ca, q, float(v)) for q, v in zip(layout.data, anchor)]
                + [CRY(cp, q, float(v)) for q, v in zip(layout.data, p)]
                + [CRY(cn, q, float(v)) for q, v in zip(layout.data, n)])

    first, second = anchor_offsets
    a1 = a if first is None else a + np.asarray(first, dtype=float)
    a2 = a if second is None else a + np.asarray(second, dtype=float)
    gates = [H(layout.reg1), H(layout.reg2)]
    gates += encode(a1)
    gates += _ansatz_gates(model.ansatz, theta, layout.data)
    gates += encode(a2)
    gates.append(H(layout.reg1))
    return Circuit(layout.num_qubits, gates)


def _conditioned(same, diff, what):
    total = same + diff
    if total <= 0:
        raise EstimationError(f"no shots landed in the {what} branch")
    return (same - diff) / total


def readout_from_probabilities(joint):
    """``joint[r1 + 2 * r2]`` -> (s_p, s_n)."""
    s_p = _conditioned(joint[0], joint[1], "positive")
    s_n = _conditioned(joint[2], joint[3], "negative")
    return float(np.clip(s_p, -1.0, 1.0)), float(np.clip(s_n, -1.0, 1.0))


def triplet_readout(a, p, n, model, shots=None, rng=None, *, theta=None,
                    anchor_offsets=(None, None)):
    """Both pair similarities of one triplet from a single circuit.

    Exact mode (``shots=None``) reads the ancilla distribution off the
    statevector; otherwise ``shots`` samples are drawn with ``rng``.
    """
    circ = readout_circuit(a, p, n, model, theta=theta, anchor_offsets=anchor_offsets)
    state, _ = run_circuit(zero_state(circ.num_qubits), circ)
    ancillas = [model.layout.reg1, model.layout.reg2]
    if shots is None:
        joint = probabilities(state, ancillas)
    else:
        if rng is None:
            raise PreconditionError("shots mode needs an rng")
        counts = sample_shots(state, ancillas, shots, rng)
        joint = np.array([counts.get(j, 0) for j in range(4)], dtype=float)
    s_p, s_n = readout_from_probabilities(joint)
    return DistancePair(angular_distance(s_p), angular_distance(s_n), s_p, s_n)


def pair_inner(x1, x2, model, shots=None, rng=None):
    """Re<g(x1)|g(x2)> from a two-branch Hadamard test on one ancilla."""
    d = model.ansatz.num_data_qubits
    x1, x2 = _check_features(x1, d), _check_features(x2, d)
    data = tuple(range(d))
    anc = d
    enc = ([CRY(((anc, 0),), q, float(v)) for q, v in zip(data, x1)]
           + [CRY(((anc, 1),), q, float(v)) for q, v in zip(data, x2)])
    gates = [H(anc)] + enc + _ansatz_gates(model.ansatz, model.theta, data) + enc + [H(anc)]
    state, _ = run_circuit(zero_state(d + 1), Circuit(d + 1, gates))
    if shots is None:
        p0, p1 = probabilities(state, [anc])
        return float(p0 - p1)
    if rng is None:
        raise PreconditionError("shots mode needs an rng")
    counts = sample_shots(state, [anc], shots, rng)
    return (counts.get(0, 0) - counts.get(1, 0)) / shots


# --- loss ------------------------------------------------------------------

def hinge(d_p, d_n, margin):
    return max(0.0, d_p - d_n + margin)


@dataclass
class LossReport:
    loss: float
    per_triplet: list = field(default_factory=list)  # (d_p, d_n, active)

    @property
    def mean_d_p(self):
        return float(np.mean([t[0] for t in self.per_triplet]))

    @property
    def mean_d_n(self):
        return float(np.mean([t[1] for t in self.per_triplet]))


def triplet_loss(batch, model, shots=None, rng=None):
    batch = list(batch)
    if not batch:
        raise PreconditionError("triplet batch is empty")
    per = []
    total = 0.0
    for t in batch:
        r = triplet_readout(t.anchor, t.positive, t.negative, model, shots, rng)
        arg = r.d_p - r.d_n + model.margin
        per.append((r.d_p, r.d_n, arg > 0))
        total += max(0.0, arg)
    return LossReport(total / len(batch), per)


# --- persistence -----------------------------------------------------------

def model_to_dict(model):
    scaling = None
    if model.scaling is not None:
        scaling = {"min": list(map(float, model.scaling.min)),
                   "max": list(map(float, model.scaling.max))}
    return {
        "version": MODEL_VERSION,
        "ansatz": {"layers": model.ansatz.num_layers,
                   "qubits": model.ansatz.num_data_qubits,
                   "entangler": model.ansatz.entangler},
        "theta": [float(t) for t in model.theta.ravel()],
        "margin": float(model.margin),
        "feature_scaling": scaling,
        "seed": model.seed,
    }


def model_from_dict(doc):
    from .data import ScalingModel

    if doc.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        a = doc["ansatz"]
        ansatz = AnsatzConfig(int(a["layers"]), int(a["qubits"]), a.get("entangler", "ring"))
        scaling = doc.get("feature_scaling")
        if scaling is not None:
            scaling = ScalingModel(np.array(scaling["min"], float), np.array(scaling["max"], float))
        return MetricModel(ansatz, np.array(doc["theta"], dtype=float),
                           margin=float(doc["margin"]), scaling=scaling, seed=doc.get("seed"))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed model document: {exc}") from exc


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2))


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_dict(doc)
