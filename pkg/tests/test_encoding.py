from math import pi

import numpy as np
import pytest

from qaml.encoding import (
    RegisterLayout,
    controlled_feature_map,
    dimension_reduction,
    feature_map,
    prepare_triplet_superposition,
    reduced_data_qubits,
)
from qaml.errors import QubitIndexError, ShapeError
from qaml.sim import CRY, RY, Circuit, H, StateVector, X, probabilities, run_circuit, zero_state

from conftest import random_state


def run(circ, state=None, rng=None):
    state = zero_state(circ.num_qubits) if state is None else state
    return run_circuit(state, circ, rng)[0]


def data_amplitudes(state, layout, branch):
    """Data-register amplitudes of one ancilla branch (r1, r2), renormalised."""
    r1, r2 = branch
    amps = []
    for local in range(1 << layout.num_data):
        idx = (r1 << layout.reg1) | (r2 << layout.reg2)
        for j, q in enumerate(layout.data):
            idx |= ((local >> j) & 1) << q
        amps.append(state.amps[idx])
    amps = np.array(amps)
    return amps / np.linalg.norm(amps)


def product_state(x):
    out = np.array([1.0])
    for v in reversed(x):  # last qubit is the most significant factor
        out = np.kron(out, [np.cos(v / 2), np.sin(v / 2)])
    return out


def test_default_layout():
    lay = RegisterLayout.default(3)
    assert lay.data == (0, 1, 2) and (lay.reg1, lay.reg2) == (3, 4)
    assert lay.num_qubits == 5
    with pytest.raises(QubitIndexError):
        RegisterLayout(0, 1, (1, 2))


def test_feature_map_examples():
    lay = RegisterLayout.default(2)
    assert [type(g) for g in feature_map([0, 0], lay).steps] == [RY, RY]
    assert run(feature_map([0, 0], lay)).amps[0] == 1
    one = RegisterLayout.default(1)
    np.testing.assert_allclose(run(feature_map([pi], one)).amps, [0, 1, 0, 0, 0, 0, 0, 0],
                               atol=1e-15)
    s = run(feature_map([pi / 2, pi / 2], lay))
    np.testing.assert_allclose(s.amps[:4], [0.5] * 4, atol=1e-15)
    with pytest.raises(ShapeError):
        feature_map([1, 2, 3], lay)


def test_feature_map_matches_product_state(rng):
    lay = RegisterLayout.default(3)
    x = rng.uniform(0, pi, 3)
    s = run(feature_map(x, lay))
    np.testing.assert_allclose(s.amps[:8], product_state(x), atol=1e-14)
    assert np.abs(s.amps.imag).max() < 1e-12


def test_controlled_feature_map():
    lay = RegisterLayout.default(2)
    x = [0.4, 2.1]
    assert controlled_feature_map(x, [], lay).steps == feature_map(x, lay).steps
    unchanged = run(controlled_feature_map(x, [(lay.reg1, 1)], lay))
    np.testing.assert_array_equal(unchanged.amps, zero_state(lay.num_qubits).amps)
    flipped = zero_state(lay.num_qubits).apply(X(lay.reg1))
    s = run(controlled_feature_map(x, [(lay.reg1, 1)], lay), flipped)
    np.testing.assert_allclose(data_amplitudes(s, lay, (1, 0)), product_state(x), atol=1e-14)
    with pytest.raises(QubitIndexError):
        controlled_feature_map(x, [(0, 1)], lay)


def test_triplet_superposition_identical_inputs(rng):
    lay = RegisterLayout.default(2)
    a = rng.uniform(0, pi, 2)
    s = run(prepare_triplet_superposition(a, a, a, lay))
    for branch in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        np.testing.assert_allclose(data_amplitudes(s, lay, branch), product_state(a), atol=1e-14)
    np.testing.assert_allclose(probabilities(s, [lay.reg1]), [0.5, 0.5], atol=1e-14)
    np.testing.assert_allclose(probabilities(s, [lay.reg2]), [0.5, 0.5], atol=1e-14)


def test_triplet_superposition_hand_computed():
    # qubit 0 = data, 1 = reg1, 2 = reg2; index = data + 2*r1 + 4*r2
    lay = RegisterLayout.default(1)
    s = run(prepare_triplet_superposition([0], [pi], [pi], lay))
    expected = np.zeros(8)
    expected[0b000] = 0.5  # r1=0 r2=0 anchor |0>
    expected[0b100] = 0.5  # r1=0 r2=1 anchor |0>
    expected[0b011] = 0.5  # r1=1 r2=0 positive |1>
    expected[0b111] = 0.5  # r1=1 r2=1 negative |1>
    np.testing.assert_allclose(s.amps, expected, atol=1e-15)


def test_branch_probabilities_and_projection(rng):
    lay = RegisterLayout.default(3)
    for _ in range(5):
        a, p, n = rng.uniform(0, pi, (3, 3))
        s = run(prepare_triplet_superposition(a, p, n, lay))
        np.testing.assert_allclose(probabilities(s, [lay.reg1, lay.reg2]), [0.25] * 4,
                                   atol=1e-12)
        for branch, x in [((0, 0), a), ((0, 1), a), ((1, 0), p), ((1, 1), n)]:
            np.testing.assert_allclose(data_amplitudes(s, lay, branch), product_state(x),
                                       atol=1e-10)


def test_controlled_map_commutes_with_outside_gates(rng):
    lay = RegisterLayout(reg1=3, reg2=4, data=(0, 1, 2))
    s = random_state(rng, 6)  # qubit 5 lies outside controls and data
    x = rng.uniform(0, pi, 3)
    cm = controlled_feature_map(x, [(3, 1)], lay)
    cm = Circuit(6, cm.steps)
    other = Circuit(6, [H(5), CRY([(5, 1)], 4, 0.7)])
    np.testing.assert_allclose(run(cm + other, s).amps, run(other + cm, s).amps, atol=1e-12)


def test_dimension_reduction_empty_and_errors():
    lay = RegisterLayout.default(4)
    assert len(dimension_reduction(lay, [])) == 0
    with pytest.raises(QubitIndexError):
        dimension_reduction(lay, [(0, 1), (1, 2)])
    with pytest.raises(QubitIndexError):
        dimension_reduction(lay, [(0, lay.reg1)])


def test_dimension_reduction_deterministic_branch():
    lay = RegisterLayout(reg1=2, reg2=3, data=(0, 1))
    start = StateVector(np.eye(16)[0b0010])  # data qubit 1 set, qubit 0 clear
    circ = dimension_reduction(lay, [(1, 0)])
    out, bits = run_circuit(start, circ, np.random.default_rng(0))
    assert bits == [1]
    np.testing.assert_array_equal(out.amps, np.eye(16)[0b0011])
    assert reduced_data_qubits(lay, [(1, 0)]) == (0,)
    assert probabilities(out, [0])[1] == 1.0


def test_dimension_reduction_mixture_marginal(rng):
    # average over measurement outcomes equals the branch-weighted corrected marginal
    lay = RegisterLayout(reg1=2, reg2=3, data=(0, 1))
    s = StateVector(np.kron(np.eye(4)[0], random_state(rng, 2).amps))
    circ = dimension_reduction(lay, [(1, 0)])
    amps = s.amps.reshape(4, 2, 2)[0]  # [q1, q0]
    p_m = (np.abs(amps) ** 2).sum(axis=1)
    cond0 = np.abs(amps[0]) ** 2 / p_m[0]
    cond1 = (np.abs(amps[1]) ** 2 / p_m[1])[::-1]  # X on the partner swaps its outcomes
    expected = p_m[0] * cond0 + p_m[1] * cond1
    # both branches exactly, via forced outcomes
    class Forced:
        def __init__(self, v):
            self.v = v

        def random(self):
            return self.v

    got = np.zeros(2)
    for r, weight in ((0.0, p_m[1]), (0.999999999, p_m[0])):
        out, _ = run_circuit(s, circ, Forced(r))
        got += weight * probabilities(out, [0])
    np.testing.assert_allclose(got, expected, atol=1e-12)
