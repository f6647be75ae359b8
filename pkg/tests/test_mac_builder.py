import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spmac.mac_builder import (ClassicalMacSpec, EncodingStrategy, SenderEncoding, TransitionMatrix,
                               assisted_to_unassisted, build_mac, canonical_classical_mac,
                               canonical_composition, classical_mac_from_spec, encoded_states,
                               n_sender_assisted_mac, n_sender_assisted_protocol, n_sender_initial_amplitudes,
                               one_sender_protocol, to_transition_balanced, transition_balanced_channel,
                               two_sender_binary_protocol)
from spmac.quantum_core import DensityOperator, ModeSpace, NpeOperation, Povm, PureState, measure, orthonormal_check

from conftest import random_stochastic, random_unitary

S = 1 / np.sqrt(2)


class TestTransitionMatrix:
    def test_rejects_non_stochastic(self):
        with pytest.raises(ValueError):
            TransitionMatrix(np.array([[0.5, 0.4], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            TransitionMatrix(np.array([[1.2, -0.2], [0.0, 1.0]]))

    def test_clamps_round_off(self):
        tm = TransitionMatrix(np.array([[1 + 1e-13, -1e-13], [0.0, 1.0]]))
        assert tm.p.min() == 0.0

    def test_json_round_trip_is_bit_exact(self, rng):
        p = random_stochastic(rng, 12, 5).reshape(2, 3, 2, 5)
        tm = TransitionMatrix(p)
        back = TransitionMatrix.from_json(tm.to_json())
        assert back.inputs == (2, 3, 2) and back.outputs == 5
        assert np.array_equal(back.p, tm.p)

    def test_json_layout(self):
        text = canonical_classical_mac([0.5, 0.5]).to_json()
        import json
        d = json.loads(text)
        assert d["inputs"] == [2, 2] and d["outputs"] == 3
        assert len(d["p"]) == 3 and len(d["p"][0]) == 4

    def test_json_shape_mismatch(self):
        with pytest.raises(ValueError):
            TransitionMatrix.from_json('{"inputs": [2], "outputs": 2, "p": [[1, 0, 0]]}')


class TestBuildMac:
    def test_assisted_protocol_in_transition_balanced_labeling(self):
        tb = to_transition_balanced(n_sender_assisted_mac(2)).p
        assert tb[1, 0, 1] == pytest.approx(1, abs=1e-12)
        assert tb[1, 1, 2] == pytest.approx(1, abs=1e-12)
        for x2 in (0, 1):
            assert np.allclose(tb[0, x2], [0.5, 0.25, 0.25], atol=1e-12)
        assert np.allclose(tb, transition_balanced_channel().p, atol=1e-12)

    @pytest.mark.parametrize("theta", [0.1, 0.4, np.pi / 4, 1.2])
    def test_two_sender_binary_probabilities(self, theta):
        p = build_mac(*two_sender_binary_protocol(theta)).p
        c, s = np.cos(theta), np.sin(theta)
        assert p[0, 0, 0] == pytest.approx(c * c, abs=1e-12)
        assert p[0, 1, 0] == pytest.approx(c * c, abs=1e-12)
        assert p[1, 0, 1] == pytest.approx(0.5 + c * s, abs=1e-12)
        assert p[1, 0, 2] == pytest.approx(0.5 - c * s, abs=1e-12)
        assert p[1, 1, 1] == pytest.approx(0.5 - c * s, abs=1e-12)
        # blocking path 1 leaves the particle on path 2 or nowhere
        assert p[0, 0, 1] == pytest.approx(s * s / 2, abs=1e-12)

    def test_two_sender_binary_keeps_four_inputs(self):
        p = build_mac(*two_sender_binary_protocol(0.7)).p
        assert p.shape == (2, 2, 3)
        assert np.allclose(p[0, 0], p[0, 1])

    def test_identity_encodings_with_own_projector(self):
        state = PureState.from_paths([0.6, 0.8j])
        pi0 = np.outer(state.amplitudes, state.amplitudes.conj())
        povm = Povm(state.space, (pi0, np.eye(3) - pi0))
        ops = (NpeOperation.identity(), NpeOperation.identity())
        enc = EncodingStrategy((SenderEncoding(ops, 1, (0.5, 0.5)), SenderEncoding(ops, 2, (0.5, 0.5))))
        p = build_mac(state, enc, povm).p
        assert np.allclose(p[..., 0], 1.0, atol=1e-12)

    def test_one_sender_protocol_shape(self):
        tm = build_mac(*one_sender_protocol(0.8, 0.5))
        assert tm.inputs == (3,) and tm.outputs == 3

    def test_distinct_paths_required(self):
        ops = (NpeOperation.identity(),)
        with pytest.raises(ValueError):
            EncodingStrategy((SenderEncoding(ops, 1, (1.0,)), SenderEncoding(ops, 1, (1.0,))))

    def test_prior_must_be_distribution(self):
        with pytest.raises(ValueError):
            SenderEncoding((NpeOperation.identity(), NpeOperation.blocking()), 1, (0.5, 0.6))

    def test_dimension_mismatch(self):
        state, enc, _ = one_sender_protocol(0.5, 0.5)
        space = ModeSpace(3)
        with pytest.raises(ValueError):
            build_mac(state, enc, Povm(space, (np.eye(4),)))

    def test_incomplete_povm(self):
        state, enc, _ = one_sender_protocol(0.5, 0.5)
        e = np.diag([0, 1.0, 0])
        povm = Povm(state.space, (e,), support=(1,))
        with pytest.raises(ValueError):
            build_mac(state, enc, povm)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0, np.pi / 2))
    def test_unitary_invariance(self, seed, theta):
        rng = np.random.default_rng(seed)
        state, enc, povm = two_sender_binary_protocol(theta)
        u = random_unitary(rng, 3)
        rotated = povm.conjugate(u)
        for x, rho in encoded_states(state, enc).items():
            a = measure(povm, rho)
            b = measure(rotated, rho.conjugate(u))
            assert np.max(np.abs(a - b)) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_columns_stochastic(self, n):
        p = build_mac(*n_sender_assisted_protocol(n)).p
        assert np.max(np.abs(p.sum(-1) - 1)) < 1e-10


class TestCanonicalMac:
    def test_lambda_one(self):
        p = canonical_classical_mac([1.0, 0.0]).p
        # outputs: 0 = nothing, 1 = path 1, 2 = path 2
        assert p[0, 0, 0] == 1 and p[0, 1, 0] == 1 and p[1, 0, 1] == 1
        assert np.all(p[..., 2] == 0)

    @pytest.mark.parametrize("lam", [0.0, 0.3, 0.5, 0.9])
    def test_general_lambda(self, lam):
        p = canonical_classical_mac([lam, 1 - lam]).p
        assert p[0, 0, 0] == pytest.approx(1)
        assert p[1, 0, 1] == pytest.approx(lam)
        assert p[1, 0, 0] == pytest.approx(1 - lam)
        assert p[0, 1, 2] == pytest.approx(1 - lam)
        assert p[0, 1, 0] == pytest.approx(lam)
        assert p[1, 1, 1] == pytest.approx(lam)
        assert p[1, 1, 2] == pytest.approx(1 - lam)

    def test_zero_weight_senders_are_ignored(self):
        p = canonical_classical_mac([1.0, 0.0, 0.0]).p
        for x in itertools.product((0, 1), repeat=3):
            assert np.array_equal(p[x], p[x[0], 0, 0])

    def test_invalid_weights(self):
        with pytest.raises(ValueError):
            canonical_classical_mac([0.7, 0.7])


class TestClassicalSpec:
    def test_transmit_block_single_path(self):
        spec = ClassicalMacSpec(np.array([1.0]), (np.eye(2),), np.eye(2))
        assert np.array_equal(classical_mac_from_spec(spec).p, np.eye(2))

    def test_canonical_spec_reproduces_canonical_mac(self):
        w = np.array([0.2, 0.5, 0.3])
        spec = ClassicalMacSpec(w, tuple(np.array([[1.0, 0.0], [0.0, 1.0]]) for _ in w), np.eye(4))
        assert np.allclose(classical_mac_from_spec(spec).p, canonical_classical_mac(w).p, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
    def test_composition_matches_spec(self, seed, n):
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.ones(n))
        encs = tuple(random_stochastic(rng, int(rng.integers(1, 4)), 2) for _ in range(n))
        spec = ClassicalMacSpec(w, encs, random_stochastic(rng, n + 1, 3))
        assert np.max(np.abs(classical_mac_from_spec(spec).p - canonical_composition(spec).p)) < 1e-12

    def test_rejects_bad_decoder(self):
        with pytest.raises(ValueError):
            ClassicalMacSpec(np.array([1.0]), (np.eye(2),), np.ones((2, 2)))


class TestAssistedProtocol:
    def test_two_senders_initial_amplitudes(self):
        state, _, _ = n_sender_assisted_protocol(2)
        assert np.allclose(state.amplitudes, [0, S, 0.5, 0.5])

    def test_one_sender(self):
        state, _, povm = n_sender_assisted_protocol(1)
        assert np.allclose(state.amplitudes[1:], [S, S])
        assert np.allclose(povm.elements[0][1:, 1:], 0.5 * np.ones((2, 2)))
        assert np.allclose(povm.elements[1][1:, 1:], 0.5 * np.array([[1, -1], [-1, 1]]))

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_amplitudes_normalized(self, n):
        assert np.sum(n_sender_initial_amplitudes(n) ** 2) == pytest.approx(1, abs=1e-14)

    def test_decoding_basis_orthonormal(self):
        _, _, povm = n_sender_assisted_protocol(5)
        ok, dev = orthonormal_check([np.linalg.eigh(e)[1][:, -1] for e in povm.elements], tol=1e-12)
        assert ok, dev

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_nesting(self, n):
        small = build_mac(*n_sender_assisted_protocol(n)).p
        big = build_mac(*n_sender_assisted_protocol(n + 1)).p[..., 0, :]
        # outcome b_{N+1} of the larger decoder never fires when the last sender idles
        assert np.max(big[..., n + 1]) < 1e-12
        assert np.max(np.abs(big[..., : n + 1] - small[..., : n + 1])) < 1e-12


class TestAssistedToUnassisted:
    def test_two_sender_transformed_decoder(self):
        eq = assisted_to_unassisted(2)
        vecs = [np.linalg.eigh(e)[1][:, -1] for e in eq.transformed_povm.elements[:3]]
        expected = [np.array([0, S, S, 0]), np.array([0, -S, S, 0]), np.array([0, 0, 0, 1])]
        for v, w in zip(vecs, expected):
            assert abs(abs(np.vdot(v, w)) - 1) < 1e-12

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_same_channel(self, n):
        eq = assisted_to_unassisted(n)
        unassisted = build_mac(eq.initial, eq.encoding, eq.povm).p
        assert np.max(np.abs(unassisted - n_sender_assisted_mac(n).p)) < 1e-12

    def test_dephased_states_give_same_statistics(self):
        eq = assisted_to_unassisted(3)
        state, enc, _ = n_sender_assisted_protocol(3)
        direct = build_mac(state, enc, n_sender_assisted_protocol(3)[2]).p
        for x, rho in eq.transformed_states.items():
            assert isinstance(rho, DensityOperator)
            assert np.max(np.abs(measure(eq.transformed_povm, rho) - direct[x])) < 1e-12

    def test_last_sender_blocks(self):
        eq = assisted_to_unassisted(2)
        assert eq.encoding.senders[-1].ops[1].name == "block"

    def test_needs_two_senders(self):
        with pytest.raises(ValueError):
            assisted_to_unassisted(1)
