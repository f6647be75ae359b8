"""Classical MACs induced by single-particle encodings and measurements.

Transition matrices are stored as arrays of shape ``(m_1, ..., m_N, K)``
holding ``p(y | x_1 ... x_N)``.  Protocol constructors return their
ingredients (initial state, encoding strategy, POVM) so that the same
objects can be fed to the Holevo and accessible-information code.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quantum_core import (
    DensityOperator,
    ModeSpace,
    NpeOperation,
    Povm,
    PureState,
    apply_npe,
    as_density,
    measure,
    orthonormal_check,
)

STOCHASTIC_TOL = 1e-10


@dataclass(frozen=True)
class TransitionMatrix:
    """``p[x_1, ..., x_N, y] = p(y | x_1 ... x_N)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim < 2:
            raise ValueError("transition matrix needs at least one input axis and the output axis")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ValueError("transition probabilities must lie in [0, 1]")
        p = np.clip(p, 0.0, 1.0)
        sums = p.sum(axis=-1)
        if np.max(np.abs(sums - 1.0)) > STOCHASTIC_TOL:
            raise ValueError(f"rows do not sum to one (max deviation {np.max(np.abs(sums - 1.0)):.3g})")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def inputs(self) -> tuple[int, ...]:
        return self.p.shape[:-1]

    @property
    def outputs(self) -> int:
        return self.p.shape[-1]

    @property
    def num_senders(self) -> int:
        return self.p.ndim - 1

    def flat(self) -> np.ndarray:
        """Point-to-point view: joint inputs in C order, shape (prod m_i, K)."""
        return self.p.reshape(-1, self.outputs)

    def __getitem__(self, key):
        return self.p[key]

    def permute_senders(self, order: Sequence[int]) -> "TransitionMatrix":
        """New matrix whose sender ``k`` is old sender ``order[k]``."""
        return TransitionMatrix(np.transpose(self.p, tuple(order) + (self.num_senders,)))

    def relabel_inputs(self, sender: int, perm: Sequence[int]) -> "TransitionMatrix":
        """New input symbol ``j`` of ``sender`` is old symbol ``perm[j]``."""
        return TransitionMatrix(np.take(self.p, list(perm), axis=sender))

    def relabel_outputs(self, perm: Sequence[int]) -> "TransitionMatrix":
        """New output ``k`` is old output ``perm[k]``."""
        return TransitionMatrix(self.p[..., list(perm)])

    def post_process(self, stochastic: np.ndarray) -> "TransitionMatrix":
        """Compose with a classical channel ``stochastic[y, z] = w(z | y)``."""
        return TransitionMatrix(self.p @ np.asarray(stochastic, dtype=float))

    def to_json(self) -> str:
        rows = self.flat().T
        return json.dumps({"inputs": list(self.inputs), "outputs": self.outputs,
                           "p": [[float(v) for v in row] for row in rows]})

    @classmethod
    def from_json(cls, text: str) -> "TransitionMatrix":
        d = json.loads(text)
        rows = np.array(d["p"], dtype=float)
        if rows.shape != (d["outputs"], int(np.prod(d["inputs"]))):
            raise ValueError("JSON payload shape does not match declared alphabets")
        return cls(rows.T.reshape(tuple(d["inputs"]) + (d["outputs"],)))


def _check_distribution(p, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0 or p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"{what} is not a probability vector: {p!r}")
    return np.clip(p, 0.0, None)


@dataclass(frozen=True)
class SenderEncoding:
    ops: tuple[NpeOperation, ...]
    path: int
    prior: np.ndarray

    def __post_init__(self):
        ops = tuple(self.ops)
        prior = _check_distribution(self.prior, "sender prior")
        if len(prior) != len(ops):
            raise ValueError("prior length does not match the number of messages")
        prior.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "prior", prior)

    @property
    def alphabet(self) -> int:
        return len(self.ops)


@dataclass(frozen=True)
class EncodingStrategy:
    senders: tuple[SenderEncoding, ...]

    def __post_init__(self):
        senders = tuple(self.senders)
        paths = [s.path for s in senders]
        if len(set(paths)) != len(paths):
            raise ValueError("distinct senders must act on distinct paths")
        object.__setattr__(self, "senders", senders)

    @property
    def sender_count(self) -> int:
        return len(self.senders)

    @property
    def alphabets(self) -> tuple[int, ...]:
        return tuple(s.alphabet for s in self.senders)

    @property
    def priors(self) -> list[np.ndarray]:
        return [s.prior for s in self.senders]

    def with_priors(self, priors: Sequence[Sequence[float]]) -> "EncodingStrategy":
        return EncodingStrategy(tuple(SenderEncoding(s.ops, s.path, np.asarray(p, dtype=float))
                                      for s, p in zip(self.senders, priors, strict=True)))

    def messages(self):
        return itertools.product(*(range(m) for m in self.alphabets))


def encode(initial: PureState | DensityOperator, enc: EncodingStrategy, message: Sequence[int]) -> DensityOperator:
    """Apply every sender's channel for ``message`` in turn."""
    rho = as_density(initial)
    for sender, x in zip(enc.senders, message, strict=True):
        rho = apply_npe(sender.ops[x], sender.path, rho)
    return rho


def encoded_states(initial, enc: EncodingStrategy) -> dict[tuple[int, ...], DensityOperator]:
    return {x: encode(initial, enc, x) for x in enc.messages()}


def build_mac(initial: PureState | DensityOperator, enc: EncodingStrategy, povm: Povm) -> TransitionMatrix:
    """Enumerate all joint messages and measure the encoded states."""
    rho = as_density(initial)
    if rho.space.dim != povm.space.dim:
        raise ValueError("initial state and POVM live on different mode spaces")
    for s in enc.senders:
        if not 1 <= s.path <= rho.space.num_paths:
            raise ValueError(f"sender path {s.path} outside 1..{rho.space.num_paths}")
    if povm.support is not None:
        raise ValueError("build_mac needs a POVM complete on the whole space")
    p = np.zeros(enc.alphabets + (len(povm),))
    for x in enc.messages():
        p[x] = measure(povm, encode(rho, enc, x))
    return TransitionMatrix(p)


def canonical_classical_mac(weights: Sequence[float]) -> TransitionMatrix:
    """Binary-input, (N+1)-output canonical MAC of a classical particle.

    Output ``k >= 1`` means the particle arrived along path ``k``; output 0
    means nothing arrived.
    """
    w = _check_distribution(weights, "path weights")
    n = len(w)
    p = np.zeros((2,) * n + (n + 1,))
    for j in itertools.product((0, 1), repeat=n):
        for k in range(n):
            if j[k]:
                p[j + (k + 1,)] = w[k]
            else:
                p[j + (0,)] += w[k]
    return TransitionMatrix(p)


@dataclass(frozen=True)
class ClassicalMacSpec:
    """Classical source, per-sender block/transmit encoders and a decoder.

    ``encoders[i][x, 0]`` is the blocking probability q_i(0|x) and
    ``encoders[i][x, 1]`` the transmission probability q_i(e_i|x).
    ``decoder[0]`` is d(.|0) and ``decoder[k]`` is d(.|e_k).
    """

    weights: np.ndarray
    encoders: tuple[np.ndarray, ...]
    decoder: np.ndarray

    def __post_init__(self):
        w = _check_distribution(self.weights, "path weights")
        encs = tuple(np.asarray(e, dtype=float) for e in self.encoders)
        dec = np.asarray(self.decoder, dtype=float)
        if len(encs) != len(w):
            raise ValueError("need one encoder per path")
        for e in encs:
            if e.ndim != 2 or e.shape[1] != 2 or e.min() < -1e-12 or np.max(np.abs(e.sum(1) - 1)) > 1e-12:
                raise ValueError("encoders must be stochastic (m_i x 2) matrices")
        if dec.ndim != 2 or dec.shape[0] != len(w) + 1 or dec.min() < -1e-12 or np.max(np.abs(dec.sum(1) - 1)) > 1e-12:
            raise ValueError("decoder must be a stochastic (N+1 x |Y|) matrix")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "encoders", encs)
        object.__setattr__(self, "decoder", dec)


def classical_mac_from_spec(spec: ClassicalMacSpec) -> TransitionMatrix:
    n = len(spec.weights)
    alph = tuple(e.shape[0] for e in spec.encoders)
    ny = spec.decoder.shape[1]
    p = np.zeros(alph + (ny,))
    for x in itertools.product(*(range(m) for m in alph)):
        for i in range(n):
            q = spec.encoders[i][x[i]]
            p[x] += spec.weights[i] * (spec.decoder[0] * q[0] + spec.decoder[i + 1] * q[1])
    return TransitionMatrix(p)


def canonical_composition(spec: ClassicalMacSpec) -> TransitionMatrix:
    """Canonical MAC wrapped in the spec's encoders and decoder."""
    canon = canonical_classical_mac(spec.weights).p
    n = len(spec.weights)
    out = canon
    # contract each binary input axis with its pre-processing map q_i(j|x)
    for i, q in enumerate(spec.encoders):
        out = np.moveaxis(np.tensordot(q, out, axes=([1], [i])), 0, i)
    del n
    return TransitionMatrix(out @ spec.decoder)


# ----------------------------------------------------------------------------
# Named protocols


def one_sender_protocol(theta: float, q: float, alpha: float = np.pi) -> tuple[PureState, EncodingStrategy, Povm]:
    """Single sender on path 1 plus an assistance path 2.

    Messages: 0 blocks, 1 does nothing, 2 applies phase ``alpha``; prior
    (1-q, q/2, q/2).  Decoding in {|00>, (|e1> +- |e2>)/sqrt2}.
    """
    state = PureState.from_paths([np.cos(theta), np.sin(theta)])
    ops = (NpeOperation.blocking(), NpeOperation.identity(), NpeOperation.phase(alpha))
    enc = EncodingStrategy((SenderEncoding(ops, 1, [1 - q, q / 2, q / 2]),))
    return state, enc, plus_minus_povm(state.space)


def plus_minus_povm(space: ModeSpace) -> Povm:
    """{|vac>, (|e1>+|e2>)/sqrt2, (|e1>-|e2>)/sqrt2} on a two-path space."""
    if space.num_paths != 2:
        raise ValueError("the +/- decoder is defined on two paths")
    s = 1 / np.sqrt(2)
    return Povm.from_vectors(space, [space.basis(0), space.vector([s, s]), space.vector([s, -s])])


def two_sender_binary_protocol(theta: float, alpha: float = np.pi,
                               priors=((0.5, 0.5), (0.5, 0.5))) -> tuple[PureState, EncodingStrategy, Povm]:
    """Unassisted two-sender protocol with on-off keying and phase keying.

    Sender 1 (path 1) blocks on 0 and transmits on 1; sender 2 (path 2)
    does nothing on 0 and applies phase ``alpha`` on 1.
    """
    state = PureState.from_paths([np.cos(theta), np.sin(theta)])
    s1 = SenderEncoding((NpeOperation.blocking(), NpeOperation.identity()), 1, priors[0])
    s2 = SenderEncoding((NpeOperation.identity(), NpeOperation.phase(alpha)), 2, priors[1])
    return state, EncodingStrategy((s1, s2)), plus_minus_povm(state.space)


def two_sender_ternary_protocol(theta: float, q: float, q_prime: float,
                                alpha: float = np.pi) -> tuple[PureState, EncodingStrategy, Povm]:
    """Unassisted binary x ternary protocol.

    Sender 1 uses on-off keying with transmit probability ``q``; sender 2
    uses {block, identity, phase alpha} with prior (1-q', q'/2, q'/2).
    The ternary sender sits on the path with amplitude cos(theta), the
    on-off sender on the path with amplitude sin(theta).
    """
    state = PureState.from_paths([np.cos(theta), np.sin(theta)])
    s1 = SenderEncoding((NpeOperation.blocking(), NpeOperation.identity()), 2, [1 - q, q])
    s2 = SenderEncoding((NpeOperation.blocking(), NpeOperation.identity(), NpeOperation.phase(alpha)),
                        1, [1 - q_prime, q_prime / 2, q_prime / 2])
    return state, EncodingStrategy((s1, s2)), plus_minus_povm(state.space)


def n_sender_initial_amplitudes(n: int) -> np.ndarray:
    """Beam-splitter cascade: 2^{-i/2} on path i <= N, 2^{-N/2} on path N+1."""
    if n < 1:
        raise ValueError("need at least one sender")
    return np.array([2.0 ** (-i / 2) for i in range(1, n + 1)] + [2.0 ** (-n / 2)])


def n_sender_decoding_vectors(n: int) -> list[np.ndarray]:
    """Path amplitudes (paths 1..N+1) of the decoding kets |b_0> ... |b_N>."""
    vecs = []
    b0 = n_sender_initial_amplitudes(n)
    vecs.append(b0)
    b1 = b0.copy()
    b1[0] = -b1[0]
    vecs.append(b1)
    for j in range(2, n + 1):
        b = np.zeros(n + 1)
        b[j - 1] = -1 / np.sqrt(2)
        for i in range(j + 1, n + 1):
            b[i - 1] = 2.0 ** (-(i - j + 1) / 2)
        b[n] = 2.0 ** (-(n - j + 1) / 2)
        vecs.append(b)
    return vecs


def n_sender_assisted_protocol(n: int, priors=None) -> tuple[PureState, EncodingStrategy, Povm]:
    """N senders with 0/pi phase keying plus one assistance path.

    The POVM has N+2 elements: the N+1 decoding projectors and the vacuum
    projector (which never fires, since nothing blocks).
    """
    amps = n_sender_initial_amplitudes(n)
    space = ModeSpace(n + 1)
    state = PureState(space, space.vector(amps))
    if priors is None:
        priors = [(0.5, 0.5)] * n
    ops = (NpeOperation.identity(), NpeOperation.phase(np.pi))
    enc = EncodingStrategy(tuple(SenderEncoding(ops, i + 1, priors[i]) for i in range(n)))
    vecs = [space.vector(b) for b in n_sender_decoding_vectors(n)]
    ok, dev = orthonormal_check(vecs, tol=1e-12)
    if not ok:  # pragma: no cover - guarded by tests
        raise RuntimeError(f"decoding vectors not orthonormal (deviation {dev:.3g})")
    vecs.append(space.basis(0))
    labels = tuple(range(n + 1)) + ("vac",)
    return state, enc, Povm.from_vectors(space, vecs, labels)


def drop_vacuum_output(tm: TransitionMatrix) -> TransitionMatrix:
    """Drop the (never firing) vacuum column of an assisted-protocol MAC."""
    if np.max(tm.p[..., -1]) > 1e-12:
        raise ValueError("vacuum outcome has non-zero probability")
    p = tm.p[..., :-1]
    return TransitionMatrix(p / p.sum(axis=-1, keepdims=True))


def n_sender_assisted_mac(n: int) -> TransitionMatrix:
    return drop_vacuum_output(build_mac(*n_sender_assisted_protocol(n)))


@dataclass(frozen=True)
class UnassistedEquivalent:
    """Ingredients of the assisted-to-unassisted conversion.

    ``rotation`` maps the assisted encoded states to the equivalent form;
    ``transformed_states`` are rotated and dephased across the
    ``blocks``; ``transformed_povm`` is the rotated assisted decoder.  The
    remaining fields describe the unassisted protocol on N paths in which
    the vacuum stands in for the old assistance path.
    """

    rotation: np.ndarray
    blocks: tuple[tuple[int, ...], ...]
    transformed_states: dict
    transformed_povm: Povm
    initial: PureState
    encoding: EncodingStrategy
    povm: Povm


def _dephase(rho: DensityOperator, blocks) -> DensityOperator:
    m = np.zeros_like(rho.matrix)
    for blk in blocks:
        idx = np.ix_(blk, blk)
        m[idx] = rho.matrix[idx]
    return DensityOperator(rho.space, m)


def assisted_to_unassisted(n: int) -> UnassistedEquivalent:
    """Trade the assistance path for a blocking sender.

    The last sender and the assistance path carry equal amplitude, so the
    rotation (e_N + e_{N+1})/sqrt2 -> e_N, (e_{N+1} - e_N)/sqrt2 -> e_{N+1}
    turns phase keying on path N into a which-path choice.  The rotated
    decoder has no coherence between paths 1..N and path N+1, so the states
    can be dephased across that cut without changing any probability;
    renaming e_{N+1} as the vacuum gives sender N a blocking encoder.
    """
    if n < 2:
        raise ValueError("the conversion needs at least two senders")
    state, enc, povm = n_sender_assisted_protocol(n)
    space = state.space
    d = space.dim
    s = 1 / np.sqrt(2)
    u = np.eye(d, dtype=complex)
    a, r = n, n + 1
    u[np.ix_([a, r], [a, r])] = [[s, s], [-s, s]]
    blocks = (tuple(range(0, n + 1)), (n + 1,))
    rotated = povm.conjugate(u)
    states = {x: _dephase(rho.conjugate(u), blocks) for x, rho in encoded_states(state, enc).items()}

    # unassisted protocol: N paths, e_{N+1} of the assisted space -> vacuum
    small = ModeSpace(n)
    amps = np.array([2.0 ** (-i / 2) for i in range(1, n)] + [2.0 ** (-(n - 1) / 2)])
    initial = PureState(small, small.vector(amps))
    phase_ops = (NpeOperation.identity(), NpeOperation.phase(np.pi))
    senders = [SenderEncoding(phase_ops, i, (0.5, 0.5)) for i in range(1, n)]
    senders.append(SenderEncoding((NpeOperation.identity(), NpeOperation.blocking()), n, (0.5, 0.5)))
    perm = [r] + list(range(1, n + 1))  # new index k <- old index perm[k]
    elems = []
    for e in rotated.elements[:-1]:  # the assisted vacuum projector never fires
        elems.append(e[np.ix_(perm, perm)])
    small_povm = Povm(small, tuple(elems), rotated.labels[:-1])
    return UnassistedEquivalent(u, blocks, states, rotated, initial, EncodingStrategy(tuple(senders)), small_povm)


# Prior that attains log2(17/8) on the two-sender assisted channel, in the
# labeling produced by n_sender_assisted_protocol(2).
OPTIMAL_PRIOR_ASSISTED = ((0.5, 0.5), (15 / 17, 2 / 17))
# The same prior after to_transition_balanced: the on-off sender comes first.
OPTIMAL_PRIOR_TB = ((2 / 17, 15 / 17), (0.5, 0.5))


def to_transition_balanced(tm: TransitionMatrix) -> TransitionMatrix:
    """Relabel the two-sender assisted channel into the experiment's labeling.

    The experiment's sender 1 is the assisted sender 2 with its bit flipped
    (1 means "deterministic outcome"), its sender 2 is the assisted sender 1,
    and outputs (0, 1, 2) are the assisted outputs (2, 0, 1).
    """
    if tm.inputs != (2, 2) or tm.outputs != 3:
        raise ValueError("expected a 2x2 -> 3 channel")
    return tm.permute_senders((1, 0)).relabel_inputs(0, (1, 0)).relabel_outputs((2, 0, 1))


def transition_balanced_channel() -> TransitionMatrix:
    """Ideal two-sender channel p(y | x1 x2) in the experiment's labeling."""
    p = np.zeros((2, 2, 3))
    p[0, 0] = p[0, 1] = (0.5, 0.25, 0.25)
    p[1, 0] = (0, 1, 0)
    p[1, 1] = (0, 0, 1)
    return TransitionMatrix(p)
