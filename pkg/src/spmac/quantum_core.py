"""One-particle states, NPE channels and POVMs over a path space with vacuum.

A system of ``M`` paths carrying at most one particle lives in an
``M + 1`` dimensional space.  Index 0 is the vacuum ``|0...0>`` and index
``i`` (1-based) is the particle sitting on path ``i``.  Keeping the vacuum
as an ordinary basis vector lets blocking and vacuum detection be plain
matrix operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
POVM_TOL = 1e-10


@dataclass(frozen=True)
class ModeSpace:
    """Vacuum plus ``num_paths`` single-occupation basis states."""

    num_paths: int

    def __post_init__(self):
        if int(self.num_paths) != self.num_paths or self.num_paths < 1:
            raise ValueError(f"num_paths must be a positive integer, got {self.num_paths!r}")

    @property
    def dim(self) -> int:
        return self.num_paths + 1

    def basis(self, index: int) -> np.ndarray:
        if not 0 <= index < self.dim:
            raise ValueError(f"basis index {index} outside 0..{self.dim - 1}")
        v = np.zeros(self.dim, dtype=complex)
        v[index] = 1.0
        return v

    def vector(self, path_amplitudes: Sequence[complex], vacuum: complex = 0.0) -> np.ndarray:
        """Ket with the given amplitudes on paths 1..M (and optionally vacuum)."""
        amps = np.asarray(path_amplitudes, dtype=complex)
        if amps.shape != (self.num_paths,):
            raise ValueError(f"expected {self.num_paths} path amplitudes, got {amps.shape}")
        return np.concatenate([[vacuum], amps])


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    space: ModeSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _readonly(self.amplitudes)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"amplitude vector has shape {amps.shape}, expected ({self.space.dim},)")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_paths(cls, path_amplitudes: Sequence[complex], vacuum: complex = 0.0) -> "PureState":
        space = ModeSpace(len(path_amplitudes))
        return cls(space, space.vector(path_amplitudes, vacuum))

    def density(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    space: ModeSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"density matrix has shape {m.shape}, expected ({d}, {d})")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix has trace {tr!r}, expected 1")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def conjugate(self, unitary: np.ndarray) -> "DensityOperator":
        u = np.asarray(unitary, dtype=complex)
        return DensityOperator(self.space, _hermitize(u @ self.matrix @ u.conj().T))


def as_density(state: PureState | DensityOperator) -> DensityOperator:
    if isinstance(state, PureState):
        return state.density()
    if isinstance(state, DensityOperator):
        return state
    raise TypeError(f"expected PureState or DensityOperator, got {type(state).__name__}")


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True)
class NpeBranch:
    """One extremal NPE channel (generalized amplitude damping with phases)."""

    weight: float
    gamma: float
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if self.weight < 0:
            raise ValueError(f"branch weight must be non-negative, got {self.weight!r}")

    def local_kraus(self) -> tuple[np.ndarray, np.ndarray]:
        """Kraus pair on the local {vacuum, occupied} qubit."""
        k1 = np.array([[1.0, 0.0], [0.0, np.exp(1j * self.phi1) * np.sqrt(1.0 - self.gamma)]])
        k2 = np.array([[0.0, np.exp(1j * self.phi2) * np.sqrt(self.gamma)], [0.0, 0.0]])
        return k1, k2

    def embedded_kraus(self, space: ModeSpace, path: int) -> tuple[np.ndarray, np.ndarray]:
        """Kraus pair lifted to the full one-particle-plus-vacuum space.

        "Occupied" is ``|e_path>``; every other basis state has path ``path``
        empty.  Damped amplitude lands on the vacuum index 0.
        """
        d = space.dim
        k1 = np.eye(d, dtype=complex)
        k1[path, path] = np.exp(1j * self.phi1) * np.sqrt(1.0 - self.gamma)
        k2 = np.zeros((d, d), dtype=complex)
        k2[0, path] = np.exp(1j * self.phi2) * np.sqrt(self.gamma)
        return k1, k2


@dataclass(frozen=True)
class NpeOperation:
    """Convex mixture of extremal NPE channels."""

    branches: tuple[NpeBranch, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise ValueError("an NPE operation needs at least one branch")
        total = sum(b.weight for b in branches)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {total!r}, expected 1")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def extremal(cls, gamma: float, phi1: float = 0.0, phi2: float = 0.0, name: str = "") -> "NpeOperation":
        return cls((NpeBranch(1.0, gamma, phi1, phi2),), name=name)

    @classmethod
    def identity(cls) -> "NpeOperation":
        return cls.extremal(0.0, name="id")

    @classmethod
    def blocking(cls) -> "NpeOperation":
        return cls.extremal(1.0, name="block")

    @classmethod
    def phase(cls, phi: float) -> "NpeOperation":
        # exp(-i Z phi/2) equals diag(1, e^{i phi}) up to a global phase
        return cls.extremal(0.0, phi1=phi, name=f"phase({phi:g})")

    @classmethod
    def mixture(cls, weights: Sequence[float], ops: Sequence["NpeOperation"]) -> "NpeOperation":
        branches = []
        for w, op in zip(weights, ops, strict=True):
            for b in op.branches:
                branches.append(NpeBranch(w * b.weight, b.gamma, b.phi1, b.phi2))
        return cls(tuple(branches))


def _check_path(space: ModeSpace, path: int) -> None:
    if int(path) != path or not 1 <= path <= space.num_paths:
        raise ValueError(f"path index must lie in 1..{space.num_paths}, got {path!r}")


def apply_npe(op: NpeOperation, target_path: int, state: PureState | DensityOperator) -> DensityOperator:
    """Apply an NPE operation locally on ``target_path``."""
    rho = as_density(state)
    _check_path(rho.space, target_path)
    out = np.zeros_like(rho.matrix)
    for b in op.branches:
        if b.weight == 0:
            continue
        k1, k2 = b.embedded_kraus(rho.space, target_path)
        out += b.weight * (k1 @ rho.matrix @ k1.conj().T + k2 @ rho.matrix @ k2.conj().T)
    return DensityOperator(rho.space, _hermitize(out))


@dataclass(frozen=True)
class Povm:
    space: ModeSpace
    elements: tuple[np.ndarray, ...]
    labels: tuple = ()
    support: tuple[int, ...] | None = None

    def __post_init__(self):
        d = self.space.dim
        elems = tuple(_readonly(e) for e in self.elements)
        if not elems:
            raise ValueError("a POVM needs at least one element")
        for e in elems:
            if e.shape != (d, d):
                raise ValueError(f"POVM element has shape {e.shape}, expected ({d}, {d})")
            if np.max(np.abs(e - e.conj().T)) > POVM_TOL:
                raise ValueError("POVM element is not Hermitian")
            if np.linalg.eigvalsh(e).min() < -POVM_TOL:
                raise ValueError("POVM element is not positive semidefinite")
        total = sum(elems)
        proj = self.support_projector()
        if np.max(np.abs(total - proj)) > POVM_TOL:
            raise ValueError("POVM elements do not sum to the identity on their support")
        labels = tuple(self.labels) if self.labels else tuple(range(len(elems)))
        if len(labels) != len(elems):
            raise ValueError("number of labels does not match number of elements")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "labels", labels)

    def support_projector(self) -> np.ndarray:
        d = self.space.dim
        if self.support is None:
            return np.eye(d)
        p = np.zeros((d, d))
        for i in self.support:
            p[i, i] = 1.0
        return p

    @classmethod
    def from_vectors(cls, space: ModeSpace, vectors: Sequence[np.ndarray], labels: Sequence = (),
                     support: tuple[int, ...] | None = None) -> "Povm":
        """Rank-one projective measurement onto the given kets."""
        elems = [np.outer(v, np.conj(v)) for v in (np.asarray(v, dtype=complex) for v in vectors)]
        return cls(space, tuple(elems), tuple(labels), support)

    def __len__(self) -> int:
        return len(self.elements)

    def conjugate(self, unitary: np.ndarray) -> "Povm":
        u = np.asarray(unitary, dtype=complex)
        elems = tuple(_hermitize(u @ e @ u.conj().T) for e in self.elements)
        return Povm(self.space, elems, self.labels, self.support)


def measure(povm: Povm, state: PureState | DensityOperator) -> np.ndarray:
    """Outcome probabilities Tr(Pi_y rho), tiny negatives clamped to 0."""
    rho = as_density(state)
    if rho.space.dim != povm.space.dim:
        raise ValueError(f"state dimension {rho.space.dim} does not match POVM dimension {povm.space.dim}")
    probs = np.array([np.trace(e @ rho.matrix).real for e in povm.elements])
    if probs.min() < -1e-12:
        raise ValueError(f"negative outcome probability {probs.min()!r}")
    return np.clip(probs, 0.0, None)


def orthonormal_check(vectors: Sequence[np.ndarray], tol: float = 1e-10) -> tuple[bool, float]:
    """Whether the vectors are orthonormal, plus the worst |<v_i|v_j> - delta_ij|."""
    if len(vectors) == 0:
        raise ValueError("need at least one vector")
    v = np.array([np.asarray(x, dtype=complex) for x in vectors])
    gram = v.conj() @ v.T
    dev = float(np.max(np.abs(gram - np.eye(len(v)))))
    return dev <= tol, dev
