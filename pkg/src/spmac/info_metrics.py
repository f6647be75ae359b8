"""Shannon and von Neumann functionals in bits, plus two-sender rate regions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .quantum_core import DensityOperator
from .mac_builder import TransitionMatrix, canonical_classical_mac

EIG_CUTOFF = 1e-12


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def entropy(dist) -> float:
    """Shannon entropy in bits of any array of probabilities summing to 1."""
    p = np.asarray(dist, dtype=float)
    if p.size == 0 or p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("entropy needs a probability distribution")
    return float(-_xlogx(np.clip(p, 0, None)).sum())


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x!r} outside [0, 1]")
    return float(-_xlogx(np.array([x, 1.0 - x])).sum())


def joint_distribution(tm: TransitionMatrix, priors: Sequence[Sequence[float]]) -> np.ndarray:
    """p(x_1, ..., x_N, y) for independent senders."""
    if len(priors) != tm.num_senders:
        raise ValueError("need one prior per sender")
    px = np.ones(())
    for pr in priors:
        pr = np.asarray(pr, dtype=float)
        if pr.min() < -1e-12 or abs(pr.sum() - 1) > 1e-12:
            raise ValueError(f"invalid prior {pr!r}")
        px = np.multiply.outer(px, pr)
    if px.shape != tm.inputs:
        raise ValueError("prior lengths do not match the input alphabets")
    return px[..., None] * tm.p


def _marginal_entropy(joint: np.ndarray, keep: Sequence[int]) -> float:
    keep = sorted(set(keep))
    if not keep:
        return 0.0
    drop = tuple(i for i in range(joint.ndim) if i not in keep)
    return float(-_xlogx(joint.sum(axis=drop)).sum())


def mutual_information(joint, a: Sequence[int], b: Sequence[int], given: Sequence[int] = ()) -> float:
    """I(A : B | C) in bits for index groups of a joint distribution array.

    Conditional information uses I(A:B|C) = I(AC:B) - I(C:B).
    """
    joint = np.asarray(joint, dtype=float)
    if joint.min() < -1e-12 or abs(joint.sum() - 1.0) > 1e-10:
        raise ValueError("joint distribution is not normalized")
    groups = [list(a), list(b), list(given)]
    flat = [i for g in groups for i in g]
    if not a or not b or len(set(flat)) != len(flat) or any(not 0 <= i < joint.ndim for i in flat):
        raise ValueError("malformed partition")
    h = lambda idx: _marginal_entropy(joint, idx)  # noqa: E731
    ac, c = groups[0] + groups[2], groups[2]
    i_acb = h(ac) + h(groups[1]) - h(ac + groups[1])
    i_cb = h(c) + h(groups[1]) - h(c + groups[1]) if c else 0.0
    return i_acb - i_cb


def channel_mutual_information(tm: TransitionMatrix, priors: Sequence[Sequence[float]]) -> float:
    """I(X_1 ... X_N : Y) for independent priors."""
    joint = joint_distribution(tm, priors)
    n = tm.num_senders
    return mutual_information(joint, list(range(n)), [n])


def flat_mutual_information(p_x: np.ndarray, channel: np.ndarray) -> float:
    """I(X:Y) for a joint-input prior ``p_x`` and row-stochastic ``channel``."""
    joint = np.asarray(p_x, dtype=float)[:, None] * np.asarray(channel, dtype=float)
    return mutual_information(joint, [0], [1])


def von_neumann_entropy(rho: DensityOperator | np.ndarray) -> float:
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    ev = np.linalg.eigvalsh(m)
    if ev.min() < -1e-10:
        raise ValueError("state is not positive semidefinite")
    ev = ev[ev > EIG_CUTOFF]
    return float(-(ev * np.log2(ev)).sum())


@dataclass(frozen=True)
class CqEnsemble:
    priors: np.ndarray
    states: tuple[DensityOperator, ...]

    def __post_init__(self):
        p = np.asarray(self.priors, dtype=float)
        states = tuple(self.states)
        if p.ndim != 1 or len(p) != len(states):
            raise ValueError("one prior weight per state is required")
        if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("ensemble priors are not a distribution")
        dims = {s.space.dim for s in states}
        if len(dims) != 1:
            raise ValueError("ensemble states live on different spaces")
        object.__setattr__(self, "priors", np.clip(p, 0, None))
        object.__setattr__(self, "states", states)

    @classmethod
    def from_encoding(cls, initial, enc) -> "CqEnsemble":
        """Product-prior ensemble of an EncodingStrategy applied to ``initial``."""
        from .mac_builder import encoded_states

        states = encoded_states(initial, enc)
        weights = [float(np.prod([enc.senders[i].prior[xi] for i, xi in enumerate(x)])) for x in states]
        return cls(np.array(weights), tuple(states.values()))

    def average(self) -> np.ndarray:
        return sum(w * s.matrix for w, s in zip(self.priors, self.states))


def holevo_chi(ensemble: CqEnsemble) -> float:
    avg = von_neumann_entropy(ensemble.average())
    return avg - float(sum(w * von_neumann_entropy(s) for w, s in zip(ensemble.priors, ensemble.states) if w > 0))


@dataclass(frozen=True)
class RateRegion:
    """Two-sender pentagon for a fixed product prior."""

    i1_given_2: float
    i2_given_1: float
    i_sum: float
    i1: float
    i2: float
    prior: tuple

    @property
    def corner_star(self) -> tuple[float, float]:
        """(I(X1:Y), I(X2:Y|X1)): sender 1 decoded first."""
        return self.i1, self.i2_given_1

    @property
    def corner_dstar(self) -> tuple[float, float]:
        """(I(X1:Y|X2), I(X2:Y)): sender 2 decoded first."""
        return self.i1_given_2, self.i2

    def vertices(self) -> list[tuple[float, float]]:
        """Pentagon vertices, counter-clockwise from the origin."""
        return [(0.0, 0.0), (self.i1_given_2, 0.0), self.corner_dstar, self.corner_star, (0.0, self.i2_given_1)]

    def contains(self, r1: float, r2: float, tol: float = 1e-12) -> bool:
        return (r1 >= -tol and r2 >= -tol and r1 <= self.i1_given_2 + tol
                and r2 <= self.i2_given_1 + tol and r1 + r2 <= self.i_sum + tol)


def rate_region_two_sender(tm: TransitionMatrix, prior: Sequence[Sequence[float]]) -> RateRegion:
    if tm.num_senders != 2:
        raise ValueError("rate_region_two_sender needs exactly two senders")
    joint = joint_distribution(tm, prior)
    return RateRegion(
        i1_given_2=mutual_information(joint, [0], [2], [1]),
        i2_given_1=mutual_information(joint, [1], [2], [0]),
        i_sum=mutual_information(joint, [0, 1], [2]),
        i1=mutual_information(joint, [0], [2]),
        i2=mutual_information(joint, [1], [2]),
        prior=tuple(tuple(float(v) for v in p) for p in prior),
    )


# ----------------------------------------------------------------------------
# Classical two-sender sweep


@dataclass(frozen=True)
class ClassicalSweep:
    lambdas: np.ndarray
    rate_sums: np.ndarray
    r1_star: np.ndarray
    r2_star: np.ndarray
    r1_dstar: np.ndarray
    r2_dstar: np.ndarray
    boundary: np.ndarray
    hull: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "R1_star", "R2_star", "R1_dstar", "R2_dstar", "R_sum"])
        for row in zip(self.lambdas, self.r1_star, self.r2_star, self.r1_dstar, self.r2_dstar, self.rate_sums):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def boundary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R1", "R2"])
        for r1, r2 in self.boundary:
            w.writerow([repr(float(r1)), repr(float(r2))])
        return buf.getvalue()


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Convex-hull vertices of the union of pentagons, counter-clockwise."""
    pts = np.unique(np.round(points, 14), axis=0)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        # collinear union (a single degenerate lambda): keep the two ends
        return pts[[0, -1]] if len(pts) > 1 else pts
    return pts[hull.vertices]


def classical_region_sweep(lambdas: Sequence[float] | int = 201, prior_grid: int = 41,
                           seed: int = 0, tol: float = 1e-9, restarts: int = 4) -> ClassicalSweep:
    """Corner-point curves and union region of the two-sender canonical MACs.

    For each weight lambda the rate sum is maximized over product priors
    with the MAC Blahut-Arimoto solver, and the two pentagon corners at the
    optimal prior are recorded.  The union region is the upper envelope of
    all pentagons obtained on a ``prior_grid`` x ``prior_grid`` grid of
    product priors together with the optimal ones.  These two-sender
    channels have few stationary points, so fewer restarts are used than the
    solver's default.
    """
    from .capacity import ba_mac_rate_sum

    if isinstance(lambdas, (int, np.integer)):
        if lambdas < 1:
            raise ValueError("empty lambda grid")
        lambdas = np.linspace(0.0, 1.0, int(lambdas)) if lambdas > 1 else np.array([0.5])
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        raise ValueError("empty lambda grid")
    if lam.min() < 0 or lam.max() > 1:
        raise ValueError("lambda values must lie in [0, 1]")

    sums, r1s, r2s, r1d, r2d = (np.zeros(lam.size) for _ in range(5))
    pts = []
    g = np.linspace(0.0, 1.0, prior_grid)
    a, b = (v.reshape(-1) for v in np.meshgrid(g, g, indexing="ij"))
    for k, l in enumerate(lam):
        tm = canonical_classical_mac([l, 1.0 - l])
        res = ba_mac_rate_sum(tm, restarts=restarts, seed=seed, tol=tol, upper_bound=False)
        reg = rate_region_two_sender(tm, res.prior)
        sums[k] = reg.i_sum
        r1s[k], r2s[k] = reg.corner_star
        r1d[k], r2d[k] = reg.corner_dstar
        pts.extend(reg.vertices())
        i1, i2, i12 = _pentagon_batch(tm.p, a, b)
        pts.extend(np.column_stack([i12 - i2, i2]))
        pts.extend(np.column_stack([i1, i12 - i1]))
    pts_arr = np.array(pts)
    return ClassicalSweep(lam, sums, r1s, r2s, r1d, r2d, _pareto(pts_arr), _hull_vertices(pts_arr))


def _pentagon_batch(w: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """I(X1:Y), I(X2:Y), I(X1X2:Y) for binary priors P(X1=1)=a, P(X2=1)=b."""
    pa = np.stack([1 - a, a], axis=1)
    pb = np.stack([1 - b, b], axis=1)
    hrow = -_xlogx(w).sum(axis=-1)  # H(Y | x1 x2)
    hq = lambda q: -_xlogx(q).sum(axis=-1)  # noqa: E731
    q = np.einsum("ni,nj,ijy->ny", pa, pb, w)
    q1 = np.einsum("nj,ijy->niy", pb, w)  # p(y | x1)
    q2 = np.einsum("ni,ijy->njy", pa, w)  # p(y | x2)
    h_given = np.einsum("ni,nj,ij->n", pa, pb, hrow)
    i12 = hq(q) - h_given
    i1 = hq(q) - np.einsum("ni,ni->n", pa, hq(q1))
    i2 = hq(q) - np.einsum("nj,nj->n", pb, hq(q2))
    return i1, i2, i12


def _pareto(points: np.ndarray) -> np.ndarray:
    """Non-dominated points (the union's outer boundary), ordered by R1."""
    pts = points[np.lexsort((-points[:, 1], points[:, 0]))]
    keep = []
    best = -np.inf
    for p in pts[::-1]:
        if p[1] > best + 1e-15:
            keep.append(p)
            best = p[1]
    return np.array(keep[::-1])
