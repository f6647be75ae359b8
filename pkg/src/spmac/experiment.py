"""Imperfection and statistics model of the two-sender optical experiment.

Channels here use the transition-balanced labeling: sender 0 is the on-off
(deterministic) sender and outputs are (loss-absorbing port, port 1, port 2).
"""

from __future__ import annotations

import io
import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .capacity import ba_mac_rate_sum
from .info_metrics import channel_mutual_information, entropy, flat_mutual_information
from .mac_builder import (
    OPTIMAL_PRIOR_TB,
    TransitionMatrix,
    drop_vacuum_output,
    encoded_states,
    n_sender_assisted_protocol,
    to_transition_balanced,
    transition_balanced_channel,
)
from .quantum_core import DensityOperator, measure

NOMINAL_VISIBILITIES = (0.995, 0.982)
NOMINAL_RANDOM_BITS = 680
NOMINAL_COUNTS_PER_SETTING = 600


def _check_unit(name: str, v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def detection_loss(tm: TransitionMatrix, eta: float, sink: int = 0) -> TransitionMatrix:
    """Each detection survives with probability eta; lost photons land on ``sink``."""
    _check_unit("eta", eta)
    k = tm.outputs
    w = eta * np.eye(k)
    w[:, sink] += 1.0 - eta
    return tm.post_process(w)


def eta_channel(eta: float) -> TransitionMatrix:
    """Ideal two-sender channel seen through detectors of efficiency eta."""
    return detection_loss(transition_balanced_channel(), eta)


def fixed_prior_rate(eta: float, prior=OPTIMAL_PRIOR_TB) -> float:
    return channel_mutual_information(eta_channel(eta), prior)


def optimized_rate(eta: float, tol: float = 1e-10) -> float:
    return ba_mac_rate_sum(eta_channel(eta), restarts=4, tol=tol, upper_bound=False).value_bits


def _bisect_increasing(f, target: float, lo: float, hi: float, tol: float) -> float:
    if not f(lo) < target <= f(hi):
        raise ValueError("target is not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eta_threshold(policy: str = "fixed", tol: float = 1e-6, target: float = 1.0) -> float:
    """Smallest efficiency at which the rate sum still reaches ``target`` bits.

    ``policy`` is ``"fixed"`` (the 15/17 prior) or ``"optimized"`` (capacity
    rate sum of the degraded channel).
    """
    if policy == "fixed":
        f = fixed_prior_rate
    elif policy == "optimized":
        f = optimized_rate
    else:
        raise ValueError(f"unknown prior policy {policy!r}")
    return _bisect_increasing(f, target, 0.0, 1.0, tol)


# ----------------------------------------------------------------------------
# Visibility


def coherence_matrix(v_sagnac: float, v_mz: float) -> np.ndarray:
    """Overlaps of the internal modes on the three paths (vacuum excluded).

    Paths 2 and 3 close the inner loop and overlap by v_s.  Path 1 meets
    the output of the inner loop in the outer interferometer; its overlap
    with each of paths 2 and 3 is v_z sqrt((1 + v_s)/2), so v_z is the
    overlap with the normalized inner-loop mode.  Being a Gram matrix the
    result is positive semidefinite for all visibilities.
    """
    _check_unit("v_sagnac", v_sagnac)
    _check_unit("v_mz", v_mz)
    c = v_mz * np.sqrt((1.0 + v_sagnac) / 2.0)
    return np.array([[1.0, c, c], [c, 1.0, v_sagnac], [c, v_sagnac, 1.0]])


def degrade(rho: DensityOperator, overlaps: np.ndarray) -> DensityOperator:
    """Damp path coherences elementwise; populations are left unchanged."""
    m = np.ones((rho.space.dim, rho.space.dim))
    m[1:, 1:] = overlaps
    return DensityOperator(rho.space, rho.matrix * m)


@dataclass(frozen=True)
class VisibilityChannel:
    channel: TransitionMatrix
    renormalization: float


def visibility_channel_report(v_sagnac: float, v_mz: float) -> VisibilityChannel:
    state, enc, povm = n_sender_assisted_protocol(2)
    overlaps = coherence_matrix(v_sagnac, v_mz)
    p = np.zeros((2, 2, len(povm)))
    for x, rho in encoded_states(state, enc).items():
        p[x] = measure(povm, degrade(rho, overlaps))
    dev = float(np.max(np.abs(p.sum(axis=-1) - 1.0)))
    if dev > 1e-12:
        raise RuntimeError(f"visibility model lost probability ({dev:.3g})")
    tm = to_transition_balanced(drop_vacuum_output(TransitionMatrix(p)))
    return VisibilityChannel(tm, dev)


def visibility_channel(v_sagnac: float, v_mz: float) -> TransitionMatrix:
    """Two-sender assisted channel with imperfect interference visibilities."""
    return visibility_channel_report(v_sagnac, v_mz).channel


# ----------------------------------------------------------------------------
# Calibration utilities


def g2_from_counts(c_iss: float, c_i: float, c_is: float, c_is2: float) -> float:
    """Heralded second-order correlation C_iss' C_i / (C_is C_is')."""
    if c_is <= 0 or c_is2 <= 0:
        raise ZeroDivisionError("two-fold coincidence counts must be positive")
    return c_iss * c_i / (c_is * c_is2)


def phase_plate_shift(alpha, d: float = 3e-3, wavelength: float = 810e-9, n_g: float = 1.51):
    """Extra phase (radians) from tilting a plate of thickness d by alpha."""
    alpha = np.asarray(alpha, dtype=float)
    if d <= 0 or wavelength <= 0 or n_g < 1:
        raise ValueError("need d > 0, wavelength > 0 and n_g >= 1")
    return 2 * np.pi * d / wavelength * (np.sqrt(n_g**2 - np.sin(alpha) ** 2) - np.cos(alpha) - (n_g - 1))


def tilt_for_phase(target: float = np.pi, d: float = 3e-3, wavelength: float = 810e-9,
                   n_g: float = 1.51, tol: float = 1e-14) -> float:
    """Tilt in (0, pi/4) giving ``target`` radians, by bisection."""
    f = lambda a: float(phase_plate_shift(a, d, wavelength, n_g))  # noqa: E731
    return _bisect_increasing(f, target, 0.0, np.pi / 4, tol)


# ----------------------------------------------------------------------------
# Counting statistics


@dataclass(frozen=True)
class ExperimentConfig:
    eta: float = 1.0
    v_sagnac: float = 1.0
    v_mz: float = 1.0
    counts_per_setting: int = NOMINAL_COUNTS_PER_SETTING
    random_bits: int = NOMINAL_RANDOM_BITS
    seed: int = 0
    priors: tuple = OPTIMAL_PRIOR_TB

    def __post_init__(self):
        for name in ("eta", "v_sagnac", "v_mz"):
            _check_unit(name, getattr(self, name))
        if self.counts_per_setting < 1 or self.random_bits < 1:
            raise ValueError("counts_per_setting and random_bits must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for p in self.priors:
            p = np.asarray(p, dtype=float)
            if p.min() < 0 or abs(p.sum() - 1) > 1e-12:
                raise ValueError("each prior must be a distribution")

    def channel(self) -> TransitionMatrix:
        return detection_loss(visibility_channel(self.v_sagnac, self.v_mz), self.eta)

    def joint_prior(self) -> np.ndarray:
        p = np.ones(1)
        for q in self.priors:
            p = np.multiply.outer(p, np.asarray(q, dtype=float))
        return p.reshape(-1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["priors"] = [list(map(float, p)) for p in self.priors]
        return d


@dataclass(frozen=True)
class CountTable:
    """``counts[x1, x2, y]`` photon counts."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts)
        if c.ndim != 3:
            raise ValueError("counts must have shape (m1, m2, K)")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(c == np.round(c)):
                raise ValueError("counts must be integers")
            c = c.astype(np.int64)
        if c.min() < 0:
            raise ValueError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=-1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def joint(self) -> np.ndarray:
        """Empirical p(x, y), inputs flattened in C order."""
        return self.counts.reshape(-1, self.counts.shape[-1]) / self.total

    def channel_estimate(self) -> np.ndarray:
        """Empirical p(y | x), shape (prod m_i, K); rows without data are uniform."""
        c = self.counts.reshape(-1, self.counts.shape[-1]).astype(float)
        t = c.sum(axis=1, keepdims=True)
        return np.where(t > 0, c / np.where(t > 0, t, 1), 1.0 / c.shape[1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2", "y", "count"])
        for (a, b, y), n in np.ndenumerate(self.counts):
            w.writerow([a, b, y, int(n)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty count table")
        idx = np.array([[int(r["x1"]), int(r["x2"]), int(r["y"])] for r in rows])
        c = np.zeros(tuple(idx.max(axis=0) + 1), dtype=np.int64)
        for (a, b, y), r in zip(idx, rows):
            c[a, b, y] += int(r["count"])
        return cls(c)


def _log2_or_zero(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.log2(x[m])
    return out


def variance_r1(channel: np.ndarray, prior: np.ndarray, n_per_setting) -> float:
    """Error propagation for the mutual information of a characterized channel.

    Row p(.|x) is estimated from N_x counts with binomial variance
    N_x p (1 - p); the prior is held fixed.  ``n_per_setting`` is a scalar
    (same N for every x) or one count per input.
    """
    w = np.asarray(channel, dtype=float)
    px = np.asarray(prior, dtype=float)
    nx = np.broadcast_to(np.asarray(n_per_setting, dtype=float), px.shape)
    if np.any(nx <= 0):
        raise ValueError("every setting needs a positive count")
    q = px @ w
    hq = entropy(q)
    hrow = np.array([entropy(r) for r in w])
    var_n = nx[:, None] * w * (1 - w)
    a = (px[:, None] * (_log2_or_zero(q)[None, :] + hq)) ** 2
    b = (px[:, None] * (_log2_or_zero(w) + hrow[:, None])) ** 2
    return float(np.sum((a + b) * var_n / nx[:, None] ** 2))


def variance_r2(channel: np.ndarray, prior: np.ndarray, random_bits: int, counts_per_setting: int) -> float:
    """Error propagation for the empirical joint, including prior-generation noise.

    Uses V[n_xy] = n p(x)(1 - p(x)) m + n m p(y|x)(1 - p(y|x)) and the
    gradient term 2 log q(y) - log p(x, y) + I; cells with p(x, y) = 0 are
    skipped.
    """
    w = np.asarray(channel, dtype=float)
    px = np.asarray(prior, dtype=float)
    n, m = random_bits, counts_per_setting
    q = px @ w
    pxy = px[:, None] * w
    info = flat_mutual_information(px, w)
    var_n = n * m * px[:, None] * (1 - px[:, None]) + n * m * w * (1 - w)
    grad = 2 * _log2_or_zero(q)[None, :] - _log2_or_zero(pxy) + info
    grad = np.where(pxy > 0, grad, 0.0)
    return float(np.sum(grad**2 * var_n) / (n * m) ** 2)


@dataclass(frozen=True)
class MonteCarloRun:
    config: ExperimentConfig
    counts: CountTable
    inputs_drawn: np.ndarray
    i_empirical: float
    i_channel: float
    v_r1: float
    v_r2: float
    extra: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {"I_bits": self.i_empirical, "I_channel_bits": self.i_channel,
                "V_R1": self.v_r1, "V_R2": self.v_r2,
                "seed": self.config.seed, "config": self.config.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so runs are reproducible bit for bit."""
    return np.random.Generator(np.random.Philox(seed))


def monte_carlo_joint(config: ExperimentConfig, channel: TransitionMatrix | None = None) -> MonteCarloRun:
    """Sample n input settings, then m detections per setting.

    Detections of all blocks sharing a setting are pooled, which is exact
    in distribution since the decoder ignores the block structure.
    """
    tm = config.channel() if channel is None else channel
    w = tm.flat()
    px = config.joint_prior()
    if len(px) != w.shape[0]:
        raise ValueError("prior does not match the channel's input alphabets")
    rng = make_rng(config.seed)
    drawn = rng.multinomial(config.random_bits, px)
    counts = np.stack([rng.multinomial(k * config.counts_per_setting, row) for k, row in zip(drawn, w)])
    table = CountTable(counts.reshape(tm.inputs + (tm.outputs,)))
    joint = table.joint()
    i_emp = flat_mutual_information(joint.sum(axis=1), table.channel_estimate())
    w_hat = table.channel_estimate()
    i_ch = flat_mutual_information(px, w_hat)
    per_setting = np.maximum(table.totals.reshape(-1), 1).astype(float)
    return MonteCarloRun(
        config=config,
        counts=table,
        inputs_drawn=drawn,
        i_empirical=i_emp,
        i_channel=i_ch,
        v_r1=variance_r1(w_hat, px, per_setting),
        v_r2=variance_r2(w_hat, px, config.random_bits, config.counts_per_setting),
        extra={"per_setting_counts": per_setting.tolist()},
    )
