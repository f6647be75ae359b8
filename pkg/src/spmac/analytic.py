"""Closed-form accessible and Holevo information for the one- and two-sender protocols.

Notation: ``c = cos(theta)``, ``s = sin(theta)``; ``q`` is the probability
that the sender does *not* block (the two non-blocking messages share it
equally).  A mirror-symmetric measurement is a mixture of vector pairs

    sqrt(1 - sigma) e1 + sqrt(sigma) e^{i beta} e2,
    sqrt(1 - sigma) e1 + sqrt(sigma) e^{-i(alpha + beta)} e2,

plus the vacuum projector, and the information it extracts is the weighted
sum of ``J(sigma, beta)`` over the mixture.  With alpha = beta = pi only the
sigma-profile matters, and the best mixture is the concave envelope of
``J`` evaluated at sigma = 1/2.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .info_metrics import CqEnsemble, binary_entropy, holevo_chi
from .quantum_core import ModeSpace, NpeOperation, Povm, PureState

LN2 = np.log(2.0)


def _xlog2x(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = x[m] * np.log2(x[m])
    return out


def _h2(x):
    x = np.asarray(x, dtype=float)
    return -(_xlog2x(x) + _xlog2x(1.0 - x))


@dataclass(frozen=True)
class OneSenderScenario:
    q: float
    theta: float
    alpha: float = np.pi

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q!r}")


@dataclass(frozen=True)
class TwoSenderTernaryScenario:
    q: float
    q_prime: float
    theta: float
    alpha: float = np.pi

    def __post_init__(self):
        for v in (self.q, self.q_prime):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"priors must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class SymmetricPovmParams:
    """Weights, sigma and beta of each mirror-symmetric vector pair."""

    weights: tuple[float, ...]
    sigmas: tuple[float, ...]
    betas: tuple[float, ...]
    alpha: float = np.pi

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.sigmas, dtype=float)
        if not (len(w) == len(s) == len(self.betas)) or len(w) == 0:
            raise ValueError("weights, sigmas and betas must have equal non-zero length")
        if w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must form a distribution")
        if s.min() < 0 or s.max() > 1:
            raise ValueError("sigmas must lie in [0, 1]")
        if abs(w @ s - 0.5) > 1e-12:
            raise ValueError("weighted mean of sigma must be 1/2")

    def phase_constraint(self) -> complex:
        """Off-diagonal completeness term; zero for a physical measurement."""
        w, s, b = (np.asarray(v, dtype=float) for v in (self.weights, self.sigmas, self.betas))
        return complex(np.sum(w * np.sqrt((1 - s) * s) * (np.exp(1j * b) + np.exp(-1j * (self.alpha + b)))))

    def povm(self) -> Povm:
        """Materialize the measurement on the two-path space (vacuum included)."""
        if abs(self.phase_constraint()) > 1e-10:
            raise ValueError("parameters violate the phase constraint; no physical POVM")
        space = ModeSpace(2)
        vecs, weights = [space.basis(0)], [1.0]
        for w, s, b in zip(self.weights, self.sigmas, self.betas):
            if w == 0:
                continue
            for ph in (b, -(self.alpha + b)):
                vecs.append(space.vector([np.sqrt(1 - s), np.sqrt(s) * np.exp(1j * ph)]))
                weights.append(w)
        elems = [wt * np.outer(v, v.conj()) for wt, v in zip(weights, vecs)]
        return Povm(space, tuple(elems))


# ----------------------------------------------------------------------------
# One sender


def j_one_sender(sigma, beta, scenario: OneSenderScenario):
    """J(sigma, beta; q, theta, alpha) in bits (vectorized over sigma and beta)."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0) or np.any(sigma > 1):
        raise ValueError("sigma must lie in [0, 1]")
    return _j_alpha_beta(sigma, np.asarray(beta, dtype=float), scenario.alpha, scenario)


def _jt(sigma, q, c2):
    """J at alpha = beta = pi, vectorized over all arguments."""
    sigma = np.asarray(sigma, dtype=float)
    s2 = 1.0 - c2
    c, s = np.sqrt(c2), np.sqrt(s2)
    sb = 1.0 - sigma
    plus = (np.sqrt(sb) * c + np.sqrt(sigma) * s) ** 2
    minus = (np.sqrt(sb) * c - np.sqrt(sigma) * s) ** 2
    kappa = q * sb * c2 + sigma * s2
    return (q * _xlog2x(plus) + q * _xlog2x(minus) + 2 * (1 - q) * _xlog2x(sigma * s2)
            - 2 * _xlog2x(kappa) - c2 * _xlog2x(1 - q))


def _log2_or_zero(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.log2(x[m])
    return out


def _djt(sigma, q, c2):
    """dJ/dsigma at alpha = beta = pi for sigma in (0, 1)."""
    sigma = np.asarray(sigma, dtype=float)
    s2 = 1.0 - c2
    c, s = np.sqrt(c2), np.sqrt(s2)
    u, v = np.sqrt(1.0 - sigma), np.sqrt(sigma)
    plus, minus = (u * c + v * s) ** 2, (u * c - v * s) ** 2
    d_plus = (u * c + v * s) * (s / v - c / u)
    d_minus = -(u * c - v * s) * (c / u + s / v)
    kappa = q * (1.0 - sigma) * c2 + sigma * s2
    # the 1/ln2 parts of d(x log x) cancel across the four terms
    return (q * (d_plus * _log2_or_zero(plus) + d_minus * _log2_or_zero(minus))
            + 2 * (1 - q) * s2 * _log2_or_zero(sigma * s2) - 2 * (s2 - q * c2) * _log2_or_zero(kappa))


def acc_info_region1(q, theta):
    """Which-path measurement: the even mixture of sigma = 0 and sigma = 1, i.e. cos^2 theta h2(q)."""
    return np.cos(theta) ** 2 * _h2(np.asarray(q, dtype=float))


def acc_info_region1_displayed(q, theta):
    """The shorter closed form -(1 - q) cos^2 theta log(1 - q); a lower bound on region 1."""
    return -np.cos(theta) ** 2 * _xlog2x(1 - np.asarray(q, dtype=float))


def acc_info_region3(q, theta):
    q = np.asarray(q, dtype=float)
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    return (q - q * _h2((1 + np.sin(2 * theta)) / 2) + (1 - q) * _xlog2x(s2)
            - _xlog2x(q * c2 + s2) - c2 * _xlog2x(1 - q))


def tangent_condition(sigma, q, theta):
    """Simplified tangency condition as displayed; kept for comparison only.

    It does not coincide with the roots of ``tangent_gap``, which is what
    region 2 actually uses.

    q c^2 log[(q (1-sigma) c^2 + sigma s^2) / ((1-sigma) c^2 - sigma s^2)]
      - (1 - q) sigma s^2 log(sigma)
    """
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    sb = 1.0 - sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        return q * c2 * np.log2((q * sb * c2 + sigma * s2) / (sb * c2 - sigma * s2)) - (1 - q) * sigma * s2 * np.log2(sigma)


def tangent_gap(sigma, q, theta):
    """J(0) + sigma J'(sigma) - J(sigma); zero where the tangent at sigma meets (0, J(0))."""
    c2 = np.cos(theta) ** 2
    return _jt(0.0, q, c2) + sigma * _djt(sigma, q, c2) - _jt(sigma, q, c2)


def region2_value(sigma, q, theta):
    """Even-mean mixture of sigma = 0 and sigma: J(0) + (J(sigma) - J(0)) / (2 sigma)."""
    c2 = np.cos(theta) ** 2
    j0 = _jt(0.0, q, c2)
    return j0 + (_jt(sigma, q, c2) - j0) / (2 * np.asarray(sigma, dtype=float))


def _bisect(f, lo, hi, tol=1e-13, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AccessibleInfo:
    value_bits: float
    regime: int
    measurement: SymmetricPovmParams
    candidates: dict = field(default_factory=dict)


_R2_SCAN = np.append(np.linspace(0.5, 1.0, 257)[:-1], 1.0 - 1e-13)


def _region2(q: float, theta: float):
    """Interior sigma* in (1/2, 1) where the tangent at sigma* meets (0, J(0)), or None.

    Every +/- sign change of the tangent gap on a scan is refined by bisection
    and the local maximum with the largest mixture value is returned.
    """
    g = tangent_gap(_R2_SCAN, q, theta)
    idx = np.nonzero((g[:-1] > 0) & (g[1:] <= 0))[0]
    if len(idx) == 0:
        return None
    f = lambda x: float(tangent_gap(x, q, theta))  # noqa: E731
    roots = [_bisect(f, _R2_SCAN[k], _R2_SCAN[k + 1], tol=1e-12) for k in idx]
    return max(roots, key=lambda r: float(region2_value(r, q, theta)))


def acc_info_one_sender(q: float, theta: float) -> AccessibleInfo:
    """Accessible information of the one-sender ensemble at alpha = pi.

    Returns the largest of the three measurement regimes: which-path
    (sigma in {0, 1}), vacuum projector plus a mirror pair at sigma*, and
    the +/- basis (sigma = 1/2).
    """
    OneSenderScenario(q, theta)
    if not 0.0 <= theta <= np.pi / 2:
        raise ValueError("theta must lie in [0, pi/2]")
    c2 = np.cos(theta) ** 2
    cands = {1: float(acc_info_region1(q, theta)), 3: float(acc_info_region3(q, theta))}
    meas = {1: SymmetricPovmParams((0.5, 0.5), (0.0, 1.0), (np.pi, np.pi)),
            3: SymmetricPovmParams((1.0,), (0.5,), (np.pi,))}
    sig = _region2(q, theta)
    if sig is not None:
        cands[2] = float(region2_value(sig, q, theta))
        w2 = 1 / (2 * sig)
        meas[2] = SymmetricPovmParams((1 - w2, w2), (0.0, sig), (np.pi, np.pi))
    regime = max(sorted(cands), key=lambda k: cands[k])
    return AccessibleInfo(cands[regime], regime, meas[regime], cands)


def concave_envelope_at_half(q: float, theta: float, grid: int = 2001) -> tuple[float, float, float]:
    """Brute-force best two-point mixture of J with mean 1/2: (value, sigma1, sigma2)."""
    c2 = np.cos(theta) ** 2
    s = np.linspace(0.0, 1.0, grid)
    j = _jt(s, q, c2)
    lo, hi = s[s <= 0.5], s[s >= 0.5]
    jl, jh = j[s <= 0.5], j[s >= 0.5]
    s1, s2 = np.meshgrid(lo, hi, indexing="ij")
    j1, j2 = np.meshgrid(jl, jh, indexing="ij")
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(s2 > s1, j1 + (0.5 - s1) / (s2 - s1) * (j2 - j1), j1)
    k = np.unravel_index(np.argmax(val), val.shape)
    return float(val[k]), float(s1[k]), float(s2[k])


def acc_info_grid(qs: np.ndarray, thetas: np.ndarray, scan: int = 17, refine: int = 30) -> np.ndarray:
    """Vectorized acc_info_one_sender over a (q, theta) grid.

    Region 2 is maximized directly: a coarse scan of sigma in [1/2, 1]
    followed by golden-section refinement around the best scan point.
    """
    Q, T = np.meshgrid(qs, thetas, indexing="ij")
    best = np.maximum(acc_info_region1(Q, T), acc_info_region3(Q, T))
    grid = np.linspace(0.5, 1.0, scan)
    vals = np.stack([region2_value(g, Q, T) for g in grid])
    k = np.argmax(vals, axis=0)
    step = grid[1] - grid[0]
    a = np.clip(grid[k] - step, 0.5, 1.0)
    b = np.clip(grid[k] + step, 0.5, 1.0)
    r = (np.sqrt(5.0) - 1) / 2
    for _ in range(refine):
        x1, x2 = b - r * (b - a), a + r * (b - a)
        left = region2_value(x1, Q, T) >= region2_value(x2, Q, T)
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
    i2 = np.maximum(vals.max(axis=0), region2_value(0.5 * (a + b), Q, T))
    return np.maximum(best, i2)


def stationarity_one_sender(q: float, theta: float) -> np.ndarray:
    """Residuals of dI3/dtheta = 0 and dI3/dq = 0 (both in bits)."""
    s2t = np.sin(2 * theta)
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    ratio = (1 - q) * s2 / (q * c2 + s2)
    r_theta = q * np.cos(2 * theta) * np.log2((1 + s2t) / (1 - s2t)) + (1 - q) * s2t * np.log2(ratio)
    r_q = 1 - float(_h2((1 + s2t) / 2)) - np.log2(s2) + c2 * np.log2(ratio)
    return np.array([r_theta, r_q])


@dataclass(frozen=True)
class OptimizerReport:
    target: str
    value_bits: float
    argmax: dict
    residuals: list
    regime: int | None = None
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"target": self.target, "value_bits": self.value_bits, "argmax": self.argmax,
             "residuals": self.residuals, "regime": self.regime, "converged": self.converged}
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _damped_newton(fun, x0, bounds, tol=1e-12, max_iter=100, h=1e-7):
    """Newton on a square system with a finite-difference Jacobian and backtracking."""
    x = np.asarray(x0, dtype=float)
    lo, hi = np.array(bounds, dtype=float).T
    r = fun(x)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return x, r, True
        jac = np.empty((len(r), len(x)))
        for k in range(len(x)):
            e = np.zeros_like(x)
            e[k] = h
            jac[:, k] = (fun(x + e) - fun(x - e)) / (2 * h)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        t = 1.0
        while t > 1e-6:
            cand = np.clip(x + t * step, lo, hi)
            rc = fun(cand)
            if np.all(np.isfinite(rc)) and np.linalg.norm(rc) < np.linalg.norm(r):
                break
            t *= 0.5
        else:
            return x, r, False
        x, r = cand, rc
    return x, r, bool(np.max(np.abs(r)) < tol)


def optimize_one_sender(seed_grid: int = 41, check_grid: int = 401) -> OptimizerReport:
    """Stationary point of the sigma = 1/2 regime, checked against a full grid."""
    qs = np.linspace(0.0, 1.0, seed_grid)
    ts = np.linspace(0.0, np.pi / 2, seed_grid)
    g = acc_info_region3(*np.meshgrid(qs, ts, indexing="ij"))
    i, j = np.unravel_index(np.nanargmax(g), g.shape)
    eps = 1e-9
    x, r, ok = _damped_newton(lambda v: stationarity_one_sender(*v), [qs[i], ts[j]],
                              [(eps, 1 - eps), (eps, np.pi / 2 - eps)])
    q, th = (float(v) for v in x)
    info = acc_info_one_sender(q, th)
    cq, ct = np.linspace(0, 1, check_grid), np.linspace(0, np.pi / 2, check_grid)
    grid_max = float(np.max(acc_info_grid(cq, ct)))
    if not ok:
        warnings.warn("Newton did not converge; falling back to the grid maximum", RuntimeWarning)
        gi = acc_info_grid(cq, ct)
        a, b = np.unravel_index(np.argmax(gi), gi.shape)
        q, th = float(cq[a]), float(ct[b])
        info = acc_info_one_sender(q, th)
    return OptimizerReport(
        target="one-sender accessible information",
        value_bits=info.value_bits,
        # cos^2 theta is the weight on the sender's (encoded) path
        argmax={"q": q, "theta": th, "cos2_theta": float(np.cos(th) ** 2),
                "sin2_theta": float(np.sin(th) ** 2)},
        residuals=[float(v) for v in r],
        regime=info.regime,
        converged=ok,
        extra={"grid_max_bits": grid_max, "grid": check_grid},
    )


@dataclass(frozen=True)
class LemmaScan:
    maxima: list
    values: list
    all_at_multiples_of_pi: bool
    spacing: float

    @property
    def global_maxima(self) -> list:
        top = max(self.values)
        return [m for m, v in zip(self.maxima, self.values) if v >= top - 1e-9]


def lemma_alpha_beta_scan(q: float, theta: float, sigma: float = 0.5, grid: int = 181) -> LemmaScan:
    """Grid-local maxima of J over (alpha, beta) in [0, 2 pi)^2 (periodic)."""
    a = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    A, B = np.meshgrid(a, a, indexing="ij")
    sc = OneSenderScenario(q, theta, 0.0)
    J = _j_alpha_beta(sigma, B, A, sc)
    is_max = np.ones_like(J, dtype=bool)
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            if da == 0 and db == 0:
                continue
            is_max &= J >= np.roll(np.roll(J, da, axis=0), db, axis=1) - 1e-13
    spacing = 2 * np.pi / grid
    pts = [(float(A[k]), float(B[k])) for k in zip(*np.nonzero(is_max))]
    # collapse plateau neighbours onto one representative
    maxima: list[tuple[float, float]] = []
    for p in pts:
        if all(_circ(p[0], m[0]) > 1.5 * spacing or _circ(p[1], m[1]) > 1.5 * spacing for m in maxima):
            maxima.append(p)
    ok = all(min(_circ(x, k * np.pi) for k in range(3)) <= spacing
             and min(_circ(y, k * np.pi) for k in range(3)) <= spacing for x, y in maxima)
    values = [float(_j_alpha_beta(sigma, b, a_, sc)) for a_, b in maxima]
    return LemmaScan(maxima, values, ok, spacing)


def _circ(x: float, y: float) -> float:
    d = abs(x - y) % (2 * np.pi)
    return min(d, 2 * np.pi - d)


def _j_alpha_beta(sigma, beta, alpha, sc: OneSenderScenario):
    q, c, s = sc.q, np.cos(sc.theta), np.sin(sc.theta)
    sb = 1.0 - sigma
    a2 = np.abs(np.sqrt(sb) * c + np.exp(1j * beta) * np.sqrt(sigma) * s) ** 2
    b2 = np.abs(np.sqrt(sb) * c + np.exp(1j * (beta - alpha)) * np.sqrt(sigma) * s) ** 2
    kappa = q * sb * c**2 + q * (np.cos(beta) + np.cos(beta - alpha)) * np.sqrt(sb * sigma) * c * s + sigma * s**2
    return (q * _xlog2x(a2) + q * _xlog2x(b2) + 2 * (1 - q) * _xlog2x(sigma * s**2)
            - 2 * _xlog2x(np.clip(kappa, 0, None)) - c**2 * _xlog2x(1 - q))


def alpha_zero_max(q: float, theta: float, grid: int = 181) -> float:
    """Best two-point sigma mixture of J at alpha = 0, maximized over beta per point."""
    sc = OneSenderScenario(q, theta, 0.0)
    s = np.linspace(0.0, 1.0, 401)
    betas = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    S, Bt = np.meshgrid(s, betas, indexing="ij")
    j = _j_alpha_beta(S, Bt, 0.0, sc).max(axis=1)
    lo, hi = s <= 0.5, s >= 0.5
    s1, s2 = np.meshgrid(s[lo], s[hi], indexing="ij")
    j1, j2 = np.meshgrid(j[lo], j[hi], indexing="ij")
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(s2 > s1, j1 + (0.5 - s1) / (s2 - s1) * (j2 - j1), j1)
    return float(val.max())


# ----------------------------------------------------------------------------
# Two senders, binary x ternary


def acc_info_two_sender_ternary(q, q_prime, theta):
    """Information extracted by the +/- measurement (sigma = 1/2, alpha = beta = pi).

    ``q`` belongs to the on-off sender on the sin(theta) path, ``q_prime`` to
    the ternary sender on the cos(theta) path.
    """
    q, qp = np.asarray(q, dtype=float), np.asarray(q_prime, dtype=float)
    if np.any((q < 0) | (q > 1) | (qp < 0) | (qp > 1)):
        raise ValueError("priors must lie in [0, 1]")
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    xi = 1 - qp * c2 - q * s2
    eta = 0.5 * (qp * c2 + q * s2)
    # c^2 log(c^2 / 2) = c^2 log c^2 - c^2, likewise for s^2
    return ((1 - q) * qp * (_xlog2x(s2) + _xlog2x(c2) - c2)
            + q * (1 - qp) * (_xlog2x(c2) + _xlog2x(s2) - s2)
            - q * qp * _h2((1 + np.sin(2 * theta)) / 2) - _xlog2x(xi) - 2 * _xlog2x(eta))


def _ternary_theta_parts(q, qp, theta):
    c, s = np.cos(theta), np.sin(theta)
    d = c - s
    # cot(2t) log((1 + sin 2t)/(1 - sin 2t)) with 1 +/- sin 2t = (c +/- s)^2,
    # written so the pi/4 limit (0 * inf) evaluates to 0
    cross = q * qp * 2 * (c + s) / np.sin(2 * theta) * (d * np.log2(c + s) - float(_xlog2x(abs(d))) * np.sign(d))
    return (q + qp - 2 * q * qp) * np.log2(np.tan(theta) ** 2) + cross


def ternary_theta_residual_displayed(q: float, qp: float, theta: float) -> float:
    """The shorter theta equation, which drops the xi/eta terms (exact only when q = q')."""
    return float(_ternary_theta_parts(q, qp, theta))


def stationarity_two_sender_ternary(q: float, qp: float, theta: float) -> np.ndarray:
    """Residuals of dI/dq, dI/dq' and dI/dtheta / sin(2 theta), in bits."""
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    xi = 1 - qp * c2 - q * s2
    eta = 0.5 * (qp * c2 + q * s2)
    hb = float(_h2((1 + np.sin(2 * theta)) / 2))
    hs = binary_entropy(s2)
    r_q = (2 * qp - 1) * hs + qp - s2 - qp * hb + s2 * np.log2(xi / eta)
    r_qp = (2 * q - 1) * hs + q - c2 - q * hb + c2 * np.log2(xi / eta)
    r_t = _ternary_theta_parts(q, qp, theta) + (qp - q) * (1 - np.log2(xi / eta))
    return np.array([r_q, r_qp, r_t])


def optimize_two_sender_ternary(seed_grid: int = 41) -> OptimizerReport:
    """Maximize the binary x ternary rate sum over (q, q', theta)."""
    g = np.linspace(0.0, 1.0, seed_grid)
    t = np.linspace(0.0, np.pi / 2, seed_grid)
    Q, QP, T = np.meshgrid(g, g, t, indexing="ij")
    vals = acc_info_two_sender_ternary(Q, QP, T)
    k = np.unravel_index(np.nanargmax(vals), vals.shape)
    x0 = np.array([Q[k], QP[k], T[k]])
    eps = 1e-9
    bounds = [(eps, 1 - eps), (eps, 1 - eps), (eps, np.pi / 2 - eps)]
    res = optimize.minimize(lambda v: -float(acc_info_two_sender_ternary(*v)), x0, method="L-BFGS-B",
                            bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-12})
    x, r, ok = _damped_newton(lambda v: stationarity_two_sender_ternary(*v), res.x, bounds)
    value = float(acc_info_two_sender_ternary(*x))
    if not ok or value + 1e-12 < -res.fun:
        warnings.warn("Newton refinement failed; keeping the quasi-Newton point", RuntimeWarning)
        x, value = res.x, float(-res.fun)
        r = stationarity_two_sender_ternary(*x)
    q, qp, th = (float(v) for v in x)
    return OptimizerReport(
        target="two-sender binary-ternary accessible information",
        value_bits=value,
        argmax={"q": q, "q_prime": qp, "theta": th},
        residuals=[float(v) for v in r],
        regime=3,
        converged=bool(ok),
        extra={"displayed_theta_residual": ternary_theta_residual_displayed(q, qp, th)},
    )


# ----------------------------------------------------------------------------
# Holevo information


def holevo_objective(x: float, y: float) -> float:
    """x h2(y) + y h2(x)."""
    return float(x * _h2(y) + y * _h2(x))


def holevo_transcendental(x: float) -> float:
    """Derivative of 2 x h2(x), divided by 2: h2(x) + x log2((1-x)/x)."""
    return float(_h2(x) + x * np.log2((1 - x) / x))


def lemma_concavity_margin(x, y):
    """1/((1-x)(1-y)) - ln^2((1-x)(1-y)/(xy)); non-negative iff the Hessian is NSD."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return 1.0 / ((1 - x) * (1 - y)) - np.log((1 - x) * (1 - y) / (x * y)) ** 2


def lemma_hessian(x: float, y: float) -> np.ndarray:
    off = np.log((1 - x) * (1 - y) / (x * y))
    return np.array([[-y / (x * (1 - x)), off], [off, -x / (y * (1 - y))]]) / LN2


def holevo_one_sender_closed_form(samples: int = 1000, seed: int = 0) -> OptimizerReport:
    """max_x 2 x h2(x) via bisection, plus a sampled concavity check on [1/2, 1]^2."""
    x = _bisect(holevo_transcendental, 0.5, 1 - 1e-15, tol=1e-15)
    chi = 2 * x * float(_h2(x))
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.5, 1.0, size=(samples, 2))
    pts = pts[(pts < 1.0).all(axis=1)]
    margins = lemma_concavity_margin(pts[:, 0], pts[:, 1])
    eig_max = max(float(np.linalg.eigvalsh(lemma_hessian(a, b)).max()) for a, b in pts)
    return OptimizerReport(
        target="one-sender Holevo information",
        value_bits=chi,
        argmax={"x": x, "q": x, "cos2_theta": x},
        residuals=[holevo_transcendental(x)],
        extra={"lemma_min_margin": float(margins.min()), "lemma_max_hessian_eig": eig_max,
               "lemma_samples": int(len(pts))},
    )


def one_sender_ensemble(q: float, theta: float, alpha: float = np.pi) -> CqEnsemble:
    from .mac_builder import one_sender_protocol

    state, enc, _ = one_sender_protocol(theta, q, alpha)
    return CqEnsemble.from_encoding(state, enc)


def extremal_holevo_bound(theta: float, transmit_mass: float) -> float:
    """cos^2 theta h2(q) + q h2(cos^2 theta), q the total mass of non-blocking (gamma = 0) branches.

    Blocking hides which path the particle took, so only the transmitted
    fraction can carry the h2(cos^2 theta) of phase information.
    """
    c2 = np.cos(theta) ** 2
    return float(c2 * _h2(transmit_mass) + transmit_mass * _h2(c2))


def phase_ensemble(n: int, assisted: bool = False) -> CqEnsemble:
    """Equal superposition over n paths (+1 untouched path if assisted), all 2^n sign patterns."""
    from .mac_builder import EncodingStrategy, SenderEncoding, encoded_states

    paths = n + 1 if assisted else n
    state = PureState.from_paths(np.full(paths, 1 / np.sqrt(paths)))
    ops = (NpeOperation.identity(), NpeOperation.phase(np.pi))
    enc = EncodingStrategy(tuple(SenderEncoding(ops, i + 1, (0.5, 0.5)) for i in range(n)))
    states = encoded_states(state, enc)
    return CqEnsemble(np.full(len(states), 1 / len(states)), tuple(states.values()))


def holevo_logn(n: int, assisted: bool = False) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    return holevo_chi(phase_ensemble(n, assisted))


def two_point_mixture_value(params: SymmetricPovmParams, scenario: OneSenderScenario) -> float:
    return float(sum(w * j_one_sender(s, b, scenario) for w, s, b in zip(params.weights, params.sigmas, params.betas)))


def best_mixture_value(weights: Sequence[float], sigmas: Sequence[float], q: float, theta: float) -> float:
    """sum_m w_m J(sigma_m) at alpha = beta = pi."""
    c2 = np.cos(theta) ** 2
    return float(np.dot(weights, _jt(np.asarray(sigmas, dtype=float), q, c2)))
