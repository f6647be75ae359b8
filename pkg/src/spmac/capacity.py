"""Maximizing mutual information over input priors.

``ba_point_to_point`` is the classic Blahut-Arimoto iteration.
``ba_mac_rate_sum`` maximizes I(X_1 ... X_N : Y) over *product* priors by
cycling a Blahut-style multiplicative update over the senders.  With the
other senders frozen, the objective is concave in sender i's prior and
equals sum_x p_i(x) d_i(x) - (a term that only depends on q), so the update
p_i(x) <- p_i(x) 2^{d_i(x)} / Z never decreases it.  The joint problem is not
concave, hence the multi-start.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .mac_builder import TransitionMatrix

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000
DEFAULT_RESTARTS = 16


@dataclass(frozen=True)
class CapacityResult:
    value_bits: float
    prior: list
    iterations: int
    converged: bool
    residual: float
    upper_bound_bits: float | None = None
    restarts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value_bits": self.value_bits,
            "prior": [list(map(float, p)) for p in self.prior],
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "upper_bound_bits": self.upper_bound_bits,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _log2_safe(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    np.log2(x, out=out, where=x > 0)
    return out


def _divergences(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise D(w(.|x) || q) in bits; rows with support outside q give +inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w > 0, w * (_log2_safe(w) - np.log2(np.where(q > 0, q, 1.0))), 0.0)
    bad = (w > 0) & (q <= 0)
    d = ratio.sum(axis=1)
    d[bad.any(axis=1)] = np.inf
    return d


def _check_channel(tm: TransitionMatrix | np.ndarray) -> np.ndarray:
    w = tm.flat() if isinstance(tm, TransitionMatrix) else np.asarray(tm, dtype=float)
    if w.ndim != 2 or w.min() < -1e-12 or np.max(np.abs(w.sum(axis=1) - 1)) > 1e-10:
        raise ValueError("channel must be row-stochastic")
    return np.clip(w, 0, None)


def ba_point_to_point(tm: TransitionMatrix | np.ndarray, tol: float = 1e-10,
                      max_iter: int = DEFAULT_MAX_ITER) -> CapacityResult:
    """Capacity of a single-input channel (multi-sender inputs are flattened).

    Stops when the gap between max_x D(W(.|x)||q) and I(p) drops below
    ``tol``; that gap bounds the distance to capacity.
    """
    w = _check_channel(tm)
    p = np.full(w.shape[0], 1.0 / w.shape[0])
    last = -np.inf
    gap = np.inf
    for it in range(1, max_iter + 1):
        q = p @ w
        d = _divergences(w, q)
        value = float(p @ d)
        if value < last - 1e-12:
            raise RuntimeError(f"Blahut-Arimoto decreased ({last!r} -> {value!r})")
        last = value
        gap = float(d.max() - value)
        if gap < tol:
            return CapacityResult(max(value, 0.0), [p.tolist()], it, True, gap)
        p = p * np.exp2(d - d.max())
        p /= p.sum()
    return CapacityResult(max(last, 0.0), [p.tolist()], max_iter, False, gap)


class _MacObjective:
    """I(X:Y) and per-sender gradients for a product prior."""

    def __init__(self, tm: TransitionMatrix):
        self.tm = tm
        self.w = _check_channel(tm)
        self.shape = tm.inputs

    def joint_prior(self, priors: Sequence[np.ndarray]) -> np.ndarray:
        px = np.ones(())
        for p in priors:
            px = np.multiply.outer(px, p)
        return px.reshape(-1)

    def evaluate(self, priors: Sequence[np.ndarray]) -> tuple[float, list[np.ndarray]]:
        """Value and d_i(x_i) = E_{x_-i} D(W(.|x) || q) for every sender."""
        px = self.joint_prior(priors)
        q = px @ self.w
        dfull = _divergences(self.w, q)
        weighted = (px * dfull).reshape(self.shape)
        value = float(weighted.sum())
        dfull = dfull.reshape(self.shape)
        n = len(priors)
        ds = []
        for i, p in enumerate(priors):
            others = tuple(j for j in range(n) if j != i)
            if p.min() > 1e-150:
                ds.append(weighted.sum(axis=others) / p)
            else:
                t = dfull
                # contract from the last axis down so earlier axis numbers stay valid
                for j in reversed(others):
                    t = np.tensordot(t, priors[j], axes=([j], [0]))
                ds.append(np.asarray(t, dtype=float).reshape(-1))
        return value, ds


def _gap(value: float, ds: list[np.ndarray], priors=None) -> float:
    """Largest KKT violation max_{i,x} d_i(x) - I; zero exactly at stationary points."""
    return float(max(np.max(d) for d in ds) - value)


def _alternating(obj: _MacObjective, priors: list[np.ndarray], tol: float, max_iter: int,
                 stall: float = 0.0):
    """Cyclic per-sender updates until the KKT gap is below ``tol``.

    With ``stall > 0`` the loop also stops once a full cycle improves the
    objective by less than ``stall``.
    """
    value, ds = obj.evaluate(priors)
    it = 0
    gap = _gap(value, ds)
    while it < max_iter:
        it += 1
        before = value
        for i in range(len(priors)):
            d = ds[i]
            p = priors[i] * np.exp2(d - d.max())
            priors[i] = p / p.sum()
            new_value, ds = obj.evaluate(priors)
            if new_value < value - 1e-12:
                raise RuntimeError("alternating update decreased the objective")
            value = new_value
        gap = max(float(np.max(d) - value) for d in ds)
        if gap < tol:
            return value, priors, it, True, gap
        if value - before < stall:
            return value, priors, it, False, gap
    return value, priors, it, False, gap


def _solve_on_support(obj: _MacObjective, priors: list[np.ndarray], threshold: float):
    """Newton-type solve of d_i(x) = d_i(x_ref) over symbols with mass above ``threshold``.

    Symbols below the threshold are set to zero.  Returns None if the solve
    leaves the simplex.
    """
    supports = [np.flatnonzero(p > threshold) for p in priors]
    if any(len(s) == 0 for s in supports):
        return None
    free = [s[:-1] for s in supports]

    def unpack(z):
        out, k = [], 0
        for p, s, f in zip(priors, supports, free):
            new = np.zeros_like(p)
            new[f] = z[k:k + len(f)]
            new[s[-1]] = 1.0 - new[f].sum()
            k += len(f)
            out.append(new)
        return out

    z0 = np.concatenate([p[f] / p[s].sum() for p, s, f in zip(priors, supports, free)])
    if z0.size:
        def residual(z):
            _, ds = obj.evaluate([np.clip(p, 0, None) for p in unpack(z)])
            return np.concatenate([d[f] - d[s[-1]] for d, s, f in zip(ds, supports, free)])

        with np.errstate(all="ignore"):
            sol = optimize.root(residual, z0, method="hybr", options={"xtol": 1e-15})
        z = sol.x
        if not np.all(np.isfinite(z)) or np.max(np.abs(z - z0)) > 0.05:
            return None
    else:
        z = z0
    cand = unpack(z)
    if min(p.min() for p in cand) < 0:
        return None
    return cand


def _polish(obj: _MacObjective, priors: list[np.ndarray], value: float) -> tuple[float, list[np.ndarray]]:
    """Refine a near-stationary prior by solving the KKT system directly.

    Several support guesses are tried (symbols with mass below 1e-7, 1e-4 or
    1e-2 are dropped); the candidate with the smallest KKT gap wins, provided
    it does not lower the objective.
    """
    best_gap = _gap(*obj.evaluate(priors))
    best = (value, priors)
    for threshold in (1e-7, 1e-4, 1e-2):
        cand = _solve_on_support(obj, priors, threshold)
        if cand is None:
            continue
        v, ds = obj.evaluate(cand)
        g = _gap(v, ds)
        if v + 1e-13 >= value and g < best_gap:
            best_gap, best = g, (v, cand)
    return best


def ba_mac_rate_sum(tm: TransitionMatrix, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                    tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    upper_bound: bool = True, polish: bool = True) -> CapacityResult:
    """Rate sum max_{p_1 x ... x p_N} I(X_1 ... X_N : Y).

    Runs the alternating update from the uniform prior and from
    ``restarts`` random Dirichlet starts drawn from ``seed``.  The best value
    wins; values within 1e-12 of the best are tie-broken by the
    lexicographically smallest prior.
    """
    obj = _MacObjective(tm)
    rng = np.random.default_rng(seed)
    starts = [[np.full(m, 1.0 / m) for m in tm.inputs]]
    for _ in range(restarts):
        starts.append([rng.dirichlet(np.ones(m)) for m in tm.inputs])

    runs = []
    total_it = 0
    # Multiplicative updates slow down once some symbols become rare, so stop
    # them early, finish with a Newton solve of the KKT system, and only fall
    # back to more multiplicative steps if that fails.
    coarse = max(tol, 1e-6) if polish else tol
    for start in starts:
        priors = [p.copy() for p in start]
        value, priors, it, conv, gap = _alternating(obj, priors, coarse, max_iter, stall=tol if polish else 0.0)
        total_it += it
        if polish:
            value, priors = _polish(obj, priors, value)
            gap = _gap(*obj.evaluate(priors))
            if gap >= tol:
                value, priors, it2, conv, gap = _alternating(obj, priors, tol, max(max_iter - it, 1))
                total_it += it2
        runs.append((value, priors, max(gap, 0.0)))

    best = max(r[0] for r in runs)
    ties = [r for r in runs if r[0] >= best - 1e-12]
    ties.sort(key=lambda r: tuple(np.concatenate(r[1]).round(12)))
    value, priors, gap = ties[0]
    ub = ba_point_to_point(tm).value_bits if upper_bound else None
    return CapacityResult(
        value_bits=max(float(value), 0.0),
        prior=[p.tolist() for p in priors],
        iterations=total_it,
        converged=bool(gap < tol),
        residual=float(gap),
        upper_bound_bits=ub,
        restarts=[float(r[0]) for r in runs],
    )


GRID_CAP = 20_000_000


def _simplex_grid(m: int, resolution: int) -> np.ndarray:
    """All probability vectors of length m with entries in multiples of 1/(resolution-1)."""
    steps = resolution - 1
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        a = np.arange(resolution) / steps
        return np.stack([1 - a, a], axis=1)
    pts = [c for c in itertools.product(range(resolution), repeat=m - 1) if sum(c) <= steps]
    arr = np.array(pts, dtype=float) / steps
    return np.hstack([1 - arr.sum(axis=1, keepdims=True), arr])


def grid_oracle_rate_sum(tm: TransitionMatrix, resolution: int = 401, chunk: int = 200_000) -> float:
    """Exhaustive search over a product-prior grid; an independent check of the solver."""
    if tm.num_senders > 2 or max(tm.inputs) > 3:
        raise ValueError("grid oracle supports at most two senders with alphabets up to 3")
    w = _check_channel(tm)
    grids = [_simplex_grid(m, resolution) for m in tm.inputs]
    total = int(np.prod([len(g) for g in grids]))
    if total > GRID_CAP:
        raise ValueError(f"grid of {total} points is too large; lower the resolution")
    hrow = -np.where(w > 0, w * _log2_safe(w), 0.0).sum(axis=1)
    if len(grids) == 1:
        px_all = grids[0]
        blocks = [px_all]
    else:
        g1, g2 = grids
        blocks = []
        step = max(1, chunk // len(g2))
        for s in range(0, len(g1), step):
            a = g1[s:s + step]
            blocks.append(np.einsum("ai,bj->abij", a, g2).reshape(-1, w.shape[0]))
    best = 0.0
    for px in blocks:
        q = px @ w
        hq = -np.where(q > 0, q * _log2_safe(q), 0.0).sum(axis=1)
        best = max(best, float(np.max(hq - px @ hrow)))
    return best
