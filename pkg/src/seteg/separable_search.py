"""
Numerical search over separable point-to-point protocols.

An outcome k of a separable protocol that leaves a standard-form state is
fixed by four magnitudes: Alice's diagonal entries (m0, m1) and Bob's
dual-basis weights (n0, n1).  With prior q0 it occurs with probability

    p = q0 (m0 n0)^2 + (1 - q0) (m1 n1)^2

and leaves a pure state with z' = 2 sqrt(q0 q1) m0 m1 n0 n1 / p, which the
environment then dephases to (z, x) = (v z', sqrt(1 - z'^2)).  The operators
are realizable iff, for j = 0, 1,

    sqrt(1 - sum_k (m_k^j n_k^0)^2) * sqrt(1 - sum_k (m_k^j n_k^1)^2) >= s

where s is the overlap of the received states.  The search tries to beat
Y(v, 0)(1 - s); finding anything above it means a bug somewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolated, DegenerateOutcome, InfeasibleProtocol, InvalidParameter
from .yield_functions import YieldFunction

BOUND_TOL = 1e-9


@dataclass(frozen=True)
class SeparableOutcome:
    m0: float
    m1: float
    n0: float
    n1: float
    flip: bool = False  # X (x) X relabelling; statistics do not depend on it

    def magnitudes(self) -> np.ndarray:
        return np.abs([self.m0, self.m1, self.n0, self.n1])


@dataclass(frozen=True)
class SeparableProtocol:
    q0: float
    outcomes: tuple[SeparableOutcome, ...]
    s: float
    v: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.q0 < 1.0:
            raise InvalidParameter(f"q0 must lie strictly inside (0, 1), got {self.q0}")
        if not 0.0 <= self.s < 1.0 or not 0.0 <= self.v <= 1.0:
            raise InvalidParameter("need 0 <= s < 1 and 0 <= v <= 1")
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    def magnitudes(self) -> np.ndarray:
        return np.array([o.magnitudes() for o in self.outcomes]).reshape(-1, 4)


@dataclass(frozen=True)
class SearchConfig:
    outcomes: int = 4
    restarts: int = 64
    iterations: int = 2000
    seed: int = 0
    step: float = 0.5
    step_decay: float = 0.5
    decay_every: int = 400

    def __post_init__(self):
        if self.outcomes < 1 or self.restarts < 1 or self.iterations < 0:
            raise InvalidParameter("need outcomes >= 1, restarts >= 1, iterations >= 0")
        if self.step <= 0 or not 0 < self.step_decay <= 1 or self.decay_every < 1:
            raise InvalidParameter("bad step schedule")

    def step_at(self, iteration: int) -> float:
        return self.step * self.step_decay ** (iteration // self.decay_every)


@dataclass
class SearchResult:
    best_protocol: SeparableProtocol
    best_yield: float
    bound_value: float
    gap: float
    history: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        proto = self.best_protocol
        return {
            "best_yield": self.best_yield,
            "bound_value": self.bound_value,
            "gap": self.gap,
            "best_protocol": {
                "q0": proto.q0,
                "s": proto.s,
                "v": proto.v,
                "outcomes": [[o.m0, o.m1, o.n0, o.n1] for o in proto.outcomes],
            },
            "history": self.history,
        }


def outcome_stats(q0: float, o: SeparableOutcome) -> tuple[float, float, float]:
    """(p, z', x) of one outcome."""
    m0, m1, n0, n1 = o.magnitudes()
    p = q0 * (m0 * n0) ** 2 + (1 - q0) * (m1 * n1) ** 2
    if p <= 0:
        raise DegenerateOutcome("outcome has zero probability")
    z_prime = min(2 * math.sqrt(q0 * (1 - q0)) * m0 * m1 * n0 * n1 / p, 1.0)
    return float(p), float(z_prime), math.sqrt(1 - z_prime**2)


# ---------------------------------------------------------------------------
# Batched kernels.  ``mag`` has shape (..., K, 4) with columns (m0, m1, n0, n1).


def constraint_sums(mag: np.ndarray) -> np.ndarray:
    """sum_k (m^j n^i)^2 as an array (..., j, i)."""
    m = mag[..., :2]
    n = mag[..., 2:]
    return np.einsum("...kj,...ki->...ji", m**2, n**2)


def feasible_mask(mag: np.ndarray, s, tol: float = 0.0) -> np.ndarray:
    sums = constraint_sums(mag)
    inner_ok = np.all(sums <= 1 + tol, axis=(-2, -1))
    rest = np.clip(1 - sums, 0, None)
    prod = np.sqrt(rest[..., 0]) * np.sqrt(rest[..., 1])
    return inner_ok & np.all(prod >= np.asarray(s)[..., None] - tol, axis=-1)


def branch_scales(mag: np.ndarray, s) -> np.ndarray:
    """Factors t_j (..., 2) putting constraint j exactly on the boundary when
    every m^j is multiplied by sqrt(t_j).

    Constraint j only involves the m^j column, and (1 - t A)(1 - t B) >= s^2
    holds up to the smaller root of a quadratic in t, written here in the
    cancellation-free form.
    """
    sums = constraint_sums(mag)
    a, b = sums[..., 0], sums[..., 1]
    keep = 1 - np.asarray(s, dtype=float)[..., None] ** 2
    disc = np.sqrt((a - b) ** 2 + 4 * a * b * (1 - keep))
    denom = a + b + disc
    return np.where(denom > 0, 2 * keep / np.where(denom > 0, denom, 1.0), 1.0)


def project_to_boundary(mag: np.ndarray, s) -> np.ndarray:
    """Rescale the m^0 and m^1 magnitudes (up or down) so both constraints are tight."""
    out = mag.copy()
    out[..., :2] *= np.sqrt(branch_scales(mag, s))[..., None, :]
    return out


def batch_stats(q0: np.ndarray, mag: np.ndarray):
    """Per-outcome p and z' for arrays q0 (...,) and mag (..., K, 4)."""
    q0 = np.asarray(q0, dtype=float)[..., None]
    m0, m1, n0, n1 = (mag[..., i] for i in range(4))
    a0, a1 = m0 * n0, m1 * n1
    p = q0 * a0**2 + (1 - q0) * a1**2
    num = 2 * np.sqrt(q0 * (1 - q0)) * a0 * a1
    z_prime = np.divide(num, p, out=np.zeros_like(p), where=p > 0)
    return p, np.clip(z_prime, 0.0, 1.0)


def batch_yield(Y: YieldFunction, q0, mag, v) -> np.ndarray:
    p, z_prime = batch_stats(q0, mag)
    v = np.asarray(v, dtype=float)[..., None]
    vals = np.asarray(Y(v * z_prime, np.sqrt(1 - z_prime**2)), dtype=float)
    return np.sum(np.where(p > 0, p * vals, 0.0), axis=-1)


# ---------------------------------------------------------------------------


def feasible(proto: SeparableProtocol) -> bool:
    if not proto.outcomes:
        return True
    return bool(feasible_mask(proto.magnitudes(), proto.s, tol=1e-12))


def protocol_yield(proto: SeparableProtocol, Y: YieldFunction) -> float:
    """sum_k p_k Y(v z'_k, sqrt(1 - z'_k^2))."""
    if not feasible(proto):
        raise InfeasibleProtocol("protocol violates the completeness constraint")
    total = 0.0
    for o in proto.outcomes:
        p, z_prime, x = outcome_stats(proto.q0, o)
        total += p * float(Y(proto.v * z_prime, x))
    return total


def saturating_protocol(s: float, v: float = 1.0) -> SeparableProtocol:
    """q0 = 1/2 with a single outcome m = (1, 1), n = (sqrt(1 - s), sqrt(1 - s))."""
    n = math.sqrt(1 - s)
    return SeparableProtocol(0.5, (SeparableOutcome(1.0, 1.0, n, n),), s, v)


def search(Y: YieldFunction, s: float, v: float, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Random restarts plus stochastic coordinate refinement over separable protocols."""
    if not (0.0 < s < 1.0 and 0.0 < v < 1.0):
        raise InvalidParameter("need s and v strictly inside (0, 1)")
    R, K, n_iter = cfg.restarts, cfg.outcomes, cfg.iterations
    n_coords = 1 + 4 * K
    q0 = np.empty(R)
    mag = np.empty((R, K, 4))
    coords = np.empty((R, n_iter), dtype=np.int64)
    kicks = np.empty((R, n_iter))
    for r in range(R):
        rng = np.random.default_rng(cfg.seed + r)
        q0[r] = rng.uniform(0.02, 0.98)
        mag[r] = rng.uniform(0.05, 1.0, size=(K, 4))
        coords[r] = rng.integers(0, n_coords, size=n_iter)
        kicks[r] = rng.normal(size=n_iter)

    s_arr = np.full(R, s)
    mag = project_to_boundary(mag, s_arr)
    best = batch_yield(Y, q0, mag, v)
    max_pz = float(np.max(np.sum(np.prod(batch_stats(q0, mag), axis=0), axis=-1)))
    accepted = 0
    rows = np.arange(R)
    for it in range(n_iter):
        step = cfg.step_at(it) * kicks[:, it]
        c = coords[:, it]
        logit = np.log(q0 / (1 - q0)) + step
        new_q0 = np.where(c == 0, 1 / (1 + np.exp(-logit)), q0)
        new_q0 = np.clip(new_q0, 1e-12, 1 - 1e-12)
        new_mag = mag.copy()
        flat = new_mag.reshape(R, -1)
        idx = np.maximum(c - 1, 0)
        flat[rows, idx] *= np.where(c > 0, np.exp(step), 1.0)
        new_mag = project_to_boundary(flat.reshape(R, K, 4), s_arr)
        trial = batch_yield(Y, new_q0, new_mag, v)
        pz = np.sum(np.prod(batch_stats(new_q0, new_mag), axis=0), axis=-1)
        max_pz = max(max_pz, float(pz.max()))
        better = trial > best
        accepted += int(better.sum())
        q0 = np.where(better, new_q0, q0)
        mag = np.where(better[:, None, None], new_mag, mag)
        best = np.where(better, trial, best)

    winner = int(np.argmax(best))  # lowest restart index on ties
    protocol = SeparableProtocol(
        float(q0[winner]),
        tuple(SeparableOutcome(*map(float, row)) for row in mag[winner]),
        s,
        v,
    )
    bound = float(Y(v, 0.0)) * (1 - s)
    best_yield = float(best[winner])
    history = {
        "restart_best": [float(b) for b in best],
        "accepted_moves": accepted,
        "max_sum_p_zprime": max_pz,
        "chain_bound": 1 - s,
        "winner": winner,
    }
    if best_yield > bound + BOUND_TOL or max_pz > 1 - s + BOUND_TOL:
        raise BoundViolated(
            f"search found yield {best_yield!r} (sum p z' {max_pz!r}) above bound {bound!r} (1 - s = {1 - s!r})"
        )
    return SearchResult(protocol, best_yield, bound, bound - best_yield, history)


def random_feasible_protocols(rng: np.random.Generator, count: int, max_outcomes: int = 4):
    """Random (q0, mag, s) batches projected onto the feasible boundary.

    Outcome counts vary per protocol; unused slots have zero magnitude.
    """
    q0 = rng.uniform(1e-3, 1 - 1e-3, size=count)
    s = rng.uniform(1e-3, 1 - 1e-3, size=count)
    mag = rng.uniform(0.0, 1.0, size=(count, max_outcomes, 4))
    used = rng.integers(1, max_outcomes + 1, size=count)
    mag[np.arange(max_outcomes)[None, :] >= used[:, None]] = 0.0
    shrink = rng.uniform(0.0, 1.0, size=count) ** 0.25  # some strictly interior points
    mag = project_to_boundary(mag, s)
    mag[..., 2:] *= shrink[:, None, None]
    return q0, mag, s
