"""
Closed-form performance of the optimal coherent-state entanglement supplier.

For a point-to-point channel of transmittance T, or a middle station reached
through channels Ta and Tb, every protocol obeys

    Ybar <= max_{0<u<1} Y(u**gamma, 0) * (1 - u)

with loss exponent gamma = (1 - T) / T, respectively
gamma = (1 - Ta) / Ta + (1 - Tb) / Tb, and the optimal protocol attains it
with fidelity F = (1 + u**gamma) / 2 at success probability 1 - u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter
from .yield_functions import ED, YieldFunction, binary_entropy

U_EPS = 1e-12
GRID_POINTS = 2048
U_TOL = 1e-10
INV_PHI = (math.sqrt(5) - 1) / 2


def _check_transmittance(name: str, t: float) -> float:
    t = float(t)
    if not 0.0 < t < 1.0:
        raise InvalidParameter(f"{name} must lie strictly inside (0, 1), got {t}")
    return t


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    T: float | None = None
    Ta: float | None = None
    Tb: float | None = None

    def __post_init__(self):
        if self.kind == "pointToPoint":
            _check_transmittance("T", self.T)
        elif self.kind == "threeParty":
            _check_transmittance("Ta", self.Ta)
            _check_transmittance("Tb", self.Tb)
        else:
            raise InvalidParameter(f"unknown channel kind {self.kind!r}")

    @classmethod
    def point_to_point(cls, T: float) -> "ChannelSpec":
        return cls("pointToPoint", T=T)

    @classmethod
    def three_party(cls, Ta: float, Tb: float) -> "ChannelSpec":
        return cls("threeParty", Ta=Ta, Tb=Tb)

    @classmethod
    def relay(cls, T: float) -> "ChannelSpec":
        """Middle station with both arms at sqrt(T), so the end-to-end transmittance is T."""
        root = math.sqrt(_check_transmittance("T", T))
        return cls("threeParty", Ta=root, Tb=root)


@dataclass(frozen=True)
class LossExponent:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidParameter(f"loss exponent must be positive, got {self.gamma}")


@dataclass(frozen=True)
class OptimizationResult:
    u_star: float
    value: float
    evaluations: int
    bracket: tuple[float, float]


def loss_exponent(c: ChannelSpec) -> LossExponent:
    if c.kind == "pointToPoint":
        return LossExponent((1 - c.T) / c.T)
    return LossExponent((1 - c.Ta) / c.Ta + (1 - c.Tb) / c.Tb)


def _gamma(g: LossExponent | float) -> float:
    return g.gamma if isinstance(g, LossExponent) else LossExponent(float(g)).gamma


def objective(Y: YieldFunction, g: LossExponent | float, u: float) -> float:
    """Y(u**gamma, 0) * (1 - u) for u in (0, 1)."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise InvalidParameter(f"u must lie strictly inside (0, 1), got {u}")
    u = min(max(u, U_EPS), 1 - U_EPS)
    return float(Y(u ** _gamma(g), 0.0)) * (1 - u)


def _objective_vec(Y: YieldFunction, gamma: float, u: np.ndarray) -> np.ndarray:
    return np.asarray(Y(u**gamma, np.zeros_like(u)), dtype=float) * (1 - u)


def golden_section_max(f, lo: float, hi: float, tol: float = U_TOL):
    """Maximize a scalar f on [lo, hi]; returns every probed (u, f(u)) pair."""
    probes = []

    def ev(u):
        val = f(u)
        probes.append((u, val))
        return val

    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = ev(c), ev(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = ev(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = ev(d)
    return probes


def optimum(Y: YieldFunction, g: LossExponent | float, grid_points: int = GRID_POINTS) -> OptimizationResult:
    """Maximize Y(u**gamma, 0)(1 - u) by a uniform grid, then golden section.

    Ties resolve to the smallest u.  Deterministic.
    """
    gamma = _gamma(g)
    grid = np.linspace(U_EPS, 1 - U_EPS, grid_points)
    values = _objective_vec(Y, gamma, grid)
    i = int(np.argmax(values))  # first maximum, i.e. smallest u on ties
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    probes = golden_section_max(lambda u: objective(Y, gamma, u), float(lo), float(hi))
    best_u, best_val = float(grid[i]), float(values[i])
    for u, val in probes:
        if val > best_val or (val == best_val and u < best_u):
            best_u, best_val = u, val
    return OptimizationResult(best_u, best_val, grid_points + len(probes), (float(lo), float(hi)))


def rnpm_point(u: float, g: LossExponent | float) -> tuple[float, float]:
    """Fidelity and success probability of the optimal protocol at overlap u."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise InvalidParameter(f"u must lie strictly inside (0, 1), got {u}")
    return (1 + u ** _gamma(g)) / 2, 1 - u


def success_at_fidelity(f_target: float, g: LossExponent | float) -> float:
    f_target = float(f_target)
    if not 0.5 < f_target < 1.0:
        raise InvalidParameter(f"target fidelity must lie in (1/2, 1), got {f_target}")
    u = (2 * f_target - 1) ** (1 / _gamma(g))
    return 1 - u


def ed_max(c: ChannelSpec) -> float:
    return optimum(ED, loss_exponent(c)).value


def capacity(c: ChannelSpec) -> float:
    """Two-way quantum/private capacity per channel use (per pair of uses for a relay)."""
    if c.kind == "pointToPoint":
        return -math.log2(1 - c.T)
    if not math.isclose(c.Ta, c.Tb, rel_tol=0, abs_tol=1e-15):
        raise InvalidParameter("relay capacity formula needs equal arms Ta == Tb")
    return -math.log2(1 - c.Ta)


def overlap_from_pulse(alpha: float, theta: float, T: float) -> float:
    """|<alpha e^{i theta/2}|alpha e^{-i theta/2}>|**T."""
    T = float(T)
    if not 0.0 < T <= 1.0:
        raise InvalidParameter(f"T must lie in (0, 1], got {T}")
    if alpha < 0:
        raise InvalidParameter("alpha must be non-negative")
    return math.exp(-T * alpha**2 * (1 - math.cos(theta)))


def ed_objective(u: float, gamma: float) -> float:
    """(1 - u)[1 - h((1 + u**gamma) / 2)], the distillable-entanglement objective."""
    return (1 - u) * (1 - binary_entropy((1 + u**gamma) / 2))


# ---------------------------------------------------------------------------
# Figure curves

FIDELITIES = {"c": 0.994, "d": 0.998}
CURVE_LABELS = {
    "a": "a_capacity",
    "b": "b_ed_max",
    "c": "c_ps_f0.994",
    "d": "d_ps_f0.998",
    "e": "e_direct_capacity",
}


@dataclass(frozen=True)
class CurveRow:
    T: float
    curve: str
    value: float


def default_t_grid(points: int = 200, t_min: float = 0.01, t_max: float = 0.99) -> list[float]:
    return np.geomspace(t_min, t_max, points).tolist()


def curve_point(which: str, T: float) -> list[CurveRow]:
    """All curve values of one figure at one end-to-end transmittance."""
    if which == "fig3":
        channel = ChannelSpec.point_to_point(T)
    elif which == "fig6":
        channel = ChannelSpec.relay(T)
    else:
        raise InvalidParameter(f"unknown figure {which!r}")
    gamma = loss_exponent(channel)
    rows = [
        CurveRow(T, CURVE_LABELS["a"], capacity(channel)),
        CurveRow(T, CURVE_LABELS["b"], optimum(ED, gamma).value),
    ]
    for key, fid in FIDELITIES.items():
        rows.append(CurveRow(T, CURVE_LABELS[key], success_at_fidelity(fid, gamma)))
    if which == "fig6":
        rows.append(CurveRow(T, CURVE_LABELS["e"], capacity(ChannelSpec.point_to_point(T))))
    return rows


def sort_rows(rows: Iterable[CurveRow]) -> list[CurveRow]:
    return sorted(rows, key=lambda r: (r.curve, r.T))


def figure_curves(which: str, t_grid: Sequence[float]) -> list[CurveRow]:
    """Rows (T, curve, value) for ``fig3`` (point to point) or ``fig6`` (relay), sorted by (curve, T)."""
    rows = []
    for T in t_grid:
        rows.extend(curve_point(which, T))
    return sort_rows(rows)
