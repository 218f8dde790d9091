"""
Yield functions Y(z, x) on standard-form states and a sampling checker for
the properties the optimality results rely on:

* Y(0, x) = 0 (separable states yield nothing),
* Y non-decreasing in z and in x,
* joint convexity in (z, x),
* Y(v z, sqrt(1 - z^2)) <= z Y(v, 0) for v, z in [0, 1].

All yields accept numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameter, NonConvexSpec

VIOLATION_TOL = 1e-9


def binary_entropy(p):
    """h(p) = -p log2 p - (1 - p) log2(1 - p), with h(0) = h(1) = 0."""
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise InvalidParameter(f"binary entropy argument outside [0, 1]: {p}")
    out = np.zeros_like(arr)
    inner = (arr > 0) & (arr < 1)
    q = arr[inner]
    out[inner] = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return out if out.ndim else float(out)


def _check_domain(z, x) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(z < 0) or np.any(x < 0) or np.any(z * z + x * x > 1 + 1e-12):
        raise InvalidParameter("need z, x >= 0 and z^2 + x^2 <= 1")
    return z, x


def ed_eval(z, x):
    """Distillable entanglement of the standard-form state (z, x)."""
    z, x = _check_domain(z, x)
    r = np.minimum(np.sqrt(z * z + x * x), 1.0)
    return binary_entropy((1 + x) / 2) - binary_entropy((1 + r) / 2)


@dataclass(frozen=True)
class YieldFunction:
    name: str
    func: Callable = field(repr=False, compare=False)

    def __call__(self, z, x):
        out = self.func(z, x)
        return out if np.ndim(out) else float(out)


ED = YieldFunction("ed", ed_eval)


class ConvexSF:
    """A convex g with g(0) = 0 applied to the singlet-fraction parameter z."""

    def __init__(self, name: str, g: Callable):
        self.name = name
        self.g = g

    def __call__(self, z):
        return self.g(np.asarray(z, dtype=float))

    @classmethod
    def linear(cls, c: float = 1.0) -> "ConvexSF":
        if c < 0:
            raise NonConvexSpec("linear slope must be non-negative")
        return cls(f"linear:{c:g}", lambda z: c * z)

    @classmethod
    def power(cls, k: float) -> "ConvexSF":
        if k < 1:
            raise NonConvexSpec(f"z**k is convex only for k >= 1, got {k}")
        return cls(f"power:{k:g}", lambda z: z**k)

    @classmethod
    def piecewise_linear(cls, breakpoints: Sequence[float], slopes: Sequence[float]) -> "ConvexSF":
        """Continuous g with g(0) = 0, slope ``slopes[i]`` between consecutive knots.

        ``breakpoints`` are the interior knots in (0, 1); ``slopes`` has one
        more entry than ``breakpoints``.
        """
        knots = np.asarray(breakpoints, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        if len(slopes) != len(knots) + 1:
            raise InvalidParameter("need len(slopes) == len(breakpoints) + 1")
        if np.any(np.diff(knots) <= 0) or np.any((knots <= 0) | (knots >= 1)):
            raise InvalidParameter("breakpoints must increase strictly inside (0, 1)")
        if np.any(np.diff(slopes) < 0):
            raise NonConvexSpec(f"slopes must be non-decreasing, got {slopes.tolist()}")
        xs = np.concatenate([[0.0], knots, [1.0]])
        ys = np.concatenate([[0.0], np.cumsum(slopes * np.diff(xs))])
        label = "pwl:" + ",".join(f"{k:g}" for k in knots) + "/" + ",".join(f"{s:g}" for s in slopes)
        return cls(label, lambda z: np.interp(z, xs, ys))


def sf_eval(g: ConvexSF, z, x=None):
    """Yield that depends on the singlet fraction alone: returns g(z)."""
    return g(z)


def singlet_fraction_yield(g: ConvexSF) -> YieldFunction:
    return YieldFunction(g.name, lambda z, x: g(z) + 0 * np.asarray(x, dtype=float))


def linear_yield(c: float = 1.0) -> YieldFunction:
    return singlet_fraction_yield(ConvexSF.linear(c))


def power_yield(k: float) -> YieldFunction:
    return singlet_fraction_yield(ConvexSF.power(k))


def parse_yield(spec: str) -> YieldFunction:
    """Build a yield from ``ed``, ``linear:C``, ``power:K``, ``pwl:B1,B2/S0,S1,S2``
    or ``sqrt`` (a deliberately concave counterexample)."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "ed" and not arg:
            return ED
        if kind == "linear":
            return linear_yield(float(arg) if arg else 1.0)
        if kind == "power":
            return power_yield(float(arg))
        if kind == "pwl":
            knots, _, slopes = arg.partition("/")
            return singlet_fraction_yield(
                ConvexSF.piecewise_linear(
                    [float(b) for b in knots.split(",") if b],
                    [float(s) for s in slopes.split(",")],
                )
            )
        if kind == "sqrt" and not arg:
            return YieldFunction("sqrt", lambda z, x: np.sqrt(z) + 0 * np.asarray(x, dtype=float))
    except ValueError as exc:
        raise InvalidParameter(f"bad yield spec {spec!r}: {exc}") from exc
    raise InvalidParameter(f"unknown yield spec {spec!r}")


# ---------------------------------------------------------------------------
# Contract checking


@dataclass
class ContractReport:
    separable_zero_ok: bool
    monotone_z_ok: bool
    monotone_x_ok: bool
    joint_convex_ok: bool
    key_inequality_ok: bool
    worst_violation: float
    witness: dict | None
    violations: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.separable_zero_ok
            and self.monotone_z_ok
            and self.monotone_x_ok
            and self.joint_convex_ok
            and self.key_inequality_ok
        )

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "separable_zero_ok": self.separable_zero_ok,
            "monotone_z_ok": self.monotone_z_ok,
            "monotone_x_ok": self.monotone_x_ok,
            "joint_convex_ok": self.joint_convex_ok,
            "key_inequality_ok": self.key_inequality_ok,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "violations": self.violations,
        }


def _worst(name: str, excess: np.ndarray, points: Callable[[int], dict]) -> tuple[float, dict]:
    """Largest positive excess and the sample that produced it."""
    excess = np.ravel(excess)
    if excess.size == 0:
        return 0.0, {"check": name, "points": None}
    i = int(np.argmax(excess))
    amount = max(float(excess[i]), 0.0)
    return amount, {"check": name, "violation": amount, **points(i)}


def _sample_domain(rng: np.random.Generator, n: int) -> np.ndarray:
    """n points uniform in the quarter disc z, x >= 0, z^2 + x^2 <= 1."""
    radius = np.sqrt(rng.random(n))
    angle = rng.random(n) * (np.pi / 2)
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)


def verify_yield_contract(Y, grid_n: int = 64, segment_samples: int = 2000, seed: int = 0) -> ContractReport:
    """Check the yield contract on a grid and on random segments.

    Failures are reported in the returned ContractReport, never raised.
    """
    if grid_n < 8 or segment_samples < 100:
        raise InvalidParameter("need grid_n >= 8 and segment_samples >= 100")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, grid_n)
    zz, xx = np.meshgrid(t, t, indexing="ij")
    inside = zz**2 + xx**2 <= 1 + 1e-15
    # Clip onto the disc so edge points are legal inputs.
    rr = np.maximum(np.hypot(zz, xx), 1.0)
    zg, xg = np.where(inside, zz, zz / rr), np.where(inside, xx, xx / rr)
    values = np.asarray(Y(zg, xg), dtype=float)

    checks = {}

    sep = np.abs(np.asarray(Y(np.zeros_like(t), t), dtype=float))
    checks["separable_zero"] = _worst("separable_zero", sep, lambda i: {"z": 0.0, "x": float(t[i])})

    # Along z (axis 0) and x (axis 1), drops between neighbouring in-domain points.
    for axis, key in ((0, "monotone_z"), (1, "monotone_x")):
        drop = -np.diff(values, axis=axis)
        both = inside[:-1, :] & inside[1:, :] if axis == 0 else inside[:, :-1] & inside[:, 1:]
        drop = np.where(both, drop, -np.inf)

        def where(i, axis=axis, shape=drop.shape):
            a, b = np.unravel_index(i, shape)
            a2, b2 = (a + 1, b) if axis == 0 else (a, b + 1)
            return {"from": [float(zg[a, b]), float(xg[a, b])], "to": [float(zg[a2, b2]), float(xg[a2, b2])]}

        checks[key] = _worst(key, drop, where)

    a = _sample_domain(rng, segment_samples)
    b = _sample_domain(rng, segment_samples)
    # Segments touching the boundary are where convexity failures usually show.
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [np.sqrt(0.5), np.sqrt(0.5)]])
    a = np.concatenate([a, np.repeat(corners, len(corners), axis=0)])
    b = np.concatenate([b, np.tile(corners, (len(corners), 1))])
    mid = (a + b) / 2
    ya = np.asarray(Y(a[:, 0], a[:, 1]), dtype=float)
    yb = np.asarray(Y(b[:, 0], b[:, 1]), dtype=float)
    ym = np.asarray(Y(mid[:, 0], mid[:, 1]), dtype=float)
    checks["joint_convex"] = _worst(
        "joint_convex",
        ym - (ya + yb) / 2,
        lambda i: {"a": a[i].tolist(), "b": b[i].tolist()},
    )

    vv, zk = np.meshgrid(t, t, indexing="ij")
    lhs = np.asarray(Y(vv * zk, np.sqrt(np.clip(1 - zk**2, 0, 1))), dtype=float)
    rhs = zk * np.asarray(Y(vv, np.zeros_like(vv)), dtype=float)
    checks["key_inequality"] = _worst(
        "key_inequality",
        lhs - rhs,
        lambda i: dict(zip(("v", "z"), (float(vv.flat[i]), float(zk.flat[i])))),
    )

    ok = {k: amount <= VIOLATION_TOL for k, (amount, _) in checks.items()}
    worst_key = max(checks, key=lambda k: checks[k][0])
    worst_amount, worst_witness = checks[worst_key]
    return ContractReport(
        separable_zero_ok=ok["separable_zero"],
        monotone_z_ok=ok["monotone_z"],
        monotone_x_ok=ok["monotone_x"],
        joint_convex_ok=ok["joint_convex"],
        key_inequality_ok=ok["key_inequality"],
        worst_violation=worst_amount,
        witness=worst_witness,
        violations={k: w for k, (amount, w) in checks.items() if amount > VIOLATION_TOL},
    )
