"""
Truncated Fock-space simulation of the optimal coherent-state protocols.

Point to point: Alice's qubit A rotates a coherent pulse conditionally,
the pulse crosses a pure-loss channel (a beam splitter with a vacuum
environment mode E), and Bob maps the received mode b onto his qubit B with a
dual-basis operator.  With a middle station, both arms do the same and
Claire applies one of four functionals on the two received modes.

Modes are truncated to ``dim`` Fock levels.  Qubit-mode operators use the
ordering kron(qubit, mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .analytic_bounds import overlap_from_pulse
from .errors import IllConditioned, InvalidParameter, TruncationTooSmall
from .state_algebra import (
    SingleErrorState,
    X,
    classify,
    to_standard_form,
)

TAIL_TOL = 1e-12
OVERLAP_GUARD = 1e-6
COMPLETENESS_TOL = 1e-9


def default_dim(alpha: complex) -> int:
    a = abs(alpha)
    return math.ceil(a * a + 10 * a + 20)


def coherent(alpha: complex, dim: int | None = None) -> np.ndarray:
    """Amplitudes exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n < dim."""
    if dim is None:
        dim = default_dim(alpha)
    if dim < 1:
        raise TruncationTooSmall(f"dim must be positive, got {dim}")
    n = np.arange(dim)
    r = abs(alpha)
    if r == 0:
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        return vec
    log_mag = -r * r / 2 + n * math.log(r) - 0.5 * gammaln(n + 1)
    vec = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    tail = 1.0 - float(np.sum(np.exp(2 * log_mag)))
    if tail > TAIL_TOL:
        raise TruncationTooSmall(
            f"dim={dim} leaves tail mass {tail:.2e} for |alpha|={r:g}; use dim >= {default_dim(alpha)}"
        )
    return vec


def coherent_overlap(beta: complex, gamma: complex) -> complex:
    """<beta|gamma> for untruncated coherent states."""
    return complex(np.exp(-abs(beta) ** 2 / 2 - abs(gamma) ** 2 / 2 + np.conj(beta) * gamma))


def phase_rotation(phi: float, dim: int) -> np.ndarray:
    """exp(i phi n)."""
    return np.diag(np.exp(1j * phi * np.arange(dim)))


def conditional_rotation(theta: float, dim: int) -> np.ndarray:
    """|0><0| (x) R(theta/2) + |1><1| (x) R(-theta/2) with R(phi) = exp(i phi n)."""
    if not math.isfinite(theta):
        raise InvalidParameter("theta must be finite")
    if dim < 1:
        raise InvalidParameter("dim must be positive")
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = phase_rotation(theta / 2, dim)
    out[dim:, dim:] = phase_rotation(-theta / 2, dim)
    return out


def beam_splitter_isometry(T: float, dim: int) -> np.ndarray:
    """Beam splitter with a vacuum ancilla, as a map |n> -> sum_k c_nk |k>|n-k>.

    Returns L with L[k, m, n] the amplitude of |k>_out |m>_env given |n>_in,
    so that |alpha> -> |sqrt(T) alpha> |sqrt(1 - T) alpha>.  Photon number is
    conserved, so the restriction to ``dim`` levels is exactly isometric.
    """
    T = float(T)
    if not 0.0 < T < 1.0:
        raise InvalidParameter(f"transmittance must lie strictly inside (0, 1), got {T}")
    L = np.zeros((dim, dim, dim))
    lt, lr = 0.5 * math.log(T), 0.5 * math.log1p(-T)
    for n_in in range(dim):
        k = np.arange(n_in + 1)
        m = n_in - k
        log_c = 0.5 * (gammaln(n_in + 1) - gammaln(k + 1) - gammaln(m + 1)) + k * lt + m * lr
        L[k, m, n_in] = np.exp(log_c)
    return L


@dataclass(frozen=True)
class JointState:
    """A pure state on labelled subsystems; ``psi`` has one axis per label."""

    labels: tuple[str, ...]
    psi: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise InvalidParameter(f"duplicate subsystem labels {self.labels}")
        if self.psi.ndim != len(self.labels):
            raise InvalidParameter("one tensor axis per label required")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.psi.shape

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def axis(self, label: str) -> int:
        return self.labels.index(label)

    def apply(self, op: np.ndarray, label: str, new_label: str | None = None) -> "JointState":
        """Apply a (rows x dim) matrix to one subsystem."""
        ax = self.axis(label)
        moved = np.tensordot(op, self.psi, axes=([1], [ax]))
        psi = np.moveaxis(moved, 0, ax)
        labels = list(self.labels)
        labels[ax] = new_label or label
        return JointState(tuple(labels), psi)

    def reduced(self, keep: tuple[str, ...]) -> np.ndarray:
        """Density matrix on ``keep`` (in that order), tracing out the rest."""
        order = [self.axis(k) for k in keep]
        rest = [i for i in range(len(self.labels)) if i not in order]
        mat = np.transpose(self.psi, order + rest)
        d = int(np.prod([self.psi.shape[i] for i in order]))
        mat = mat.reshape(d, -1)
        return mat @ mat.conj().T


def _qubit_amplitudes(q0: float, Theta: tuple[float, float]) -> np.ndarray:
    q0 = float(q0)
    if not 0.0 < q0 < 1.0:
        raise InvalidParameter(f"q0 must lie strictly inside (0, 1), got {q0}")
    return np.array([math.sqrt(q0) * np.exp(1j * Theta[0]), math.sqrt(1 - q0) * np.exp(1j * Theta[1])])


def apply_loss(
    state: JointState, mode_label: str, T: float, received_label: str | None = None, env_label: str = "E"
) -> JointState:
    """Send one mode through a pure-loss channel, adding an environment mode."""
    if env_label in state.labels:
        raise InvalidParameter(f"label {env_label!r} already in use")
    ax = state.axis(mode_label)
    L = beam_splitter_isometry(T, state.dims[ax])
    moved = np.tensordot(L, state.psi, axes=([2], [ax]))  # (k, m, rest...)
    psi = np.moveaxis(moved, (0, 1), (ax, len(state.labels)))
    labels = list(state.labels)
    labels[ax] = received_label or mode_label
    return JointState(tuple(labels) + (env_label,), psi)


@dataclass(frozen=True)
class ArmParams:
    """Qubit prior, phases and pulse settings for one sender."""

    alpha: float
    theta: float
    T: float
    q0: float = 0.5
    Theta: tuple[float, float] = (0.0, 0.0)

    def branch_amplitudes(self) -> tuple[complex, complex]:
        return self.alpha * np.exp(0.5j * self.theta), self.alpha * np.exp(-0.5j * self.theta)

    def received_overlap(self) -> float:
        return overlap_from_pulse(self.alpha, self.theta, self.T)


def _build_arm(p: ArmParams, dim: int, qubit: str, mode: str, received: str, env: str) -> JointState:
    pulse = coherent(p.alpha, dim)
    joint = np.kron(_qubit_amplitudes(p.q0, p.Theta), pulse)
    joint = conditional_rotation(p.theta, dim) @ joint
    state = JointState((qubit, mode), joint.reshape(2, dim))
    return apply_loss(state, mode, p.T, received_label=received, env_label=env)


def build_p2p_state(q0, Theta, alpha, theta, T, dim=None) -> JointState:
    """sum_j sqrt(q_j) e^{i Theta_j} |j>_A |sqrt(T) alpha_j>_b |sqrt(1-T) alpha_j>_E."""
    p = ArmParams(alpha, theta, T, q0, tuple(Theta))
    return _build_arm(p, dim or default_dim(alpha), "A", "a", "b", "E")


def _branch_states(p: ArmParams, dim: int):
    """Received and environment branch states, built directly from their amplitudes."""
    a0, a1 = p.branch_amplitudes()
    t, r = math.sqrt(p.T), math.sqrt(1 - p.T)
    u = (coherent(t * a0, dim), coherent(t * a1, dim))
    v = (coherent(r * a0, dim), coherent(r * a1, dim))
    return u, v


def _virtual_state(p: ArmParams, u, v) -> np.ndarray:
    """sum_j sqrt(q_j) e^{i Theta_j + i (-1)^j phi} |j>|u_j>, with 2 phi = arg<v1|v0>."""
    phi = np.angle(np.vdot(v[1], v[0])) / 2
    amps = _qubit_amplitudes(p.q0, p.Theta) * np.exp(1j * phi * np.array([1, -1]))
    return amps[0] * np.outer([1, 0], u[0]) + amps[1] * np.outer([0, 1], u[1])


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def dephasing_equivalence_check(q0, Theta, alpha, theta, T, dim=None) -> float:
    """Trace distance between Tr_E|psi><psi| and the phase-flipped environment-free state."""
    dim = dim or default_dim(alpha)
    p = ArmParams(alpha, theta, T, q0, tuple(Theta))
    rho_ab = build_p2p_state(q0, Theta, alpha, theta, T, dim).reduced(("A", "b"))
    u, v = _branch_states(p, dim)
    psi_prime = _virtual_state(p, u, v).reshape(-1)
    pure = np.outer(psi_prime, psi_prime.conj())
    v_mag = abs(np.vdot(v[1], v[0]))
    z_a = np.kron(np.diag([1.0, -1.0]), np.eye(dim))
    dephased = (1 + v_mag) / 2 * pure + (1 - v_mag) / 2 * (z_a @ pure @ z_a)
    return trace_distance(rho_ab, dephased)


def dual_pair(u0: np.ndarray, u1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectors d_i in span{u0, u1} with <d_i|u_j> = delta_ij."""
    n0, n1 = np.linalg.norm(u0), np.linalg.norm(u1)
    if abs(np.vdot(u1, u0)) / (n0 * n1) > 1 - OVERLAP_GUARD:
        raise IllConditioned("states are too close to parallel for a dual basis")
    basis = np.stack([u0, u1])
    gram = basis.conj() @ basis.T  # gram[i, j] = <u_i|u_j>
    coeffs = np.linalg.inv(gram).conj()
    d0, d1 = coeffs @ basis
    return d0, d1


@dataclass(frozen=True)
class MeasurementOperator:
    """One success outcome: a map from the mode space to the output qubit(s).

    ``matrix`` has one row per output level (2 for Bob's qubit, 1 for a
    scalar functional).  ``terms`` lists (weight, bra_a, bra_b) with
    <O| = sum weight <bra_a| (x) <bra_b| for two-mode functionals, so they
    can be applied one arm at a time.  ``flip_b`` asks Bob to apply X after
    this outcome.
    """

    label: str
    matrix: np.ndarray = field(repr=False)
    flip_b: bool = False
    terms: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class MeasurementSet:
    outcomes: tuple[MeasurementOperator, ...]
    failure_label: str = "fail"

    def __post_init__(self):
        top = self.max_completeness_eigenvalue()
        if top > 1 + COMPLETENESS_TOL:
            raise InvalidParameter(f"sum of effects exceeds identity (max eigenvalue {top:.12f})")

    def stacked(self) -> np.ndarray:
        return np.vstack([o.matrix for o in self.outcomes])

    def completeness_eigenvalues(self) -> np.ndarray:
        """Nonzero spectrum of sum_k op^dagger op, via the small Gram matrix."""
        a = self.stacked()
        return np.linalg.eigvalsh(a @ a.conj().T)

    def max_completeness_eigenvalue(self) -> float:
        return float(self.completeness_eigenvalues().max())

    def failure_effect(self) -> np.ndarray:
        """I - sum_k op^dagger op, the lumped failure POVM element."""
        a = self.stacked()
        return np.eye(a.shape[1]) - a.conj().T @ a


def build_p2p_measurement(u0: np.ndarray, u1: np.ndarray) -> MeasurementSet:
    """N = sqrt(1 - s)(|0><d0| + |1><d1|), which saturates completeness."""
    d0, d1 = dual_pair(u0, u1)
    s = abs(np.vdot(u1, u0))
    n = math.sqrt(1 - s) * np.stack([d0.conj(), d1.conj()])
    return MeasurementSet((MeasurementOperator("N", n),))


def _rephased_duals(u0: np.ndarray, u1: np.ndarray):
    """Duals of (e^{-i phi} u0, e^{i phi} u1), whose overlap is real and positive."""
    d0, d1 = dual_pair(u0, u1)
    phi = np.angle(np.vdot(u1, u0)) / 2
    return np.exp(-1j * phi) * d0, np.exp(1j * phi) * d1


def _saturating_scale(kets_gram: np.ndarray) -> float:
    return 1.0 / math.sqrt(float(np.linalg.eigvalsh(kets_gram).max()))


def build_claire_measurement(u0a, u1a, u0b, u1b) -> MeasurementSet:
    """Four functionals on the two received modes.

    With d_ij the product duals (rephased so both arm overlaps are real):
    O1 ~ <d00| + <d11|, O2 ~ <d00| - <d11| (even parity, no correction),
    O3 ~ <d01| + <d10|, O4 ~ <d01| - <d10| (odd parity, Bob flips).
    The symmetric pair (O1, O3) and antisymmetric pair (O2, O4) live on
    orthogonal subspaces, so each pair is scaled independently until the
    largest eigenvalue of its summed effects is 1.
    """
    da = _rephased_duals(u0a, u1a)
    db = _rephased_duals(u0b, u1b)
    shapes = {
        "O1": ((1, 0, 0), (1, 1, 1)),
        "O2": ((1, 0, 0), (-1, 1, 1)),
        "O3": ((1, 0, 1), (1, 1, 0)),
        "O4": ((1, 0, 1), (-1, 1, 0)),
    }
    rows, terms = {}, {}
    for label, shape in shapes.items():
        terms[label] = tuple((w, da[i], db[j]) for w, i, j in shape)
        rows[label] = sum(w * np.kron(a.conj(), b.conj()) for w, a, b in terms[label])

    def group_gram(labels):
        r = np.stack([rows[k] for k in labels])
        return r @ r.conj().T

    scale = {}
    for group in (("O1", "O3"), ("O2", "O4")):
        c = _saturating_scale(group_gram(group))
        scale.update({k: c for k in group})
    outcomes = tuple(
        MeasurementOperator(
            label,
            scale[label] * rows[label][None, :],
            flip_b=label in ("O3", "O4"),
            terms=tuple((scale[label] * w, a, b) for w, a, b in terms[label]),
        )
        for label in shapes
    )
    return MeasurementSet(outcomes)


def claire_closed_form_scales(s: float) -> tuple[float, float]:
    """Squared scales (symmetric pair, antisymmetric pair) at equal real overlaps s."""
    return (1 - s) ** 2 / 2, (1 - s * s) / 2


# ---------------------------------------------------------------------------
# Simulation


@dataclass(frozen=True)
class OutcomeRecord:
    label: str
    probability: float
    state: SingleErrorState
    z_prime: float
    z: float
    x: float
    fidelity: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "probability": self.probability,
            "state": [self.state.zeta, self.state.chi, self.state.upsilon],
            "z_prime": self.z_prime,
            "z": self.z,
            "x": self.x,
            "fidelity": self.fidelity,
        }


@dataclass(frozen=True)
class SimulationReport:
    protocol: str
    outcomes: tuple[OutcomeRecord, ...]
    success_probability: float
    fidelity: float
    overlap: float
    dephasing: float
    gamma: float
    expected_success_probability: float
    expected_fidelity: float

    @property
    def delta_success_probability(self) -> float:
        return self.success_probability - self.expected_success_probability

    @property
    def delta_fidelity(self) -> float:
        return self.fidelity - self.expected_fidelity

    def average_yield(self, Y) -> float:
        return float(sum(o.probability * Y(o.z, o.x) for o in self.outcomes))

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "outcomes": [o.to_dict() for o in self.outcomes],
            "success_probability": self.success_probability,
            "fidelity": self.fidelity,
            "analytic": {
                "overlap": self.overlap,
                "dephasing": self.dephasing,
                "gamma": self.gamma,
                "success_probability": self.expected_success_probability,
                "fidelity": self.expected_fidelity,
                "delta_success_probability": self.delta_success_probability,
                "delta_fidelity": self.delta_fidelity,
            },
        }


def _outcome_from_rho(label: str, rho: np.ndarray, rho_virtual: np.ndarray) -> OutcomeRecord:
    p = float(np.trace(rho).real)
    state = classify(rho / p)
    sf, _ = to_standard_form(state)
    virtual, _ = to_standard_form(classify(rho_virtual / np.trace(rho_virtual).real))
    return OutcomeRecord(label, p, state, virtual.z, sf.z, sf.x, (1 + sf.z) / 2)


def _summarize(protocol, records, overlap, dephasing, gamma) -> SimulationReport:
    ps = sum(r.probability for r in records)
    fid = sum(r.probability * r.fidelity for r in records) / ps if ps > 0 else float("nan")
    return SimulationReport(
        protocol,
        tuple(records),
        ps,
        fid,
        overlap,
        dephasing,
        gamma,
        1 - overlap,
        (1 + overlap**gamma) / 2,
    )


def _apply_bob(n: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """(2, dim_b, ...) qubit-mode tensor -> (4, rest) with rows |A B>."""
    out = np.tensordot(n, psi, axes=([1], [1]))  # (B, A, rest...)
    out = np.swapaxes(out, 0, 1)
    return out.reshape(4, -1)


def simulate_p2p(
    alpha: float,
    theta: float,
    T: float,
    q0: float = 0.5,
    Theta: tuple[float, float] = (0.0, 0.0),
    dim: int | None = None,
    dephase_before: bool = False,
) -> SimulationReport:
    """Run the optimal point-to-point protocol and compare with the analytic (F, Ps).

    ``dephase_before`` traces the environment out before Bob measures (as the
    equivalent phase flip on A) instead of after; the results must agree.
    """
    dim = dim or default_dim(alpha)
    p = ArmParams(alpha, theta, T, q0, tuple(Theta))
    state = build_p2p_state(q0, Theta, alpha, theta, T, dim)
    u, v = _branch_states(p, dim)
    meas = build_p2p_measurement(*u)
    v_mag = abs(np.vdot(v[1], v[0]))
    psi_virtual = _virtual_state(p, u, v)
    records = []
    for op in meas.outcomes:
        if dephase_before:
            pure = psi_virtual.reshape(-1)
            rho_ab = np.outer(pure, pure.conj())
            z_a = np.kron(np.diag([1.0, -1.0]), np.eye(dim))
            rho_ab = (1 + v_mag) / 2 * rho_ab + (1 - v_mag) / 2 * (z_a @ rho_ab @ z_a)
            big = np.kron(np.eye(2), op.matrix)
            rho = big @ rho_ab @ big.conj().T
        else:
            m = _apply_bob(op.matrix, state.psi)  # E axis flattened into columns
            rho = m @ m.conj().T
        mv = _apply_bob(op.matrix, psi_virtual[:, :, None])
        records.append(_outcome_from_rho(op.label, rho, mv @ mv.conj().T))
    overlap = p.received_overlap()
    return _summarize("p2p", records, overlap, v_mag, (1 - T) / T)


@dataclass(frozen=True)
class ThreePartyState:
    """|xi>_{A c_a E_a} (x) |zeta>_{B c_b E_b}, kept as two factors."""

    arm_a: JointState
    arm_b: JointState

    def norm(self) -> float:
        return self.arm_a.norm() * self.arm_b.norm()


def build_three_party_state(params_a: ArmParams, params_b: ArmParams, dims=None) -> ThreePartyState:
    dim_a, dim_b = dims or (default_dim(params_a.alpha), default_dim(params_b.alpha))
    return ThreePartyState(
        _build_arm(params_a, dim_a, "A", "a", "c_a", "E_a"),
        _build_arm(params_b, dim_b, "B", "b", "c_b", "E_b"),
    )


def _contract(bra: np.ndarray, arm: np.ndarray) -> np.ndarray:
    """<bra| on the mode axis of a (qubit, mode, env) tensor -> (qubit, env)."""
    return np.tensordot(bra.conj(), arm, axes=([0], [1]))


def _apply_functional(op: MeasurementOperator, arm_a: np.ndarray, arm_b: np.ndarray) -> np.ndarray:
    """Rows |A B> x columns (E_a, E_b) after Claire's functional, arm by arm."""
    out = 0
    for w, bra_a, bra_b in op.terms:
        out = out + w * np.einsum("ae,bf->abef", _contract(bra_a, arm_a), _contract(bra_b, arm_b))
    if op.flip_b:
        out = np.tensordot(X, out, axes=([1], [1])).swapaxes(0, 1)
    return out.reshape(4, -1)


def simulate_three_party(params_a: ArmParams, params_b: ArmParams, dims=None) -> SimulationReport:
    """Run the optimal middle-station protocol.

    The expected values assume matched received overlaps u = s_a = s_b;
    with unequal overlaps the larger one is used.
    """
    dim_a, dim_b = dims or (default_dim(params_a.alpha), default_dim(params_b.alpha))
    state = build_three_party_state(params_a, params_b, (dim_a, dim_b))
    ua, va = _branch_states(params_a, dim_a)
    ub, vb = _branch_states(params_b, dim_b)
    meas = build_claire_measurement(ua[0], ua[1], ub[0], ub[1])
    virt_a = _virtual_state(params_a, ua, va)[:, :, None]
    virt_b = _virtual_state(params_b, ub, vb)[:, :, None]
    records = []
    for op in meas.outcomes:
        m = _apply_functional(op, state.arm_a.psi, state.arm_b.psi)
        mv = _apply_functional(op, virt_a, virt_b)
        records.append(_outcome_from_rho(op.label, m @ m.conj().T, mv @ mv.conj().T))
    v_mag = abs(np.vdot(va[1], va[0])) * abs(np.vdot(vb[1], vb[0]))
    overlap = max(params_a.received_overlap(), params_b.received_overlap())
    gamma = (1 - params_a.T) / params_a.T + (1 - params_b.T) / params_b.T
    return _summarize("three-party", records, overlap, v_mag, gamma)


def matched_beta(alpha: float, Ta: float, Tb: float) -> float:
    """Bob's amplitude giving the same received overlap as Alice's (equal theta)."""
    return alpha * math.sqrt(Ta / Tb)


def alpha_for_overlap(u: float, theta: float, T: float) -> float:
    """Pulse amplitude whose received branches overlap by u."""
    if not 0.0 < u <= 1.0:
        raise InvalidParameter(f"u must lie in (0, 1], got {u}")
    return math.sqrt(-math.log(u) / (T * (1 - math.cos(theta))))
