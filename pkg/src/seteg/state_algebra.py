"""
Two-qubit states supported on span{|Phi+>, |Phi->}.

A state is parametrized by three reals (zeta, chi, upsilon) with
zeta^2 + chi^2 + upsilon^2 <= 1.  In the computational basis
|00>, |01>, |10>, |11> its density matrix is

    <00|rho|00> = (1 + chi) / 2
    <11|rho|11> = (1 - chi) / 2
    <00|rho|11> = (zeta + i upsilon) / 2

with every |01>, |10> row and column zero.  A local unitary maps any such
state to the standard form (z, x) = (sqrt(zeta^2 + upsilon^2), |chi|),
whose coherence z / 2 is real and non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter, InvalidState, InvalidWeights, NotSingleErrorType

NORM_TOL = 1e-12
PSD_TOL = 1e-10

# Single-qubit Paulis and computational basis indices.
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)
XX = np.kron(X, X)
Z_A = np.kron(Z, I2)
_IDX00, _IDX01, _IDX10, _IDX11 = 0, 1, 2, 3


def _project_norm(*components: float) -> tuple[float, ...]:
    norm2 = sum(c * c for c in components)
    if not all(math.isfinite(c) for c in components):
        raise InvalidState(f"non-finite parameters {components}")
    if norm2 <= 1.0:
        return components
    if norm2 <= 1.0 + NORM_TOL:
        scale = 1.0 / math.sqrt(norm2)
        return tuple(c * scale for c in components)
    raise InvalidState(f"squared norm {norm2!r} exceeds 1")


@dataclass(frozen=True)
class SingleErrorState:
    zeta: float
    chi: float
    upsilon: float = 0.0

    def __post_init__(self):
        zeta, chi, upsilon = _project_norm(
            float(self.zeta), float(self.chi), float(self.upsilon)
        )
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "upsilon", upsilon)

    @property
    def norm2(self) -> float:
        return self.zeta**2 + self.chi**2 + self.upsilon**2


@dataclass(frozen=True)
class StandardFormState:
    z: float
    x: float

    def __post_init__(self):
        z, x = float(self.z), float(self.x)
        if not (-NORM_TOL <= z <= 1 + NORM_TOL and -NORM_TOL <= x <= 1 + NORM_TOL):
            raise InvalidState(f"standard form needs z, x in [0, 1], got ({z}, {x})")
        z, x = _project_norm(min(max(z, 0.0), 1.0), min(max(x, 0.0), 1.0))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)

    def as_general(self) -> SingleErrorState:
        return SingleErrorState(self.z, self.x, 0.0)


@dataclass(frozen=True)
class LocalCorrection:
    """Local unitary taking a state to its standard form.

    Applied in the order: X (x) X if ``xx_flip``, then Z on A if ``z_flip``,
    then exp(-i angle Z / 2) on A.
    """

    z_rotation_angle: float = 0.0
    xx_flip: bool = False
    z_flip: bool = False

    def unitary(self) -> np.ndarray:
        u = np.eye(4, dtype=complex)
        if self.xx_flip:
            u = XX @ u
        if self.z_flip:
            u = Z_A @ u
        half = self.z_rotation_angle / 2
        rot = np.kron(np.diag([np.exp(-1j * half), np.exp(1j * half)]), I2)
        return rot @ u

    def apply(self, rho: np.ndarray) -> np.ndarray:
        u = self.unitary()
        return u @ rho @ u.conj().T


def density_of(s: SingleErrorState | StandardFormState) -> np.ndarray:
    if isinstance(s, StandardFormState):
        s = s.as_general()
    rho = np.zeros((4, 4), dtype=complex)
    rho[_IDX00, _IDX00] = (1 + s.chi) / 2
    rho[_IDX11, _IDX11] = (1 - s.chi) / 2
    rho[_IDX00, _IDX11] = (s.zeta + 1j * s.upsilon) / 2
    rho[_IDX11, _IDX00] = (s.zeta - 1j * s.upsilon) / 2
    return rho


def to_standard_form(s: SingleErrorState) -> tuple[StandardFormState, LocalCorrection]:
    zeta, chi, upsilon = s.zeta, s.chi, s.upsilon
    xx_flip = chi < 0
    if xx_flip:
        # X(x)X swaps |00> and |11>: populations swap, coherence is conjugated.
        chi, upsilon = -chi, -upsilon
    z_flip = zeta < 0
    if z_flip:
        zeta, upsilon = -zeta, -upsilon
    # exp(-i t Z_A / 2) multiplies <00|rho|11> by exp(-i t).
    angle = math.atan2(upsilon, zeta) if (zeta or upsilon) else 0.0
    z = math.hypot(zeta, upsilon)
    return StandardFormState(z, chi), LocalCorrection(angle, xx_flip, z_flip)


def check_density_matrix(rho: np.ndarray) -> None:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise InvalidState(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > NORM_TOL:
        raise InvalidState("matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > NORM_TOL:
        raise InvalidState(f"trace {np.trace(rho).real!r} is not 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise InvalidState("matrix is not positive semidefinite")


def classify(rho: np.ndarray, tol: float = 1e-10) -> SingleErrorState:
    """Read (zeta, chi, upsilon) back from a density matrix.

    Raises NotSingleErrorType when the |01>, |10> population exceeds ``tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidState(f"expected a 4x4 matrix, got shape {rho.shape}")
    leak = rho[_IDX01, _IDX01].real + rho[_IDX10, _IDX10].real
    if leak > tol:
        raise NotSingleErrorType(f"population {leak:.3e} outside span{{|00>,|11>}}")
    trace = rho[_IDX00, _IDX00].real + rho[_IDX11, _IDX11].real
    if abs(trace - 1) > max(tol, NORM_TOL):
        raise InvalidState(f"trace {trace!r} on span{{|00>,|11>}} is not 1")
    chi = (rho[_IDX00, _IDX00].real - rho[_IDX11, _IDX11].real) / trace
    coherence = (rho[_IDX00, _IDX11] + np.conj(rho[_IDX11, _IDX00])) / trace
    return SingleErrorState(coherence.real, chi, coherence.imag)


def singlet_fraction(s: StandardFormState) -> float:
    return (1 + s.z) / 2


def _check_mixing(v: float) -> float:
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise InvalidParameter(f"mixing parameter must lie in [0, 1], got {v}")
    return v


def apply_phase_flip(s: StandardFormState, v: float) -> StandardFormState:
    """Phase-flip channel on qubit A with weights (1 +- v) / 2: z -> v z."""
    v = _check_mixing(v)
    return StandardFormState(v * s.z, s.x)


def apply_xx_mix(s: StandardFormState, v: float) -> StandardFormState:
    """Mix with the X (x) X conjugate using weights (1 +- v) / 2: x -> v x."""
    v = _check_mixing(v)
    return StandardFormState(s.z, v * s.x)


def phase_flip_channel(rho: np.ndarray, v: float, qubit: int = 0) -> np.ndarray:
    """Kraus form of the phase-flip channel acting on qubit ``qubit`` (0 = A)."""
    v = _check_mixing(v)
    z = Z_A if qubit == 0 else np.kron(I2, Z)
    return (1 + v) / 2 * rho + (1 - v) / 2 * (z @ rho @ z)


def xx_mix_channel(rho: np.ndarray, v: float) -> np.ndarray:
    v = _check_mixing(v)
    return (1 + v) / 2 * rho + (1 - v) / 2 * (XX @ rho @ XX)


def mix(terms: Iterable[tuple[float, SingleErrorState]]) -> SingleErrorState:
    terms = list(terms)
    if not terms:
        raise InvalidWeights("empty mixture")
    weights = np.array([w for w, _ in terms], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > NORM_TOL:
        raise InvalidWeights(f"weights must be non-negative and sum to 1, got {weights}")
    params = np.array([[s.zeta, s.chi, s.upsilon] for _, s in terms])
    zeta, chi, upsilon = weights @ params
    return SingleErrorState(zeta, chi, upsilon)


def standard_form_of_matrix(rho: np.ndarray, tol: float = 1e-10) -> StandardFormState:
    return to_standard_form(classify(rho, tol))[0]


def bell_fidelity(rho: np.ndarray) -> float:
    """<Phi+|rho|Phi+>."""
    phi = np.zeros(4, dtype=complex)
    phi[[_IDX00, _IDX11]] = 1 / math.sqrt(2)
    return float((phi.conj() @ rho @ phi).real)


def random_state(rng: np.random.Generator) -> SingleErrorState:
    """Uniform sample from the unit ball of (zeta, chi, upsilon)."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = rng.random() ** (1 / 3)
    return SingleErrorState(*(radius * direction))


__all__: Sequence[str] = [
    "SingleErrorState",
    "StandardFormState",
    "LocalCorrection",
    "density_of",
    "to_standard_form",
    "classify",
    "check_density_matrix",
    "singlet_fraction",
    "apply_phase_flip",
    "apply_xx_mix",
    "phase_flip_channel",
    "xx_mix_channel",
    "mix",
    "standard_form_of_matrix",
    "bell_fidelity",
    "random_state",
]
