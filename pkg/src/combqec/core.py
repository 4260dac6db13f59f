"""Truncated-Fock-space linear algebra.

States, density matrices and operators live on a fixed tensor-product space
(here at most qubit x cavity). Everything is dense complex128 and immutable
after construction; all functions are pure.

Conventions fixed once and used everywhere:
  * qubit basis index 0 = |g>, index 1 = |e>,
  * composite ordering qubit (x) cavity, i.e. ``kron(qubit_op, cavity_op)``,
  * default cavity truncation is 12 Fock levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import pi

import numpy as np
import scipy.linalg as sla

DEFAULT_N_FOCK = 12

# population allowed in the two highest retained Fock levels before the
# truncation monitor warns
TRUNCATION_TAIL_THRESHOLD = 1e-6


class TruncationWarning(UserWarning):
    """Cavity population is leaking into the top of the truncated basis."""


def _freeze(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered subsystem dimensions of a tensor-product Hilbert space."""

    factors: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(int(f) for f in self.factors))
        if not self.factors or any(f < 1 for f in self.factors):
            raise ValueError(f"every factor must be >= 1, got {self.factors}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))


def cavity_space(n_fock: int = DEFAULT_N_FOCK) -> SpaceDescriptor:
    return SpaceDescriptor((n_fock,))


def qubit_space() -> SpaceDescriptor:
    return SpaceDescriptor((2,))


def qubit_cavity_space(n_fock: int = DEFAULT_N_FOCK) -> SpaceDescriptor:
    """The standard ancilla-qubit x storage-cavity space."""
    return SpaceDescriptor((2, n_fock))


@dataclass(frozen=True)
class LinearOperator:
    """Dense square operator on a ``SpaceDescriptor``."""

    space: SpaceDescriptor
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = _freeze(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.space.total_dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match space {self.space.factors}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "LinearOperator":
        return LinearOperator(self.space, self.matrix.conj().T, self.label + "^+")

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            return LinearOperator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            return StateVector(self.space, self.matrix @ other.amplitudes, normalized=False)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, LinearOperator):
            return LinearOperator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, LinearOperator):
            return LinearOperator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __mul__(self, scalar):
        return LinearOperator(self.space, self.matrix * scalar, self.label)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


@dataclass(frozen=True)
class StateVector:
    """Pure state; unit norm unless explicitly built unnormalized."""

    space: SpaceDescriptor
    amplitudes: np.ndarray
    normalized: bool = field(default=True, compare=False)

    def __post_init__(self):
        amp = _freeze(self.amplitudes).ravel()
        if amp.size != self.space.total_dim:
            raise ValueError(
                f"amplitude length {amp.size} does not match space {self.space.factors}"
            )
        if self.normalized:
            n = np.linalg.norm(amp)
            if abs(n - 1.0) > 1e-10:
                if n == 0:
                    raise ValueError("cannot normalize the zero vector")
                amp = _freeze(amp / n)
        object.__setattr__(self, "amplitudes", amp)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        _check_same_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state; Hermitian, unit trace, positive within tolerances."""

    space: SpaceDescriptor
    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        if m.shape[0] != self.space.total_dim:
            raise ValueError(
                f"matrix dimension {m.shape[0]} does not match space {self.space.factors}"
            )
        object.__setattr__(self, "matrix", m)

    def validate(self, herm_tol=1e-10, trace_tol=1e-8, eig_tol=-1e-8) -> "DensityMatrix":
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > herm_tol:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > trace_tol or abs(np.trace(m).imag) > trace_tol:
            raise ValueError(f"trace {np.trace(m)} differs from 1 beyond tolerance")
        if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < eig_tol:
            raise ValueError("density matrix has a negative eigenvalue beyond tolerance")
        return self

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


def _check_same_space(a, b):
    if a.space.factors != b.space.factors:
        raise ValueError(f"space mismatch: {a.space.factors} vs {b.space.factors}")


# ---------------------------------------------------------------------------
# elementary operators


def annihilation(dim: int) -> LinearOperator:
    """Ladder operator with entries sqrt(n) at (n-1, n); top level annihilates."""
    if dim < 2:
        raise ValueError(f"annihilation needs dim >= 2, got {dim}")
    return LinearOperator(
        SpaceDescriptor((dim,)), np.diag(np.sqrt(np.arange(1, dim)), 1), "a"
    )


def creation(dim: int) -> LinearOperator:
    return LinearOperator(
        SpaceDescriptor((dim,)), np.diag(np.sqrt(np.arange(1, dim)), -1), "a+"
    )


def number_op(dim: int) -> LinearOperator:
    return LinearOperator(SpaceDescriptor((dim,)), np.diag(np.arange(dim, dtype=float)), "n")


def parity_op(dim: int) -> LinearOperator:
    return LinearOperator(
        SpaceDescriptor((dim,)), np.diag((-1.0) ** np.arange(dim)), "parity"
    )


def identity(space: SpaceDescriptor | int) -> LinearOperator:
    if isinstance(space, int):
        space = SpaceDescriptor((space,))
    return LinearOperator(space, np.eye(space.total_dim), "I")


def sigma_x() -> LinearOperator:
    return LinearOperator(qubit_space(), np.array([[0, 1], [1, 0]], dtype=complex), "sx")


def sigma_y() -> LinearOperator:
    return LinearOperator(qubit_space(), np.array([[0, -1j], [1j, 0]]), "sy")


def sigma_z() -> LinearOperator:
    # |g><g| - |e><e| with g = index 0
    return LinearOperator(qubit_space(), np.diag([1.0, -1.0]).astype(complex), "sz")


def sigma_minus() -> LinearOperator:
    # lowers |e> -> |g>
    return LinearOperator(qubit_space(), np.array([[0, 1], [0, 0]], dtype=complex), "s-")


def sigma_plus() -> LinearOperator:
    return LinearOperator(qubit_space(), np.array([[0, 0], [1, 0]], dtype=complex), "s+")


def projector_g() -> LinearOperator:
    return LinearOperator(qubit_space(), np.diag([1.0, 0.0]).astype(complex), "Pg")


def projector_e() -> LinearOperator:
    return LinearOperator(qubit_space(), np.diag([0.0, 1.0]).astype(complex), "Pe")


def fock_state(dim: int, n: int) -> StateVector:
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside truncation {dim}")
    amp = np.zeros(dim, dtype=complex)
    amp[n] = 1.0
    return StateVector(SpaceDescriptor((dim,)), amp)


def basis_state(space: SpaceDescriptor, index: int) -> StateVector:
    amp = np.zeros(space.total_dim, dtype=complex)
    amp[index] = 1.0
    return StateVector(space, amp)


def coherent_state(dim: int, alpha: complex) -> StateVector:
    # direct construction; fine for |alpha|^2 well inside the truncation
    amps = np.ones(dim, dtype=complex)
    for k in range(1, dim):
        amps[k] = amps[k - 1] * alpha / np.sqrt(k)
    amps *= np.exp(-abs(alpha) ** 2 / 2)
    # renormalize away the truncated tail
    return StateVector(SpaceDescriptor((dim,)), amps / np.linalg.norm(amps))


# ---------------------------------------------------------------------------
# composition and reduction


def tensor(a: LinearOperator, b: LinearOperator) -> LinearOperator:
    """Kronecker product; factor order matches the composite SpaceDescriptor."""
    space = SpaceDescriptor(a.space.factors + b.space.factors)
    label = f"{a.label}(x){b.label}" if a.label and b.label else ""
    return LinearOperator(space, np.kron(a.matrix, b.matrix), label)


def tensor_state(a: StateVector, b: StateVector) -> StateVector:
    space = SpaceDescriptor(a.space.factors + b.space.factors)
    return StateVector(space, np.kron(a.amplitudes, b.amplitudes), normalized=False)


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Trace out the other factor of a two-factor state; keep in {0, 1}."""
    if len(rho.space.factors) != 2:
        raise ValueError("partial_trace expects a two-factor space")
    if keep not in (0, 1):
        raise ValueError(f"keep must be 0 or 1, got {keep}")
    d0, d1 = rho.space.factors
    r = rho.matrix.reshape(d0, d1, d0, d1)
    if keep == 0:
        reduced = np.einsum("ikjk->ij", r)
    else:
        reduced = np.einsum("kikj->ij", r)
    return DensityMatrix(SpaceDescriptor((rho.space.factors[keep],)), reduced)


def embed_cavity_state(psi_c: StateVector, qubit_index: int = 0) -> StateVector:
    """Lift a cavity-only state into the qubit x cavity space (ancilla |g> by default)."""
    q = basis_state(qubit_space(), qubit_index)
    return tensor_state(q, psi_c)


# ---------------------------------------------------------------------------
# matrix exponential


def matrix_exponential(h: LinearOperator, scale: complex = 1.0) -> LinearOperator:
    """exp(scale * h).

    Hermitian input goes through an eigendecomposition; anything else through
    scipy's scaling-and-squaring.
    """
    if not np.all(np.isfinite(h.matrix.view(float))) or not np.isfinite(complex(scale).real + complex(scale).imag):
        raise ValueError("matrix exponential of non-finite input")
    m = h.matrix * scale
    if h.is_hermitian(1e-12):
        w, v = np.linalg.eigh(h.matrix)
        out = (v * np.exp(scale * w)) @ v.conj().T
    else:
        out = sla.expm(m)
    return LinearOperator(h.space, out, f"exp({h.label})" if h.label else "")


def expm_mul(h: np.ndarray, scale: complex, psi: np.ndarray) -> np.ndarray:
    """exp(scale*h) @ psi for raw arrays (no wrapping)."""
    return sla.expm(h * scale) @ psi


# ---------------------------------------------------------------------------
# fidelities


def state_fidelity(a, b) -> float:
    """|<a|b>|^2 for pure states, squared Uhlmann fidelity otherwise."""
    _check_same_space(a, b)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    if isinstance(a, StateVector):
        return float(np.real(np.vdot(a.amplitudes, b.matrix @ a.amplitudes)))
    if isinstance(b, StateVector):
        return state_fidelity(b, a)
    sqrt_a = _psd_sqrt(a.matrix)
    inner = _psd_sqrt(sqrt_a @ b.matrix @ sqrt_a)
    return float(np.real(np.trace(inner)) ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def check_truncation_tail(state, threshold: float = TRUNCATION_TAIL_THRESHOLD) -> float:
    """Warn when the top two Fock levels of the cavity factor are populated.

    Accepts cavity-only or qubit x cavity states/density matrices; returns the
    tail population.
    """
    if isinstance(state, StateVector):
        rho_diag = np.abs(state.amplitudes) ** 2
    else:
        rho_diag = np.real(np.diag(state.matrix))
    factors = state.space.factors
    if len(factors) == 2:
        rho_diag = rho_diag.reshape(factors).sum(axis=0)
    n_fock = factors[-1]
    tail = float(rho_diag[max(0, n_fock - 2):].sum())
    if tail > threshold:
        warnings.warn(
            f"population {tail:.3e} in the top two Fock levels exceeds {threshold:.0e}; "
            "increase the cavity truncation",
            TruncationWarning,
            stacklevel=2,
        )
    return tail


# ---------------------------------------------------------------------------
# Wigner function


def displacement(dim: int, alpha: complex) -> LinearOperator:
    a = annihilation(dim).matrix
    return LinearOperator(
        SpaceDescriptor((dim,)), sla.expm(alpha * a.conj().T - np.conj(alpha) * a), "D"
    )


def wigner(rho: DensityMatrix, alphas) -> np.ndarray:
    """W(alpha) = (2/pi) Tr[D(alpha) rho D(alpha)^+ P] on a cavity-only state.

    ``alphas`` may be any array of complex points; the returned real array has
    the same shape.
    """
    if len(rho.space.factors) != 1:
        raise ValueError("wigner expects a cavity-only density matrix")
    check_truncation_tail(rho)
    dim = rho.space.total_dim
    a = annihilation(dim).matrix
    adag = a.conj().T
    par = (-1.0) ** np.arange(dim)
    alphas = np.asarray(alphas, dtype=complex)
    flat = alphas.ravel()
    vals = np.empty(flat.size, dtype=float)
    for i, al in enumerate(flat):
        d = sla.expm(al * adag - np.conj(al) * a)
        transformed = d @ rho.matrix @ d.conj().T
        vals[i] = (2.0 / pi) * float(np.real(np.sum(np.diag(transformed) * par)))
    return vals.reshape(alphas.shape)
