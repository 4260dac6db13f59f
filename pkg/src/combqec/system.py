"""Physical parameters and model constructors for the ancilla-cavity system.

Builds the rotating-frame dispersive Hamiltonian, drive terms and the
standard Lindblad collapse set from measured rates. Angular frequencies are
rad/s, times are seconds throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from .core import (
    LinearOperator,
    SpaceDescriptor,
    annihilation,
    creation,
    identity,
    number_op,
    projector_e,
    sigma_minus,
    sigma_plus,
    sigma_x,
    sigma_y,
    tensor,
)

TWO_PI = 2 * pi


@dataclass(frozen=True)
class SystemParams:
    """Measured rates and coherence times of the ancilla-cavity pair.

    ``metadata`` stores device numbers that the simulation does not use
    (absolute mode frequencies, readout-resonator parameters, ...), kept only
    for provenance.
    """

    chi_qc: float  # qubit-cavity cross-Kerr, rad/s
    k_c: float  # cavity self-Kerr, rad/s
    k_c_prime: float = 0.0  # higher-order cavity self-Kerr, rad/s
    chi_qc_prime: float = 0.0  # higher-order cross-Kerr, rad/s
    t1_q: float = 98e-6
    tphi_q: float = 968e-6
    t1_c: float = 578e-6
    tphi_c: float = 4389e-6
    nth_q: float = 0.013
    nth_c: float = 0.006
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("t1_q", "tphi_q", "t1_c", "tphi_c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("nth_q", "nth_c"):
            v = getattr(self, name)
            if not 0 <= v < 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5), got {v}")
        for name in ("chi_qc", "k_c", "k_c_prime", "chi_qc_prime"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def kappa_c(self) -> float:
        return 1.0 / self.t1_c

    @property
    def gamma_q(self) -> float:
        return 1.0 / self.t1_q

    def to_dict(self) -> dict:
        return {
            "chi_qc_hz": self.chi_qc / TWO_PI,
            "k_c_hz": self.k_c / TWO_PI,
            "k_c_prime_hz": self.k_c_prime / TWO_PI,
            "chi_qc_prime_hz": self.chi_qc_prime / TWO_PI,
            "t1_q_us": self.t1_q * 1e6,
            "tphi_q_us": self.tphi_q * 1e6,
            "t1_c_us": self.t1_c * 1e6,
            "tphi_c_us": self.tphi_c * 1e6,
            "nth_q": self.nth_q,
            "nth_c": self.nth_c,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        return cls(
            chi_qc=TWO_PI * d["chi_qc_hz"],
            k_c=TWO_PI * d["k_c_hz"],
            k_c_prime=TWO_PI * d.get("k_c_prime_hz", 0.0),
            chi_qc_prime=TWO_PI * d.get("chi_qc_prime_hz", 0.0),
            t1_q=d["t1_q_us"] * 1e-6,
            tphi_q=d["tphi_q_us"] * 1e-6,
            t1_c=d["t1_c_us"] * 1e-6,
            tphi_c=d["tphi_c_us"] * 1e-6,
            nth_q=d.get("nth_q", 0.0),
            nth_c=d.get("nth_c", 0.0),
            metadata=d.get("metadata", {}),
        )


def default_params() -> SystemParams:
    """Measured device values used throughout as defaults."""
    return SystemParams(
        chi_qc=TWO_PI * 2.59e6,
        k_c=TWO_PI * 9.7e3,
        k_c_prime=TWO_PI * 0.32e3,
        chi_qc_prime=TWO_PI * 5.41e3,
        t1_q=98e-6,
        tphi_q=968e-6,
        t1_c=578e-6,
        tphi_c=4389e-6,
        nth_q=0.013,
        nth_c=0.006,
        metadata={
            # not simulated: absolute frequencies and readout-resonator block
            "omega_q_hz": 4.962e9,
            "omega_c_hz": 6.532e9,
            "omega_r_hz": 8.562e9,
            "k_q_hz": 216e6,
            "k_r_hz": 4.2e3,
            "chi_qr_hz": 1.9e6,
            "chi_cr_hz": 12.7e3,
            "t1_r_s": 58e-9,
            "nth_r": 0.001,
        },
    )


@dataclass(frozen=True)
class DriveTerm:
    """A single classical drive tone on the qubit or the cavity."""

    target: str  # "qubit" or "cavity"
    detuning: float = 0.0  # rad/s
    amplitude: float = 0.0  # rad/s
    phase: float = 0.0  # rad

    def __post_init__(self):
        if self.target not in ("qubit", "cavity"):
            raise ValueError(f"target must be 'qubit' or 'cavity', got {self.target!r}")
        for name in ("detuning", "amplitude", "phase"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def _require_qubit_cavity(space: SpaceDescriptor):
    if len(space.factors) != 2 or space.factors[0] != 2:
        raise ValueError(f"expected a qubit x cavity space, got factors {space.factors}")


def dispersive_hamiltonian(
    p: SystemParams, space: SpaceDescriptor, include_higher_order: bool = True
) -> LinearOperator:
    """Rotating-frame Hamiltonian (over hbar) of the dispersive pair:

        -chi_qc n |e><e| - (K_c/2) a+^2 a^2 + (K'_c/6) a+^3 a^3
        + (chi'_qc/2) |e><e| a+^2 a^2

    Diagonal in the product basis; absolute mode frequencies are dropped.
    """
    _require_qubit_cavity(space)
    n_fock = space.factors[1]
    n_c = np.arange(n_fock, dtype=float)
    kerr2 = n_c * (n_c - 1)
    kerr3 = n_c * (n_c - 1) * (n_c - 2)
    diag_g = -0.5 * p.k_c * kerr2
    diag_e = diag_g - p.chi_qc * n_c
    if include_higher_order:
        diag_g = diag_g + p.k_c_prime / 6.0 * kerr3
        diag_e = diag_e + p.k_c_prime / 6.0 * kerr3 + 0.5 * p.chi_qc_prime * kerr2
    return LinearOperator(space, np.diag(np.concatenate([diag_g, diag_e])).astype(complex), "H0")


def collapse_operators(
    p: SystemParams,
    space: SpaceDescriptor,
    qubit: bool = True,
    cavity_decay: bool = True,
    cavity_dephasing: bool = True,
    thermal: bool = True,
) -> list[LinearOperator]:
    """Standard Lindblad set for the measured T1/Tphi/n_th values.

    Pure dephasing uses jump operator n (cavity) and |e><e| (qubit) at rate
    2/Tphi, which makes single-quantum coherences decay at exactly 1/Tphi.
    Zero-rate operators are omitted.
    """
    _require_qubit_cavity(space)
    n_fock = space.factors[1]
    iq, ic = identity(2), identity(n_fock)
    ops: list[LinearOperator] = []

    def add(rate: float, op: LinearOperator, label: str):
        if rate > 0:
            lo = sqrt(rate) * op
            ops.append(LinearOperator(lo.space, lo.matrix, label))

    nth_c = p.nth_c if thermal else 0.0
    nth_q = p.nth_q if thermal else 0.0
    if cavity_decay:
        add(p.kappa_c * (1 + nth_c), tensor(iq, annihilation(n_fock)), "cavity_decay")
        add(p.kappa_c * nth_c, tensor(iq, creation(n_fock)), "cavity_heating")
    if cavity_dephasing:
        add(2.0 / p.tphi_c, tensor(iq, number_op(n_fock)), "cavity_dephasing")
    if qubit:
        add(p.gamma_q * (1 + nth_q), tensor(sigma_minus(), ic), "qubit_decay")
        add(p.gamma_q * nth_q, tensor(sigma_plus(), ic), "qubit_heating")
        add(2.0 / p.tphi_q, tensor(projector_e(), ic), "qubit_dephasing")
    return ops


def control_operators(space: SpaceDescriptor) -> list[LinearOperator]:
    """The four control quadratures sx, sy, a+a+, i(a-a+), tensored in place."""
    _require_qubit_cavity(space)
    n_fock = space.factors[1]
    a = annihilation(n_fock)
    ad = creation(n_fock)
    return [
        tensor(sigma_x(), identity(n_fock)),
        tensor(sigma_y(), identity(n_fock)),
        tensor(identity(2), a + ad),
        tensor(identity(2), 1j * (a - ad)),
    ]


def drive_hamiltonian(term: DriveTerm, t: float, space: SpaceDescriptor) -> LinearOperator:
    """Drive term at time ``t``: amp * exp(-i(detuning*t + phase)) on the
    raising operator of the target, plus Hermitian conjugate."""
    _require_qubit_cavity(space)
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    n_fock = space.factors[1]
    z = term.amplitude * np.exp(-1j * (term.detuning * t + term.phase))
    if term.target == "qubit":
        raise_op = tensor(sigma_plus(), identity(n_fock)).matrix
    else:
        raise_op = tensor(identity(2), creation(n_fock)).matrix
    return LinearOperator(space, z * raise_op + np.conj(z) * raise_op.conj().T, "Hd")
