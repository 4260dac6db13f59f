"""Lowest-order binomial code: codewords, error space, recoveries, PASS.

The code corrects a single photon loss: codewords (|0>+|4>)/sqrt(2) and |2>
share mean photon number 2, and a jump maps them onto the orthogonal error
words |3> and |1>. Also houses the no-jump deformation, the two-photon-loss
probability, and the photon-number-resolved a.c. Stark (PASS) calibration
that makes jump-induced dephasing deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .core import (
    LinearOperator,
    SpaceDescriptor,
    StateVector,
    annihilation,
    basis_state,
    qubit_cavity_space,
)
from .errors import CalibrationError
from .system import SystemParams

TWO_PI = 2 * pi

CARDINAL_NAMES = ("+Z", "-Z", "+X", "-X", "+Y", "-Y")


@dataclass(frozen=True)
class CodeSpec:
    """A two-codeword bosonic code with its single-loss error basis."""

    name: str
    codeword_0: np.ndarray
    codeword_1: np.ndarray
    error_0: np.ndarray
    error_1: np.ndarray

    def __post_init__(self):
        vecs = {}
        length = None
        for key in ("codeword_0", "codeword_1", "error_0", "error_1"):
            v = np.asarray(getattr(self, key), dtype=complex).ravel()
            if length is None:
                length = v.size
            elif v.size != length:
                raise ValueError("all code vectors must share one truncation")
            v.setflags(write=False)
            vecs[key] = v
            object.__setattr__(self, key, v)
        for pair in (("codeword_0", "codeword_1"), ("error_0", "error_1")):
            a, b = vecs[pair[0]], vecs[pair[1]]
            if abs(np.linalg.norm(a) - 1) > 1e-10 or abs(np.linalg.norm(b) - 1) > 1e-10:
                raise ValueError(f"{pair} must be unit norm")
            if abs(np.vdot(a, b)) > 1e-10:
                raise ValueError(f"{pair} must be orthogonal")
        code = np.stack([vecs["codeword_0"], vecs["codeword_1"]])
        err = np.stack([vecs["error_0"], vecs["error_1"]])
        if np.max(np.abs(code @ err.conj().T)) > 1e-10:
            raise ValueError("code and error spaces must be mutually orthogonal")

    @property
    def dim(self) -> int:
        return self.codeword_0.size

    @property
    def space(self) -> SpaceDescriptor:
        return SpaceDescriptor((self.dim,))

    def mean_photon_numbers(self) -> tuple[float, float]:
        n = np.arange(self.dim)
        return (
            float(np.sum(n * np.abs(self.codeword_0) ** 2)),
            float(np.sum(n * np.abs(self.codeword_1) ** 2)),
        )

    def knill_laflamme_check(self, tol: float = 1e-10) -> None:
        """Diagonal KL condition for the error set {I, a}."""
        a = annihilation(self.dim).matrix
        n_op = a.conj().T @ a
        n0 = np.vdot(self.codeword_0, n_op @ self.codeword_0)
        n1 = np.vdot(self.codeword_1, n_op @ self.codeword_1)
        off = np.vdot(self.codeword_0, n_op @ self.codeword_1)
        if abs(n0 - n1) > tol or abs(off) > tol:
            raise ValueError("codewords violate the Knill-Laflamme condition for {I, a}")

    def codewords(self) -> list[StateVector]:
        return [StateVector(self.space, self.codeword_0), StateVector(self.space, self.codeword_1)]

    def error_words(self) -> list[StateVector]:
        return [StateVector(self.space, self.error_0), StateVector(self.space, self.error_1)]

    def to_dict(self) -> dict:
        def ser(v):
            return {"re": [float(x) for x in v.real], "im": [float(x) for x in v.imag]}

        return {
            "name": self.name,
            "codeword_0": ser(self.codeword_0),
            "codeword_1": ser(self.codeword_1),
            "error_0": ser(self.error_0),
            "error_1": ser(self.error_1),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        def de(v):
            return np.array(v["re"], dtype=float) + 1j * np.array(v["im"], dtype=float)

        return cls(
            name=d["name"],
            codeword_0=de(d["codeword_0"]),
            codeword_1=de(d["codeword_1"]),
            error_0=de(d["error_0"]),
            error_1=de(d["error_1"]),
        )


def lowest_order_binomial(n_fock: int = 12) -> CodeSpec:
    """(|0>+|4>)/sqrt(2), |2> with error words |3>, |1>."""
    if n_fock < 5:
        raise ValueError(f"binomial code needs at least 5 Fock levels, got {n_fock}")
    c0 = np.zeros(n_fock, dtype=complex)
    c0[0] = c0[4] = 1 / np.sqrt(2)
    c1 = np.zeros(n_fock, dtype=complex)
    c1[2] = 1.0
    e0 = np.zeros(n_fock, dtype=complex)
    e0[3] = 1.0
    e1 = np.zeros(n_fock, dtype=complex)
    e1[1] = 1.0
    return CodeSpec("binomial-1", c0, c1, e0, e1)


def fock01_code(n_fock: int = 12) -> CodeSpec:
    """The best unprotected cavity encoding; defines the break-even point."""
    if n_fock < 3:
        raise ValueError("need at least 3 Fock levels")
    c0 = np.zeros(n_fock, dtype=complex)
    c0[0] = 1.0
    c1 = np.zeros(n_fock, dtype=complex)
    c1[1] = 1.0
    # no protected error space; use two higher Fock states as placeholders
    e0 = np.zeros(n_fock, dtype=complex)
    e0[2] = 1.0
    e1 = np.zeros(n_fock, dtype=complex)
    e1[min(3, n_fock - 1)] = 1.0
    return CodeSpec("fock01", c0, c1, e0, e1)


def cardinal_states(spec: CodeSpec, which: str = "code") -> dict[str, StateVector]:
    """Six Bloch cardinal states, +Z = basis0, +X = (b0+b1)/sqrt2, +Y = (b0+i b1)/sqrt2."""
    if which == "code":
        b0, b1 = spec.codeword_0, spec.codeword_1
    elif which == "error":
        b0, b1 = spec.error_0, spec.error_1
    else:
        raise ValueError(f"which must be 'code' or 'error', got {which!r}")
    s = 1 / np.sqrt(2)
    combos = {
        "+Z": b0,
        "-Z": b1,
        "+X": s * (b0 + b1),
        "-X": s * (b0 - b1),
        "+Y": s * (b0 + 1j * b1),
        "-Y": s * (b0 - 1j * b1),
    }
    return {k: StateVector(spec.space, v) for k, v in combos.items()}


def two_photon_loss_prob(kappa: float, t: float) -> float:
    """2 (kappa t)^2 exp(-2 kappa t): the dominant undetectable error."""
    if kappa * t < 0:
        raise ValueError("kappa*t must be non-negative")
    x = kappa * t
    return 2 * x**2 * np.exp(-2 * x)


def no_jump_deformation(spec: CodeSpec, kappa: float, t: float) -> CodeSpec:
    """Distortion of the codewords under the no-loss Kraus branch.

    Applies exp(-kappa t n / 2) and renormalizes each codeword; error words
    (single Fock states here) only renormalize.
    """
    if kappa * t >= 3:
        raise ValueError("deformation parameter kappa*t must stay below 3")
    damp = np.exp(-0.5 * kappa * t * np.arange(spec.dim))

    def deform(v):
        w = damp * v
        return w / np.linalg.norm(w)

    return CodeSpec(
        spec.name + "-deformed",
        deform(spec.codeword_0),
        deform(spec.codeword_1),
        deform(spec.error_0),
        deform(spec.error_1),
    )


def basis_map_unitary(sources, targets, dim: int) -> np.ndarray:
    """Unitary completion of the partial isometry sum_k |target_k><source_k|.

    Both orthonormal sets are extended over the Fock basis with an identical
    Gram-Schmidt sweep, so the completion is deterministic and reduces to the
    identity when sources equal targets.
    """

    def complete(vecs):
        basis = [np.asarray(v, dtype=complex) for v in vecs]
        for k in range(dim):
            cand = np.zeros(dim, dtype=complex)
            cand[k] = 1.0
            for b in basis:
                cand = cand - np.vdot(b, cand) * b
            norm = np.linalg.norm(cand)
            if norm > 1e-7:
                basis.append(cand / norm)
        if len(basis) != dim:
            raise ValueError("failed to complete the basis")
        return np.stack(basis, axis=1)

    s = complete(sources)
    t = complete(targets)
    return t @ s.conj().T


def ideal_recovery(
    spec: CodeSpec, case: str, kappa: float = 0.0, t: float = 0.0
) -> LinearOperator:
    """Exact unitary recovery onto the code space.

    ``case='jump'`` maps the error basis back to the codewords;
    ``case='no-jump'`` maps the deformed codewords (deformation time ``t``)
    back to the undeformed ones. Pulse-level realizations approximate these
    targets.
    """
    if case == "jump":
        sources = [spec.error_0, spec.error_1]
    elif case == "no-jump":
        deformed = no_jump_deformation(spec, kappa, t)
        sources = [deformed.codeword_0, deformed.codeword_1]
    else:
        raise ValueError(f"case must be 'jump' or 'no-jump', got {case!r}")
    u = basis_map_unitary(sources, [spec.codeword_0, spec.codeword_1], spec.dim)
    return LinearOperator(spec.space, u, f"recovery-{case}")


# ---------------------------------------------------------------------------
# PASS: photon-number-resolved a.c. Stark drive


@dataclass(frozen=True)
class PassCalibration:
    """Off-resonant ancilla drive that balances per-Fock phase rates.

    ``phase_rates_hz[n-1]`` is the accumulation rate of Fock |n> relative to
    vacuum, for n = 1..4.
    """

    detuning: float  # rad/s
    amplitude: float  # rad/s
    phase_rates_hz: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        vals = (self.detuning, self.amplitude) + tuple(self.phase_rates_hz)
        if not np.all(np.isfinite(vals)):
            raise ValueError("calibration values must be finite")


def pass_residual(cal: PassCalibration) -> float:
    """(f4 - f2) - (f3 - f1) in Hz; zero makes jump dephasing time independent."""
    f1, f2, f3, f4 = cal.phase_rates_hz
    return (f4 - f2) - (f3 - f1)


def pass_stark_shifts(
    params: SystemParams, detuning: float, amplitude: float, n_fock: int
) -> np.ndarray:
    """Dressed-level shifts of |g,n> under the detuned drive (rad/s, n = 0..).

    Two-level dressing of each photon-number block: the drive sits at
    detuning D_n = -(detuning) - n*chi from the |g,n> <-> |e,n> transition,
    and the g branch shifts by -sign(D_n) (sqrt(D_n^2 + 4 amp^2) - |D_n|)/2.
    """
    n = np.arange(n_fock)
    d_n = -detuning - n * params.chi_qc
    gap = np.sqrt(d_n**2 + 4 * amplitude**2)
    return -np.sign(d_n) * 0.5 * (gap - np.abs(d_n))


def pass_phase_rates(
    params: SystemParams,
    detuning: float,
    amplitude: float,
    n_fock: int = 8,
    ramsey_time: float = 16e-6,
    n_samples: int = 32,
    include_kerr: bool = True,
) -> np.ndarray:
    """Simulated Ramsey phase-accumulation rates f_n (Hz) of |n> vs |0>, n = 1..4.

    Evolves (|g,0> + |g,n>)/sqrt(2) under the static frame-rotated drive
    Hamiltonian and fits the unwrapped relative phase slope. Kerr terms are
    part of the rates (the calibration target cancels their mismatch).
    """
    from .system import dispersive_hamiltonian  # local import to avoid cycle

    space = qubit_cavity_space(n_fock)
    if include_kerr:
        h0 = dispersive_hamiltonian(params, space).matrix.copy()
    else:
        n_c = np.arange(n_fock, dtype=float)
        diag_e = -params.chi_qc * n_c
        h0 = np.diag(np.concatenate([np.zeros(n_fock), diag_e])).astype(complex)
    # drive frame: e-manifold shifted by -detuning, coupling on sigma_x
    h = h0.copy()
    h[n_fock:, n_fock:] -= detuning * np.eye(n_fock)
    h[:n_fock, n_fock:] += amplitude * np.eye(n_fock)
    h[n_fock:, :n_fock] += amplitude * np.eye(n_fock)

    w, v = np.linalg.eigh(h)
    times = np.linspace(0, ramsey_time, n_samples + 1)[1:]
    rates = np.zeros(4)
    for n in range(1, 5):
        psi0 = np.zeros(2 * n_fock, dtype=complex)
        psi0[0] = psi0[n] = 1 / np.sqrt(2)
        coef = v.conj().T @ psi0
        phases = []
        for t in times:
            psi_t = v @ (np.exp(-1j * w * t) * coef)
            phases.append(np.angle(psi_t[n] * np.conj(psi_t[0])))
        phases = np.unwrap(np.array(phases))
        slope = np.polyfit(times, phases, 1)[0]
        rates[n - 1] = slope / TWO_PI
    return rates


def calibrate_pass(
    params: SystemParams,
    detuning: float | None = None,
    amplitudes=None,
    n_fock: int = 8,
) -> PassCalibration:
    """Find the drive amplitude where the residual (f4-f2)-(f3-f1) crosses zero.

    Sweeps the phase-rate simulation over ``amplitudes`` (excluding the
    degenerate zero-amplitude root) and linearly interpolates the first sign
    change. Raises ``CalibrationError`` when the sweep never changes sign.
    """
    if detuning is None:
        detuning = -3.5 * params.chi_qc
    for k in range(1, 8):
        if abs(abs(detuning) - k * params.chi_qc) < 1e-6 * params.chi_qc:
            raise ValueError("detuning resonant with a photon-number ladder line")
    if amplitudes is None:
        amplitudes = TWO_PI * np.linspace(0.03e6, 0.25e6, 12)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if np.any(amplitudes <= 0):
        raise ValueError("amplitude sweep must be strictly positive")

    residuals = []
    rates_list = []
    for amp in amplitudes:
        rates = pass_phase_rates(params, detuning, amp, n_fock=n_fock)
        rates_list.append(rates)
        f1, f2, f3, f4 = rates
        residuals.append((f4 - f2) - (f3 - f1))
    residuals = np.array(residuals)

    sign_change = np.where(np.diff(np.sign(residuals)) != 0)[0]
    if sign_change.size == 0:
        raise CalibrationError(
            f"residual never crosses zero over the sweep "
            f"(range {residuals.min():.1f}..{residuals.max():.1f} Hz)"
        )
    i = int(sign_change[0])
    r0, r1 = residuals[i], residuals[i + 1]
    a0, a1 = amplitudes[i], amplitudes[i + 1]
    amp_root = a0 - r0 * (a1 - a0) / (r1 - r0)
    rates_root = pass_phase_rates(params, detuning, amp_root, n_fock=n_fock)
    return PassCalibration(
        detuning=detuning,
        amplitude=float(amp_root),
        phase_rates_hz=tuple(float(f) for f in rates_root),
    )
