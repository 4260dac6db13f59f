"""Frequency-comb parity mapping.

A single ancilla pulse carrying 2M tones, placed symmetrically at odd
multiples of chi around the two-photon-shifted qubit frequency, flips the
ancilla exactly when the cavity photon number is odd and returns it to
ground when even. This module synthesizes the comb envelope, evaluates the
closed-form rotation angles for the code and error spaces, simulates the
mapping on arbitrary cavity states, and calibrates amplitudes and timing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .core import (
    DensityMatrix,
    LinearOperator,
    StateVector,
    fock_state,
    partial_trace,
    qubit_cavity_space,
    state_fidelity,
)
from .code import CodeSpec, cardinal_states, lowest_order_binomial
from .dynamics import MeasurementModel, evolve_lindblad, evolve_unitary
from .system import SystemParams, collapse_operators, dispersive_hamiltonian

TWO_PI = 2 * pi


@dataclass(frozen=True)
class CombSpec:
    """Comb drive parameters.

    ``scalings`` holds one amplitude factor per tone, ordered
    [+1chi, -1chi, +3chi, -3chi, ...] relative to the two-photon frame;
    all ones reproduces the plain cosine comb.
    """

    chi: float  # rad/s
    m_pairs: int = 11
    omega: float | None = None  # rad/s per tone; defaults to chi/4
    duration: float = 255e-9
    delay: float = 47e-9
    edge: float = 5e-9
    scalings: np.ndarray | None = None

    def __post_init__(self):
        if self.m_pairs < 1:
            raise ValueError("need at least one tone pair")
        if self.omega is None:
            object.__setattr__(self, "omega", self.chi / 4)
        if self.omega <= 0 or self.chi <= 0:
            raise ValueError("chi and omega must be positive")
        if self.duration <= 2 * self.edge:
            raise ValueError("duration must exceed both edge ramps")
        if self.scalings is None:
            sc = np.ones(2 * self.m_pairs)
        else:
            sc = np.asarray(self.scalings, dtype=float)
            if sc.shape != (2 * self.m_pairs,):
                raise ValueError(f"scalings must have length {2 * self.m_pairs}")
        sc.setflags(write=False)
        object.__setattr__(self, "scalings", sc)

    def tone_frequencies(self) -> np.ndarray:
        """Signed tone offsets from the two-photon frame, matching ``scalings``."""
        odd = (2 * np.arange(1, self.m_pairs + 1) - 1) * self.chi
        return np.stack([odd, -odd], axis=1).reshape(-1)


def comb_envelope(spec: CombSpec, t) -> np.ndarray | complex:
    """Complex drive envelope (rad/s) in the two-photon frame.

    With symmetric scalings this is the real cosine comb
    Omega * sum_n 2 cos[(2n-1) chi (t - t_d)], shaped by raised-cosine edges.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-15) or np.any(t_arr > spec.duration + 1e-15):
        raise ValueError("t outside the pulse window")
    tau = t_arr - spec.delay
    freqs = spec.tone_frequencies()
    env = spec.omega * (spec.scalings[None, :] * np.exp(-1j * np.outer(tau.ravel(), freqs))).sum(
        axis=1
    ).reshape(t_arr.shape)
    if spec.edge > 0:
        ramp = np.ones_like(t_arr)
        rising = t_arr < spec.edge
        falling = t_arr > spec.duration - spec.edge
        ramp = np.where(rising, 0.5 * (1 - np.cos(pi * t_arr / spec.edge)), ramp)
        ramp = np.where(
            falling, 0.5 * (1 - np.cos(pi * (spec.duration - t_arr) / spec.edge)), ramp
        )
        env = env * ramp
    if np.ndim(t) == 0:
        return complex(env)
    return env


def analytic_xi(spec: CombSpec, duration: float) -> float:
    """Constant-drive rotation angle accumulated by the even (2-photon) manifold."""
    n = np.arange(spec.m_pairs)
    return float(
        2 * np.sum(spec.omega / ((2 * n + 1) * spec.chi) * np.sin((2 * n + 1) * spec.chi * duration))
    )


def analytic_mu(spec: CombSpec, duration: float) -> float:
    """Constant-drive rotation angle of the odd manifold (resonant tone included)."""
    n = np.arange(1, spec.m_pairs)
    return float(
        spec.omega * duration
        + 2 * np.sum(spec.omega / (2 * n * spec.chi) * np.sin(2 * n * spec.chi * duration))
    )


def constant_comb_angle(
    spec: CombSpec,
    duration: float,
    fock_n: int,
    keep_unpaired: bool = True,
    n_steps: int | None = None,
) -> float:
    """Numerical oracle for the closed-form angles.

    Integrates the two-level dynamics of Fock ``fock_n`` under the constant
    comb (no delay, no edges) in its own transition frame and returns the
    final rotation angle arcsin(|c_e|). ``keep_unpaired=False`` drops tones
    that have no mirror partner about the transition, which makes the
    closed forms exact.
    """
    detunings = spec.tone_frequencies() - spec.chi * (2 - fock_n)
    if not keep_unpaired:
        keep = np.array(
            [np.any(np.abs(detunings + d) < 1e-6 * spec.chi) for d in detunings]
        )
        detunings = detunings[keep]
    if n_steps is None:
        n_steps = max(2000, int(duration * spec.chi * spec.m_pairs * 8 / pi))
    dt = duration / n_steps
    c = np.array([1.0 + 0j, 0.0 + 0j])
    for k in range(n_steps):
        t_mid = (k + 0.5) * dt
        f = spec.omega * np.exp(-1j * detunings * t_mid).sum()
        # 2x2 exponential of [[0, conj(f)], [f, 0]]
        mag = abs(f)
        if mag == 0:
            continue
        cos_a, sin_a = np.cos(mag * dt), np.sin(mag * dt)
        u = np.array(
            [
                [cos_a, -1j * sin_a * np.conj(f) / mag],
                [-1j * sin_a * f / mag, cos_a],
            ]
        )
        c = u @ c
    return float(np.arcsin(min(1.0, abs(c[1]))))


# ---------------------------------------------------------------------------
# full parity-map simulation


@dataclass
class ParityReport:
    """Per-input excitation probabilities and inferred detection errors."""

    excitation: dict  # input name -> P(report e)
    detection_error: dict  # input name -> P(wrong parity report)
    post_states: dict  # input name -> (rho_cavity | g, rho_cavity | e)
    code_space_error: float | None = None
    error_space_error: float | None = None

    def fock_excitation(self, n: int) -> float:
        return self.excitation[f"fock{n}"]


def comb_frame_hamiltonian(
    params: SystemParams, n_fock: int, chi_only: bool = False
) -> LinearOperator:
    """Dispersive Hamiltonian shifted to the comb frame (two-photon resonance)."""
    space = qubit_cavity_space(n_fock)
    if chi_only:
        h = np.zeros((2 * n_fock, 2 * n_fock), dtype=complex)
        h[n_fock:, n_fock:] = -params.chi_qc * np.diag(np.arange(n_fock) - 2.0)
        return LinearOperator(space, h, "Hcomb")
    h = dispersive_hamiltonian(params, space).matrix.copy()
    h[n_fock:, n_fock:] += 2 * params.chi_qc * np.eye(n_fock)
    return LinearOperator(space, h, "Hcomb")


def _comb_drive(spec: CombSpec, n_fock: int):
    up = np.zeros((2 * n_fock, 2 * n_fock), dtype=complex)
    up[n_fock:, :n_fock] = np.eye(n_fock)  # |e><g| on the ancilla

    def h_t(t):
        f = comb_envelope(spec, t)
        return f * up + np.conj(f) * up.conj().T

    return h_t


def _input_states(inputs, code: CodeSpec | None, n_fock: int, fock_range):
    states: dict[str, StateVector] = {}
    for n in fock_range:
        states[f"fock{n}"] = fock_state(n_fock, n)
    if code is not None:
        for name, st in cardinal_states(code, "code").items():
            states[f"code{name}"] = st
        for name, st in cardinal_states(code, "error").items():
            states[f"error{name}"] = st
    if inputs is not None:
        if isinstance(inputs, StateVector):
            states["input"] = inputs
        else:
            states.update(inputs)
    return states


def simulate_parity_map(
    inputs=None,
    spec: CombSpec | None = None,
    params: SystemParams | None = None,
    decoherence: bool = False,
    readout: MeasurementModel | None = None,
    code: CodeSpec | None = None,
    fock_range=range(6),
    n_fock: int = 12,
    dt: float = 2.5e-10,
) -> ParityReport:
    """Simulate the comb pulse on cavity states with the ancilla starting in |g>.

    Decoherence off runs pure Schroedinger evolution; on, the Lindblad
    master equation with the full collapse set. ``readout`` folds assignment
    errors into the reported-outcome probabilities. Detection errors are
    scored against the true parity of each input.
    """
    if spec is None:
        raise ValueError("a CombSpec is required")
    if params is None:
        raise ValueError("SystemParams are required")
    space = qubit_cavity_space(n_fock)
    h0 = comb_frame_hamiltonian(params, n_fock)
    h_t = _comb_drive(spec, n_fock)
    collapse = collapse_operators(params, space) if decoherence else []
    states = _input_states(inputs, code, n_fock, fock_range)

    excitation = {}
    detect_err = {}
    posts = {}
    proj_e = np.zeros(2 * n_fock)
    proj_e[n_fock:] = 1.0

    for name, psi_c in states.items():
        amp = np.zeros(2 * n_fock, dtype=complex)
        amp[:n_fock] = psi_c.amplitudes
        parity = float(np.sum(np.abs(psi_c.amplitudes) ** 2 * (-1.0) ** np.arange(n_fock)))
        even = parity >= 0
        if decoherence:
            rho0 = StateVector(space, amp).to_density()
            rho = evolve_lindblad(
                rho0, h0, h_t=h_t, collapse=collapse, duration=spec.duration, dt=dt
            )
            diag = np.real(np.diag(rho.matrix))
            p_e = float(np.sum(diag[n_fock:]))
            m = rho.matrix
        else:
            psi = evolve_unitary(
                StateVector(space, amp), h0, pulse=h_t, duration=spec.duration, dt=dt
            )
            p_e = float(np.sum(np.abs(psi.amplitudes[n_fock:]) ** 2))
            m = np.outer(psi.amplitudes, psi.amplitudes.conj())

        blk_g = m[:n_fock, :n_fock]
        blk_e = m[n_fock:, n_fock:]
        rho_g = blk_g / max(np.real(np.trace(blk_g)), 1e-300)
        rho_e = blk_e / max(np.real(np.trace(blk_e)), 1e-300)
        posts[name] = (
            DensityMatrix(psi_c.space, rho_g),
            DensityMatrix(psi_c.space, rho_e),
        )

        if readout is not None:
            p_report_e = p_e * (1 - readout.assign_err_e) + (1 - p_e) * readout.assign_err_g
        else:
            p_report_e = p_e
        excitation[name] = p_report_e
        detect_err[name] = (p_report_e if even else 1 - p_report_e)

    code_err = None
    err_err = None
    code_keys = [k for k in states if k.startswith("code")]
    err_keys = [k for k in states if k.startswith("error")]
    if code_keys:
        code_err = float(np.mean([detect_err[k] for k in code_keys]))
    if err_keys:
        err_err = float(np.mean([detect_err[k] for k in err_keys]))
    return ParityReport(
        excitation=excitation,
        detection_error=detect_err,
        post_states=posts,
        code_space_error=code_err,
        error_space_error=err_err,
    )


# ---------------------------------------------------------------------------
# amplitude-scaling calibration


def stark_shift_magnitude(detuning: float, amplitude: float) -> float:
    """|shift| = (sqrt(detuning^2 + amplitude^2) - |detuning|) / 2."""
    return 0.5 * (np.hypot(detuning, amplitude) - abs(detuning))


def calibrate_scaling(detuning: float, measured_shift: float, omega0: float) -> float:
    """Invert the Stark-shift magnitude for the amplitude scaling factor.

    Solves |shift| = (sqrt(detuning^2 + (lambda omega0)^2) - |detuning|)/2
    for lambda >= 0.
    """
    if detuning == 0:
        raise ValueError("detuning must be nonzero")
    if measured_shift < 0:
        raise ValueError("the measured shift is a magnitude and cannot be negative")
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    s = 2 * measured_shift + abs(detuning)
    return float(np.sqrt(s**2 - detuning**2) / omega0)


# ---------------------------------------------------------------------------
# timing optimization


def fock_block_excitation(
    spec: CombSpec, fock_n: int, duration: float, delay: float, dt: float = 5e-10
) -> float:
    """Ancilla excitation for Fock ``fock_n`` from its two-level block.

    The comb drive does not change the photon number, so each Fock state
    evolves in a closed {|g,n>, |e,n>} block; Kerr phases drop out of the
    excitation probability. Fast enough for dense timing scans.
    """
    probe = CombSpec(
        chi=spec.chi,
        m_pairs=spec.m_pairs,
        omega=spec.omega,
        duration=duration,
        delay=delay,
        edge=spec.edge,
        scalings=spec.scalings,
    )
    detuning = -probe.chi * (fock_n - 2)
    n_steps = max(64, int(round(duration / dt)))
    step = duration / n_steps
    c = np.array([1.0 + 0j, 0.0 + 0j])
    ts = (np.arange(n_steps) + 0.5) * step
    envs = comb_envelope(probe, ts)
    phase = np.exp(1j * detuning * ts)
    for f, ph in zip(envs, phase):
        feff = f * ph
        mag = abs(feff)
        if mag == 0:
            continue
        cos_a, sin_a = np.cos(mag * step), np.sin(mag * step)
        u = np.array(
            [
                [cos_a, -1j * sin_a * np.conj(feff) / mag],
                [-1j * sin_a * feff / mag, cos_a],
            ]
        )
        c = u @ c
    return float(abs(c[1]) ** 2)


def timing_objective(spec: CombSpec, duration: float, delay: float, fock_range=range(5)) -> float:
    """Mean parity-mapping fidelity over the given Fock states."""
    fids = []
    for n in fock_range:
        p_e = fock_block_excitation(spec, n, duration, delay)
        fids.append(p_e if n % 2 else 1 - p_e)
    return float(np.mean(fids))


@dataclass
class TimingOptimum:
    duration: float
    delay: float
    fidelity: float
    evaluations: list = field(default_factory=list)  # (duration, delay, fidelity)


def optimize_pulse_timing(
    spec: CombSpec,
    duration_range: tuple[float, float],
    delay_range: tuple[float, float],
    n_grid: int = 9,
    n_refine: int = 2,
    fock_range=range(5),
) -> TimingOptimum:
    """Grid-then-refine search for (duration, delay) maximizing parity fidelity.

    Deterministic for a fixed grid; each refinement zooms into the current
    best cell with the same grid resolution.
    """
    if duration_range[0] > duration_range[1] or delay_range[0] > delay_range[1]:
        raise ValueError("search ranges must be ordered (lo, hi)")
    evals = []

    def scan(d_range, l_range):
        durations = np.linspace(*d_range, n_grid) if d_range[1] > d_range[0] else [d_range[0]]
        delays = np.linspace(*l_range, n_grid) if l_range[1] > l_range[0] else [l_range[0]]
        best = None
        for d in durations:
            for dl in delays:
                if d <= 2 * spec.edge:
                    continue
                f = timing_objective(spec, d, dl, fock_range)
                evals.append((float(d), float(dl), f))
                if best is None or f > best[2]:
                    best = (float(d), float(dl), f)
        if best is None:
            raise ValueError("empty search range")
        return best

    d_range, l_range = tuple(duration_range), tuple(delay_range)
    best = scan(d_range, l_range)
    for _ in range(n_refine):
        d_span = (d_range[1] - d_range[0]) / (n_grid - 1) if n_grid > 1 else 0.0
        l_span = (l_range[1] - l_range[0]) / (n_grid - 1) if n_grid > 1 else 0.0
        if d_span == 0 and l_span == 0:
            break
        d_range = (max(2 * spec.edge + 1e-12, best[0] - d_span), best[0] + d_span)
        l_range = (max(0.0, best[1] - l_span), best[1] + l_span)
        best = max(best, scan(d_range, l_range), key=lambda b: b[2])
    return TimingOptimum(best[0], best[1], best[2], evals)


# ---------------------------------------------------------------------------
# Ramsey-interferometer baseline


def ramsey_parity_map(
    inputs=None,
    params: SystemParams | None = None,
    pulse_duration: float = 20e-9,
    ideal_pulses: bool = False,
    code: CodeSpec | None = None,
    fock_range=range(6),
    n_fock: int = 12,
) -> ParityReport:
    """Conventional parity mapping: pi/2 -- wait pi/chi -- -pi/2 on the ancilla.

    Finite-duration unconditional pulses suffer from the photon-number
    dependent ancilla detuning; ``ideal_pulses`` replaces them with exact
    instantaneous rotations. Decoherence-free by construction.
    """
    if params is None:
        raise ValueError("SystemParams are required")
    space = qubit_cavity_space(n_fock)
    h0 = comb_frame_hamiltonian(params, n_fock).matrix
    states = _input_states(inputs, code, n_fock, fock_range)

    sx = np.kron(np.array([[0, 1], [1, 0]], dtype=complex), np.eye(n_fock))
    t_wait = pi / params.chi_qc

    def half_pi(sign):
        if ideal_pulses:
            w, v = np.linalg.eigh(sign * sx)
            return (v * np.exp(-1j * w * pi / 4)) @ v.conj().T
        omega = (pi / 4) / pulse_duration
        h = h0 + sign * omega * sx
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * w * pulse_duration)) @ v.conj().T

    u1 = half_pi(+1)
    u2 = half_pi(-1)
    wz, wv = np.linalg.eigh(h0)
    u_wait = (wv * np.exp(-1j * wz * t_wait)) @ wv.conj().T
    u_total = u2 @ u_wait @ u1

    excitation = {}
    detect_err = {}
    posts = {}
    for name, psi_c in states.items():
        amp = np.zeros(2 * n_fock, dtype=complex)
        amp[:n_fock] = psi_c.amplitudes
        out = u_total @ amp
        p_e = float(np.sum(np.abs(out[n_fock:]) ** 2))
        parity = float(np.sum(np.abs(psi_c.amplitudes) ** 2 * (-1.0) ** np.arange(n_fock)))
        even = parity >= 0
        excitation[name] = p_e
        detect_err[name] = p_e if even else 1 - p_e
        m = np.outer(out, out.conj())
        blk_g = m[:n_fock, :n_fock]
        blk_e = m[n_fock:, n_fock:]
        posts[name] = (
            DensityMatrix(psi_c.space, blk_g / max(np.real(np.trace(blk_g)), 1e-300)),
            DensityMatrix(psi_c.space, blk_e / max(np.real(np.trace(blk_e)), 1e-300)),
        )

    code_keys = [k for k in states if k.startswith("code")]
    err_keys = [k for k in states if k.startswith("error")]
    return ParityReport(
        excitation=excitation,
        detection_error=detect_err,
        post_states=posts,
        code_space_error=float(np.mean([detect_err[k] for k in code_keys])) if code_keys else None,
        error_space_error=float(np.mean([detect_err[k] for k in err_keys])) if err_keys else None,
    )


def default_comb_spec(params: SystemParams) -> CombSpec:
    """Operating point used by the experiments this models: 22 tones, 255 ns, 47 ns delay."""
    return CombSpec(chi=params.chi_qc)
