"""Time-evolution engines.

Three complementary integrators:
  * ``evolve_lindblad`` -- density-matrix master equation. Time-independent
    generators go through the exact exponential of the vectorized
    Liouvillian; time-dependent ones through fixed-step RK4.
  * ``evolve_unitary``  -- Schroedinger propagation with exact per-segment
    exponentials for piecewise-constant drives.
  * ``mc_trajectory``   -- Monte-Carlo wavefunction unraveling with
    mid-circuit measurements, built on precompiled segment propagators so the
    hot loop is a bare matrix-vector cascade (see ``kernels``).

All stochastic behavior is driven by an explicit numpy Generator; identical
seeds give bit-identical trajectories.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import kernels
from .core import LinearOperator, SpaceDescriptor, StateVector, DensityMatrix
from .errors import ConfigurationError, NumericError
from .system import control_operators

TRACE_DRIFT_LIMIT = 1e-6


# ---------------------------------------------------------------------------
# pulse container


@dataclass(frozen=True)
class PiecewisePulse:
    """Four-channel piecewise-constant control envelope (rad/s samples)."""

    dt: float
    qubit_i: np.ndarray
    qubit_q: np.ndarray
    cavity_i: np.ndarray
    cavity_q: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("segment duration dt must be positive")
        lengths = {len(self.qubit_i), len(self.qubit_q), len(self.cavity_i), len(self.cavity_q)}
        if len(lengths) != 1:
            raise ValueError(f"channel lengths differ: {lengths}")
        for name in ("qubit_i", "qubit_q", "cavity_i", "cavity_q"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_segments(self) -> int:
        return len(self.qubit_i)

    @property
    def duration(self) -> float:
        return self.dt * self.n_segments

    def samples(self) -> np.ndarray:
        """(n_segments, 4) array in channel order qubit-I, qubit-Q, cavity-I, cavity-Q."""
        return np.stack([self.qubit_i, self.qubit_q, self.cavity_i, self.cavity_q], axis=1)

    @classmethod
    def zeros(cls, n_segments: int, dt: float) -> "PiecewisePulse":
        z = np.zeros(n_segments)
        return cls(dt, z, z.copy(), z.copy(), z.copy())

    @classmethod
    def from_samples(cls, samples: np.ndarray, dt: float) -> "PiecewisePulse":
        s = np.asarray(samples, dtype=float)
        return cls(dt, s[:, 0], s[:, 1], s[:, 2], s[:, 3])

    def save_csv(self, path, drift_hash: str = "") -> None:
        """Columns: time, qubit-I, qubit-Q, cavity-I, cavity-Q; header records dt."""
        with open(path, "w") as f:
            f.write(f"# dt={float(self.dt)!r} drift_hash={drift_hash}\n")
            f.write("time,qubit_i,qubit_q,cavity_i,cavity_q\n")
            for k in range(self.n_segments):
                row = (
                    k * self.dt,
                    self.qubit_i[k],
                    self.qubit_q[k],
                    self.cavity_i[k],
                    self.cavity_q[k],
                )
                f.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path) -> "PiecewisePulse":
        with open(path) as f:
            header = f.readline()
            if not header.startswith("#"):
                raise ValueError("pulse file missing its header line")
            dt = float(header.split("dt=")[1].split()[0])
            f.readline()  # column names
            rows = [line.strip().split(",") for line in f if line.strip()]
        data = np.array([[float(v) for v in row] for row in rows])
        return cls(dt, data[:, 1], data[:, 2], data[:, 3], data[:, 4])


def drift_hash(h: LinearOperator) -> str:
    """Short fingerprint of a drift Hamiltonian, recorded in pulse files."""
    return hashlib.sha256(np.ascontiguousarray(h.matrix).tobytes()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# measurement model


@dataclass(frozen=True)
class MeasurementModel:
    """Phenomenological single-shot ancilla readout.

    ``assign_err_x``: probability of reporting the wrong outcome given true
    state x; ``qnd_flip_x``: probability that readout flips the ancilla state.
    """

    assign_err_g: float = 0.0
    assign_err_e: float = 0.0
    qnd_flip_g: float = 0.0
    qnd_flip_e: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        for name in ("assign_err_g", "assign_err_e", "qnd_flip_g", "qnd_flip_e"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must be a probability, got {v}")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


def default_readout() -> MeasurementModel:
    """Measured readout figures: fidelity 0.998/0.988, QNDness 0.998/0.972, 600 ns."""
    return MeasurementModel(
        assign_err_g=0.002,
        assign_err_e=0.012,
        qnd_flip_g=0.002,
        qnd_flip_e=0.028,
        duration=600e-9,
    )


def ideal_readout(duration: float = 0.0) -> MeasurementModel:
    return MeasurementModel(duration=duration)


# ---------------------------------------------------------------------------
# trajectory record


@dataclass
class TrajectoryRecord:
    """Per-trajectory event log: jumps, measurement outcomes, final state."""

    seed: int
    jumps: list = field(default_factory=list)  # (time, collapse label)
    measurements: list = field(default_factory=list)  # (time, "g"|"e")
    final_state: np.ndarray | None = None

    def check_times(self) -> None:
        times = [t for t, _ in self.jumps] + [t for t, _ in self.measurements]
        times_sorted = sorted(times)
        if times != times_sorted:
            # jumps and measurements are logged in separate lists; each must
            # individually be non-decreasing
            for seq in (self.jumps, self.measurements):
                ts = [t for t, _ in seq]
                if ts != sorted(ts):
                    raise ValueError("event times are not non-decreasing")

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "jumps": [[t, lab] for t, lab in self.jumps],
                "measurements": [[t, o] for t, o in self.measurements],
                "final_state_re": None
                if self.final_state is None
                else [float(x) for x in self.final_state.real],
                "final_state_im": None
                if self.final_state is None
                else [float(x) for x in self.final_state.imag],
            }
        )


def write_trajectory_log(records, path) -> None:
    with open(path, "w") as f:
        for rec in records:
            f.write(rec.to_json_line() + "\n")


# ---------------------------------------------------------------------------
# Liouvillian helpers (row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho))


def liouvillian_matrix(h: np.ndarray, collapse: list[np.ndarray]) -> np.ndarray:
    d = h.shape[0]
    eye = np.eye(d)
    lv = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for lop in collapse:
        ldl = lop.conj().T @ lop
        lv += np.kron(lop, lop.conj())
        lv -= 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
    return lv


def lindblad_propagator(h: np.ndarray, collapse: list[np.ndarray], dt: float) -> np.ndarray:
    """Exact exponential exp(L dt) of the vectorized Liouvillian."""
    return sla.expm(liouvillian_matrix(h, collapse) * dt)


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, LinearOperator) else np.asarray(op, dtype=complex)


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def evolve_lindblad(
    rho0: DensityMatrix,
    h_static: LinearOperator | np.ndarray,
    h_t=None,
    collapse=(),
    duration: float = 0.0,
    dt: float | None = None,
    snapshot_times=None,
):
    """Master-equation evolution.

    With ``h_t is None`` the generator is time independent and the propagator
    is the exact exponential applied in ``dt`` steps (``dt`` then only sets
    snapshot granularity). A time-dependent term ``h_t(t) -> matrix`` switches
    to fixed-step RK4, where ``dt`` must resolve the fastest frequency
    (dt * ||H|| < 0.1). Trace drift beyond 1e-6 raises ``NumericError``.

    Returns the final ``DensityMatrix``, or ``(final, snapshots)`` when
    ``snapshot_times`` is given.
    """
    space = rho0.space
    h0 = _as_matrix(h_static)
    ls = [_as_matrix(c) for c in collapse]
    if dt is None:
        dt = duration if h_t is None else duration / 1000.0
    if duration <= 0:
        return (rho0, []) if snapshot_times is not None else rho0
    if dt > duration:
        raise ConfigurationError(f"dt={dt} exceeds duration={duration}")

    n_steps = int(round(duration / dt))
    if abs(n_steps * dt - duration) > 1e-9 * max(duration, 1.0):
        n_steps = int(np.ceil(duration / dt))
    dt = duration / n_steps

    want = [] if snapshot_times is None else sorted(snapshot_times)
    snaps = []

    if h_t is None:
        prop = lindblad_propagator(h0, ls, dt)
        rho_vec = rho0.matrix.reshape(-1).astype(complex)
        d = h0.shape[0]
        for k in range(n_steps):
            rho_vec = prop @ rho_vec
            t = (k + 1) * dt
            tr = rho_vec[:: d + 1].sum()
            if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
                raise NumericError(f"trace drifted to {tr} at t={t}")
            while want and want[0] <= t + 1e-15:
                want.pop(0)
                snaps.append(DensityMatrix(space, rho_vec.reshape(d, d)))
        final = DensityMatrix(space, rho_vec.reshape(d, d))
        return (final, snaps) if snapshot_times is not None else final

    # RK4 on the matrix form
    norm_guess = _spectral_norm(h0 + _as_matrix(h_t(0.0)))
    if dt * norm_guess >= 0.1:
        raise ConfigurationError(
            f"dt={dt:.3e} too large: dt*||H||={dt * norm_guess:.3f} must stay below 0.1"
        )
    lds = [(lop, lop.conj().T @ lop) for lop in ls]

    def rhs(t, rho):
        h = h0 + _as_matrix(h_t(t))
        out = -1j * (h @ rho - rho @ h)
        for lop, ldl in lds:
            out += lop @ rho @ lop.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
        return out

    rho = rho0.matrix.astype(complex)
    for k in range(n_steps):
        t = k * dt
        k1 = rhs(t, rho)
        k2 = rhs(t + dt / 2, rho + dt / 2 * k1)
        k3 = rhs(t + dt / 2, rho + dt / 2 * k2)
        k4 = rhs(t + dt, rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        tcur = (k + 1) * dt
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_DRIFT_LIMIT:
            raise NumericError(f"trace drifted to {tr} at t={tcur}")
        while want and want[0] <= tcur + 1e-15:
            want.pop(0)
            snaps.append(DensityMatrix(space, rho))
    final = DensityMatrix(space, rho)
    return (final, snaps) if snapshot_times is not None else final


# ---------------------------------------------------------------------------
# unitary evolution


def pulse_hamiltonians(h0: np.ndarray, pulse: PiecewisePulse, space: SpaceDescriptor):
    """Per-segment total Hamiltonians H0 + sum_c u_c B_c."""
    ctrls = [op.matrix for op in control_operators(space)]
    samples = pulse.samples()
    out = np.empty((pulse.n_segments,) + h0.shape, dtype=complex)
    for k in range(pulse.n_segments):
        h = h0.astype(complex).copy()
        for c in range(4):
            if samples[k, c] != 0.0:
                h += samples[k, c] * ctrls[c]
        out[k] = h
    return out


def _expm_herm(h: np.ndarray, scale: complex) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(scale * w)) @ v.conj().T


def evolve_unitary(
    psi0: StateVector,
    h_static: LinearOperator | np.ndarray,
    pulse=None,
    duration: float | None = None,
    dt: float | None = None,
) -> StateVector:
    """Schroedinger propagation.

    ``pulse`` may be a ``PiecewisePulse`` (product of exact per-segment
    exponentials), a callable ``t -> drive matrix`` sampled at segment
    midpoints with step ``dt``, or None for static evolution.
    """
    h0 = _as_matrix(h_static)
    psi = psi0.amplitudes.astype(complex)
    space = psi0.space

    if pulse is None:
        if duration is None:
            raise ValueError("duration required for static evolution")
        psi = _expm_herm(h0, -1j * duration) @ psi
    elif isinstance(pulse, PiecewisePulse):
        if duration is not None and abs(duration - pulse.duration) > 1e-12:
            raise ValueError("duration conflicts with pulse length")
        for h in pulse_hamiltonians(h0, pulse, space):
            psi = _expm_herm(h, -1j * pulse.dt) @ psi
    else:
        if duration is None or dt is None:
            raise ValueError("analytic envelopes need explicit duration and dt")
        n_steps = max(1, int(round(duration / dt)))
        step = duration / n_steps
        for k in range(n_steps):
            h = h0 + _as_matrix(pulse(k * step + step / 2))
            psi = _expm_herm(h, -1j * step) @ psi
    return StateVector(space, psi)


# ---------------------------------------------------------------------------
# Monte-Carlo wavefunction machinery


@dataclass(frozen=True)
class CompiledSegment:
    """Precomputed non-unitary propagators for one timed block.

    ``repeat`` mode stores a single step propagator applied ``n_steps`` times
    (time-independent generator); ``sequence`` mode stores one propagator per
    step. ``h_eff`` holds the matching non-Hermitian generator(s) used to
    locate jump times inside a step.
    """

    duration: float
    dt: float
    n_steps: int
    propagator: np.ndarray | None = None  # repeat mode
    propagators: np.ndarray | None = None  # sequence mode
    h_eff: np.ndarray | None = None
    h_eff_seq: np.ndarray | None = None
    label: str = ""

    @property
    def is_repeat(self) -> bool:
        return self.propagator is not None

    def step_h_eff(self, k: int) -> np.ndarray:
        return self.h_eff if self.is_repeat else self.h_eff_seq[k]

    def step_propagator(self, k: int) -> np.ndarray:
        return self.propagator if self.is_repeat else self.propagators[k]


def _h_effective(h: np.ndarray, collapse: list[np.ndarray]) -> np.ndarray:
    heff = h.astype(complex).copy()
    for lop in collapse:
        heff -= 0.5j * (lop.conj().T @ lop)
    return heff


def compile_static_segment(
    h, collapse, duration: float, n_steps: int, label: str = ""
) -> CompiledSegment:
    h0 = _as_matrix(h)
    ls = [_as_matrix(c) for c in collapse]
    heff = _h_effective(h0, ls)
    dt = duration / n_steps
    prop = sla.expm(-1j * heff * dt)
    return CompiledSegment(
        duration=duration, dt=dt, n_steps=n_steps, propagator=prop, h_eff=heff, label=label
    )


def compile_pulse_segment(h, pulse: PiecewisePulse, collapse, space, label: str = "") -> CompiledSegment:
    h0 = _as_matrix(h)
    ls = [_as_matrix(c) for c in collapse]
    hs = pulse_hamiltonians(h0, pulse, space)
    heffs = np.array([_h_effective(hk, ls) for hk in hs])
    props = np.array([sla.expm(-1j * hk * pulse.dt) for hk in heffs])
    return CompiledSegment(
        duration=pulse.duration,
        dt=pulse.dt,
        n_steps=pulse.n_segments,
        propagators=props,
        h_eff_seq=heffs,
        label=label,
    )


def compile_envelope_segment(
    h, h_t, duration: float, dt: float, collapse, label: str = ""
) -> CompiledSegment:
    """Midpoint-sampled piecewise-constant compilation of an analytic drive."""
    h0 = _as_matrix(h)
    ls = [_as_matrix(c) for c in collapse]
    n_steps = max(1, int(round(duration / dt)))
    step = duration / n_steps
    heffs = np.empty((n_steps,) + h0.shape, dtype=complex)
    props = np.empty_like(heffs)
    for k in range(n_steps):
        hk = h0 + _as_matrix(h_t(k * step + step / 2))
        heffs[k] = _h_effective(hk, ls)
        props[k] = sla.expm(-1j * heffs[k] * step)
    return CompiledSegment(
        duration=duration, dt=step, n_steps=n_steps, propagators=props, h_eff_seq=heffs, label=label
    )


class JumpProcess:
    """Stateful MCWF walker: unnormalized state, jump threshold, event log.

    The walker owns the collapse operators and the rng; segments are pushed
    through ``evolve``. Jump times are refined by bisection to dt/100.
    """

    NORM_FLOOR = 1e-30

    def __init__(self, collapse_ops, rng: np.random.Generator):
        self.collapse = [(_as_matrix(c), getattr(c, "label", f"L{i}")) for i, c in enumerate(collapse_ops)]
        self.rng = rng
        self.psi: np.ndarray | None = None
        self.r = None
        self.jumps: list = []
        self.measurements: list = []

    def start(self, psi0: np.ndarray):
        self.psi = np.array(psi0, dtype=complex)
        self._redraw()

    def _redraw(self):
        self.r = float(self.rng.random())

    def state(self) -> np.ndarray:
        n = np.linalg.norm(self.psi)
        if n < self.NORM_FLOOR:
            raise NumericError("trajectory norm underflow")
        return self.psi / n

    def _apply_jump(self, t_abs: float):
        weights = []
        candidates = []
        for lop, label in self.collapse:
            phi = lop @ self.psi
            w = float(np.vdot(phi, phi).real)
            weights.append(w)
            candidates.append((phi, label))
        total = sum(weights)
        if total <= 0:
            raise NumericError("jump triggered with zero total jump rate")
        pick = self.rng.random() * total
        acc = 0.0
        for w, (phi, label) in zip(weights, candidates):
            acc += w
            if pick <= acc or (phi, label) is candidates[-1]:
                n = np.linalg.norm(phi)
                if n < self.NORM_FLOOR:
                    raise NumericError("post-jump norm underflow")
                self.psi = phi / n
                self.jumps.append((t_abs, label))
                break
        self._redraw()

    def _bisect_jump_time(self, psi_pre: np.ndarray, h_eff: np.ndarray, dt: float) -> float:
        """Crossing time of |psi|^2 through r inside one step, to dt/100."""
        lo, hi = 0.0, dt
        while hi - lo > dt / 100.0:
            mid = 0.5 * (lo + hi)
            cand = sla.expm(-1j * h_eff * mid) @ psi_pre
            if float(np.vdot(cand, cand).real) < self.r:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def evolve(self, segment: CompiledSegment, t_abs: float) -> float:
        """Run one compiled segment; returns the absolute end time."""
        if self.collapse:
            self._evolve_jumpy(segment, t_abs)
        else:
            if segment.is_repeat:
                _, self.psi = kernels.propagate_repeat_until(
                    segment.propagator, segment.n_steps, self.psi, -1.0
                )
            else:
                self.psi = kernels.apply_sequence(segment.propagators, self.psi)
        return t_abs + segment.duration

    def _evolve_jumpy(self, segment: CompiledSegment, t_abs: float):
        k = 0
        t_local = 0.0
        while k < segment.n_steps:
            if segment.is_repeat:
                crossed, psi = kernels.propagate_repeat_until(
                    segment.propagator, segment.n_steps - k, self.psi, self.r
                )
            else:
                crossed, psi = kernels.propagate_until(
                    segment.propagators[k:], self.psi, self.r
                )
            if crossed < 0:
                self.psi = psi
                return
            # psi is the state before the crossing step
            k += crossed
            t_local = k * segment.dt
            h_eff = segment.step_h_eff(k)
            t_star = self._bisect_jump_time(psi, h_eff, segment.dt)
            self.psi = sla.expm(-1j * h_eff * t_star) @ psi
            self._apply_jump(t_abs + t_local + t_star)
            # finish the partial step after the jump
            rest = segment.dt - t_star
            if rest > 0:
                candidate = sla.expm(-1j * h_eff * rest) @ self.psi
                if float(np.vdot(candidate, candidate).real) < self.r:
                    # rare second crossing within the same step: restart the
                    # step remainder with fresh bisection
                    t_sub = self._bisect_jump_time(self.psi, h_eff, rest)
                    self.psi = sla.expm(-1j * h_eff * t_sub) @ self.psi
                    self._apply_jump(t_abs + t_local + t_star + t_sub)
                    rest2 = rest - t_sub
                    if rest2 > 0:
                        self.psi = sla.expm(-1j * h_eff * rest2) @ self.psi
                else:
                    self.psi = candidate
            k += 1

    def apply_unitary(self, u: np.ndarray):
        self.psi = u @ self.psi

    def measure_qubit(self, model: MeasurementModel, space: SpaceDescriptor, t_abs: float):
        """Instantaneous projective ancilla readout with assignment and QND flips.

        Returns (reported, true_outcome) as "g"/"e"; idle decoherence during
        the readout window is a separate timed segment owned by the caller.
        """
        if space.factors[0] != 2:
            raise ValueError("ancilla measurement expects the qubit as the first factor")
        d_c = space.factors[1] if len(space.factors) == 2 else 1
        psi = self.state().reshape(2, d_c)
        p_g = float(np.sum(np.abs(psi[0]) ** 2))
        true_g = bool(self.rng.random() < p_g)
        proj = np.zeros_like(psi)
        if true_g:
            proj[0] = psi[0]
        else:
            proj[1] = psi[1]
        proj = proj / np.linalg.norm(proj)
        flip_p = model.qnd_flip_g if true_g else model.qnd_flip_e
        if self.rng.random() < flip_p:
            proj = proj[::-1].copy()
        assign_p = model.assign_err_g if true_g else model.assign_err_e
        flipped_report = bool(self.rng.random() < assign_p)
        reported_g = true_g ^ flipped_report
        self.psi = proj.reshape(-1)
        self._redraw()
        reported = "g" if reported_g else "e"
        true_label = "g" if true_g else "e"
        self.measurements.append((t_abs, reported))
        return reported, true_label


# ---------------------------------------------------------------------------
# spec-level schedule interface


@dataclass(frozen=True)
class EvolveEvent:
    duration: float
    dt: float | None = None


@dataclass(frozen=True)
class PulseEvent:
    pulse: PiecewisePulse


@dataclass(frozen=True)
class UnitaryEvent:
    op: LinearOperator


@dataclass(frozen=True)
class MeasureEvent:
    model: MeasurementModel


def mc_trajectory(
    psi0: StateVector,
    h_static: LinearOperator | np.ndarray,
    collapse,
    events,
    seed: int,
    h_t=None,
    default_steps: int = 256,
) -> TrajectoryRecord:
    """Run one trajectory through a schedule of timed events.

    Events execute in list order: ``EvolveEvent`` blocks integrate under the
    static Hamiltonian (plus ``h_t`` if given), ``PulseEvent`` applies a
    piecewise drive, ``UnitaryEvent`` acts instantaneously, ``MeasureEvent``
    projects the ancilla. Deterministic for a fixed seed.
    """
    space = psi0.space
    h0 = _as_matrix(h_static)
    rng = np.random.default_rng(seed)
    walker = JumpProcess(collapse, rng)
    walker.start(psi0.amplitudes)
    t = 0.0
    for ev in events:
        if isinstance(ev, EvolveEvent):
            if ev.duration <= 0:
                continue
            if h_t is None:
                n_steps = default_steps if ev.dt is None else max(1, int(round(ev.duration / ev.dt)))
                seg = compile_static_segment(h0, [c for c, _ in walker.collapse], ev.duration, n_steps)
            else:
                dt = ev.dt if ev.dt is not None else ev.duration / default_steps
                seg = compile_envelope_segment(
                    h0, h_t, ev.duration, dt, [c for c, _ in walker.collapse]
                )
            t = walker.evolve(seg, t)
        elif isinstance(ev, PulseEvent):
            seg = compile_pulse_segment(h0, ev.pulse, [c for c, _ in walker.collapse], space)
            t = walker.evolve(seg, t)
        elif isinstance(ev, UnitaryEvent):
            walker.apply_unitary(ev.op.matrix)
        elif isinstance(ev, MeasureEvent):
            walker.measure_qubit(ev.model, space, t)
            if ev.model.duration > 0:
                seg = compile_static_segment(
                    h0, [c for c, _ in walker.collapse], ev.model.duration, max(4, default_steps // 16)
                )
                t = walker.evolve(seg, t)
        else:
            raise ValueError(f"unknown event {ev!r}")
    rec = TrajectoryRecord(
        seed=seed,
        jumps=walker.jumps,
        measurements=walker.measurements,
        final_state=walker.state(),
    )
    rec.check_times()
    return rec


def measure_ancilla(
    state: StateVector,
    model: MeasurementModel,
    rng: np.random.Generator,
    idle_h=None,
    idle_collapse=(),
):
    """Single projective ancilla measurement on a qubit x cavity pure state.

    Projects with Born probabilities, applies the assignment-error flip to
    the report and the QND-flip channel to the post-state, then lets the
    system idle for ``model.duration`` under ``idle_h`` (with jumps) when
    given. Returns (reported, post_state, true_outcome).
    """
    walker = JumpProcess(list(idle_collapse), rng)
    walker.start(state.amplitudes)
    reported, true_label = walker.measure_qubit(model, state.space, 0.0)
    if model.duration > 0 and idle_h is not None:
        seg = compile_static_segment(
            _as_matrix(idle_h), [c for c, _ in walker.collapse], model.duration, 16
        )
        walker.evolve(seg, 0.0)
    return reported, StateVector(state.space, walker.state()), true_label


def measure_branches(rho: DensityMatrix, model: MeasurementModel, space: SpaceDescriptor):
    """Density-matrix analogue of ``measure_ancilla``: both reported branches.

    Returns [(p_report_g, rho_g), (p_report_e, rho_e)] with assignment errors
    mixing the true-outcome branches and QND flips applied as channels. No
    idle evolution. Branches with probability 0 carry a zero matrix.
    """
    d_c = space.factors[1]
    m = rho.matrix.reshape(2, d_c, 2, d_c)
    flip = np.array([[0, 1], [1, 0]], dtype=complex)

    branches = {}
    for true_g, (q, qnd, a_err) in {
        True: (0, model.qnd_flip_g, model.assign_err_g),
        False: (1, model.qnd_flip_e, model.assign_err_e),
    }.items():
        blk = np.zeros_like(rho.matrix).reshape(2, d_c, 2, d_c)
        blk[q, :, q, :] = m[q, :, q, :]
        blk = blk.reshape(rho.matrix.shape)
        p_true = float(np.real(np.trace(blk)))
        fl = np.kron(flip, np.eye(d_c))
        blk = (1 - qnd) * blk + qnd * (fl @ blk @ fl)
        branches[true_g] = (p_true, blk, a_err)

    out = []
    for report_g in (True, False):
        total = np.zeros_like(rho.matrix)
        p_tot = 0.0
        for true_g, (p_true, blk, a_err) in branches.items():
            w = (1 - a_err) if report_g == true_g else a_err
            total = total + w * blk
            p_tot += w * p_true
        rho_branch = total / p_tot if p_tot > 1e-15 else total
        out.append((p_tot, DensityMatrix(space, rho_branch)))
    return out
