import numpy as np
import pytest
from math import pi, sqrt

from combqec.code import lowest_order_binomial
from combqec.comb import (
    CombSpec,
    analytic_mu,
    analytic_xi,
    calibrate_scaling,
    comb_envelope,
    constant_comb_angle,
    default_comb_spec,
    fock_block_excitation,
    optimize_pulse_timing,
    ramsey_parity_map,
    simulate_parity_map,
    stark_shift_magnitude,
    timing_objective,
)
from combqec.core import fock_state, state_fidelity
from combqec.system import default_params

TWO_PI = 2 * pi


@pytest.fixture(scope="module")
def params():
    return default_params()


@pytest.fixture(scope="module")
def spec(params):
    return default_comb_spec(params)


def test_comb_spec_validation(params):
    with pytest.raises(ValueError):
        CombSpec(chi=params.chi_qc, m_pairs=0)
    with pytest.raises(ValueError):
        CombSpec(chi=params.chi_qc, duration=8e-9, edge=5e-9)
    with pytest.raises(ValueError):
        CombSpec(chi=params.chi_qc, scalings=np.ones(5))
    assert spec_omega_default(params) == pytest.approx(params.chi_qc / 4)


def spec_omega_default(params):
    return CombSpec(chi=params.chi_qc).omega


def test_envelope_peak_at_delay(params):
    # mid-pulse peak away from the edges: all cosines aligned
    s = CombSpec(chi=params.chi_qc, duration=300e-9, delay=150e-9)
    val = comb_envelope(s, s.delay)
    assert val.imag == pytest.approx(0.0, abs=1e-9)
    assert val.real == pytest.approx(2 * s.m_pairs * s.omega, rel=1e-12)


def test_envelope_suppressed_at_start(params):
    # destructive interference at t=0 for the chosen delay (edges disabled to
    # expose the bare comb)
    s = CombSpec(chi=params.chi_qc, duration=255e-9, delay=47e-9, edge=0.0)
    peak = 2 * s.m_pairs * s.omega
    assert abs(comb_envelope(s, 0.0)) < 0.15 * peak


def test_envelope_real_for_symmetric_scalings(spec):
    ts = np.linspace(0, spec.duration, 40)
    env = comb_envelope(spec, ts)
    assert np.max(np.abs(env.imag)) < 1e-9 * np.max(np.abs(env.real))


def test_envelope_rejects_out_of_range(spec):
    with pytest.raises(ValueError):
        comb_envelope(spec, -1e-9)
    with pytest.raises(ValueError):
        comb_envelope(spec, spec.duration + 1e-9)


def test_envelope_spectrum_at_odd_harmonics(params):
    # tones must sit at +-(2n-1) chi within the FFT grid resolution
    s = CombSpec(chi=params.chi_qc, duration=TWO_PI / params.chi_qc, delay=0.0, edge=0.0)
    n = 4096
    ts = np.arange(n) * (s.duration / n)
    env = comb_envelope(s, ts)
    spec_f = np.fft.fftshift(np.fft.fft(env))
    freqs = np.fft.fftshift(np.fft.fftfreq(n, d=s.duration / n)) * TWO_PI
    power = np.abs(spec_f) ** 2
    strong = freqs[power > 0.01 * power.max()]
    expected = np.array(
        [(2 * k - 1) * params.chi_qc * sgn for k in range(1, s.m_pairs + 1) for sgn in (1, -1)]
    )
    df = freqs[1] - freqs[0]
    assert len(strong) == len(expected)
    for f in strong:
        assert np.min(np.abs(expected - f)) < df


def test_analytic_xi_zeros(spec, params):
    chi = params.chi_qc
    assert analytic_xi(spec, 2 * pi / chi) == pytest.approx(0.0, abs=1e-12)
    for m in range(1, 7):
        assert analytic_xi(spec, m * pi / chi) == pytest.approx(0.0, abs=1e-10)


def test_analytic_xi_single_pair(params):
    chi = params.chi_qc
    s = CombSpec(chi=chi, m_pairs=1, duration=300e-9)
    assert analytic_xi(s, (pi / 2) / chi) == pytest.approx(2 * s.omega / chi, rel=1e-12)


def test_analytic_mu_operating_point(spec, params):
    chi = params.chi_qc
    assert analytic_mu(spec, 2 * pi / chi) == pytest.approx(pi / 2, abs=1e-12)
    # Omega = pi/(2T) with chi T = m pi also gives a full flip
    for m in (2, 4):
        duration = m * pi / chi
        s = CombSpec(chi=chi, omega=pi / (2 * duration), duration=duration, delay=0.0)
        assert analytic_mu(s, duration) == pytest.approx(pi / 2, abs=1e-12)
    assert analytic_mu(spec, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_angles_exact_without_unpaired_tones(spec, params):
    chi = params.chi_qc
    for frac in (0.3, 0.61):
        duration = frac * 2 * pi / chi
        # code space, 2 photons: every tone is paired, closed form is exact
        assert constant_comb_angle(spec, duration, 2) == pytest.approx(
            abs(analytic_xi(spec, duration)), abs=2e-4
        )
        # error space with the unpaired tone removed
        assert constant_comb_angle(spec, duration, 1, keep_unpaired=False) == pytest.approx(
            abs(analytic_mu(spec, duration)), abs=2e-4
        )


def test_angles_within_tolerance_with_unpaired_tones(spec, params):
    # the 2M chi >> Omega approximation: full integration stays within
    # 0.02 rad of the closed forms at Omega = chi/4
    chi = params.chi_qc
    for frac in (0.3, 0.61, 1.0):
        duration = frac * 2 * pi / chi
        assert abs(
            constant_comb_angle(spec, duration, 1) - abs(analytic_mu(spec, duration))
        ) < 0.02
        assert abs(
            constant_comb_angle(spec, duration, 3) - abs(analytic_mu(spec, duration))
        ) < 0.02
        for fock in (0, 4):
            assert abs(
                constant_comb_angle(spec, duration, fock) - abs(analytic_xi(spec, duration))
            ) < 0.02


def test_parity_map_ideal_fock_states(spec, params):
    report = simulate_parity_map(spec=spec, params=params, fock_range=range(6))
    for n in (1, 3):
        assert report.fock_excitation(n) > 0.99
    for n in (0, 2, 4):
        assert report.fock_excitation(n) < 0.01


def test_parity_map_qnd_conditional_states(spec, params):
    # conditioned on the correct outcome the cavity state survives the pulse
    report = simulate_parity_map(spec=spec, params=params, fock_range=range(6))
    for n in range(6):
        rho_g, rho_e = report.post_states[f"fock{n}"]
        cond = rho_e if n % 2 else rho_g
        assert state_fidelity(fock_state(12, n), cond) > 0.99


def test_parity_map_code_space_cardinals_ideal(spec, params):
    code = lowest_order_binomial(12)
    report = simulate_parity_map(spec=spec, params=params, code=code, fock_range=())
    assert report.code_space_error < 0.01
    assert report.error_space_error < 0.01


def test_parity_map_decoherence_increases_error(spec, params):
    code = lowest_order_binomial(12)
    inputs = {"codeX": __import__("combqec.code", fromlist=["cardinal_states"]).cardinal_states(code, "code")["+X"]}
    ideal = simulate_parity_map(inputs=inputs, spec=spec, params=params, fock_range=())
    noisy = simulate_parity_map(
        inputs=inputs, spec=spec, params=params, decoherence=True, fock_range=()
    )
    assert noisy.detection_error["codeX"] > ideal.detection_error["codeX"]
    assert noisy.detection_error["codeX"] < 0.03


def test_parity_outcome_probabilities_sum_to_one(spec, params):
    report = simulate_parity_map(spec=spec, params=params, fock_range=range(4))
    for n in range(4):
        p_e = report.fock_excitation(n)
        assert 0.0 <= p_e <= 1.0
        # posts are normalized conditionals of a norm-preserving evolution
        rho_g, rho_e = report.post_states[f"fock{n}"]
        assert abs(rho_g.trace() - 1) < 1e-9
        assert abs(rho_e.trace() - 1) < 1e-9


def test_calibrate_scaling_inversion():
    assert calibrate_scaling(1e6, 0.0, 2e5) == 0.0
    # lambda*omega0 = detuning gives shift (sqrt(2)-1)|detuning|/2
    delta = TWO_PI * 1.3e6
    shift = stark_shift_magnitude(delta, delta)
    assert shift == pytest.approx((sqrt(2) - 1) * abs(delta) / 2, rel=1e-12)
    lam = calibrate_scaling(delta, shift, delta)
    assert lam == pytest.approx(1.0, abs=1e-10)


def test_calibrate_scaling_roundtrip():
    rng = np.random.default_rng(4)
    for _ in range(20):
        delta = rng.choice([-1, 1]) * TWO_PI * rng.uniform(0.5e6, 8e6)
        omega0 = TWO_PI * rng.uniform(0.05e6, 2e6)
        lam = rng.uniform(0.0, 2.0)
        shift = stark_shift_magnitude(delta, lam * omega0)
        assert calibrate_scaling(delta, shift, omega0) == pytest.approx(lam, abs=1e-10)


def test_calibrate_scaling_invalid_inputs():
    with pytest.raises(ValueError):
        calibrate_scaling(0.0, 1e3, 1e5)
    with pytest.raises(ValueError):
        calibrate_scaling(1e6, -1e3, 1e5)


def test_optimize_timing_degenerate_range(spec):
    res = optimize_pulse_timing(spec, (255e-9, 255e-9), (47e-9, 47e-9), n_grid=1, n_refine=0)
    assert res.duration == pytest.approx(255e-9)
    assert res.delay == pytest.approx(47e-9)


def test_optimize_timing_no_delay_bracket(spec, params):
    # without the delay trick the best duration sits near a full revival
    t0 = 2 * pi / params.chi_qc
    res = optimize_pulse_timing(spec, (0.5 * t0, 1.6 * t0), (0.0, 0.0), n_grid=17, n_refine=1)
    assert 0.8 * t0 <= res.duration <= 1.4 * t0


def test_optimize_timing_local_optimality(spec):
    res = optimize_pulse_timing(spec, (220e-9, 300e-9), (20e-9, 80e-9), n_grid=5, n_refine=1)
    assert res.fidelity >= max(e[2] for e in res.evaluations) - 1e-12
    step = 2e-9
    for dd, dl in ((step, 0), (-step, 0), (0, step), (0, -step)):
        neighbor = timing_objective(spec, res.duration + dd, res.delay + dl)
        assert neighbor <= res.fidelity + 5e-4


def test_optimize_timing_empty_range(spec):
    with pytest.raises(ValueError):
        optimize_pulse_timing(spec, (300e-9, 200e-9), (0.0, 0.0))


def test_ramsey_ideal_pulses(params):
    # textbook mapping up to the residual Kerr phases during the pi/chi wait
    report = ramsey_parity_map(params=params, ideal_pulses=True, fock_range=range(4))
    assert report.fock_excitation(1) == pytest.approx(1.0, abs=1e-4)
    assert report.fock_excitation(0) == pytest.approx(0.0, abs=1e-4)
    assert report.fock_excitation(2) == pytest.approx(0.0, abs=1e-4)
    assert report.fock_excitation(3) == pytest.approx(1.0, abs=1e-3)


def test_comb_beats_ramsey_for_high_fock(spec, params):
    # finite-length unconditional pulses handicap the interferometer at n = 8
    ramsey = ramsey_parity_map(params=params, pulse_duration=20e-9, fock_range=(8,))
    comb = simulate_parity_map(spec=spec, params=params, fock_range=(8,))
    assert comb.detection_error["fock8"] < ramsey.detection_error["fock8"]


def test_fock_block_matches_full_simulation(spec, params):
    report = simulate_parity_map(spec=spec, params=params, fock_range=range(5))
    for n in range(5):
        fast = fock_block_excitation(spec, n, spec.duration, spec.delay, dt=2.5e-10)
        assert fast == pytest.approx(report.fock_excitation(n), abs=2e-3)
