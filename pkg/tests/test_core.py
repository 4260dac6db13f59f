import numpy as np
import pytest
import warnings
from math import pi

from combqec.core import (
    DensityMatrix,
    LinearOperator,
    SpaceDescriptor,
    StateVector,
    TruncationWarning,
    annihilation,
    basis_state,
    check_truncation_tail,
    coherent_state,
    creation,
    displacement,
    fock_state,
    identity,
    matrix_exponential,
    number_op,
    partial_trace,
    qubit_cavity_space,
    sigma_x,
    sigma_z,
    state_fidelity,
    tensor,
    tensor_state,
    wigner,
)


def test_space_descriptor_validation():
    s = SpaceDescriptor((2, 12))
    assert s.total_dim == 24
    with pytest.raises(ValueError):
        SpaceDescriptor((0, 3))


def test_annihilation_on_fock_states():
    a = annihilation(5)
    psi2 = fock_state(5, 2)
    out = a @ psi2
    expected = np.sqrt(2) * fock_state(5, 1).amplitudes
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-14)

    vac = a @ fock_state(5, 0)
    assert np.allclose(vac.amplitudes, 0)

    n = creation(5) @ a
    out3 = n @ fock_state(5, 3)
    np.testing.assert_allclose(out3.amplitudes, 3 * fock_state(5, 3).amplitudes, atol=1e-14)


def test_annihilation_rejects_small_dim():
    with pytest.raises(ValueError):
        annihilation(1)


def test_tensor_identities_and_eigenvalue():
    i6 = tensor(identity(2), identity(3))
    np.testing.assert_allclose(i6.matrix, np.eye(6), atol=1e-15)

    op = tensor(sigma_z(), number_op(5))
    state = tensor_state(basis_state(SpaceDescriptor((2,)), 1), fock_state(5, 2))
    out = op @ state
    # sz|e> = -|e> so the eigenvalue is (-1)*2
    np.testing.assert_allclose(out.amplitudes, -2 * state.amplitudes, atol=1e-14)

    a = LinearOperator(SpaceDescriptor((2,)), np.eye(2))
    b = LinearOperator(SpaceDescriptor((4,)), np.eye(4))
    assert tensor(a, b).matrix.shape == (8, 8)


def test_commutator_truncation_invariant():
    for dim in (2, 5, 12):
        a = annihilation(dim).matrix
        comm = a @ a.conj().T - a.conj().T @ a
        expected = np.eye(dim)
        expected[-1, -1] = -(dim - 1)  # truncation corner
        np.testing.assert_allclose(comm, expected, atol=1e-12)


def test_matrix_exponential_basics():
    h = LinearOperator(SpaceDescriptor((3,)), np.zeros((3, 3)))
    np.testing.assert_allclose(matrix_exponential(h).matrix, np.eye(3), atol=1e-15)

    u = matrix_exponential(sigma_x(), -1j * pi / 2)
    np.testing.assert_allclose(u.matrix, -1j * sigma_x().matrix, atol=1e-12)


def test_matrix_exponential_diagonal_oracle():
    # elementwise analytic phases for a diagonal generator
    chi = 2 * pi * 2.59e6
    t = 123e-9
    h = LinearOperator(SpaceDescriptor((2,)), np.diag([0.0, chi]))
    u = matrix_exponential(h, -1j * t).matrix
    expected = np.diag(np.exp(-1j * np.array([0.0, chi]) * t))
    np.testing.assert_allclose(u, expected, rtol=1e-12, atol=1e-15)


def test_matrix_exponential_inverse_invariant():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = LinearOperator(SpaceDescriptor((6,)), m + m.conj().T)
    t = 0.37
    u = matrix_exponential(h, -1j * t)
    v = matrix_exponential(h, 1j * t)
    np.testing.assert_allclose((u @ v).matrix, np.eye(6), atol=1e-9)


def test_matrix_exponential_rejects_nonfinite():
    m = np.zeros((2, 2))
    m[0, 0] = np.inf
    with pytest.raises(ValueError):
        matrix_exponential(LinearOperator(SpaceDescriptor((2,)), m))


def test_partial_trace_product_state():
    rho_q = np.array([[0.75, 0.1], [0.1, 0.25]], dtype=complex)
    rho_c = np.diag([0.5, 0.3, 0.2]).astype(complex)
    rho = DensityMatrix(SpaceDescriptor((2, 3)), np.kron(rho_q, rho_c))
    np.testing.assert_allclose(partial_trace(rho, 1).matrix, rho_c, atol=1e-14)
    np.testing.assert_allclose(partial_trace(rho, 0).matrix, rho_q, atol=1e-14)


def test_partial_trace_bell_like():
    space = qubit_cavity_space(3)
    amp = np.zeros(6, dtype=complex)
    amp[0] = 1 / np.sqrt(2)  # |g,0>
    amp[4] = 1 / np.sqrt(2)  # |e,1>
    rho = StateVector(space, amp).to_density()
    reduced = partial_trace(rho, 0)
    np.testing.assert_allclose(reduced.matrix, np.eye(2) / 2, atol=1e-14)


def test_partial_trace_preserves_trace_and_validates_index():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    dm = DensityMatrix(SpaceDescriptor((2, 3)), rho)
    for keep in (0, 1):
        assert abs(partial_trace(dm, keep).trace() - 1) < 1e-12
    with pytest.raises(ValueError):
        partial_trace(dm, 2)


def test_state_fidelity_cases():
    psi = fock_state(4, 1)
    assert state_fidelity(psi, psi) == pytest.approx(1.0, abs=1e-14)
    assert state_fidelity(psi, fock_state(4, 2)) == pytest.approx(0.0, abs=1e-14)

    rho_pure = fock_state(2, 0).to_density()
    rho_mixed = DensityMatrix(SpaceDescriptor((2,)), np.eye(2) / 2)
    assert state_fidelity(rho_pure, rho_mixed) == pytest.approx(0.5, abs=1e-12)
    assert state_fidelity(fock_state(2, 0), rho_mixed) == pytest.approx(0.5, abs=1e-12)


def test_state_fidelity_rejects_mismatched_spaces():
    with pytest.raises(ValueError):
        state_fidelity(fock_state(3, 0), fock_state(4, 0))


def test_wigner_center_values():
    vac = fock_state(12, 0).to_density()
    assert wigner(vac, [0j])[0] == pytest.approx(2 / pi, abs=1e-12)
    one = fock_state(12, 1).to_density()
    assert wigner(one, [0j])[0] == pytest.approx(-2 / pi, abs=1e-12)


def test_wigner_quadrature_oracle():
    # midpoint quadrature of W over a radius-5 disk must integrate to Tr(rho)=1
    dim = 60
    vac = fock_state(dim, 0).to_density()
    step = 0.25
    xs = np.arange(-5, 5 + step / 2, step)
    re, im = np.meshgrid(xs, xs)
    alphas = re + 1j * im
    mask = np.abs(alphas) <= 5.0
    vals = wigner(vac, alphas[mask])
    integral = vals.sum() * step**2
    assert integral == pytest.approx(1.0, abs=1e-3)


def test_wigner_real_and_bounded_invariant():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    dm = DensityMatrix(SpaceDescriptor((12,)), np.pad(rho, (0, 4)))
    pts = rng.normal(size=10) + 1j * rng.normal(size=10)
    vals = wigner(dm, pts)
    assert vals.dtype.kind == "f"
    assert np.all(np.abs(vals) <= 2 / pi + 1e-9)


def test_wigner_warns_on_truncation_tail():
    top = fock_state(6, 5).to_density()
    with pytest.warns(TruncationWarning):
        wigner(top, [0j])


def test_check_truncation_tail_quiet_for_low_states():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        tail = check_truncation_tail(fock_state(12, 2))
    assert tail == 0.0


def test_tensor_partial_trace_roundtrip():
    rng = np.random.default_rng(5)
    q = rng.normal(size=2) + 1j * rng.normal(size=2)
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    q /= np.linalg.norm(q)
    c /= np.linalg.norm(c)
    sq = StateVector(SpaceDescriptor((2,)), q)
    sc = StateVector(SpaceDescriptor((4,)), c)
    joint = tensor_state(sq, sc).to_density()
    np.testing.assert_allclose(partial_trace(joint, 0).matrix, np.outer(q, q.conj()), atol=1e-12)
    np.testing.assert_allclose(partial_trace(joint, 1).matrix, np.outer(c, c.conj()), atol=1e-12)


def test_displacement_moves_vacuum_to_coherent():
    dim = 30
    alpha = 0.7 - 0.2j
    d = displacement(dim, alpha)
    moved = d @ fock_state(dim, 0)
    target = coherent_state(dim, alpha)
    assert abs(np.vdot(moved.amplitudes, target.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_density_matrix_validate():
    good = DensityMatrix(SpaceDescriptor((2,)), np.diag([0.4, 0.6]).astype(complex))
    good.validate()
    bad = DensityMatrix(SpaceDescriptor((2,)), np.array([[0.9, 0.5], [0.1, 0.1]]))
    with pytest.raises(ValueError):
        bad.validate()


def test_operators_are_immutable():
    a = annihilation(4)
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 9.0
