import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

import _oracle as oracle
import zenoqst.dynamics as dyn
from zenoqst.dynamics import (
    IntegratorSettings,
    fidelity,
    lindblad_trajectory,
    populations,
    qubit_fidelity,
    reduced_atom_state,
    trace_distance,
    unitary_trajectory,
    write_timeseries_csv,
)
from zenoqst.hamiltonian import CouplingConfig, NoiseConfig, ZenoRatioWarning, collapse_operators, qst_chain, total_hamiltonian
from zenoqst.hilbert import DensityMatrix, Operator, StateVector, SystemSpec, build_basis, filter_excitation

TIGHT = IntegratorSettings(atol=1e-12, rtol=1e-11)


def setup(omega=0.1, lam=1.0, noise=NoiseConfig(), nodes=2, max_exc=1):
    basis = filter_excitation(build_basis(SystemSpec(nodes, 1, 1)), max_exc)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZenoRatioWarning)
        cfg = CouplingConfig.transfer(nodes, sender=1, receiver=0, omega=omega, fiber_coupling=lam)
    h = total_hamiltonian(basis, cfg)
    return basis, h, collapse_operators(basis, noise)


def start(basis):
    chain = qst_chain(basis, 1, 0)
    psi = StateVector.superposition(basis, [(0.6, basis.ground()), (0.8, chain[0])])
    return psi


def test_lindblad_matches_liouvillian_oracle():
    noise = NoiseConfig(0.1, 0.05, 0.08)
    basis, h, ops = setup(omega=0.3, noise=noise)
    rho0 = start(basis).to_density_matrix()
    times = [0.0, 1.5, 7.0, 20.0]
    res = lindblad_trajectory(h, ops, rho0, times, TIGHT)
    dense_ops = [(r, op.toarray()) for r, op in ops]
    for t, state in zip(times, res.states):
        ref = oracle.lindblad_expm(h.toarray(), dense_ops, rho0.matrix, t)
        np.testing.assert_allclose(state.matrix, ref, atol=1e-9)


def test_oracle_built_independently_of_package_operators():
    # Oracle operators come from explicit Kronecker products; the excitation <= 1
    # sector is closed under H and every jump, so it is cut out by enumeration.
    keep = [i for i, (lv, ph) in enumerate(oracle.enumerate_states(2, 1)) if oracle.excitation(lv, ph) <= 1]
    sub = np.ix_(keep, keep)
    h_ref = oracle.hamiltonian(2, 1, [0.25, -0.25], 1.0, 0.8, {0, 1})[sub]
    ops_ref = [(r, m[sub]) for r, m in oracle.collapse(2, 1, 0.05, 0.02, 0.04)]

    basis, h, ops = setup(omega=0.25, lam=0.8, noise=NoiseConfig(0.05, 0.02, 0.04))
    rho0 = start(basis).to_density_matrix()
    res = lindblad_trajectory(h, ops, rho0, [0, 5.0], TIGHT)
    ref = oracle.lindblad_expm(h_ref, ops_ref, rho0.matrix, 5.0)
    np.testing.assert_allclose(res.final.matrix, ref, atol=1e-9)


def test_sparse_path_matches_dense(monkeypatch):
    basis, h, ops = setup(noise=NoiseConfig(0.05, 0.01, 0.03), nodes=3, max_exc=2)
    rho0 = start(basis).to_density_matrix()
    dense = lindblad_trajectory(h, ops, rho0, [0, 10.0], TIGHT).final.matrix
    monkeypatch.setattr(dyn, "DENSE_BELOW", 0)
    sparse = lindblad_trajectory(h, ops, rho0, [0, 10.0], TIGHT).final.matrix
    np.testing.assert_allclose(sparse, dense, atol=1e-10)


def test_unitary_paths_agree():
    basis, h, _ = setup(omega=0.1)
    psi0 = start(basis)
    times = np.linspace(0, 60, 7)
    eig = unitary_trajectory(h, psi0, times)
    ode = unitary_trajectory(h, psi0, times, IntegratorSettings(atol=1e-13, rtol=1e-12, unitary="ode"))
    assert np.max(np.abs(eig - ode)) <= 1e-8
    ref = np.array([expm(-1j * t * h.toarray()) @ psi0.amplitudes for t in times])
    assert np.max(np.abs(eig - ref)) <= 1e-10


def test_rk4_agrees_with_adaptive():
    basis, h, ops = setup(noise=NoiseConfig(0.1, 0.0, 0.0))
    rho0 = start(basis).to_density_matrix()
    a = lindblad_trajectory(h, ops, rho0, [0, 10.0], TIGHT).final.matrix
    b = lindblad_trajectory(h, ops, rho0, [0, 10.0], IntegratorSettings(method="rk4", rk4_step=0.01)).final.matrix
    assert np.max(np.abs(a - b)) < 1e-8


def test_step_halving_stability():
    basis, h, ops = setup(noise=NoiseConfig(0.1, 0.0, 0.0))
    rho0 = start(basis).to_density_matrix()
    t = 30.0
    s = IntegratorSettings()
    a = lindblad_trajectory(h, ops, rho0, [0, t], s).final
    b = lindblad_trajectory(h, ops, rho0, [0, t], s.halved()).final
    assert np.max(np.abs(a.matrix - b.matrix)) <= 1e-6
    r4 = IntegratorSettings(method="rk4", rk4_step=0.05)
    c = lindblad_trajectory(h, ops, rho0, [0, t], r4).final
    d = lindblad_trajectory(h, ops, rho0, [0, t], r4.halved()).final
    assert np.max(np.abs(c.matrix - d.matrix)) <= 1e-6


def test_noiseless_lindblad_is_unitary():
    basis, h, ops = setup()
    psi0 = start(basis)
    times = [0, 5, 25]
    res = lindblad_trajectory(h, ops, psi0.to_density_matrix(), times, TIGHT)
    traj = unitary_trajectory(h, psi0, times)
    for rho, amps in zip(res.states, traj):
        np.testing.assert_allclose(rho.matrix, np.outer(amps, amps.conj()), atol=1e-9)
        assert rho.purity() == pytest.approx(1, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(
    kappa=st.floats(0, 0.5),
    kappa_f=st.floats(0, 0.5),
    gamma=st.floats(0, 0.5),
    t=st.floats(0.1, 40),
)
def test_physicality_property(kappa, kappa_f, gamma, t):
    basis, h, ops = setup(noise=NoiseConfig(kappa, kappa_f, gamma))
    res = lindblad_trajectory(h, ops, start(basis).to_density_matrix(), np.linspace(0, t, 5))
    assert res.physical(trace_tol=1e-8, herm_tol=1e-10, pos_tol=1e-8)
    assert res.evaluations > 0


def test_decay_lowers_excited_population():
    basis, h, ops = setup(noise=NoiseConfig(0.0, 0.0, 0.5))
    rho0 = StateVector.basis_state(basis, qst_chain(basis, 1, 0)[1]).to_density_matrix()
    res = lindblad_trajectory(h, ops, rho0, [0, 20.0])
    assert populations(res.final, [basis.ground()])[0] > 0.4


def test_input_validation(two_node_sector):
    _, h, ops = setup()
    other = filter_excitation(build_basis(SystemSpec(3, 1, 1)), 1)
    with pytest.raises(ValueError):
        unitary_trajectory(h, StateVector.basis_state(other, other.ground()), [0, 1])
    bad = Operator(two_node_sector, np.triu(np.ones((8, 8))))
    with pytest.raises(ValueError):
        unitary_trajectory(bad, StateVector.basis_state(two_node_sector, two_node_sector.ground()), [0, 1])
    with pytest.raises(ValueError):
        lindblad_trajectory(h, [(-1.0, ops[0][1])], StateVector.basis_state(two_node_sector, two_node_sector.ground()).to_density_matrix(), [0, 1])
    with pytest.raises(ValueError):
        unitary_trajectory(h, StateVector.basis_state(two_node_sector, two_node_sector.ground()), [1, 0])
    with pytest.raises(ValueError):
        IntegratorSettings(method="euler")
    with pytest.raises(ValueError):
        IntegratorSettings(trace_policy="ignore")


def test_observables(two_node_sector):
    chain = qst_chain(two_node_sector, 1, 0)
    psi = StateVector.superposition(two_node_sector, [(0.6, two_node_sector.ground()), (0.8j, chain[0])])
    red = reduced_atom_state(psi, 1)
    np.testing.assert_allclose(red[:2, :2], np.outer([0.6, 0.8j], np.conj([0.6, 0.8j])))
    assert qubit_fidelity(red, 0.6, 0.8j) == pytest.approx(1)
    assert qubit_fidelity(reduced_atom_state(psi, 0), 1, 0) == pytest.approx(1)
    assert fidelity(psi, psi) == pytest.approx(1)
    assert fidelity(psi.to_density_matrix(), psi) == pytest.approx(1)
    rho = psi.to_density_matrix().matrix
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
    np.testing.assert_allclose(populations(psi, [two_node_sector.ground(), chain[0]]), [0.36, 0.64])
    with pytest.raises(IndexError):
        reduced_atom_state(psi, 2)
    mixed = DensityMatrix(two_node_sector, np.eye(8) / 8)
    assert mixed.purity() == pytest.approx(1 / 8)


def test_timeseries_csv():
    buf = io.StringIO()
    write_timeseries_csv(buf, [0.0, 0.5], {"phi1": [1.0, 0.5], "phi7": [0.0, 0.25]}, [1.0, 0.9])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,phi1,phi7,fidelity"
    assert lines[2] == "0.5,0.5,0.25,0.9"
