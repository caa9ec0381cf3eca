import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracle as oracle
from zenoqst.dynamics import unitary_trajectory
from zenoqst.hamiltonian import (
    CouplingConfig,
    NoiseConfig,
    ZenoRatioWarning,
    cavity_hamiltonian,
    collapse_labels,
    collapse_operators,
    fiber_hamiltonian,
    laser_hamiltonian,
    qst_chain,
    strong_hamiltonian,
    total_hamiltonian,
)
from zenoqst.hilbert import Level, StateVector, SystemSpec, build_basis, excitation_operator, filter_excitation


def quiet_transfer(n, sender, receiver, omega, lam=1.0, g=1.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZenoRatioWarning)
        return CouplingConfig.transfer(n, sender=sender, receiver=receiver, omega=omega, fiber_coupling=lam, g=g)


@settings(max_examples=25, deadline=None)
@given(
    omega=st.floats(0.01, 0.5),
    lam=st.floats(0.05, 3.0),
    g=st.floats(0.2, 3.0),
)
def test_total_hamiltonian_matches_kron_oracle(omega, lam, g):
    basis = build_basis(SystemSpec(2, 1, 1))
    cfg = quiet_transfer(2, 1, 0, omega, lam, g)
    ref = oracle.hamiltonian(2, 1, [omega, -omega], g, lam, {0, 1})
    np.testing.assert_allclose(total_hamiltonian(basis, cfg).toarray(), ref, atol=1e-14)


def test_three_node_oracle_with_idle_node():
    basis = build_basis(SystemSpec(3, 1, 1))
    cfg = quiet_transfer(3, 2, 0, 0.1, 0.7, 1.0)
    ref = oracle.hamiltonian(3, 1, [0.1, 0.0, -0.1], 1.0, 0.7, {0, 2})
    np.testing.assert_allclose(total_hamiltonian(basis, cfg).toarray(), ref, atol=1e-14)


def test_cutoff_two_oracle():
    basis = build_basis(SystemSpec(2, 1, 2))
    cfg = quiet_transfer(2, 0, 1, 0.05, 1.3)
    ref = oracle.hamiltonian(2, 2, [-0.05, 0.05], 1.0, 1.3, {0, 1})
    np.testing.assert_allclose(total_hamiltonian(basis, cfg).toarray(), ref, atol=1e-14)


def test_parts_sum_and_strong_part(two_node_full):
    cfg = quiet_transfer(2, 1, 0, 0.1)
    parts = laser_hamiltonian(two_node_full, cfg) + cavity_hamiltonian(two_node_full, cfg) + fiber_hamiltonian(two_node_full, cfg)
    np.testing.assert_allclose(parts.toarray(), total_hamiltonian(two_node_full, cfg).toarray())
    np.testing.assert_allclose(
        strong_hamiltonian(two_node_full, cfg).toarray(),
        (cavity_hamiltonian(two_node_full, cfg) + fiber_hamiltonian(two_node_full, cfg)).toarray(),
    )


def test_hermitian_and_excitation_conserving():
    basis = build_basis(SystemSpec(3, 1, 2))
    h = total_hamiltonian(basis, quiet_transfer(3, 0, 2, 0.3, 0.4)).toarray()
    n = excitation_operator(basis).toarray()
    assert np.abs(h - h.conj().T).max() == 0
    assert np.abs(h @ n - n @ h).max() < 1e-13


def test_sector_restriction_is_exact(two_node_full, two_node_sector):
    cfg = quiet_transfer(2, 1, 0, 0.1)
    full = total_hamiltonian(two_node_full, cfg)
    np.testing.assert_allclose(full.restrict(two_node_sector).toarray(), total_hamiltonian(two_node_sector, cfg).toarray())


def test_switch_rules():
    with pytest.raises(ValueError):
        CouplingConfig((0.1, 0.1, 0.1), 1.0, frozenset({0}))
    with pytest.raises(ValueError):
        CouplingConfig((0.1, 0.1, 0.1), 1.0, frozenset({0, 1, 2}))
    with pytest.raises(ValueError):
        CouplingConfig.transfer(2, sender=0, receiver=0, omega=0.1)
    idle = CouplingConfig.idle(3)
    assert idle.active_nodes == frozenset()


def test_idle_network_has_only_cavity_terms(two_node_full):
    h = total_hamiltonian(two_node_full, CouplingConfig.idle(2))
    np.testing.assert_allclose(h.toarray(), cavity_hamiltonian(two_node_full, CouplingConfig.idle(2)).toarray())


def test_drive_only_on_active_nodes():
    basis = build_basis(SystemSpec(3, 1, 1))
    cfg = CouplingConfig((0.1, 0.1, 0.1), 1.0, frozenset({0, 2}))
    h = laser_hamiltonian(basis, cfg)
    s1 = basis.state(["0", "1", "0"], [0, 0, 0, 0])
    assert np.abs(h.toarray()[:, basis.index(s1)]).max() == 0


def test_rabi_sign_convention():
    cfg = quiet_transfer(2, 1, 0, 0.1)
    assert cfg.rabi == (0.1, -0.1)


def test_zeno_ratio_warning():
    with pytest.warns(ZenoRatioWarning):
        CouplingConfig.transfer(2, sender=1, receiver=0, omega=0.3)
    with pytest.warns(ZenoRatioWarning):
        CouplingConfig.transfer(2, sender=1, receiver=0, omega=0.05, fiber_coupling=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cfg = CouplingConfig.transfer(2, sender=1, receiver=0, omega=0.1)
    assert cfg.zeno_ratio == pytest.approx(0.1)


def test_collapse_operators_match_oracle(two_node_full):
    noise = NoiseConfig(0.1, 0.02, 0.06)
    ops = collapse_operators(two_node_full, noise)
    ref = oracle.collapse(2, 1, 0.1, 0.02, 0.06)
    assert len(ops) == len(ref) == 7
    for (rate, op), (rref, mref) in zip(ops, ref):
        assert rate == pytest.approx(rref)
        np.testing.assert_allclose(op.toarray(), mref)
    assert len(collapse_labels(two_node_full)) == 7


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseConfig(-0.1)
    assert NoiseConfig().is_noiseless
    assert not NoiseConfig(spontaneous_emission=0.1).is_noiseless


def test_qst_chain_links(two_node_sector):
    g, lam = 0.8, 1.3
    cfg = quiet_transfer(2, 1, 0, 0.1, lam, g)
    h = strong_hamiltonian(two_node_sector, cfg)
    chain = qst_chain(two_node_sector, 1, 0)
    assert len(set(chain)) == 7
    assert all(s.excitation == 1 for s in chain)
    assert chain[0].atom_levels == (Level.G0, Level.G1)
    assert chain[6].atom_levels == (Level.G1, Level.G0)
    expected = [g, lam, lam, g]
    for k, val in enumerate(expected, start=1):
        assert h.element(chain[k + 1], chain[k]) == pytest.approx(val)
    drive = laser_hamiltonian(two_node_sector, cfg)
    assert drive.element(chain[1], chain[0]) == pytest.approx(-0.1)
    assert drive.element(chain[5], chain[6]) == pytest.approx(0.1)


def test_two_photon_cutoff_leakage():
    """From the single-excitation chain nothing reaches a doubly occupied mode."""
    basis = build_basis(SystemSpec(2, 1, 2))
    cfg = quiet_transfer(2, 1, 0, 0.1)
    h = total_hamiltonian(basis, cfg)
    chain = qst_chain(basis, 1, 0)
    psi0 = StateVector.basis_state(basis, chain[0])
    traj = unitary_trajectory(h, psi0, np.linspace(0, 60, 13))
    doubly = [i for i, s in enumerate(basis) if max(s.photon_numbers) >= 2]
    leak = float(np.max(np.sum(np.abs(traj[:, doubly]) ** 2, axis=1)))
    assert leak <= 1e-10

    small = filter_excitation(build_basis(SystemSpec(2, 1, 1)), 1)
    traj1 = unitary_trajectory(total_hamiltonian(small, cfg), StateVector.basis_state(small, chain[0]), np.linspace(0, 60, 13))
    idx = [basis.index(s) for s in small]
    np.testing.assert_allclose(traj[:, idx], traj1, atol=1e-9)
