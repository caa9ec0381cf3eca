"""
Zeno subspaces of two fiber-coupled cavities
============================================

The cavity and fiber couplings are strong compared with the drive. Their
spectrum on the single-excitation chain splits into five invariant
subspaces, and only the zero-energy one links the two qubit states.
"""

# %%
import warnings

import numpy as np

from zenoqst.hamiltonian import CouplingConfig, ZenoRatioWarning, laser_hamiltonian, qst_chain, strong_hamiltonian
from zenoqst.hilbert import SystemSpec, build_basis, filter_excitation
from zenoqst.zeno import analytic_dark_state, analytic_eigenvalues, effective_coupling, effective_hamiltonian, zeno_decompose

g, lam, omega = 1.0, 1.0, 0.1
basis = filter_excitation(build_basis(SystemSpec(2, 1, 1)), 1, 1)
print(f"{basis.dim} states with exactly one excitation:")
for s in basis:
    print("  ", s.label)

# %%
# Node 1 sends, node 0 receives. Both switches are on.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", ZenoRatioWarning)
    cfg = CouplingConfig.transfer(2, sender=1, receiver=0, omega=omega, fiber_coupling=lam, g=g)
decomp = zeno_decompose(strong_hamiltonian(basis, cfg))
decomp.check()
for eta, rank in zip(decomp.eigenvalues, decomp.ranks):
    print(f"eta = {eta:+.6f}  rank {rank}")
print("closed form:", np.round(analytic_eigenvalues(g, lam), 6))

# %%
# Projected onto the clusters, the drive couples each qubit state to the
# dark state with strength lam * Omega / sqrt(2 lam^2 + g^2).
heff = effective_hamiltonian(decomp, laser_hamiltonian(basis, cfg)).toarray()
dark = analytic_dark_state(g, lam, basis).amplitudes
receiver_1 = np.eye(basis.dim)[basis.index(qst_chain(basis, 1, 0)[6])]
print("<receiver 1|H_eff|dark> =", round(float(np.real(receiver_1 @ heff @ dark)), 6))
print("closed form:             ", round(effective_coupling(omega, g, lam), 6))
