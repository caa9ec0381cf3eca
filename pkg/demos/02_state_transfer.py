"""
Transferring a qubit between two atoms
======================================

Start with the sender in a|0> + b|1>. Drive the receiver at +Omega and the
sender at -Omega for one transfer time, then compare the full simulation
with the three-level Zeno model along the way.
"""

# %%
import sys

import numpy as np

from zenoqst.dynamics import populations, unitary_trajectory, write_timeseries_csv
from zenoqst.hamiltonian import qst_chain, total_hamiltonian
from zenoqst.hilbert import StateVector, SystemSpec, build_basis, filter_excitation
from zenoqst.protocol import PulseSegment, run_qst
from zenoqst.zeno import analytic_qst_evolution, transfer_time

omega = 0.01
a, b = 0.6, 0.8j
basis = filter_excitation(build_basis(SystemSpec(2, 1, 1)), 1)
chain = qst_chain(basis, sender=1, receiver=0)
h = total_hamiltonian(basis, PulseSegment(0, 1, omega).coupling(2))
period = transfer_time(omega, 1.0, 1.0)
print(f"transfer time T = {period:.2f} / g")

# %%
times = np.linspace(0, period, 11)
psi0 = StateVector.superposition(basis, [(a, basis.ground()), (b, chain[0])])
traj = unitary_trajectory(h, psi0, times)
pops = {"phi1": [], "phi7": [], "phi1_model": [], "phi7_model": []}
for t, amps in zip(times, traj):
    full = populations(StateVector(basis, amps), [chain[0], chain[6]])
    model = populations(analytic_qst_evolution(t, omega, 1, 1, a, b, basis), [chain[0], chain[6]])
    pops["phi1"].append(full[0])
    pops["phi7"].append(full[1])
    pops["phi1_model"].append(model[0])
    pops["phi7_model"].append(model[1])
write_timeseries_csv(sys.stdout, times, pops)

# %%
# The |0> component never moves, so the worst case is b = 1.
for q in [(1, 0), (a, b), (0, 1)]:
    print(f"input {q}: fidelity {run_qst(omega, qubit=q).fidelity:.6f}")
