"""
Swapping two atoms through a helper
===================================

Three transfers exchange the qubits of atoms A and B: A to the helper, B to A,
then the helper to B. The helper starts and ends in |0>. In a larger network
the other nodes keep their switches off and play no part.
"""

# %%
from zenoqst.hamiltonian import NoiseConfig
from zenoqst.protocol import AtomStateSpec, network_swap_schedule, qss_schedule, run_schedule

qa, qb = (0.6, 0.8), (0.8j, 0.6)
sched = qss_schedule(atom_a=1, atom_b=2, helper=0, omega=0.01)
print(sched.to_text())
for event in sched.switch_events():
    print(event)

# %%
res = run_schedule(sched, AtomStateSpec({1: qa, 2: qb}))
print(f"\natom 1 now holds qb with fidelity {res.atom_fidelity(1, *qb):.5f}")
print(f"atom 2 now holds qa with fidelity {res.atom_fidelity(2, *qa):.5f}")
print(f"helper back in |0> with fidelity {res.atom_fidelity(0, 1, 0):.5f}")
print("per-transfer fidelities:", [round(f, 5) for f in res.segment_fidelities])

# %%
net = run_schedule(network_swap_schedule(3, 4, 0, 5, 0.01), AtomStateSpec({3: qa, 4: qb}))
print(f"\nfive-node network, atoms 3 and 4: {net.atom_fidelity(3, *qb):.5f}, {net.atom_fidelity(4, *qa):.5f}")

# %%
# A small drive keeps the Zeno error low but makes each transfer slow
# (about 385 / g here), so even 1% loss rates add up over three transfers.
noisy = run_schedule(sched, AtomStateSpec({1: qa, 2: qb}), NoiseConfig(0.01, 0.01, 0.01))
print(f"with 1% loss on every channel: overall fidelity {noisy.fidelity:.4f}")
