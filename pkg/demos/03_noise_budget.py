"""
How each loss channel costs fidelity
====================================

Scan one decay rate at a time with the others off, then look at a
cesium-like parameter set and its sensitivity to the unknown drive strength.
"""

# %%
import numpy as np

from zenoqst.config import load_preset
from zenoqst.hamiltonian import NoiseConfig
from zenoqst.protocol import run_qst

omega = 0.1
rates = np.linspace(0, 0.1, 5)
print("rate    kappa    Gamma    kappa_f")
for r in rates:
    row = [run_qst(omega, noise=n).fidelity for n in (NoiseConfig(r, 0, 0), NoiseConfig(0, 0, r), NoiseConfig(0, r, 0))]
    print(f"{r:.3f}  " + "  ".join(f"{f:.4f}" for f in row))

# %%
# Atomic decay hurts most: at lam = g the dark state is two thirds atomic excitation.
# Cavity decay hurts least: the dark state has no cavity photon.

# %%
cs = load_preset("cesium")
print(f"\ncesium-like rates: kappa {cs.kappa:.2e}, Gamma {cs.gamma:.2e}, kappa_f {cs.kappa_f:.2e} (units of g)")
for om in (0.02, 0.05, 0.1, 0.15, 0.2):
    print(f"  Omega = {om:.2f} g -> F = {run_qst(om, cs.lam, cs.noise).fidelity:.4f}")
