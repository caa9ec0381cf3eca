"""Zeno subspaces of the strong coupling and the effective weak-drive dynamics.

Two independent routes are provided:

* numeric: :func:`zeno_decompose` clusters the spectrum of any hermitian
  strong Hamiltonian and :func:`effective_hamiltonian` builds
  ``sum_n (K eta_n P_n + P_n H_weak P_n)``;
* closed form for a two-node transfer: the five eigenvalues, the
  fiber-mediated dark state, the three-level effective model and the
  resulting state at any time.

Node convention for the closed forms: ``sender`` starts with the qubit and
``receiver`` starts in ``|0>``. The transfer drive is ``+Omega`` on the
receiver and ``-Omega`` on the sender.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .hamiltonian import qst_chain
from .hilbert import Basis, Operator, StateVector, write_triplets

__all__ = [
    "ZenoDecomposition",
    "ZenoClusterError",
    "zeno_decompose",
    "effective_hamiltonian",
    "zeno_hamiltonian",
    "analytic_eigenvalues",
    "analytic_zeno_states",
    "analytic_dark_state",
    "analytic_effective_hamiltonian",
    "analytic_qst_evolution",
    "effective_coupling",
    "transfer_angle",
    "transfer_time",
    "subspace_angle",
]


class ZenoClusterError(ValueError):
    """Eigenvalue clusters are too close to identify projectors reliably."""


@dataclass(frozen=True)
class ZenoDecomposition:
    """Spectral projectors ``P_n`` and distinct eigenvalues ``eta_n`` (ascending)."""

    basis: Basis
    eigenvalues: np.ndarray
    projectors: tuple[Operator, ...]
    strong: Operator
    coupling_scale: float = 1.0
    degeneracy_tolerance: float = 0.0

    @property
    def ranks(self) -> list[int]:
        return [int(round(np.real(p.matrix.diagonal().sum()))) for p in self.projectors]

    def __len__(self) -> int:
        return len(self.projectors)

    def reconstruct(self) -> Operator:
        """``sum_n eta_n P_n``."""
        out = Operator(self.basis, (self.basis.dim, self.basis.dim))
        for eta, p in zip(self.eigenvalues, self.projectors):
            out = out + float(eta) * p
        return out

    def invariant_errors(self) -> dict[str, float]:
        """Max-entry errors of completeness, orthogonality and reconstruction."""
        dim = self.basis.dim
        total = sum((p.toarray() for p in self.projectors), np.zeros((dim, dim), complex))
        completeness = float(np.max(np.abs(total - np.eye(dim))))
        ortho = 0.0
        for i, p in enumerate(self.projectors):
            pi = p.toarray()
            for j, q in enumerate(self.projectors):
                prod = pi @ q.toarray()
                target = pi if i == j else 0.0
                ortho = max(ortho, float(np.max(np.abs(prod - target))))
        recon = float(np.max(np.abs(self.reconstruct().toarray() - self.strong.toarray())))
        return {"completeness": completeness, "orthogonality": ortho, "reconstruction": recon}

    def check(self, tol: float = 1e-10) -> None:
        errs = self.invariant_errors()
        bad = {k: v for k, v in errs.items() if v > tol}
        if bad:
            raise ZenoClusterError(f"decomposition invariants violated: {bad}")

    def projector_for(self, eta: float, tol: float = 1e-8) -> Operator:
        k = int(np.argmin(np.abs(self.eigenvalues - eta)))
        if abs(self.eigenvalues[k] - eta) > tol:
            raise KeyError(f"no cluster at eigenvalue {eta}")
        return self.projectors[k]

    def export(self, fh: TextIO) -> None:
        """Write every cluster as a header line followed by its projector triplets."""
        for n, (eta, p) in enumerate(zip(self.eigenvalues, self.projectors)):
            fh.write(f"# cluster {n} eta={eta:.17g} rank={self.ranks[n]}\n")
            write_triplets(p, fh)


def zeno_decompose(
    strong: Operator,
    degeneracy_tolerance: float | None = None,
    coupling_scale: float = 1.0,
) -> ZenoDecomposition:
    """Group the spectrum of ``strong`` into clusters and build their projectors.

    A cluster collects consecutive sorted eigenvalues lying within
    ``degeneracy_tolerance`` of its smallest member. Neighbouring clusters
    closer than ten tolerances raise :class:`ZenoClusterError`. The default
    tolerance is ``1e-9 * ||strong||`` (floored at 1e-12).
    """
    if not strong.is_hermitian():
        raise ValueError("strong Hamiltonian must be hermitian")
    h = strong.toarray()
    w, v = la.eigh(h)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if degeneracy_tolerance is None:
        degeneracy_tolerance = max(1e-9 * scale, 1e-12)
    if degeneracy_tolerance <= 0:
        raise ValueError("degeneracy tolerance must be positive")

    groups: list[list[int]] = []
    for i, x in enumerate(w):
        if groups and x - w[groups[-1][0]] <= degeneracy_tolerance:
            groups[-1].append(i)
        else:
            groups.append([i])
    for prev, nxt in zip(groups, groups[1:]):
        gap = w[nxt[0]] - w[prev[-1]]
        if gap < 10 * degeneracy_tolerance:
            raise ZenoClusterError(
                f"eigenvalue clusters at {w[prev[-1]]:.6g} and {w[nxt[0]]:.6g} are separated by "
                f"{gap:.3g} < 10 x tolerance {degeneracy_tolerance:.3g}"
            )

    etas, projs = [], []
    for grp in groups:
        vec = v[:, grp]
        etas.append(float(np.mean(w[grp])))
        projs.append(Operator(strong.basis, sp.csr_matrix(_clean(vec @ vec.conj().T))))
    return ZenoDecomposition(
        strong.basis, np.array(etas), tuple(projs), strong, coupling_scale, degeneracy_tolerance
    )


def _clean(m: np.ndarray, eps: float = 1e-15) -> np.ndarray:
    out = m.copy()
    out.real[np.abs(out.real) < eps] = 0.0
    out.imag[np.abs(out.imag) < eps] = 0.0
    return out


def zeno_hamiltonian(decomp: ZenoDecomposition, weak: Operator) -> Operator:
    """``sum_n P_n H_weak P_n``."""
    if not decomp.basis.compatible(weak.basis):
        raise ValueError("decomposition and weak Hamiltonian live on different bases")
    out = Operator(decomp.basis, (decomp.basis.dim, decomp.basis.dim))
    for p in decomp.projectors:
        out = out + p @ weak @ p
    return out


def effective_hamiltonian(decomp: ZenoDecomposition, weak: Operator) -> Operator:
    """``sum_n (K eta_n P_n + P_n H_weak P_n)``; block diagonal in the clusters."""
    return decomp.coupling_scale * decomp.reconstruct() + zeno_hamiltonian(decomp, weak)


def subspace_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle between the column spans of ``a`` and ``b``."""
    return float(np.max(la.subspace_angles(np.asarray(a), np.asarray(b))))


# --- closed forms for a two-node transfer ---------------------------------------


def _bright_norm(g: float, lam: float) -> float:
    return math.sqrt(2 * lam * lam + g * g)


def analytic_eigenvalues(g: float, lam: float) -> np.ndarray:
    """Spectrum of ``H_c + H_cf`` on the single-excitation chain, ascending."""
    n = _bright_norm(g, lam)
    return np.array(sorted([-n, -g, 0.0, g, n]))


def _chain_vector(basis: Basis, coeffs: dict[int, float], sender: int, receiver: int) -> StateVector:
    chain = qst_chain(basis, sender, receiver)
    return StateVector.superposition(basis, ((c, chain[k - 1]) for k, c in coeffs.items()))


def analytic_zeno_states(g: float, lam: float, basis: Basis, sender: int = 1, receiver: int = 0) -> list[tuple[float, StateVector]]:
    """Eigenpairs of the strong coupling on the excited part of the chain.

    Returns ``(eigenvalue, state)`` for the dark state and the four bright
    states, indexed by the chain positions 2..6 (sender excited through
    receiver excited).
    """
    if g <= 0 or lam <= 0:
        raise ValueError("g and lambda must be positive")
    n = _bright_norm(g, lam)
    dark = {2: lam / n, 4: -g / n, 6: lam / n}
    minus_g = {2: -0.5, 3: 0.5, 5: -0.5, 6: 0.5}
    plus_g = {2: -0.5, 3: -0.5, 5: 0.5, 6: 0.5}
    minus_n = {2: g / (2 * n), 3: -0.5, 4: lam / n, 5: -0.5, 6: g / (2 * n)}
    plus_n = {2: g / (2 * n), 3: 0.5, 4: lam / n, 5: 0.5, 6: g / (2 * n)}
    return [
        (0.0, _chain_vector(basis, dark, sender, receiver)),
        (-g, _chain_vector(basis, minus_g, sender, receiver)),
        (g, _chain_vector(basis, plus_g, sender, receiver)),
        (-n, _chain_vector(basis, minus_n, sender, receiver)),
        (n, _chain_vector(basis, plus_n, sender, receiver)),
    ]


def analytic_dark_state(g: float, lam: float, basis: Basis, sender: int = 1, receiver: int = 0) -> StateVector:
    """``(lam |sender e> - g |fiber photon> + lam |receiver e>) / sqrt(2 lam^2 + g^2)``."""
    return analytic_zeno_states(g, lam, basis, sender, receiver)[0][1]


def effective_coupling(omega: float, g: float, lam: float) -> float:
    """Coupling of a ground state to the dark state, ``lam * Omega / sqrt(2 lam^2 + g^2)``."""
    return lam * omega / _bright_norm(g, lam)


def transfer_angle(t: float, omega: float, g: float, lam: float) -> float:
    return math.sqrt(2) * lam * omega * t / _bright_norm(g, lam)


def transfer_time(omega: float, g: float, lam: float) -> float:
    """Time at which the transfer angle reaches pi."""
    if omega <= 0 or lam <= 0:
        raise ValueError("omega and lambda must be positive")
    return _bright_norm(g, lam) * math.pi / (math.sqrt(2) * lam * omega)


def analytic_effective_hamiltonian(
    omega_sender: float,
    omega_receiver: float,
    g: float,
    lam: float,
    basis: Basis,
    sender: int = 1,
    receiver: int = 0,
) -> Operator:
    """Three-level model: both qubit-carrying ground states couple to the dark state.

    ``k_s |sender 1><D| + k_r |receiver 1><D| + h.c.`` with
    ``k = lam * Omega / sqrt(2 lam^2 + g^2)`` for the respective drive.
    """
    chain = qst_chain(basis, sender, receiver)
    dark = analytic_dark_state(g, lam, basis, sender, receiver).amplitudes
    src = np.zeros(basis.dim, complex)
    dst = np.zeros(basis.dim, complex)
    src[basis.index(chain[0])] = 1.0
    dst[basis.index(chain[6])] = 1.0
    h = effective_coupling(omega_sender, g, lam) * np.outer(src, dark.conj())
    h = h + effective_coupling(omega_receiver, g, lam) * np.outer(dst, dark.conj())
    h = h + h.conj().T
    return Operator(basis, sp.csr_matrix(_clean(h)))


def analytic_qst_evolution(
    t: float,
    omega: float,
    g: float,
    lam: float,
    a: complex,
    b: complex,
    basis: Basis,
    sender: int = 1,
    receiver: int = 0,
) -> StateVector:
    """Closed-form state at time ``t`` under the three-level model.

    ``a |ground> + b [ (1 + cos th)/2 |s1> + (1 - cos th)/2 |r1> + i sin(th)/sqrt 2 |D> ]``
    with ``th = sqrt 2 lam Omega t / sqrt(2 lam^2 + g^2)``, receiver driven at
    ``+Omega`` and sender at ``-Omega``.
    """
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-10:
        raise ValueError("qubit amplitudes must satisfy |a|^2 + |b|^2 = 1")
    th = transfer_angle(t, omega, g, lam)
    c, s = math.cos(th), math.sin(th)
    chain = qst_chain(basis, sender, receiver)
    psi = np.zeros(basis.dim, complex)
    psi[basis.index(basis.ground())] += a
    psi[basis.index(chain[0])] += b * 0.5 * (1 + c)
    psi[basis.index(chain[6])] += b * 0.5 * (1 - c)
    psi += b * 1j * (s / math.sqrt(2)) * analytic_dark_state(g, lam, basis, sender, receiver).amplitudes
    return StateVector(basis, psi)

