"""Interaction-picture Hamiltonian and decay channels of the switched network.

All couplings and rates are in units of the atom-cavity coupling ``g``;
time is in units of ``1/g``.

    H_tot = H_l + H_c + H_cf
    H_l   = sum_k Omega_k (|e><1|_k + |1><e|_k)            (switched-on nodes)
    H_c   = sum_k g_k (a_k |e><0|_k + a_k^+ |0><e|_k)      (every node)
    H_cf  = lambda * b * sum_{k on} a_k^+ + h.c.          (exactly two nodes on)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .hilbert import (
    AtomFactor,
    Basis,
    BasisState,
    Level,
    ModeFactor,
    Operator,
    atomic_transition_operator,
    mode_annihilation_operator,
    product_operator,
)

__all__ = [
    "CouplingConfig",
    "NoiseConfig",
    "ZenoRatioWarning",
    "laser_hamiltonian",
    "cavity_hamiltonian",
    "fiber_hamiltonian",
    "total_hamiltonian",
    "strong_hamiltonian",
    "collapse_operators",
    "collapse_labels",
    "qst_chain",
]

DEFAULT_ZENO_WARN_RATIO = 0.2


class ZenoRatioWarning(UserWarning):
    """Drive is not weak compared with the strong couplings."""


@dataclass(frozen=True)
class CouplingConfig:
    """Drive amplitudes, couplings and switch state for one protocol segment.

    Parameters
    ----------
    rabi : sequence of float
        Rabi frequency ``Omega_k`` per node. Only nodes whose switch is on
        are driven.
    fiber_coupling : float
        Cavity-fiber coupling ``lambda``.
    active_nodes : iterable of int
        Nodes whose optical switch is on; must hold 0 or 2 nodes.
    cavity_coupling : sequence of float, optional
        Atom-cavity coupling per node, default 1 (the unit of energy).
    zeno_warn_ratio : float
        A :class:`ZenoRatioWarning` is emitted when
        ``max|Omega| / min(g, lambda)`` exceeds this value.
    """

    rabi: tuple[float, ...]
    fiber_coupling: float = 1.0
    active_nodes: frozenset[int] = frozenset()
    cavity_coupling: tuple[float, ...] | None = None
    zeno_warn_ratio: float = DEFAULT_ZENO_WARN_RATIO

    def __post_init__(self):
        object.__setattr__(self, "rabi", tuple(float(x) for x in self.rabi))
        object.__setattr__(self, "active_nodes", frozenset(int(k) for k in self.active_nodes))
        if self.cavity_coupling is None:
            object.__setattr__(self, "cavity_coupling", (1.0,) * len(self.rabi))
        else:
            object.__setattr__(self, "cavity_coupling", tuple(float(x) for x in self.cavity_coupling))
        if len(self.cavity_coupling) != len(self.rabi):
            raise ValueError("rabi and cavity_coupling must have one entry per node")
        if len(self.active_nodes) not in (0, 2):
            raise ValueError(f"exactly 0 or 2 switches may be on, got {sorted(self.active_nodes)}")
        if any(not 0 <= k < self.node_count for k in self.active_nodes):
            raise ValueError("active node index out of range")
        if self.fiber_coupling < 0:
            raise ValueError("fiber coupling must be nonnegative")
        ratio = self.zeno_ratio
        if ratio > self.zeno_warn_ratio:
            warnings.warn(
                f"Zeno ratio max|Omega|/min(g, lambda) = {ratio:.3g} exceeds {self.zeno_warn_ratio}",
                ZenoRatioWarning,
                stacklevel=3,
            )

    @property
    def node_count(self) -> int:
        return len(self.rabi)

    @property
    def zeno_ratio(self) -> float:
        drive = max((abs(self.rabi[k]) for k in self.active_nodes), default=0.0)
        if drive == 0.0:
            return 0.0
        strong = min(min(abs(x) for x in self.cavity_coupling), abs(self.fiber_coupling))
        return math.inf if strong == 0 else drive / strong

    @classmethod
    def transfer(
        cls,
        node_count: int,
        sender: int,
        receiver: int,
        omega: float,
        fiber_coupling: float = 1.0,
        g: float = 1.0,
        **kwargs,
    ) -> "CouplingConfig":
        """Switches on ``{sender, receiver}`` with receiver +omega, sender -omega."""
        if sender == receiver:
            raise ValueError("sender and receiver must differ")
        rabi = [0.0] * node_count
        rabi[receiver] = omega
        rabi[sender] = -omega
        return cls(
            tuple(rabi),
            fiber_coupling,
            frozenset({sender, receiver}),
            (g,) * node_count,
            **kwargs,
        )

    @classmethod
    def idle(cls, node_count: int, fiber_coupling: float = 1.0, g: float = 1.0) -> "CouplingConfig":
        """All switches off, no drive."""
        return cls((0.0,) * node_count, fiber_coupling, frozenset(), (g,) * node_count)


@dataclass(frozen=True)
class NoiseConfig:
    """Decay rates in units of g.

    ``spontaneous_emission`` is the total atomic rate Gamma, split equally
    between the two channels ``e -> 0`` and ``e -> 1``.
    """

    cavity_decay: float = 0.0
    fiber_decay: float = 0.0
    spontaneous_emission: float = 0.0

    def __post_init__(self):
        for name in ("cavity_decay", "fiber_decay", "spontaneous_emission"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def is_noiseless(self) -> bool:
        return self.cavity_decay == 0 and self.fiber_decay == 0 and self.spontaneous_emission == 0


def _check_nodes(basis: Basis, config: CouplingConfig) -> None:
    if config.node_count != basis.spec.atom_count:
        raise ValueError(f"config has {config.node_count} nodes, basis has {basis.spec.atom_count} atoms")


def laser_hamiltonian(basis: Basis, config: CouplingConfig) -> Operator:
    _check_nodes(basis, config)
    h = Operator(basis, (basis.dim, basis.dim))
    for k in sorted(config.active_nodes):
        omega = config.rabi[k]
        if omega == 0:
            continue
        up = atomic_transition_operator(basis, k, Level.G1, Level.E)
        h = h + omega * (up + up.dag())
    return h


def cavity_hamiltonian(basis: Basis, config: CouplingConfig) -> Operator:
    _check_nodes(basis, config)
    cutoff = basis.spec.photon_cutoff
    h = Operator(basis, (basis.dim, basis.dim))
    for k, gk in enumerate(config.cavity_coupling):
        if gk == 0:
            continue
        # a_k |e><0|_k : photon absorbed, atom excited
        absorb = product_operator(basis, [ModeFactor(k, False, cutoff), AtomFactor(k, Level.E, Level.G0)], gk)
        h = h + absorb + absorb.dag()
    return h


def fiber_hamiltonian(basis: Basis, config: CouplingConfig) -> Operator:
    _check_nodes(basis, config)
    h = Operator(basis, (basis.dim, basis.dim))
    if not config.active_nodes or config.fiber_coupling == 0:
        return h
    fiber = basis.spec.fiber_mode
    if fiber is None:
        raise ValueError("switches are on but the system has no fiber mode")
    cutoff = basis.spec.photon_cutoff
    for k in sorted(config.active_nodes):
        # b a_k^+ : fiber photon moves into cavity k
        hop = product_operator(
            basis, [ModeFactor(fiber, False, cutoff), ModeFactor(k, True, cutoff)], config.fiber_coupling
        )
        h = h + hop + hop.dag()
    return h


def total_hamiltonian(basis: Basis, config: CouplingConfig) -> Operator:
    return laser_hamiltonian(basis, config) + cavity_hamiltonian(basis, config) + fiber_hamiltonian(basis, config)


def strong_hamiltonian(basis: Basis, config: CouplingConfig) -> Operator:
    """The drive-free part ``H_c + H_cf`` that defines the Zeno subspaces."""
    return cavity_hamiltonian(basis, config) + fiber_hamiltonian(basis, config)


def collapse_operators(basis: Basis, noise: NoiseConfig, config: CouplingConfig | None = None) -> list[tuple[float, Operator]]:
    """Jump operators with rates for ``L rho L^+ - {L^+ L, rho}/2``.

    Order: cavity modes by node, fiber mode, then for each atom the channels
    ``e -> 0`` and ``e -> 1`` at rate Gamma/2 each. Zero-rate channels are
    kept so the list layout does not depend on the noise values.
    """
    if config is not None:
        _check_nodes(basis, config)
    spec = basis.spec
    out: list[tuple[float, Operator]] = []
    for k in range(spec.cavity_count):
        out.append((noise.cavity_decay, mode_annihilation_operator(basis, k)))
    if spec.fiber_mode is not None:
        out.append((noise.fiber_decay, mode_annihilation_operator(basis, spec.fiber_mode)))
    half = noise.spontaneous_emission / 2
    for k in range(spec.atom_count):
        for m in (Level.G0, Level.G1):
            out.append((half, atomic_transition_operator(basis, k, Level.E, m)))
    return out


def collapse_labels(basis: Basis) -> list[str]:
    spec = basis.spec
    labels = [f"a{k}" for k in range(spec.cavity_count)]
    if spec.fiber_mode is not None:
        labels.append("b")
    for k in range(spec.atom_count):
        labels += [f"sigma_0e[{k}]", f"sigma_1e[{k}]"]
    return labels


def qst_chain(basis: Basis, sender: int, receiver: int, spectators: Sequence[Level] | None = None) -> list[BasisState]:
    """The seven single-excitation states visited by a transfer sender -> receiver.

    In order: sender in 1, sender excited, photon in sender cavity, photon in
    fiber, photon in receiver cavity, receiver excited, receiver in 1. Atoms
    other than the pair sit in ``spectators`` levels (default ground).
    """
    spec = basis.spec
    if sender == receiver:
        raise ValueError("sender and receiver must differ")
    if spec.fiber_mode is None:
        raise ValueError("the transfer chain needs a fiber mode")
    if spectators is None:
        spectators = [Level.G0] * spec.atom_count
    base_levels = list(Level.parse(x) for x in spectators)
    base_levels[sender] = Level.G0
    base_levels[receiver] = Level.G0
    vac = (0,) * spec.mode_count

    def atoms(**set_levels) -> tuple[Level, ...]:
        lv = list(base_levels)
        for node, level in set_levels.values():
            lv[node] = level
        return tuple(lv)

    def photon(mode: int) -> tuple[int, ...]:
        p = list(vac)
        p[mode] = 1
        return tuple(p)

    return [
        BasisState(atoms(s=(sender, Level.G1)), vac),
        BasisState(atoms(s=(sender, Level.E)), vac),
        BasisState(atoms(), photon(sender)),
        BasisState(atoms(), photon(spec.fiber_mode)),
        BasisState(atoms(), photon(receiver)),
        BasisState(atoms(r=(receiver, Level.E)), vac),
        BasisState(atoms(r=(receiver, Level.G1)), vac),
    ]

