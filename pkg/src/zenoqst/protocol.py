"""Pulse schedules for transfer and swap protocols, and their simulation.

Nodes are numbered from 0. A transfer ``sender -> receiver`` switches the two
cavities onto the fiber bus and drives the receiver at ``+Omega`` and the
sender at ``-Omega`` for ``sqrt(2 lam^2 + g^2) pi / (sqrt 2 lam Omega)``.
A swap of ``A`` and ``B`` through an idle helper ``H`` is the three
transfers ``A -> H``, ``B -> A``, ``H -> B``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, TextIO

import numpy as np

from .dynamics import (
    IntegratorSettings,
    fidelity,
    lindblad_trajectory,
    qubit_fidelity,
    reduced_atom_state,
    unitary_trajectory,
)
from .hamiltonian import (
    DEFAULT_ZENO_WARN_RATIO,
    CouplingConfig,
    NoiseConfig,
    collapse_operators,
    total_hamiltonian,
)
from .hilbert import (
    Basis,
    DensityMatrix,
    Level,
    StateVector,
    SystemSpec,
    build_basis,
    filter_excitation,
)
from .zeno import transfer_time

__all__ = [
    "PulseSegment",
    "PulseSchedule",
    "AtomStateSpec",
    "ScheduleResult",
    "qst_schedule",
    "qss_schedule",
    "network_swap_schedule",
    "run_schedule",
    "run_qst",
    "swap_targets",
    "uhlmann_fidelity",
]


@dataclass(frozen=True)
class PulseSegment:
    """One transfer: switches of ``receiver`` and ``sender`` on, constant drive."""

    receiver: int
    sender: int
    omega: float
    g: float = 1.0
    fiber_coupling: float = 1.0
    duration: float | None = None

    def __post_init__(self):
        if self.receiver == self.sender:
            raise ValueError("receiver and sender must differ")
        if self.receiver < 0 or self.sender < 0:
            raise ValueError("node indices must be nonnegative")
        if self.omega <= 0 or self.g <= 0 or self.fiber_coupling <= 0:
            raise ValueError("omega, g and lambda must be positive")
        if self.duration is None:
            object.__setattr__(self, "duration", transfer_time(self.omega, self.g, self.fiber_coupling))
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.receiver, self.sender)

    def rabi_assignment(self, node_count: int) -> tuple[float, ...]:
        rabi = [0.0] * node_count
        rabi[self.receiver] = self.omega
        rabi[self.sender] = -self.omega
        return tuple(rabi)

    def coupling(self, node_count: int, zeno_warn_ratio: float = DEFAULT_ZENO_WARN_RATIO) -> CouplingConfig:
        return CouplingConfig(
            self.rabi_assignment(node_count),
            self.fiber_coupling,
            frozenset(self.pair),
            (self.g,) * node_count,
            zeno_warn_ratio,
        )

    def relabel(self, mapping: Mapping[int, int]) -> "PulseSegment":
        return PulseSegment(
            mapping[self.receiver], mapping[self.sender], self.omega, self.g, self.fiber_coupling, self.duration
        )

    def with_duration(self, duration: float) -> "PulseSegment":
        return PulseSegment(self.receiver, self.sender, self.omega, self.g, self.fiber_coupling, duration)


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered transfers on an ``node_count``-node bus; all switches start off."""

    segments: tuple[PulseSegment, ...]
    node_count: int

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for seg in self.segments:
            if max(seg.pair) >= self.node_count:
                raise ValueError(f"segment {seg.pair} uses a node outside 0..{self.node_count - 1}")
        for a, b in zip(self.segments, self.segments[1:]):
            if len(set(a.pair) & set(b.pair)) > 1:
                raise ValueError("consecutive segments may share at most one node")

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def total_time(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def nodes(self) -> list[int]:
        """Nodes that take part in at least one segment, ascending."""
        return sorted({n for s in self.segments for n in s.pair})

    def switch_events(self) -> list[tuple]:
        """Switch toggles and transfers with minimal switching.

        A switch shared by consecutive segments stays on. Items are
        ``("off", nodes)``, ``("on", nodes)`` or
        ``("transfer", sender, receiver, duration)``.
        """
        events: list[tuple] = [("off", tuple(range(self.node_count)))]
        on: set[int] = set()
        for seg in self.segments:
            want = set(seg.pair)
            if on - want:
                events.append(("off", tuple(sorted(on - want))))
            if want - on:
                events.append(("on", tuple(sorted(want - on))))
            on = want
            events.append(("transfer", seg.sender, seg.receiver, seg.duration))
        if on:
            events.append(("off", tuple(sorted(on))))
        return events

    def to_text(self) -> str:
        lines = [
            "# pulse schedule; nodes numbered from 0; omega and duration in units of g and 1/g",
            f"# nodes = {self.node_count}",
            "segment,receiver,sender,omega_receiver,omega_sender,g,lambda,duration",
        ]
        for k, s in enumerate(self.segments):
            lines.append(
                f"{k},{s.receiver},{s.sender},{s.omega:+.17g},{-s.omega:+.17g},"
                f"{s.g:.17g},{s.fiber_coupling:.17g},{s.duration:.17g}"
            )
        return "\n".join(lines) + "\n"

    def write(self, fh: TextIO) -> None:
        fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "PulseSchedule":
        node_count = None
        segs = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes"):
                    node_count = int(body.split("=")[1])
                continue
            if line.startswith("segment"):
                continue
            _, rcv, snd, om_r, om_s, g, lam, dur = line.split(",")
            if not math.isclose(float(om_r), -float(om_s)):
                raise ValueError("receiver and sender drives must be opposite")
            segs.append(PulseSegment(int(rcv), int(snd), float(om_r), float(g), float(lam), float(dur)))
        if node_count is None:
            raise ValueError("schedule text lacks the '# nodes = N' line")
        return cls(tuple(segs), node_count)


def qst_schedule(
    sender: int, receiver: int, omega: float, g: float = 1.0, lam: float = 1.0, node_count: int | None = None
) -> PulseSchedule:
    if node_count is None:
        node_count = max(sender, receiver) + 1
    return PulseSchedule((PulseSegment(receiver, sender, omega, g, lam),), node_count)


def _swap_segments(a: int, b: int, helper: int, omega: float, g: float, lam: float) -> tuple[PulseSegment, ...]:
    if len({a, b, helper}) != 3:
        raise ValueError("the two swapped atoms and the helper must be distinct")
    return (
        PulseSegment(helper, a, omega, g, lam),
        PulseSegment(a, b, omega, g, lam),
        PulseSegment(b, helper, omega, g, lam),
    )


def qss_schedule(
    atom_a: int, atom_b: int, helper: int, omega: float, g: float = 1.0, lam: float = 1.0
) -> PulseSchedule:
    """Swap ``atom_a`` and ``atom_b`` through ``helper`` (which must start in |0>)."""
    segs = _swap_segments(atom_a, atom_b, helper, omega, g, lam)
    return PulseSchedule(segs, max(atom_a, atom_b, helper) + 1)


def network_swap_schedule(
    i: int, j: int, helper: int, node_count: int, omega: float, g: float = 1.0, lam: float = 1.0
) -> PulseSchedule:
    """Swap atoms ``i`` and ``j`` of an ``node_count``-node network via ``helper``."""
    if any(not 0 <= n < node_count for n in (i, j, helper)):
        raise ValueError(f"nodes must lie in 0..{node_count - 1}")
    return PulseSchedule(_swap_segments(i, j, helper, omega, g, lam), node_count)


@dataclass(frozen=True)
class AtomStateSpec:
    """Initial qubit ``a|0> + b|1>`` per node; unlisted nodes start in |0>."""

    qubits: Mapping[int, tuple[complex, complex]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for node, (a, b) in dict(self.qubits).items():
            a, b = complex(a), complex(b)
            if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-10:
                raise ValueError(f"qubit on node {node} is not normalized")
            clean[int(node)] = (a, b)
        object.__setattr__(self, "qubits", clean)

    def amplitudes(self, node: int) -> tuple[complex, complex]:
        return self.qubits.get(node, (1.0 + 0j, 0j))

    @property
    def nodes(self) -> list[int]:
        return sorted(self.qubits)

    @property
    def max_excitation(self) -> int:
        return sum(1 for a, b in self.qubits.values() if b != 0)


def uhlmann_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``(tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2``; equals ``<psi|rho|psi>`` for pure sigma."""
    w, v = np.linalg.eigh(0.5 * (sigma + sigma.conj().T))
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = root @ rho @ root
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)


def _swap_permutation(basis: Basis, n1: int, n2: int) -> np.ndarray:
    """Index map exchanging the levels of atoms ``n1`` and ``n2``."""
    perm = np.empty(basis.dim, dtype=np.int64)
    for i, s in enumerate(basis.states):
        lv = list(s.atom_levels)
        lv[n1], lv[n2] = lv[n2], lv[n1]
        perm[i] = basis.index(type(s)(tuple(lv), s.photon_numbers))
    return perm


def _permute_vector(v: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    out[perm] = v
    return out


def _permute_matrix(m: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(m)
    out[np.ix_(perm, perm)] = m
    return out


@dataclass
class ScheduleResult:
    """Outcome of :func:`run_schedule`.

    ``fidelity`` compares the final state with the ideal protocol output;
    ``segment_fidelities[k]`` compares the state after segment ``k`` with the
    ideal image of the state that entered it.
    """

    basis: Basis
    nodes: list[int]
    final: DensityMatrix
    ideal_final: StateVector
    fidelity: float
    segment_fidelities: list[float]
    max_trace_deviation: float = 0.0
    max_hermiticity_deviation: float = 0.0
    min_eigenvalue: float = 0.0
    evaluations: int = 0
    wall_time: float = 0.0

    def local(self, node: int) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise KeyError(f"node {node} was not simulated") from None

    def atom_state(self, node: int) -> np.ndarray:
        return reduced_atom_state(self.final, self.local(node))

    def atom_fidelity(self, node: int, a: complex, b: complex) -> float:
        return qubit_fidelity(self.atom_state(node), a, b)

    def relative_phase(self, node: int, a: complex, b: complex) -> float:
        """Phase of the atom's |0><1| coherence relative to ``a b*`` (0 means no phase error)."""
        coh = self.atom_state(node)[0, 1]
        if abs(a * np.conj(b)) == 0 or abs(coh) == 0:
            return 0.0
        return float(np.angle(coh / (a * np.conj(b))))


def _initial_vector(basis: Basis, nodes: list[int], initial: AtomStateSpec) -> np.ndarray:
    psi = np.zeros(basis.dim, dtype=complex)
    for i, s in enumerate(basis.states):
        if any(s.photon_numbers) or any(lv == Level.E for lv in s.atom_levels):
            continue
        amp = 1.0 + 0j
        for local, node in enumerate(nodes):
            a, b = initial.amplitudes(node)
            amp *= a if s.atom_levels[local] == Level.G0 else b
        psi[i] = amp
    return psi


def run_schedule(
    schedule: PulseSchedule,
    initial: AtomStateSpec,
    noise: NoiseConfig | None = None,
    settings: IntegratorSettings | None = None,
    photon_cutoff: int = 1,
    include_idle_nodes: bool = False,
    zeno_warn_ratio: float = DEFAULT_ZENO_WARN_RATIO,
) -> ScheduleResult:
    """Simulate the schedule segment by segment.

    Only nodes that take part in a segment or carry an initial qubit are
    instantiated unless ``include_idle_nodes`` is set; the fiber mode is
    always present. Modes are kept between segments, so residual photons
    left by noise carry over. Noise-free runs propagate a state vector.
    """
    noise = noise or NoiseConfig()
    settings = settings or IntegratorSettings()
    start = time.perf_counter()
    if any(n >= schedule.node_count for n in initial.nodes):
        raise ValueError("initial state names a node outside the network")
    if include_idle_nodes:
        nodes = list(range(schedule.node_count))
    else:
        nodes = sorted(set(schedule.nodes) | set(initial.nodes))
    local = {n: k for k, n in enumerate(nodes)}
    spec = SystemSpec(len(nodes), 1, photon_cutoff)
    basis = filter_excitation(build_basis(spec), initial.max_excitation)

    psi0 = _initial_vector(basis, nodes, initial)
    collapse = collapse_operators(basis, noise)
    pure = noise.is_noiseless

    ideal = psi0.copy()
    state_vec = psi0.copy()
    rho = np.outer(psi0, psi0.conj())
    seg_fids: list[float] = []
    trace_dev = herm_dev = 0.0
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    evals = 0

    for seg in schedule.segments:
        lseg = seg.relabel(local)
        h = total_hamiltonian(basis, lseg.coupling(len(nodes), zeno_warn_ratio))
        perm = _swap_permutation(basis, lseg.receiver, lseg.sender)
        ideal = _permute_vector(ideal, perm)
        if pure:
            target = _permute_vector(state_vec, perm)
            state_vec = unitary_trajectory(h, StateVector(basis, state_vec, normalize=True), [0.0, seg.duration], settings)[-1]
            seg_fids.append(float(abs(np.vdot(target, state_vec)) ** 2))
            rho = np.outer(state_vec, state_vec.conj())
        else:
            target_rho = _permute_matrix(rho, perm)
            res = lindblad_trajectory(h, collapse, DensityMatrix(basis, rho, validate=False), [0.0, seg.duration], settings)
            rho = res.final.matrix
            seg_fids.append(uhlmann_fidelity(rho, target_rho))
            trace_dev = max(trace_dev, res.max_trace_deviation)
            herm_dev = max(herm_dev, res.max_hermiticity_deviation)
            min_eig = min(min_eig, res.min_eigenvalue)
            evals += res.evaluations

    if pure:
        rho = np.outer(state_vec, state_vec.conj())
        trace_dev = abs(float(np.real(np.trace(rho))) - 1)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(rho)[0]))
    final = DensityMatrix(basis, rho, validate=False)
    ideal_sv = StateVector(basis, ideal, normalize=True)
    return ScheduleResult(
        basis=basis,
        nodes=nodes,
        final=final,
        ideal_final=ideal_sv,
        fidelity=fidelity(final, ideal_sv),
        segment_fidelities=seg_fids,
        max_trace_deviation=trace_dev,
        max_hermiticity_deviation=herm_dev,
        min_eigenvalue=min_eig,
        evaluations=evals,
        wall_time=time.perf_counter() - start,
    )


def run_qst(
    omega: float,
    lam: float = 1.0,
    noise: NoiseConfig | None = None,
    g: float = 1.0,
    settings: IntegratorSettings | None = None,
    qubit: tuple[complex, complex] = (0.0, 1.0),
    duration: float | None = None,
    photon_cutoff: int = 1,
    zeno_warn_ratio: float = DEFAULT_ZENO_WARN_RATIO,
) -> ScheduleResult:
    """Two-node transfer from node 1 to node 0.

    With the default ``qubit = (0, 1)`` the reported ``fidelity`` is the
    population of ``|1>`` on the receiver with everything else in ground and
    vacuum, the worst case over input qubits.
    """
    seg = PulseSegment(0, 1, omega, g, lam, duration)
    schedule = PulseSchedule((seg,), 2)
    return run_schedule(
        schedule,
        AtomStateSpec({1: qubit}),
        noise,
        settings,
        photon_cutoff=photon_cutoff,
        zeno_warn_ratio=zeno_warn_ratio,
    )


def swap_targets(initial: AtomStateSpec, schedule: PulseSchedule) -> dict[int, tuple[complex, complex]]:
    """Ideal qubit on every simulated node after the schedule (level swaps only)."""
    where = {n: initial.amplitudes(n) for n in set(schedule.nodes) | set(initial.nodes)}
    for seg in schedule.segments:
        where[seg.receiver], where[seg.sender] = where[seg.sender], where[seg.receiver]
    return where

