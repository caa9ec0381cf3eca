"""Truncated Hilbert spaces for N Lambda-type atoms in cavities joined by a fiber.

Canonical ordering
------------------
A basis state lists the atoms in node order, then the cavity modes in node
order, then the fiber mode (if present). States are enumerated
lexicographically in that slot order, atom levels ordered ``g0 < g1 < e``.

Excitation number
-----------------
``excitation = #atoms in g1 or e + total photon number``. Atoms in ``g1``
count because the drive exchanges ``g1 <-> e`` while the cavity exchanges
``e <-> g0`` plus a photon; this is the quantity the full Hamiltonian
conserves, and every decay channel lowers or keeps it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, Iterator, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Level",
    "SystemSpec",
    "FiberSpec",
    "BasisState",
    "Basis",
    "Operator",
    "StateVector",
    "DensityMatrix",
    "AtomFactor",
    "ModeFactor",
    "build_basis",
    "filter_excitation",
    "product_operator",
    "atomic_transition_operator",
    "mode_annihilation_operator",
    "mode_creation_operator",
    "number_operator",
    "excitation_operator",
    "identity_operator",
    "write_basis",
    "write_triplets",
    "read_triplets",
    "MAX_DIM",
    "DENSE_LIMIT",
]

MAX_DIM = 200_000
DENSE_LIMIT = 2_000

HERMITIAN_TOL = 1e-12


class Level(IntEnum):
    G0 = 0
    G1 = 1
    E = 2

    @classmethod
    def parse(cls, value: "Level | int | str") -> "Level":
        if isinstance(value, Level):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            aliases = {"g0": cls.G0, "0": cls.G0, "g1": cls.G1, "1": cls.G1, "e": cls.E}
            if key not in aliases:
                raise ValueError(f"unknown atomic level {value!r}")
            return aliases[key]
        return cls(int(value))

    @property
    def symbol(self) -> str:
        return ("0", "1", "e")[self]


@dataclass(frozen=True)
class SystemSpec:
    """Sizes of the network: atoms (one per cavity), fiber modes, photon cutoff."""

    atom_count: int
    fiber_count: int = 1
    photon_cutoff: int = 1
    cavity_count: int | None = None

    def __post_init__(self):
        if self.cavity_count is None:
            object.__setattr__(self, "cavity_count", self.atom_count)
        if self.atom_count < 1:
            raise ValueError("atom_count must be >= 1")
        if self.cavity_count != self.atom_count:
            raise ValueError("cavity_count must equal atom_count (one cavity per atom)")
        if self.fiber_count not in (0, 1):
            raise ValueError("fiber_count must be 0 or 1 (single-mode fiber model)")
        if self.photon_cutoff < 0:
            raise ValueError("photon_cutoff must be nonnegative")

    @property
    def mode_count(self) -> int:
        return self.cavity_count + self.fiber_count

    @property
    def fiber_mode(self) -> int | None:
        return self.cavity_count if self.fiber_count else None

    @property
    def full_dim(self) -> int:
        return 3**self.atom_count * (self.photon_cutoff + 1) ** self.mode_count


@dataclass(frozen=True)
class FiberSpec:
    """Physical fiber parameters, used to gate the single-mode approximation.

    The number of fiber modes that interact appreciably with the cavities is
    ``L * nu / (2 pi C)`` for length ``L``, cavity-into-fiber decay bandwidth
    ``nu`` (rad/s) and light speed ``C``.
    """

    length: float
    decay_bandwidth: float
    light_speed: float = 2.99792458e8

    @property
    def mode_count(self) -> float:
        return self.length * self.decay_bandwidth / (2 * math.pi * self.light_speed)

    @property
    def single_mode_valid(self) -> bool:
        return self.mode_count <= 1.0

    def validate(self) -> None:
        if self.length <= 0 or self.decay_bandwidth <= 0 or self.light_speed <= 0:
            raise ValueError("fiber length, bandwidth and light speed must be positive")
        if not self.single_mode_valid:
            raise ValueError(
                f"fiber supports ~{self.mode_count:.3g} interacting modes; "
                "the single-mode model needs <= 1"
            )


@dataclass(frozen=True, order=True)
class BasisState:
    atom_levels: tuple[Level, ...]
    photon_numbers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "atom_levels", tuple(Level.parse(x) for x in self.atom_levels))
        object.__setattr__(self, "photon_numbers", tuple(int(n) for n in self.photon_numbers))
        if any(n < 0 for n in self.photon_numbers):
            raise ValueError("photon numbers must be nonnegative")

    @property
    def excitation(self) -> int:
        return sum(lv != Level.G0 for lv in self.atom_levels) + sum(self.photon_numbers)

    def with_level(self, node: int, level: Level) -> "BasisState":
        levels = list(self.atom_levels)
        levels[node] = level
        return BasisState(tuple(levels), self.photon_numbers)

    def with_photons(self, mode: int, n: int) -> "BasisState":
        photons = list(self.photon_numbers)
        photons[mode] = n
        return BasisState(self.atom_levels, tuple(photons))

    @property
    def label(self) -> str:
        atoms = "".join(lv.symbol for lv in self.atom_levels)
        photons = "".join(str(n) for n in self.photon_numbers)
        return f"|{atoms};{photons}>"

    def __str__(self) -> str:
        return self.label


class Basis:
    """Ordered set of basis states with an index map.

    A filtered basis keeps a reference to the full tensor-product basis it was
    cut from (``root``) and the positions of its states there.
    """

    def __init__(
        self,
        spec: SystemSpec,
        states: Sequence[BasisState],
        root: "Basis | None" = None,
    ):
        self.spec = spec
        self.states: tuple[BasisState, ...] = tuple(states)
        self.index_of: dict[BasisState, int] = {s: i for i, s in enumerate(self.states)}
        if len(self.index_of) != len(self.states):
            raise ValueError("duplicate basis states")
        self.root = root
        if root is None:
            self.root_indices = np.arange(len(self.states))
        else:
            self.root_indices = np.array([root.index_of[s] for s in self.states], dtype=np.int64)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def is_full(self) -> bool:
        return self.root is None

    @property
    def full(self) -> "Basis":
        return self if self.root is None else self.root

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[BasisState]:
        return iter(self.states)

    def __getitem__(self, i: int) -> BasisState:
        return self.states[i]

    def __contains__(self, state: BasisState) -> bool:
        return state in self.index_of

    def __repr__(self) -> str:
        kind = "full" if self.is_full else "filtered"
        return f"Basis({kind}, atoms={self.spec.atom_count}, modes={self.spec.mode_count}, dim={self.dim})"

    def index(self, state: BasisState) -> int:
        try:
            return self.index_of[state]
        except KeyError:
            raise KeyError(f"{state.label} is not in this basis") from None

    def state(self, atoms: Sequence["Level | int | str"], photons: Sequence[int] | None = None) -> BasisState:
        """Build a BasisState for this system (photons default to vacuum)."""
        if len(atoms) != self.spec.atom_count:
            raise ValueError(f"expected {self.spec.atom_count} atom levels, got {len(atoms)}")
        if photons is None:
            photons = (0,) * self.spec.mode_count
        if len(photons) != self.spec.mode_count:
            raise ValueError(f"expected {self.spec.mode_count} photon numbers, got {len(photons)}")
        return BasisState(tuple(Level.parse(a) for a in atoms), tuple(photons))

    def ground(self) -> BasisState:
        return self.state([Level.G0] * self.spec.atom_count)

    def compatible(self, other: "Basis") -> bool:
        return self is other or (self.spec == other.spec and self.states == other.states)

    def embedding(self) -> sp.csr_matrix:
        """Isometry (full_dim x dim) placing this basis inside the full one."""
        full = self.full
        data = np.ones(self.dim)
        return sp.csr_matrix((data, (self.root_indices, np.arange(self.dim))), shape=(full.dim, self.dim))

    def embed_vector(self, amplitudes: np.ndarray) -> np.ndarray:
        out = np.zeros(self.full.dim, dtype=complex)
        out[self.root_indices] = amplitudes
        return out

    def restrict_vector(self, full_amplitudes: np.ndarray) -> np.ndarray:
        return np.asarray(full_amplitudes)[self.root_indices]

    def restrict_matrix(self, full_matrix) -> sp.csr_matrix:
        m = sp.csr_matrix(full_matrix)
        idx = self.root_indices
        return m[idx][:, idx]

    def map_to(self, other: "Basis") -> np.ndarray:
        """Index in ``other`` of each state of ``self`` (-1 where absent)."""
        return np.array([other.index_of.get(s, -1) for s in self.states], dtype=np.int64)


def build_basis(spec: SystemSpec, max_dim: int = MAX_DIM) -> Basis:
    dim = spec.full_dim
    if dim > max_dim:
        raise ValueError(f"basis dimension {dim} exceeds the cap of {max_dim}")
    levels = [tuple(Level)] * spec.atom_count
    photons = [range(spec.photon_cutoff + 1)] * spec.mode_count
    states = [
        BasisState(tuple(combo[: spec.atom_count]), tuple(combo[spec.atom_count :]))
        for combo in itertools.product(*levels, *photons)
    ]
    return Basis(spec, states)


def filter_excitation(basis: Basis, max_excitation: int, min_excitation: int = 0) -> Basis:
    """Keep states whose excitation lies in ``[min_excitation, max_excitation]``.

    Canonical order is preserved. Filtering an already filtered basis is
    allowed; the result still refers to the original full basis.
    """
    if max_excitation < 0 or min_excitation < 0:
        raise ValueError("excitation bounds must be nonnegative")
    kept = [s for s in basis.states if min_excitation <= s.excitation <= max_excitation]
    return Basis(basis.spec, kept, root=basis.full)


# --- operator construction -------------------------------------------------


@dataclass(frozen=True)
class AtomFactor:
    """``|to><from|`` on one atom."""

    node: int
    to_level: Level
    from_level: Level

    def apply(self, state: BasisState) -> tuple[float, BasisState] | None:
        if state.atom_levels[self.node] != self.from_level:
            return None
        return 1.0, state.with_level(self.node, self.to_level)


@dataclass(frozen=True)
class ModeFactor:
    """Truncated ladder operator on one bosonic mode."""

    mode: int
    raising: bool
    cutoff: int

    def apply(self, state: BasisState) -> tuple[float, BasisState] | None:
        n = state.photon_numbers[self.mode]
        if self.raising:
            if n >= self.cutoff:
                return None
            return math.sqrt(n + 1), state.with_photons(self.mode, n + 1)
        if n == 0:
            return None
        return math.sqrt(n), state.with_photons(self.mode, n - 1)


def _check_node(basis: Basis, node: int) -> None:
    if not 0 <= node < basis.spec.atom_count:
        raise IndexError(f"atom node {node} out of range for {basis.spec.atom_count} atoms")


def _check_mode(basis: Basis, mode: int) -> None:
    if not 0 <= mode < basis.spec.mode_count:
        raise IndexError(f"mode {mode} out of range for {basis.spec.mode_count} modes")


def _from_action(basis: Basis, action: Callable[[BasisState], Iterable[tuple[complex, BasisState]]]) -> "Operator":
    rows, cols, vals = [], [], []
    index_of = basis.index_of
    for j, s in enumerate(basis.states):
        for amp, t in action(s):
            i = index_of.get(t)
            if i is not None and amp != 0:
                rows.append(i)
                cols.append(j)
                vals.append(amp)
    m = sp.coo_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim))
    return Operator(basis, m.tocsr())


def product_operator(basis: Basis, factors: Sequence[AtomFactor | ModeFactor], coeff: complex = 1.0) -> "Operator":
    """``coeff * f[0] @ f[1] @ ... @ f[-1]`` built state by state.

    The product is taken on the full tensor space before restricting to
    ``basis``, so intermediate states outside a filtered sector are not lost.
    Factors are applied right to left.
    """
    for f in factors:
        if isinstance(f, AtomFactor):
            _check_node(basis, f.node)
        else:
            _check_mode(basis, f.mode)

    def action(s: BasisState):
        amp: complex = coeff
        for f in reversed(factors):
            r = f.apply(s)
            if r is None:
                return ()
            a, s = r
            amp *= a
        return ((amp, s),)

    return _from_action(basis, action)


def atomic_transition_operator(basis: Basis, node: int, from_level, to_level) -> "Operator":
    """``|to><from|`` on atom ``node``, identity elsewhere."""
    _check_node(basis, node)
    return product_operator(basis, [AtomFactor(node, Level.parse(to_level), Level.parse(from_level))])


def mode_annihilation_operator(basis: Basis, mode: int) -> "Operator":
    _check_mode(basis, mode)
    return product_operator(basis, [ModeFactor(mode, False, basis.spec.photon_cutoff)])


def mode_creation_operator(basis: Basis, mode: int) -> "Operator":
    _check_mode(basis, mode)
    return product_operator(basis, [ModeFactor(mode, True, basis.spec.photon_cutoff)])


def _diagonal(basis: Basis, values: Iterable[float]) -> "Operator":
    return Operator(basis, sp.diags(np.asarray(list(values), dtype=complex), format="csr"))


def number_operator(basis: Basis, mode: int) -> "Operator":
    _check_mode(basis, mode)
    return _diagonal(basis, (s.photon_numbers[mode] for s in basis.states))


def excitation_operator(basis: Basis) -> "Operator":
    return _diagonal(basis, (s.excitation for s in basis.states))


def identity_operator(basis: Basis) -> "Operator":
    return _diagonal(basis, np.ones(basis.dim))


# --- containers -------------------------------------------------------------


class Operator:
    """Sparse complex matrix tied to a basis."""

    __array_priority__ = 20

    def __init__(self, basis: Basis, matrix, hermitian: bool = False):
        m = sp.csr_matrix(matrix, dtype=complex)
        if m.shape != (basis.dim, basis.dim):
            raise ValueError(f"matrix shape {m.shape} does not match basis dim {basis.dim}")
        m.eliminate_zeros()
        self.basis = basis
        self.matrix = m
        if hermitian and self.hermiticity_error() > HERMITIAN_TOL:
            raise ValueError(f"operator is not hermitian (max deviation {self.hermiticity_error():.3g})")

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T)

    def hermiticity_error(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.hermiticity_error() <= tol

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def element(self, bra: BasisState, ket: BasisState) -> complex:
        return complex(self.matrix[self.basis.index(bra), self.basis.index(ket)])

    def restrict(self, sub: Basis) -> "Operator":
        """Compress onto a sub-basis sharing this operator's full basis."""
        pos = sub.map_to(self.basis)
        if (pos < 0).any():
            raise ValueError("sub-basis contains states absent from the operator's basis")
        return Operator(sub, self.matrix[pos][:, pos])

    def _check(self, other: "Operator") -> None:
        if not self.basis.compatible(other.basis):
            raise ValueError("operators live on different bases")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.basis, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.basis, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.basis, -self.matrix)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.basis, self.matrix * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.basis, self.matrix / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.basis, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            if not self.basis.compatible(other.basis):
                raise ValueError("operator and state live on different bases")
            return self.matrix @ other.amplitudes
        return self.matrix @ np.asarray(other)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, nnz={self.nnz})"


class StateVector:
    """Normalized pure state on a basis."""

    def __init__(self, basis: Basis, amplitudes, normalize: bool = False, tol: float = 1e-10):
        psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if psi.shape != (basis.dim,):
            raise ValueError(f"amplitude length {psi.size} does not match basis dim {basis.dim}")
        norm = np.linalg.norm(psi)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            psi = psi / norm
        elif abs(norm - 1) > tol:
            raise ValueError(f"state norm {norm:.12g} differs from 1")
        self.basis = basis
        self.amplitudes = psi
        self.amplitudes.setflags(write=False)

    @classmethod
    def basis_state(cls, basis: Basis, state: BasisState) -> "StateVector":
        psi = np.zeros(basis.dim, dtype=complex)
        psi[basis.index(state)] = 1.0
        return cls(basis, psi)

    @classmethod
    def superposition(cls, basis: Basis, terms: Iterable[tuple[complex, BasisState]], normalize: bool = False) -> "StateVector":
        psi = np.zeros(basis.dim, dtype=complex)
        for amp, s in terms:
            psi[basis.index(s)] += amp
        return cls(basis, psi, normalize=normalize)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, state: BasisState) -> complex:
        return complex(self.amplitudes[self.basis.index(state)])

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"StateVector(dim={self.basis.dim})"


class DensityMatrix:
    """Dense density matrix with physicality checks on construction."""

    def __init__(self, basis: Basis, matrix, validate: bool = True):
        if basis.dim > DENSE_LIMIT:
            raise ValueError(f"dense density matrices are limited to dim <= {DENSE_LIMIT}")
        rho = np.array(matrix, dtype=complex)
        if rho.shape != (basis.dim, basis.dim):
            raise ValueError(f"matrix shape {rho.shape} does not match basis dim {basis.dim}")
        self.basis = basis
        self.matrix = rho
        self.matrix.setflags(write=False)
        if validate:
            self.validate()

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-8, pos_tol: float = 1e-8) -> None:
        if self.hermiticity_error() > herm_tol:
            raise ValueError(f"density matrix not hermitian ({self.hermiticity_error():.3g})")
        if abs(self.trace() - 1) > trace_tol:
            raise ValueError(f"density matrix trace {self.trace():.12g} differs from 1")
        lam = self.min_eigenvalue()
        if lam < -pos_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lam:.3g}")

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.basis.dim})"


# --- plain-text serialization ------------------------------------------------


def write_basis(basis: Basis, fh: TextIO) -> None:
    """CSV listing: index, atom levels, photon numbers, excitation."""
    fh.write("index,atoms,photons,excitation\n")
    for i, s in enumerate(basis.states):
        atoms = "".join(lv.symbol for lv in s.atom_levels)
        photons = "".join(str(n) for n in s.photon_numbers)
        fh.write(f"{i},{atoms},{photons},{s.excitation}\n")


def write_triplets(op: Operator, fh: TextIO) -> None:
    """Sparse-triplet CSV (row, col, re, im), row-major, zeros omitted."""
    m = op.matrix.tocoo()
    order = np.lexsort((m.col, m.row))
    fh.write(f"# dim={op.dim}\n")
    fh.write("row,col,re,im\n")
    for k in order:
        v = m.data[k]
        fh.write(f"{m.row[k]},{m.col[k]},{v.real:.17g},{v.imag:.17g}\n")


def read_triplets(fh: TextIO, basis: Basis) -> Operator:
    rows, cols, vals = [], [], []
    for line in fh:
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("row"):
            continue
        r, c, re, im = line.split(",")
        rows.append(int(r))
        cols.append(int(c))
        vals.append(complex(float(re), float(im)))
    m = sp.coo_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim))
    return Operator(basis, m)
