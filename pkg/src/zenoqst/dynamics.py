"""Schrodinger and Lindblad propagation, fidelities and populations.

The master equation is integrated in the form

    drho/dt = -i (H_nh rho - rho H_nh^+) + sum_j gamma_j L_j rho L_j^+,
    H_nh    = H - (i/2) sum_j gamma_j L_j^+ L_j,

which is algebraically the standard dissipator ``L rho L^+ - {L^+ L, rho}/2``.
Operators are applied as dense arrays below dimension 64 and as sparse
matrices above.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .hilbert import Basis, BasisState, DensityMatrix, Operator, StateVector

__all__ = [
    "IntegratorSettings",
    "IntegrationError",
    "PositivityError",
    "LindbladResult",
    "evolve_unitary",
    "unitary_trajectory",
    "evolve_lindblad",
    "lindblad_trajectory",
    "fidelity",
    "populations",
    "reduced_atom_state",
    "qubit_fidelity",
    "trace_distance",
    "write_timeseries_csv",
]

log = logging.getLogger(__name__)

DENSE_BELOW = 64
POSITIVITY_FAIL = -1e-6


class IntegrationError(RuntimeError):
    """The integrator did not reach the requested accuracy."""


class PositivityError(IntegrationError):
    """A propagated density matrix acquired a clearly negative eigenvalue."""


@dataclass(frozen=True)
class IntegratorSettings:
    """Integrator choice and tolerances.

    ``method`` is ``"adaptive"`` (embedded Dormand-Prince 8(5,3) pair) or
    ``"rk4"`` (classical fixed step of size ``rk4_step``). ``unitary`` picks
    how pure states are propagated: ``"eig"`` (exact, via the spectrum) or
    ``"ode"`` (same integrator as the master equation).
    """

    method: str = "adaptive"
    atol: float = 1e-12
    rtol: float = 1e-10
    max_step: float = math.inf
    rk4_step: float = 0.02
    trace_policy: str = "warn"
    unitary: str = "eig"

    def __post_init__(self):
        if self.method not in ("adaptive", "rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.unitary not in ("eig", "ode"):
            raise ValueError(f"unknown unitary method {self.unitary!r}")
        if self.trace_policy not in ("off", "warn", "renormalize"):
            raise ValueError(f"unknown trace policy {self.trace_policy!r}")
        if self.atol <= 0 or self.rtol <= 0 or self.rk4_step <= 0 or self.max_step <= 0:
            raise ValueError("tolerances and step sizes must be positive")

    def halved(self) -> "IntegratorSettings":
        return IntegratorSettings(
            self.method, self.atol / 2, self.rtol / 2, self.max_step, self.rk4_step / 2, self.trace_policy, self.unitary
        )


def _matrix(op: Operator):
    return op.toarray() if op.dim < DENSE_BELOW else op.matrix


def _times(t: float | Sequence[float]) -> np.ndarray:
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if ts.ndim != 1 or (ts < 0).any() or (np.diff(ts) < 0).any():
        raise ValueError("times must be nonnegative and nondecreasing")
    return ts


# --- pure states -----------------------------------------------------------------


def unitary_trajectory(
    h: Operator,
    psi0: StateVector,
    times: Sequence[float],
    settings: IntegratorSettings | None = None,
) -> np.ndarray:
    """Amplitudes of ``exp(-i H t) psi0`` for each ``t``; shape ``(len(times), dim)``."""
    settings = settings or IntegratorSettings()
    if not h.basis.compatible(psi0.basis):
        raise ValueError("Hamiltonian and state live on different bases")
    if not h.is_hermitian(1e-10):
        raise ValueError("Hamiltonian is not hermitian")
    ts = _times(times)
    psi = psi0.amplitudes
    if settings.unitary == "eig":
        if h.dim <= 2000:
            w, v = la.eigh(h.toarray())
            c = v.conj().T @ psi
            out = (v @ (np.exp(-1j * np.outer(w, ts)) * c[:, None])).T
        else:
            out = np.array([spla.expm_multiply(-1j * t * h.matrix.tocsc(), psi) for t in ts])
    else:
        m = _matrix(h)
        out = _integrate(lambda _t, y: -1j * (m @ y), psi, ts, settings)
    norms = np.linalg.norm(out, axis=1)
    dev = float(np.max(np.abs(norms - 1))) if len(norms) else 0.0
    if dev > 1e-8:
        raise IntegrationError(f"norm drifted by {dev:.3g} during unitary evolution")
    return out


def evolve_unitary(
    h: Operator, psi0: StateVector, t: float, settings: IntegratorSettings | None = None
) -> StateVector:
    amps = unitary_trajectory(h, psi0, [0.0, t], settings)[-1]
    return StateVector(psi0.basis, amps / np.linalg.norm(amps))


def _rk4(fun, y0: np.ndarray, ts: np.ndarray, step: float, post=None) -> np.ndarray:
    out = np.empty((len(ts), y0.size), dtype=complex)
    y = y0.astype(complex)
    t = ts[0]
    for k, target in enumerate(ts):
        while t < target - 1e-14:
            dt = min(step, target - t)
            k1 = fun(t, y)
            k2 = fun(t + dt / 2, y + dt / 2 * k1)
            k3 = fun(t + dt / 2, y + dt / 2 * k2)
            k4 = fun(t + dt, y + dt * k3)
            y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if post is not None:
                y = post(y)
            t += dt
        t = target
        out[k] = y
    return out


def _integrate(fun, y0: np.ndarray, ts: np.ndarray, settings: IntegratorSettings, post=None) -> np.ndarray:
    if settings.method == "rk4":
        return _rk4(fun, y0, ts, settings.rk4_step, post)
    out = np.empty((len(ts), y0.size), dtype=complex)
    y = y0.astype(complex)
    t = ts[0]
    for k, target in enumerate(ts):
        if target > t:
            sol = solve_ivp(
                fun,
                (t, target),
                y,
                method="DOP853",
                rtol=settings.rtol,
                atol=settings.atol,
                max_step=settings.max_step,
            )
            if not sol.success:
                raise IntegrationError(f"integration failed at t={t:.6g}: {sol.message}")
            y = sol.y[:, -1]
            if post is not None:
                y = post(y)
            t = target
        out[k] = y
    return out


# --- master equation ---------------------------------------------------------------


@dataclass
class LindbladResult:
    times: np.ndarray
    states: list[DensityMatrix]
    max_trace_deviation: float = 0.0
    max_hermiticity_deviation: float = 0.0
    min_eigenvalue: float = 1.0
    evaluations: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def final(self) -> DensityMatrix:
        return self.states[-1]

    def physical(self, trace_tol: float = 1e-8, herm_tol: float = 1e-10, pos_tol: float = 1e-8) -> bool:
        return (
            self.max_trace_deviation <= trace_tol
            and self.max_hermiticity_deviation <= herm_tol
            and self.min_eigenvalue >= -pos_tol
        )


def lindblad_trajectory(
    h: Operator,
    collapse: Sequence[tuple[float, Operator]],
    rho0: DensityMatrix,
    times: Sequence[float],
    settings: IntegratorSettings | None = None,
) -> LindbladResult:
    """Integrate the master equation and return the state at every requested time.

    Each output state is checked: the hermiticity defect is recorded and then
    removed by symmetrization, the trace is handled per ``trace_policy`` and
    a minimum eigenvalue below -1e-6 raises :class:`PositivityError`.
    """
    settings = settings or IntegratorSettings()
    basis = rho0.basis
    if not h.basis.compatible(basis):
        raise ValueError("Hamiltonian and density matrix live on different bases")
    if not h.is_hermitian(1e-10):
        raise ValueError("Hamiltonian is not hermitian")
    ts = _times(times)
    dim = basis.dim
    dense = dim < DENSE_BELOW

    channels = []
    for rate, op in collapse:
        if rate < 0:
            raise ValueError("collapse rates must be nonnegative")
        if rate == 0:
            continue
        if not op.basis.compatible(basis):
            raise ValueError("collapse operator lives on a different basis")
        channels.append((rate, op))

    h_nh = h.matrix.astype(complex)
    for rate, op in channels:
        h_nh = h_nh - 0.5j * rate * (op.matrix.conj().T @ op.matrix)
    if dense:
        h_nh = h_nh.toarray()
        jumps = [(r, op.toarray(), op.toarray().conj().T) for r, op in channels]
    else:
        h_nh = sp.csr_matrix(h_nh)
        jumps = [(r, op.matrix, op.matrix.conj().T.tocsr()) for r, op in channels]
    h_nh_dag = h_nh.conj().T

    calls = [0]

    if dense:

        def right(x, m):
            return x @ m

    else:
        # x @ M computed as (M^T x^T)^T so the sparse factor stays on the left
        def right(x, m):
            return np.asarray(m.T @ x.T).T

    def rhs(_t, y):
        calls[0] += 1
        rho = y.reshape(dim, dim)
        d = -1j * (np.asarray(h_nh @ rho) - right(rho, h_nh_dag))
        for rate, l, ldag in jumps:
            d += rate * right(np.asarray(l @ rho), ldag)
        return d.reshape(-1)

    herm_dev = [0.0]

    def symmetrize(y):
        rho = y.reshape(dim, dim)
        dev = float(np.max(np.abs(rho - rho.conj().T)))
        herm_dev[0] = max(herm_dev[0], dev)
        return (0.5 * (rho + rho.conj().T)).reshape(-1)

    traj = _integrate(rhs, rho0.matrix.reshape(-1), ts, settings, post=symmetrize)

    result = LindbladResult(ts, [])
    for k, y in enumerate(traj):
        rho = y.reshape(dim, dim)
        rho = 0.5 * (rho + rho.conj().T)
        tr = float(np.real(np.trace(rho)))
        tdev = abs(tr - 1)
        result.max_trace_deviation = max(result.max_trace_deviation, tdev)
        if tdev > 1e-8 and settings.trace_policy != "off":
            msg = f"trace deviates from 1 by {tdev:.3g} at t={ts[k]:.6g}"
            result.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            if settings.trace_policy == "renormalize":
                rho = rho / tr
        lam = float(np.linalg.eigvalsh(rho)[0])
        result.min_eigenvalue = min(result.min_eigenvalue, lam)
        if lam < POSITIVITY_FAIL:
            raise PositivityError(f"density matrix eigenvalue {lam:.3g} at t={ts[k]:.6g}; tighten tolerances")
        result.states.append(DensityMatrix(basis, rho, validate=False))
    result.max_hermiticity_deviation = herm_dev[0]
    result.evaluations = calls[0]
    if herm_dev[0] > 0:
        log.debug("max hermiticity defect before symmetrization: %.3g", herm_dev[0])
    return result


def evolve_lindblad(
    h: Operator,
    collapse: Sequence[tuple[float, Operator]],
    rho0: DensityMatrix,
    t: float,
    settings: IntegratorSettings | None = None,
) -> DensityMatrix:
    return lindblad_trajectory(h, collapse, rho0, [0.0, t], settings).final


# --- observables -------------------------------------------------------------------


def _as_matrix(state: StateVector | DensityMatrix) -> np.ndarray:
    if isinstance(state, StateVector):
        return np.outer(state.amplitudes, state.amplitudes.conj())
    return state.matrix


def fidelity(rho: DensityMatrix | StateVector, target: StateVector) -> float:
    """``<target| rho |target>`` for a pure target."""
    if not rho.basis.compatible(target.basis):
        raise ValueError("state and target live on different bases")
    if isinstance(rho, StateVector):
        return abs(np.vdot(target.amplitudes, rho.amplitudes)) ** 2
    v = target.amplitudes
    return float(np.real(np.vdot(v, rho.matrix @ v)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(np.asarray(a) - np.asarray(b)))))


def populations(state: StateVector | DensityMatrix, labels: Sequence[BasisState]) -> np.ndarray:
    basis = state.basis
    idx = [basis.index(s) for s in labels]
    if isinstance(state, StateVector):
        return np.abs(state.amplitudes[idx]) ** 2
    return np.real(np.diag(state.matrix)[idx])


def reduced_atom_state(state: StateVector | DensityMatrix, node: int) -> np.ndarray:
    """3x3 reduced density matrix of atom ``node`` (levels g0, g1, e)."""
    basis: Basis = state.basis
    if not 0 <= node < basis.spec.atom_count:
        raise IndexError(f"atom node {node} out of range")
    rho = _as_matrix(state)
    rest: dict[tuple, list[tuple[int, int]]] = {}
    for i, s in enumerate(basis.states):
        key = (s.atom_levels[:node] + s.atom_levels[node + 1 :], s.photon_numbers)
        rest.setdefault(key, []).append((int(s.atom_levels[node]), i))
    out = np.zeros((3, 3), dtype=complex)
    for members in rest.values():
        for la_, i in members:
            for lb, j in members:
                out[la_, lb] += rho[i, j]
    return out


def qubit_fidelity(reduced: np.ndarray, a: complex, b: complex) -> float:
    """Overlap of a 3x3 atomic state with ``a|0> + b|1>``."""
    v = np.array([a, b, 0.0], dtype=complex)
    v = v / np.linalg.norm(v)
    return float(np.real(np.vdot(v, reduced @ v)))


def write_timeseries_csv(
    fh: TextIO,
    times: Sequence[float],
    pops: dict[str, Sequence[float]],
    fid: Sequence[float] | None = None,
) -> None:
    """CSV with header ``t,<population labels...>[,fidelity]`` and 12 significant digits."""
    names = list(pops)
    header = ["t"] + names + (["fidelity"] if fid is not None else [])
    fh.write(",".join(header) + "\n")
    for k, t in enumerate(times):
        row = [t] + [pops[n][k] for n in names] + ([fid[k]] if fid is not None else [])
        fh.write(",".join(f"{float(x):.12g}" for x in row) + "\n")
