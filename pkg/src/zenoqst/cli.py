"""Command-line front end: single runs, swaps, Zeno report and parameter sweeps.

    zenoqst qst     --preset cesium
    zenoqst qss     --preset qss --out report.json
    zenoqst network --preset network
    zenoqst zeno    --config my.ini
    zenoqst sweep   --preset fig5 --workers 4 --out fig5.csv

Exit status: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, SweepGrid, load_config, load_preset
from .dynamics import IntegrationError, IntegratorSettings
from .hamiltonian import CouplingConfig, NoiseConfig, ZenoRatioWarning, laser_hamiltonian, qst_chain, strong_hamiltonian
from .hilbert import SystemSpec, build_basis, filter_excitation
from .protocol import (
    AtomStateSpec,
    ScheduleResult,
    network_swap_schedule,
    qss_schedule,
    qst_schedule,
    run_qst,
    run_schedule,
)
from .zeno import (
    analytic_dark_state,
    analytic_eigenvalues,
    effective_coupling,
    effective_hamiltonian,
    subspace_angle,
    zeno_decompose,
)

__all__ = [
    "RunReport",
    "cmd_qst",
    "cmd_qss",
    "cmd_network",
    "cmd_zeno",
    "cmd_sweep",
    "sweep_point",
    "main",
]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
ZENO_GATE = 0.2


@dataclass
class RunReport:
    command: str
    config: list[str]
    fidelity: float
    segment_fidelities: list[float]
    wall_time: float
    diagnostics: dict[str, float] = field(default_factory=dict)
    details: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        lines += [f"  {line}" for line in self.config]
        lines.append(f"fidelity: {self.fidelity:.12g}")
        for k, f in enumerate(self.segment_fidelities):
            lines.append(f"segment {k} fidelity: {f:.12g}")
        for k, v in self.details.items():
            lines.append(f"{k}: {v:.12g}")
        lines.append(f"wall time: {self.wall_time:.3f} s")
        for k, v in self.diagnostics.items():
            lines.append(f"{k}: {v:.3g}")
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _gates(cfg: RunConfig, strict: bool) -> list[str]:
    """Validity checks for the Zeno regime and the single-mode fiber model."""
    msgs = []
    ratio = cfg.omega / min(cfg.g, cfg.lam)
    if ratio > ZENO_GATE:
        msgs.append(f"Zeno ratio Omega/min(g, lambda) = {ratio:.3g} exceeds {ZENO_GATE}")
    if cfg.fiber is not None and not cfg.fiber.single_mode_valid:
        msgs.append(f"fiber supports ~{cfg.fiber.mode_count:.3g} modes; single-mode model needs <= 1")
    if strict and msgs:
        raise ConfigError("; ".join(msgs))
    return msgs


def _diagnostics(res: ScheduleResult) -> dict[str, float]:
    return {
        "max trace deviation": res.max_trace_deviation,
        "max hermiticity deviation": res.max_hermiticity_deviation,
        "min eigenvalue": res.min_eigenvalue,
        "rhs evaluations": float(res.evaluations),
        "dimension": float(res.basis.dim),
    }


def cmd_qst(cfg: RunConfig, strict: bool = False) -> RunReport:
    msgs = _gates(cfg, strict)
    p = cfg.protocol
    sender, receiver = int(p.get("sender", 1)), int(p.get("receiver", 0))
    a, b = p.get("qubit", (0.0, 1.0))
    schedule = qst_schedule(sender, receiver, cfg.omega, cfg.g, cfg.lam, node_count=p.get("nodes"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZenoRatioWarning)
        res = run_schedule(
            schedule, AtomStateSpec({sender: (a, b)}), cfg.noise, cfg.settings, photon_cutoff=cfg.photon_cutoff
        )
    details = {
        "receiver qubit fidelity": res.atom_fidelity(receiver, a, b),
        "sender reset fidelity": res.atom_fidelity(sender, 1, 0),
        "receiver relative phase": res.relative_phase(receiver, a, b),
    }
    return RunReport("qst", cfg.echo(), res.fidelity, res.segment_fidelities, res.wall_time, _diagnostics(res), details, msgs)


def _swap(cfg: RunConfig, schedule, atom_a: int, atom_b: int, helper: int, name: str, msgs: list[str]) -> RunReport:
    p = cfg.protocol
    qa = p.get("qubit_a", (0.6, 0.8))
    qb = p.get("qubit_b", (0.8j, 0.6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZenoRatioWarning)
        res = run_schedule(
            schedule, AtomStateSpec({atom_a: qa, atom_b: qb}), cfg.noise, cfg.settings, photon_cutoff=cfg.photon_cutoff
        )
    details = {
        f"atom {atom_a} fidelity": res.atom_fidelity(atom_a, *qb),
        f"atom {atom_b} fidelity": res.atom_fidelity(atom_b, *qa),
        f"helper {helper} fidelity": res.atom_fidelity(helper, 1, 0),
        f"atom {atom_a} relative phase": res.relative_phase(atom_a, *qb),
        f"atom {atom_b} relative phase": res.relative_phase(atom_b, *qa),
    }
    return RunReport(name, cfg.echo(), res.fidelity, res.segment_fidelities, res.wall_time, _diagnostics(res), details, msgs)


def cmd_qss(cfg: RunConfig, strict: bool = False) -> RunReport:
    msgs = _gates(cfg, strict)
    p = cfg.protocol
    a, b, h = int(p.get("atom_a", 1)), int(p.get("atom_b", 2)), int(p.get("helper", 0))
    return _swap(cfg, qss_schedule(a, b, h, cfg.omega, cfg.g, cfg.lam), a, b, h, "qss", msgs)


def cmd_network(cfg: RunConfig, strict: bool = False) -> RunReport:
    msgs = _gates(cfg, strict)
    p = cfg.protocol
    n = int(p.get("nodes", 5))
    a, b, h = int(p.get("atom_a", 3)), int(p.get("atom_b", n - 1)), int(p.get("helper", 0))
    schedule = network_swap_schedule(a, b, h, n, cfg.omega, cfg.g, cfg.lam)
    return _swap(cfg, schedule, a, b, h, "network", msgs)


def cmd_zeno(cfg: RunConfig, strict: bool = False) -> str:
    """Numeric vs closed-form Zeno structure of a two-node transfer."""
    msgs = _gates(cfg, strict)
    g, lam, omega = cfg.g, cfg.lam, cfg.omega
    basis = filter_excitation(build_basis(SystemSpec(2, 1, cfg.photon_cutoff)), 1, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZenoRatioWarning)
        config = CouplingConfig.transfer(2, sender=1, receiver=0, omega=omega, fiber_coupling=lam, g=g)
    decomp = zeno_decompose(strong_hamiltonian(basis, config))
    analytic = analytic_eigenvalues(g, lam)
    lines = ["numeric Zeno clusters (eigenvalue, rank):"]
    for eta, r in zip(decomp.eigenvalues, decomp.ranks):
        lines.append(f"  {eta:+.12f}  {r}")
    lines.append("closed-form eigenvalues: " + ", ".join(f"{x:+.12f}" for x in analytic))
    if len(decomp.eigenvalues) == len(analytic):
        err = float(np.max(np.abs(decomp.eigenvalues - analytic)))
        lines.append(f"max |numeric - closed form|: {err:.3e}")
    else:
        lines.append("cluster count differs from the closed form")
    chain = qst_chain(basis, 1, 0)
    dark = analytic_dark_state(g, lam, basis)
    p0 = decomp.projector_for(0.0).toarray()
    span = np.column_stack([np.eye(basis.dim)[:, basis.index(chain[0])], np.eye(basis.dim)[:, basis.index(chain[6])], dark.amplitudes])
    w, v = np.linalg.eigh(p0)
    lines.append(f"dark subspace principal angle: {subspace_angle(v[:, w > 0.5], span):.3e}")
    heff = effective_hamiltonian(decomp, laser_hamiltonian(basis, config)).toarray()
    k_eff = effective_coupling(omega, g, lam)
    lines.append(f"effective coupling lambda*Omega/sqrt(2 lambda^2 + g^2): {k_eff:.5f}")
    num = np.vdot(np.eye(basis.dim)[:, basis.index(chain[6])], heff @ dark.amplitudes)
    lines.append(f"numeric <receiver 1|H_eff|dark>: {num.real:+.5f}")
    num = np.vdot(np.eye(basis.dim)[:, basis.index(chain[0])], heff @ dark.amplitudes)
    lines.append(f"numeric <sender 1|H_eff|dark>:   {num.real:+.5f}")
    lines += [f"warning: {m}" for m in msgs]
    return "\n".join(lines) + "\n"


# --- sweeps ---------------------------------------------------------------------------


def sweep_point(params: dict[str, float], photon_cutoff: int = 1, settings: IntegratorSettings | None = None) -> tuple[float | None, str]:
    """Worst-case (``b = 1``) transfer fidelity for one parameter set; ``(F, error code)``."""
    try:
        lam = params["lambda/g"]
        noise = NoiseConfig(params["kappa/g"], params["kappa_f/lambda"] * lam, params["Gamma/g"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZenoRatioWarning)
            res = run_qst(params["Omega/g"], lam, noise, settings=settings, photon_cutoff=photon_cutoff)
        if not math.isfinite(res.fidelity):
            return None, "E_NAN"
        return res.fidelity, ""
    except IntegrationError:
        return None, "E_INTEGRATION"
    except ValueError:
        return None, "E_VALUE"
    except Exception:  # noqa: BLE001 - a sweep point must never abort the sweep
        return None, "E_OTHER"


def _sweep_star(args):
    return sweep_point(*args)


def run_sweep(grid: SweepGrid, photon_cutoff: int = 1, settings: IntegratorSettings | None = None, workers: int = 1):
    points = grid.points()
    jobs = [(p, photon_cutoff, settings) for p in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_sweep_star(j) for j in jobs]
    return points, results


def cmd_sweep(cfg: RunConfig, workers: int = 1, strict: bool = False) -> str:
    """CSV text: ``#`` header echoing the configuration, then axis1, axis2, fidelity, error."""
    if cfg.sweep is None:
        raise ConfigError("configuration has no [sweep] section")
    msgs = _gates(cfg, strict)
    grid = cfg.sweep
    points, results = run_sweep(grid, cfg.photon_cutoff, cfg.settings, workers)
    out = ["# zenoqst sweep: worst-case transfer fidelity, input |1> on the sender"]
    out += [f"# {line}" for line in cfg.echo()]
    for ax in (grid.axis1, grid.axis2):
        out.append(f"# axis {ax.name}: {ax.start:.12g} .. {ax.stop:.12g}, {ax.points} points")
    for k in sorted(grid.fixed):
        out.append(f"# fixed {k} = {grid.fixed[k]:.12g}")
    out += [f"# warning: {m}" for m in msgs]
    out.append(f"{grid.axis1.name},{grid.axis2.name},fidelity,error")
    for p, (fid, err) in zip(points, results):
        f = "" if fid is None else f"{fid:.12g}"
        out.append(f"{p[grid.axis1.name]:.12g},{p[grid.axis2.name]:.12g},{f},{err}")
    return "\n".join(out) + "\n"


# --- entry point ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, help="configuration file")
    src.add_argument("--preset", help="bundled configuration (fig4, fig5, fig6, cesium, qst, qss, network)")
    common.add_argument("--out", type=Path, help="write the report / CSV here")
    common.add_argument("--workers", type=int, default=1, help="parallel workers for sweeps")
    common.add_argument("--strict", action="store_true", help="treat validity-gate warnings as errors")

    parser = argparse.ArgumentParser(prog="zenoqst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("qst", "two-node state transfer"),
        ("qss", "three-node swap through a helper atom"),
        ("network", "swap two atoms of an N-node network"),
        ("zeno", "Zeno subspace report"),
        ("sweep", "fidelity over a two-parameter grid"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.preset is not None:
            cfg = load_preset(args.preset)
        else:
            cfg = RunConfig()
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        start = time.perf_counter()
        if args.command == "sweep":
            text = cmd_sweep(cfg, args.workers, args.strict)
            if args.out is not None:
                args.out.write_text(text, encoding="utf-8")
                print(f"wrote {args.out} ({time.perf_counter() - start:.1f} s)")
            else:
                sys.stdout.write(text)
        elif args.command == "zeno":
            text = cmd_zeno(cfg, args.strict)
            sys.stdout.write(text)
            if args.out is not None:
                args.out.write_text(text, encoding="utf-8")
        else:
            cmd = {"qst": cmd_qst, "qss": cmd_qss, "network": cmd_network}[args.command]
            report = cmd(cfg, args.strict)
            sys.stdout.write(report.to_text())
            if args.out is not None:
                args.out.write_text(report.to_json(), encoding="utf-8")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
