"""Run configuration: an INI-style file with sections and flat keys.

All couplings and rates are ratios to the atom-cavity coupling g::

    [couplings]
    omega = 0.1            # Omega / g
    lambda = 1.0           # lambda / g

    [noise]
    kappa = 0.0            # kappa / g
    gamma = 0.0            # Gamma / g (total, split equally over e->0 and e->1)
    kappa_f = 0.0          # kappa_f / g   (or kappa_f_over_lambda = ...)

    [system]
    photon_cutoff = 1

    [protocol]             # which nodes and which input qubits
    nodes = 3
    atom_a = 1
    atom_b = 2
    helper = 0
    qubit_a = 0.6, 0.8     # a, b of a|0> + b|1>; complex values like 0.5j allowed
    qubit_b = 1, 0

    [sweep]
    axis1 = lambda/g
    axis1_range = 0.1, 2.0, 21
    axis2 = Omega/g
    axis2_range = 0.01, 0.2, 21

    [integrator]
    method = adaptive
    rtol = 1e-10
    atol = 1e-12

    [fiber]                # optional single-mode validity gate
    length_m = 1.0
    bandwidth_rad_s = 1e9
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import IntegratorSettings
from .hamiltonian import NoiseConfig
from .hilbert import FiberSpec

__all__ = [
    "ConfigError",
    "SWEEP_PARAMETERS",
    "SweepAxis",
    "SweepGrid",
    "RunConfig",
    "load_config",
    "parse_config",
    "preset_path",
    "preset_names",
    "load_preset",
]

SWEEP_PARAMETERS = ("lambda/g", "Omega/g", "kappa/g", "Gamma/g", "kappa_f/lambda")

_ALLOWED = {
    "system": {"photon_cutoff"},
    "couplings": {"omega", "lambda", "g"},
    "noise": {"kappa", "gamma", "kappa_f", "kappa_f_over_lambda"},
    "protocol": {"nodes", "sender", "receiver", "atom_a", "atom_b", "helper", "qubit", "qubit_a", "qubit_b"},
    "sweep": {"axis1", "axis1_range", "axis2", "axis2_range"},
    "integrator": {"method", "rtol", "atol", "max_step", "rk4_step", "trace_policy", "unitary"},
    "fiber": {"length_m", "bandwidth_rad_s", "light_speed_m_s"},
}


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if self.name not in SWEEP_PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {self.name!r}; choose from {', '.join(SWEEP_PARAMETERS)}")
        if self.points < 2:
            raise ConfigError(f"sweep axis {self.name} needs at least 2 points")
        if self.start < 0 or self.stop < 0:
            raise ConfigError(f"sweep axis {self.name} must be nonnegative")
        if self.stop < self.start:
            raise ConfigError(f"sweep axis {self.name} has stop < start")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SweepGrid:
    axis1: SweepAxis
    axis2: SweepAxis
    fixed: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ConfigError("the two sweep axes must differ")

    def points(self) -> list[dict[str, float]]:
        """Parameter sets in axis1-major order."""
        out = []
        for x in self.axis1.values():
            for y in self.axis2.values():
                p = dict(self.fixed)
                p[self.axis1.name] = float(x)
                p[self.axis2.name] = float(y)
                out.append(p)
        return out


@dataclass
class RunConfig:
    omega: float = 0.1
    lam: float = 1.0
    g: float = 1.0
    kappa: float = 0.0
    gamma: float = 0.0
    kappa_f: float = 0.0
    photon_cutoff: int = 1
    protocol: dict[str, object] = field(default_factory=dict)
    sweep: SweepGrid | None = None
    settings: IntegratorSettings = field(default_factory=IntegratorSettings)
    fiber: FiberSpec | None = None
    source: str = "<defaults>"
    raw: dict[str, dict[str, str]] = field(default_factory=dict)

    @property
    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.kappa, self.kappa_f, self.gamma)

    def parameters(self) -> dict[str, float]:
        """The five sweepable parameters in their sweep units."""
        return {
            "lambda/g": self.lam,
            "Omega/g": self.omega,
            "kappa/g": self.kappa,
            "Gamma/g": self.gamma,
            "kappa_f/lambda": self.kappa_f / self.lam if self.lam else 0.0,
        }

    def echo(self) -> list[str]:
        """Deterministic ``key = value`` lines describing the full configuration."""
        lines = [f"source = {self.source}"]
        for k, v in self.parameters().items():
            lines.append(f"{k} = {v:.12g}")
        lines.append(f"photon_cutoff = {self.photon_cutoff}")
        s = self.settings
        lines.append(f"integrator = {s.method} rtol={s.rtol:.3g} atol={s.atol:.3g} unitary={s.unitary}")
        for k in sorted(self.protocol):
            lines.append(f"protocol.{k} = {self.protocol[k]}")
        return lines


def _float(sec: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"[{sec}] {key}: expected a number, got {value!r}") from None


def _int(sec: str, key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"[{sec}] {key}: expected an integer, got {value!r}") from None


def _qubit(sec: str, key: str, value: str) -> tuple[complex, complex]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"[{sec}] {key}: expected 'a, b', got {value!r}")
    try:
        a, b = complex(parts[0].replace(" ", "")), complex(parts[1].replace(" ", ""))
    except ValueError:
        raise ConfigError(f"[{sec}] {key}: cannot parse amplitudes {value!r}") from None
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1) > 1e-10:
        raise ConfigError(f"[{sec}] {key}: |a|^2 + |b|^2 = {norm:.12g}, expected 1")
    return a, b


def _axis(sec: str, name: str, rng: str) -> SweepAxis:
    parts = [p.strip() for p in rng.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"[{sec}] range for {name}: expected 'start, stop, points'")
    return SweepAxis(name.strip(), _float(sec, "range", parts[0]), _float(sec, "range", parts[1]), _int(sec, "range", parts[2]))


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    for sec in cp.sections():
        if sec not in _ALLOWED:
            raise ConfigError(f"{source}: unknown section [{sec}]")
        unknown = set(cp[sec]) - _ALLOWED[sec]
        if unknown:
            raise ConfigError(f"{source}: [{sec}] unknown key(s) {', '.join(sorted(unknown))}")

    cfg = RunConfig(source=source, raw={s: dict(cp[s]) for s in cp.sections()})
    if cp.has_section("system") and "photon_cutoff" in cp["system"]:
        cfg.photon_cutoff = _int("system", "photon_cutoff", cp["system"]["photon_cutoff"])
        if cfg.photon_cutoff < 1:
            raise ConfigError("[system] photon_cutoff must be >= 1")
    if cp.has_section("couplings"):
        c = cp["couplings"]
        if "omega" in c:
            cfg.omega = _float("couplings", "omega", c["omega"])
        if "lambda" in c:
            cfg.lam = _float("couplings", "lambda", c["lambda"])
        if "g" in c and _float("couplings", "g", c["g"]) != 1.0:
            raise ConfigError("[couplings] g is the unit of energy and must be 1")
    if cp.has_section("noise"):
        n = cp["noise"]
        if "kappa" in n:
            cfg.kappa = _float("noise", "kappa", n["kappa"])
        if "gamma" in n:
            cfg.gamma = _float("noise", "gamma", n["gamma"])
        if "kappa_f" in n and "kappa_f_over_lambda" in n:
            raise ConfigError("[noise] give kappa_f or kappa_f_over_lambda, not both")
        if "kappa_f" in n:
            cfg.kappa_f = _float("noise", "kappa_f", n["kappa_f"])
        if "kappa_f_over_lambda" in n:
            cfg.kappa_f = _float("noise", "kappa_f_over_lambda", n["kappa_f_over_lambda"]) * cfg.lam
    if cfg.omega <= 0 or cfg.lam <= 0:
        raise ConfigError("[couplings] omega and lambda must be positive")
    if min(cfg.kappa, cfg.gamma, cfg.kappa_f) < 0:
        raise ConfigError("[noise] rates must be nonnegative")

    if cp.has_section("protocol"):
        p = cp["protocol"]
        for key in p:
            if key.startswith("qubit"):
                cfg.protocol[key] = _qubit("protocol", key, p[key])
            else:
                cfg.protocol[key] = _int("protocol", key, p[key])

    if cp.has_section("sweep"):
        s = cp["sweep"]
        for key in ("axis1", "axis1_range", "axis2", "axis2_range"):
            if key not in s:
                raise ConfigError(f"[sweep] missing {key}")
        ax1 = _axis("sweep", s["axis1"], s["axis1_range"])
        ax2 = _axis("sweep", s["axis2"], s["axis2_range"])
        fixed = {k: v for k, v in cfg.parameters().items() if k not in (ax1.name, ax2.name)}
        cfg.sweep = SweepGrid(ax1, ax2, fixed)

    if cp.has_section("integrator"):
        s = cp["integrator"]
        kwargs: dict[str, object] = {}
        for key in ("rtol", "atol", "max_step", "rk4_step"):
            if key in s:
                kwargs[key] = _float("integrator", key, s[key])
        for key in ("method", "trace_policy", "unitary"):
            if key in s:
                kwargs[key] = s[key].strip()
        try:
            cfg.settings = IntegratorSettings(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"[integrator] {exc}") from None

    if cp.has_section("fiber"):
        f = cp["fiber"]
        try:
            cfg.fiber = FiberSpec(
                _float("fiber", "length_m", f["length_m"]),
                _float("fiber", "bandwidth_rad_s", f["bandwidth_rad_s"]),
                _float("fiber", "light_speed_m_s", f.get("light_speed_m_s", "2.99792458e8")),
            )
        except KeyError as exc:
            raise ConfigError(f"[fiber] missing {exc.args[0]}") from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=path.name)


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("zenoqst.presets").iterdir() if p.name.endswith(".ini"))


def preset_path(name: str):
    res = resources.files("zenoqst.presets") / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return res


def load_preset(name: str) -> RunConfig:
    return parse_config(preset_path(name).read_text(encoding="utf-8"), source=f"preset:{name}")
