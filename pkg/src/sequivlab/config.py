"""Experiment configuration files (YAML).

Unknown keys anywhere in the file are rejected. The schema is documented
in the README; the bundled files under ``sequivlab/configs`` are complete
examples.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .lattice import L_BASE, L_PRIME, NORMALIZATIONS, POTENTIAL_POINTS, DEFAULT_EPSILON
from .models import POTENTIAL_KINDS, TIME_MODES, GridSpec, PotentialModel, SigmaMap

SUB_EXPERIMENTS = ("classical-check", "momentum-check", "spectrum",
                   "lattice-vs-spectral", "lprime-comparison")
REFERENCES = ("spectral-H", "spectral-Hprime", "ordered-Hprime")

_TOP_KEYS = {"name", "seed", "sub_experiments", "potential", "sigma", "grid", "classical",
             "momentum", "spectrum", "kernels", "output"}


def _strict(section, allowed, where):
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return section


def _number(value, where, *, positive=False, minimum=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be positive")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    return int(value) if integer else float(value)


def _number_list(values, where, **kw):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{where}: expected a non-empty list")
    return [_number(v, f"{where}[{i}]", **kw) for i, v in enumerate(values)]


@dataclass(frozen=True)
class PotentialConfig:
    model: PotentialModel
    margin: float | None = None
    domain: tuple | None = None


@dataclass(frozen=True)
class ClassicalConfig:
    n_trajectories: int = 20
    x0_range: float = 2.0
    v0_range: float = 2.0
    t_final: float = 10.0
    tol: float = 1e-10
    n_samples: int = 401
    n_construction_points: int = 1000


@dataclass(frozen=True)
class MomentumConfig:
    V_values: tuple = (1.0,)
    n_random: int = 1000
    series_points: tuple = (0.05, 0.025)
    hprime_points: tuple = (0.2, 0.1)
    pde_p: float = 1.0
    pde_steps: tuple = (0.01, 0.005)
    power_law_p: float = 100.0
    asymptotic_p: tuple = (1e4, 1e6)
    a: float = 0.0


@dataclass(frozen=True)
class SpectrumConfig:
    n_levels: int = 5


@dataclass(frozen=True)
class KernelConfig:
    lagrangian: str
    mode: str
    normalization: str
    t_total: float
    n_list: tuple
    references: tuple
    epsilon: float = DEFAULT_EPSILON
    potential_point: str = "midpoint"
    literal_printed: bool = False


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    dump_matrices: bool = False
    interior_fraction: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    potential: PotentialConfig
    sigma: SigmaMap
    grid: GridSpec | None
    classical: ClassicalConfig | None
    momentum: MomentumConfig | None
    spectrum: SpectrumConfig | None
    kernels: tuple
    output: OutputConfig
    sub_experiments: tuple
    raw: dict = field(default_factory=dict, compare=False)


def _parse_potential(sec):
    allowed = {"kind", "omega", "lam", "c0", "v0", "xs", "values", "shift", "margin", "domain"}
    sec = _strict(sec, allowed, "potential")
    kind = sec.get("kind")
    if kind not in POTENTIAL_KINDS:
        raise ConfigError(f"potential.kind: expected one of {POTENTIAL_KINDS}, got {kind!r}")
    shift = _number(sec.get("shift", 0.0), "potential.shift")
    per_kind = {"harmonic": {"omega"}, "quartic-well": {"lam"}, "shifted-harmonic": {"omega", "c0"},
                "constant": {"v0"}, "tabulated": {"xs", "values"}}
    extra = set(sec) - per_kind[kind] - {"kind", "shift", "margin", "domain"}
    if extra:
        raise ConfigError(f"potential: keys {sorted(extra)} do not apply to kind {kind!r}")
    try:
        if kind == "harmonic":
            model = PotentialModel.harmonic(_number(sec.get("omega", 1.0), "potential.omega"), shift)
        elif kind == "quartic-well":
            model = PotentialModel.quartic_well(_number(sec.get("lam", 1.0), "potential.lam", positive=True), shift)
        elif kind == "shifted-harmonic":
            model = PotentialModel.shifted_harmonic(_number(sec.get("omega", 1.0), "potential.omega"),
                                                    _number(sec.get("c0", 0.0), "potential.c0"), shift)
        elif kind == "constant":
            model = PotentialModel.constant(_number(sec.get("v0"), "potential.v0"), shift)
        else:
            model = PotentialModel.tabulated(_number_list(sec.get("xs"), "potential.xs"),
                                             _number_list(sec.get("values"), "potential.values"), shift)
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from exc
    margin = sec.get("margin")
    if margin is not None:
        margin = _number(margin, "potential.margin", positive=True)
    domain = sec.get("domain")
    if domain is not None:
        domain = tuple(_number_list(domain, "potential.domain"))
        if len(domain) != 2 or not domain[0] < domain[1]:
            raise ConfigError("potential.domain: expected [x_min, x_max] with x_min < x_max")
    return PotentialConfig(model, margin, domain)


def _parse_sigma(sec):
    sec = _strict(sec if sec is not None else {"kind": "half-square"}, {"kind", "alpha", "beta"}, "sigma")
    kind = sec.get("kind", "half-square")
    try:
        if kind == "half-square":
            if set(sec) - {"kind"}:
                raise ConfigError("sigma: half-square takes no parameters")
            return SigmaMap("half-square")
        return SigmaMap(kind, _number(sec.get("alpha", 1.0), "sigma.alpha"),
                        _number(sec.get("beta", 0.0), "sigma.beta"))
    except ValueError as exc:
        raise ConfigError(f"sigma: {exc}") from exc


def _parse_grid(sec):
    if sec is None:
        return None
    sec = _strict(sec, {"x_min", "x_max", "n_points", "boundary"}, "grid")
    try:
        n = _number(sec.get("n_points"), "grid.n_points", integer=True)
        if n > 2048:
            raise ConfigError("grid.n_points: capped at 2048")
        return GridSpec(_number(sec.get("x_min"), "grid.x_min"), _number(sec.get("x_max"), "grid.x_max"),
                        n, sec.get("boundary", "dirichlet"))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _parse_dataclass(cls, sec, where, spec):
    """Fill ``cls`` from ``sec`` using ``spec``: key -> (kind, options)."""
    if sec is None:
        return None
    sec = _strict(sec, set(spec), where)
    kwargs = {}
    for key, (kind, opts) in spec.items():
        if key not in sec:
            continue
        value = sec[key]
        if kind == "list":
            kwargs[key] = tuple(_number_list(value, f"{where}.{key}", **opts))
        else:
            kwargs[key] = _number(value, f"{where}.{key}", **opts)
    return cls(**kwargs)


def _parse_kernel(sec, i):
    where = f"kernels[{i}]"
    allowed = {"lagrangian", "mode", "normalization", "t_total", "n_list", "references",
               "epsilon", "potential_point", "literal_printed"}
    sec = _strict(sec, allowed, where)
    lag = sec.get("lagrangian")
    if lag not in (L_BASE, L_PRIME):
        raise ConfigError(f"{where}.lagrangian: expected {L_BASE} or {L_PRIME}")
    mode = sec.get("mode", "euclidean")
    if mode not in TIME_MODES:
        raise ConfigError(f"{where}.mode: expected one of {TIME_MODES}")
    norm = sec.get("normalization", "gaussian-constant")
    if norm not in NORMALIZATIONS:
        raise ConfigError(f"{where}.normalization: expected one of {NORMALIZATIONS}")
    point = sec.get("potential_point", "midpoint")
    if point not in POTENTIAL_POINTS:
        raise ConfigError(f"{where}.potential_point: expected one of {POTENTIAL_POINTS}")
    refs = sec.get("references", ["spectral-H"])
    if not isinstance(refs, list) or not refs or any(r not in REFERENCES for r in refs):
        raise ConfigError(f"{where}.references: expected a non-empty list from {REFERENCES}")
    n_list = _number_list(sec.get("n_list"), f"{where}.n_list", integer=True, minimum=1)
    if max(n_list) > 1024:
        raise ConfigError(f"{where}.n_list: at most 1024 steps")
    literal = sec.get("literal_printed", False)
    if not isinstance(literal, bool):
        raise ConfigError(f"{where}.literal_printed: expected true/false")
    return KernelConfig(
        lagrangian=lag, mode=mode, normalization=norm,
        t_total=_number(sec.get("t_total"), f"{where}.t_total", positive=True),
        n_list=tuple(n_list), references=tuple(refs),
        epsilon=_number(sec.get("epsilon", DEFAULT_EPSILON), f"{where}.epsilon", minimum=0.0),
        potential_point=point, literal_printed=literal)


def _parse_output(sec):
    sec = _strict(sec, {"dir", "dump_matrices", "interior_fraction"}, "output")
    out = OutputConfig()
    kwargs = {}
    if "dir" in sec:
        if not isinstance(sec["dir"], str):
            raise ConfigError("output.dir: expected a string")
        kwargs["dir"] = sec["dir"]
    if "dump_matrices" in sec:
        if not isinstance(sec["dump_matrices"], bool):
            raise ConfigError("output.dump_matrices: expected true/false")
        kwargs["dump_matrices"] = sec["dump_matrices"]
    if "interior_fraction" in sec:
        f = _number(sec["interior_fraction"], "output.interior_fraction", positive=True)
        if f > 1:
            raise ConfigError("output.interior_fraction: must be <= 1")
        kwargs["interior_fraction"] = f
    return OutputConfig(**{**out.__dict__, **kwargs})


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a config mapping and build an ``ExperimentConfig``."""
    data = _strict(data, _TOP_KEYS, "config")
    raw = copy.deepcopy(data)
    name = data.get("name", "experiment")
    if not isinstance(name, str):
        raise ConfigError("name: expected a string")
    seed = _number(data.get("seed", 0), "seed", integer=True, minimum=0)
    if "potential" not in data:
        raise ConfigError("config: a potential section is required")
    potential = _parse_potential(data["potential"])
    sigma = _parse_sigma(data.get("sigma"))
    grid = _parse_grid(data.get("grid"))
    classical = _parse_dataclass(ClassicalConfig, (data["classical"] or {}) if "classical" in data else None, "classical", {
        "n_trajectories": ("num", {"integer": True, "minimum": 1}),
        "x0_range": ("num", {"positive": True}), "v0_range": ("num", {"positive": True}),
        "t_final": ("num", {"positive": True}), "tol": ("num", {"positive": True}),
        "n_samples": ("num", {"integer": True, "minimum": 2}),
        "n_construction_points": ("num", {"integer": True, "minimum": 1}),
    })
    momentum = _parse_dataclass(MomentumConfig, (data["momentum"] or {}) if "momentum" in data else None, "momentum", {
        "V_values": ("list", {"positive": True}), "n_random": ("num", {"integer": True, "minimum": 1}),
        "series_points": ("list", {"positive": True}), "hprime_points": ("list", {"positive": True}),
        "pde_p": ("num", {}), "pde_steps": ("list", {"positive": True}),
        "power_law_p": ("num", {"positive": True}), "asymptotic_p": ("list", {"positive": True}),
        "a": ("num", {}),
    })
    spectrum = None
    if "spectrum" in data:
        spectrum = _parse_dataclass(SpectrumConfig, data["spectrum"] or {}, "spectrum", {
            "n_levels": ("num", {"integer": True, "minimum": 1}),
        })
    kernels_raw = data.get("kernels") or []
    if not isinstance(kernels_raw, list):
        raise ConfigError("kernels: expected a list")
    kernels = tuple(_parse_kernel(k, i) for i, k in enumerate(kernels_raw))
    output = _parse_output(data.get("output"))

    requested = data.get("sub_experiments")
    if requested is None:
        chosen = []
        if classical is not None:
            chosen.append("classical-check")
        if momentum is not None:
            chosen.append("momentum-check")
        if spectrum is not None:
            chosen.append("spectrum")
        if any(k.lagrangian == L_BASE for k in kernels):
            chosen.append("lattice-vs-spectral")
        if any(k.lagrangian == L_PRIME for k in kernels):
            chosen.append("lprime-comparison")
        requested = chosen
    if not isinstance(requested, list) or any(s not in SUB_EXPERIMENTS for s in requested):
        raise ConfigError(f"sub_experiments: expected a list from {SUB_EXPERIMENTS}")
    needs_grid = {"spectrum", "lattice-vs-spectral", "lprime-comparison"} & set(requested)
    if needs_grid and grid is None:
        raise ConfigError(f"{sorted(needs_grid)} need a grid section")
    if "classical-check" in requested and classical is None:
        classical = ClassicalConfig()
    if "momentum-check" in requested and momentum is None:
        momentum = MomentumConfig()
    if "spectrum" in requested and spectrum is None:
        spectrum = SpectrumConfig()
    return ExperimentConfig(name, seed, potential, sigma, grid, classical, momentum, spectrum,
                            kernels, output, tuple(requested), raw)


def bundled_config_names():
    root = resources.files("sequivlab") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_config_path(name_or_path) -> Path:
    """A filesystem path, or the name of a bundled config (with or without .yaml)."""
    path = Path(name_or_path)
    if path.exists():
        return path
    stem = path.name[:-5] if path.name.endswith(".yaml") else path.name
    candidate = resources.files("sequivlab") / "configs" / f"{stem}.yaml"
    if candidate.is_file():
        return Path(str(candidate))
    raise FileNotFoundError(f"no config file or bundled config named {name_or_path!r}")


def load_config(name_or_path) -> ExperimentConfig:
    path = resolve_config_path(name_or_path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)
