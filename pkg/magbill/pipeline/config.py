"""
Experiment Configuration Module
Parses the sectioned `key = value` experiment files into typed, validated
ExperimentConfig objects.
"""
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from magbill.domain.boundary.conditions import FAMILIES
from magbill.domain.errors import ConfigError
from magbill.domain.geometry.grid import KINDS

logger = logging.getLogger(__name__)

EXPERIMENTS = ("solve", "gauge_check", "flux_sweep", "robin_sweep", "chiral_sweep", "convergence", "landau", "sae1d")
GAUGES = ("none", "landau", "symmetric", "ab", "sum")
COMPARISONS = ("landau", "symmetric", "perturbed")
ALPHA_EXPRESSIONS = ("cos_perimeter", "sin_perimeter")
METHODS = ("iterative", "dense")
FORMATS = ("csv", "dump")
POTENTIALS_1D = ("none", "constant", "sine")


def _float_list(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def _int_list(text: str) -> List[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def _complex_list(text: str) -> List[complex]:
    return [complex(item.strip().replace(" ", "")) for item in text.split(",") if item.strip()]


def _word_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _alpha(text: str) -> Union[float, str]:
    try:
        return float(text)
    except ValueError:
        if text not in ALPHA_EXPRESSIONS:
            raise ValueError(f"alpha must be a number or one of {', '.join(ALPHA_EXPRESSIONS)}")
        return text


SCHEMA = {
    "experiment": {"kind": str},
    "domain": {
        "kind": str, "a": float, "b": float, "nx": int, "ny": int, "radius": float,
        "r_in": float, "r_out": float, "nr": int, "ntheta": int,
    },
    "physics": {"hbar": float, "e": float, "m": float},
    "gauge": {"gauge": str, "B": float, "phi": float, "compare": str, "perturbation": float},
    "bc": {
        "bc": str, "alpha": _alpha, "beta": float,
        "inner_bc": str, "inner_alpha": _alpha, "inner_beta": float,
    },
    "solver": {"method": str, "k": int, "tol": float, "seed": int},
    "sweep": {"parameter": str, "values": _float_list, "resolutions": _int_list},
    "sae1d": {
        "length": float, "n": int, "u": _complex_list, "theta": _float_list,
        "potential": str, "amplitude": float,
    },
    "output": {"directory": str, "formats": _word_list},
}


@dataclass
class DomainSection:
    kind: str = "rectangle"
    a: float = 1.0
    b: float = 1.0
    nx: int = 32
    ny: int = 32
    radius: float = 1.0
    r_in: float = 0.5
    r_out: float = 1.0
    nr: int = 32
    ntheta: int = 64

    def dimensions(self) -> dict:
        if self.kind == "rectangle":
            return {"a": self.a, "b": self.b, "nx": self.nx, "ny": self.ny}
        if self.kind == "disk":
            return {"radius": self.radius, "nr": self.nr, "ntheta": self.ntheta}
        return {"r_in": self.r_in, "r_out": self.r_out, "nr": self.nr, "ntheta": self.ntheta}


@dataclass
class PhysicsSection:
    hbar: float = 1.0
    e: float = 1.0
    m: float = 1.0


@dataclass
class GaugeSection:
    gauge: str = "none"
    B: float = 0.0
    phi: float = 0.0
    compare: Optional[str] = None
    perturbation: float = 0.1


@dataclass
class BCSection:
    bc: str = "dirichlet"
    alpha: Optional[Union[float, str]] = None
    beta: Optional[float] = None
    inner_bc: Optional[str] = None
    inner_alpha: Optional[Union[float, str]] = None
    inner_beta: Optional[float] = None


@dataclass
class SolverSection:
    method: str = "iterative"
    k: int = 5
    tol: float = 1e-9
    seed: int = 0


@dataclass
class SweepSection:
    parameter: Optional[str] = None
    values: List[float] = field(default_factory=list)
    resolutions: List[int] = field(default_factory=list)


@dataclass
class Sae1dSection:
    length: float = 3.141592653589793
    n: int = 2000
    u: List[complex] = field(default_factory=list)
    theta: List[float] = field(default_factory=list)
    potential: str = "none"
    amplitude: float = 1.0


@dataclass
class OutputSection:
    directory: str = "results"
    formats: List[str] = field(default_factory=lambda: ["csv"])


SECTIONS = {
    "domain": DomainSection,
    "physics": PhysicsSection,
    "gauge": GaugeSection,
    "bc": BCSection,
    "solver": SolverSection,
    "sweep": SweepSection,
    "sae1d": Sae1dSection,
    "output": OutputSection,
}


@dataclass
class ExperimentConfig:
    kind: str = "solve"
    domain: DomainSection = field(default_factory=DomainSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    gauge: GaugeSection = field(default_factory=GaugeSection)
    bc: BCSection = field(default_factory=BCSection)
    solver: SolverSection = field(default_factory=SolverSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    sae1d: Sae1dSection = field(default_factory=Sae1dSection)
    output: OutputSection = field(default_factory=OutputSection)
    source: str = ""

    def echo(self) -> Dict[str, object]:
        """Flattened `section.key` view of every setting, defaults included."""
        flat = {"experiment.kind": self.kind}
        for name in SECTIONS:
            for key, value in asdict(getattr(self, name)).items():
                flat[f"{name}.{key}"] = value
        return flat


def _tokenize(text: str) -> Dict[str, Dict[str, Tuple[str, int]]]:
    entries: Dict[str, Dict[str, Tuple[str, int]]] = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"malformed section header '{raw.strip()}'", number)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", number)
            entries.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{raw.strip()}'", number)
        if section is None:
            raise ConfigError("key outside of any [section]", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", number)
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in [{section}]", number)
        if key in entries[section]:
            first = entries[section][key][1]
            raise ConfigError(f"duplicate key '{key}' in [{section}] (lines {first} and {number})", number)
        entries[section][key] = (value, number)
    return entries


def _convert(section: str, key: str, value: str, line: int):
    try:
        return SCHEMA[section][key](value)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {section}.{key}: '{value}' ({exc})", line) from None


def _choice(value, options, where: str) -> None:
    if value is not None and value not in options:
        raise ConfigError(f"{where} must be one of {', '.join(options)}, got '{value}'")


def validate(config: ExperimentConfig) -> ExperimentConfig:
    """Admissibility of the combined settings; raises ConfigError with an explanation."""
    _choice(config.kind, EXPERIMENTS, "experiment.kind")
    _choice(config.domain.kind, KINDS, "domain.kind")
    _choice(config.gauge.gauge, GAUGES, "gauge.gauge")
    _choice(config.gauge.compare, COMPARISONS, "gauge.compare")
    _choice(config.bc.bc, FAMILIES, "bc.bc")
    _choice(config.bc.inner_bc, FAMILIES, "bc.inner_bc")
    _choice(config.solver.method, METHODS, "solver.method")
    _choice(config.sae1d.potential, POTENTIALS_1D, "sae1d.potential")
    for name in config.output.formats:
        _choice(name, FORMATS, "output.formats")

    if min(config.physics.hbar, config.physics.e, config.physics.m) <= 0:
        raise ConfigError("hbar, e and m must be positive")
    if config.solver.k < 1:
        raise ConfigError(f"solver.k must be at least 1, got {config.solver.k}")
    if not config.solver.tol > 0:
        raise ConfigError(f"solver.tol must be positive, got {config.solver.tol}")

    annulus = config.domain.kind == "annulus"
    if config.kind != "sae1d":
        if config.gauge.gauge in ("ab", "sum") and not annulus:
            raise ConfigError(f"AB requires annulus (gauge = {config.gauge.gauge}, domain = {config.domain.kind})")
        for family, alpha, beta, where in (
            (config.bc.bc, config.bc.alpha, config.bc.beta, "bc"),
            (config.bc.inner_bc, config.bc.inner_alpha, config.bc.inner_beta, "bc.inner"),
        ):
            if family in ("robin", "chiral") and alpha is None and config.kind not in ("robin_sweep", "chiral_sweep"):
                raise ConfigError(f"{where}: {family} boundary condition needs alpha")
            if family == "chiral" and beta is None and config.kind != "chiral_sweep":
                raise ConfigError(f"{where}: chiral boundary condition needs beta")
        if config.bc.inner_bc is not None and not annulus:
            raise ConfigError("inner_bc applies to the hole of an annulus only")

    if config.kind == "gauge_check" and config.gauge.compare is None:
        raise ConfigError("gauge_check needs gauge.compare")
    if config.kind == "flux_sweep" and not annulus:
        raise ConfigError("flux_sweep requires annulus")
    if config.kind == "chiral_sweep" and config.domain.kind == "rectangle":
        raise ConfigError("chiral_sweep requires a disk or an annulus")
    if config.kind == "landau" and config.domain.kind != "disk":
        raise ConfigError("landau requires a disk")
    if config.kind in ("flux_sweep", "robin_sweep", "chiral_sweep"):
        values = config.sweep.values
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep.values must be strictly increasing")
    if config.kind == "convergence" and len(config.sweep.resolutions) < 3:
        raise ConfigError("convergence needs at least three sweep.resolutions")
    if config.kind == "sae1d":
        if not config.sae1d.u and not config.sae1d.theta:
            raise ConfigError("sae1d needs either u (four complex entries) or theta values")
        if config.sae1d.u and config.sae1d.theta:
            raise ConfigError("sae1d takes either u or theta values, not both")
        if config.sae1d.u and len(config.sae1d.u) != 4:
            raise ConfigError(f"sae1d.u needs four complex entries, got {len(config.sae1d.u)}")
    return config


def _looks_like_path(source, text: str) -> bool:
    # a single line with no '=' and no section header cannot be config text
    if isinstance(source, os.PathLike):
        return True
    stripped = text.strip()
    return "\n" not in text and bool(stripped) and "=" not in stripped and not stripped.startswith("[")


def parse_config(source: Union[str, os.PathLike]) -> ExperimentConfig:
    """
    Read an experiment config from a path or from its text.

    Args:
        source: Path to a config file, or the config text itself.

    Returns:
        ExperimentConfig: Typed settings with defaults applied.

    Raises:
        FileNotFoundError: source names a path that does not exist.
    """
    text = str(source)
    if _looks_like_path(source, text):
        with open(text, "r", encoding="utf-8") as f:
            text = f.read()
    entries = _tokenize(text)
    config = ExperimentConfig(source=text)
    for section, values in entries.items():
        converted = {key: _convert(section, key, value, line) for key, (value, line) in values.items()}
        if section == "experiment":
            config.kind = converted.get("kind", config.kind)
            continue
        target = getattr(config, section)
        for key, value in converted.items():
            setattr(target, key, value)
    logger.debug("parsed %s experiment with %d sections", config.kind, len(entries))
    return validate(config)
