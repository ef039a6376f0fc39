"""Experiment configuration: sweep grammar, curve-relative K and TOML files."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .. import equilibrium as eq

EXPERIMENTS = (
    "phase-diagram",
    "critical-curves",
    "mix-exact",
    "mix-couple",
    "coupling-contraction",
    "bottleneck",
    "scaling-fit",
)

CURVES = {"kc2": eq.kc2, "k1": eq.k1, "kc1": eq.kc1}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending flag or key."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _number(text, field_name, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(field_name, f"not a number: {text!r}") from None


def parse_sweep(text, field_name, kind=float):
    """Expand a sweep string into a list of values.

    Accepts comma-separated items, each a number, ``start:stop:step``
    (inclusive arithmetic) or ``start:stop:*factor`` (geometric).
    """
    text = str(text).strip()
    if not text:
        raise ConfigError(field_name, "empty value")
    values = []
    for item in text.split(","):
        item = item.strip()
        parts = item.split(":")
        if len(parts) == 1:
            values.append(_number(item, field_name, kind))
            continue
        if len(parts) != 3:
            raise ConfigError(field_name, f"expected start:stop:step, got {item!r}")
        start = _number(parts[0], field_name, float)
        stop = _number(parts[1], field_name, float)
        if parts[2].startswith("*"):
            factor = _number(parts[2][1:], field_name, float)
            if factor <= 1 or start <= 0:
                raise ConfigError(field_name, "geometric sweeps need start > 0 and factor > 1")
            v = start
            while v <= stop * (1 + 1e-12):
                values.append(kind(round(v, 12)) if kind is float else kind(round(v)))
                v *= factor
            continue
        step = _number(parts[2], field_name, float)
        if step <= 0 or stop < start:
            raise ConfigError(field_name, f"bad range {item!r}")
        # exact decimal stepping avoids 0.1-style drift in the grid
        f_start, f_step = Fraction(parts[0]), Fraction(parts[2])
        count = int(math.floor((Fraction(parts[1]) - f_start) / f_step)) + 1
        for i in range(count):
            v = float(f_start + i * f_step)
            values.append(kind(v) if kind is float else kind(round(v)))
    return values


_REL = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?(kc2|k1|kc1)\s*$")


@dataclass(frozen=True)
class KSpec:
    """Interaction strength: absolute, or ``factor * curve(beta)``."""

    value: float | None = None
    factor: float = 1.0
    curve: str | None = None

    def resolve(self, beta):
        if self.curve is None:
            return self.value
        try:
            return self.factor * float(CURVES[self.curve](beta))
        except eq.DomainError as exc:
            raise ConfigError("k", f"{self} undefined at beta={beta}: {exc}") from None

    def __str__(self):
        if self.curve is None:
            return repr(self.value)
        return f"{self.factor}*{self.curve}"


def parse_k(text):
    specs = []
    for item in str(text).split(","):
        m = _REL.match(item)
        if m:
            factor = float(m.group(1)) if m.group(1) else 1.0
            specs.append(KSpec(factor=factor, curve=m.group(2)))
        else:
            specs.extend(KSpec(value=v) for v in parse_sweep(item, "k"))
    return specs


@dataclass
class ExperimentConfig:
    experiment: str
    n: list[int] = field(default_factory=list)
    beta: list[float] = field(default_factory=list)
    k: list[KSpec] = field(default_factory=list)
    seed: int = 0
    threads: int = 1
    out: str | None = None
    json: bool = False
    eps: list[float] = field(default_factory=lambda: [0.25])
    replicas: int | None = None
    cap: int | None = None
    t_max: int | None = None
    tol: float = 1e-10
    all_starts: bool = False
    start: str = "all-plus"
    z: list[float] = field(default_factory=list)
    zprime: float | None = None
    mode: str = "profile"
    input: str | None = None
    x_col: str = "n"
    y_col: str = "t_mix"
    model: str = "poly_nlogn"
    trace: bool = False

    def to_dict(self):
        out = dict(self.__dict__)
        out["k"] = [str(s) for s in self.k]
        return out


_SWEEPS = {"n": lambda v: parse_sweep(v, "n", int), "beta": lambda v: parse_sweep(v, "beta"),
           "eps": lambda v: parse_sweep(v, "eps"), "z": lambda v: parse_sweep(v, "z"), "k": parse_k}
_SCALARS = {"seed": int, "threads": int, "replicas": int, "cap": int, "t_max": int, "tol": float,
            "zprime": float}
_REQUIRED = {
    "phase-diagram": ("beta", "k"),
    "critical-curves": ("beta",),
    "mix-exact": ("n", "beta", "k"),
    "mix-couple": ("n", "beta", "k"),
    "coupling-contraction": ("beta", "k"),
    "bottleneck": ("n", "beta", "k"),
    "scaling-fit": ("input",),
}


def load_toml(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError("config", str(exc)) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(key, "config files are flat; tables are not allowed")
    return {key.replace("-", "_"): value for key, value in data.items()}


def build_config(values):
    """Validate a flat mapping (file values already overridden by flags)."""
    experiment = values.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {EXPERIMENTS}, got {experiment!r}")
    cfg = ExperimentConfig(experiment=experiment)
    known = set(cfg.__dict__)
    for key, raw in values.items():
        if raw is None or key == "experiment":
            continue
        if key not in known:
            raise ConfigError(key, "unknown setting")
        if key in _SWEEPS:
            if isinstance(raw, list):
                raw = ",".join(map(str, raw))
            value = _SWEEPS[key](str(raw))
        elif key in _SCALARS:
            if isinstance(raw, bool):
                raise ConfigError(key, "expected a number")
            try:
                value = _SCALARS[key](raw)
            except (TypeError, ValueError):
                raise ConfigError(key, f"expected a number, got {raw!r}") from None
        else:
            value = raw
        setattr(cfg, key, value)
    for key in _REQUIRED[experiment]:
        if not getattr(cfg, key):
            raise ConfigError(key, f"required for {experiment}")
    if any(n < 1 for n in cfg.n):
        raise ConfigError("n", "system sizes must be positive")
    if any(b <= 0 for b in cfg.beta):
        raise ConfigError("beta", "inverse temperatures must be positive")
    if any(not 0 < e <= 1 for e in cfg.eps):
        raise ConfigError("eps", "must lie in (0, 1]")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if cfg.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    if cfg.replicas is not None and cfg.replicas < 1:
        raise ConfigError("replicas", "must be >= 1")
    if cfg.start not in ("all-plus", "all-minus", "all-zero"):
        raise ConfigError("start", "must be all-plus, all-minus or all-zero")
    if cfg.mode not in ("profile", "empirical"):
        raise ConfigError("mode", "must be profile or empirical")
    return cfg
