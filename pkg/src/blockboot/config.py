"""``key = value`` run configuration with ``[generator]``, ``[bootstrap]`` and
``[experiment]`` sections.

Example::

    command = experiment
    seed = 7

    [generator]
    family = ar1
    phi = 0.5

    [bootstrap]
    statistic = mean
    B = 2000

    [experiment]
    n_grid = 512, 2048, 8192
    M = 2000
    R = 50
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import ScheduleParams
from .errors import ConfigError
from .kernels import BUILTIN
from .process_gen import FAMILIES, GeneratorSpec, make_spec

COMMANDS = ("generate", "bootstrap", "experiment")
STATISTICS = ("mean",) + tuple(BUILTIN)

_FAMILY_KEYS = {
    "iid_gaussian": (),
    "ar1": ("phi", "burn_in"),
    "doubling_map": ("tail_bits",),
    "garch11": ("alpha1", "alpha2", "alpha0", "burn_in"),
    "volterra2": ("coeffs",),
}
_REQUIRED_PARAMS = {"ar1": ("phi",), "garch11": ("alpha0", "alpha1", "alpha2")}

_KEYS = {
    "": {"command": str, "seed": int, "out": str},
    "generator": {"family": str, "n": int, "phi": float, "alpha0": float, "alpha1": float,
                  "alpha2": float, "tail_bits": int, "burn_in": int, "coeffs": str},
    "bootstrap": {"statistic": str, "p": int, "eps": float, "c": float, "p_min": int,
                  "B": int, "input": str},
    "experiment": {"n_grid": str, "M": int, "R": int, "budget": int},
}

SEED_MASK = (1 << 64) - 1


@dataclass
class RunConfig:
    command: str
    spec: GeneratorSpec | None = None
    n: int | None = None
    statistic: str = "mean"
    p: int | None = None
    schedule: ScheduleParams = field(default_factory=ScheduleParams)
    B: int = 2000
    M: int = 2000
    R: int = 50
    seed: int = 0
    out: str | None = None
    input: str | None = None
    n_grid: tuple[int, ...] = ()
    budget: int | None = None


def _parse_coeffs(text: str) -> tuple[tuple[int, int, float], ...]:
    out = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        u1, u2, g = item.split(":")
        out.append((int(u1), int(u2), float(g)))
    return tuple(out)


def _convert(kind, raw: str):
    if kind is int:
        return int(raw, 0)
    if kind is float:
        return float(raw)
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse and validate; every error names the offending line."""
    section = ""
    values: dict[tuple[str, str], tuple[object, int]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1].strip() not in _KEYS or not line[1:-1].strip():
                raise ConfigError(f"line {lineno}: unknown section {line!r}")
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        where = f"[{section}]" if section else "top level"
        if key not in _KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} at {where}")
        if (section, key) in values:
            first = values[(section, key)][1]
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} at {where} (first set on line {first})")
        try:
            value = _convert(_KEYS[section][key], raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: malformed value {raw!r} for {key!r}") from None
        values[(section, key)] = (value, lineno)
    return _build(values)


def _build(values) -> RunConfig:
    def get(section, key, default=None):
        return values[(section, key)][0] if (section, key) in values else default

    def line_of(section, key):
        return values[(section, key)][1] if (section, key) in values else 0

    def fail(section, key, message):
        lineno = line_of(section, key)
        raise ConfigError(f"line {lineno}: {message}" if lineno else message)

    command = get("", "command")
    if command is None:
        raise ConfigError("missing required key 'command'")
    if command not in COMMANDS:
        fail("", "command", f"command must be one of {COMMANDS}, got {command!r}")
    cfg = RunConfig(command=command)
    cfg.seed = get("", "seed", 0)
    if not 0 <= cfg.seed <= SEED_MASK:
        fail("", "seed", "seed must be an unsigned 64-bit integer")
    cfg.out = get("", "out")
    cfg.input = get("bootstrap", "input")

    family = get("generator", "family")
    if family is None:
        if not (command == "bootstrap" and cfg.input):
            raise ConfigError("missing required key 'family' in [generator]")
    else:
        if family not in FAMILIES:
            fail("generator", "family", f"unknown family {family!r}; expected one of {FAMILIES}")
        params = {}
        for key in ("phi", "alpha0", "alpha1", "alpha2", "tail_bits", "burn_in", "coeffs"):
            if ("generator", key) not in values:
                continue
            if key not in _FAMILY_KEYS[family]:
                fail("generator", key, f"key {key!r} does not apply to family {family}")
            value = get("generator", key)
            if key == "coeffs":
                try:
                    value = _parse_coeffs(value)
                except ValueError:
                    fail("generator", key, "coeffs must be comma separated u1:u2:g triples")
            params[key] = value
        for key in _REQUIRED_PARAMS.get(family, ()):
            if key not in params:
                raise ConfigError(f"missing required key {key!r} in [generator] for {family}")
        try:
            cfg.spec = make_spec(family, **params)
        except ValueError as exc:
            keys = [k for k in _FAMILY_KEYS[family] if ("generator", k) in values]
            if params.get("burn_in", 0) < 0:
                keys = ["burn_in"]
            fail("generator", keys[0] if keys else "family", f"{exc} (stationarity / validity bound)")

    cfg.n = get("generator", "n")
    if command in ("generate", "bootstrap") and cfg.n is None and not cfg.input:
        raise ConfigError("missing required key 'n' in [generator]")
    if cfg.n is not None and cfg.n < 1:
        fail("generator", "n", "n must be positive")

    cfg.statistic = get("bootstrap", "statistic", "mean")
    if cfg.statistic not in STATISTICS:
        fail("bootstrap", "statistic", f"statistic must be one of {STATISTICS}")
    cfg.p = get("bootstrap", "p")
    if cfg.p is not None and cfg.p < 1:
        fail("bootstrap", "p", "block length p must be positive")
    try:
        defaults = ScheduleParams()
        cfg.schedule = ScheduleParams(get("bootstrap", "eps", defaults.eps),
                                      get("bootstrap", "c", defaults.c),
                                      get("bootstrap", "p_min", defaults.p_min))
    except ValueError as exc:
        key = next(k for k in ("eps", "c", "p_min") if ("bootstrap", k) in values)
        fail("bootstrap", key, str(exc))
    for section, key in (("bootstrap", "B"), ("experiment", "M"), ("experiment", "R")):
        value = get(section, key, getattr(cfg, key))
        if value < 1:
            fail(section, key, f"{key} must be positive")
        setattr(cfg, key, value)
    cfg.budget = get("experiment", "budget")
    if cfg.budget is not None and cfg.budget < 1:
        fail("experiment", "budget", "budget must be positive")

    grid = get("experiment", "n_grid")
    if grid is not None:
        try:
            cfg.n_grid = tuple(int(v) for v in grid.split(",") if v.strip())
        except ValueError:
            fail("experiment", "n_grid", "n_grid must be comma separated integers")
        if not cfg.n_grid or any(b <= a for a, b in zip(cfg.n_grid, cfg.n_grid[1:])):
            fail("experiment", "n_grid", "n_grid must be nonempty and strictly increasing")
        if min(cfg.n_grid) < 2:
            fail("experiment", "n_grid", "every n in n_grid must be >= 2")
    if command == "experiment" and not cfg.n_grid:
        raise ConfigError("missing required key 'n_grid' in [experiment]")
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Canonical text that :func:`parse_config` maps back to ``cfg``."""
    lines = [f"command = {cfg.command}", f"seed = {cfg.seed}"]
    if cfg.out is not None:
        lines.append(f"out = {cfg.out}")
    if cfg.spec is not None or cfg.n is not None:
        lines.append("[generator]")
        if cfg.spec is not None:
            lines.append(f"family = {cfg.spec.family}")
            for key in sorted(cfg.spec.params):
                value = cfg.spec.params[key]
                if key == "coeffs":
                    value = ", ".join(f"{a}:{b}:{g!r}" for a, b, g in value)
                elif isinstance(value, float):
                    value = repr(value)
                lines.append(f"{key} = {value}")
            if "burn_in" in _FAMILY_KEYS[cfg.spec.family]:
                lines.append(f"burn_in = {cfg.spec.burn_in}")
        if cfg.n is not None:
            lines.append(f"n = {cfg.n}")
    lines.append("[bootstrap]")
    lines.append(f"statistic = {cfg.statistic}")
    if cfg.p is not None:
        lines.append(f"p = {cfg.p}")
    lines += [f"eps = {cfg.schedule.eps!r}", f"c = {cfg.schedule.c!r}",
              f"p_min = {cfg.schedule.p_min}", f"B = {cfg.B}"]
    if cfg.input is not None:
        lines.append(f"input = {cfg.input}")
    lines.append("[experiment]")
    if cfg.n_grid:
        lines.append("n_grid = " + ", ".join(str(n) for n in cfg.n_grid))
    lines += [f"M = {cfg.M}", f"R = {cfg.R}"]
    if cfg.budget is not None:
        lines.append(f"budget = {cfg.budget}")
    return "\n".join(lines) + "\n"
