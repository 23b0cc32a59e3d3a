"""Seeded simulators for stationary dependent processes.

Families: i.i.d. standard normal, Gaussian AR(1), the doubling map driven by
fair bits, GARCH(1,1) with normal innovations, and a finite second-order
Volterra series. All randomness comes from :func:`blockboot.rng.stream`, so a
path is a pure function of ``(spec, n, seed)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.signal import lfilter

from .errors import (
    InvalidCoefficientError,
    InvalidLengthError,
    NonstationaryParameterError,
)
from .rng import stream

FAMILIES = ("iid_gaussian", "ar1", "doubling_map", "garch11", "volterra2")
DECAY_CLASSES = ("geometric", "polynomial", "none")

# documented decay of the mixing / NED coefficients for each family
_DECAY = {
    "iid_gaussian": "none",
    "ar1": "geometric",
    "doubling_map": "geometric",
    "garch11": "geometric",
    "volterra2": "geometric",
}

DEFAULT_BURN_IN = 1000
DEFAULT_TAIL_BITS = 64


@dataclass(frozen=True)
class GeneratorSpec:
    """Family name, parameters and burn-in of a simulated process.

    ``params`` keys by family: ``phi`` (ar1); ``alpha0, alpha1, alpha2``
    (garch11); ``tail_bits`` (doubling_map); ``coeffs`` as a tuple of
    ``(u1, u2, g)`` triples (volterra2).
    """

    family: str
    params: dict[str, Any] = field(default_factory=dict)
    burn_in: int = 0
    decay_class: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.burn_in < 0:
            raise InvalidLengthError("burn_in must be nonnegative")
        if not self.decay_class:
            object.__setattr__(self, "decay_class", _DECAY[self.family])
        if self.decay_class not in DECAY_CLASSES:
            raise ValueError(f"unknown decay class {self.decay_class!r}")
        _validate_params(self.family, self.params)

    def describe(self) -> str:
        parts = [f"generator={self.family}"]
        for key in sorted(self.params):
            value = self.params[key]
            if key == "coeffs":
                value = ";".join(f"{u1}:{u2}:{g!r}" for u1, u2, g in value)
            parts.append(f"{key}={value}")
        parts.append(f"burn_in={self.burn_in}")
        return " ".join(parts)


def _validate_params(family: str, params: dict[str, Any]) -> None:
    if family == "ar1":
        phi = params["phi"]
        if not abs(phi) < 1:
            raise NonstationaryParameterError(f"ar1 needs |phi| < 1, got phi={phi}")
    elif family == "garch11":
        a0, a1, a2 = params["alpha0"], params["alpha1"], params["alpha2"]
        if not (a0 > 0 and a1 >= 0 and a2 >= 0):
            raise NonstationaryParameterError(
                "garch11 needs alpha0 > 0, alpha1 >= 0, alpha2 >= 0")
        if not a1 + a2 < 1:
            raise NonstationaryParameterError(
                f"garch11 needs alpha1 + alpha2 < 1, got {a1 + a2}")
    elif family == "doubling_map":
        bits = params.get("tail_bits", DEFAULT_TAIL_BITS)
        if not 1 <= bits <= 64:
            raise InvalidLengthError("tail_bits must be in 1..64")
    elif family == "volterra2":
        for u1, u2, _ in params.get("coeffs", ()):
            if u1 < 0 or u2 < 0:
                raise InvalidCoefficientError("Volterra lags must be nonnegative")
            if u1 == u2:
                raise InvalidCoefficientError(
                    f"Volterra coefficient on the diagonal u1 = u2 = {u1} must be zero")


@dataclass
class TimeSeries:
    values: np.ndarray
    spec: GeneratorSpec | None = None  # None means external data
    seed: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise InvalidLengthError("a time series needs n >= 1 values")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("time series values must be finite")

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    def header(self) -> str:
        source = self.spec.describe() if self.spec is not None else "generator=external"
        return f"# {source} seed={self.seed}"

    def to_csv(self, path: str | Path | None = None) -> str:
        lines = [self.header()] + [repr(float(v)) for v in self.values]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def read_series_csv(path: str | Path) -> TimeSeries:
    """Read a single-column series; ``#`` lines are skipped."""
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        values.append(float(line))
    return TimeSeries(np.array(values))


def _check_n(n: int) -> None:
    if n < 1:
        raise InvalidLengthError(f"series length must be >= 1, got {n}")


def innovations(seed: int, size: int) -> np.ndarray:
    """Standard normal innovation stream shared by the Gaussian-driven families."""
    return stream(seed, "innovations").standard_normal(size)


def gen_iid_gaussian(n: int, seed: int) -> TimeSeries:
    _check_n(n)
    return TimeSeries(innovations(seed, n), GeneratorSpec("iid_gaussian"), seed)


def gen_ar1(phi: float, n: int, seed: int, burn_in: int = DEFAULT_BURN_IN,
            eps: np.ndarray | None = None) -> TimeSeries:
    """Gaussian AR(1) path started from its stationary law.

    ``eps`` overrides the innovation stream (length ``burn_in + n``).
    """
    _check_n(n)
    spec = GeneratorSpec("ar1", {"phi": phi}, burn_in)
    e = innovations(seed, burn_in + n) if eps is None else np.asarray(eps, float)[:burn_in + n]
    x = np.empty(burn_in + n)
    x[0] = e[0] / math.sqrt(1.0 - phi * phi)
    if x.size > 1:
        x[1:], _ = lfilter([1.0], [1.0, -phi], e[1:], zi=[phi * x[0]])
    return TimeSeries(x[burn_in:], spec, seed)


def gen_doubling_map(n: int, seed: int, tail_bits: int = DEFAULT_TAIL_BITS,
                     bits: np.ndarray | None = None) -> TimeSeries:
    """Binary-expansion representation of the doubling map.

    ``X_i = sum_j 2^-(j+1) Z_{i+j}`` over ``tail_bits`` fair bits; the sum is
    formed exactly in a 64-bit integer and rounded once to float.
    """
    _check_n(n)
    spec = GeneratorSpec("doubling_map", {"tail_bits": tail_bits})
    if bits is None:
        bits = stream(seed, "bits").integers(0, 2, size=n + tail_bits)
    z = np.asarray(bits, dtype=np.uint64)[:n + tail_bits]
    words = np.zeros(n, dtype=np.uint64)
    for j in range(tail_bits):
        words |= z[j:j + n] << np.uint64(tail_bits - 1 - j)
    x = words.astype(float) * 2.0 ** -tail_bits
    return TimeSeries(x, spec, seed)


def gen_garch11(alpha0: float, alpha1: float, alpha2: float, n: int, seed: int,
                burn_in: int = DEFAULT_BURN_IN, eps: np.ndarray | None = None) -> TimeSeries:
    """GARCH(1,1) with the variance recursion started at its unconditional value."""
    _check_n(n)
    spec = GeneratorSpec("garch11", {"alpha0": alpha0, "alpha1": alpha1, "alpha2": alpha2},
                         burn_in)
    z = innovations(seed, burn_in + n) if eps is None else np.asarray(eps, float)[:burn_in + n]
    s2 = alpha0 / (1.0 - alpha1 - alpha2)
    out = np.empty(z.size)
    for t, zt in enumerate(z.tolist()):
        x = math.sqrt(s2) * zt
        out[t] = x
        s2 = alpha0 + alpha1 * x * x + alpha2 * s2
    return TimeSeries(out[burn_in:], spec, seed)


def _normalize_coeffs(coeffs) -> tuple[tuple[int, int, float], ...]:
    return tuple((int(u1), int(u2), float(g)) for u1, u2, g in coeffs)


def gen_volterra2(coeffs, n: int, seed: int, eps: np.ndarray | None = None) -> TimeSeries:
    """``X_t = sum g(u1, u2) Z_{t-u1} Z_{t-u2}`` over a finite off-diagonal table."""
    _check_n(n)
    table = _normalize_coeffs(coeffs)
    spec = GeneratorSpec("volterra2", {"coeffs": table})
    lag = max((max(u1, u2) for u1, u2, _ in table), default=0)
    z = innovations(seed, lag + n) if eps is None else np.asarray(eps, float)[:lag + n]
    x = np.zeros(n)
    for u1, u2, g in table:
        x += g * z[lag - u1:lag - u1 + n] * z[lag - u2:lag - u2 + n]
    return TimeSeries(x, spec, seed)


def make_spec(family: str, **params) -> GeneratorSpec:
    """Spec with family defaults filled in."""
    burn_in = params.pop("burn_in", DEFAULT_BURN_IN if family in ("ar1", "garch11") else 0)
    if family == "doubling_map":
        params.setdefault("tail_bits", DEFAULT_TAIL_BITS)
    if family == "volterra2":
        params["coeffs"] = _normalize_coeffs(params.get("coeffs", ()))
    return GeneratorSpec(family, params, burn_in)


def simulate(spec: GeneratorSpec, n: int, seed: int) -> TimeSeries:
    p = spec.params
    if spec.family == "iid_gaussian":
        return gen_iid_gaussian(n, seed)
    if spec.family == "ar1":
        return gen_ar1(p["phi"], n, seed, spec.burn_in)
    if spec.family == "doubling_map":
        return gen_doubling_map(n, seed, p.get("tail_bits", DEFAULT_TAIL_BITS))
    if spec.family == "garch11":
        return gen_garch11(p["alpha0"], p["alpha1"], p["alpha2"], n, seed, spec.burn_in)
    return gen_volterra2(p.get("coeffs", ()), n, seed)


def analytic_mean(spec: GeneratorSpec) -> float:
    return 0.5 if spec.family == "doubling_map" else 0.0


def analytic_variance(spec: GeneratorSpec) -> float:
    """Stationary marginal variance."""
    p = spec.params
    if spec.family == "iid_gaussian":
        return 1.0
    if spec.family == "ar1":
        return 1.0 / (1.0 - p["phi"] ** 2)
    if spec.family == "doubling_map":
        return 1.0 / 12.0
    if spec.family == "garch11":
        return p["alpha0"] / (1.0 - p["alpha1"] - p["alpha2"])
    return _volterra_autocov(p.get("coeffs", ()), 0)


def _volterra_symmetric(coeffs) -> dict[tuple[int, int], float]:
    sym: dict[tuple[int, int], float] = {}
    for u1, u2, g in coeffs:
        key = (min(u1, u2), max(u1, u2))
        sym[key] = sym.get(key, 0.0) + g
    return sym


def _volterra_autocov(coeffs, h: int) -> float:
    # distinct-lag products Z_a Z_b are orthonormal, so only shifted pairs correlate
    sym = _volterra_symmetric(coeffs)
    return sum(g * sym.get((a + h, b + h), 0.0) for (a, b), g in sym.items())


def analytic_long_run_variance(spec: GeneratorSpec) -> float:
    """``Var X_1 + 2 sum_k Cov(X_1, X_{1+k})`` in closed form."""
    p = spec.params
    if spec.family == "iid_gaussian":
        return 1.0
    if spec.family == "ar1":
        return 1.0 / (1.0 - p["phi"]) ** 2
    if spec.family == "doubling_map":
        # Cov(X_1, X_{1+k}) = 2^-k / 12
        return 0.25
    if spec.family == "garch11":
        return analytic_variance(spec)
    coeffs = p.get("coeffs", ())
    span = max((max(u1, u2) for u1, u2, _ in coeffs), default=0)
    return _volterra_autocov(coeffs, 0) + 2.0 * sum(
        _volterra_autocov(coeffs, h) for h in range(1, span + 1))
