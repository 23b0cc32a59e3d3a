"""Monte Carlo checks of bootstrap consistency.

For each sample size the experiment compares the bootstrap pivot law on R
independent data paths with the sampling law of the statistic, estimated from
M further paths, and records the median sup-distance between the two CDFs.
"""
from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Union

import numpy as np

from . import __version__
from .core import (
    ScheduleParams,
    boot_mean_pivot,
    boot_ustat_pivot,
    partition,
    schedule_block_length,
)
from .errors import InvalidCDFError
from .kernels import GINI, LINEAR, PRODUCT, VARIANCE_HALF, Kernel, get_kernel, hoeffding_decompose
from .process_gen import (
    GeneratorSpec,
    analytic_long_run_variance,
    analytic_mean,
    analytic_variance,
    simulate,
)
from .rng import derive_seed

# a spec, or a test hook ``(n, seed) -> values``
Source = Union[GeneratorSpec, Callable[[int, int], np.ndarray]]

CALIBRATION_N = 10 ** 6


class CapacityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EmpiricalCDF:
    sorted_samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sorted_samples, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise InvalidCDFError("an empirical CDF needs at least one sample")
        if np.any(np.diff(s) < 0):
            raise InvalidCDFError("samples must be sorted ascending")
        object.__setattr__(self, "sorted_samples", s)

    @classmethod
    def from_samples(cls, samples) -> EmpiricalCDF:
        return cls(np.sort(np.asarray(samples, dtype=float)))

    def __len__(self) -> int:
        return self.sorted_samples.size

    def __call__(self, x) -> np.ndarray:
        s = self.sorted_samples
        return np.searchsorted(s, np.asarray(x, float), side="right") / s.size


def ks_distance(a: EmpiricalCDF, b: EmpiricalCDF) -> float:
    """Exact ``sup_x |F_a(x) - F_b(x)|``; both are step functions, so the
    supremum is attained at a jump point of one of them."""
    if len(a) == 0 or len(b) == 0:
        raise InvalidCDFError("ks_distance needs nonempty CDFs")
    jumps = np.union1d(a.sorted_samples, b.sorted_samples)
    return float(np.max(np.abs(a(jumps) - b(jumps))))


def ks_to_continuous(a: EmpiricalCDF, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup-distance to a continuous CDF, checking both sides of every jump."""
    s = a.sorted_samples
    f = cdf(s)
    i = np.arange(1, s.size + 1)
    return float(max(np.max(i / s.size - f), np.max(f - (i - 1) / s.size)))


def statistic_kernel(statistic: str) -> Kernel | None:
    return None if statistic == "mean" else get_kernel(statistic)


def _gaussian_sd(spec: GeneratorSpec) -> float | None:
    if spec.family in ("iid_gaussian", "ar1"):
        return math.sqrt(analytic_variance(spec))
    return None


def analytic_theta(spec: GeneratorSpec, kernel: Kernel) -> float | None:
    """``E h(X, Y)`` for independent copies of the marginal, where known."""
    mu = analytic_mean(spec)
    if kernel is VARIANCE_HALF:
        return analytic_variance(spec)
    if kernel is PRODUCT:
        return mu * mu
    if kernel is LINEAR:
        return 2.0 * mu
    if kernel is GINI:
        sd = _gaussian_sd(spec)
        if sd is not None:
            return 2.0 * sd / math.sqrt(math.pi)
        if spec.family == "doubling_map":
            return 1.0 / 3.0
    return None


def calibrated_theta(spec: GeneratorSpec, kernel: Kernel, seed: int,
                     n: int = CALIBRATION_N) -> float:
    """``E h(X, Y)`` from one long path, pairing points half a path apart."""
    x = simulate(spec, n, derive_seed(seed, "calibration")).values
    half = n // 2
    return float(np.mean(kernel.func(x[:half], x[half:2 * half])))


def centering(source: Source, statistic: str, seed: int) -> tuple[float, str]:
    """Population value of the statistic and where it came from.

    A callable source may carry its value as a ``center`` attribute.
    """
    if not isinstance(source, GeneratorSpec):
        return float(getattr(source, "center", 0.0)), "hook"
    kernel = statistic_kernel(statistic)
    if kernel is None:
        return analytic_mean(source), "analytic"
    theta = analytic_theta(source, kernel)
    if theta is not None:
        return theta, "analytic"
    return calibrated_theta(source, kernel, seed), "calibration_path"


def _path(source: Source, n: int, seed: int) -> np.ndarray:
    if isinstance(source, GeneratorSpec):
        return simulate(source, n, seed).values
    return np.asarray(source(n, seed), dtype=float)


def _map(fn, items, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _scaled_statistic(x: np.ndarray, kernel: Kernel | None, center: float) -> float:
    n = x.size
    if kernel is None:
        value = float(x.mean())
    else:
        value = 2.0 * kernel.pair_sum(x) / (n * (n - 1))
    return math.sqrt(n) * (value - center)


def sampling_realizations(source: Source, statistic: str, n: int, M: int, seed: int,
                          threads: int = 1, center: float | None = None) -> np.ndarray:
    """M draws of ``sqrt(n) * (T_n - T)`` in path order."""
    if M < 1:
        raise ValueError("M must be >= 1")
    kernel = statistic_kernel(statistic)
    if center is None:
        center = centering(source, statistic, seed)[0]
    return np.array(_map(
        lambda j: _scaled_statistic(_path(source, n, derive_seed(seed, "truth", n, j)),
                                    kernel, center),
        range(M), threads))


def sampling_distribution(source: Source, statistic: str, n: int, M: int, seed: int,
                          threads: int = 1) -> EmpiricalCDF:
    if M < 100:
        raise ValueError("sampling_distribution needs M >= 100")
    return EmpiricalCDF.from_samples(sampling_realizations(source, statistic, n, M, seed, threads))


@dataclass
class ExperimentRow:
    process: str
    statistic: str
    n: int
    p: int
    k: int
    B: int
    M: int
    ks_distance: float
    boot_var_mean: float
    target_sigma2: float
    wall_time: float
    ks_mean: float = field(default=float("nan"), metadata={"csv": False})
    ks_all: np.ndarray = field(default=None, repr=False, metadata={"csv": False})

    def __post_init__(self):
        if not 0.0 <= self.ks_distance <= 1.0:
            raise ValueError("ks_distance must lie in [0, 1]")
        if self.boot_var_mean < 0:
            raise ValueError("boot_var_mean must be nonnegative")


CSV_COLUMNS = tuple(f.name for f in fields(ExperimentRow) if f.metadata.get("csv", True))


@dataclass
class ExperimentReport:
    rows: list[ExperimentRow]
    seed: int
    meta: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path: str | Path | None = None, preamble: list[str] = (),
               wall_time: bool = True) -> str:
        lines = list(preamble)
        lines.append(f"# library_version={__version__}")
        lines.append(f"# master_seed={self.seed}")
        lines += [f"# {key}={value}" for key, value in self.meta.items()]
        lines.append(",".join(CSV_COLUMNS))
        for row in self.rows:
            cells = []
            for name in CSV_COLUMNS:
                value = getattr(row, name)
                if name == "wall_time" and not wall_time:
                    value = float("nan")
                cells.append(repr(value) if isinstance(value, float) else str(value))
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def process_id(source: Source) -> str:
    if not isinstance(source, GeneratorSpec):
        return getattr(source, "__name__", "hook")
    params = [f"{k}={v}" for k, v in sorted(source.params.items()) if k != "coeffs"]
    if "coeffs" in source.params:
        params.append("coeffs=" + ";".join(f"{a}:{b}:{g}" for a, b, g in source.params["coeffs"]))
    return source.family + (f"[{';'.join(params)}]" if params else "")


def estimated_cost(n: int, schedule: ScheduleParams, B: int, R: int) -> int:
    kp = (n // schedule_block_length(n, schedule)) * schedule_block_length(n, schedule)
    return kp * kp * B * R


def consistency_experiment(source: Source, statistic: str, n_grid, schedule: ScheduleParams,
                           B: int, M: int, R: int, seed: int, threads: int = 1,
                           budget: int | None = None) -> ExperimentReport:
    """One report row per n: median KS distance over R bootstrapped paths,
    mean exact bootstrap variance, and the target variance."""
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if min(B, M, R) < 1 or min(n_grid) < 2:
        raise ValueError("counts must be positive and n >= 2")
    kernel = statistic_kernel(statistic)
    center, center_source = centering(source, statistic, seed)
    meta = {"statistic": statistic, "centering": center_source, "R": str(R),
            "schedule": f"eps={schedule.eps!r};c={schedule.c!r};p_min={schedule.p_min}"}
    rows = []
    for n in n_grid:
        if budget is not None and estimated_cost(n, schedule, B, R) > budget:
            warnings.warn(f"n={n}: (kp)^2*B*R exceeds budget {budget}", CapacityWarning)
        start = time.perf_counter()
        p = schedule_block_length(n, schedule)
        part = partition(n, p)
        truth = sampling_realizations(source, statistic, n, M, seed, threads, center)
        truth_cdf = EmpiricalCDF.from_samples(truth)

        def one(r):
            x = _path(source, n, derive_seed(seed, "data", n, r))
            boot_seed = derive_seed(seed, "boot", n, r)
            if kernel is None:
                dist = boot_mean_pivot(x, part, B, boot_seed)
            else:
                dist = boot_ustat_pivot(x, part, kernel, B, boot_seed)
            ks = ks_distance(EmpiricalCDF.from_samples(dist.pivot_values), truth_cdf)
            return ks, dist.exact_variance

        results = _map(one, range(R), threads)
        ks_all = np.array([ks for ks, _ in results])
        variances = [v for _, v in results]
        if kernel is None and isinstance(source, GeneratorSpec):
            target = analytic_long_run_variance(source)
            meta["target"] = "analytic"
        else:
            target = float(np.var(truth, ddof=1))
            meta["target"] = "monte_carlo"
        rows.append(ExperimentRow(
            process_id(source), statistic, n, p, part.k, B, M,
            ks_distance=float(np.median(ks_all)),
            boot_var_mean=float(np.mean(variances)),
            target_sigma2=target,
            wall_time=time.perf_counter() - start,
            ks_mean=float(np.mean(ks_all)), ks_all=ks_all))
    return ExperimentReport(rows, seed, meta)


@dataclass(frozen=True)
class DegenerateRow:
    n: int
    variance: float
    second_moment: float


def degenerate_part_trend(source: Source, kernel: Kernel, n_grid, M: int, seed: int,
                          threads: int = 1) -> list[DegenerateRow]:
    """Monte Carlo size of ``sqrt(n) * U_n(h2)`` for the estimated degenerate part."""
    if M < 2:
        raise ValueError("M must be >= 2")
    rows = []
    for n in n_grid:
        vals = np.array(_map(
            lambda j: math.sqrt(n) * hoeffding_decompose(
                _path(source, n, derive_seed(seed, "degenerate", n, j)), kernel).degenerate_ustat(),
            range(M), threads))
        rows.append(DegenerateRow(n, float(np.var(vals, ddof=1)), float(np.mean(vals ** 2))))
    return rows
