"""Exact small-instance bootstrap laws and Monte Carlo long-run variance.

These are test oracles: they enumerate or convolve the resampling law
directly instead of reusing the closed forms in :mod:`blockboot.core`.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BlockPartition, _blocks_matrix
from .errors import CapacityError
from .kernels import Kernel
from .process_gen import GeneratorSpec, analytic_mean, simulate
from .rng import derive_seed

MERGE_TOL = 1e-12
MAX_CONVOLUTION_K = 12
MAX_ASSIGNMENTS = 10 ** 6


@dataclass(frozen=True)
class DiscreteLaw:
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.probs.shape or self.values.ndim != 1:
            raise ValueError("values and probs must be matching 1-d arrays")
        if np.any(self.probs <= 0):
            raise ValueError("probabilities must be positive")
        if abs(float(np.sum(self.probs)) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("support must be strictly ascending")

    @property
    def support(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.values - mu) ** 2, self.probs))

    def cdf(self, x) -> np.ndarray:
        idx = np.searchsorted(self.values, np.asarray(x, float), side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return np.minimum(cum[idx], 1.0)

    def to_csv(self, path: str | Path | None = None) -> str:
        lines = ["value,prob"] + [f"{v!r},{p!r}" for v, p in self.support]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _merge(values: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort and merge values closer than MERGE_TOL to their group's first value."""
    order = np.argsort(values, kind="stable")
    values = values[order]
    counts = counts[order]
    out_v: list[float] = []
    out_c: list[int] = []
    for v, c in zip(values.tolist(), counts.tolist()):
        if out_v and abs(v - out_v[-1]) <= MERGE_TOL * max(1.0, abs(v)):
            out_c[-1] += c
        else:
            out_v.append(v)
            out_c.append(c)
    return np.array(out_v), np.array(out_c, dtype=np.int64)


def _law(values: np.ndarray, counts: np.ndarray, total: int) -> DiscreteLaw:
    values, counts = _merge(values, counts)
    return DiscreteLaw(values, counts / total)


def exact_mean_law(series, part: BlockPartition) -> DiscreteLaw:
    """Law of ``sqrt(kp) * (mean* - mean_kp)`` by k-fold convolution of block sums."""
    k = part.k
    if k > MAX_CONVOLUTION_K:
        raise CapacityError(f"exact mean law supports k <= {MAX_CONVOLUTION_K}, got k={k}")
    blocks = _blocks_matrix(series, part)
    base_v, base_c = _merge(blocks.sum(axis=1), np.ones(k, dtype=np.int64))
    sums_v, sums_c = np.array([0.0]), np.array([1], dtype=np.int64)
    for _ in range(k):
        v = (sums_v[:, None] + base_v[None, :]).ravel()
        c = (sums_c[:, None] * base_c[None, :]).ravel()
        sums_v, sums_c = _merge(v, c)
    mean_kp = float(blocks.mean())
    pivots = math.sqrt(part.used) * (sums_v / part.used - mean_kp)
    return _law(pivots, sums_c, k ** k)


def _assignments(k: int) -> np.ndarray:
    return np.array(list(itertools.product(range(k), repeat=k)), dtype=int)


def exact_mean_law_enumerated(series, part: BlockPartition) -> DiscreteLaw:
    """Same law as :func:`exact_mean_law` by listing all k^k resamples."""
    k = part.k
    if k ** k > MAX_ASSIGNMENTS:
        raise CapacityError(f"k^k = {k ** k} resamples exceeds {MAX_ASSIGNMENTS}")
    blocks = _blocks_matrix(series, part)
    mean_kp = float(blocks.mean())
    draws = _assignments(k)
    means = blocks[draws].reshape(draws.shape[0], -1).mean(axis=1)
    pivots = math.sqrt(part.used) * (means - mean_kp)
    return _law(pivots, np.ones(draws.shape[0], dtype=np.int64), k ** k)


def enumerate_ustat(series, part: BlockPartition, kernel: Kernel) -> np.ndarray:
    """U* of every one of the k^k equally likely resamples, by direct pair sums."""
    k = part.k
    if k ** k > MAX_ASSIGNMENTS:
        raise CapacityError(f"k^k = {k ** k} resamples exceeds {MAX_ASSIGNMENTS}")
    m = part.used
    if m < 2:
        raise CapacityError("kp must be at least 2")
    blocks = _blocks_matrix(series, part)
    draws = _assignments(k)
    upper = np.triu(np.ones((m, m), dtype=bool), 1)
    out = np.empty(draws.shape[0])
    step = max(1, (1 << 20) // (m * m))
    for lo in range(0, draws.shape[0], step):
        res = blocks[draws[lo:lo + step]].reshape(-1, m)
        vals = kernel.func(res[:, :, None], res[:, None, :])
        out[lo:lo + step] = np.sum(vals, axis=(1, 2), where=upper) * 2.0 / (m * (m - 1))
    return out


def exact_ustat_law(series, part: BlockPartition, kernel: Kernel) -> tuple[DiscreteLaw, float]:
    """Law of ``sqrt(kp) * (U* - E*[U*])`` and ``E*[U*]``, by enumeration."""
    ustar = enumerate_ustat(series, part, kernel)
    expected = math.fsum(ustar.tolist()) / ustar.size
    pivots = math.sqrt(part.used) * (ustar - expected)
    return _law(pivots, np.ones(ustar.size, dtype=np.int64), ustar.size), expected


@dataclass(frozen=True)
class MCEstimate:
    value: float
    se: float


def long_run_variance_mc(spec: GeneratorSpec, n: int, M: int, seed: int,
                         threads: int = 1) -> MCEstimate:
    """Sample variance of ``sqrt(n) * mean`` over M independent paths.

    The standard error is the delta-free plug-in ``sd((y - ybar)^2) / sqrt(M)``.
    """
    if M < 2:
        raise ValueError("M must be >= 2")

    def one(j):
        path = simulate(spec, n, derive_seed(seed, "lrv", n, j))
        return math.sqrt(n) * (float(path.values.mean()) - analytic_mean(spec))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            y = np.array(list(pool.map(one, range(M))))
    else:
        y = np.array([one(j) for j in range(M)])
    dev2 = (y - y.mean()) ** 2
    value = float(dev2.sum() / (M - 1))
    se = float(np.std(dev2, ddof=1) / math.sqrt(M))
    return MCEstimate(value, se)
