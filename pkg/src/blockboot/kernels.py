"""Symmetric bivariate kernels, U-statistics and the empirical Hoeffding split.

A :class:`Kernel` wraps a vectorized ``func(x, y)``. Builtin kernels also carry
closed-form shortcuts for row means and pair sums; custom kernels fall back to
chunked O(n^2) evaluation with a fixed chunk size, so results never depend on
how the work is scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InsufficientSampleError

ArrayFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]

_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class Kernel:
    id: str
    func: ArrayFunc
    name: str = ""
    analytic_theta: float | None = None
    theta_note: str = ""
    analytic_h1: Callable[[np.ndarray], np.ndarray] | None = None
    row_means_fast: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    pair_sum_fast: Callable[[np.ndarray], float] | None = None

    @property
    def label(self) -> str:
        return self.name or self.id

    def __call__(self, x, y):
        return self.func(np.asarray(x, float), np.asarray(y, float))

    def row_means(self, points: np.ndarray, sample: np.ndarray) -> np.ndarray:
        """``(1/n) sum_j h(points_i, sample_j)`` for every point."""
        points = np.asarray(points, float)
        sample = np.asarray(sample, float)
        if self.row_means_fast is not None:
            return self.row_means_fast(points, sample)
        out = np.empty(points.size)
        step = max(1, _CHUNK_ELEMS // max(sample.size, 1))
        for lo in range(0, points.size, step):
            block = self.func(points[lo:lo + step, None], sample[None, :])
            out[lo:lo + step] = block.mean(axis=1)
        return out

    def pair_sum(self, sample: np.ndarray) -> float:
        """``sum_{i<j} h(x_i, x_j)``."""
        sample = np.asarray(sample, float)
        if self.pair_sum_fast is not None:
            return float(self.pair_sum_fast(sample))
        n = sample.size
        step = max(1, _CHUNK_ELEMS // max(n, 1))
        partial = []
        for lo in range(0, n, step):
            rows = np.arange(lo, min(n, lo + step))
            block = self.func(sample[rows, None], sample[None, :])
            mask = np.arange(n)[None, :] > rows[:, None]
            partial.append(float(np.sum(block, where=mask)))
        return math.fsum(partial)


def _gini_row_means(points, sample):
    s = np.sort(sample)
    csum = np.concatenate([[0.0], np.cumsum(s)])
    below = np.searchsorted(s, points, side="right")
    total = csum[-1]
    n = s.size
    left = points * below - csum[below]
    right = (total - csum[below]) - points * (n - below)
    return (left + right) / n


def _gini_pair_sum(sample):
    s = np.sort(sample)
    n = s.size
    weights = 2.0 * np.arange(n) - (n - 1)
    return float(np.dot(weights, s))


def _varhalf_row_means(points, sample):
    m = sample.mean()
    v = np.mean((sample - m) ** 2)
    return ((points - m) ** 2 + v) / 2.0


def _varhalf_pair_sum(sample):
    m = sample.mean()
    return sample.size * float(np.sum((sample - m) ** 2)) / 2.0


def _product_row_means(points, sample):
    return points * sample.mean()


def _product_pair_sum(sample):
    total = float(np.sum(sample))
    return (total * total - float(np.dot(sample, sample))) / 2.0


def _linear_row_means(points, sample):
    return points + sample.mean()


def _linear_pair_sum(sample):
    return (sample.size - 1) * float(np.sum(sample))


def _gini_h1_std_normal(x):
    from scipy.stats import norm

    x = np.asarray(x, float)
    return 2.0 * norm.pdf(x) + x * (2.0 * norm.cdf(x) - 1.0) - 2.0 / math.sqrt(math.pi)


GINI = Kernel(
    "gini", lambda x, y: np.abs(x - y),
    analytic_theta=2.0 / math.sqrt(math.pi),
    theta_note="E|X-Y| for independent standard normals",
    analytic_h1=_gini_h1_std_normal,
    row_means_fast=_gini_row_means, pair_sum_fast=_gini_pair_sum)

VARIANCE_HALF = Kernel(
    "variance_half", lambda x, y: (x - y) ** 2 / 2.0,
    analytic_theta=1.0, theta_note="Var X for standard normal X",
    analytic_h1=lambda x: (np.asarray(x, float) ** 2 - 1.0) / 2.0,
    row_means_fast=_varhalf_row_means, pair_sum_fast=_varhalf_pair_sum)

PRODUCT = Kernel(
    "product", lambda x, y: x * y,
    analytic_theta=0.0, theta_note="(EX)^2 for centered X",
    analytic_h1=lambda x: np.zeros_like(np.asarray(x, float)),
    row_means_fast=_product_row_means, pair_sum_fast=_product_pair_sum)

# h(x, y) = x + y: purely linear, the degenerate part vanishes identically
LINEAR = Kernel(
    "custom", lambda x, y: x + y, name="linear",
    row_means_fast=_linear_row_means, pair_sum_fast=_linear_pair_sum)

BUILTIN = {k.id: k for k in (GINI, VARIANCE_HALF, PRODUCT)}
_REGISTRY: dict[str, Kernel] = {"linear": LINEAR}


def custom_kernel(name: str, func: ArrayFunc, **kwargs) -> Kernel:
    return Kernel("custom", func, name=name, **kwargs)


def register_kernel(kernel: Kernel) -> Kernel:
    if kernel.label in BUILTIN:
        raise ValueError(f"{kernel.label!r} is a builtin kernel id")
    _REGISTRY[kernel.label] = kernel
    return kernel


def get_kernel(name: str) -> Kernel:
    if name in BUILTIN:
        return BUILTIN[name]
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}") from None


def _values(series) -> np.ndarray:
    return np.asarray(getattr(series, "values", series), dtype=float)


def u_statistic(series, kernel: Kernel) -> float:
    """``2/(n(n-1)) sum_{i<j} h(X_i, X_j)``."""
    x = _values(series)
    n = x.size
    if n < 2:
        raise InsufficientSampleError(f"a U-statistic needs n >= 2, got {n}")
    return 2.0 * kernel.pair_sum(x) / (n * (n - 1))


@dataclass
class HoeffdingParts:
    """Empirical split ``h = theta + h1(x) + h1(y) + h2(x, y)``.

    ``theta_hat`` averages h over all n^2 index pairs (diagonal included), so
    ``mean(h1_values) == 0`` and every row of h2 averages to 0.
    """

    theta_hat: float
    h1_values: np.ndarray
    sample: np.ndarray
    kernel: Kernel

    def h1(self, x) -> np.ndarray:
        return self.kernel.row_means(np.atleast_1d(np.asarray(x, float)), self.sample) - self.theta_hat

    def h2_eval(self, i, j) -> np.ndarray:
        i = np.asarray(i)
        j = np.asarray(j)
        h = self.kernel.func(self.sample[i], self.sample[j])
        return h - self.h1_values[i] - self.h1_values[j] - self.theta_hat

    def degenerate_ustat(self) -> float:
        """``U_n(h2)``, using that h2 sums to zero over all n^2 pairs."""
        n = self.sample.size
        idx = np.arange(n)
        return -float(np.sum(self.h2_eval(idx, idx))) / (n * (n - 1))


def hoeffding_decompose(series, kernel: Kernel) -> HoeffdingParts:
    x = _values(series)
    if x.size < 2:
        raise InsufficientSampleError(f"decomposition needs n >= 2, got {x.size}")
    rows = kernel.row_means(x, x)
    theta = float(np.mean(rows))
    return HoeffdingParts(theta, rows - theta, x, kernel)


@dataclass(frozen=True)
class ProbeRow:
    eps: float
    lhs_estimate: float
    bound: float
    flagged: bool


def p_lipschitz_probe(kernel: Kernel, series, eps_grid, L_candidate: float) -> list[ProbeRow]:
    """Empirical check of ``E|h(X,Y) - h(X',Y)| 1{|X-X'| <= eps} <= L eps``.

    X' is the nearest other sample point to X; Y ranges over the remaining
    sample. A flagged row falsifies the candidate constant on this sample;
    an unflagged grid proves nothing. Cost is O(n^2).
    """
    x = _values(series)
    n = x.size
    if n < 3:
        raise InsufficientSampleError("the probe needs at least 3 points")
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid or min(eps_grid) < 0:
        raise ValueError("eps_grid must be a nonempty list of nonnegative reals")

    order = np.argsort(x, kind="stable")
    s = x[order]
    gaps_left = np.concatenate([[np.inf], np.diff(s)])
    gaps_right = np.concatenate([np.diff(s), [np.inf]])
    take_left = gaps_left <= gaps_right
    nearest_sorted = np.where(take_left, np.arange(n) - 1, np.arange(n) + 1)
    partner = np.empty(n, dtype=int)
    partner[order] = order[nearest_sorted]
    dist = np.abs(x - x[partner])

    # mean over Y of |h(X_i, Y) - h(X'_i, Y)|, Y over the other n - 2 points
    diffs = np.empty(n)
    step = max(1, _CHUNK_ELEMS // n)
    for lo in range(0, n, step):
        i = np.arange(lo, min(n, lo + step))
        d = np.abs(kernel.func(x[i, None], x[None, :]) - kernel.func(x[partner[i], None], x[None, :]))
        d[np.arange(i.size), i] = 0.0
        d[np.arange(i.size), partner[i]] = 0.0
        diffs[i] = d.sum(axis=1) / (n - 2)

    rows = []
    for eps in eps_grid:
        lhs = float(np.mean(np.where(dist <= eps, diffs, 0.0)))
        bound = L_candidate * eps
        rows.append(ProbeRow(eps, lhs, bound, lhs > bound * (1 + 1e-12) + 1e-15))
    return rows
