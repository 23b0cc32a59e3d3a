"""Nonoverlapping block bootstrap for the sample mean and for U-statistics.

Only the first ``k*p`` observations enter (``k = n // p``); the tail is
dropped rather than wrapped. Replicate ``r`` reads its ``k`` block indices
from a fixed counter range of one keyed Philox stream, so replicate values
do not depend on ``B``, thread count or execution order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientSampleError, InvalidPartitionError
from .kernels import Kernel
from .rng import stream

# above this many resampled points U* replicates are computed from the
# resample itself instead of the k x k block matrix
GRAM_LIMIT = 20000


@dataclass(frozen=True)
class ScheduleParams:
    eps: float = 1.0 / 3.0
    c: float = 1.0
    p_min: int = 2

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("schedule eps must lie in (0, 1)")
        if not self.c > 0:
            raise ValueError("schedule constant c must be positive")
        if self.p_min < 2:
            raise ValueError("p_min must be at least 2")


def dyadic_base(n: int) -> int:
    """``2^l`` with ``2^l < n <= 2^(l+1)``."""
    return 1 << ((n - 1).bit_length() - 1)


def schedule_block_length(n: int, params: ScheduleParams = ScheduleParams()) -> int:
    """Block length ``max(p_min, floor(c * 2^l ** eps))``, constant on dyadic ranges."""
    if n < 2:
        raise InvalidPartitionError("the schedule needs n >= 2")
    raw = params.c * dyadic_base(n) ** params.eps
    # 64 ** (1/3) evaluates to 3.9999999999999996
    p = math.floor(raw * (1.0 + 1e-12))
    return max(params.p_min, p)


@dataclass(frozen=True)
class BlockPartition:
    n: int
    p: int
    k: int

    @property
    def used(self) -> int:
        return self.k * self.p

    @property
    def blocks(self) -> list[range]:
        """Zero-based index ranges of the k blocks."""
        return [range(i * self.p, (i + 1) * self.p) for i in range(self.k)]

    @property
    def dropped(self) -> range:
        return range(self.used, self.n)


def partition(n: int, p: int) -> BlockPartition:
    if p < 1 or p > n:
        raise InvalidPartitionError(f"block length p={p} must satisfy 1 <= p <= n={n}")
    return BlockPartition(n, p, n // p)


def _values(series) -> np.ndarray:
    return np.asarray(getattr(series, "values", series), dtype=float)


def _blocks_matrix(series, part: BlockPartition) -> np.ndarray:
    x = _values(series)
    if x.size != part.n:
        raise InvalidPartitionError(
            f"partition is for n={part.n} but the series has {x.size} values")
    return x[:part.used].reshape(part.k, part.p)


def _uniform_to_index(u: np.ndarray, k: int) -> np.ndarray:
    return np.minimum((u * k).astype(np.int64), k - 1)


def replicate_draws(seed: int, r: int, k: int) -> np.ndarray:
    """Zero-based block indices of replicate ``r``.

    Replicate r owns the 64-bit outputs ``[r*k, (r+1)*k)`` of the counter-based
    stream ``(seed, "replicates")``; each output becomes one uniform block index.
    """
    start = r * k
    bitgen = stream(seed, "replicates").bit_generator
    bitgen.advance(start // 4)  # Philox4x64 emits four outputs per counter step
    u = np.random.Generator(bitgen).random(start % 4 + k)[start % 4:]
    return _uniform_to_index(u, k)


def resample(series, part: BlockPartition, draw_seed: int | None = None,
             draws=None) -> np.ndarray:
    """Concatenation of k uniformly drawn blocks.

    ``draws`` (zero-based block indices) replaces the random draw.
    """
    blocks = _blocks_matrix(series, part)
    if draws is None:
        if draw_seed is None:
            raise ValueError("resample needs draw_seed or explicit draws")
        draws = stream(draw_seed, "resample").integers(0, part.k, size=part.k)
    draws = np.asarray(draws, dtype=int)
    if draws.shape != (part.k,) or draws.min() < 0 or draws.max() >= part.k:
        raise InvalidPartitionError(f"need {part.k} block indices in [0, {part.k})")
    return blocks[draws].ravel()


def boot_mean_exact_moments(series, part: BlockPartition) -> tuple[float, float]:
    """``E*`` of the bootstrap mean and ``Var*(sqrt(kp) * mean*)``."""
    blocks = _blocks_matrix(series, part)
    mean_kp = float(blocks.mean())
    sums = blocks.sum(axis=1)
    var_scaled = float(np.sum((sums - part.p * mean_kp) ** 2)) / part.used
    return mean_kp, var_scaled


@dataclass
class BootstrapDistribution:
    pivot_values: np.ndarray
    exact_expectation: float
    exact_variance: float | None
    statistic: str
    n: int
    p: int
    k: int
    B: int
    seed: int
    notes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.pivot_values) != self.B:
            raise ValueError("pivot_values must hold exactly B replicates")
        if self.exact_variance is not None and self.exact_variance < 0:
            raise ValueError("exact_variance must be nonnegative")

    def metadata(self) -> list[tuple[str, str]]:
        var = "none" if self.exact_variance is None else repr(self.exact_variance)
        meta = [("statistic", self.statistic), ("n", str(self.n)), ("p", str(self.p)),
                ("k", str(self.k)), ("B", str(self.B)), ("seed", str(self.seed)),
                ("exact_expectation", repr(self.exact_expectation)),
                ("exact_variance", var)]
        return meta + sorted(self.notes.items())

    def to_csv(self, path: str | Path | None = None, preamble: list[str] = ()) -> str:
        lines = list(preamble)
        lines += [f"# {key}={value}" for key, value in self.metadata()]
        lines.append("replicate,pivot")
        lines += [f"{r},{float(v)!r}" for r, v in enumerate(self.pivot_values)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def replicate_draw_matrix(seed: int, B: int, k: int) -> np.ndarray:
    """(B, k) block indices; row r equals ``replicate_draws(seed, r, k)``."""
    return _uniform_to_index(stream(seed, "replicates").random((B, k)), k)


def _counts(draws: np.ndarray, k: int) -> np.ndarray:
    B = draws.shape[0]
    flat = (draws + k * np.arange(B)[:, None]).ravel()
    return np.bincount(flat, minlength=B * k).reshape(B, k).astype(float)


_ROW_CHUNK = 1024


def _quadratic_forms(draws: np.ndarray, gram: np.ndarray, diag: np.ndarray,
                     threads: int) -> np.ndarray:
    """``Q = c'Gc - c.D`` for the block counts c of every replicate.

    Rows go through BLAS in fixed chunks so the floating-point result of a
    replicate does not depend on the thread count.
    """
    k = gram.shape[0]
    out = np.empty(draws.shape[0])

    def work(lo):
        counts = _counts(draws[lo:lo + _ROW_CHUNK], k)
        out[lo:lo + _ROW_CHUNK] = np.einsum("bi,bi->b", counts @ gram, counts) - counts @ diag

    starts = range(0, draws.shape[0], _ROW_CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)
    return out


def boot_mean_pivot(series, part: BlockPartition, B: int, seed: int,
                    threads: int = 1) -> BootstrapDistribution:
    """Replicates of ``sqrt(kp) * (mean* - mean_kp)``.

    ``threads`` is accepted for interface symmetry; the work is one gather.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    blocks = _blocks_matrix(series, part)
    sums = blocks.sum(axis=1)
    mean_kp, var_scaled = boot_mean_exact_moments(series, part)
    draws = replicate_draw_matrix(seed, B, part.k)
    pivots = math.sqrt(part.used) * (sums[draws].sum(axis=1) / part.used - mean_kp)
    return BootstrapDistribution(pivots, mean_kp, var_scaled, "mean",
                                 part.n, part.p, part.k, B, seed)


# --- U-statistics -----------------------------------------------------------
#
# A resample is k i.i.d. uniform block draws b_1..b_k. With
#   G[b, c] = sum_{x in block b, y in block c} h(x, y)   and   D[b] = sum_{x in b} h(x, x)
# the ordered-pair sum over distinct resample positions is
#   Q = sum_s (G[b_s, b_s] - D[b_s]) + sum_{s != t} G[b_s, b_t],
# and U* = Q / (m (m - 1)) with m = kp.


def block_gram(series, part: BlockPartition, kernel: Kernel) -> tuple[np.ndarray, np.ndarray]:
    """Block cross-sum matrix ``G`` (k x k) and block diagonal sums ``D``."""
    blocks = _blocks_matrix(series, part)
    k, p = blocks.shape
    flat = blocks.ravel()
    gram = np.empty((k, k))
    step = max(1, (1 << 22) // (p * flat.size))
    for lo in range(0, k, step):
        rows = blocks[lo:lo + step]
        vals = kernel.func(rows.reshape(-1, 1), flat[None, :])
        gram[lo:lo + step] = vals.reshape(-1, k, p).sum(axis=2).reshape(rows.shape[0], p, k).sum(axis=1)
    diag = kernel.func(blocks, blocks).sum(axis=1)
    return gram, diag


def _block_pair_sums(blocks: np.ndarray, kernel: Kernel) -> np.ndarray:
    return np.array([kernel.pair_sum(b) for b in blocks])


def boot_ustat_exact_expectation(series, part: BlockPartition, kernel: Kernel) -> float:
    """``E*[U*]`` in closed form over the block-resampling law.

    Position pairs inside one resampled slot see a single uniform block;
    pairs in different slots see two independent uniform blocks.
    """
    m = part.used
    if m < 2:
        raise InsufficientSampleError("the bootstrapped U-statistic needs kp >= 2")
    blocks = _blocks_matrix(series, part)
    k = part.k
    flat = blocks.ravel()
    within = 2.0 * _block_pair_sums(blocks, kernel)      # G[b,b] - D[b]
    diag_total = float(np.sum(kernel.func(flat, flat)))
    gram_total = 2.0 * kernel.pair_sum(flat) + diag_total  # sum over all of G
    expected_q = float(np.sum(within)) + (k - 1) * gram_total / k
    return expected_q / (m * (m - 1))


def _moments_from_gram(gram: np.ndarray, diag: np.ndarray, m: int) -> tuple[float, float]:
    k = gram.shape[0]
    a = np.diag(gram) - diag
    gbar = float(gram.mean())
    g1 = gram.mean(axis=1) - gbar
    zeta1 = float(np.mean(g1 * g1))
    zeta2 = float(np.mean((gram - gbar) ** 2))
    cov_ag = float(np.mean((a - a.mean()) * g1))
    expected_q = k * float(a.mean()) + k * (k - 1) * gbar
    pairs = k * (k - 1) / 2.0
    var_w = pairs * (2.0 * (k - 2) * zeta1 + zeta2)
    var_q = k * float(a.var()) + 4.0 * var_w + 4.0 * k * (k - 1) * cov_ag
    scale = m * (m - 1)
    return expected_q / scale, max(0.0, m * var_q / scale ** 2)


def boot_ustat_exact_variance(series, part: BlockPartition, kernel: Kernel) -> float:
    """``Var*(sqrt(kp) * U*)`` in closed form (needs the k x k block matrix)."""
    if part.used < 2:
        raise InsufficientSampleError("the bootstrapped U-statistic needs kp >= 2")
    gram, diag = block_gram(series, part, kernel)
    return _moments_from_gram(gram, diag, part.used)[1]


def boot_ustat_pivot(series, part: BlockPartition, kernel: Kernel, B: int, seed: int,
                     threads: int = 1, centering: str = "auto") -> BootstrapDistribution:
    """Replicates of ``sqrt(kp) * (U* - E*[U*])``.

    ``centering="exact"`` uses the closed form E*[U*]; ``"mc"`` centers at
    the replicate mean and is flagged in ``notes``. ``"auto"`` picks exact
    unless kp exceeds ``GRAM_LIMIT`` and the kernel has no fast pair sum.
    """
    m = part.used
    if B < 1:
        raise ValueError("B must be >= 1")
    if m < 2:
        raise InsufficientSampleError("the bootstrapped U-statistic needs kp >= 2")
    blocks = _blocks_matrix(series, part)
    scale = m * (m - 1)
    notes: dict[str, str] = {"kernel": kernel.label}
    exact_var = None

    draws = replicate_draw_matrix(seed, B, part.k)
    if m <= GRAM_LIMIT:
        gram, diag = block_gram(series, part, kernel)
        expected, exact_var = _moments_from_gram(gram, diag, m)
        ustar = _quadratic_forms(draws, gram, diag, threads) / scale
    else:
        expected = None
        ustar = np.array([2.0 * kernel.pair_sum(blocks[d].ravel()) / scale for d in draws])

    if centering == "auto":
        centering = "exact" if (m <= GRAM_LIMIT or kernel.pair_sum_fast is not None) else "mc"
    if centering == "exact":
        if expected is None:
            expected = boot_ustat_exact_expectation(series, part, kernel)
    elif centering == "mc":
        expected = float(np.mean(ustar))
        notes["centering"] = "monte_carlo"
    else:
        raise ValueError(f"unknown centering {centering!r}")
    pivots = math.sqrt(m) * (ustar - expected)
    return BootstrapDistribution(pivots, expected, exact_var, kernel.label,
                                 part.n, part.p, part.k, B, seed, notes)
