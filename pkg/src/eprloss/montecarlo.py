"""
Monte Carlo oracle for the analytic variances.

Every vacuum mode is sampled as a complex Gaussian amplitude
``alpha = x + i y`` with ``x, y ~ N(0, 1/4)``, and an operator ``X`` with
coefficients ``w_j`` yields the real sample ``2 Re(sum_j w_j alpha_j)``. Its
variance is ``sum_j |w_j|^2``, the same functional as
:func:`eprloss.fluctuation.variance`. This is the only place where the
sampling normalization is fixed.

Reproducibility
---------------
Samples are generated in blocks of ``BLOCK_SIZE``. Block ``b`` draws from
``numpy.random.Generator(Philox(key=seed).jumped(b))``, a counter-based
stream that depends only on ``(seed, b)``. Within a block, mode ``j`` always
reads the same columns, so one seed is one realization of all vacuum modes
and samples of different operators under that seed are jointly consistent.
``chunk_size`` only controls how blocks are grouped into parallel jobs, so
results are bit-identical for any chunk size or worker count. Per-block sums are merged with ``math.fsum``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fluctuation import FluctuationOperator, variance
from .reservoir import VACUUM_VARIANCE, BounceChannel, iterated_bounce

__all__ = [
    "BLOCK_SIZE",
    "EstimateReport",
    "SamplerConfig",
    "block_generator",
    "sample_iterated_bounce",
    "sample_operator",
    "sample_values",
]

BLOCK_SIZE = 8192
_SEED_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class SamplerConfig:
    """Sample count, seed and parallel batching.

    ``chunk_size`` is in samples and is rounded up to whole blocks.
    """

    n_samples: int
    seed: int = 0
    chunk_size: int = 16 * BLOCK_SIZE
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.n_samples, bool) or int(self.n_samples) != self.n_samples:
            raise TypeError("n_samples must be an integer")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be at least 1, got {self.n_samples}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(self.seed).__name__}")
        if not 0 <= self.seed <= _SEED_MAX:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")

    @property
    def n_blocks(self) -> int:
        return -(-self.n_samples // BLOCK_SIZE)

    @property
    def blocks_per_chunk(self) -> int:
        return max(1, -(-self.chunk_size // BLOCK_SIZE))


@dataclass(frozen=True)
class EstimateReport:
    sample_variance: float
    analytic_variance: float
    standard_error: float
    z_score: float
    n_samples: int
    seed: int


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(block))


def _block_lengths(cfg: SamplerConfig) -> list[int]:
    lengths = [BLOCK_SIZE] * cfg.n_blocks
    lengths[-1] = cfg.n_samples - BLOCK_SIZE * (cfg.n_blocks - 1)
    return lengths


DrawFn = Callable[[np.random.Generator, int], np.ndarray]


def _run_blocks(draw: DrawFn, cfg: SamplerConfig, blocks: range, lengths) -> list[np.ndarray]:
    return [draw(block_generator(cfg.seed, b), lengths[b]) for b in blocks]


def _blocked(draw: DrawFn, cfg: SamplerConfig, reduce):
    lengths = _block_lengths(cfg)
    step = cfg.blocks_per_chunk
    chunks = [range(i, min(i + step, cfg.n_blocks)) for i in range(0, cfg.n_blocks, step)]

    def job(blocks):
        return [reduce(v) for v in _run_blocks(draw, cfg, blocks, lengths)]

    if cfg.workers == 1 or len(chunks) == 1:
        parts = [job(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(job, chunks))
    return [p for part in parts for p in part]


def _moments(values: np.ndarray) -> tuple[int, float, float]:
    return values.size, float(np.sum(values)), float(np.sum(values * values))


def _variance_from_blocks(stats) -> float:
    n = sum(s[0] for s in stats)
    if n < 2:
        return 0.0
    total = math.fsum(s[1] for s in stats)
    total_sq = math.fsum(s[2] for s in stats)
    # fsum keeps this independent of block grouping; sample means are ~0
    return max(0.0, (total_sq - total * total / n) / (n - 1))


def _report(sample_var: float, analytic: float, cfg: SamplerConfig) -> EstimateReport:
    n = cfg.n_samples
    se = sample_var * math.sqrt(2.0 / n) if n >= 2 else 0.0
    diff = sample_var - analytic
    if se > 0:
        z = diff / se
    else:
        z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return EstimateReport(sample_var, analytic, se, z, n, int(cfg.seed))


def _operator_draw(x: FluctuationOperator) -> DrawFn:
    modes = np.array(x.modes, dtype=np.intp)
    w = np.array(list(x.coefficients.values()), dtype=complex)
    width = int(modes.max()) + 1

    def draw(rng, count):
        # mode-major layout: mode j always reads the same slab of the stream,
        # so a seed fixes one vacuum realization shared by every operator
        z = rng.normal(0.0, 0.5, size=(width, 2, count))[modes]
        return 2.0 * (w.real @ z[:, 0, :] - w.imag @ z[:, 1, :])

    return draw


def sample_values(x: FluctuationOperator, cfg: SamplerConfig) -> np.ndarray:
    """All samples of ``x`` in block order (memory ~ 8 n_samples bytes)."""
    if not x.coefficients:
        return np.zeros(cfg.n_samples)
    return np.concatenate(_blocked(_operator_draw(x), cfg, lambda v: v))


def sample_operator(x: FluctuationOperator, cfg: SamplerConfig) -> EstimateReport:
    """Empirical variance of ``x`` against its analytic variance."""
    analytic = variance(x)
    if not x.coefficients:
        return _report(0.0, analytic, cfg)
    stats = _blocked(_operator_draw(x), cfg, _moments)
    return _report(_variance_from_blocks(stats), analytic, cfg)


def sample_iterated_bounce(
    channel: BounceChannel | float,
    m: int,
    input_std: float,
    cfg: SamplerConfig,
) -> EstimateReport:
    """Trajectory simulation of ``m`` bounces, fresh vacuum at each one.

    The input quadrature is drawn from ``N(0, input_std^2)``; each bounce
    maps ``x -> cos(theta) x + sin(theta) v`` with ``v ~ N(0, 1/2)``.
    """
    if m < 0:
        raise ValueError("bounce count must be non-negative")
    theta = channel.theta if isinstance(channel, BounceChannel) else float(channel)
    c, s = math.cos(theta), math.sin(theta)
    vac_std = math.sqrt(VACUUM_VARIANCE)

    def draw(rng, count):
        x = rng.normal(0.0, input_std, size=count)
        for _ in range(m):
            x = c * x + s * rng.normal(0.0, vac_std, size=count)
        return x

    stats = _blocked(draw, cfg, _moments)
    _, analytic = iterated_bounce(channel, m, input_std ** 2)
    return _report(_variance_from_blocks(stats), analytic, cfg)
