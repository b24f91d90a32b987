"""Monte Carlo realization of the two-detector state.

Sampling proceeds in two stages that mirror the physics: draw the
complex field amplitudes (alpha, beta) from their joint Gaussian law,
then draw photon counts as independent Poisson variables with means
|alpha|^2 and |beta|^2, since each ensemble member is a coherent
excitation.  The empirical joint count distribution is the brute-force
oracle for every analytic quantity in :mod:`qgs.fock_stats`.

Reproducibility: samples are generated in fixed-size blocks, each block
owning a counter-based Philox stream keyed by (master seed, block
index).  Workers are assigned whole blocks, so results are bit-for-bit
identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError, InsufficientCountsError, QgsError
from .source_model import TwoPointParams, mean_cov, mu_tilde

_BLOCK = 1 << 16
_COUNT_CAP = 512  # counts beyond this go to overflow_count
_EIGH_FALLBACK_G = 0.999


@dataclass(frozen=True)
class SamplerConfig:
    """Deterministic sampling configuration."""

    params: TwoPointParams
    n_samples: int
    seed: int
    n_workers: int = 1

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise DomainError("n_samples must be at least 1")
        if self.n_workers < 1:
            raise DomainError("n_workers must be at least 1")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must fit in 64 bits")


@dataclass(frozen=True)
class EmpiricalPND:
    """Joint count matrix from a finished sampling run."""

    counts: np.ndarray
    total: int
    seed: int
    overflow_count: int
    params: TwoPointParams


@dataclass(frozen=True)
class G2Estimate:
    """Empirical wavepacket correlation with a delta-method standard error."""

    estimate: float
    std_error: float
    reliable: bool = True


@dataclass(frozen=True)
class ComparisonReport:
    """Analytic-versus-empirical verdict for one parameter set."""

    n_cells: int
    n_qualifying: int
    n_failing: int
    max_abs_z: float
    tv_distance: float
    passed: bool
    failing_cells: tuple = ()

    def to_dict(self) -> dict:
        return {
            "n_cells": self.n_cells,
            "n_qualifying": self.n_qualifying,
            "n_failing": self.n_failing,
            "max_abs_z": self.max_abs_z,
            "tv_distance": self.tv_distance,
            "passed": self.passed,
            "failing_cells": [list(c) for c in self.failing_cells],
        }


def _field_transform(p: TwoPointParams):
    """Mean vector and covariance factor C with C C^T = Gamma.

    Cholesky for well-conditioned covariances; symmetric eigenvalue
    factorization (with tiny-negative clamping) close to degeneracy.
    """
    mc = mean_cov(p)
    if p.g <= _EIGH_FALLBACK_G:
        try:
            return mc.mu, np.linalg.cholesky(mc.gamma)
        except np.linalg.LinAlgError as exc:
            raise QgsError("covariance factorization failed") from exc
    evals, evecs = np.linalg.eigh(mc.gamma)
    if np.min(evals) < -1e-12:
        raise QgsError(f"covariance has a negative eigenvalue: {np.min(evals)}")
    return mc.mu, evecs * np.sqrt(np.clip(evals, 0.0, None))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, block], dtype=np.uint64))
    )


def _block_fields(p: TwoPointParams, rng: np.random.Generator, count: int):
    """One block of correlated field draws (alpha, beta)."""
    if p.is_degenerate:
        # exact degenerate rule: one complex Gaussian, beta locked to alpha
        mt1, mt2 = mu_tilde(p)
        if abs(mt1 - mt2) > 1e-8 * max(abs(mt1), abs(mt2), 1.0):
            raise DegeneracyError(
                "g = 1 sampling requires matching rescaled amplitudes"
            )
        z = rng.standard_normal((count, 2))
        spread = math.sqrt(p.n1 / 2.0)
        alpha = p.mu1 + spread * (z[:, 0] + 1j * z[:, 1])
        beta = p.mu2 + (alpha - p.mu1) * math.sqrt(p.n2 / p.n1)
        return alpha, beta
    mu, cfac = _field_transform(p)
    z = rng.standard_normal((count, 4))
    r = mu + z @ cfac.T
    return r[:, 0] + 1j * r[:, 1], r[:, 2] + 1j * r[:, 3]


def _block_plan(n_samples: int):
    n_blocks = (n_samples + _BLOCK - 1) // _BLOCK
    for b in range(n_blocks):
        yield b, min(_BLOCK, n_samples - b * _BLOCK)


def sample_fields(cfg: SamplerConfig):
    """All field draws (alpha, beta) for a configuration, as complex arrays."""
    alphas = []
    betas = []
    for b, count in _block_plan(cfg.n_samples):
        a, bb = _block_fields(cfg.params, _block_rng(cfg.seed, b), count)
        alphas.append(a)
        betas.append(bb)
    return np.concatenate(alphas), np.concatenate(betas)


def sample_counts(field, rng: np.random.Generator):
    """Photon counts for one field draw: independent Poisson per detector."""
    alpha, beta = field
    return int(rng.poisson(abs(alpha) ** 2)), int(rng.poisson(abs(beta) ** 2))


def _count_block(args):
    params, seed, block, count = args
    rng = _block_rng(seed, block)
    alpha, beta = _block_fields(params, rng, count)
    n1 = rng.poisson(np.abs(alpha) ** 2)
    n2 = rng.poisson(np.abs(beta) ** 2)
    over = int(np.sum((n1 >= _COUNT_CAP) | (n2 >= _COUNT_CAP)))
    keep = (n1 < _COUNT_CAP) & (n2 < _COUNT_CAP)
    n1, n2 = n1[keep], n2[keep]
    if n1.size == 0:
        return np.zeros((1, 1), dtype=np.int64), over
    m1 = int(n1.max()) + 1
    m2 = int(n2.max()) + 1
    mat = np.bincount(n1 * m2 + n2, minlength=m1 * m2).reshape(m1, m2)
    return mat.astype(np.int64), over


def _merge_counts(blocks):
    m1 = max(b.shape[0] for b, _ in blocks)
    m2 = max(b.shape[1] for b, _ in blocks)
    out = np.zeros((m1, m2), dtype=np.int64)
    over = 0
    for mat, ov in blocks:
        out[: mat.shape[0], : mat.shape[1]] += mat
        over += ov
    return out, over


def empirical_pnd(cfg: SamplerConfig) -> EmpiricalPND:
    """Joint count matrix over n_samples independent field-then-count draws.

    Deterministic for a fixed configuration and invariant under the
    worker count: workers process disjoint whole blocks and the merge is
    a commutative matrix addition.
    """
    tasks = [(cfg.params, cfg.seed, b, c) for b, c in _block_plan(cfg.n_samples)]
    if cfg.n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_workers) as pool:
            blocks = list(pool.map(_count_block, tasks, chunksize=4))
    else:
        blocks = [_count_block(t) for t in tasks]
    counts, over = _merge_counts(blocks)
    return EmpiricalPND(
        counts=counts,
        total=cfg.n_samples,
        seed=cfg.seed,
        overflow_count=over,
        params=cfg.params,
    )


def empirical_g2(e: EmpiricalPND, N: int, M: int, min_marginal: int = 100) -> G2Estimate:
    """Empirical wavepacket correlation counts(N,M) total / (row(N) col(M)).

    The standard error comes from the delta method on the multinomial
    cell proportions, including row/column/cell covariances.
    """
    if N >= e.counts.shape[0] or M >= e.counts.shape[1]:
        raise InsufficientCountsError(f"no counts observed for pair ({N}, {M})")
    x = float(e.counts[N, M])
    row = float(e.counts[N, :].sum())
    col = float(e.counts[:, M].sum())
    t = float(e.total)
    if row < min_marginal or col < min_marginal:
        raise InsufficientCountsError(
            f"marginal counts ({row:.0f}, {col:.0f}) below floor {min_marginal}"
        )
    reliable = x >= 1
    if x == 0:
        return G2Estimate(estimate=0.0, std_error=float("nan"), reliable=False)
    est = x * t / (row * col)
    px, pr, pc = x / t, row / t, col / t
    var_log = (
        (1.0 - px) / x
        - (1.0 - pr) / row
        - (1.0 - pc) / col
        + 2.0 * (px - pr * pc) / (t * pr * pc)
    )
    se = est * math.sqrt(max(var_log, 0.0))
    return G2Estimate(estimate=est, std_error=se, reliable=reliable)


def compare(
    analytic,
    empirical: EmpiricalPND,
    z_threshold: float = 4.0,
    min_expected: float = 25.0,
    max_fail_fraction: float = 0.005,
    tv_tolerance: float = 3e-3,
) -> ComparisonReport:
    """Per-cell z-score and total-variation comparison of the two routes.

    Cells with expected count >= min_expected qualify for the z test; the
    verdict fails when more than max_fail_fraction of qualifying cells
    exceed z_threshold or the total variation distance exceeds
    tv_tolerance.
    """
    if analytic.params != empirical.params:
        raise DomainError("analytic and empirical distributions use different parameters")
    t = float(empirical.total)
    n_an = analytic.p.shape[0]
    n1 = max(n_an, empirical.counts.shape[0])
    n2 = max(n_an, empirical.counts.shape[1])
    pa = np.zeros((n1, n2))
    pa[:n_an, :n_an] = analytic.p
    obs = np.zeros((n1, n2))
    obs[: empirical.counts.shape[0], : empirical.counts.shape[1]] = empirical.counts

    expected = t * pa
    qual = expected >= min_expected
    z = np.zeros_like(pa)
    np.divide(obs - expected, np.sqrt(expected * (1.0 - pa)), out=z, where=qual)
    n_fail = int(np.sum(np.abs(z[qual]) > z_threshold))
    n_qual = int(np.sum(qual))
    failing = tuple(
        (int(i), int(j), float(z[i, j]))
        for i, j in zip(*np.nonzero(qual & (np.abs(z) > z_threshold)))
    )

    # lump the analytic tail against the empirical mass outside the grid
    emp_out = float(empirical.overflow_count)
    tv = 0.5 * (
        float(np.sum(np.abs(obs / t - pa))) + abs(emp_out / t - analytic.tail_mass)
    )

    passed = (n_qual > 0) and (n_fail <= max_fail_fraction * n_qual) and (tv < tv_tolerance)
    max_z = float(np.max(np.abs(z[qual]))) if n_qual else float("nan")
    return ComparisonReport(
        n_cells=int(pa.size),
        n_qualifying=n_qual,
        n_failing=n_fail,
        max_abs_z=max_z,
        tv_distance=tv,
        passed=passed,
        failing_cells=failing,
    )
