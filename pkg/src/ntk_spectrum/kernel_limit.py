"""Infinite-width limiting kernels and their spherical-harmonic structure.

The limiting kernel of an activation ``psi`` is
``K[i, k] = E_u psi(<u, x_i>) psi(<u, x_k>)`` over uniform directions ``u``.
For the two activations it depends only on the angle between the points and
has arc-cosine closed forms; a Monte Carlo estimator and a truncated Mercer
series serve as independent cross-checks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .linalg import KernelMatrix
from .specfun import Activation, addition_kernel, funk_hecke_coeff, gegenbauer_table, harmonic_count
from .sphere import Dataset

DEFAULT_SHARD = 1 << 16


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point masses ``sum_i z_i delta_{x_i}`` on the sphere."""

    data: Dataset
    weights: np.ndarray

    def __post_init__(self):
        z = np.array(self.weights, dtype=np.float64, copy=True).reshape(-1)
        if z.shape[0] != self.data.n:
            raise DomainError(f"expected {self.data.n} weights, got {z.shape[0]}")
        if not np.all(np.isfinite(z)):
            raise DomainError("weights must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "weights", z)


@dataclass(frozen=True, eq=False)
class HarmonicGram:
    """Gram matrix ``D^T D`` of the harmonic evaluation matrix ``D``.

    ``D`` has one row per orthonormal harmonic of degree ``2r + beta``,
    ``r <= R``, and one column per data point; there are ``N`` rows in total.
    """

    R: int
    beta: int
    N: int
    gram: np.ndarray

    def gershgorin_lower(self) -> float:
        """``min_i (G_ii - sum_{k != i} |G_ik|)``, a lower bound on the spectrum."""
        G = self.gram
        off = np.abs(G).sum(axis=1) - np.abs(np.diag(G))
        return float(np.min(np.diag(G) - off))


@dataclass(frozen=True, eq=False)
class MonteCarloKernel:
    """Monte Carlo kernel estimate with per-entry standard errors."""

    matrix: KernelMatrix
    stderr: np.ndarray
    samples: int


def limiting_kernel_entry(psi: Activation, t):
    """Closed-form limiting kernel as a function of the inner product ``t``."""
    psi = Activation.parse(psi)
    theta = np.arccos(np.clip(np.asarray(t, dtype=np.float64), -1.0, 1.0))
    if psi is Activation.RELU_DERIVATIVE:
        out = (np.pi - theta) / (2.0 * np.pi)
    else:
        out = (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def limiting_kernel_matrix(psi: Activation, data: Dataset) -> KernelMatrix:
    """Closed-form limiting kernel on a dataset."""
    G = data.gram()
    np.fill_diagonal(G, 1.0)
    return KernelMatrix(limiting_kernel_entry(psi, G))


def _mc_shard(psi: Activation, X: np.ndarray, size: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    U = rng.standard_normal((size, X.shape[0]))
    # psi is positively homogeneous for both kinds, so normalizing u only
    # matters for the scaled ReLU
    if psi is Activation.SCALED_RELU:
        U /= np.linalg.norm(U, axis=1, keepdims=True)
    P = psi.apply(U @ X, X.shape[0])
    P2 = P * P
    return P.T @ P, P2.T @ P2


def limiting_kernel_mc(psi: Activation, data: Dataset, samples: int, seed: int,
                       shard_size: int = DEFAULT_SHARD, threads: int = 1) -> MonteCarloKernel:
    """Monte Carlo estimate of the limiting kernel from ``samples`` uniform directions.

    Samples are split into fixed-size shards, each with its own spawned seed, so
    the result does not depend on ``threads``.
    """
    psi = Activation.parse(psi)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    X = np.asarray(data.points)
    sizes = [shard_size] * (samples // shard_size)
    if samples % shard_size:
        sizes.append(samples % shard_size)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _mc_shard(psi, X, *job), jobs))
    else:
        parts = [_mc_shard(psi, X, *job) for job in jobs]
    s1 = np.sum(np.stack([p[0] for p in parts]), axis=0)
    s2 = np.sum(np.stack([p[1] for p in parts]), axis=0)
    mean = s1 / samples
    if samples > 1:
        var = np.maximum(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
        stderr = np.sqrt(var / samples)
    else:
        stderr = np.full_like(mean, np.inf)
    stderr.setflags(write=False)
    return MonteCarloKernel(KernelMatrix(0.5 * (mean + mean.T)), stderr, samples)


def mercer_series_entry(psi: Activation, d: int, t: float, R: int) -> float:
    """Truncated harmonic expansion ``sum_{r<=R} c_{r,d}^2 G_{r,d}(t)``."""
    if R < 0:
        raise DomainError("R must be non-negative")
    terms = []
    for r in range(R + 1):
        c = funk_hecke_coeff(r, d, psi)
        if c != 0.0:
            terms.append(c * c * addition_kernel(r, d, t))
    return math.fsum(terms)


def hemisphere_norm_sq(psi: Activation, mu: DiscreteMeasure) -> float:
    """Squared L2 norm of the hemisphere transform of ``mu``, i.e. ``z^T K z``."""
    K = limiting_kernel_matrix(psi, mu.data).entries
    z = mu.weights
    return float(z @ K @ z)


def harmonic_gram(data: Dataset, R: int, beta: int) -> HarmonicGram:
    """Harmonic Gram matrix assembled with the addition formula (no explicit basis)."""
    d = data.dim
    if d < 3:
        raise DomainError("harmonic Gram needs d0 >= 3")
    if R < 0 or beta not in (0, 1):
        raise DomainError("need R >= 0 and beta in {0, 1}")
    N = harmonic_count(R, beta, d)
    G = data.gram()
    np.fill_diagonal(G, 1.0)
    nu = (d - 2) / 2.0
    table = gegenbauer_table(2 * R + beta, nu, G)
    degrees = np.arange(beta, 2 * R + beta + 1, 2)
    scale = (2 * degrees + d - 2) / (d - 2)
    gram = np.tensordot(scale, table[degrees], axes=1)
    gram = 0.5 * (gram + gram.T)
    gram.setflags(write=False)
    return HarmonicGram(R, beta, N, gram)


def harmonic_min_sv(hg: HarmonicGram) -> float:
    """Smallest singular value of the evaluation matrix ``D``."""
    lam = float(np.linalg.eigvalsh(hg.gram)[0])
    return math.sqrt(max(lam, 0.0))
