"""Points on the unit sphere: sampling, separation statistics, conditioning.

A :class:`Dataset` stores ``n`` unit vectors of length ``d0`` as the columns of
a ``d0 x n`` matrix, the layout used by every kernel routine in the package.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DomainError

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SeparationStats:
    """Pairwise separation of a point set.

    ``delta`` is the sign-insensitive separation ``min min(|x_i - x_k|, |x_i + x_k|)``
    and ``delta_prime`` the plain minimum distance. With a single point both are
    ``inf`` and ``argmin_pair`` is ``None``.
    """

    delta: float
    delta_prime: float
    argmin_pair: tuple[int, int] | None


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` unit-norm points in ``R^d0`` stored column-wise.

    Construction rejects columns whose norm differs from 1 by more than
    ``1e-12``; use :meth:`from_points` with ``normalize=True`` to rescale.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DomainError(f"points must be a non-empty d0 x n matrix, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("points contain non-finite entries")
        norms = np.linalg.norm(pts, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise DomainError(f"columns {bad.tolist()} are not unit norm")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, normalize: bool = False) -> "Dataset":
        """Build from a ``d0 x n`` array, optionally rescaling each column."""
        pts = np.asarray(points, dtype=np.float64)
        if normalize:
            if pts.ndim != 2:
                raise DomainError("points must be two-dimensional")
            norms = np.linalg.norm(pts, axis=0)
            if np.any(norms == 0):
                raise DomainError("cannot normalize a zero column")
            pts = pts / norms
        return cls(pts)

    @classmethod
    def from_rows(cls, rows, normalize: bool = False) -> "Dataset":
        """Build from an ``n x d0`` array with one point per row."""
        return cls.from_points(np.asarray(rows, dtype=np.float64).T, normalize=normalize)

    @property
    def dim(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def X(self) -> np.ndarray:
        return self.points

    def gram(self) -> np.ndarray:
        """Inner products ``X^T X`` clipped to ``[-1, 1]``."""
        G = self.points.T @ self.points
        return np.clip(G, -1.0, 1.0)

    @cached_property
    def separation(self) -> SeparationStats:
        return separation_stats(self)

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "points": self.points.T.tolist()})

    @classmethod
    def from_json(cls, text: str, normalize: bool = False) -> "Dataset":
        obj = json.loads(text)
        rows = np.asarray(obj["points"], dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != obj["dim"]:
            raise DomainError("JSON dataset: point length does not match 'dim'")
        return cls.from_rows(rows, normalize=normalize)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(f"x{j}" for j in range(self.dim)) + "\n")
        for row in self.points.T:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, normalize: bool = False) -> "Dataset":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        header = lines[0].split(",")
        if header != [f"x{j}" for j in range(len(header))]:
            raise DomainError("CSV dataset header must be x0,x1,...")
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        return cls.from_rows(rows.reshape(-1, len(header)), normalize=normalize)


def load_dataset(path, normalize: bool = False) -> Dataset:
    """Read a dataset from ``.json`` or ``.csv`` (by extension)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return Dataset.from_csv(text, normalize=normalize)
    return Dataset.from_json(text, normalize=normalize)


def sample_uniform_sphere(d0: int, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. uniform points on the unit sphere in ``R^d0``.

    Normalized standard Gaussian vectors. Point ``i`` consumes Gaussian draws
    ``i*d0 .. (i+1)*d0 - 1`` of the stream seeded by ``seed``, so a prefix of a
    larger sample equals a smaller sample with the same seed.
    """
    if d0 < 1 or n < 1:
        raise DomainError(f"need d0 >= 1 and n >= 1, got d0={d0}, n={n}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, d0))
    norms = np.linalg.norm(G, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; fall back to e1 for safety
    zero = norms[:, 0] == 0
    if np.any(zero):
        G[zero] = 0.0
        G[zero, 0] = 1.0
        norms[zero] = 1.0
    return Dataset((G / norms).T)


def separation_stats(data: Dataset) -> SeparationStats:
    """Exact pairwise separation statistics by direct difference norms."""
    n = data.n
    if n < 2:
        return SeparationStats(math.inf, math.inf, None)
    rows = data.points.T
    minus = pdist(rows)
    iu, ku = np.triu_indices(n, k=1)
    plus = cdist(rows, -rows)[iu, ku]
    j = int(np.argmin(minus))
    delta_prime = float(minus[j])
    delta = float(min(minus.min(), plus.min()))
    return SeparationStats(delta, delta_prime, (int(iu[j]), int(ku[j])))


def operator_norm(data: Dataset) -> float:
    """Largest singular value of the ``d0 x n`` data matrix."""
    evals = np.linalg.eigvalsh(data.points.T @ data.points)
    return float(math.sqrt(max(evals[-1], 0.0)))


def cap_volume_bounds(d0: int, delta: float, cap_const: float = 1.0) -> tuple[float, float]:
    """Lower and upper bounds on the normalized measure of a spherical cap.

    The cap is ``{y : |y - x| <= delta}``. Returns ``(0.5*(delta/2)**(d0-1),
    4*sqrt(pi)*(cap_const*delta)**(d0-1)/d0**2)``.
    """
    if d0 < 2:
        raise DomainError(f"cap bounds need d0 >= 2, got {d0}")
    if not 0.0 < delta < 0.5:
        raise DomainError(f"cap bounds need delta in (0, 1/2), got {delta}")
    if cap_const <= 0:
        raise DomainError("cap_const must be positive")
    lower = 0.5 * (delta / 2.0) ** (d0 - 1)
    upper = 4.0 * math.sqrt(math.pi) * (cap_const * delta) ** (d0 - 1) / d0**2
    return lower, upper
