"""Symmetric kernel matrices and their smallest eigenvalue."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SYMMETRY_TOL = 1e-10
CLAMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EigenReport:
    """Smallest eigenvalue with a flag set when it was clamped to zero."""

    lambda_min: float
    clamped: bool
    raw: float

    def to_json(self) -> str:
        return json.dumps({"lambda_min": self.lambda_min, "clamped": self.clamped})


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """A symmetric ``n x n`` real matrix."""

    entries: np.ndarray

    def __post_init__(self):
        K = np.array(self.entries, dtype=np.float64, copy=True)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
            raise DomainError(f"kernel matrix must be square and non-empty, got {K.shape}")
        if not np.all(np.isfinite(K)):
            raise DomainError("kernel matrix has non-finite entries")
        asym = float(np.max(np.abs(K - K.T)))
        if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(K)))):
            raise DomainError(f"kernel matrix is not symmetric (max deviation {asym:.3e})")
        K.setflags(write=False)
        object.__setattr__(self, "entries", K)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the symmetrized matrix."""
        K = self.entries
        return np.linalg.eigvalsh(0.5 * (K + K.T))

    def eigen_report(self) -> EigenReport:
        raw = float(self.eigenvalues()[0])
        if abs(raw) < CLAMP_TOL:
            return EigenReport(0.0, True, raw)
        return EigenReport(raw, False, raw)

    def is_psd(self, tol: float = 1e-10) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        return bool(self.eigenvalues()[0] >= -tol * scale)

    def __add__(self, other: "KernelMatrix") -> "KernelMatrix":
        return KernelMatrix(self.entries + other.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.entries:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "entries": self.entries.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "KernelMatrix":
        obj = json.loads(text)
        K = cls(np.asarray(obj["entries"], dtype=np.float64))
        if K.n != obj["n"]:
            raise DomainError("JSON kernel: 'n' does not match entries")
        return K


def min_eigenvalue(K) -> float:
    """Smallest eigenvalue, with magnitudes below ``1e-12`` reported as 0."""
    if not isinstance(K, KernelMatrix):
        K = KernelMatrix(K)
    return K.eigen_report().lambda_min
