"""Finite-width ReLU networks at Gaussian initialization and their NTK Gram matrices.

Shallow network: ``f(x) = d1**-0.5 * sum_j v_j relu(w_j . x)``.

Deep network with widths ``d0, d1, ..., d_{L-1}, 1``: hidden features
``f_l = relu(W_l f_{l-1})`` with ``f_0 = x``, raw output ``W_L f_{L-1}``, and
normalized output ``prod_{l<L} sqrt(2/d_l) * W_L f_{L-1}`` so that the kernel is
of order one.
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, GeneralPositionError
from .linalg import KernelMatrix, min_eigenvalue
from .sphere import Dataset

__all__ = [
    "ShallowParams", "DeepParams", "NtkParts", "LayerTrace", "BackpropProfile",
    "init_shallow", "init_deep", "shallow_forward", "shallow_gradient", "shallow_ntk",
    "shallow_ntk_streamed", "gradient_distance", "deep_forward", "deep_trace",
    "deep_ntk_decomposed", "deep_ntk_fd", "min_eigenvalue", "feature_norm_profile",
    "backprop_norm_profile", "backprop_scale", "op_scale", "pattern_disagreement",
    "save_params", "load_params", "params_to_json", "params_from_json",
]

DEFAULT_CHUNK = 200_000
_MAGIC = b"NTKP"
_VERSION = 1
_NO_SEED = 2**64 - 1


def _relu(z):
    return np.maximum(z, 0.0)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ShallowParams:
    """Hidden weights ``W`` (``d1 x d0``) and output weights ``v`` (length ``d1``)."""

    W: np.ndarray
    v: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        W, v = _frozen(self.W), _frozen(self.v).reshape(-1)
        if W.ndim != 2 or W.shape[0] != v.shape[0] or W.size == 0:
            raise DomainError(f"incompatible shapes W{W.shape}, v{v.shape}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "v", v)

    @property
    def d0(self) -> int:
        return self.W.shape[1]

    @property
    def d1(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True, eq=False)
class DeepParams:
    """Weights ``W_1 .. W_L`` with ``W_l`` of shape ``d_l x d_{l-1}`` and ``d_L = 1``."""

    weights: tuple
    seed: int | None = None

    def __post_init__(self):
        Ws = tuple(_frozen(W) for W in self.weights)
        if len(Ws) < 2:
            raise DomainError("a deep network needs at least two weight matrices")
        for l, W in enumerate(Ws, start=1):
            if W.ndim != 2 or W.size == 0:
                raise DomainError(f"W_{l} must be a non-empty matrix")
            if l > 1 and W.shape[1] != Ws[l - 2].shape[0]:
                raise DomainError(f"W_{l} has {W.shape[1]} columns, expected {Ws[l - 2].shape[0]}")
        if Ws[-1].shape[0] != 1:
            raise DomainError("the output layer must have width 1")
        object.__setattr__(self, "weights", Ws)

    @property
    def L(self) -> int:
        return len(self.weights)

    @property
    def widths(self) -> tuple[int, ...]:
        """``(d0, d1, ..., d_{L-1}, 1)``."""
        return (self.weights[0].shape[1],) + tuple(W.shape[0] for W in self.weights)

    def W(self, l: int) -> np.ndarray:
        """Weight matrix of layer ``l`` (1-based)."""
        return self.weights[l - 1]

    @property
    def normalization(self) -> float:
        """``prod_{l=1}^{L-1} d_l / 2``, the factor between raw and normalized kernels."""
        return math.prod(d / 2.0 for d in self.widths[1:-1])


@dataclass(frozen=True, eq=False)
class NtkParts:
    """Shallow NTK ``K`` split into its hidden-layer and output-layer blocks."""

    K: KernelMatrix
    K1: KernelMatrix
    K2: KernelMatrix


@dataclass(frozen=True, eq=False)
class LayerTrace:
    """Every intermediate quantity of a deep forward/backward pass.

    Accessors take 1-based layer indices. ``F(0)`` is the data matrix, ``Sigma(l)``
    is the ``d_l x n`` boolean firing pattern, ``B(l)`` is ``n x d_l`` with
    ``B(L)`` all ones, and ``S(l)`` is ``n x d_l x d_{L-1}``.
    """

    features: tuple
    preacts: tuple
    patterns: tuple
    backprop: tuple
    smats: tuple | None

    @property
    def L(self) -> int:
        return len(self.backprop)

    def F(self, l: int) -> np.ndarray:
        return self.features[l]

    def Z(self, l: int) -> np.ndarray:
        return self.preacts[l - 1]

    def Sigma(self, l: int) -> np.ndarray:
        return self.patterns[l - 1]

    def B(self, l: int) -> np.ndarray:
        return self.backprop[l - 1]

    def S(self, l: int) -> np.ndarray:
        if self.smats is None:
            raise DomainError("trace was built without S matrices")
        return self.smats[l - 1]

    def to_csv(self) -> str:
        """Per-layer diagnostics with columns ``layer,quantity,value``."""
        buf = io.StringIO()
        buf.write("layer,quantity,value\n")
        for l in range(self.L):
            F = self.features[l]
            for i, v in enumerate(np.einsum("ai,ai->i", F, F)):
                buf.write(f"{l},feature_norm_sq[{i}],{float(v)!r}\n")
            if l >= 1:
                for i, c in enumerate(self.patterns[l - 1].sum(axis=0)):
                    buf.write(f"{l},active_units[{i}],{int(c)}\n")
        for l in range(1, self.L + 1):
            B = self.backprop[l - 1]
            for i, v in enumerate(np.einsum("ia,ia->i", B, B)):
                buf.write(f"{l},backprop_norm_sq[{i}],{float(v)!r}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class BackpropProfile:
    """Per-layer norms of ``S_l(x)`` for ``l = 1 .. L-1`` (index 0 is layer 1)."""

    sw: np.ndarray
    frob: np.ndarray
    op: np.ndarray


# ---------------------------------------------------------------- shallow

def _shallow_streams(seed: int):
    s_w, s_v = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(s_w), np.random.default_rng(s_v)


def init_shallow(d0: int, d1: int, seed: int) -> ShallowParams:
    """Standard Gaussian ``W`` and ``v``; ``W`` and ``v`` use separate spawned streams."""
    if d0 < 1 or d1 < 1:
        raise DomainError(f"need d0, d1 >= 1, got {d0}, {d1}")
    rng_w, rng_v = _shallow_streams(seed)
    return ShallowParams(rng_w.standard_normal((d1, d0)), rng_v.standard_normal(d1), seed)


def _as_points(x, d0: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != d0:
        raise DomainError(f"input has dimension {x.shape[0]}, expected {d0}")
    return x


def shallow_forward(p: ShallowParams, x) -> float:
    x = _as_points(x, p.d0)
    return float(p.v @ _relu(p.W @ x)) / math.sqrt(p.d1)


def shallow_gradient(p: ShallowParams, x) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the output with respect to ``(W, v)``."""
    x = _as_points(x, p.d0)
    z = p.W @ x
    scale = 1.0 / math.sqrt(p.d1)
    gW = np.outer(p.v * (z > 0), x) * scale
    gv = _relu(z) * scale
    return gW, gv


def gradient_distance(p: ShallowParams, x, x_prime) -> float:
    """Euclidean distance between parameter gradients at two inputs."""
    gW, gv = shallow_gradient(p, x)
    hW, hv = shallow_gradient(p, x_prime)
    return math.sqrt(float(np.sum((gW - hW) ** 2) + np.sum((gv - hv) ** 2)))


def _shallow_blocks(chunks, X: np.ndarray, d1: int) -> NtkParts:
    acc1, acc2 = [], []
    for W, v in chunks:
        Z = W @ X
        A = (Z > 0).astype(np.float64)
        S = _relu(Z)
        acc1.append((A * (v * v)[:, None]).T @ A)
        acc2.append(S.T @ S)
    G1 = np.sum(np.stack(acc1), axis=0) / d1
    G2 = np.sum(np.stack(acc2), axis=0) / d1
    K1 = G1 * (X.T @ X)
    K1 = 0.5 * (K1 + K1.T)
    K2 = 0.5 * (G2 + G2.T)
    return NtkParts(KernelMatrix(K1 + K2), KernelMatrix(K1), KernelMatrix(K2))


def shallow_ntk(p: ShallowParams, data: Dataset, chunk_rows: int = DEFAULT_CHUNK) -> NtkParts:
    """NTK Gram matrix and its two blocks, accumulated over row chunks of ``W``."""
    X = _as_points(data.points, p.d0)
    chunks = ((p.W[s:s + chunk_rows], p.v[s:s + chunk_rows]) for s in range(0, p.d1, chunk_rows))
    return _shallow_blocks(chunks, X, p.d1)


def shallow_ntk_streamed(d0: int, d1: int, seed: int, data: Dataset,
                         chunk_rows: int = DEFAULT_CHUNK) -> NtkParts:
    """Same result as ``shallow_ntk(init_shallow(d0, d1, seed), data)`` without
    holding all of ``W`` in memory; suitable for widths in the millions."""
    if d0 < 1 or d1 < 1:
        raise DomainError(f"need d0, d1 >= 1, got {d0}, {d1}")
    X = _as_points(data.points, d0)
    rng_w, rng_v = _shallow_streams(seed)

    def chunks():
        for s in range(0, d1, chunk_rows):
            m = min(chunk_rows, d1 - s)
            yield rng_w.standard_normal((m, d0)), rng_v.standard_normal(m)

    return _shallow_blocks(chunks(), X, d1)


# ---------------------------------------------------------------- deep

def init_deep(widths, seed: int) -> DeepParams:
    """Gaussian weights for hidden widths ``(d0, d1, ..., d_{L-1})``; ``d_L = 1`` is appended."""
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise DomainError(f"need at least (d0, d1) with positive entries, got {widths}")
    full = widths + [1]
    rng = np.random.default_rng(seed)
    Ws = [rng.standard_normal((full[l], full[l - 1])) for l in range(1, len(full))]
    return DeepParams(tuple(Ws), seed)


def _deep_pass(weights, X):
    """Hidden features, pre-activations and raw output for columns of ``X``."""
    feats, pre = [X], []
    F = X
    for W in weights[:-1]:
        Z = W @ F
        pre.append(Z)
        F = _relu(Z)
        feats.append(F)
    return feats, pre, (weights[-1] @ F)[0]


def deep_forward(p: DeepParams, x):
    """Normalized output; a scalar for a vector input, a vector for a ``d0 x n`` matrix."""
    x = _as_points(x, p.widths[0])
    X = x.reshape(p.widths[0], -1)
    out = _deep_pass(p.weights, X)[2] / math.sqrt(p.normalization)
    return float(out[0]) if x.ndim == 1 else out


def _trace(p: DeepParams, X: np.ndarray, with_S: bool) -> LayerTrace:
    L = p.L
    feats, pre, _ = _deep_pass(p.weights, X)
    patterns = tuple(Z > 0 for Z in pre)
    # backprop rows by the vector recursion b_l = Sigma_l W_{l+1}^T b_{l+1}, b_L = 1
    n = X.shape[1]
    B = [None] * L
    B[L - 1] = np.ones((n, 1))
    for l in range(L - 1, 0, -1):
        B[l - 1] = (B[l] @ p.W(l + 1)) * patterns[l - 1].T
    smats = None
    if with_S:
        S = [None] * (L - 1)
        S[L - 2] = np.einsum("ai,ab->iab", patterns[L - 2].astype(np.float64), np.eye(p.widths[L - 1]))
        for l in range(L - 2, 0, -1):
            S[l - 1] = np.einsum("ba,ibc->iac", p.W(l + 1), S[l]) * patterns[l - 1].T[:, :, None]
        smats = tuple(S)
    return LayerTrace(tuple(feats), tuple(pre), patterns, tuple(B), smats)


def deep_trace(p: DeepParams, data: Dataset, with_S: bool = True) -> LayerTrace:
    """Features, firing patterns, backpropagation rows and (optionally) ``S_l`` matrices."""
    return _trace(p, _as_points(data.points, p.widths[0]), with_S)


def deep_ntk_decomposed(p: DeepParams, data: Dataset, normalized: bool = True) -> KernelMatrix:
    """Deep NTK as ``sum_l (F_l^T F_l) * (B_{l+1} B_{l+1}^T)``.

    With ``normalized=False`` the raw sum is returned, which is the normalized
    kernel times ``p.normalization``.
    """
    tr = deep_trace(p, data, with_S=False)
    raw = np.zeros((data.n, data.n))
    for l in range(p.L):
        F, B = tr.F(l), tr.B(l + 1)
        raw += (F.T @ F) * (B @ B.T)
    if normalized:
        raw = raw / p.normalization
    return KernelMatrix(0.5 * (raw + raw.T))


def deep_ntk_fd(p: DeepParams, data: Dataset, h: float = 1e-5) -> KernelMatrix:
    """Gram matrix of the central finite-difference Jacobian of the normalized output.

    Raises :class:`GeneralPositionError` when a pre-activation lies within
    ``10*h`` of zero or any perturbation changes a firing pattern.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    X = _as_points(data.points, p.widths[0])
    _, pre, _ = _deep_pass(p.weights, X)
    near = [(l, int(a), int(i)) for l, Z in enumerate(pre, start=1)
            for a, i in zip(*np.nonzero(np.abs(Z) <= 10.0 * h))]
    if near:
        raise GeneralPositionError(f"{len(near)} pre-activations within 10h of zero", near)
    base = [Z > 0 for Z in pre]
    scale = 1.0 / math.sqrt(p.normalization)
    weights = [np.array(W) for W in p.weights]
    cols, flipped = [], []
    for l, W in enumerate(weights, start=1):
        for idx in np.ndindex(W.shape):
            w0 = W[idx]
            outs = []
            for step in (h, -h):
                W[idx] = w0 + step
                _, zs, out = _deep_pass(weights, X)
                if any(not np.array_equal(Z > 0, b) for Z, b in zip(zs, base)):
                    flipped.append((l,) + tuple(int(i) for i in idx))
                outs.append(out)
            W[idx] = w0
            cols.append((outs[0] - outs[1]) * (scale / (2.0 * h)))
    if flipped:
        raise GeneralPositionError(f"{len(flipped)} coordinates change a firing pattern", flipped)
    J = np.stack(cols, axis=1)
    K = J @ J.T
    return KernelMatrix(0.5 * (K + K.T))


def feature_norm_profile(p: DeepParams, x) -> np.ndarray:
    """``|f_l(x)|^2 / prod_{h<=l} (d_h/2)`` for ``l = 1 .. L-1``."""
    x = _as_points(x, p.widths[0]).reshape(-1, 1)
    feats, _, _ = _deep_pass(p.weights, x)
    out, scale = [], 1.0
    for l in range(1, p.L):
        scale *= p.widths[l] / 2.0
        out.append(float(np.sum(feats[l] ** 2)) / scale)
    return np.array(out)


def backprop_scale(widths, l: int) -> float:
    """``2**(-L+l+1) * prod_{k=l}^{L-1} d_k`` for widths ``(d0, ..., d_{L-1}, 1)``."""
    L = len(widths) - 1
    return 2.0 ** (-L + l + 1) * math.prod(widths[l:L])


def op_scale(widths, l: int) -> float:
    """``prod_{k=l}^{L-2} d_k`` (empty product is 1)."""
    L = len(widths) - 1
    return float(math.prod(widths[l:L - 1]))


def backprop_norm_profile(p: DeepParams, x) -> BackpropProfile:
    """``|S_l W_L^T|^2``, ``|S_l|_F^2`` and ``|S_l|^2`` for ``l = 1 .. L-1``."""
    x = _as_points(x, p.widths[0]).reshape(-1, 1)
    tr = _trace(p, x, with_S=True)
    wl = p.W(p.L)[0]
    sw, frob, op = [], [], []
    for l in range(1, p.L):
        S = tr.S(l)[0]
        sw.append(float(np.sum((S @ wl) ** 2)))
        frob.append(float(np.sum(S * S)))
        op.append(float(np.linalg.norm(S, 2) ** 2) if S.any() else 0.0)
    return BackpropProfile(np.array(sw), np.array(frob), np.array(op))


def pattern_disagreement(theta: float, samples: int, seed: int, d: int = 3) -> tuple[float, float]:
    """Fraction of Gaussian rows whose firing differs at two unit inputs ``theta`` apart.

    Returns ``(frequency, standard error)``.
    """
    if samples < 1 or d < 2:
        raise DomainError("need samples >= 1 and d >= 2")
    x = np.zeros(d)
    x[0] = 1.0
    y = np.zeros(d)
    y[0], y[1] = math.cos(theta), math.sin(theta)
    W = np.random.default_rng(seed).standard_normal((samples, d))
    flips = (W @ x > 0) != (W @ y > 0)
    freq = float(np.mean(flips))
    return freq, math.sqrt(max(freq * (1.0 - freq), 0.0) / samples)


# ---------------------------------------------------------------- serialization

def _param_arrays(p):
    if isinstance(p, ShallowParams):
        return 0, [p.d0, p.d1], [p.W, p.v]
    if isinstance(p, DeepParams):
        return 1, list(p.widths), list(p.weights)
    raise TypeError(f"cannot serialize {type(p).__name__}")


def save_params(p, path) -> None:
    """Write parameters to a little-endian binary container."""
    kind, widths, arrays = _param_arrays(p)
    seed = _NO_SEED if p.seed is None else int(p.seed)
    head = _MAGIC + struct.pack("<BBHIQ", _VERSION, kind, 0, len(widths), seed)
    head += struct.pack(f"<{len(widths)}Q", *widths)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    Path(path).write_bytes(head + body)


def load_params(path):
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise DomainError("not a parameter file")
    version, kind, _, count, seed = struct.unpack_from("<BBHIQ", raw, 4)
    if version != _VERSION:
        raise DomainError(f"unsupported parameter file version {version}")
    off = 4 + struct.calcsize("<BBHIQ")
    widths = struct.unpack_from(f"<{count}Q", raw, off)
    off += 8 * count
    data = np.frombuffer(raw, dtype="<f8", offset=off).astype(np.float64)
    seed = None if seed == _NO_SEED else seed
    if kind == 0:
        d0, d1 = widths
        return ShallowParams(data[:d0 * d1].reshape(d1, d0), data[d0 * d1:d0 * d1 + d1], seed)
    Ws, pos = [], 0
    for l in range(1, len(widths)):
        size = widths[l] * widths[l - 1]
        Ws.append(data[pos:pos + size].reshape(widths[l], widths[l - 1]))
        pos += size
    return DeepParams(tuple(Ws), seed)


def params_to_json(p) -> str:
    kind, widths, arrays = _param_arrays(p)
    obj = {"kind": "shallow" if kind == 0 else "deep", "widths": widths, "seed": p.seed}
    if kind == 0:
        obj["W"], obj["v"] = arrays[0].tolist(), arrays[1].tolist()
    else:
        obj["weights"] = [W.tolist() for W in arrays]
    return json.dumps(obj)


def params_from_json(text: str):
    obj = json.loads(text)
    if obj["kind"] == "shallow":
        return ShallowParams(np.asarray(obj["W"]), np.asarray(obj["v"]), obj.get("seed"))
    return DeepParams(tuple(np.asarray(W, dtype=np.float64) for W in obj["weights"]), obj.get("seed"))
