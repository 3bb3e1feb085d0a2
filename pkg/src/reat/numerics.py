"""Dense double-precision kernels shared by every other module.

Vectors are 1-D float64 numpy arrays, matrices 2-D row-major. All functions
are pure, validate operand shapes up front, and never hand back NaN/Inf for
finite inputs, so the layers above can lean on them without re-checking.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SAFE_DIVIDE_EPS",
    "DimensionError",
    "affine",
    "elementwise",
    "hadamard",
    "make_rng",
    "safe_divide",
    "sigmoid",
    "softmax",
    "tanh",
]

# Denominator clamp for safe_divide; sigmoid outputs can underflow toward 0.
SAFE_DIVIDE_EPS = 1e-8


class DimensionError(ValueError):
    """Operand shapes do not line up."""


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic 64-bit generator; use ``rng.spawn(n)`` for substreams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _vector(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite entries")
    return arr


def _matrix(m, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite entries")
    return arr


def affine(m, v, b) -> np.ndarray:
    """Matrix-vector product plus bias: ``m @ v + b``."""
    m = _matrix(m, "m")
    v = _vector(v, "v")
    b = _vector(b, "b")
    if m.shape[1] != v.size:
        raise DimensionError(f"m has {m.shape[1]} columns but v has length {v.size}")
    if m.shape[0] != b.size:
        raise DimensionError(f"m has {m.shape[0]} rows but b has length {b.size}")
    return m @ v + b


def sigmoid(a) -> np.ndarray:
    """Logistic function, computed on the stable branch of exp."""
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    pos = a >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def tanh(a) -> np.ndarray:
    return np.tanh(np.asarray(a, dtype=np.float64))


def hadamard(a, b) -> np.ndarray:
    a = _vector(a, "a")
    b = _vector(b, "b")
    if a.size != b.size:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    return a * b


def safe_divide(a, b) -> np.ndarray:
    """Element-wise ``a / b`` with each denominator pushed away from zero.

    Denominators are clamped to sign(b) * max(|b|, SAFE_DIVIDE_EPS); an
    exactly-zero denominator counts as positive.
    """
    a = _vector(a, "a")
    b = _vector(b, "b")
    if a.size != b.size:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    denom = np.where(b >= 0.0, np.maximum(b, SAFE_DIVIDE_EPS), np.minimum(b, -SAFE_DIVIDE_EPS))
    return a / denom


_UNARY = {"sigmoid": sigmoid, "tanh": tanh}
_BINARY = {"hadamard": hadamard, "safe_divide": safe_divide}


def elementwise(kind: str, a, b=None) -> np.ndarray:
    """Dispatch on ``kind`` in {sigmoid, tanh, hadamard, safe_divide}."""
    if kind in _UNARY:
        if b is not None:
            raise DimensionError(f"{kind} takes a single operand")
        return _UNARY[kind](_vector(a, "a"))
    if kind in _BINARY:
        if b is None:
            raise DimensionError(f"{kind} needs two operands")
        return _BINARY[kind](a, b)
    raise ValueError(f"unknown elementwise kind: {kind!r}")


def softmax(z) -> np.ndarray:
    """Probabilities from logits, with max-subtraction for stability."""
    z = _vector(z, "z")
    if z.size == 0:
        raise DimensionError("softmax of an empty vector")
    shifted = np.exp(z - np.max(z))
    return shifted / np.sum(shifted)
