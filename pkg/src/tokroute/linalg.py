"""Small dense-matrix layer used by every other module.

Matrices are float32 numpy arrays in row-major order. Products and
reductions accumulate in float64 and round back to float32 once at the
end, so results are reproducible across call sites regardless of how an
expression is parenthesized.
"""

import numpy as np

from .errors import ShapeError

DTYPE = np.float32

# sqrt(2/pi), rounded to float64 once so every caller sees the same constant
_GELU_C = 0.7978845608028654
_GELU_A = 0.044715


def as_matrix(data):
    """Coerce array-like data to a 2-D float32 matrix."""
    m = np.asarray(data, dtype=DTYPE)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"expected at most 2 dimensions, got {m.ndim}")
    return np.ascontiguousarray(m)


def matmul(a, b):
    """Matrix product with float64 accumulation, rounded to float32.

    Shapes (n, k) @ (k, m) -> (n, m).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    out = a.astype(np.float64) @ b.astype(np.float64)
    return out.astype(DTYPE)


def add(a, b):
    """Elementwise sum in float64, rounded to float32. Shapes must match."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} + {b.shape}")
    return (a.astype(np.float64) + b.astype(np.float64)).astype(DTYPE)


def scale(a, s):
    """Multiply a matrix by a scalar in float64, rounded to float32."""
    return (np.asarray(a, dtype=np.float64) * float(s)).astype(DTYPE)


def gelu(x):
    """Tanh-form GELU: 0.5 * x * (1 + tanh(c * (x + a * x^3))).

    Applied elementwise with float64 internals.
    """
    x = np.asarray(x, dtype=np.float64)
    inner = _GELU_C * (x + _GELU_A * x**3)
    return (0.5 * x * (1.0 + np.tanh(inner))).astype(DTYPE)


def gelu_f64(x):
    """Float64 GELU, for training code that defers rounding."""
    x = np.asarray(x, dtype=np.float64)
    inner = _GELU_C * (x + _GELU_A * x**3)
    return 0.5 * x * (1.0 + np.tanh(inner))


def gelu_grad_f64(x):
    """Derivative of the tanh-form GELU, float64 elementwise."""
    x = np.asarray(x, dtype=np.float64)
    u = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(u)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du


def softmax(x, axis=-1):
    """Max-subtracted softmax along an axis, float64 internals, float32 out."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return (e / np.sum(e, axis=axis, keepdims=True)).astype(DTYPE)


def softmax_f64(x, axis=-1):
    """Max-subtracted softmax kept in float64, for training code."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def frobenius_rel_err(a, b):
    """Relative difference ||a - b||_F / max(||b||_F, tiny)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    denom = max(float(np.linalg.norm(b)), 1e-30)
    return float(np.linalg.norm(a - b)) / denom
