"""Dense complex operator arithmetic.

Operators are plain ``complex128`` numpy arrays. Antilinear maps carry their
conjugation explicitly in :class:`AntilinearOperator` so they can never be
multiplied as if they were linear.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la


class DimensionError(ValueError):
    pass


class NonFiniteError(ArithmeticError):
    pass


def as_operator(a) -> np.ndarray:
    """Return ``a`` as a square complex128 array, checking finiteness."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("operator has non-finite entries")
    return m


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_dims(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_dims(a, b)
    return a @ b + b @ a


def dagger(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def operator_norm(a) -> float:
    """Largest singular value."""
    a = np.asarray(a)
    if a.size == 0 or not np.any(a):
        return 0.0
    return float(np.linalg.norm(a, 2))


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(a)))


def matrix_exponential(a, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * a)`` by scaling and squaring, exact for diagonal input."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or not np.isfinite(scale):
        raise NonFiniteError("matrix_exponential: non-finite entries")
    x = scale * a
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("matrix_exponential: non-finite entries")
    d = np.diag(x)
    if np.count_nonzero(x - np.diag(d)) == 0:
        return np.diag(np.exp(d))
    return la.expm(x)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


@dataclass(frozen=True)
class AntilinearOperator:
    """The map ``v -> matrix @ conj(v)``."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_operator(self.matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, v) -> np.ndarray:
        return self.matrix @ np.conj(v)

    def compose(self, other: "AntilinearOperator") -> np.ndarray:
        """``self . other``, which is linear: matrix @ conj(other.matrix)."""
        return self.matrix @ np.conj(other.matrix)

    def square(self) -> np.ndarray:
        return self.compose(self)

    def conjugate_linear(self, a) -> np.ndarray:
        """The linear operator ``C a C`` (``a`` sandwiched between two copies)."""
        return self.matrix @ np.conj(a) @ np.conj(self.matrix)

    def scaled(self, s: float) -> "AntilinearOperator":
        return AntilinearOperator(s * self.matrix)

    def commutation_residual(self, u) -> float:
        """Norm of ``C u - u C`` as a map, i.e. ``||M conj(u) - u M||``."""
        u = np.asarray(u)
        return operator_norm(self.matrix @ np.conj(u) - u @ self.matrix)


@dataclass(frozen=True)
class ToleranceConfig:
    """Pass rule ``residual <= abs_tol + rel_tol * scale``.

    ``refinement_exponent`` is the power of the grid spacing with which a
    residual is expected to shrink; it is carried into report metadata.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 0.0
    refinement_exponent: float = 0.0

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")

    def threshold(self, scale: float = 0.0) -> float:
        return self.abs_tol + self.rel_tol * scale

    def allows(self, residual: float, scale: float = 0.0) -> bool:
        return bool(residual <= self.threshold(scale))
