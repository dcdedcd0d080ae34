"""Dense Hermitian matrix primitives.

All routines work on plain ``numpy`` arrays; :class:`DensityOperator` and
:class:`CyclicUnitary` are thin validated wrappers that also behave as arrays
(``np.asarray(rho)`` returns the underlying matrix).

Conventions shared by every module:

* eigenvalues ``<= SUPPORT_CUTOFF`` are treated as exactly zero (supports,
  logarithms, Nussbaum-Szkola pairs);
* logarithms are natural, so every rate and exponent is in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ValidationError

SUPPORT_CUTOFF = 1e-12
HERMITIAN_TOL = 1e-12
NEGATIVE_TOL = 1e-12
TRACE_TOL = 1e-10
UNITARY_TOL = 1e-10


def _as_square(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}",
                              [("NOT_SQUARE", f"shape {a.shape}")])
    return a


def hermitian(matrix, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``matrix`` as a complex array after checking ``H == H^dagger``.

    The result is symmetrized so later eigensolvers see an exactly Hermitian
    input.
    """
    a = _as_square(matrix)
    err = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if err > tol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {err:.3e})",
                              [("NOT_HERMITIAN", f"max |H - H^dagger| = {err:.3e}")])
    return 0.5 * (a + a.conj().T)


def eigh(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending eigenvalues and orthonormal eigenvector columns. The phase
    of every column is fixed (largest-magnitude entry real and positive) so the
    output is a deterministic function of the input.
    """
    a = hermitian(h)
    w, u = np.linalg.eigh(a)
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    phases = pivots / np.abs(pivots)
    u = u / phases[np.newaxis, :]
    return w, u


def _psd_spectrum(h) -> tuple[np.ndarray, np.ndarray]:
    w, u = eigh(h)
    if w.size and w[0] < -NEGATIVE_TOL:
        raise ValidationError(f"matrix has a negative eigenvalue {w[0]:.3e}",
                              [("NEGATIVE_EIGENVALUE", f"min eigenvalue {w[0]:.3e}")])
    return np.clip(w, 0.0, None), u


def _from_spectrum(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = (u * w) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def frac_power(rho, a: float) -> np.ndarray:
    """``rho**a`` for a PSD matrix with the convention ``0**a = 0``.

    ``a == 0`` returns the support projector (eigenvalues above the support
    cutoff map to exactly 1).
    """
    if a < 0:
        raise ValueError("exponent must be nonnegative")
    w, u = _psd_spectrum(rho)
    support = w > SUPPORT_CUTOFF
    if a == 0:
        mapped = support.astype(float)
    else:
        mapped = np.where(support, np.power(np.where(support, w, 1.0), a), 0.0)
    return _from_spectrum(mapped, u)


def support_projector(rho) -> np.ndarray:
    return frac_power(rho, 0.0)


def log_on_support(rho) -> np.ndarray:
    """Matrix logarithm restricted to the support (zero on the kernel)."""
    w, u = _psd_spectrum(rho)
    support = w > SUPPORT_CUTOFF
    return _from_spectrum(np.where(support, np.log(np.where(support, w, 1.0)), 0.0), u)


def trace_product(a, b) -> float:
    """Real part of ``Tr[AB]``; the imaginary part must vanish for Hermitian pairs."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch {a.shape} vs {b.shape}",
                              [("DIM_MISMATCH", f"{a.shape} vs {b.shape}")])
    value = np.sum(a * b.T)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ValueError(f"Tr[AB] has imaginary part {value.imag:.3e}")
    return float(value.real)


def trace_distance(a, b) -> float:
    w = np.linalg.eigvalsh(hermitian(np.asarray(a) - np.asarray(b)))
    return 0.5 * float(np.sum(np.abs(w)))


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def _density_violations(a: np.ndarray) -> list[tuple[str, str]]:
    violations = []
    herm = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if herm > HERMITIAN_TOL:
        violations.append(("NOT_HERMITIAN", f"max |W - W^dagger| = {herm:.3e}"))
        return violations
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    if w.size and w[0] < -NEGATIVE_TOL:
        violations.append(("NEGATIVE_EIGENVALUE", f"min eigenvalue {w[0]:.3e}"))
    tr = np.trace(a).real
    if abs(tr - 1.0) > TRACE_TOL:
        violations.append(("TRACE_NOT_ONE", f"trace {tr:.12g}"))
    return violations


def _unitary_violations(v: np.ndarray, order: int) -> list[tuple[str, str]]:
    violations = []
    eye = np.eye(v.shape[0])
    dev = max(np.linalg.norm(v.conj().T @ v - eye), np.linalg.norm(v @ v.conj().T - eye))
    if dev > UNITARY_TOL:
        violations.append(("V_NOT_UNITARY", f"||V^dagger V - I||_F = {dev:.3e}"))
    if order < 1:
        violations.append(("V_ORDER", f"order must be positive, got {order}"))
    else:
        dev_k = np.linalg.norm(np.linalg.matrix_power(v, order) - eye)
        if dev_k > UNITARY_TOL:
            violations.append(("V_ORDER", f"||V^{order} - I||_F = {dev_k:.3e}"))
    return violations


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian PSD unit-trace matrix. Tiny negative eigenvalues are clamped."""

    matrix: np.ndarray

    def __post_init__(self):
        a = _as_square(self.matrix)
        violations = _density_violations(a)
        if violations:
            raise ValidationError("not a density operator: " + "; ".join(m for _, m in violations),
                                  violations)
        w, u = eigh(a)
        if w[0] < 0:
            a = _from_spectrum(np.clip(w, 0.0, None), u)
        else:
            a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class CyclicUnitary:
    matrix: np.ndarray
    order: int

    def __post_init__(self):
        v = _as_square(self.matrix)
        violations = _unitary_violations(v, int(self.order))
        if violations:
            raise ValidationError("not a cyclic unitary: " + "; ".join(m for _, m in violations),
                                  violations)
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "matrix", v)
        object.__setattr__(self, "order", int(self.order))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def validate(w1, v, k: int) -> tuple[DensityOperator, CyclicUnitary]:
    """Validate a generator state and cyclic unitary, collecting every violation."""
    w1 = _as_square(w1)
    v = _as_square(v)
    if w1.shape != v.shape:
        raise ValidationError(f"W1 has shape {w1.shape} but V has shape {v.shape}",
                              [("DIM_MISMATCH", f"{w1.shape} vs {v.shape}")])
    violations = _density_violations(w1) + _unitary_violations(v, int(k))
    if violations:
        raise ValidationError("invalid symmetric channel: " + "; ".join(m for _, m in violations),
                              violations)
    return DensityOperator(w1), CyclicUnitary(v, int(k))
