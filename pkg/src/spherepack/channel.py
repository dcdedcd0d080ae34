"""Symmetric classical-quantum channels ``W_x = V^(x-1) W_1 V^dagger^(x-1)``."""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .qcore import CyclicUnitary, DensityOperator, validate

PROB_TOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class SymmetricCqChannel:
    """A symmetric c-q channel with input alphabet ``{1, ..., K}``.

    Outputs are computed once at construction. Instances are immutable and
    hash by value, so they can key caches.
    """

    def __init__(self, w1, v, k: int, name: str | None = None):
        w1_op, v_op = validate(w1, v, k)
        self.w1: DensityOperator = w1_op
        self.v: CyclicUnitary = v_op
        self.k = v_op.order
        self.name = name
        vm = v_op.matrix
        outputs = []
        power = np.eye(w1_op.dim, dtype=complex)
        for _ in range(self.k):
            outputs.append(DensityOperator(power @ w1_op.matrix @ power.conj().T))
            power = vm @ power
        self._outputs = tuple(outputs)
        self._key = (w1_op.matrix.tobytes(), vm.tobytes(), self.k)

    @property
    def dim(self) -> int:
        return self.w1.dim

    @property
    def outputs(self) -> tuple[DensityOperator, ...]:
        return self._outputs

    def output(self, x: int) -> DensityOperator:
        if not 1 <= x <= self.k:
            raise DomainError(f"input symbol {x} outside 1..{self.k}", code="SYMBOL_RANGE")
        return self._outputs[x - 1]

    def uniform(self) -> np.ndarray:
        return np.full(self.k, 1.0 / self.k)

    def average_output(self, p=None) -> np.ndarray:
        p = self.uniform() if p is None else probability_vector(p, self.k)
        return sum(px * w.matrix for px, w in zip(p, self._outputs))

    def __eq__(self, other):
        return isinstance(other, SymmetricCqChannel) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __reduce__(self):
        return (SymmetricCqChannel, (self.w1.matrix, self.v.matrix, self.k, self.name))

    def __repr__(self):
        label = self.name or "custom"
        return f"SymmetricCqChannel({label}, dim={self.dim}, K={self.k})"


def probability_vector(weights, k: int | None = None) -> np.ndarray:
    p = np.asarray(weights, dtype=float)
    if p.ndim != 1 or (k is not None and p.size != k):
        raise ValidationError(f"expected {k} weights, got shape {p.shape}",
                              [("PROB_SHAPE", f"shape {p.shape}")])
    if np.any(p < 0):
        raise ValidationError("negative probability", [("PROB_NEGATIVE", str(p))])
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValidationError(f"probabilities sum to {p.sum():.15g}", [("PROB_SUM", str(p.sum()))])
    return p


def empirical_distribution(xs: Sequence[int], k: int) -> np.ndarray:
    """Type of a sequence over ``{1..k}``: weight of ``x`` is count(x)/n."""
    xs = list(xs)
    if not xs:
        raise DomainError("empty sequence has no empirical distribution", code="EMPTY_SEQUENCE")
    counts = np.zeros(k)
    for x in xs:
        if not 1 <= x <= k:
            raise DomainError(f"symbol {x} outside 1..{k}", code="SYMBOL_RANGE")
        counts[x - 1] += 1
    return counts / len(xs)


def _param(params: Mapping, key: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise DomainError(f"missing parameter {key!r}", code="PRESET_PARAM")
        return default
    value = float(params[key])
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"parameter {key}={value} outside [0, 1]", code="PRESET_PARAM")
    return value


PRESETS = ("bsc", "bec", "mixed-hadamard", "pure-hadamard")


def preset(name: str, params: Mapping | None = None, **kwargs) -> SymmetricCqChannel:
    """Build one of the shipped channels.

    ``bsc``            binary symmetric channel, parameter ``p``
    ``bec``            binary erasure channel on a qutrit, parameter ``e``
    ``pure-hadamard``  ``|0><0|`` and ``|+><+|``
    ``mixed-hadamard`` ``(1-eps)|0><0| + eps I/2`` and its Hadamard image, parameter ``eps``
    """
    params = {**(params or {}), **kwargs}
    if name == "bsc":
        p = _param(params, "p")
        return SymmetricCqChannel(np.diag([1 - p, p]), PAULI_X, 2, name=f"bsc(p={p:g})")
    if name == "bec":
        e = _param(params, "e")
        swap13 = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=complex)
        return SymmetricCqChannel(np.diag([1 - e, e, 0.0]), swap13, 2, name=f"bec(e={e:g})")
    if name == "pure-hadamard":
        return SymmetricCqChannel(np.diag([1.0, 0.0]), HADAMARD, 2, name="pure-hadamard")
    if name == "mixed-hadamard":
        eps = _param(params, "eps")
        w1 = (1 - eps) * np.diag([1.0, 0.0]) + eps * np.eye(2) / 2
        return SymmetricCqChannel(w1, HADAMARD, 2, name=f"mixed-hadamard(eps={eps:g})")
    raise DomainError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}",
                      code="UNKNOWN_PRESET")
