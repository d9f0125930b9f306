"""Dense pointwise tensors with per-slot variance."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularMetric, VarianceMismatch

MAX_RANK = 6
DET_FLOOR = 1e-12


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class Tensor:
    """Components ``c`` (shape ``(n,)*r``) and a variance string of ``'d'``/``'u'``.

    ``variance[k] == 'd'`` marks slot ``k`` as covariant (lower index).
    """

    c: np.ndarray
    variance: str

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        if c.ndim != len(self.variance):
            raise ValueError(f"rank {c.ndim} does not match variance {self.variance!r}")
        if c.ndim > MAX_RANK:
            raise ValueError(f"rank {c.ndim} exceeds {MAX_RANK}")
        if c.ndim and len(set(c.shape)) != 1:
            raise ValueError(f"all slots must have the same dimension, got {c.shape}")
        if set(self.variance) - {"d", "u"}:
            raise ValueError(f"variance flags must be 'd' or 'u': {self.variance!r}")

    @property
    def rank(self):
        return self.c.ndim

    @property
    def n(self):
        return self.c.shape[0] if self.c.ndim else 0

    def __repr__(self):
        return f"Tensor(variance={self.variance!r}, n={self.n})"


def max_abs(t):
    c = t.c if isinstance(t, Tensor) else np.asarray(t)
    return float(np.max(np.abs(c))) if c.size else 0.0


def scale(*operands):
    """``1 + max|operand|``, the denominator for normalized residuals."""
    return 1.0 + max((max_abs(t) for t in operands), default=0.0)


def contract(t, slot_a, slot_b):
    if slot_a == slot_b:
        raise ValueError("contraction slots must differ")
    if t.variance[slot_a] == t.variance[slot_b]:
        raise VarianceMismatch(
            f"cannot contract slots {slot_a} and {slot_b}: both {t.variance[slot_a]!r}"
        )
    c = np.trace(t.c, axis1=slot_a, axis2=slot_b)
    variance = "".join(v for k, v in enumerate(t.variance) if k not in (slot_a, slot_b))
    return Tensor(c, variance)


def outer(a, b):
    return Tensor(np.multiply.outer(a.c, b.c), a.variance + b.variance)


def _apply_matrix(c, slot, m):
    # contracts m's second index with the given slot, keeps slot position
    moved = np.tensordot(m, c, axes=([1], [slot]))
    return np.moveaxis(moved, 0, slot)


def raise_lower(t, slot, metric):
    """Flip the variance of one slot using ``g`` or ``g^{-1}``."""
    if t.variance[slot] == "d":
        c = _apply_matrix(t.c, slot, metric.g_inv.c)
        flag = "u"
    else:
        c = _apply_matrix(t.c, slot, metric.g.c)
        flag = "d"
    variance = t.variance[:slot] + flag + t.variance[slot + 1 :]
    return Tensor(c, variance)


def _check_slots(t, slots):
    slots = tuple(slots)
    if len(set(slots)) != len(slots):
        raise ValueError("slots must be distinct")
    rank = t.rank if isinstance(t, Tensor) else np.ndim(t)
    if any(not 0 <= s < rank for s in slots):
        raise IndexError(f"slot out of range for rank {rank}")
    return slots


def _permute_slots(c, slots, perm):
    axes = list(range(c.ndim))
    for s, p in zip(slots, perm):
        axes[s] = slots[p]
    return np.transpose(c, axes)


def antisymmetrize(t, slots, normalization="weighted"):
    """Alternating sum over ``slots``; ``"weighted"`` divides by ``k!``."""
    slots = _check_slots(t, slots)
    c = t.c if isinstance(t, Tensor) else np.asarray(t)
    acc = np.zeros_like(c)
    for perm in itertools.permutations(range(len(slots))):
        acc += _perm_sign(perm) * _permute_slots(c, slots, perm)
    if normalization == "weighted":
        acc /= math.factorial(len(slots))
    elif normalization != "sum":
        raise ValueError(f"unknown normalization {normalization!r}")
    return Tensor(acc, t.variance) if isinstance(t, Tensor) else acc


def symmetrize(t, slots, normalization="weighted"):
    slots = _check_slots(t, slots)
    c = t.c if isinstance(t, Tensor) else np.asarray(t)
    acc = np.zeros_like(c)
    for perm in itertools.permutations(range(len(slots))):
        acc += _permute_slots(c, slots, perm)
    if normalization == "weighted":
        acc /= math.factorial(len(slots))
    elif normalization != "sum":
        raise ValueError(f"unknown normalization {normalization!r}")
    return Tensor(acc, t.variance) if isinstance(t, Tensor) else acc


def cyclic_sum(c, slots=(0, 1, 2)):
    """Sum over the three cyclic permutations of three slots."""
    i, j, k = slots
    axes = list(range(c.ndim))
    a1 = axes.copy()
    a1[i], a1[j], a1[k] = j, k, i
    a2 = axes.copy()
    a2[i], a2[j], a2[k] = k, i, j
    return c + np.transpose(c, a1) + np.transpose(c, a2)


@dataclass(frozen=True, eq=False)
class MetricAtPoint:
    g: Tensor
    g_inv: Tensor
    det: float
    g_jets: object  # jets.Jet of shape (n, n)
    signature: tuple

    @classmethod
    def from_jets(cls, g_jets):
        g = np.array(g_jets.value)
        if not np.allclose(g, g.T, rtol=0, atol=1e-14 * (1 + np.abs(g).max())):
            raise ValueError("metric components not symmetric")
        det = float(np.linalg.det(g))
        if abs(det) <= DET_FLOOR:
            raise SingularMetric(f"metric determinant {det:.3e} is singular")
        g_inv = np.linalg.inv(g)
        g_inv = 0.5 * (g_inv + g_inv.T)
        eig = np.linalg.eigvalsh(g)
        signature = tuple(int(np.sign(v)) for v in eig)
        return cls(Tensor(g, "dd"), Tensor(g_inv, "uu"), det, g_jets, signature)

    @property
    def n(self):
        return self.g.n

    @property
    def is_lorentzian(self):
        neg = sum(1 for s in self.signature if s < 0)
        return neg == 1 or neg == self.n - 1

    def raise_index(self, v):
        return self.g_inv.c @ np.asarray(v, dtype=float)

    def lower_index(self, v):
        return self.g.c @ np.asarray(v, dtype=float)

    def dot(self, a, b):
        """Inner product of two covectors (lower-index components)."""
        return float(np.asarray(a) @ self.g_inv.c @ np.asarray(b))
