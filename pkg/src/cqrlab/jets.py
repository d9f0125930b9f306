"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a function of ``n`` variables
about a point, truncated at total degree ``K`` (at most 4).  Coefficients are
Taylor-normalized: the entry for multi-index ``alpha`` is
``d^alpha f / alpha!``, so multiplication is a plain convolution.

A jet may carry leading array axes (``coef.shape == shape + (N,)``), which is
how tensor-valued fields are differentiated: every metric-derived quantity is
pushed through the same truncated arithmetic, and ``Jet.order`` records the
degree up to which the coefficients are still exact (each differentiation
costs one degree).
"""

from __future__ import annotations

import functools
import itertools
import math
import string

import numpy as np

from .errors import DomainError, OrderTooLow

MAX_ORDER = 4

__all__ = [
    "JetBasis",
    "Jet",
    "basis",
    "jet_variable",
    "jet_constant",
    "jet_arith",
    "jet_func",
    "einsum",
    "stack",
    "BUILTIN_FUNCTIONS",
]


class JetBasis:
    """Multi-index bookkeeping for jets in ``n`` variables up to degree ``K``.

    Multi-indices are ordered by total degree, then lexicographically in the
    sorted variable-index tuple (``combinations_with_replacement`` order), so
    for ``n = 2`` the degree-2 block is ``xx, xy, yy``.
    """

    def __init__(self, n, K):
        if n < 1:
            raise ValueError("jet dimension must be positive")
        if not 0 <= K <= MAX_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {K}")
        self.n = n
        self.K = K
        tuples = []
        for k in range(K + 1):
            tuples.extend(itertools.combinations_with_replacement(range(n), k))
        self.index_tuples = tuples
        multi = np.zeros((len(tuples), n), dtype=int)
        for a, tup in enumerate(tuples):
            for i in tup:
                multi[a, i] += 1
        self.multi = multi
        self.size = len(tuples)
        self.degree = multi.sum(axis=1)
        self.factorial = np.array(
            [math.prod(math.factorial(e) for e in row) for row in multi], dtype=float
        )
        self.index = {tuple(row): a for a, row in enumerate(multi)}
        # d/dx_i: result[beta] = (beta_i + 1) * coef[beta + e_i]
        self._deriv_src = np.zeros((n, self.size), dtype=int)
        self._deriv_fac = np.zeros((n, self.size))
        for i in range(n):
            for b, row in enumerate(multi):
                up = row.copy()
                up[i] += 1
                src = self.index.get(tuple(up))
                if src is not None:
                    self._deriv_src[i, b] = src
                    self._deriv_fac[i, b] = up[i]

    def __repr__(self):
        return f"JetBasis(n={self.n}, K={self.K})"

    @functools.lru_cache(maxsize=None)
    def pairs(self, order):
        """Convolution table restricted to output degree <= ``order``.

        Returns ``(left, right, scatter)`` with ``scatter`` a dense 0/1 matrix
        mapping each (left, right) pair to its output slot.
        """
        left, right, out = [], [], []
        for a in range(self.size):
            for b in range(self.size):
                if self.degree[a] + self.degree[b] > order:
                    continue
                left.append(a)
                right.append(b)
                out.append(self.index[tuple(self.multi[a] + self.multi[b])])
        scatter = np.zeros((len(out), self.size))
        scatter[np.arange(len(out)), out] = 1.0
        return np.array(left), np.array(right), scatter

    @functools.lru_cache(maxsize=None)
    def degree_mask(self, order):
        return self.degree <= order

    def count(self):
        return sum(math.comb(self.n + k - 1, k) for k in range(self.K + 1))


@functools.lru_cache(maxsize=None)
def basis(n, K):
    return JetBasis(n, K)


def _as_jet_like(x, like):
    if isinstance(x, Jet):
        if x.basis is not like.basis:
            raise ValueError(f"jet bases differ: {x.basis} vs {like.basis}")
        return x
    return Jet.constant(x, like.basis.n, like.basis.K)


class Jet:
    """Truncated Taylor expansion (possibly array-valued) at a point."""

    __array_priority__ = 1000
    __slots__ = ("coef", "basis", "order")

    def __init__(self, coef, basis_, order=None):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[-1:] != (basis_.size,):
            raise ValueError(
                f"coefficient axis has length {coef.shape[-1:]}, expected {basis_.size}"
            )
        self.coef = coef
        self.basis = basis_
        self.order = basis_.K if order is None else order

    # -- construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, n, K):
        b = basis(n, K)
        value = np.asarray(value, dtype=float)
        coef = np.zeros(value.shape + (b.size,))
        coef[..., 0] = value
        return cls(coef, b)

    @classmethod
    def variable(cls, i, value, n, K):
        if not 0 <= i < n:
            raise IndexError(f"variable index {i} out of range for n={n}")
        b = basis(n, K)
        coef = np.zeros(b.size)
        coef[0] = value
        if K >= 1:
            coef[1 + i] = 1.0
        return cls(coef, b)

    # -- basic properties ---------------------------------------------------
    @property
    def n(self):
        return self.basis.n

    @property
    def shape(self):
        return self.coef.shape[:-1]

    @property
    def value(self):
        v = self.coef[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __repr__(self):
        return f"Jet(shape={self.shape}, n={self.n}, K={self.basis.K}, order={self.order})"

    def _new(self, coef, order):
        coef = np.where(self.basis.degree_mask(order), coef, 0.0)
        return Jet(coef, self.basis, order)

    def truncate(self, order):
        return self._new(self.coef, min(order, self.order))

    def coefficient(self, multi_index):
        """Taylor-normalized coefficient for an exponent tuple."""
        return self.coef[..., self.basis.index[tuple(multi_index)]]

    def derivative_tensor(self, k):
        """All k-th partial derivatives as a dense symmetric array.

        The derivative axes are appended after the jet's own shape.
        """
        if k > self.order:
            raise OrderTooLow(f"jet exact to order {self.order}, asked for {k}")
        b = self.basis
        out = np.zeros(self.shape + (b.n,) * k)
        for a, tup in enumerate(b.index_tuples):
            if len(tup) != k:
                continue
            val = self.coef[..., a] * b.factorial[a]
            for perm in set(itertools.permutations(tup)):
                out[(Ellipsis,) + perm] = val
        return out

    # -- indexing over the tensor axes --------------------------------------
    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coef[key + (Ellipsis, slice(None))], self.basis, self.order)

    def transpose(self, *axes):
        axes = tuple(axes) + (len(self.shape),)
        return Jet(self.coef.transpose(axes), self.basis, self.order)

    def reshape(self, *shape):
        return Jet(self.coef.reshape(tuple(shape) + (self.basis.size,)), self.basis, self.order)

    # -- arithmetic -----------------------------------------------------------
    def __neg__(self):
        return Jet(-self.coef, self.basis, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            other = _as_jet_like(other, self)
            order = min(self.order, other.order)
            return self._new(self.coef + other.coef, order)
        coef = self.coef.copy()
        coef[..., 0] = coef[..., 0] + np.asarray(other, dtype=float)
        return Jet(coef, self.basis, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            other = _as_jet_like(other, self)
            order = min(self.order, other.order)
            left, right, scatter = self.basis.pairs(order)
            coef = (self.coef[..., left] * other.coef[..., right]) @ scatter
            return Jet(coef, self.basis, order)
        other = np.asarray(other, dtype=float)
        return Jet(self.coef * other[..., None], self.basis, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        return power(self, exponent)

    # -- calculus -------------------------------------------------------------
    def derivative(self, i):
        """Partial derivative along variable ``i``; exact to one order less."""
        if self.order < 1:
            raise OrderTooLow("cannot differentiate a jet of order 0")
        b = self.basis
        coef = self.coef[..., b._deriv_src[i]] * b._deriv_fac[i]
        return self._new(coef, self.order - 1)

    def gradient(self):
        """Stack of partial derivatives, new axis first."""
        if self.order < 1:
            raise OrderTooLow("cannot differentiate a jet of order 0")
        b = self.basis
        coef = self.coef[..., b._deriv_src] * b._deriv_fac
        # coef: shape + (n, N) -> (n,) + shape + (N,)
        coef = np.moveaxis(coef, -2, 0)
        return self._new(coef, self.order - 1)


def jet_variable(i, value, n, K):
    return Jet.variable(i, value, n, K)


def jet_constant(value, n, K):
    return Jet.constant(value, n, K)


def stack(jets, axis=0):
    jets = list(jets)
    b = jets[0].basis
    order = min(j.order for j in jets)
    if axis < 0:
        axis -= 1
    coef = np.stack([j.coef for j in jets], axis=axis)
    return Jet(coef, b, order)


def einsum(subscripts, *operands):
    """``numpy.einsum`` over the tensor axes of jets and plain arrays.

    Products of jets are truncated convolutions; plain arrays act as
    constants.  Operands are folded left to right.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    subs = ins.split(",")
    if len(subs) != len(operands):
        raise ValueError("operand count does not match subscripts")
    letters = set(subscripts)
    coef_axis = next(c for c in string.ascii_uppercase[::-1] if c not in letters)
    cur, cur_sub = operands[0], subs[0]
    if len(operands) == 1:
        return _einsum_pair(f"{cur_sub}->{out}", cur, None, coef_axis)
    for k in range(1, len(operands)):
        nxt, nxt_sub = operands[k], subs[k]
        if k == len(operands) - 1:
            keep = out
        else:
            later = set("".join(subs[k + 1 :]) + out)
            keep = "".join(dict.fromkeys(c for c in cur_sub + nxt_sub if c in later))
        cur = _einsum_pair(f"{cur_sub},{nxt_sub}->{keep}", cur, nxt, coef_axis)
        cur_sub = keep
    return cur


def _einsum_pair(spec, a, b, z):
    ins, out = spec.split("->")
    if b is None:
        if isinstance(a, Jet):
            return Jet(np.einsum(f"{ins}{z}->{out}{z}", a.coef), a.basis, a.order)
        return np.einsum(spec, a)
    sa, sb = ins.split(",")
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if ja and jb:
        if a.basis is not b.basis:
            raise ValueError("jet bases differ")
        order = min(a.order, b.order)
        left, right, scatter = a.basis.pairs(order)
        prod = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", a.coef[..., left], b.coef[..., right])
        return Jet(prod @ scatter, a.basis, order)
    if ja:
        return Jet(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.coef, np.asarray(b)), a.basis, a.order)
    if jb:
        return Jet(np.einsum(f"{sa},{sb}{z}->{out}{z}", np.asarray(a), b.coef), b.basis, b.order)
    return np.einsum(spec, a, b)


# -- univariate composition ---------------------------------------------------


def _compose(a, taylor):
    """Evaluate ``f(a)`` from the Taylor coefficients of ``f`` at ``a.value``.

    ``taylor`` is a list of arrays (broadcast over the jet's shape) holding
    ``f^(k)(a0) / k!`` for ``k = 0..a.order``.
    """
    h = Jet(a.coef.copy(), a.basis, a.order)
    h.coef[..., 0] = 0.0
    result_coef = np.zeros_like(a.coef)
    result_coef[..., 0] = taylor[0]
    power_k = None
    for k in range(1, a.order + 1):
        power_k = h if power_k is None else power_k * h
        result_coef = result_coef + np.asarray(taylor[k])[..., None] * power_k.coef
    return a._new(result_coef, a.order)


def _exp_series(x0, K):
    e = np.exp(x0)
    return [e / math.factorial(k) for k in range(K + 1)]


def _log_series(x0, K):
    if np.any(x0 <= 0):
        raise DomainError("log of non-positive value")
    out = [np.log(x0)]
    for k in range(1, K + 1):
        out.append((-1) ** (k + 1) / (k * x0**k))
    return out


def _trig_series(x0, K, cycle):
    out = []
    for k in range(K + 1):
        out.append(cycle[k % 4](x0) / math.factorial(k))
    return out


def _sin_series(x0, K):
    return _trig_series(x0, K, [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)])


def _cos_series(x0, K):
    return _trig_series(x0, K, [np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x), np.sin])


def _sinh_series(x0, K):
    return _trig_series(x0, K, [np.sinh, np.cosh, np.sinh, np.cosh])


def _cosh_series(x0, K):
    return _trig_series(x0, K, [np.cosh, np.sinh, np.cosh, np.sinh])


def _power_series(x0, K, c):
    # binom(c, k) * x0^(c-k)
    out = []
    coeff = 1.0
    for k in range(K + 1):
        out.append(coeff * x0 ** (c - k))
        coeff *= (c - k) / (k + 1)
    return out


def _sqrt_series(x0, K):
    if np.any(x0 < 0) or (K > 0 and np.any(x0 == 0)):
        raise DomainError("sqrt of non-positive value")
    return _power_series(x0, K, 0.5)


def _recip_series(x0, K):
    if np.any(x0 == 0):
        raise DomainError("division by zero")
    return [(-1) ** k / x0 ** (k + 1) for k in range(K + 1)]


_SERIES = {
    "exp": _exp_series,
    "log": _log_series,
    "sin": _sin_series,
    "cos": _cos_series,
    "sinh": _sinh_series,
    "cosh": _cosh_series,
    "sqrt": _sqrt_series,
}

BUILTIN_FUNCTIONS = tuple(_SERIES)


def jet_func(a, name):
    """Compose a builtin univariate function with a jet."""
    try:
        series = _SERIES[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}") from None
    x0 = a.coef[..., 0]
    return _compose(a, series(x0, a.order))


def reciprocal(a):
    return _compose(a, _recip_series(a.coef[..., 0], a.order))


def power(a, exponent):
    """``a ** exponent`` for a real constant exponent.

    Integer exponents use repeated multiplication (valid for any sign of the
    base); other exponents go through ``exp(c * log(a))``.
    """
    c = float(exponent)
    if c == int(c) and abs(c) <= 64:
        k = int(c)
        if k < 0:
            return power(reciprocal(a), -k)
        result = Jet.constant(np.ones(a.shape), a.n, a.basis.K).truncate(a.order)
        base = a
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result
    return jet_func(jet_func(a, "log") * c, "exp")


def jet_arith(a, b, op):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown arithmetic op {op!r}")


def exp(a):
    return jet_func(a, "exp")


def log(a):
    return jet_func(a, "log")


def sqrt(a):
    return jet_func(a, "sqrt")
