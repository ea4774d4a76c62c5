"""Truncated multivariate Taylor arithmetic for holomorphic functions.

A :class:`Jet` stores the Taylor coefficients ``c_beta`` of a function at a
base point for all multi-indices with ``|beta| <= order`` (total-degree
truncation).  Coefficient arrays carry arbitrary leading batch dimensions,
so one jet can describe many base points at once.  Mixed partials are
``D^beta f = beta! * c_beta``.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

__all__ = ["Jet", "multi_indices", "compose"]


@lru_cache(maxsize=None)
def multi_indices(nvars: int, order: int) -> tuple:
    """All multi-indices of length ``nvars`` with total degree ``<= order``,
    sorted by degree."""
    out = [b for b in itertools.product(range(order + 1), repeat=nvars) if sum(b) <= order]
    out.sort(key=lambda b: (sum(b), tuple(-x for x in b)))
    return tuple(out)


def _cdtype(x):
    """Complex dtype wide enough for ``x`` (extended precision is preserved)."""
    return np.result_type(np.asarray(x).dtype, np.complex128)


@lru_cache(maxsize=None)
def _degree_mask(nvars: int, order: int) -> np.ndarray:
    grids = np.indices((order + 1,) * nvars)
    return grids.sum(axis=0) <= order


@lru_cache(maxsize=None)
def _factorials(nvars: int, order: int) -> np.ndarray:
    f = np.array([math.factorial(i) for i in range(order + 1)], dtype=float)
    out = np.ones((order + 1,) * nvars)
    for j in range(nvars):
        shape = [1] * nvars
        shape[j] = order + 1
        out = out * f.reshape(shape)
    return out


class Jet:
    """Truncated Taylor expansion in ``nvars`` variables.

    Parameters
    ----------
    coeffs
        Array of shape ``batch + (order + 1,) * nvars``.
    nvars
        Number of expansion variables.
    """

    __array_priority__ = 1000

    def __init__(self, coeffs, nvars: int):
        coeffs = np.asarray(coeffs)
        coeffs = coeffs.astype(_cdtype(coeffs), copy=False)
        self.nvars = int(nvars)
        if coeffs.ndim < self.nvars:
            raise ValueError("coefficient array has fewer axes than variables")
        tail = coeffs.shape[coeffs.ndim - self.nvars :]
        if len(set(tail)) > 1:
            raise ValueError(f"jet coefficient axes must agree, got {tail}")
        self.order = (tail[0] - 1) if tail else 0
        self.coeffs = coeffs * _degree_mask(self.nvars, self.order) if self.nvars else coeffs

    # -- construction ------------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value)
        c = np.zeros(value.shape + (order + 1,) * nvars, dtype=_cdtype(value))
        c[(...,) + (0,) * nvars] = value
        return cls(c, nvars)

    @classmethod
    def variables(cls, x0, order: int) -> list:
        """Identity jets ``x_j = x0_j + e_j`` for every coordinate of ``x0``."""
        x0 = np.asarray(x0)
        x0 = x0.astype(_cdtype(x0), copy=False)
        nvars = x0.shape[-1]
        out = []
        for j in range(nvars):
            c = np.zeros(x0.shape[:-1] + (order + 1,) * nvars, dtype=x0.dtype)
            c[(...,) + (0,) * nvars] = x0[..., j]
            if order >= 1:
                idx = [0] * nvars
                idx[j] = 1
                c[(...,) + tuple(idx)] = 1.0
            out.append(cls(c, nvars))
        return out

    # -- accessors -----------------------------------------------------------
    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[: self.coeffs.ndim - self.nvars]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[(...,) + (0,) * self.nvars]

    def coefficient(self, beta) -> np.ndarray:
        return self.coeffs[(...,) + tuple(beta)]

    def partial(self, beta) -> np.ndarray:
        """Mixed partial ``D^beta`` at the base point."""
        return self.coefficient(beta) * float(np.prod([math.factorial(b) for b in beta]))

    def partials(self) -> np.ndarray:
        """All mixed partials as an array shaped like ``coeffs``."""
        return self.coeffs * _factorials(self.nvars, self.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        sl = (Ellipsis,) + (slice(0, order + 1),) * self.nvars
        return Jet(self.coeffs[sl], self.nvars)

    def _like(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets in different variables")
            if other.order != self.order:
                o = min(other.order, self.order)
                return other.truncate(o)
            return other
        return Jet.constant(other, self.nvars, self.order)

    # -- arithmetic ------------------------------------------------------------
    def __neg__(self):
        return Jet(-self.coeffs, self.nvars)

    def __add__(self, other):
        other = self._like(other)
        me = self if self.order == other.order else self.truncate(other.order)
        return Jet(me.coeffs + other.coeffs, self.nvars)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._like(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            s = np.asarray(other)
            return Jet(self.coeffs * s.reshape(s.shape + (1,) * self.nvars), self.nvars)
        other = self._like(other)
        a = self if self.order == other.order else self.truncate(other.order)
        J, nv = a.order, a.nvars
        if nv == 0:
            return Jet(a.coeffs * other.coeffs, 0)
        shape = np.broadcast_shapes(a.batch_shape, other.batch_shape) + (J + 1,) * nv
        out = np.zeros(shape, dtype=np.result_type(a.coeffs, other.coeffs))
        b = other.coeffs
        for idx in multi_indices(nv, J):
            ca = a.coeffs[(...,) + idx]
            if not np.any(ca):
                continue
            dst = (Ellipsis,) + tuple(slice(i, None) for i in idx)
            src = (Ellipsis,) + tuple(slice(0, J + 1 - i) for i in idx)
            out[dst] += ca.reshape(ca.shape + (1,) * nv) * b[src]
        return Jet(out, nv)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        s = np.asarray(other)
        return self * (1.0 / s)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet":
        return self ** -1

    def __pow__(self, p):
        """Principal-branch power ``x**p`` for a real or complex scalar ``p``."""
        x0 = self.value
        dx = self - x0
        out = Jet.constant(np.power(x0, p), self.nvars, self.order)
        term = Jet.constant(np.ones_like(x0), self.nvars, self.order)
        for i in range(1, self.order + 1):
            term = term * dx
            c = _gen_binom(p, i)
            out = out + term * (c * np.power(x0, p - i))
        return out

    # -- calculus ----------------------------------------------------------------
    def derivative(self, beta) -> "Jet":
        """Jet of ``D^beta f`` with order reduced by ``|beta|``."""
        beta = tuple(int(b) for b in beta)
        J = self.order - sum(beta)
        if J < 0:
            raise ValueError("derivative order exceeds jet order")
        sl = (Ellipsis,) + tuple(slice(b, b + J + 1) for b in beta)
        c = self.coeffs[sl]
        for j, b in enumerate(beta):
            if b == 0:
                continue
            m = np.arange(J + 1)
            fac = np.array([math.perm(int(i) + b, b) for i in m], dtype=float)
            shape = [1] * self.nvars
            shape[j] = J + 1
            c = c * fac.reshape(shape)
        return Jet(c, self.nvars)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, batch={self.batch_shape})"


def _gen_binom(p, i: int):
    out = 1.0
    for m in range(i):
        out *= (p - m) / (m + 1)
    return out


def compose(outer: Jet, inner: list) -> Jet:
    """Taylor coefficients of ``G(h(x))`` from the jet of ``G`` at ``h(x0)``.

    ``outer`` is the jet of ``G`` in ``len(inner)`` variables expanded at
    the base values of ``inner``; ``inner`` are jets in a common set of
    variables.  The result has the order of the inner jets.
    """
    if outer.nvars != len(inner):
        raise ValueError("outer jet variables must match the number of inner jets")
    J = inner[0].order
    if outer.order < J:
        raise ValueError("outer jet order too small for composition")
    deltas = [h - h.value for h in inner]
    nv = inner[0].nvars
    powers = []
    for d in deltas:
        pw = [Jet.constant(np.ones(d.batch_shape), nv, J)]
        for _ in range(J):
            pw.append(pw[-1] * d)
        powers.append(pw)
    out = None
    for gamma in multi_indices(outer.nvars, J):
        term = powers[0][gamma[0]] if outer.nvars else None
        for j in range(1, outer.nvars):
            term = term * powers[j][gamma[j]]
        term = term * outer.coefficient(gamma)
        out = term if out is None else out + term
    return out
