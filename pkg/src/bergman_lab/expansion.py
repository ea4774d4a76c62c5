"""Coefficient expansion of the successor differential operator.

The operator ``prod_{l=1..k} (l + sum_j alpha_j (1 + theta_j))`` with Euler
operators ``theta_j = z_j d/dz_j`` is rewritten as
``sum_{|beta| <= k} c_beta z^beta D^beta`` using
``theta^m = sum_s S(m, s) z^s D^s`` (Stirling numbers of the second kind).

Arithmetic is generic: pass :class:`fractions.Fraction` exponents to get
exact coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .jets import Jet

__all__ = ["stirling2", "OperatorExpansion", "expand_operator", "apply_factors_sequentially", "euler"]


@lru_cache(maxsize=None)
def stirling2(m: int, s: int) -> int:
    if m == s:
        return 1
    if s == 0 or s > m:
        return 0
    return s * stirling2(m - 1, s) + stirling2(m - 1, s - 1)


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0) + ca * cb
    return out


@dataclass(frozen=True)
class OperatorExpansion:
    alpha: tuple
    k: int
    coeffs: dict

    @property
    def constant(self):
        return self.coeffs[(0,) * len(self.alpha)]

    def apply(self, jet: Jet, z0) -> Jet:
        """``sum_beta c_beta z^beta D^beta f`` for the jet of ``f`` at ``z0``.

        The result is the jet of the image at ``z0``, of order
        ``jet.order - k``.
        """
        J = jet.order - self.k
        if J < 0:
            raise ValueError(f"jet order {jet.order} too small for an operator of order {self.k}")
        z = Jet.variables(z0, J)
        out = None
        for beta, c in self.coeffs.items():
            if c == 0:
                continue
            term = jet.derivative(beta).truncate(J) * complex(c)
            for j, b in enumerate(beta):
                for _ in range(b):
                    term = term * z[j]
            out = term if out is None else out + term
        return out


def expand_operator(alpha, k: int) -> OperatorExpansion:
    """Expand ``prod_{l=1..k} (l + |alpha| + sum_j alpha_j theta_j)``."""
    alpha = tuple(alpha)
    if k < 1:
        raise ValueError("operator order k must be at least 1")
    n = len(alpha)
    total = sum(alpha)
    zero = (0,) * n
    # polynomial in the commuting Euler operators theta_j
    poly: dict = {zero: 1}
    for l in range(1, k + 1):
        factor = {zero: l + total}
        for j, a in enumerate(alpha):
            e = [0] * n
            e[j] = 1
            factor[tuple(e)] = factor.get(tuple(e), 0) + a
        poly = _poly_mul(poly, factor)
    coeffs: dict = {}
    for m, cm in poly.items():
        # theta^m -> sum over beta <= m of prod_j S(m_j, beta_j)
        ranges = [range(mj + 1) for mj in m]
        for beta in np.ndindex(*[len(r) for r in ranges]):
            w = 1
            for mj, bj in zip(m, beta):
                w *= stirling2(mj, bj)
            if w:
                coeffs[tuple(beta)] = coeffs.get(tuple(beta), 0) + cm * w
    return OperatorExpansion(alpha, k, dict(sorted(coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))))


def euler(jet: Jet, j: int, z0) -> Jet:
    """``z_j d/dz_j`` applied to the jet of ``f`` at ``z0``; order drops by one."""
    e = [0] * jet.nvars
    e[j] = 1
    z = Jet.variables(z0, jet.order - 1)
    return jet.derivative(e) * z[j]


def apply_factors_sequentially(alpha, k: int, jet: Jet, z0) -> Jet:
    """Apply the ``k`` Euler-type factors one after another."""
    total = sum(alpha)
    cur = jet
    for l in range(1, k + 1):
        nxt = cur.truncate(cur.order - 1) * complex(l + total)
        for j, a in enumerate(alpha):
            if a:
                nxt = nxt + euler(cur, j, z0) * complex(a)
        cur = nxt
    return cur
