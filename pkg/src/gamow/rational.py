"""Rational functions with a known pole list.

Everything analytic in the package (form factors, state amplitudes, probes)
is a rational function whose poles are listed explicitly, so partial
fractions come from Taylor coefficients at the known poles and never from
polynomial root finding.  The half-line Cauchy transform

    J(z) = int_0^inf g(w) / (z - w) dw

is then a finite sum of elementary terms with logarithms.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as P

_MERGE_TOL = 1e-13


def _shift(coeffs, q):
    """Coefficients of p(q + x) in powers of x."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = len(coeffs)
    out = np.zeros(n, dtype=complex)
    # Horner on polynomials in x
    for c in coeffs[::-1]:
        out = P.polymul(out, [q, 1.0])[:n]
        out[0] += c
    return out


def _series_div(num, den, order):
    """First `order` Taylor coefficients of num/den (den[0] != 0)."""
    num = np.concatenate([np.asarray(num, complex), np.zeros(order)])[:order]
    den = np.concatenate([np.asarray(den, complex), np.zeros(order)])[:order]
    out = np.zeros(order, dtype=complex)
    for k in range(order):
        out[k] = (num[k] - np.dot(out[:k], den[k:0:-1])) / den[0]
    return out


@dataclass(frozen=True)
class Rational:
    """g(z) = num(z) / prod_k (z - q_k)^{m_k}.

    num holds ascending coefficients; poles is a tuple of (q, m) pairs with
    distinct q.
    """

    num: tuple = (0.0,)
    poles: tuple = ()

    @staticmethod
    def make(num, poles=()):
        num = np.trim_zeros(np.asarray(num, dtype=complex), "b")
        if num.size == 0:
            num = np.zeros(1, complex)
        merged: list[list] = []
        for q, m in poles:
            if m <= 0:
                continue
            for entry in merged:
                if abs(entry[0] - q) < _MERGE_TOL * max(1.0, abs(q)):
                    entry[1] += int(m)
                    break
            else:
                merged.append([complex(q), int(m)])
        return Rational(tuple(num.tolist()), tuple((q, m) for q, m in merged))

    @staticmethod
    def const(c):
        return Rational.make([c])

    # -- algebra ---------------------------------------------------------
    @property
    def is_zero(self):
        return all(c == 0 for c in self.num)

    @property
    def degree_gap(self):
        """deg(den) - deg(num); >= 1 means g -> 0 at infinity."""
        return sum(m for _, m in self.poles) - (len(self.num) - 1)

    def __mul__(self, other):
        if not isinstance(other, Rational):
            return Rational.make(np.asarray(self.num) * other, self.poles)
        return Rational.make(P.polymul(self.num, other.num), self.poles + other.poles)

    __rmul__ = __mul__

    def __add__(self, other):
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        # common denominator by multiplicity maximum
        allp = Rational.make([1.0], self.poles + other.poles).poles
        common = {}
        for q, _ in allp:
            ma = max([m for p, m in self.poles if abs(p - q) < _MERGE_TOL * max(1, abs(q))] + [0])
            mb = max([m for p, m in other.poles if abs(p - q) < _MERGE_TOL * max(1, abs(q))] + [0])
            common[q] = max(ma, mb)

        def lift(r):
            out = np.asarray(r.num, complex)
            for q, m in common.items():
                have = max([mm for p, mm in r.poles if abs(p - q) < _MERGE_TOL * max(1, abs(q))] + [0])
                for _ in range(m - have):
                    out = P.polymul(out, [-q, 1.0])
            return out

        return Rational.make(P.polyadd(lift(self), lift(other)), tuple(common.items()))

    def times_poly(self, coeffs):
        return Rational.make(P.polymul(self.num, coeffs), self.poles)

    def reflect(self):
        """z -> conj(g(conj z)); the analytic continuation of conj(g) off the axis."""
        return Rational.make(np.conj(self.num), tuple((np.conj(q), m) for q, m in self.poles))

    # -- evaluation ------------------------------------------------------
    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = P.polyval(z, np.asarray(self.num))
        for q, m in self.poles:
            out = out / (z - q) ** m
        return out

    def pole_values(self):
        return np.array([q for q, _ in self.poles], dtype=complex)

    @cached_property
    def partial_fractions(self):
        """[(q, [A_1..A_m])] with g = sum A_j / (z - q)^j (requires degree_gap >= 1)."""
        if self.degree_gap < 1 and not self.is_zero:
            raise ValueError("partial fractions need a strictly proper rational")
        out = []
        for k, (q, m) in enumerate(self.poles):
            den = np.array([1.0 + 0j])
            for l, (p, ml) in enumerate(self.poles):
                if l != k:
                    for _ in range(ml):
                        den = P.polymul(den, [-p, 1.0])
            tay = _series_div(_shift(self.num, q), _shift(den, q), m)
            out.append((q, [tay[m - j] for j in range(1, m + 1)]))
        return out

    def derivative(self, z, order=1):
        """Derivative via partial fractions."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for q, amps in self.partial_fractions:
            for j, a in enumerate(amps, start=1):
                coef = (-1) ** order * factorial(j + order - 1) / factorial(j - 1)
                out = out + a * coef / (z - q) ** (j + order)
        return out

    def cauchy(self, z, sheet=1):
        """Half-line Cauchy transform J(z) = int_0^inf g(w)/(z-w) dw.

        Sheet 1 is the principal branch.  Points on the positive real axis
        are read as boundary values from below (z - i0).  Sheet 2 is the
        continuation of the boundary value from above into the lower
        half-plane: J_II = J_I - 2 pi i g(z).
        """
        z = np.asarray(z, dtype=complex)
        if self.is_zero:
            return np.zeros_like(z)
        # log(-z) with the positive axis mapped to ln|z| + i pi (lower boundary value)
        mz = -z
        logmz = np.where((mz.imag == 0) & (mz.real < 0), np.log(np.abs(z)) + 1j * np.pi, np.log(mz))
        out = np.zeros_like(z)
        for q, amps in self.partial_fractions:
            u = z - q
            L = logmz - np.log(-q)
            for m, a in enumerate(amps, start=1):
                term = L / u**m
                for k in range(2, m + 1):
                    term = term + (-q) ** (1 - k) / ((k - 1) * u ** (m - k + 1))
                out = out + a * term
        if sheet == 2:
            out = out - 2j * np.pi * self(z)
        return out

    def integral(self):
        """int_0^inf g(w) dw in closed form (needs degree_gap >= 2)."""
        if self.is_zero:
            return 0j
        if self.degree_gap < 2:
            raise ValueError("integral diverges")
        total = 0j
        for q, amps in self.partial_fractions:
            total -= amps[0] * np.log(-q)
            for j in range(2, len(amps) + 1):
                total += amps[j - 1] / ((j - 1) * (-q) ** (j - 1))
        return total
