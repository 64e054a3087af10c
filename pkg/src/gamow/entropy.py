"""Projected conditional entropy near equilibrium.

P acts on Liouville coordinates.  No-ghost coordinates pass unchanged;
ghost-carrying coordinates rho_nu (dyads |i-><j-| with a resonance index)
are mapped to

    sum_mu p_{mu nu} rho_nu |mu-)  +  sum_mu q_{mu nu} rho_nu |mu~)

where |mu~) is the same dyad with every ghost slot switched to its tilde
partner.  Tilde images are traceless, so Tr P rho = Tr rho, and they pair
with bar ghosts, so Tr[(P rho_1)^2 rho*^-1] no longer vanishes.

    S(t) = -1/2 e^{-2 g t} Tr[(P rho_1)^2 rho*^-1]   (+ O(e^{-3 g t}))
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ShapeError, SingularEquilibriumError
from .liouville import BAR, TILDE, GhostAlgebra, LiouvilleState, equilibrium_parts

IDEM_TOL = 1e-12


def ghost_keys(rho: LiouvilleState) -> tuple:
    """Sorted ghost-carrying dyad keys (the Liouville ghost labels)."""
    return tuple(sorted(k for k in rho.coeffs if rho._ghosty(k)))


@dataclass(frozen=True, eq=False)
class EntropyProjector:
    keys: tuple
    p: np.ndarray
    q: np.ndarray
    idempotent: bool = True
    naive: bool = False

    def residuals(self) -> dict:
        p, q = self.p, self.q
        return {"pp": float(np.max(np.abs(p @ p - p), initial=0.0)),
                "qp": float(np.max(np.abs(q @ p - q), initial=0.0))}

    def apply(self, rho: LiouvilleState, labels=None) -> dict:
        """P rho restricted to the pole sector, as a ghost-algebra operator."""
        labels = rho.labels if labels is None else labels
        out = {}
        for (i, j), c in rho.coeffs.items():
            if not (labels[i].ghost or labels[j].ghost):
                out[((BAR, i), (BAR, j))] = out.get(((BAR, i), (BAR, j)), 0) + c
        idx = {k: n for n, k in enumerate(self.keys)}
        v = np.zeros(len(self.keys), complex)
        for k, c in rho.coeffs.items():
            if labels[k[0]].ghost or labels[k[1]].ghost:
                if k not in idx:
                    raise ShapeError(f"coordinate {k} is not covered by the projector")
                v[idx[k]] = c
        pv, qv = self.p @ v, self.q @ v
        for n, (i, j) in enumerate(self.keys):
            if pv[n] != 0:
                out[((BAR, i), (BAR, j))] = out.get(((BAR, i), (BAR, j)), 0) + pv[n]
            if qv[n] != 0:
                ki = TILDE if labels[i].ghost else BAR
                kj = TILDE if labels[j].ghost else BAR
                out[((ki, i), (kj, j))] = out.get(((ki, i), (kj, j)), 0) + qv[n]
        return out

    @staticmethod
    def identity_map(keys) -> "EntropyProjector":
        """The naive choice P = I."""
        n = len(keys)
        return EntropyProjector(tuple(keys), np.eye(n, dtype=complex), np.zeros((n, n), complex), True, True)


def build_projector(keys, recipe: str = "identity", rates=None, vector=None, p=None, q=None,
                    idempotent: bool = True, zetas=None) -> EntropyProjector:
    """Projector on the ghost coordinates ``keys``.

    recipes: ``identity`` (p = q = 1), ``slowest`` (p = q = projector on the
    coordinates with the smallest damping rate, needs ``rates``), ``rank1``
    (p = q = v v^H / |v|^2), ``custom`` (explicit p, q).

    With ``zetas`` (the Liouville pole of each key) P must also commute with
    the evolution: p and q may only couple keys that share a pole.  Mixing
    poles makes P rho(t) beat at their frequency difference.
    """
    keys = tuple(keys)
    n = len(keys)
    if n == 0:
        raise ShapeError("need at least one ghost label")
    if recipe == "identity":
        p = q = np.eye(n, dtype=complex)
    elif recipe == "slowest":
        if rates is None:
            raise ShapeError("slowest recipe needs rates")
        rates = np.asarray(rates, float)
        keep = np.isclose(rates, rates.min(), rtol=1e-9, atol=0)
        p = q = np.diag(keep.astype(complex))
    elif recipe == "rank1":
        v = np.asarray(vector if vector is not None else np.ones(n), complex)
        p = q = np.outer(v, v.conj()) / np.vdot(v, v)
    elif recipe == "custom":
        p = np.asarray(p, complex)
        q = np.asarray(q, complex)
    else:
        raise ShapeError(f"unknown recipe {recipe!r}")
    if p.shape != (n, n) or q.shape != (n, n):
        raise ShapeError("p and q must be square over the ghost labels")
    P = EntropyProjector(keys, p, q, idempotent)
    if zetas is not None:
        z = np.asarray(zetas, complex)
        mix = ~np.isclose(z[:, None], z[None, :], rtol=1e-12, atol=1e-14)
        worst = float(max(np.max(np.abs(p[mix]), initial=0.0), np.max(np.abs(q[mix]), initial=0.0)))
        if worst > IDEM_TOL:
            raise ConsistencyError("P couples coordinates with different Liouville poles", residual=worst)
    if not np.any(q != 0):
        raise ConsistencyError("q block is zero: the entropy would vanish identically", residual=0.0)
    if idempotent:
        r = P.residuals()
        worst = max(r.values())
        if worst > IDEM_TOL:
            raise ConsistencyError(f"P^2 != P (residuals {r})", residual=worst)
    return P


def projector_for(rho: LiouvilleState, recipe: str = "identity", **kw) -> EntropyProjector:
    keys = ghost_keys(rho)
    if recipe == "slowest" and "rates" not in kw:
        kw["rates"] = [-rho.zeta(*k).imag for k in keys]
    kw.setdefault("zetas", [rho.zeta(*k) for k in keys])
    return build_projector(keys, recipe, **kw)


def _inverse_star(star: LiouvilleState, support: set) -> dict:
    inv = {}
    for i, lab in enumerate(star.labels):
        if lab.ghost:
            continue
        w = np.real(star.coeffs.get((i, i), 0.0))
        if w <= 0:
            if i in support:
                raise SingularEquilibriumError(f"rho* has no weight on label {i} where rho_1 lives")
            continue
        inv[((BAR, i), (BAR, i))] = 1.0 / w
    return inv


def _support(op) -> set:
    return {n for ((_, i), (_, j)) in op for n in (i, j)}


def conditional_entropy(rho: LiouvilleState, P: EntropyProjector | None, ts, rho_star=None):
    """(S, bound) on the t grid.

    S is the leading term -1/2 e^{-2 g t} Tr[(P rho_1)^2 rho*^-1]; ``bound``
    is the magnitude of the next term 1/6 e^{-3 g t} |Tr[x rho*^-1 x rho*^-1 x]|.
    P = None means the naive P = I.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if P is None:
        P = EntropyProjector.identity_map(ghost_keys(rho))
    alg = GhostAlgebra(rho.labels)
    S = np.zeros_like(ts)
    B = np.zeros_like(ts)
    for n, t in enumerate(ts):
        star, one, g = equilibrium_parts(rho, t)
        if rho_star is not None:
            star = rho_star
        if g is None or not one.coeffs:
            continue
        x = P.apply(one)
        inv = _inverse_star(star, _support(x))
        xi = alg.mul(x, inv)
        s2 = alg.trace(alg.mul(x, xi))
        s3 = alg.trace(alg.mul(alg.mul(xi, xi), x))
        S[n] = float(np.real(-0.5 * np.exp(-2 * g * t) * s2))
        B[n] = abs(s3) * np.exp(-3 * g * t) / 6.0
    return S, B


def trace_of(op: dict, labels) -> complex:
    return GhostAlgebra(labels).trace(op)


def decay_exponent(ts, S) -> float:
    """Slope of -log(-S) against t (S < 0 assumed)."""
    return float(-np.polyfit(np.asarray(ts), np.log(-np.asarray(S)), 1)[0])
