"""Brute-force reference: discretize the continuum, diagonalize, evolve.

The continuum [0, omega_max] is replaced by N midpoint nodes with weight
w = omega_max / N and couplings lam f(w_k) sqrt(w).  The resulting
arrowhead matrix is diagonalized densely.  For a single discrete level the
eigenvalues alone suffice: every eigenvector of an arrowhead matrix is known
in closed form from its eigenvalue,

    v = v_1 (1, c_j / (E - w_j)),   |v_1|^2 = 1 / (1 + sum_j c_j^2 / (E - w_j)^2),

so large grids only pay for ``eigvalsh``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg

from .friedrichs import FriedrichsModel

_CHUNK = 512


@dataclass(eq=False)
class DiscretizedHamiltonian:
    model: FriedrichsModel
    N: int
    nodes: np.ndarray
    weight: float
    couplings: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray | None = None
    _first: np.ndarray | None = field(default=None, repr=False)

    @property
    def nlevels(self):
        return self.model.nlevels

    @property
    def dim(self):
        return self.N + self.nlevels

    @property
    def recurrence_time(self):
        return 2 * np.pi / self.weight

    def matrix(self):
        L = self.nlevels
        H = np.zeros((self.dim, self.dim))
        H[np.arange(L), np.arange(L)] = self.model.omegas
        H[np.arange(L, self.dim), np.arange(L, self.dim)] = self.nodes
        H[:L, L:] = self.couplings[None, :]
        H[L:, :L] = self.couplings[:, None]
        return H

    def level_weights(self, level=0):
        """|<level|E_k>|^2 for every eigenvalue."""
        if self.evecs is not None:
            return self.evecs[level] ** 2
        if self._first is None:
            self._first = self._arrow_first()
        return self._first**2

    def _arrow_first(self):
        c, wn = self.couplings, self.nodes
        out = np.empty_like(self.evals)
        for s in range(0, len(self.evals), _CHUNK):
            E = self.evals[s : s + _CHUNK, None]
            out[s : s + _CHUNK] = 1.0 / np.sqrt(1.0 + np.sum((c / (E - wn)) ** 2, axis=1))
        return out

    def project(self, psi0):
        """Components V^T psi0 in the eigenbasis."""
        psi0 = np.asarray(psi0, dtype=complex)
        if self.evecs is not None:
            return self.evecs.T @ psi0
        v1 = self.level_weights() ** 0.5
        c, wn = self.couplings, self.nodes
        out = np.empty(len(self.evals), dtype=complex)
        for s in range(0, len(self.evals), _CHUNK):
            E = self.evals[s : s + _CHUNK, None]
            out[s : s + _CHUNK] = v1[s : s + _CHUNK] * (psi0[0] + (c / (E - wn)) @ psi0[1:])
        return out

    def residuals(self):
        """max_k ||H v_k - E_k v_k|| (needs eigenvectors)."""
        if self.evecs is None:
            raise ValueError("eigenvectors were not computed")
        H = self.matrix()
        return np.linalg.norm(H @ self.evecs - self.evecs * self.evals, axis=0)

    def state(self, level=0):
        e = np.zeros(self.dim)
        e[level] = 1.0
        return e

    def continuum_vector(self, amp):
        """Discrete representation of a continuum amplitude phi(w)."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.nlevels :] = np.asarray(amp(self.nodes)) * np.sqrt(self.weight)
        return psi


@lru_cache(maxsize=8)
def discretize(model: FriedrichsModel, N: int, vectors: bool | None = None) -> DiscretizedHamiltonian:
    """Midpoint discretization of the model on [0, omega_max] (cached)."""
    if N < 256:
        raise ValueError("N must be >= 256")
    w = model.omega_max / N
    nodes = (np.arange(N) + 0.5) * w
    c = model.lam * model.form.amplitude(nodes) * np.sqrt(w)
    if vectors is None:
        vectors = model.nlevels > 1
    H = DiscretizedHamiltonian(model, N, nodes, w, c, np.empty(0))
    if vectors or model.nlevels > 1 or model.lam == 0:
        E, V = linalg.eigh(H.matrix())
        H.evals, H.evecs = E, V
    else:
        H.evals = linalg.eigvalsh(H.matrix())
    return H


def exact_evolve(H: DiscretizedHamiltonian, psi0, ts) -> np.ndarray:
    """psi(t) = sum_k e^{-i E_k t} (v_k . psi0) v_k; rows are times.

    Negative times are accepted: the discrete dynamics is a group.
    """
    if H.evecs is None:
        raise ValueError("full evolution needs eigenvectors; discretize(..., vectors=True)")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    c = H.project(psi0)
    ph = np.exp(-1j * np.outer(ts, H.evals))
    return (ph * c) @ H.evecs.T


def amplitude(H: DiscretizedHamiltonian, psi0, ts, phi=None) -> np.ndarray:
    """<phi|e^{-iHt}|psi0> for all t (phi defaults to psi0)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    cp = H.project(psi0)
    cf = cp if phi is None else H.project(phi)
    wts = np.conj(cf) * cp
    out = np.empty(len(ts), dtype=complex)
    for s in range(0, len(ts), 64):
        out[s : s + 64] = np.exp(-1j * np.outer(ts[s : s + 64], H.evals)) @ wts
    return out


def survival(H: DiscretizedHamiltonian, psi0, ts) -> np.ndarray:
    return np.abs(amplitude(H, psi0, ts)) ** 2


def exact_density_evolve(H: DiscretizedHamiltonian, rho0, ts, observables=()):
    """rho(t) = U rho0 U^dagger.

    Returns the list of density matrices, plus an array of Tr(rho(t) R) for
    each observable R when observables are supplied.
    """
    if H.evecs is None:
        raise ValueError("density evolution needs eigenvectors")
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    V = H.evecs
    rt = V.T @ np.asarray(rho0, dtype=complex) @ V
    rhos = []
    exps = np.empty((len(observables), len(ts)), dtype=complex)
    Rt = [V.T @ np.asarray(R, dtype=complex) @ V for R in observables]
    for i, t in enumerate(ts):
        u = np.exp(-1j * H.evals * t)
        r = (u[:, None] * rt) * np.conj(u)[None, :]
        for j, R in enumerate(Rt):
            exps[j, i] = np.sum(r * R.T)
        rhos.append(V @ r @ V.T)
    if observables:
        return rhos, exps
    return rhos


def expectation_curve(H: DiscretizedHamiltonian, rho0, R, ts) -> np.ndarray:
    """Tr(rho(t) R) without forming rho(t) in the site basis."""
    V = H.evecs
    rt = V.T @ np.asarray(rho0, dtype=complex) @ V
    Rt = V.T @ np.asarray(R, dtype=complex) @ V
    M = rt * Rt.T
    out = np.empty(len(ts), dtype=complex)
    for i, t in enumerate(np.atleast_1d(ts)):
        u = np.exp(-1j * H.evals * t)
        out[i] = u @ M @ np.conj(u)
    return out


def moments(H: DiscretizedHamiltonian, psi0):
    """(<H>, <H^2> - <H>^2) of psi0."""
    c = np.abs(H.project(psi0)) ** 2
    m1 = np.sum(c * H.evals) / np.sum(c)
    return m1, np.sum(c * H.evals**2) / np.sum(c) - m1**2


def fit_rate(ts, p):
    """Exponential decay rate from a least-squares line through log p."""
    slope = np.polyfit(np.asarray(ts), np.log(np.asarray(p)), 1)[0]
    return -slope


class DecayFit:
    """Estimator-style exponential fit p ~ A e^{-rate t} on a time window."""

    def __init__(self, window=(None, None)):
        self.window = window

    def get_params(self, deep=True):
        return {"window": self.window}

    def set_params(self, **params):
        for k, v in params.items():
            setattr(self, k, v)
        return self

    def fit(self, ts, p):
        ts, p = np.asarray(ts, float), np.asarray(p, float)
        lo, hi = self.window
        m = (p > 0) & (ts >= (-np.inf if lo is None else lo)) & (ts <= (np.inf if hi is None else hi))
        if m.sum() < 2:
            raise ValueError("need at least two positive samples in the window")
        slope, icpt = np.polyfit(ts[m], np.log(p[m]), 1)
        self.rate_, self.amplitude_ = float(-slope), float(np.exp(icpt))
        return self

    def predict(self, ts):
        return self.amplitude_ * np.exp(-self.rate_ * np.asarray(ts, float))
