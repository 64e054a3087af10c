"""Discrete levels in a thermal continuum: reduced dynamics and the Gibbs limit.

The initial state is block (+) Z e^{-beta E} on the bath diagonal.  The bath
off-diagonal part is dropped and the bath is always taken as thermal.  The
reduced oscillator state is the bare-level block of U rho U^dagger, with U
taken from the oracle eigenproblem.

The finite-N oracle recurs after 2 pi / w.  Past half that time the exact
evolution is replaced by its long-time form:

    rho_O = V_L diag(b_k) V_L^T  +  block_nm e^{-i (z_n - conj z_m) t}

where b_k = Z w e^{-beta E_k}: each eigenstate of H is a scattering state
that carries the thermal weight of the bath state it connects to.  Dephasing
the bare bath instead gives sum_j V_jk^2 Z w e^{-beta w_j}, which starves
the eigenstates nearest a level whenever w is not small against gamma.

The second term is the memory of the initial block.  It carries the pole
damping it would have in the continuum.  The dephased finite-N value of that
term is an O(w / gamma) artifact and is not used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .friedrichs import FriedrichsModel, find_pole
from .oracle import discretize

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ThermalBathState:
    beta: float
    Z: float
    block: np.ndarray  # discrete-level density block
    nodes: np.ndarray  # bath energy grid (oracle midpoints)
    weight: float  # quadrature weight of one bath node

    @staticmethod
    def make(model: FriedrichsModel, beta: float, block=None, N: int = 1500) -> "ThermalBathState":
        """Thermal bath with Z fixed by Tr block + Z int e^{-beta E} dE = 1."""
        if beta <= 0:
            raise DomainError("beta must be positive")
        L = model.nlevels
        block = np.zeros((L, L), complex) if block is None else np.asarray(block, dtype=complex)
        if block.shape != (L, L):
            raise ShapeError(f"block must be {L}x{L}")
        if np.max(np.abs(block - block.conj().T), initial=0.0) > 1e-12:
            raise ShapeError("block must be Hermitian")
        w = model.omega_max / N
        nodes = (np.arange(N) + 0.5) * w
        mass = np.sum(np.exp(-beta * nodes)) * w
        tr = float(np.real(np.trace(block)))
        if not 0 <= tr < 1:
            raise DomainError("discrete trace must lie in [0, 1)")
        bath = ThermalBathState(float(beta), (1.0 - tr) / mass, block, nodes, w)
        if abs(bath.normalization() - 1.0) > NORM_TOL:
            raise DomainError("bath normalization failed")
        return bath

    @property
    def populations(self) -> np.ndarray:
        """Bath weight per node, Z e^{-beta E} w."""
        return self.Z * np.exp(-self.beta * self.nodes) * self.weight

    def normalization(self) -> float:
        return float(np.real(np.trace(self.block)) + np.sum(self.populations))

    def density(self) -> np.ndarray:
        """Full initial density matrix in the bare basis (levels first)."""
        L = len(self.block)
        rho = np.zeros((L + len(self.nodes),) * 2, complex)
        rho[:L, :L] = self.block
        rho[np.arange(L, rho.shape[0]), np.arange(L, rho.shape[0])] = self.populations
        return rho


def _oracle(model, bath):
    N = len(bath.nodes)
    if not np.isclose(model.omega_max / N, bath.weight, rtol=1e-12):
        raise ShapeError("bath grid does not match the model's energy range")
    return discretize(model, N, True)


def _rates(model):
    return np.array([find_pole(model, level=n).z0 for n in range(model.nlevels)])


def long_time_state(model: FriedrichsModel, bath: ThermalBathState) -> np.ndarray:
    """Bath-fed block V_L diag(b) V_L^T with thermal eigenstate weights (t -> inf)."""
    H = _oracle(model, bath)
    L = model.nlevels
    b = bath.Z * np.exp(-bath.beta * H.evals) * bath.weight
    VL = H.evecs[:L]
    return (VL * b) @ VL.T + 0j


def reduced_oscillator_state(model: FriedrichsModel, bath: ThermalBathState, t: float):
    """Discrete-level block of the evolved state at time t >= 0."""
    if t < 0:
        raise DomainError("reduced dynamics is defined for t >= 0")
    L = model.nlevels
    H = _oracle(model, bath)
    if model.lam == 0 or t <= 0.5 * H.recurrence_time:
        V = H.evecs
        UL = (V[:L] * np.exp(-1j * H.evals * t)) @ V.T  # rows <n| e^{-iHt}
        A = UL[:, :L]
        B = UL[:, L:]
        return A @ bath.block @ A.conj().T + (B * bath.populations) @ B.conj().T
    z = _rates(model)
    mem = bath.block * np.exp(-1j * np.subtract.outer(z, z.conj()) * t)
    return long_time_state(model, bath) + mem


def gibbs_ratio(rho_O, model: FriedrichsModel, beta: float, n: int = 1, m: int = 0):
    """(rho_nn / rho_mm, e^{-beta (w_n - w_m)})."""
    d = np.real(np.diag(rho_O))
    return d[n] / d[m], float(np.exp(-beta * (model.omegas[n] - model.omegas[m])))


@dataclass
class OverlapReport:
    lambdas: np.ndarray
    second_moments: np.ndarray  # sum_k |<n|E_k>|^2 (E_k - w_n)^2
    half_mass_widths: np.ndarray  # interquartile range of the overlap distribution
    max_weights: np.ndarray  # largest single-eigenstate weight on the level
    exponent: float
    monotone: bool
    discrete_overlaps: list  # level-by-level overlap blocks


def _discrete_block(V, L):
    """<n | E_k(n')> with E_k(n') the eigenstate carrying most weight on level n'."""
    ks = [int(np.argmax(V[n] ** 2)) for n in range(L)]
    return np.abs(V[:L][:, ks])


def weak_coupling_overlap_check(model: FriedrichsModel, lambdas, level: int = 0, N: int = 1500):
    """Concentration of |<n|E>|^2 around the bare energy as lambda decreases."""
    lambdas = np.asarray(lambdas, float)
    L = model.nlevels
    w0 = model.omegas[level]
    mom, iqr, mx, blocks = [], [], [], []
    for lam in lambdas:
        H = discretize(model.with_(lam=float(lam)), N, True)
        p = H.evecs[level] ** 2
        E = H.evals
        mom.append(float(np.sum(p * (E - w0) ** 2)))
        c = np.cumsum(p) / np.sum(p)
        iqr.append(float(np.interp(0.75, c, E) - np.interp(0.25, c, E)))
        mx.append(float(p.max()))
        blocks.append(_discrete_block(H.evecs, L))
    mom = np.asarray(mom)
    good = (lambdas > 0) & (mom > 0)
    expo = float(np.polyfit(np.log(lambdas[good]), np.log(mom[good]), 1)[0]) if good.sum() > 1 else float("nan")
    order = np.argsort(-lambdas)
    return OverlapReport(lambdas, mom, np.asarray(iqr), np.asarray(mx), expo,
                         bool(np.all(np.diff(mom[order]) < 0)), blocks)
