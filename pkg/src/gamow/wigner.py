"""Wigner functions and Weyl symbols on a uniform position grid (hbar = 1).

A density matrix given on n coarse nodes (spacing h) is first lifted to a
2n-point grid by band-limited FFT interpolation, E rho E^dagger with E an
isometry.  On the fine grid (spacing h' = h / 2) the pair q -+ lambda sits on
nodes j -+ m, so the defining integrals become finite sums:

    rho_W(q_j, p_l) = 1/pi sum_m w_m rho_f[j-m, j+m] e^{2i m h' p_l}
    O_W(q_j, p_l)   = 2    sum_m w_m O_f[j-m, j+m] e^{2i m h' p_l}

over |m| <= n/2.  For even n the two end terms reach the same antipodal pair,
so they carry w = sqrt(1/2); every other w_m is 1.  The momenta are
p_l = l pi / (n h), l = -n .. n-1.  Because E rho E^dagger is band
limited to half the fine band, the sum over equal-parity index pairs is half
of the full trace, which makes

    sum rho_W h' dp = Tr rho,   sum rho_W O_W h' dp = Tr(rho O)

exact identities.  The symbol sum stops at half the box, so the identity maps
to 1 and local operators keep local symbols away from the box edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy import ndimage

from .errors import HermiticityError, PaddingError, ShapeError, SupportError

HERM_TOL = 1e-10


@dataclass(frozen=True)
class PositionGrid:
    n: int
    h: float
    q0: float = 0.0

    @staticmethod
    def centered(n: int, length: float) -> "PositionGrid":
        h = length / n
        return PositionGrid(n, h, -0.5 * length)

    @property
    def nodes(self) -> np.ndarray:
        return self.q0 + self.h * np.arange(self.n)

    @property
    def fine(self) -> np.ndarray:
        return self.q0 + 0.5 * self.h * np.arange(2 * self.n)

    @property
    def momenta(self) -> np.ndarray:
        return np.arange(-self.n, self.n) * np.pi / (self.n * self.h)

    @property
    def dq(self) -> float:
        return 0.5 * self.h

    @property
    def dp(self) -> float:
        return np.pi / (self.n * self.h)

    def multiplication(self, f) -> np.ndarray:
        """Band-limited multiplication by f(q): E^dagger diag(f(q_fine)) E.

        A coarse diag(f) is periodic across the band edge and aliases into
        the symbol; compressing the fine-grid operator keeps the symbol close
        to f away from the box edge (error O(h)).
        """
        E = _lift(self.n)
        return E.conj().T @ (np.asarray(f(self.fine))[:, None] * E)

    def position(self) -> np.ndarray:
        return self.multiplication(lambda x: x)

    def momentum(self) -> np.ndarray:
        """Band-limited -i d/dq (spectral derivative)."""
        n = self.n
        k = 2 * np.pi * np.fft.fftfreq(n, self.h)
        if n % 2 == 0:
            k[n // 2] = 0.0  # Nyquist mode has no sign; drop it to keep P Hermitian
        F = np.fft.fft(np.eye(n), axis=0, norm="ortho")
        return F.conj().T @ (k[:, None] * F)


@dataclass(frozen=True, eq=False)
class PhaseSpaceFunction:
    values: np.ndarray  # (2n, 2n): rows q (fine grid), columns p
    grid: PositionGrid

    @property
    def q(self):
        return self.grid.fine

    @property
    def p(self):
        return self.grid.momenta

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.dq * self.grid.dp)

    def pair(self, other: "PhaseSpaceFunction") -> float:
        if other.grid != self.grid:
            raise ShapeError("phase-space grids differ")
        return float(np.sum(self.values * other.values) * self.grid.dq * self.grid.dp)

    def __add__(self, other):
        return PhaseSpaceFunction(self.values + other.values, self.grid)

    def __mul__(self, c):
        return PhaseSpaceFunction(self.values * c, self.grid)

    __rmul__ = __mul__

    def to_rows(self):
        """(q, p, value) triples for CSV export."""
        Q, Pm = np.meshgrid(self.q, self.p, indexing="ij")
        return np.column_stack([Q.ravel(), Pm.ravel(), self.values.ravel()])


@lru_cache(maxsize=16)
def _lift(n: int) -> np.ndarray:
    """Isometric band-limited interpolation C^n -> C^{2n}."""
    F = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    G = np.zeros((2 * n, n), complex)
    G[k % (2 * n)] = F
    E = np.fft.ifft(G, axis=0, norm="ortho")
    E.setflags(write=False)
    return E


def _check(M, grid):
    M = np.asarray(M, dtype=complex)
    if M.shape != (grid.n, grid.n):
        raise ShapeError(f"matrix must be {grid.n}x{grid.n}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > HERM_TOL * scale:
        raise HermiticityError("matrix is not Hermitian")
    return M


def _fine(M, grid):
    E = _lift(grid.n)
    return E @ M @ E.conj().T


def _transform(Mf, ms, w, c):
    n2 = Mf.shape[0]
    j = np.arange(n2)[:, None]
    vals = Mf[(j - ms) % n2, (j + ms) % n2] * w
    l = np.arange(-n2 // 2, n2 // 2)
    out = c * (vals @ np.exp(2j * np.pi * np.outer(ms, l) / n2))
    if np.max(np.abs(out.imag)) > 1e-8 * max(1.0, float(np.max(np.abs(out.real)))):
        raise HermiticityError("transform is not real; input is not Hermitian enough")
    return out.real


def wigner_transform(rho, grid: PositionGrid) -> PhaseSpaceFunction:
    """rho_W(q, p) = pi^-1 int <q - l|rho|q + l> e^{2ilp} dl on the fine grid."""
    M = _check(rho, grid)
    ms, w = _symbol_range(grid.n)
    return PhaseSpaceFunction(_transform(_fine(M, grid), ms, w, 1.0 / np.pi), grid)


def _symbol_range(n):
    if n % 2 == 0:
        ms = np.arange(-n // 2, n // 2 + 1)
        w = np.ones(len(ms))
        w[[0, -1]] = np.sqrt(0.5)  # antipodal pairs are reached twice
    else:
        ms = np.arange(-(n // 2), n // 2 + 1)
        w = np.ones(len(ms))
    return ms, w


def weyl_symbol(O, grid: PositionGrid) -> PhaseSpaceFunction:
    """O_W(q, p) = int dz e^{ipz} <q - z/2|O|q + z/2> on the fine grid."""
    M = _check(O, grid)
    ms, w = _symbol_range(grid.n)
    return PhaseSpaceFunction(_transform(_fine(M, grid), ms, w, 2.0), grid)


def interior_mask(grid: PositionGrid, margin: float = 0.2, pmargin: float = 0.2) -> np.ndarray:
    """Boolean (q, p) mask that keeps away from the box and momentum edges."""
    q, p = grid.fine, grid.momenta
    L = q[-1] - q[0]
    qm = (q > q[0] + margin * L) & (q < q[-1] - margin * L)
    pm = np.abs(p) < (1 - pmargin) * np.abs(p).max()
    return qm[:, None] & pm[None, :]


# ---------------------------------------------------------------------------
# Moyal product

def _d(F, axis, k, step):
    for _ in range(k):
        F = np.gradient(F, step, axis=axis, edge_order=2)
    return F


def moyal_series(A: PhaseSpaceFunction, B: PhaseSpaceFunction, k: int) -> np.ndarray:
    """A e^{Lambda/2i} B truncated after order k (complex field).

    Lambda = <-d_p ->d_q - <-d_q ->d_p, derivatives by finite differences.
    """
    g = A.grid
    dq, dp = g.dq, g.dp
    out = np.zeros(A.values.shape, complex)
    for n in range(k + 1):
        term = np.zeros_like(out)
        for r in range(n + 1):
            a = _d(_d(A.values, 1, n - r, dp), 0, r, dq)
            b = _d(_d(B.values, 0, n - r, dq), 1, r, dp)
            term += comb(n, r) * (-1) ** r * a * b
        out += term / (factorial(n) * (2j) ** n)
    return out


def moyal_product_check(O1, O2, grid: PositionGrid, kmax: int = 2, mask=None, margin: int = 4):
    """Residuals of the truncated Moyal series against the symbol of O1 O2.

    Returns {k: max |(O1 O2)_W - series_k|} over the mask.  The product
    symbol is complex in general (O1 O2 need not be Hermitian), so it is
    assembled from the Hermitian and anti-Hermitian parts.
    """
    O1 = _check(O1, grid)
    O2 = _check(O2, grid)
    if mask is None:
        mask = interior_mask(grid)
    mask = np.asarray(mask, bool)
    edge = np.zeros_like(mask)
    edge[:margin * kmax + 1] = edge[-(margin * kmax + 1):] = True
    edge[:, :margin * kmax + 1] = edge[:, -(margin * kmax + 1):] = True
    if np.any(mask & edge):
        raise PaddingError("mask reaches the grid edge where finite differences break down")
    prod = O1 @ O2
    Hp = 0.5 * (prod + prod.conj().T)
    Ap = 0.5j * (prod.conj().T - prod)  # prod = Hp + i Ap
    exact = weyl_symbol(Hp, grid).values + 1j * weyl_symbol(Ap, grid).values
    A, B = weyl_symbol(O1, grid), weyl_symbol(O2, grid)
    out = {}
    for k in range(kmax + 1):
        s = moyal_series(A, B, k)
        if not np.all(np.isfinite(s[mask])):
            raise PaddingError("derivative blowup inside the mask")
        out[k] = float(np.max(np.abs(exact - s)[mask]))
    return out


# ---------------------------------------------------------------------------
# states and classical entropy

def coherent_state(grid: PositionGrid, q0: float, p0: float = 0.0, sigma: float = 1 / np.sqrt(2)):
    x = grid.nodes
    psi = np.exp(-((x - q0) ** 2) / (4 * sigma**2) + 1j * p0 * x)
    return psi / np.linalg.norm(psi)


def localized_mixture(grid: PositionGrid, centers, weights, sigma: float = 1 / np.sqrt(2)):
    """sum_I w_I |I><I| with minimum-uncertainty packets at (q_I, p_I)."""
    rho = np.zeros((grid.n, grid.n), complex)
    for (q0, p0), w in zip(centers, weights):
        v = coherent_state(grid, q0, p0, sigma)
        rho += w * np.outer(v, v.conj())
    return rho


def smooth(F: PhaseSpaceFunction, width: float = 2.0) -> PhaseSpaceFunction:
    """Normalized Gaussian convolution (width in grid cells, >= 2); preserves the integral."""
    if width < 2:
        raise ShapeError("smoothing width must be at least 2 cells")
    return PhaseSpaceFunction(ndimage.gaussian_filter(F.values, width, mode="wrap"), F.grid)


@dataclass
class EntropyReport:
    S: np.ndarray
    Sdot: np.ndarray
    leading: np.ndarray
    fixed_point_residual: float
    excluded_mass: float
    region: np.ndarray


def classical_conditional_entropy(rho_Ws, rho_star_W: PhaseSpaceFunction, ts, width: float = 2.0,
                                  floor: float = 1e-8, shrink: bool = False, gamma_min: float | None = None):
    """S(t) = -int_G rho~ log(rho~ / rho~*) dq dp for a sequence of Wigner functions.

    rho~ = smoothed rho_W; the reference is the smoothed equilibrium, so
    P rho* = rho* holds by construction and the change it makes to rho* is
    reported as ``fixed_point_residual``.  G is where rho~* exceeds
    ``floor`` times its maximum.  ``leading`` is -1/2 int (rho~ - rho~*)^2 / rho~*.
    """
    ts = np.asarray(ts, dtype=float)
    star = smooth(rho_star_W, width)
    res = float(np.max(np.abs(star.values - rho_star_W.values)))
    G = star.values > floor * star.values.max()
    cell = star.grid.dq * star.grid.dp
    S, lead = [], []
    excluded = 0.0
    for F in rho_Ws:
        r = smooth(F, width).values
        bad = G & (r <= 0)
        if np.any(bad):
            mass = float(np.sum(np.abs(r[bad])) * cell)
            if not shrink:
                raise SupportError("smoothed Wigner function is not positive on the region", mask=G & (r > 0), mass=mass)
            G = G & (r > 0)
            excluded = max(excluded, mass)
        rr = np.clip(r[G], 1e-300, None)
        ss = star.values[G]
        S.append(-np.sum(rr * np.log(rr / ss)) * cell)
        lead.append(-0.5 * np.sum((rr - ss) ** 2 / ss) * cell)
    S = np.asarray(S)
    Sdot = np.gradient(S, ts) if len(ts) > 1 else np.zeros(1)
    return EntropyReport(S, Sdot, np.asarray(lead), res, excluded, G)
