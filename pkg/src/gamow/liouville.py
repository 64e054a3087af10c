"""Density matrices on L = H (+) (H x H) in the energy representation.

A state has two storage arenas:

* singular diagonal: weights of stable discrete levels and a continuum
  density rho_sigma(sigma) on a grid (the part that cannot live inside
  H x H);
* regular part: discrete-continuum coherences rho_0w, rho_w0 and a kernel
  rho(w, w') stored in factored form L R^dagger on the same grid.

On top of that sits the pole view: coefficients of dyads |i><j| between
resonance (ghost) and stable labels, evolving with the Liouville pole
zeta_ij = z_i - conj(z_j).  Pairings of dyads are handled by GhostAlgebra.

Conventions
-----------
* the kernel's sigma = (w + w')/2, nu = w - w' coordinates are the Riesz
  view; evolution multiplies the kernel by e^{-i nu t};
* the trace counts the stable weights, the singular density and the
  nu = 0 line of the kernel; ghost dyads contribute nothing;
* singular state components pair only with singular observable components,
  so that the weak limit of rho(t) is exactly the diagonal part.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ObservableError, PreconditionError, ShapeError, StateError

BAR, TILDE = "bar", "tilde"


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    uniform: bool = False

    def __len__(self):
        return len(self.nodes)

    def same_as(self, other: "Grid") -> bool:
        return other is self or (len(other) == len(self) and np.array_equal(other.nodes, self.nodes)
                                 and np.array_equal(other.weights, self.weights))

    @staticmethod
    def regular(omega_max: float, n: int = 513) -> "Grid":
        """Uniform nodes on [0, omega_max] with trapezoid weights."""
        x = np.linspace(0.0, omega_max, n)
        w = np.full(n, x[1] - x[0])
        w[[0, -1]] *= 0.5
        return Grid(x, w, uniform=True)

    @staticmethod
    def adapted(centers: Sequence[float], widths: Sequence[float], omega_max: float,
                t_max: float = 0.0, order: int = 16, alpha: float = 0.5) -> "Grid":
        """Composite Gauss-Legendre grid on [0, inf).

        Panels shrink geometrically toward 0 and toward each resonance
        center (down to a fraction of its width), are capped so that every
        panel holds at most about one period of e^{-iwt} at t_max, and the
        range beyond 3 omega_max is covered by the map w = W / u.
        """
        far = 3.0 * omega_max
        cap = min(2 * np.pi / t_max if t_max > 0 else np.inf, 0.5)
        edges = [0.0]
        x = 0.0
        while x < far:
            h = min(cap, alpha * (x + 1e-3))
            for c, g in zip(centers, widths):
                h = min(h, max(0.25 * g, alpha * abs(x - c)))
            # do not step across a center
            nxt = x + h
            for c in centers:
                if x < c < nxt:
                    nxt = c
            x = min(nxt, far)
            edges.append(x)
        edges = np.asarray(edges)
        xg, wg = np.polynomial.legendre.leggauss(order)
        lo, hi = edges[:-1], edges[1:]
        nodes = (0.5 * (hi - lo))[:, None] * xg + (0.5 * (hi + lo))[:, None]
        wts = (0.5 * (hi - lo))[:, None] * wg
        xt, wt = np.polynomial.legendre.leggauss(64)
        u = 0.5 * (xt + 1.0)
        tail_n = far / u
        tail_w = far / u**2 * 0.5 * wt
        return Grid(np.concatenate([nodes.ravel(), tail_n[::-1]]),
                    np.concatenate([wts.ravel(), tail_w[::-1]]))


# ---------------------------------------------------------------------------
# ghost algebra

@dataclass(frozen=True)
class Label:
    energy: complex
    ghost: bool
    name: str = ""

    @property
    def gamma(self) -> float:
        return -2.0 * self.energy.imag if self.ghost else 0.0


def _key(kk, i, kb, j):
    return ((kk, i), (kb, j))


class GhostAlgebra:
    """Pairing table for bar/tilde kets and bras.

    <i~|j-> = <i-|j~> = delta_ij ;  <i-|j-> = <i~|j~> = delta_ij eps_i

    with eps_i = 0 for ghost (complex-pole) labels and 1 otherwise.  An
    operator is a mapping {((kind, i), (kind, j)): coefficient} of dyads
    |i><j|.  The metric variant of the pairing forces eps to 1.
    """

    def __init__(self, labels: Sequence[Label]):
        self.labels = tuple(labels)

    def eps(self, i) -> int:
        return 0 if self.labels[i].ghost else 1

    def pair(self, bra, ket, metric=False) -> int:
        (kb, i), (kk, j) = bra, ket
        if i != j:
            return 0
        if kb != kk:
            return 1
        return 1 if metric else self.eps(i)

    def mul(self, A: Mapping, B: Mapping, metric=False) -> dict:
        out: dict = {}
        for (ka, ba), ca in A.items():
            for (kb, bb), cb in B.items():
                p = self.pair(ba, kb, metric)
                if p:
                    k = (ka, bb)
                    out[k] = out.get(k, 0) + p * ca * cb
        return {k: v for k, v in out.items() if v != 0}

    def power(self, A: Mapping, n: int) -> dict:
        out = dict(A)
        for _ in range(n - 1):
            out = self.mul(out, A)
        return out

    def trace(self, A: Mapping, metric=False) -> complex:
        return sum(c * self.pair(b, k, metric) for (k, b), c in A.items())

    def norm_bar(self, i) -> int:
        """<i-|i-> : 0 for ghosts, 1 for stable labels."""
        return self.pair((BAR, i), (BAR, i))


# ---------------------------------------------------------------------------
# states

@dataclass(frozen=True, eq=False)
class LiouvilleState:
    grid: Grid | None = None
    rho_sigma: np.ndarray | None = None
    rho_0w: np.ndarray | None = None
    rho_w0: np.ndarray | None = None
    left: np.ndarray | None = None  # kernel = left @ right^H
    right: np.ndarray | None = None
    labels: tuple = ()
    coeffs: Mapping = field(default_factory=dict)  # {(i, j): c} for |i-><j-|
    extra: tuple = ()  # (sigma_j, zeta, coeff) slots, never generated here
    time: float = 0.0

    # -- views -----------------------------------------------------------
    @property
    def algebra(self) -> GhostAlgebra:
        return GhostAlgebra(self.labels)

    @property
    def rho0(self) -> float:
        """Weight of the first stable discrete label."""
        for i, lab in enumerate(self.labels):
            if not lab.ghost:
                return float(np.real(self.coeffs.get((i, i), 0.0)))
        return 0.0

    @property
    def omega0(self) -> float | None:
        for lab in self.labels:
            if not lab.ghost:
                return float(lab.energy.real)
        return None

    def zeta(self, i, j) -> complex:
        return complex(self.labels[i].energy - np.conj(self.labels[j].energy))

    @property
    def poles(self) -> dict:
        """Liouville poles zeta_ij of every ghost-carrying coefficient."""
        return {k: self.zeta(*k) for k in self.coeffs if self._ghosty(k)}

    def _ghosty(self, k):
        return self.labels[k[0]].ghost or self.labels[k[1]].ghost

    @property
    def rho_n0(self) -> dict:
        return {k: c for k, c in self.coeffs.items() if self.labels[k[0]].ghost and not self.labels[k[1]].ghost}

    @property
    def rho_0n(self) -> dict:
        return {k: c for k, c in self.coeffs.items() if not self.labels[k[0]].ghost and self.labels[k[1]].ghost}

    @property
    def pairs(self) -> dict:
        """Ghost-ghost coefficients (the sigma-integrated rho_{sigma l})."""
        return {k: c for k, c in self.coeffs.items() if self.labels[k[0]].ghost and self.labels[k[1]].ghost}

    rho_sl = pairs

    def dyads(self, ghost_only=False) -> dict:
        out = {}
        for (i, j), c in self.coeffs.items():
            if ghost_only and not self._ghosty((i, j)):
                continue
            out[_key(BAR, i, BAR, j)] = c
        return out

    @property
    def has_kernel(self) -> bool:
        return self.left is not None

    @property
    def kernel(self) -> np.ndarray:
        if self.left is None:
            n = 0 if self.grid is None else len(self.grid)
            return np.zeros((n, n), complex)
        return self.left @ self.right.conj().T

    def kernel_diag(self) -> np.ndarray:
        if self.left is None:
            return np.zeros(len(self.grid)) if self.grid is not None else np.zeros(0)
        return np.real(np.sum(self.left * self.right.conj(), axis=1))

    def riesz(self):
        """Ragged (sigma, nu) view of the kernel on a uniform grid.

        Returns a list of (sigma, nu-array, values) with |nu| <= 2 sigma.
        """
        if self.grid is None or not self.grid.uniform:
            raise ShapeError("Riesz view needs a uniform grid")
        K = self.kernel
        x = self.grid.nodes
        n = len(x)
        out = []
        for s in range(2 * n - 1):
            i = np.arange(max(0, s - n + 1), min(s, n - 1) + 1)
            j = s - i
            out.append((0.5 * (x[i[0]] + x[j[0]]), x[i] - x[j], K[i, j]))
        return out

    def hermitian_residual(self) -> float:
        r = 0.0
        if self.rho_0w is not None:
            r = max(r, float(np.max(np.abs(self.rho_0w - np.conj(self.rho_w0)), initial=0.0)))
        if self.left is not None and len(self.grid) <= 4096:
            K = self.kernel
            r = max(r, float(np.max(np.abs(K - K.conj().T), initial=0.0)))
        for (i, j), c in self.coeffs.items():
            r = max(r, abs(c - np.conj(self.coeffs.get((j, i), 0.0))))
        return r


def _check_grid(a: LiouvilleState, b) -> None:
    ga, gb = a.grid, b.grid
    if ga is None or gb is None:
        return
    if not ga.same_as(gb):
        raise ShapeError("grids differ")


def _w(rho):
    return rho.grid.weights


def _sigma_part(rho):
    return rho.rho_sigma if rho.rho_sigma is not None else None


def liouville_inner(a: LiouvilleState, b: LiouvilleState) -> complex:
    """(a|b) = sum conj(a) b over every stored coordinate."""
    _check_grid(a, b)
    total = 0j
    # ghost coefficients are a redundant view once the exact kernel is stored
    skip = a.has_kernel or b.has_kernel
    for k, c in a.coeffs.items():
        if skip and a._ghosty(k):
            continue
        if k in b.coeffs:
            total += np.conj(c) * b.coeffs[k]
    if a.grid is not None or b.grid is not None:
        g = a.grid if a.grid is not None else b.grid
        w = g.weights
        for fa, fb in ((a.rho_sigma, b.rho_sigma), (a.rho_0w, b.rho_0w), (a.rho_w0, b.rho_w0)):
            if fa is not None and fb is not None:
                total += np.sum(w * np.conj(fa) * fb)
        if a.left is not None and b.left is not None:
            # sum_kl w_k w_l conj(La_k Ra_l^H) Lb_k Rb_l^H
            A = (a.left.conj() * w[:, None]).T @ b.left
            B = (a.right * w[:, None]).T @ b.right.conj()
            total += np.sum(A * B)
    return complex(total)


def generalized_trace(rho: LiouvilleState) -> complex:
    """Stable weights + singular density + nu = 0 line; ghost dyads give 0."""
    t = rho.algebra.trace(rho.dyads())
    if rho.grid is not None:
        w = rho.grid.weights
        if rho.rho_sigma is not None:
            t += np.sum(w * rho.rho_sigma)
        if rho.left is not None:
            t += np.sum(w * rho.kernel_diag())
    return complex(t)


def _bound_and_resonances(state):
    poles = list(getattr(state, "poles", ()))
    if not poles:
        raise StateError("state has not been expanded over poles")
    return poles


def from_pure(state, grid: Grid | None = None, t_max: float | None = None) -> LiouvilleState:
    """|psi><psi| of an expanded pure state.

    The continuum part is stored as the rank-one kernel c(w) c(w')^* with
    c(E) = <E+|psi>; stable discrete levels carry their weights and
    coherences; the pole view holds psi_i psi_j^* for every label pair
    that involves a resonance.
    """
    poles = _bound_and_resonances(state)
    model = state.model
    labels = tuple(Label(complex(p.z0), not p.bound, f"z{k}") for k, p in enumerate(poles))
    c = np.asarray(state.coeffs, dtype=complex)
    if grid is None:
        res = [p for p in poles if not p.bound]
        tm = state.t_max if t_max is None else t_max
        grid = Grid.adapted([p.z0.real for p in res], [max(p.gamma, 1e-6) for p in res],
                            model.omega_max, t_max=max(tm, 1.0))
    amp = state.spectral_amplitude(grid.nodes)
    coeffs = {}
    for i in range(len(labels)):
        for j in range(len(labels)):
            if labels[i].ghost or labels[j].ghost or i == j:
                coeffs[(i, j)] = c[i] * np.conj(c[j])
    bound = [i for i, lab in enumerate(labels) if not lab.ghost]
    r0w = rw0 = None
    if bound:
        b = bound[0]
        r0w = c[b] * np.conj(amp)
        rw0 = amp * np.conj(c[b])
    return LiouvilleState(grid=grid, rho_sigma=np.zeros(len(grid)), rho_0w=r0w, rho_w0=rw0,
                          left=amp[:, None].copy(), right=amp[:, None].copy(), labels=labels,
                          coeffs=coeffs, time=state.time)


def mixed_state(grid: Grid, rho_sigma, labels=(), coeffs=None) -> LiouvilleState:
    """Diagonal (equilibrium-type) state plus optional pole coefficients."""
    rs = np.asarray(rho_sigma, dtype=float)
    if rs.shape != grid.nodes.shape:
        raise ShapeError("rho_sigma must live on the grid")
    return LiouvilleState(grid=grid, rho_sigma=rs, labels=tuple(labels), coeffs=dict(coeffs or {}))


def pole_state(labels: Sequence[Label], coeffs: Mapping, time: float = 0.0) -> LiouvilleState:
    """A state made only of dyad coefficients (backgrounds dropped)."""
    return LiouvilleState(labels=tuple(labels), coeffs=dict(coeffs), time=time)


def evolve(rho: LiouvilleState, t: float) -> LiouvilleState:
    """Forward Liouville evolution by t >= 0."""
    if t < 0:
        raise DomainError("Liouville evolution is a semigroup: t must be >= 0")
    if t == 0:
        return rho
    coeffs = {k: c * np.exp(-1j * rho.zeta(*k) * t) for k, c in rho.coeffs.items()}
    kw = dict(coeffs=coeffs, time=rho.time + t)
    if rho.grid is not None:
        ph = np.exp(-1j * rho.grid.nodes * t)
        if rho.left is not None:
            kw["left"] = rho.left * ph[:, None]
            kw["right"] = rho.right * ph[:, None]
        w0 = rho.omega0
        if rho.rho_0w is not None and w0 is not None:
            e0 = np.exp(-1j * w0 * t)
            kw["rho_0w"] = rho.rho_0w * e0 * np.conj(ph)
            kw["rho_w0"] = rho.rho_w0 * ph * np.conj(e0)
    return replace(rho, **kw)


# ---------------------------------------------------------------------------
# observables

@dataclass(frozen=True, eq=False)
class Observable:
    """Observable with the same arenas as a state.

    ``stable`` holds diagonal values on stable labels, ``sigma`` the singular
    diagonal function, ``left/right`` a factored regular kernel and
    ``dyads`` the pole-sector expansion on tilde dyads (mirror basis).
    """

    grid: Grid | None = None
    stable: Mapping = field(default_factory=dict)  # {(i, j): value}
    sigma: np.ndarray | None = None
    r_0w: np.ndarray | None = None
    r_w0: np.ndarray | None = None
    left: np.ndarray | None = None
    right: np.ndarray | None = None
    dyads: Mapping = field(default_factory=dict)

    def check_hermitian(self, tol=1e-10):
        for (i, j), v in self.stable.items():
            if abs(v - np.conj(self.stable.get((j, i), 0.0))) > tol:
                raise ObservableError("stable block is not Hermitian")
        if self.sigma is not None and np.max(np.abs(np.imag(self.sigma)), initial=0) > tol:
            raise ObservableError("singular diagonal must be real")
        if self.r_0w is not None and np.max(np.abs(self.r_0w - np.conj(self.r_w0)), initial=0) > tol:
            raise ObservableError("coherence blocks are not adjoint")
        if self.left is not None:
            rng = np.random.default_rng(0)
            x = rng.standard_normal(len(self.left)) + 1j * rng.standard_normal(len(self.left))
            y = rng.standard_normal(len(self.left)) + 1j * rng.standard_normal(len(self.left))
            a = np.vdot(x, self.left @ (self.right.conj().T @ y))
            b = np.conj(np.vdot(y, self.left @ (self.right.conj().T @ x)))
            if abs(a - b) > tol * max(1.0, abs(a)):
                raise ObservableError("regular kernel is not Hermitian")
        for ((kk, i), (kb, j)), v in self.dyads.items():
            if abs(v - np.conj(self.dyads.get(((kb, j), (kk, i)), 0.0))) > tol:
                raise ObservableError("dyad expansion is not Hermitian")


def identity(rho: LiouvilleState) -> Observable:
    g = rho.grid
    st = {(i, i): 1.0 for i, lab in enumerate(rho.labels) if not lab.ghost}
    return Observable(grid=g, stable=st, sigma=None if g is None else np.ones(len(g)))


def hamiltonian(rho: LiouvilleState) -> Observable:
    g = rho.grid
    st = {(i, i): float(lab.energy.real) for i, lab in enumerate(rho.labels) if not lab.ghost}
    return Observable(grid=g, stable=st, sigma=None if g is None else g.nodes.copy())


def projector(rho: LiouvilleState, amp: np.ndarray, stable_amp: Mapping | None = None) -> Observable:
    """|r><r| for a vector with continuum amplitude amp(E) = <E+|r> and stable components."""
    stable_amp = dict(stable_amp or {})
    st = {(i, j): a * np.conj(b) for i, a in stable_amp.items() for j, b in stable_amp.items()}
    r0w = rw0 = None
    if stable_amp:
        i0 = min(stable_amp)
        r0w = stable_amp[i0] * np.conj(amp)
        rw0 = amp * np.conj(stable_amp[i0])
    return Observable(grid=rho.grid, stable=st, r_0w=r0w, r_w0=rw0,
                      left=np.asarray(amp)[:, None], right=np.asarray(amp)[:, None])


def _pair_full(rho: LiouvilleState, R: Observable) -> complex:
    total = 0j
    for (i, j), c in rho.coeffs.items():
        if not rho.labels[i].ghost and not rho.labels[j].ghost:
            total += c * R.stable.get((j, i), 0.0)
    if rho.grid is None:
        return total
    w = rho.grid.weights
    if R.sigma is not None:
        dens = rho.kernel_diag() + (rho.rho_sigma if rho.rho_sigma is not None else 0.0)
        total += np.sum(w * dens * R.sigma)
    if rho.rho_0w is not None and R.r_w0 is not None:
        total += np.sum(w * (rho.rho_0w * R.r_w0 + rho.rho_w0 * R.r_0w))
    if rho.left is not None and R.left is not None:
        A = (R.right.conj() * w[:, None]).T @ rho.left
        B = (rho.right.conj() * w[:, None]).T @ R.left
        total += np.sum(A.T * B)
    return total


def _pair_pole(rho: LiouvilleState, R: Observable) -> complex:
    total = 0j
    for (i, j), c in rho.coeffs.items():
        if not rho.labels[i].ghost and not rho.labels[j].ghost:
            total += c * R.stable.get((j, i), 0.0)
    if rho.grid is not None and R.sigma is not None:
        dens = rho.kernel_diag() + (rho.rho_sigma if rho.rho_sigma is not None else 0.0)
        total += np.sum(rho.grid.weights * dens * R.sigma)
    if R.dyads:
        alg = rho.algebra
        total += alg.trace(alg.mul(rho.dyads(ghost_only=True), R.dyads))
    return total


def expectation(rho: LiouvilleState, R: Observable, mode: str = "full") -> float:
    """<R> = Tr[rho R] / Tr rho.

    ``full`` uses the exact stored kernel; ``pole`` uses the equilibrium
    diagonal plus the ghost dyads paired with R's mirror expansion
    (backgrounds dropped).
    """
    R.check_hermitian()
    if rho.grid is not None and R.grid is not None:
        _check_grid(rho, R)
    num = _pair_full(rho, R) if mode == "full" else _pair_pole(rho, R)
    tr = generalized_trace(rho)
    return float(np.real(num / tr))


def probability(rho: LiouvilleState, amp, stable_amp=None) -> float:
    """<r|rho|r> for a normalized vector r."""
    return float(np.real(_pair_full(rho, projector(rho, amp, stable_amp))))


# ---------------------------------------------------------------------------
# equilibrium, decoherence, Lyapunov

def slowest_rate(rho: LiouvilleState) -> float | None:
    rates = [-rho.zeta(*k).imag for k in rho.coeffs if rho._ghosty(k)]
    rates = [r for r in rates if r > 0]
    return min(rates) if rates else None


def equilibrium_parts(rho: LiouvilleState, t: float = 0.0):
    """(rho_star, rho_1(t), gamma_min) with rho(t) = rho_star + e^{-gamma_min t} rho_1(t).

    Backgrounds are dropped: rho_star keeps the stable weights and the
    continuum diagonal (singular density plus the kernel's nu = 0 line);
    rho_1 collects every dyad that involves a ghost.  gamma_min is None when
    there is no ghost content.
    """
    rt = evolve(rho, t)
    star_coeffs = {k: c for k, c in rt.coeffs.items() if not rt._ghosty(k)}
    sig = None
    if rho.grid is not None:
        sig = rho.kernel_diag() + (rho.rho_sigma if rho.rho_sigma is not None else 0.0)
    star = LiouvilleState(grid=rho.grid, rho_sigma=sig, labels=rho.labels, coeffs=star_coeffs, time=rt.time)
    gmin = slowest_rate(rho)
    scale = 1.0 if gmin is None else np.exp(gmin * t)
    one = {k: c * scale for k, c in rt.coeffs.items() if rt._ghosty(k)}
    rho1 = LiouvilleState(labels=rho.labels, coeffs=one, time=rt.time)
    return star, rho1, gmin


def pole_norm(rho: LiouvilleState, ghost_only=True) -> float:
    return float(np.sqrt(sum(abs(c) ** 2 for k, c in rho.coeffs.items() if not ghost_only or rho._ghosty(k))))


def decoherence_profile(rho: LiouvilleState, ts) -> np.ndarray:
    """D(t) = total squared modulus of the ghost-carrying coefficients."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0):
        raise DomainError("t must be >= 0")
    keys = [k for k in rho.coeffs if rho._ghosty(k)]
    if not keys:
        return np.zeros_like(ts)
    c2 = np.array([abs(rho.coeffs[k]) ** 2 for k in keys])
    rates = np.array([2 * rho.zeta(*k).imag for k in keys])
    return np.exp(np.outer(ts, rates)) @ c2


def _ghost_diag(rho):
    return [(i, rho.coeffs[(i, i)]) for i, lab in enumerate(rho.labels) if lab.ghost and (i, i) in rho.coeffs]


def _stable_trace(rho):
    tr = sum(c for (i, j), c in rho.coeffs.items() if i == j and not rho.labels[i].ghost)
    if rho.grid is not None:
        w = rho.grid.weights
        if rho.rho_sigma is not None:
            tr += np.sum(w * rho.rho_sigma)
        if rho.left is not None:
            tr += np.sum(w * rho.kernel_diag())
    return float(np.real(tr))


def metric_trace(rho: LiouvilleState) -> complex:
    """Tr[rho M~]: generalized trace with the ghost factor removed."""
    alg = rho.algebra
    t = alg.trace(rho.dyads(), metric=True)
    if rho.grid is not None:
        w = rho.grid.weights
        if rho.rho_sigma is not None:
            t += np.sum(w * rho.rho_sigma)
        if rho.left is not None:
            t += np.sum(w * rho.kernel_diag())
    return complex(t)


def lyapunov_Y(rho: LiouvilleState, ts, signed: bool = True):
    """(Y, Ydot, Y_G) on the t grid.

    -Y(t) = Tr[rho(t) M~] = sum_I rho_II + sum_i rho_ii e^{-gamma_i t}
    Ydot  = sum_i rho_ii gamma_i e^{-gamma_i t}
    -Y_G  = sum_I |rho_II|^2 + sum_i |rho_ii|^2 e^{-gamma_i t}
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0):
        raise DomainError("t must be >= 0")
    gd = _ghost_diag(rho)
    if signed:
        for i, c in gd:
            if abs(np.imag(c)) > 1e-12 or np.real(c) < 0:
                raise PreconditionError(f"rho_{i}{i} = {c} is not >= 0; use the linear-entropy variant Y_G")
    Y = np.array([-np.real(metric_trace(evolve(rho, t))) for t in ts])
    Yd = np.zeros_like(ts)
    ygc = sum(abs(c) ** 2 for (i, j), c in rho.coeffs.items() if i == j and not rho.labels[i].ghost)
    YG = np.full_like(ts, -ygc)
    for i, c in gd:
        g = rho.labels[i].gamma
        Yd += np.real(c) * g * np.exp(-g * ts)
        YG -= abs(c) ** 2 * np.exp(-g * ts)
    return Y, Yd, YG


# ---------------------------------------------------------------------------
# serialization

def to_dict(rho: LiouvilleState) -> dict:
    def arr(a):
        if a is None:
            return None
        a = np.asarray(a)
        if np.iscomplexobj(a):
            return {"re": a.real.tolist(), "im": a.imag.tolist()}
        return a.tolist()

    return {
        "time": rho.time,
        "grid": None if rho.grid is None else {"nodes": arr(rho.grid.nodes), "weights": arr(rho.grid.weights)},
        "rho_sigma": arr(rho.rho_sigma),
        "rho_0w": arr(rho.rho_0w),
        "rho_w0": arr(rho.rho_w0),
        "left": arr(rho.left),
        "right": arr(rho.right),
        "labels": [{"re": l.energy.real, "im": l.energy.imag, "ghost": l.ghost, "name": l.name} for l in rho.labels],
        "coeffs": [[i, j, complex(c).real, complex(c).imag] for (i, j), c in sorted(rho.coeffs.items())],
    }
