"""Pure states: Hardy test, pole expansion, evolution and survival.

States and probes are ``a|1> + f(w) r(w)|w>`` with r rational.  For such a
pair the resolvent element is

    M(z) = (b* + lam J_s(z)) (a + lam J_r(z)) / eta(z) + J_sr(z),

with J_g the half-line Cauchy transform of f^2 g.  On the positive axis the
spectral density (M(E - i0) - M(E + i0)) / 2 pi i factorizes into a probe
factor continued through the second sheet and a state factor continued on
the first sheet:

    <phi|f_z> <f~_z|psi>  =  f^2(z) phi_II(z) beta_I(z)
    beta_I(z)  = r(z)   + lam (a + lam J_r(z))   / eta(z)
    phi_II(z)  = s*(z)  + lam (b* + lam J_s*(z)) / eta_II(z)

Pushing the energy integral down to the contour picks up the residue at
each resonance, which is the Gamow (pole) term.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import ContinuationError, DomainError, ResolutionError, StateError, ToleranceError
from .friedrichs import Contour, FriedrichsModel, ResonanceData, background_contour, find_pole
from .rational import Rational

RECON_TOL = 1e-6
HARDY_TOL = 1e-4


# ---------------------------------------------------------------------------
# Hardy-class test

@dataclass(frozen=True)
class HardyReport:
    score: float  # share of the resolved time-side L2 mass at t < 0
    mirror_score: float  # share at t > 0
    verdict: str
    bandwidth: float
    guard: float  # |t| below this is not resolved by the band


def _planck_taper(n: int, m: int) -> np.ndarray:
    """C-infinity window rising from 0 to 1 over m nodes at each end."""
    w = np.ones(n)
    k = np.arange(1, m)
    z = m / k - m / (m - k)
    s = 0.5 * (1 - np.tanh(0.5 * np.clip(z, -700, 700)))
    w[0] = w[-1] = 0.0
    w[1:m] = s
    w[n - m : n - 1] = s[::-1]
    return w


def hardy_check(psi_plus, grid, pad: int = 8, taper: float = 0.1, guard: float = 3.0) -> HardyReport:
    """Paley-Wiener test on a uniformly sampled amplitude.

    The samples are extended by zero to a band symmetric about the grid,
    transformed with the kernel e^{-iEt}, and the L2 mass at negative and
    positive times is compared.  A function analytic and decaying in the
    upper half-plane (poles below the axis) has a transform supported on
    t > 0: verdict ``phi-``.  The mirror case is ``phi+``.

    A bare cut at the band edges leaks a slowly decaying tail onto both
    sides.  The samples are therefore rolled off with a Planck window over
    ``taper`` of the nodes at each end, and times within ``guard`` window
    resolutions of zero are discarded.  The score is the t < 0 share of what
    remains, so a transform that is symmetric outside the guard scores 1/2.
    """
    grid = np.asarray(grid, dtype=float)
    psi = np.asarray(psi_plus, dtype=complex)
    if grid.size < 512:
        raise ResolutionError(f"need >= 512 nodes, got {grid.size}")
    dE = np.diff(grid)
    if not np.allclose(dE, dE[0], rtol=1e-8, atol=0):
        raise ResolutionError("grid must be uniform")
    dE = dE[0]
    n = grid.size
    m = max(int(taper * n), 2)
    ext = np.zeros(pad * n, dtype=complex)
    lo = (pad * n - n) // 2
    ext[lo : lo + n] = psi * _planck_taper(n, m)
    # F(t) = sum psi(E) e^{-iEt}: ifft gives e^{+i...}, fft gives e^{-i...}
    F = np.fft.fftshift(np.fft.fft(ext))
    t = np.fft.fftshift(np.fft.fftfreq(ext.size, d=dE)) * 2 * np.pi
    T = guard * 2 * np.pi / (m * dE)
    mass = np.abs(F) ** 2
    mass[0] = 0.0  # unpaired Nyquist bin; keeps the t -> -t mirror exact
    neg = mass[t < -T].sum()
    pos = mass[t > T].sum()
    tot = neg + pos
    if not tot > 1e-30 * mass.sum():
        raise ResolutionError("no time-side mass outside the guard; widen the band")
    neg, pos = neg / tot, pos / tot
    if neg < HARDY_TOL:
        verdict = "phi-"
    elif pos < HARDY_TOL:
        verdict = "phi+"
    else:
        verdict = "neither"
    return HardyReport(float(neg), float(pos), verdict, float(grid[-1] - grid[0]), float(T))


# ---------------------------------------------------------------------------
# states

@dataclass(frozen=True)
class RawState:
    """a |1> + f(w) r(w) |w> with r rational (unnormalized allowed)."""

    a: complex = 1.0
    r: Rational = field(default_factory=lambda: Rational.const(0.0))

    @staticmethod
    def make(a=1.0, num=(0.0,), poles=()):
        return RawState(complex(a), Rational.make(num, poles))

    def scaled(self, c):
        return RawState(self.a * c, self.r * c)

    def bare_norm2(self, model):
        return float(np.real(abs(self.a) ** 2 + (model.form.h * self.r * self.r.reflect()).integral()))

    def bare_energy(self, model):
        h = model.form.h
        rr = h * self.r * self.r.reflect()
        e = model.omega0 * abs(self.a) ** 2 + rr.times_poly([0.0, 1.0]).integral()
        e += 2 * model.lam * np.real(np.conj(self.a) * (h * self.r).integral())
        return float(np.real(e))

    def normalized(self, model):
        return self.scaled(1 / np.sqrt(self.bare_norm2(model)))

    def continuum(self, model, E):
        return model.form.amplitude(E) * self.r(np.asarray(E, dtype=complex))


def inner(model, phi: RawState, psi: RawState) -> complex:
    """<phi|psi> in closed form."""
    return complex(np.conj(phi.a) * psi.a + (model.form.h * phi.r.reflect() * psi.r).integral())


def _check_strip(model, contour: Contour, g: Rational, what: str):
    """Poles of g between the real axis and the contour obstruct deformation."""
    d = contour.depth
    omax = contour.waypoints[-1].real
    for q in g.pole_values():
        if abs(q.imag) < 1e-14 and q.real >= 0:
            raise ContinuationError(f"{what} has a pole on the continuum at {q}")
        if q.imag < 0 and q.real >= 0 and q.imag >= d - 1e-14:
            raise ContinuationError(f"{what} pole {q} lies inside the deformation strip")
        if q.imag < 0 and q.real > omax:
            raise ContinuationError(f"{what} pole {q} lies beyond the closing ray")


def state_factor(model, raw: RawState, z, sheet=1):
    """beta(z) = r + lam (a + lam J_r) / eta on the requested sheet."""
    z = np.asarray(z, dtype=complex)
    Jr = (model.form.h * raw.r).cauchy(z, sheet=sheet)
    return raw.r(z) + model.lam * (raw.a + model.lam * Jr) / model.dispersion(z, sheet=sheet)


def probe_factor(model, probe: RawState, z, sheet=2):
    """phi(z) = s* + lam (b* + lam J_s*) / eta on the requested sheet."""
    sb = probe.r.reflect()
    z = np.asarray(z, dtype=complex)
    Js = (model.form.h * sb).cauchy(z, sheet=sheet)
    return sb(z) + model.lam * (np.conj(probe.a) + model.lam * Js) / model.dispersion(z, sheet=sheet)


def _pole_ket(model, raw: RawState, res: ResonanceData):
    """<f~_i|psi> = sqrt(N0) (a + lam J_r(z0)) on the pole's sheet."""
    if model.lam == 0:
        return complex(raw.a)
    Jr = complex((model.form.h * raw.r).cauchy(res.z0, sheet=res.sheet))
    return np.sqrt(res.N0) * (raw.a + model.lam * Jr)


def _pole_bra(model, probe: RawState, res: ResonanceData):
    """<phi|f_i> = sqrt(N0) (b* + lam J_s*(z0))."""
    if model.lam == 0:
        return complex(np.conj(probe.a))
    Js = complex((model.form.h * probe.r.reflect()).cauchy(res.z0, sheet=res.sheet))
    return np.sqrt(res.N0) * (np.conj(probe.a) + model.lam * Js)


@dataclass(frozen=True)
class GamowState:
    """A pure state expanded over resonance poles plus a contour background."""

    model: FriedrichsModel
    raw: RawState
    poles: tuple
    coeffs: np.ndarray  # psi_i(t) = <f~_i|psi(t)>
    contour: Contour
    nodes: np.ndarray
    weights: np.ndarray
    background: np.ndarray  # f^2(z) beta(z) e^{-izt} dz at the nodes
    time: float = 0.0
    t_max: float = 0.0
    order: int = 16

    @property
    def discrete(self):
        """Bare discrete amplitude a(t) = <1|psi(t)>."""
        return self.pair(RawState(1.0, Rational.const(0.0)))

    def pole_terms(self, probe: RawState) -> np.ndarray:
        return np.array([_pole_bra(self.model, probe, p) * c for p, c in zip(self.poles, self.coeffs)])

    def background_term(self, probe: RawState) -> complex:
        if self.model.lam == 0:
            phi = probe.r.reflect()(self.nodes)
        else:
            phi = probe_factor(self.model, probe, self.nodes, sheet=2)
        return complex(np.sum(phi * self.background))

    def pair(self, probe: RawState) -> complex:
        """<phi|psi(t)> reconstructed from poles and background."""
        return complex(self.pole_terms(probe).sum() + self.background_term(probe))

    def spectral_amplitude(self, E):
        """<E+|psi(t)> on the real axis (boundary values from below)."""
        E = np.asarray(E, dtype=float)
        m = self.model
        if m.lam == 0:
            return m.form.amplitude(E) * self.raw.r(E + 0j) * np.exp(-1j * E * self.time)
        beta = state_factor(m, self.raw, E + 0j, sheet=1)
        return m.form.amplitude(E) * beta * np.exp(-1j * E * self.time)

    def norm_energy(self):
        """(<psi|psi>, <psi|H|psi>) from the spectral representation."""
        m = self.model
        bound = [(p, c) for p, c in zip(self.poles, self.coeffs) if p.bound]
        n = sum(abs(c) ** 2 for _, c in bound)
        e = sum(abs(c) ** 2 * p.z0.real for p, c in bound)
        if m.lam == 0:
            rr = (m.form.h * self.raw.r * self.raw.r.reflect())
            return float(n + rr.integral().real), float(e + rr.times_poly([0.0, 1.0]).integral().real)
        dens = lambda E: abs(self.spectral_amplitude(E)) ** 2  # noqa: E731
        peaks = sorted({p.z0.real for p in self.poles if p.z0.real > 0})
        pts = [0.0] + [x for x in peaks] + [2 * max(peaks + [1.0])]
        n_c, e_c = 0.0, 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            n_c += integrate.quad(dens, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
            e_c += integrate.quad(lambda E: E * dens(E), lo, hi, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
        n_c += integrate.quad(dens, pts[-1], np.inf, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
        e_c += integrate.quad(lambda E: E * dens(E), pts[-1], np.inf, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
        return float(n + n_c), float(e + e_c)


def default_probes():
    """Three probes with poles away from the deformation strip."""
    return (
        RawState.make(1.0, [1.0]),
        RawState.make(0.0, [1.0], [(-1.0, 1)]),
        RawState.make(0.5, [0.0, 1.0], [(-2.0, 3)]),
    )


def _sample(model, raw, poles, contour, t_max, order):
    z, w = contour.nodes(t_max=t_max, order=order)
    h = model.form.h(z)
    if model.lam == 0:
        beta = raw.r(z)
    else:
        beta = state_factor(model, raw, z, sheet=1)
    return z, w, h * beta * w


def expand_in_gamow(raw: RawState, res: ResonanceData | Sequence[ResonanceData] | None = None,
                    contour: Contour | None = None, model: FriedrichsModel | None = None,
                    t_max: float | None = None, probes=None, tol: float = RECON_TOL,
                    max_order: int = 128) -> GamowState:
    """Pole + background expansion of a rational-family state.

    Pole coefficients are residues of the continued resolvent; the
    background integrand is sampled on the contour.  Quadrature order is
    doubled until three probes reconstruct their direct inner products
    within ``tol``.
    """
    if not isinstance(raw, RawState):
        raise ContinuationError("amplitude must be a RawState from the rational family")
    if res is None:
        if model is None:
            raise StateError("need a model or resonance data")
        res = find_pole(model)
    poles = (res,) if isinstance(res, ResonanceData) else tuple(res)
    model = poles[0].model
    if contour is None:
        contour = background_contour(model, poles)
    _check_strip(model, contour, raw.r, "state amplitude")
    if t_max is None:
        g = max([p.gamma for p in poles] + [0.0])
        t_max = 20.0 / g if g > 0 else 0.0
    coeffs = np.array([_pole_ket(model, raw, p) for p in poles], dtype=complex)
    probes = default_probes() if probes is None else probes
    for pr in probes:
        _check_strip(model, contour, pr.r.reflect(), "probe")
    order = 16
    while True:
        z, w, bg = _sample(model, raw, poles, contour, t_max, order)
        st = GamowState(model, raw, poles, coeffs, contour, z, w, bg, 0.0, t_max, order)
        resid = max(abs(st.pair(pr) - inner(model, pr, raw)) for pr in probes)
        if resid < tol or order >= max_order:
            break
        order *= 2
    if resid >= tol:
        raise ToleranceError("background reconstruction did not converge", achieved=resid)
    return st


def evolve_pure(state: GamowState, t: float) -> GamowState:
    """Forward evolution by t >= 0."""
    if t < 0:
        raise DomainError("evolution is defined only for t >= 0")
    if t == 0:
        return state
    ph = np.exp(-1j * np.array([p.z0 for p in state.poles]) * t)
    return replace(state, coeffs=state.coeffs * ph,
                   background=state.background * np.exp(-1j * state.nodes * t),
                   time=state.time + t)


def survival_probability(state: GamowState, ts):
    """(p, p_pole, p_background) for <psi(0)|psi(t)>.

    p = |A_pole + A_bg|^2; the two partial curves are |A_pole|^2 and
    |A_bg|^2, so p differs from their sum by the interference term.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0):
        raise DomainError("survival is defined only for t >= 0")
    probe = state.raw
    bra = np.array([_pole_bra(state.model, probe, p) for p in state.poles])
    phi = probe.r.reflect()(state.nodes) if state.model.lam == 0 else \
        probe_factor(state.model, probe, state.nodes, sheet=2)
    z0 = np.array([p.z0 for p in state.poles])
    ap = np.exp(-1j * np.outer(ts, z0)) @ (bra * state.coeffs)
    ab = np.exp(-1j * np.outer(ts, state.nodes)) @ (phi * state.background)
    norm0 = inner(state.model, probe, probe)
    ap, ab = ap / norm0, ab / norm0
    return np.abs(ap + ab) ** 2, np.abs(ap) ** 2, np.abs(ab) ** 2


def survival_amplitude(state: GamowState, ts):
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    bra = np.array([_pole_bra(state.model, state.raw, p) for p in state.poles])
    phi = state.raw.r.reflect()(state.nodes) if state.model.lam == 0 else \
        probe_factor(state.model, state.raw, state.nodes, sheet=2)
    z0 = np.array([p.z0 for p in state.poles])
    ap = np.exp(-1j * np.outer(ts, z0)) @ (bra * state.coeffs)
    ab = np.exp(-1j * np.outer(ts, state.nodes)) @ (phi * state.background)
    return ap, ab


def loglog_slope(ts, y):
    """Least-squares slope of log y against log t."""
    return float(np.polyfit(np.log(np.asarray(ts)), np.log(np.asarray(y)), 1)[0])


def khalfin_onset(ts, p, p_pole):
    """Start of the final monotone rise of |p - p_pole| / p_pole.

    Returns (t*, deviation curve).  t* is the first sample after which the
    relative deviation never decreases again; nan if it is not rising at the
    end of the grid.
    """
    ts = np.asarray(ts, dtype=float)
    dev = np.abs(np.asarray(p) - np.asarray(p_pole)) / np.asarray(p_pole)
    up = np.diff(dev) > 0
    if not up.size or not up[-1]:
        return float("nan"), dev
    k = up.size
    while k > 0 and up[k - 1]:
        k -= 1
    return float(ts[k]), dev


# ---------------------------------------------------------------------------
# biorthonormality and ghost norms

def biorthonormality(res: ResonanceData) -> complex:
    """<f~_0|f_0> = N0 (1 + lam^2 int_C f^2(w)/(z0 - w)^2 dw) on the pole's sheet.

    The integral is the derivative of the self energy, taken in closed form
    on the continued sheet (the contour C passes below z0).
    """
    m = res.model
    if m.lam == 0:
        return complex(res.N0)
    h = m.form.h
    # d/dz J(z) = -int f^2/(z-w)^2, continued
    dJ = _cauchy_derivative(h, res.z0, res.sheet)
    return complex(res.N0 * (1.0 - m.lam**2 * dJ))


def _cauchy_derivative(h: Rational, z, sheet):
    """dJ/dz from partial fractions of J: exact derivative of the closed form."""
    z = complex(z)
    out = 0j
    for q, amps in h.partial_fractions:
        u = z - q
        L = np.log(-z) - np.log(-q)
        for m, a in enumerate(amps, start=1):
            # d/dz [L/u^m + sum_k (-q)^{1-k}/((k-1) u^{m-k+1})]
            term = (1.0 / z) / u**m - m * L / u ** (m + 1)
            for k in range(2, m + 1):
                term += -(m - k + 1) * (-q) ** (1 - k) / ((k - 1) * u ** (m - k + 2))
            out += a * term
    if sheet == 2:
        out -= 2j * np.pi * complex(h.derivative(z))
    return out


def ghost_self_norm_quadrature(z0: complex, n: int = 4001) -> complex:
    """Bilinear self-pairing of the Cauchy kernel (i/2pi)/(w - z0) over the real line.

    Quadrature on w = Re z0 + |Im z0| tan(theta) with the periodic midpoint
    rule, which is spectrally accurate for this periodic integrand.  The exact
    value is 0 for any non-real z0.
    """
    z0 = complex(z0)
    if z0.imag == 0:
        return 1.0 + 0j
    th = -np.pi / 2 + (np.arange(n) + 0.5) * np.pi / n
    s = abs(z0.imag)
    w = z0.real + s * np.tan(th)
    jac = s / np.cos(th) ** 2
    k = (1j / (2 * np.pi)) / (w - z0)
    return complex(np.sum(k * k * jac) * np.pi / n)
