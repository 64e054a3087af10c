"""Friedrichs model: discrete level(s) coupled to the half-line continuum.

H = sum_n w_n |n><n| + int w |w><w| dw + lam sum_n int f(w) (|n><w| + |w><n|) dw

The dispersion function of a single level is

    eta(z) = z - w0 - lam^2 int_0^inf f^2(w) / (z - w) dw

and its continuation through the cut from above is
eta_II(z) = eta(z) + 2 pi i lam^2 f^2(z).  Resonances are zeros of eta_II in
the lower half-plane.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import (
    ContourError,
    CutError,
    ModelViolationError,
    PoleSearchError,
    SingularityError,
    ToleranceError,
)
from .rational import Rational

POLE_TOL = 1e-12
QUAD_RTOL = 1e-10
CLEARANCE = 1.5
FAMILIES = ("lorentzian", "rational")


@dataclass(frozen=True)
class FormFactor:
    """Squared form factor f^2 from a small analytic family.

    ``lorentzian``: params ``[a]`` gives f^2 = w / (w^2 + a^2)^2.

    ``rational``: params ``[c, n_p, p_0..p_{n_p-1}, Re s_1, Im s_1, m_1, ...]``
    gives f^2 = c w p(w) / prod_k |w - s_k|^{2 m_k}, with each s_k listed in the
    lower half-plane (its conjugate is added automatically).
    """

    family: str = "lorentzian"
    params: tuple = (1.0,)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown form-factor family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        h = self.h
        if h.degree_gap < 2:
            raise ValueError("form factor must decay at least like 1/w")
        for s in h.pole_values():
            if abs(s.imag) < 1e-12:
                raise ValueError("form-factor singularity on the real axis")
        w = np.linspace(0.0, 50.0, 2001)
        if np.any(self(w) < -1e-14):
            raise ValueError("f^2 must be non-negative on [0, inf)")

    @property
    def h(self) -> Rational:
        if self.family == "lorentzian":
            a = self.params[0] if self.params else 1.0
            return Rational.make([0.0, 1.0], [(1j * a, 2), (-1j * a, 2)])
        c, npoly = self.params[0], int(self.params[1])
        pcoef = np.asarray(self.params[2 : 2 + npoly])
        rest = self.params[2 + npoly :]
        poles = []
        for k in range(0, len(rest), 3):
            s = complex(rest[k], -abs(rest[k + 1]))
            m = int(rest[k + 2])
            poles += [(s, m), (s.conjugate(), m)]
        num = c * np.polynomial.polynomial.polymul([0.0, 1.0], pcoef)
        return Rational.make(num, poles)

    @property
    def singularities(self) -> np.ndarray:
        """Listed singularities of the continuation (both half-planes)."""
        return self.h.pole_values()

    def __call__(self, w):
        """f^2 on the real axis."""
        return np.real(self.h(np.asarray(w, dtype=float)))

    def continued(self, z):
        """Closed-form continuation f^2(z)."""
        z = np.asarray(z, dtype=complex)
        for s in self.singularities:
            if np.any(np.abs(z - s) < 1e-14):
                raise SingularityError(f"f^2 is singular at {s}")
        return self.h(z)

    def amplitude(self, w):
        """f(w) = sqrt(f^2(w)) on the real axis."""
        return np.sqrt(np.maximum(self(w), 0.0))


@dataclass(frozen=True)
class FriedrichsModel:
    omegas: tuple
    lam: float
    form: FormFactor = field(default_factory=FormFactor)
    omega_max: float | None = None

    def __post_init__(self):
        om = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        if np.any(om < 0):
            raise ValueError("discrete energies must be >= 0")
        if len(set(om.tolist())) != len(om):
            raise ValueError("discrete energies must be distinct")
        object.__setattr__(self, "omegas", tuple(om.tolist()))
        object.__setattr__(self, "lam", float(self.lam))
        omax = self.omega_max
        if omax is None:
            omax = 20.0 * max(max(om), 1e-3)
        if omax <= 10.0 * max(om):
            raise ValueError("omega_max must exceed 10 * max(omega_n)")
        object.__setattr__(self, "omega_max", float(omax))

    @classmethod
    def single(cls, omega0=1.0, lam=0.1, form=None, omega_max=None):
        return cls((omega0,), lam, form or FormFactor(), omega_max)

    @property
    def omega0(self) -> float:
        return self.omegas[0]

    @property
    def nlevels(self) -> int:
        return len(self.omegas)

    def with_(self, **kw):
        d = dict(omegas=self.omegas, lam=self.lam, form=self.form, omega_max=self.omega_max)
        d.update(kw)
        return FriedrichsModel(**d)

    # fast closed-form self energy, used internally
    def self_energy(self, z, sheet=1):
        """lam^2 J(z) with J the half-line Cauchy transform of f^2."""
        return self.lam**2 * self.form.h.cauchy(z, sheet=sheet)

    def dispersion(self, z, sheet=1):
        """Closed-form dispersion: eta for one level, det of the eta matrix otherwise.

        All levels share one form factor, so the eta matrix is
        diag(z - w_n) - lam^2 J(z) * ones.
        """
        z = np.asarray(z, dtype=complex)
        sig = self.self_energy(z, sheet)
        if self.nlevels == 1:
            return z - self.omega0 - sig
        d = np.ones_like(z)
        acc = np.zeros_like(z)
        for w in self.omegas:
            d = d * (z - w)
            acc = acc + 1.0 / (z - w)
        return d * (1.0 - sig * acc)


def _check_quad(caught, err, val):
    bad = [w for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    if bad or err > max(QUAD_RTOL * abs(val), 1e-14) * 10:
        raise ToleranceError("eta quadrature did not converge", achieved=err)


def _cauchy_quad(f2, z, df2=None):
    """int_0^inf f2(w)/(z-w) dw by adaptive quadrature split at Re z.

    Near the axis the first-order Taylor polynomial of f2 at Re z is
    subtracted on [0, 2 Re z] and integrated in closed form, so the
    integrand left for quad is smooth.
    """
    x = z.real
    kw = dict(complex_func=True, epsrel=QUAD_RTOL, epsabs=1e-14, limit=400, full_output=False)
    total, err = 0j, 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if x <= 0:
            v, e = integrate.quad(lambda w: f2(w) / (z - w), 0.0, np.inf, **kw)
            total += v
            err += abs(e)
        else:
            f2x = f2(x)
            d1 = df2(x) if df2 is not None else 0.0
            for a, b in ((0.0, x), (x, 2 * x)):
                v, e = integrate.quad(lambda w: (f2(w) - f2x - d1 * (w - x)) / (z - w), a, b, **kw)
                total += v
                err += abs(e)
            v, e = integrate.quad(lambda w: f2(w) / (z - w), 2 * x, np.inf, **kw)
            lg = np.log(z) - np.log(z - 2 * x)
            total += v + f2x * lg + d1 * (-2 * x + (z - x) * lg)
            err += abs(e)
    _check_quad(caught, err, total)
    return total


def eta_first_sheet(model: FriedrichsModel, z: complex, level: int = 0) -> complex:
    """Physical-sheet dispersion function by adaptive quadrature."""
    z = complex(z)
    if z.imag == 0 and z.real >= 0:
        raise CutError(f"z = {z} lies on the cut [0, inf)")
    w0 = model.omegas[level]
    if model.lam == 0:
        return z - w0
    h = model.form.h
    f2 = lambda w: float(model.form(w))  # noqa: E731
    df2 = lambda w: float(np.real(h.derivative(w)))  # noqa: E731
    return z - w0 - model.lam**2 * _cauchy_quad(f2, z, df2)


def eta_second_sheet(model: FriedrichsModel, z: complex, level: int = 0) -> complex:
    """Continuation of the upper boundary value into the lower half-plane."""
    z = complex(z)
    if z.imag >= 0:
        raise ValueError("second sheet is reached from the lower half-plane")
    w0 = model.omegas[level]
    if model.lam == 0:
        return z - w0
    f2z = complex(model.form.continued(z))
    return eta_first_sheet(model, z, level) + 2j * np.pi * model.lam**2 * f2z


def _cderiv(fn, z, h=1e-3):
    """Four-point complex-step derivative (error O(h^4))."""
    ks = np.arange(4)
    pts = z + h * 1j**ks
    return complex(np.sum(fn(pts) * (1j ** (-ks))) / (4 * h))


@dataclass(frozen=True)
class ResonanceData:
    model: FriedrichsModel
    z0: complex
    N0: complex
    bound: bool = False
    residual: float = 0.0
    iterations: int = 0
    level: int = 0

    @property
    def gamma(self) -> float:
        return 0.0 if self.bound else -2.0 * self.z0.imag

    @property
    def sheet(self) -> int:
        return 1 if self.bound else 2

    def eta_I(self, z):
        return self.model.dispersion(z, sheet=1)

    def eta_II(self, z):
        return self.model.dispersion(z, sheet=2)


def _golden_seed(model, level=0):
    w0 = model.omegas[level]
    return w0 - 1j * np.pi * model.lam**2 * float(model.form(w0))


def _sheet_fn(model, sheet):
    return lambda z: model.dispersion(z, sheet=sheet)


def find_pole(model: FriedrichsModel, seed: complex | None = None, level: int = 0,
              maxiter: int = 100, tol: float = POLE_TOL) -> ResonanceData:
    """Complex Newton on the continued dispersion function.

    A real seed searches for a bound state on the physical sheet.  For
    several levels the determinant of the eta matrix is used and N0 is the
    residue of the resolvent entry of ``level``.
    """
    w0 = model.omegas[level]
    if model.lam == 0:
        return ResonanceData(model, complex(w0), 1.0 + 0j, bound=True, level=level)
    z = _golden_seed(model, level) if seed is None else complex(seed)
    if z.imag > 0:
        raise ValueError("seed must lie in the closed lower half-plane")
    real_search = z.imag == 0
    sheet = 1 if real_search else 2
    fn = _sheet_fn(model, sheet)
    trace = [z]
    val = complex(fn(z))
    for it in range(1, maxiter + 1):
        d = _cderiv(fn, z, h=min(1e-3, 0.25 * max(abs(z.imag), 1e-6)) if sheet == 2 else 1e-3)
        if d == 0:
            break
        z = z - val / d
        if real_search:
            z = complex(z.real, 0.0)
            if z.real >= 0:
                raise PoleSearchError("bound-state search entered the continuum", trace)
        elif z.imag > 0:
            # wandered above the axis; iterate on the physical sheet there
            if abs(complex(_sheet_fn(model, 1)(z))) < tol:
                raise ModelViolationError(f"pole at {z} in the upper half-plane")
        trace.append(z)
        val = complex(fn(z))
        if abs(val) < tol:
            break
    else:
        raise PoleSearchError(f"no convergence in {maxiter} iterations", trace)
    if abs(val) >= tol:
        raise PoleSearchError("Newton stalled", trace)
    if z.imag > 0:
        raise ModelViolationError(f"pole at {z} in the upper half-plane")
    bound = real_search or abs(z.imag) < 1e-14
    if bound and not real_search:
        z = complex(z.real, 0.0)
        sheet = 1
        fn = _sheet_fn(model, 1)
    if model.nlevels == 1:
        N0 = 1.0 / _cderiv(fn, z, h=1e-3 if bound else min(1e-3, 0.25 * abs(z.imag)))
    else:
        N0 = _multilevel_residue(model, z, level, sheet)
    return ResonanceData(model, z, complex(N0), bound=bound, residual=abs(val),
                         iterations=len(trace) - 1, level=level)


def _multilevel_residue(model, z0, level, sheet):
    """Residue of the resolvent entry G_nn = cofactor / det at z0."""
    def cof(z):
        sig = model.self_energy(z, sheet)
        d = np.ones_like(z)
        acc = np.zeros_like(z)
        for k, w in enumerate(model.omegas):
            if k == level:
                continue
            d = d * (z - w)
            acc = acc + 1.0 / (z - w)
        return d * (1.0 - sig * acc)

    h = 1e-3 if sheet == 1 else min(1e-3, 0.25 * abs(z0.imag))
    return complex(cof(np.asarray(z0))) / _cderiv(_sheet_fn(model, sheet), z0, h=h)


# ---------------------------------------------------------------------------
# background contour

_GL_CACHE: dict = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _graded_panels(levels=24, ratio=0.5, both=True):
    """Panel edges on [0, 1] refined geometrically toward the ends."""
    if both:
        left = [0.5 * ratio**k for k in range(levels)][::-1]
        edges = [0.0] + left + [1.0 - e for e in left[::-1]] + [1.0]
    else:
        edges = [0.0] + [ratio**k for k in range(levels)][::-1]
    return np.unique(np.asarray(edges))


@dataclass(frozen=True)
class Contour:
    """Piecewise-linear path from 0 under the poles, closed by a vertical ray.

    The ray runs from the last waypoint straight down to -i inf; along it
    e^{-izt} decays for t > 0, which replaces the oscillatory real-axis tail.
    """

    waypoints: tuple
    ray: bool = True
    clearance: float = 0.0
    obstacles: tuple = ()

    @property
    def depth(self) -> float:
        return min(w.imag for w in self.waypoints)

    def segments(self):
        w = self.waypoints
        return [(w[k], w[k + 1]) for k in range(len(w) - 1)]

    def nodes(self, t_max: float = 0.0, order: int = 16, levels: int = 24):
        """Quadrature nodes z and complex weights dz along the contour.

        Each straight segment is split into panels graded toward both ends;
        the panel count grows with the number of oscillations of e^{-izt}
        at t_max.
        """
        xg, wg = _gl(order)
        zs, ws = [], []
        base = _graded_panels(levels)
        for a, b in self.segments():
            L = abs(b - a)
            if L == 0:
                continue
            ymax = max(a.imag, b.imag)
            osc = L * t_max / (2 * np.pi)
            edges = base
            if osc > 1 and ymax * t_max > -45:
                # split every panel so it holds at most ~order/16 periods
                sub = np.ceil(np.diff(base) * osc * 16 / order).astype(int)
                edges = np.unique(np.concatenate(
                    [np.linspace(a0, b0, k + 1) for a0, b0, k in zip(base[:-1], base[1:], np.maximum(sub, 1))]))
            lo, hi = edges[:-1], edges[1:]
            s = (0.5 * (hi - lo))[:, None] * xg[None, :] + (0.5 * (hi + lo))[:, None]
            wt = (0.5 * (hi - lo))[:, None] * wg[None, :]
            zs.append(a + (b - a) * s.ravel())
            ws.append((b - a) * wt.ravel())
        if self.ray:
            # z = c - i s, s = tan(pi u / 2), u in [0, 1)
            c = self.waypoints[-1]
            edges = _graded_panels(levels, both=False)
            edges = np.unique(np.concatenate([edges, 1.0 - _graded_panels(levels, both=False)]))
            lo, hi = edges[:-1], edges[1:]
            u = ((0.5 * (hi - lo))[:, None] * xg[None, :] + (0.5 * (hi + lo))[:, None]).ravel()
            wu = ((0.5 * (hi - lo))[:, None] * wg[None, :]).ravel()
            sv = np.tan(0.5 * np.pi * u)
            ds = 0.5 * np.pi / np.cos(0.5 * np.pi * u) ** 2
            zs.append(c - 1j * sv)
            ws.append(-1j * ds * wu)
        return np.concatenate(zs), np.concatenate(ws)


def background_contour(model: FriedrichsModel, poles: Sequence[ResonanceData]) -> Contour:
    """Contour from 0 that dips below every resonance and returns at omega_max."""
    omax = model.omega_max
    res = [p for p in poles if not p.bound and p.z0.imag < 0]
    if model.lam == 0 or not res:
        return Contour((0j, complex(omax)), ray=True)
    depth = CLEARANCE * min(p.z0.imag for p in res)
    sing = [s for s in model.form.singularities if s.imag < 0 and 0 <= s.real <= omax]
    sing += [s for s in model.form.singularities if s.imag < 0 and abs(s) < 2 * omax]
    sing = list(dict.fromkeys(sing))
    for s in sing:
        depth = max(depth, 0.5 * s.imag)
    for p in res:
        if p.z0.imag <= depth:
            blocker = min(sing, key=lambda s: s.imag, default=None)
            raise ContourError(f"singularity {blocker} prevents passing below pole {p.z0}")
    xs = sorted({p.z0.real for p in res})
    way = [0j]
    for x in xs:
        for c in (0.5 * x, x, 1.5 * x):
            if 0 < c < omax and (way[-1].real < c):
                way.append(complex(c, depth))
    way.append(complex(omax, depth))
    gap = min([abs(p.z0.imag - depth) for p in res] + [abs(s.imag - depth) for s in sing])
    return Contour(tuple(way), ray=True, clearance=float(gap), obstacles=tuple(sing))
