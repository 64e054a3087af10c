"""Experiment runner.

Config grammar (one entry per line)::

    config  := { line }
    line    := blank | comment | section | entry
    comment := "#" text
    section := "[" name "]"          prefixes later keys with "name."
    entry   := key "=" value          key is dotted, value is a scalar or a
                                      comma-separated list

Keys (defaults in parentheses):

    experiment                 poles | survival | decoherence | lyapunov |
                               entropy | wigner | thermal | oracle-compare
    model.omega0               bare level (1.0); model.omegas for several
    model.lambda               coupling (0.1)
    model.formfactor.family    lorentzian | rational (lorentzian)
    model.formfactor.params    list (1.0)
    model.omega_max            continuum cutoff (20 * max level)
    numeric.N                  oracle size (2000)
    numeric.points             samples on the t axis (200)
    numeric.t_max              in units of 1/gamma (experiment default)
    numeric.beta               inverse temperature (1.0)
    numeric.tol                invariant tolerance (1e-8)
    numeric.rho0               entropy: stable weight (0.6)
    numeric.coherence          entropy: ghost coherence (0.1)
    numeric.grid               wigner: position nodes (64)
    numeric.length             wigner: box length (16.0)
    numeric.seed               seed for randomized probes (0)
    numeric.workers            sweep pool size (1)
    output.dir                 output directory (out)

Exit codes: 0 ok, 1 invariant failure, 2 config error, 3 numeric error.
The GAMOW_OUT environment variable overrides the output root.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import entropy as ent
from . import liouville as lv
from . import oracle as orc
from . import spectral as sp
from . import thermal as th
from . import wigner as wg
from .errors import ConfigError, GamowError, InvariantError
from .friedrichs import FormFactor, FriedrichsModel, find_pole

EXPERIMENTS = ("poles", "survival", "decoherence", "lyapunov", "entropy", "wigner", "thermal", "oracle-compare")
DEFAULTS = {
    "experiment": None,
    "model.omega0": 1.0,
    "model.omegas": None,
    "model.lambda": 0.1,
    "model.formfactor.family": "lorentzian",
    "model.formfactor.params": [1.0],
    "model.omega_max": None,
    "numeric.N": 2000,
    "numeric.points": 200,
    "numeric.t_max": None,
    "numeric.beta": 1.0,
    "numeric.tol": 1e-8,
    "numeric.rho0": 0.6,
    "numeric.coherence": 0.1,
    "numeric.grid": 64,
    "numeric.length": 16.0,
    "numeric.seed": 0,
    "numeric.workers": 1,
    "output.dir": "out",
}
SWEEPABLE = {"lambda": "model.lambda", "omega0": "model.omega0", "beta": "numeric.beta", "N": "numeric.N"}
INTS = {"numeric.N", "numeric.points", "numeric.grid", "numeric.seed", "numeric.workers"}
LISTS = {"model.omegas", "model.formfactor.params"}
STRINGS = {"experiment", "model.formfactor.family", "output.dir"}


# ---------------------------------------------------------------------------
# config

def _scalar(key, text):
    if key in STRINGS:
        return text
    try:
        if key in LISTS:
            return [float(x) for x in text.split(",") if x.strip()]
        if key in INTS:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def parse_config(text: str) -> dict:
    cfg = dict(DEFAULTS)
    prefix = ""
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            prefix = line[1:-1].strip() + "."
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        key = prefix + k if prefix and not k.startswith(prefix) else k
        if key not in DEFAULTS:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        cfg[key] = _scalar(key, v)
    return validate(cfg)


def validate(cfg: dict) -> dict:
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    if cfg["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    if cfg["numeric.tol"] <= 0:
        raise ConfigError("tolerances must be > 0")
    for k in ("numeric.N", "numeric.points", "numeric.grid", "numeric.workers"):
        if cfg[k] <= 0:
            raise ConfigError(f"{k} must be positive")
    return cfg


def load_config(path: str) -> dict:
    """Config file, or a manifest.json from an earlier run."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    if path.endswith(".json"):
        try:
            cfg = json.loads(text)["config"]
        except (ValueError, KeyError):
            raise ConfigError(f"{path} is not a manifest") from None
        return validate({**DEFAULTS, **cfg})
    return parse_config(text)


def build_model(cfg: dict) -> FriedrichsModel:
    om = cfg["model.omegas"] or [cfg["model.omega0"]]
    try:
        form = FormFactor(cfg["model.formfactor.family"], tuple(cfg["model.formfactor.params"]))
        return FriedrichsModel(tuple(om), cfg["model.lambda"], form, cfg["model.omega_max"])
    except ValueError as e:
        raise ConfigError(str(e)) from None


# ---------------------------------------------------------------------------
# results

@dataclass
class Result:
    columns: list
    rows: list
    headline: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    plot: str = ""

    def check(self, name, ok, value, limit):
        self.checks[name] = {"passed": bool(ok), "value": _num(value), "limit": _num(limit)}


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(np.real(x)), float(np.imag(x))]
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def _fmt(x):
    if isinstance(x, str):
        return x
    return repr(float(x))


def _csv(columns, rows) -> str:
    out = [",".join(columns)]
    out += [",".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(out) + "\n"


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _plot_script(res: Result, title: str) -> str:
    if res.plot:
        return res.plot
    x = res.columns[0]
    lines = [f'set datafile separator ","', f'set title "{title}"', f'set xlabel "{x}"', "set key autotitle columnhead"]
    series = [f"'results.csv' using 1:{k + 1} with lines" for k in range(1, len(res.columns))]
    lines.append("plot " + ", \\\n     ".join(series))
    return "\n".join(lines) + "\n"


def _tgrid(cfg, gamma, default):
    tm = cfg["numeric.t_max"] if cfg["numeric.t_max"] is not None else default
    scale = 1.0 / gamma if gamma > 0 else 1.0
    return np.linspace(0.0, tm * scale, cfg["numeric.points"])


def _single(model):
    if model.nlevels != 1:
        raise ConfigError("this experiment needs a single discrete level")


def _fit(ts, p, lo, hi):
    m = (ts >= lo) & (ts <= hi) & (p > 0)
    return orc.fit_rate(ts[m], p[m]) if m.sum() > 2 else float("nan")


# ---------------------------------------------------------------------------
# experiments

def exp_poles(cfg, model, use_oracle):
    rows, res = [], Result(["level", "re_z0", "im_z0", "gamma", "golden_rule", "residual"], [])
    for n in range(model.nlevels):
        p = find_pole(model, level=n)
        gr = 2 * np.pi * model.lam**2 * float(model.form(model.omegas[n]))
        rows.append([n, p.z0.real, p.z0.imag, p.gamma, gr, p.residual])
        res.headline[f"z0_{n}"] = _num(p.z0)
        res.headline[f"gamma_{n}"] = p.gamma
        res.check(f"lower_half_plane_{n}", p.z0.imag <= 0, p.z0.imag, 0.0)
    res.headline["gamma"] = rows[0][3]
    if model.lam > 0:
        res.headline["gamma_over_lambda2"] = rows[0][3] / model.lam**2
    res.rows = rows
    return res


def _expanded(model):
    _single(model)
    pole = find_pole(model)
    raw = sp.RawState.make(1.0)
    return pole, sp.expand_in_gamow(raw, pole, t_max=40.0 / pole.gamma if pole.gamma > 0 else 0.0)


def exp_survival(cfg, model, use_oracle):
    pole, st = _expanded(model)
    g = pole.gamma
    ts = _tgrid(cfg, g, 15.0)
    p, pp, pb = sp.survival_probability(st, ts)
    cols, data = ["t", "p", "p_pole", "p_background"], [ts, p, pp, pb]
    if use_oracle:
        H = orc.discretize(model, cfg["numeric.N"])
        po = orc.survival(H, H.state(0), ts)
        cols.append("p_oracle")
        data.append(po)
    res = Result(cols, [list(r) for r in zip(*data)])
    res.headline["gamma"] = g
    if g > 0:
        res.headline["gamma_fit"] = _fit(ts, p, 5 / g, 15 / g)
    res.check("p0_is_one", abs(p[0] - 1) < 1e-6, abs(p[0] - 1), 1e-6)
    res.check("p_in_unit_interval", np.all((p > -1e-9) & (p < 1 + 1e-6)), float(np.max(p)), 1.0)
    return res


def exp_oracle_compare(cfg, model, use_oracle):
    pole, st = _expanded(model)
    g = pole.gamma
    ts = _tgrid(cfg, g, 10.0)
    p = sp.survival_probability(st, ts)[0]
    H = orc.discretize(model, cfg["numeric.N"])
    po = orc.survival(H, H.state(0), ts)
    err = np.abs(p - po)
    res = Result(["t", "p_spectral", "p_oracle", "abs_error"], [list(r) for r in zip(ts, p, po, err)])
    res.headline.update(gamma=g, max_error=float(err.max()), N=cfg["numeric.N"])
    res.check("recurrence_beyond_window", H.recurrence_time > ts[-1], H.recurrence_time, ts[-1])
    return res


def _pure_liouville(model):
    pole, st = _expanded(model)
    return pole, st, lv.from_pure(st)


def exp_decoherence(cfg, model, use_oracle):
    pole, st, rho = _pure_liouville(model)
    g = pole.gamma
    ts = _tgrid(cfg, g, 20.0)
    keys = sorted(k for k in rho.coeffs if rho._ghosty(k))
    mods = np.array([[abs(lv.evolve(rho, t).coeffs[k]) for k in keys] for t in ts])
    D = lv.decoherence_profile(rho, ts)
    cols = ["t", "D"] + [f"abs_rho_{i}{j}" for i, j in keys]
    data = [ts, D] + list(mods.T)
    res = Result(cols, [])
    for n, (i, j) in enumerate(keys):
        want = 0.5 * (rho.labels[i].gamma + rho.labels[j].gamma)
        if want > 0:
            got = _fit(ts, mods[:, n] ** 2, ts[1], ts[-1]) / 2
            res.headline[f"rate_{i}{j}"] = got
            res.check(f"rate_{i}{j}", abs(got / want - 1) < 0.01, got / want - 1, 0.01)
    if use_oracle:
        H = orc.discretize(model, cfg["numeric.N"])
        gap = np.abs(orc.survival(H, H.state(0), ts))  # <A> at equilibrium is 0 for A = |1><1|
        cols.append("oracle_gap")
        data.append(gap)
        t20 = min(20 / g if g > 0 else ts[-1], ts[-1])
        res.check("oracle_recurrence", 0.5 * H.recurrence_time > t20, 0.5 * H.recurrence_time, t20)
        late = gap[(ts >= t20 - 1e-12) & (ts < 0.5 * H.recurrence_time)]
        if late.size:
            res.check("probe_gap", late.max() < 1e-3, late.max(), 1e-3)
    res.columns = cols
    res.rows = [list(r) for r in zip(*data)]
    res.headline["gamma"] = g
    return res


def exp_lyapunov(cfg, model, use_oracle):
    pole, st, rho = _pure_liouville(model)
    g = pole.gamma
    ts = _tgrid(cfg, g, 10.0)
    Y, Yd, YG = lv.lyapunov_Y(rho, ts)
    Hop = lv.hamiltonian(rho)
    tr = np.array([lv.generalized_trace(lv.evolve(rho, t)).real for t in ts])
    en = np.array([lv.expectation(lv.evolve(rho, t), Hop) for t in ts])
    res = Result(["t", "Y", "Ydot", "Y_G", "trace", "energy"], [list(r) for r in zip(ts, Y, Yd, YG, tr, en)])
    tol = cfg["numeric.tol"]
    res.check("trace_conserved", np.ptp(tr) < 1e-10 and abs(tr[0] - 1) < 1e-10, max(np.ptp(tr), abs(tr[0] - 1)), 1e-10)
    res.check("energy_conserved", np.ptp(en) < tol, np.ptp(en), tol)
    if g > 0:
        res.check("Y_increasing", np.all(Yd > 0), float(Yd.min()), 0.0)
        res.check("Y_G_increasing", np.all(np.diff(YG) > 0), float(np.diff(YG).min()), 0.0)
    res.headline.update(gamma=g, energy=float(en[0]))
    return res


def _entropy_state(cfg, model):
    """Stable reference level plus every resonance of the model."""
    labels = [lv.Label(0j, False, "stable")]
    for n in range(model.nlevels):
        labels.append(lv.Label(complex(find_pole(model, level=n).z0), True, f"z{n}"))
    r0, c = cfg["numeric.rho0"], cfg["numeric.coherence"]
    co = {(0, 0): r0}
    for n in range(1, len(labels)):
        co[(n, 0)] = c
        co[(0, n)] = np.conj(c)
        co[(n, n)] = abs(c) ** 2 / r0
    return lv.pole_state(labels, co)


def exp_entropy(cfg, model, use_oracle):
    if model.lam == 0:
        raise ConfigError("entropy needs resonances (lambda > 0)")
    rho = _entropy_state(cfg, model)
    g = min(-rho.zeta(*k).imag for k in ent.ghost_keys(rho))
    ts = _tgrid(cfg, g, 10.0)
    P = ent.projector_for(rho, "identity")
    S, B = ent.conditional_entropy(rho, P, ts)
    S0 = ent.conditional_entropy(rho, None, ts)[0]
    S1 = ent.conditional_entropy(rho, ent.projector_for(rho, "slowest"), ts)[0]
    res = Result(["t", "S", "next_order_bound", "S_naive", "S_slowest"], [list(r) for r in zip(ts, S, B, S0, S1)])
    win = (ts >= 3 / g) & (ts <= 10 / g)
    res.check("S_nonpositive", np.all(S <= 0), float(S.max()), 0.0)
    res.check("S_nondecreasing", np.all(np.diff(S) >= -1e-15), float(np.diff(S).min()), 0.0)
    res.check("naive_zero", np.all(S0 == 0), float(np.abs(S0).max()), 0.0)
    res.headline["gamma_min"] = g
    if win.sum() > 2 and np.all(S[win] < 0):
        k = ent.decay_exponent(ts[win], S[win])
        res.headline["entropy_slope"] = k
        res.check("exponent_2gamma_min", abs(k / (2 * g) - 1) < 0.02, k / (2 * g), 1.0)
        k1 = ent.decay_exponent(ts[win], S1[win])
        res.check("projectors_agree", abs(k1 / k - 1) < 0.02, k1 / k, 1.0)
    return res


def exp_wigner(cfg, model, use_oracle):
    n, L = cfg["numeric.grid"], cfg["numeric.length"]
    grid = wg.PositionGrid.centered(n, L)
    third = L / 6
    rho = wg.localized_mixture(grid, [(-third, 0.0), (0.0, 1.0), (third, -1.0)], [0.5, 0.3, 0.2])
    W = wg.wigner_transform(rho, grid)
    res = Result(["q"] + [f"p={p!r}" for p in grid.momenta.tolist()], [])
    res.rows = [[q] + list(row) for q, row in zip(grid.fine, W.values)]
    res.check("norm", abs(W.integral() - 1) < 1e-8, abs(W.integral() - 1), 1e-8)
    res.check("positivity", W.values.min() > -1e-6, float(W.values.min()), -1e-6)
    res.headline.update(norm=W.integral(), min=float(W.values.min()))
    res.plot = ('set datafile separator ","\nset title "Wigner function"\nset xlabel "p"\nset ylabel "q"\n'
                "plot 'results.csv' matrix rowheaders columnheaders with image\n")
    return res


def exp_thermal(cfg, model, use_oracle):
    if model.nlevels < 2:
        raise ConfigError("thermal needs at least two levels (model.omegas)")
    beta = cfg["numeric.beta"]
    L = model.nlevels
    block = np.diag(np.full(L, 0.4 / L)).astype(complex)
    bath = th.ThermalBathState.make(model, beta, block, N=cfg["numeric.N"])
    gmax = max(find_pole(model, level=n).gamma for n in range(L))
    ts = _tgrid(cfg, gmax, 30.0)
    gibbs = float(np.exp(-beta * (model.omegas[1] - model.omegas[0])))
    rows = []
    for t in ts:
        r = th.reduced_oscillator_state(model, bath, t)
        d = np.real(np.diag(r))
        rows.append([t] + list(d) + [d[1] / d[0], gibbs])
    res = Result(["t"] + [f"rho_{n}{n}" for n in range(L)] + ["ratio_10", "gibbs_10"], rows)
    ratio = rows[-1][-2]
    res.headline.update(gibbs_ratio=gibbs, ratio=ratio, gamma_max=gmax)
    res.check("normalization", abs(bath.normalization() - 1) < 1e-10, abs(bath.normalization() - 1), 1e-10)
    res.check("gibbs_ratio", abs(ratio / gibbs - 1) < 0.05, ratio / gibbs - 1, 0.05)
    return res


RUNNERS = {
    "poles": exp_poles, "survival": exp_survival, "decoherence": exp_decoherence,
    "lyapunov": exp_lyapunov, "entropy": exp_entropy, "wigner": exp_wigner,
    "thermal": exp_thermal, "oracle-compare": exp_oracle_compare,
}


# ---------------------------------------------------------------------------
# run / sweep

def _out_dir(cfg, out):
    root = os.environ.get("GAMOW_OUT")
    d = out or cfg["output.dir"]
    return os.path.join(root, d) if root and not os.path.isabs(d) else d


def run_config(cfg: dict, out: str | None = None, use_oracle: bool = False) -> tuple[int, str, dict]:
    """Run one experiment; returns (exit code, output dir, manifest)."""
    cfg = validate(dict(cfg))
    d = _out_dir(cfg, out)
    os.makedirs(d, exist_ok=True)
    np.random.seed(cfg["numeric.seed"])
    t0 = time.perf_counter()
    model = build_model(cfg)
    res = RUNNERS[cfg["experiment"]](cfg, model, use_oracle)
    failed = sorted(k for k, v in res.checks.items() if not v["passed"])
    manifest = {
        "config": cfg,
        "oracle": bool(use_oracle),
        "columns": res.columns,
        "headline": res.headline,
        "checks": res.checks,
        "failed": failed,
        "wall_time": time.perf_counter() - t0,
    }
    _atomic_write(os.path.join(d, "results.csv"), _csv(res.columns, res.rows))
    _atomic_write(os.path.join(d, "plot.gp"), _plot_script(res, cfg["experiment"]))
    _atomic_write(os.path.join(d, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if failed:
        raise InvariantError(failed[0], f"see {os.path.join(d, 'manifest.json')}")
    return 0, d, manifest


def _sweep_one(args):
    cfg, out, use_oracle = args
    try:
        code, d, man = run_config(cfg, out, use_oracle)
        return code, man["headline"], ""
    except InvariantError as e:
        return 1, {}, str(e)
    except ConfigError as e:
        return 2, {}, str(e)
    except GamowError as e:
        return 3, {}, str(e)


def sweep(cfg: dict, param: str, values, out: str | None = None, use_oracle: bool = False,
          workers: int | None = None):
    """Run one config per value; returns (exit code, aggregated CSV path)."""
    if param not in SWEEPABLE:
        raise ConfigError(f"{param!r} is not sweepable; choose from {sorted(SWEEPABLE)}")
    key = SWEEPABLE[param]
    base = _out_dir(cfg, out)
    jobs = []
    for k, v in enumerate(values):
        c = dict(cfg)
        c[key] = _scalar(key, str(v))
        jobs.append((c, os.path.join(base, f"{param}_{k:03d}"), use_oracle))
    workers = workers or cfg["numeric.workers"]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            outs = list(pool.map(_sweep_one, jobs))
    else:
        outs = [_sweep_one(j) for j in jobs]
    names = sorted({h for _, hd, _ in outs for h, x in hd.items() if not isinstance(x, list)})
    rows = []
    for (c, _, _), (code, hd, err) in zip(jobs, outs):
        rows.append([repr(float(c[key])), str(code)] + [_fmt(hd[h]) if h in hd else "" for h in names])
    os.makedirs(base, exist_ok=True)
    path = os.path.join(base, "sweep.csv")
    _atomic_write(path, _csv([param, "exit_code"] + names, rows))
    codes = [o[0] for o in outs]
    return max(codes) if codes else 0, path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gamow", description="Resonance and irreversibility experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--oracle", action="store_true", help="also run the brute-force oracle")
    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("config")
    s.add_argument("--param", required=True)
    s.add_argument("--values", required=True, help="comma-separated list")
    s.add_argument("--out")
    s.add_argument("--oracle", action="store_true")
    s.add_argument("--workers", type=int)
    a = ap.parse_args(argv)
    try:
        cfg = load_config(a.config)
        if a.cmd == "run":
            _, d, _ = run_config(cfg, a.out, a.oracle)
            print(d)
            return 0
        code, path = sweep(cfg, a.param, [v for v in a.values.split(",") if v.strip()], a.out, a.oracle, a.workers)
        print(path)
        return code
    except InvariantError as e:
        print(f"invariant failure: {e.name}: {e}", file=sys.stderr)
        return 1
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except GamowError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
