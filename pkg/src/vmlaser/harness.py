"""Run configuration, built-in initial conditions, orchestration, and the
on-disk output formats (diagnostics.csv, iteration_trace.csv, snapshots,
manifest.txt)."""

import hashlib
import os
import re
from dataclasses import dataclass

import numpy as np

from .diagnostics import (DiagnosticsRow, continuity_residual, entropy,
                          h1_distance, longitudinal_energy, lp_distance,
                          relative_entropy, solve_potential,
                          transversal_energy)
from .equilibria import make_generator
from .fields import gauss_residual
from .fixed_point import (SolverConfig, WindowNotConverged, blowup_sentinel,
                          solve)
from .phase_space import (NR, QR, DistSlice, MajorizingFn, PhaseGrid,
                          gaussian_majorant, moment)

_INT_KEYS = {"nx", "np", "nt_per_window", "max_iters", "snapshot_stride"}
_FLOAT_KEYS = {"L", "p_max", "window_length", "t_end", "tol_fp"}
_STR_KEYS = {"model", "f0", "n_ext", "A0", "Adot0", "sigma", "output_dir"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS
_OPTIONAL = {"snapshot_stride": 8}


@dataclass
class RunConfig:
    model: str
    L: float
    p_max: float
    nx: int
    np_: int
    nt_per_window: int
    window_length: float
    t_end: float
    tol_fp: float
    max_iters: int
    f0: str
    n_ext: str
    A0: str
    Adot0: str
    sigma: str
    output_dir: str
    snapshot_stride: int = 8

    def serialize(self):
        """Canonical key = value form; re-parses to an equal RunConfig."""
        lines = []
        for key in sorted(_ALL_KEYS):
            attr = "np_" if key == "np" else key
            v = getattr(self, attr)
            if isinstance(v, float):
                v = f"{v:.17g}"
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    def sha256(self):
        return hashlib.sha256(self.serialize().encode()).hexdigest()


def parse_config(text):
    """Parse `key = value` lines (# comments) into a validated RunConfig."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {val!r}")
    missing = _ALL_KEYS - set(values) - set(_OPTIONAL)
    if missing:
        raise ValueError(f"missing mandatory keys: {sorted(missing)}")
    for key, default in _OPTIONAL.items():
        values.setdefault(key, default)
    values["np_"] = values.pop("np")
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.model == "fr":
        raise ValueError("FR evolution unsupported; see docs")
    if cfg.model not in ("nr", "qr"):
        raise ValueError(f"model must be 'nr' or 'qr', got {cfg.model!r}")
    if cfg.np_ % 2 == 0:
        raise ValueError("np must be odd")
    if min(cfg.tol_fp, cfg.window_length, cfg.t_end) <= 0:
        raise ValueError("tolerances, window_length and t_end must be > 0")
    k = cfg.t_end / cfg.window_length
    if abs(k - round(k)) > 1e-9 or round(k) < 1:
        raise ValueError("t_end must be an integer multiple of window_length")
    _parse_call(cfg.f0, {"uniform_maxwellian": 1, "modulated_maxwellian": 3,
                         "two_stream": 4})
    _parse_call(cfg.n_ext, {"uniform": 1})
    _parse_pair(cfg.A0)
    _parse_pair(cfg.Adot0)
    make_generator(cfg.sigma)


_CALL_RE = re.compile(r"^([a-z_]+)\(([^()]*)\)$")


def _parse_call(spec, arities):
    m = _CALL_RE.match(spec.strip())
    if not m:
        raise ValueError(f"cannot parse spec {spec!r}")
    name = m.group(1)
    args = [float(a) for a in m.group(2).split(",")] if m.group(2).strip() else []
    if name not in arities:
        raise ValueError(f"unknown builtin {name!r}")
    if len(args) != arities[name]:
        raise ValueError(
            f"{name} takes {arities[name]} arguments, got {len(args)}")
    return name, args


def _parse_pair(spec):
    """'amplitude, mode' wave specification."""
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'amplitude, mode', got {spec!r}")
    return float(parts[0]), int(parts[1])


_SQRT_2PI = np.sqrt(2.0 * np.pi)


def builtin_f0(spec, grid, variant):
    """Built-in initial distribution. Returns (DistSlice, info) where info
    carries the Gaussian majorant and its first three absolute moments."""
    name, args = _parse_call(spec, {"uniform_maxwellian": 1,
                                    "modulated_maxwellian": 3,
                                    "two_stream": 4})
    x, p = grid.x, grid.p
    phi_p = np.exp(-0.5 * p * p) / _SQRT_2PI
    if name == "uniform_maxwellian":
        (nbar,) = args
        vals = np.tile(nbar * phi_p, (grid.nx, 1))
        g = gaussian_majorant(amplitude=max(nbar, 1e-30) / _SQRT_2PI)
    elif name == "modulated_maxwellian":
        nbar, eps, mode = args
        envelope = nbar * (1.0 + eps * np.cos(2 * np.pi * mode * x / grid.L))
        if np.any(envelope < 0):
            raise ValueError("modulation amplitude makes f0 negative")
        vals = envelope[:, None] * phi_p[None, :]
        g = gaussian_majorant(amplitude=nbar * (1 + abs(eps)) / _SQRT_2PI)
    else:
        nbar, v0, eps, mode = args
        envelope = nbar * (1.0 + eps * np.cos(2 * np.pi * mode * x / grid.L))
        beams = 0.5 * (np.exp(-0.5 * (p - v0) ** 2)
                       + np.exp(-0.5 * (p + v0) ** 2)) / _SQRT_2PI
        vals = envelope[:, None] * beams[None, :]
        if np.any(vals < 0):
            raise ValueError("two_stream parameters make f0 negative")
        amp = nbar * (1 + abs(eps)) / _SQRT_2PI
        g = MajorizingFn(
            lambda q: amp * np.exp(-0.5 * np.maximum(np.abs(q) - abs(v0), 0.0) ** 2))
    f0 = DistSlice(grid, vals)
    info = dict(g=g, M0=g.moment(0), M1=g.moment(1), M2=g.moment(2))
    return f0, info


def _wave_from_pair(spec, grid):
    amp, mode = _parse_pair(spec)
    return amp * np.sin(2.0 * np.pi * mode * grid.x / grid.L)


def _write_snapshot(path, slice_values):
    np.asarray(slice_values, dtype="<f8").tofile(path)


def run(config, reference_eq=None, f0_override=None):
    """Execute a configured run and write all output files.

    Returns exit status 0 on convergence, 2 when some window failed to
    converge (partial outputs are still written and flagged in the
    manifest). With a reference equilibrium the relative-entropy and
    distance columns are filled.
    """
    grid = PhaseGrid(config.L, config.nx, config.p_max, config.np_)
    variant = QR if config.model == "qr" else NR
    f0, _ = builtin_f0(config.f0, grid, variant)
    if f0_override is not None:
        f0 = f0_override
    _, (nbar_ext,) = _parse_call(config.n_ext, {"uniform": 1})
    n_ext = np.full(grid.nx, nbar_ext)
    A0 = _wave_from_pair(config.A0, grid)
    Adot0 = _wave_from_pair(config.Adot0, grid)
    gen = make_generator(config.sigma)

    n_windows = round(config.t_end / config.window_length)
    scfg = SolverConfig(t_end=config.t_end,
                        nt=n_windows * config.nt_per_window,
                        tol_fp=config.tol_fp, max_iters=config.max_iters)
    status = 0
    try:
        sol = solve(f0, A0, Adot0, n_ext, grid, variant, scfg,
                    window_length=config.window_length)
    except WindowNotConverged as exc:
        sol = exc.partial
        status = 2

    os.makedirs(config.output_dir, exist_ok=True)
    _write_outputs(config, grid, variant, gen, n_ext, sol, status,
                   reference_eq)
    return status


def _write_outputs(config, grid, variant, gen, n_ext, sol, status,
                   reference_eq):
    out = config.output_dir
    times = sol.slice_times()
    dist = sol.stitched("dist")
    n_hist = sol.stitched("n_hist")
    j_hist = sol.stitched("j_hist")
    E = sol.stitched("E")
    A = sol.stitched("A")
    Adot = sol.stitched("Adot")
    dxA = sol.stitched("dxA")
    dxxA = sol.stitched("dxxA")
    dt = times[1] - times[0] if len(times) > 1 else config.t_end
    cont = continuity_residual(n_hist, j_hist, dt, grid)

    support_tol = (reference_eq.f_inf.support_tol
                   if reference_eq is not None else 1e-10)
    rows = []
    for m in range(len(times)):
        fm = DistSlice(grid, dist[m], support_tol=support_tol)
        wt = transversal_energy(fm, A[m], Adot[m], dxA[m])
        wl1, wl2 = longitudinal_energy(fm, n_ext, variant)
        s_sigma = entropy(fm, gen)
        row = DiagnosticsRow(
            t=float(times[m]), mass=fm.mass(), WT=wt, WL_form1=wl1,
            WL_form2=wl2, W_total=wt + wl2, S_sigma=s_sigma,
            KT_sigma=wl2 + s_sigma + wt,
            gauss_residual=gauss_residual(E[m], n_hist[m], n_ext, grid),
            continuity_residual=float(cont[m]),
            sup_dxxA=float(np.abs(dxxA[m]).max()))
        if reference_eq is not None:
            row.relative_entropy = relative_entropy(
                fm, reference_eq.f_inf, gen)
            row.l1_dist = lp_distance(fm, reference_eq.f_inf, 1)
            row.l2_dist = lp_distance(fm, reference_eq.f_inf, 2)
            phi_m = solve_potential(moment(fm, "density", variant),
                                    n_ext, grid)
            row.h1_phi_dist = h1_distance(phi_m, reference_eq.Phi_inf, grid)
        rows.append(row)

    with open(os.path.join(out, "diagnostics.csv"), "w") as fh:
        fh.write(DiagnosticsRow.header() + "\n")
        for row in rows:
            fh.write(row.to_line() + "\n")

    with open(os.path.join(out, "iteration_trace.csv"), "w") as fh:
        fh.write("window,k,dE,dA,dxA_delta,dF,sup_dxxA,sup_dxF\n")
        for wi, w in enumerate(sol.windows):
            tr = w.trace
            for k in range(tr.iterations_used):
                cells = [str(wi), str(k + 1)] + [
                    f"{series[k]:.17g}" for series in
                    (tr.dE, tr.dA, tr.dxA_delta, tr.dF,
                     tr.sup_dxxA, tr.sup_dxF)]
                fh.write(",".join(cells) + "\n")

    saved = sorted(set(range(0, len(times), config.snapshot_stride))
                   | {len(times) - 1})
    for m in saved:
        _write_snapshot(os.path.join(out, f"f_t{m:06d}.bin"), dist[m])

    sentinel = [blowup_sentinel(w.trace) for w in sol.windows]
    warned = sorted({q for s in sentinel for q in s["quantities"]})
    with open(os.path.join(out, "manifest.txt"), "w") as fh:
        fh.write(f"nx: {grid.nx}\n")
        fh.write(f"np: {grid.np_}\n")
        fh.write(f"L: {grid.L:.17g}\n")
        fh.write(f"p_max: {grid.p_max:.17g}\n")
        fh.write(f"dt: {dt:.17g}\n")
        fh.write(f"model: {config.model}\n")
        fh.write(f"sigma: {config.sigma}\n")
        fh.write(f"config_sha256: {config.sha256()}\n")
        fh.write(f"converged: {'yes' if status == 0 else 'no'}\n")
        fh.write(f"sentinel_warn: {'yes' if warned else 'no'}\n")
        if warned:
            fh.write(f"sentinel_quantities: {','.join(warned)}\n")
        fh.write("slice_times: "
                 + ",".join(f"{t:.17g}" for t in times) + "\n")
        fh.write("snapshots: "
                 + ",".join(f"f_t{m:06d}.bin" for m in saved) + "\n")
