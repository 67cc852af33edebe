"""Command-line entry points: simulate, equilibrium, stability, appendix-b,
wave-check."""

import argparse
import os
import sys

import numpy as np


def _load_config(path, out_dir=None):
    from .harness import parse_config
    with open(path, encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    if out_dir is not None:
        cfg.output_dir = out_dir
    return cfg


def _build_equilibrium(cfg):
    from .equilibria import (homogeneous_equilibrium, make_generator,
                             solve_equilibrium)
    from .harness import _parse_call
    from .phase_space import NR, QR, PhaseGrid
    grid = PhaseGrid(cfg.L, cfg.nx, cfg.p_max, cfg.np_)
    variant = QR if cfg.model == "qr" else NR
    gen = make_generator(cfg.sigma)
    _, (nbar,) = _parse_call(cfg.n_ext, {"uniform": 1})
    M = nbar * cfg.L
    eq = homogeneous_equilibrium(M, grid, gen, variant)
    return eq, grid, variant


def cmd_simulate(args):
    from .harness import run
    cfg = _load_config(args.config, args.out)
    return run(cfg)


def cmd_equilibrium(args):
    from .equilibria import poisson_residual, stationarity_residual
    cfg = _load_config(args.config, args.out)
    eq, grid, variant = _build_equilibrium(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    eq.f_inf.values.astype("<f8").tofile(
        os.path.join(cfg.output_dir, "equilibrium.bin"))
    with open(os.path.join(cfg.output_dir, "equilibrium.txt"), "w") as fh:
        fh.write(f"alpha: {eq.alpha:.17g}\n")
        fh.write(f"mass: {eq.f_inf.mass():.17g}\n")
        fh.write(f"poisson_residual: {poisson_residual(eq):.17g}\n")
        fh.write(f"stationarity_residual: "
                 f"{stationarity_residual(eq, variant):.17g}\n")
    return 0


def cmd_stability(args):
    from .equilibria import perturb
    from .harness import run
    cfg = _load_config(args.config, args.out)
    eq, grid, variant = _build_equilibrium(cfg)
    f0 = perturb(eq, args.eps, args.mode) if args.eps != 0 else eq.f_inf
    return run(cfg, reference_eq=eq, f0_override=f0)


def cmd_appendix_b(args):
    from .iteration_theory import (PhiParams, compute_T1, fixed_points,
                                   iterate_v)
    params = PhiParams(args.alpha, args.beta)
    t1 = compute_T1(params)
    t = args.t if args.t is not None else 0.5 * t1
    fp = fixed_points(t, params)
    _, verdict, limit = iterate_v(args.v0, t, params, K=200)
    print("alpha,beta,t,T1,classification,v_low,v_high,v0,verdict,limit")
    fmt = lambda v: "" if v is None or (isinstance(v, float) and np.isnan(v)) \
        else f"{v:.12g}"
    print(",".join([f"{args.alpha:.12g}", f"{args.beta:.12g}",
                    f"{t:.12g}", f"{t1:.12g}", fp.kind, fmt(fp.v_low),
                    fmt(fp.v_high), f"{args.v0:.12g}", verdict, fmt(limit)]))
    return 0


def cmd_wave_check(args):
    from .fields import duhamel_history, leapfrog_wave_oracle
    from .phase_space import PhaseGrid
    grid = PhaseGrid(2.0 * np.pi, args.nx, 8.0, 17)
    dt = 1.0 / args.nt
    x = grid.x
    nt = args.nt
    # free wave: A0 = sin x, Adot0 = 0 has the closed form sin x cos t
    S = np.zeros((nt + 1, grid.nx))
    A, _, _, _ = duhamel_history(np.sin(x), np.zeros(grid.nx), S, grid, dt)
    times = np.arange(nt + 1) * dt
    exact = np.sin(x)[None, :] * np.cos(times)[:, None]
    free_err = float(np.abs(A - exact).max())
    # forced wave against the finite-difference oracle
    rng = np.random.default_rng(7)
    c = rng.standard_normal((3, 2))
    S = sum(c[k, 0] * np.cos((k + 1) * x)[None, :]
            * np.cos(2.0 * times)[:, None]
            + c[k, 1] * np.sin((k + 1) * x)[None, :]
            * np.sin(3.0 * times)[:, None]
            for k in range(3))
    A0 = np.cos(x)
    Adot0 = 0.5 * np.sin(2 * x)
    A, _, _, _ = duhamel_history(A0, Adot0, S, grid, dt)
    A_ref = leapfrog_wave_oracle(A0, Adot0, S, grid, dt)
    forced_err = float(np.abs(A - A_ref).max())
    print(f"free_wave_max_error: {free_err:.6e}")
    print(f"oracle_max_error: {forced_err:.6e}")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="vmlaser",
        description="Reduced 1D Vlasov-Maxwell laser-plasma simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("equilibrium", help="construct a steady state")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_equilibrium)

    p = sub.add_parser("stability", help="evolve a perturbed equilibrium")
    p.add_argument("--config", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mode", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_stability)

    p = sub.add_parser("appendix-b",
                       help="scalar recurrence critical time and iteration")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--v0", type=float, default=0.0)
    p.set_defaults(fn=cmd_appendix_b)

    p = sub.add_parser("wave-check",
                       help="cross-check the explicit wave solver")
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--nt", type=int, default=64)
    p.set_defaults(fn=cmd_wave_check)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
