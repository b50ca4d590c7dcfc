"""Command line orchestration.

Subcommands: simulate, couple, sweep, concentration, assumptions, validate,
kernel-check.  Exit codes: 0 ok, 2 config error, 3 numerical failure,
4 validation failure.  Identical config and seed reproduce byte-identical
CSV artifacts regardless of the worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import concentration as conc
from . import coupling, ensemble, kernels, scaling
from .config import ConfigError, RunConfig, parse_config, schema_help
from .dynamics import IntegrationError, IntegratorConfig, auto_config, evolve
from .mc import trial_seed
from .output import write_csv, write_manifest

SUBCOMMANDS = ("simulate", "couple", "sweep", "concentration", "assumptions",
               "validate", "kernel-check")


def _params_for(cfg: RunConfig, n: int):
    """Model parameters for one particle count: scaled from the exponents,
    or taken verbatim from the config."""
    p = cfg.to_params()
    if not cfg.use_scaling:
        return p
    eps, delta, r_cut = scaling.derive_scaling(n, cfg.theta, cfg.vartheta)
    return replace(p, epsilon=eps, delta=delta, r_cut=r_cut)


def _integrator(cfg: RunConfig, p, t_end: float) -> IntegratorConfig:
    if cfg.dt > 0:
        icfg = IntegratorConfig(dt=cfg.dt, t_end=t_end, scheme=cfg.scheme,
                                snapshot_stride=cfg.snapshot_stride)
        icfg.validate_for(p)
        return icfg
    return auto_config(p, t_end, scheme=cfg.scheme,
                       snapshot_stride=cfg.snapshot_stride)


# --------------------------------------------------------------------------
# subcommand handlers: return (exit_code, {artifact name: path})

def _cmd_validate(cfg: RunConfig, outdir: Path):
    report = scaling.validate_exponents(cfg.d, cfg.to_exponents())
    rows = []
    print(f"{'constraint':<12} {'lower':>12} {'value':>12} {'upper':>12} status")
    for c in report.constraints:
        status = "ok" if c.ok else "VIOLATED"
        print(f"{c.name:<12} {c.lower:>12.6g} {c.value:>12.6g} "
              f"{c.upper:>12.6g} {status}")
        rows.append([c.name, c.lower, c.value, c.upper, status])
    for name, value in zip(scaling.N_COMPONENT_NAMES, report.n_values):
        print(f"rate component {name} = {value:.6g}")
    print(f"decay rate n = {report.n_rate:.6g}")
    for d in report.discrepancies:
        print(f"discrepancy: {d}")
    if report.valid and report.n_rate > 0 and cfg.t_end > 0:
        ok, upper = scaling.vartheta_admissible(cfg.d, cfg.to_exponents(),
                                                cfg.c_const, cfg.t_end)
        print(f"vartheta admissibility for c={cfg.c_const}, t={cfg.t_end}: "
              f"upper bound {upper:.6g}, "
              f"{'admissible' if ok else 'NOT admissible'} (reported only)")
    path = write_csv(outdir / "validate.csv",
                     ["name", "lower", "value", "upper", "status"], rows)
    return (0 if report.valid else 4), {"validate": path}


def _cmd_kernel_check(cfg: RunConfig, outdir: Path):
    p = cfg.to_params()
    rng = np.random.default_rng(cfg.master_seed)
    d, eps = p.d, p.epsilon
    checks = []

    pts = rng.uniform(-2 * eps, 2 * eps, size=(200_000, d))
    f_norm = np.sqrt(np.sum(kernels.newtonian_force(pts, p) ** 2, axis=-1))
    bound = kernels.force_bound(p)
    checks.append(("force_bound_ratio", float(f_norm.max() / bound), 1 + 1e-9))

    dirs = rng.standard_normal((2000, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = eps * (1 + rng.uniform(-1e-3, 1e-3, size=2000))
    near = dirs * radii[:, None]
    near_max = np.sqrt(np.sum(kernels.newtonian_force(near, p) ** 2, axis=-1)).max()
    checks.append(("boundary_attainment_ratio", float(near_max / bound), 0.999,
                   "lower"))

    sphere = dirs * eps
    r = np.sqrt(np.sum(sphere**2, axis=-1))[:, None]
    outer = p.c_d * sphere / r ** d
    inner = p.c_d * eps ** (-d) * sphere
    rel = np.max(np.abs(outer - inner)) / np.max(np.abs(outer))
    checks.append(("branch_continuity_rel", float(rel), 1e-12))

    x = rng.uniform(-5 * eps, 5 * eps, size=(100_000, d))
    u = rng.standard_normal((100_000, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    y = x + u * rng.uniform(0, 2 * eps, size=100_000)[:, None]
    lhs = np.sqrt(np.sum((kernels.newtonian_force(x, p)
                          - kernels.newtonian_force(y, p)) ** 2, axis=-1))
    rhs = kernels.lipschitz_envelope(x, p) * np.sqrt(np.sum((x - y) ** 2, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, 0.0)
    checks.append(("envelope_ratio", float(ratio.max()), 1.0))

    h_err = max(abs(kernels.cutoff_h(0.99) - 1.0), abs(kernels.cutoff_h(2.0)),
                abs(kernels.cutoff_h(1.5) - 0.5))
    checks.append(("cutoff_h_values", float(h_err), 1e-15))

    if d in (2, 3):
        nodes = 513 if d == 2 else 129
        axis = np.linspace(-eps, eps, nodes)
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        stack = np.stack([g.ravel() for g in grids], axis=-1)
        vals = kernels.mollifier(stack, p).reshape([nodes] * d)
        mass = vals
        for _ in range(d):
            mass = np.trapezoid(mass, axis, axis=-1)
        checks.append(("mollifier_mass_err", float(abs(mass - 1.0)), 1e-8))

    dirs_q = rng.standard_normal((100, d))
    dirs_q /= np.linalg.norm(dirs_q, axis=1, keepdims=True)
    q = dirs_q * rng.uniform(0, 0.9 * eps, size=(100, 1))
    h_step = 1e-5 * eps
    grad = kernels.mollifier_grad(q, p)
    fd = np.empty_like(grad)
    for c in range(d):
        e = np.zeros(d)
        e[c] = h_step
        fd[:, c] = (kernels.mollifier(q + e, p) - kernels.mollifier(q - e, p)) \
            / (2 * h_step)
    denom = np.maximum(np.sqrt(np.sum(grad**2, axis=-1)),
                       1e-12 * kernels.mollifier_grad_bound(p))
    rel_fd = np.max(np.sqrt(np.sum((fd - grad) ** 2, axis=-1)) / denom)
    checks.append(("mollifier_grad_fd_rel", float(rel_fd), 1e-6))

    v = rng.standard_normal((1_000_000, d)) * 2 * p.r_cut
    sup = np.sqrt(np.sum(kernels.velocity_cutoff(v, p) ** 2, axis=-1)).max()
    checks.append(("velocity_cutoff_sup_ratio", float(sup / (2 * p.r_cut)), 1.0))

    rows = []
    all_ok = True
    print(f"{'check':<28} {'observed':>14} {'bound':>12} status")
    for entry in checks:
        name, observed, bound = entry[0], entry[1], entry[2]
        sense = entry[3] if len(entry) > 3 else "upper"
        ok = observed >= bound if sense == "lower" else observed <= bound
        all_ok &= ok
        print(f"{name:<28} {observed:>14.6g} {bound:>12.6g} "
              f"{'ok' if ok else 'VIOLATED'}")
        rows.append([name, observed, bound, "ok" if ok else "violated"])
    path = write_csv(outdir / "kernel_check.csv",
                     ["check", "observed", "bound", "status"], rows)
    return (0 if all_ok else 3), {"kernel_check": path}


def _cmd_simulate(cfg: RunConfig, outdir: Path):
    p = _params_for(cfg, cfg.n)
    law = cfg.to_law()
    state = ensemble.sample_initial(law, cfg.n, trial_seed(cfg.master_seed, 0, 0))
    icfg = _integrator(cfg, p, cfg.t_end)
    traj = evolve(state, p, icfg, align_index=cfg.local_velocity_index)
    artifacts = {}
    index_rows = []
    snapdir = outdir / "snapshots"
    snapdir.mkdir(parents=True, exist_ok=True)
    for k, snap in enumerate(traj):
        path = snapdir / f"snap_{k:06d}.csv"
        ensemble.write_ensemble_csv(snap, path)
        artifacts[f"snap_{k:06d}"] = path
        index_rows.append([snap.time, str(path.relative_to(outdir))])
    artifacts["index"] = write_csv(outdir / "index.csv", ["t", "path"],
                                   index_rows)
    print(f"simulate: {cfg.n} particles, {len(traj)} snapshots, "
          f"t_end={icfg.t_end}, dt={icfg.dt}")
    return 0, artifacts


def _couple_rows(cfg: RunConfig, n: int, stream: int):
    p = _params_for(cfg, n)
    law = cfg.to_law()
    icfg = _integrator(cfg, p, cfg.t_end)
    records = coupling.coupled_trials(
        n, cfg.m_factor * n, law, p, icfg, cfg.alpha, cfg.trials,
        cfg.master_seed, stream=stream, threads=cfg.threads,
        align_index=cfg.local_velocity_index)
    est = coupling.estimate_exceedance(records, cfg.alpha)
    mean_final = float(np.mean([r.final_sup for r in records]))
    row = [n, p.epsilon, p.delta, p.r_cut, cfg.alpha, est.trials, est.hits,
           est.p_hat, est.ci_halfwidth, mean_final]
    return row, records


def _cmd_couple(cfg: RunConfig, outdir: Path):
    row, records = _couple_rows(cfg, cfg.n, stream=0)
    artifacts = {}
    if cfg.write_trials:
        for k, rec in enumerate(records):
            path = write_csv(outdir / f"trial_{k:04d}.csv",
                             ["t", "sup_deviation", "s_process"],
                             zip(rec.times, rec.sup_deviation, rec.s_process))
            artifacts[f"trial_{k:04d}"] = path
    artifacts["summary"] = write_csv(
        outdir / "couple_summary.csv",
        ["N", "epsilon", "delta", "R", "alpha", "trials", "hits", "p_hat",
         "ci_halfwidth", "mean_final_sup"], [row])
    print(f"couple: N={cfg.n}, trials={cfg.trials}, p_hat={row[7]}, "
          f"mean_final_sup={row[9]}")
    return 0, artifacts


def _cmd_sweep(cfg: RunConfig, outdir: Path):
    if not cfg.use_scaling:
        raise ConfigError("sweep requires use_scaling = true")
    if any(x < 2 for x in cfg.n_list):
        raise ConfigError("sweep requires every n_list entry >= 2")
    rows, _ = coupling.sweep_exceedance(
        list(cfg.n_list), cfg.trials, cfg.to_exponents(), cfg.to_law(),
        cfg.to_params(), cfg.t_end, m_factor=cfg.m_factor,
        master_seed=cfg.master_seed, threads=cfg.threads, scheme=cfg.scheme,
        snapshot_stride=cfg.snapshot_stride,
        align_index=cfg.local_velocity_index)
    header = ["N", "epsilon", "delta", "R", "alpha", "trials", "hits",
              "p_hat", "ci_halfwidth", "mean_final_sup"]
    path = write_csv(outdir / "sweep.csv", header,
                     [[r[h] for h in header] for r in rows])
    for r in rows:
        print(f"sweep: N={r['N']} p_hat={r['p_hat']} "
              f"mean_final_sup={r['mean_final_sup']}")
    return 0, {"sweep": path}


def _cmd_concentration(cfg: RunConfig, outdir: Path):
    exponent = {"kappa": cfg.kappa, "gamma": cfg.gamma_exp,
                "eta": cfg.eta, "mu": cfg.mu}[cfg.which]
    law = cfg.to_law()
    rows = []
    for rung, n in enumerate(cfg.n_list):
        p = _params_for(cfg, n)
        est = conc.estimate_set_probability(
            cfg.which, n, cfg.trials, law, p, exponent, t_eval=cfg.t_eval,
            seed=cfg.master_seed, m_oracle_factor=cfg.m_oracle_factor,
            threads=cfg.threads, stream=rung, c_const=cfg.c_const,
            align_index=cfg.local_velocity_index)
        rows.append([cfg.which, n, exponent, p.epsilon, p.delta, p.r_cut,
                     est.trials, est.hits, est.p_hat, est.ci_halfwidth,
                     est.paper_bound])
        print(f"concentration[{cfg.which}]: N={n} p_hat={est.p_hat} "
              f"+-{est.ci_halfwidth:.4g} bound={est.paper_bound:.4g}")
    path = write_csv(outdir / "concentration.csv",
                     ["which", "N", "exponent", "epsilon", "delta", "R",
                      "trials", "hits", "p_hat", "ci_halfwidth",
                      "paper_bound"], rows)
    return 0, {"concentration": path}


def _cmd_assumptions(cfg: RunConfig, outdir: Path):
    law = cfg.to_law()
    rows = []
    for rung, n in enumerate(cfg.n_list):
        p = _params_for(cfg, n)
        state = ensemble.sample_initial(law, n,
                                        trial_seed(cfg.master_seed, rung, 0))
        if cfg.t_eval > 0:
            icfg = _integrator(cfg, p, cfg.t_eval)
            state = evolve(state, p, icfg,
                           align_index=cfg.local_velocity_index)[-1]
        report = ensemble.density_bound_estimates(state, p)
        rows.append([n, p.epsilon, p.delta, p.r_cut,
                     report.sup_first_moment,
                     report.sup_grad_mollifier_conv,
                     report.sup_singular_conv, report.query_count])
        print(f"assumptions: N={n} first_moment={report.sup_first_moment:.4g} "
              f"grad_moll={report.sup_grad_mollifier_conv:.4g} "
              f"singular={report.sup_singular_conv:.4g}")
    path = write_csv(outdir / "assumptions.csv",
                     ["N", "epsilon", "delta", "R", "sup_first_moment",
                      "sup_grad_mollifier_conv", "sup_singular_conv",
                      "query_count"], rows)
    return 0, {"assumptions": path}


_HANDLERS = {
    "validate": _cmd_validate,
    "kernel-check": _cmd_kernel_check,
    "simulate": _cmd_simulate,
    "couple": _cmd_couple,
    "sweep": _cmd_sweep,
    "concentration": _cmd_concentration,
    "assumptions": _cmd_assumptions,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meanfieldlab",
        description="Particle-flow deviation experiments with cut-off "
                    "interaction and local alignment.",
        epilog=schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="path to a key = value config file")
        sp.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE", dest="overrides",
                        help="override a config key (repeatable, wins over "
                             "file and MEANFIELD_THREADS)")
        sp.add_argument("--output-dir", help="artifact directory "
                                             "(shorthand for --set output_dir=...)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = []
    env_threads = os.environ.get("MEANFIELD_THREADS")
    if env_threads is not None:
        overrides.append(f"threads={env_threads}")
    overrides.extend(args.overrides)
    if args.output_dir is not None:
        overrides.append(f"output_dir={args.output_dir}")
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        code, artifacts = _HANDLERS[args.command](cfg, outdir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except IntegrationError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - start
    write_manifest(outdir, args.command, cfg.as_dict(), artifacts, wall)
    return code


if __name__ == "__main__":
    sys.exit(main())
