"""Coupled-trajectory experiments.

A trial evolves, from shared random initial data, the self-interacting
particle system and the same test particles driven by a much larger
reference ensemble (the empirical stand-in for the limiting law).  The
sup-norm distance between the two flows over time, clipped at one after
scaling by N^alpha, is the deviation process whose exceedance probability
the sweeps estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import IntegrationError, IntegratorConfig, auto_config, step
from .ensemble import InitialLaw, PhaseEnsemble
from .kernels import ModelParams
from .mc import map_parallel, seed_id, trial_seed, wilson_halfwidth
from .scaling import ExponentSet, derive_scaling, validate_exponents


def phase_sup_distance(a: PhaseEnsemble, b: PhaseEnsemble) -> float:
    """Max-norm distance over all position and velocity coordinates."""
    if a.positions.shape != b.positions.shape:
        raise ValueError("ensembles differ in shape")
    dx = np.max(np.abs(a.positions - b.positions))
    dv = np.max(np.abs(a.velocities - b.velocities))
    return float(max(dx, dv))


@dataclass(frozen=True)
class DeviationRecord:
    """Per-trial running sup-norm deviation and its clipped, scaled form."""

    trial_seed: int
    n_particles: int
    alpha: float
    times: np.ndarray
    sup_deviation: np.ndarray
    s_process: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        sup = np.asarray(self.sup_deviation, dtype=float)
        s = np.asarray(self.s_process, dtype=float)
        if not (t.shape == sup.shape == s.shape):
            raise ValueError("times, sup_deviation, s_process must align")
        if sup[0] != 0.0:
            raise ValueError("deviation must start at zero (shared initial data)")
        if np.any(np.diff(sup) < 0) or np.any(np.diff(s) < 0):
            raise ValueError("running sup must be non-decreasing")
        if np.any(s < 0) or np.any(s > 1):
            raise ValueError("s_process must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sup_deviation", sup)
        object.__setattr__(self, "s_process", s)

    @property
    def final_sup(self) -> float:
        return float(self.sup_deviation[-1])


@dataclass(frozen=True)
class ExceedanceEstimate:
    """Monte Carlo estimate of the deviation exceedance probability."""

    n_particles: int
    alpha: float
    threshold: float
    trials: int
    hits: int
    p_hat: float
    ci_halfwidth: float

    def __post_init__(self):
        if not 0 <= self.hits <= self.trials:
            raise ValueError("hits must lie in [0, trials]")
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError("p_hat must lie in [0, 1]")


def run_coupled_trial(n: int, m: int, law: InitialLaw, p: ModelParams,
                      cfg: IntegratorConfig, alpha: float, seed,
                      align_index: str = "j") -> DeviationRecord:
    """One coupled trial.

    Draws m initial pairs; the first n seed both the self-interacting test
    system and the reference-driven copies, the full m the reference
    ensemble.  All three flows advance on the same time grid; the reference
    is frozen within each step.  Records the running sup deviation at every
    snapshot stride.
    """
    if m < n:
        raise ValueError(f"reference size m={m} must be >= n={n}")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    cfg.validate_for(p)
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    d = law.d
    pos = law.position_mean + law.position_std * rng.standard_normal((m, d))
    vel = law.velocity_mean + law.velocity_std * rng.standard_normal((m, d))
    particle = PhaseEnsemble(pos[:n], vel[:n])
    reference = PhaseEnsemble(pos, vel)
    test = particle

    times = [0.0]
    sups = [0.0]
    running = 0.0
    try:
        for k in range(1, cfg.n_steps + 1):
            test_next = step(test, p, cfg.dt, source=reference,
                             scheme=cfg.scheme, align_index=align_index)
            particle_next = step(particle, p, cfg.dt, scheme=cfg.scheme,
                                 align_index=align_index)
            reference_next = step(reference, p, cfg.dt, scheme=cfg.scheme,
                                  align_index=align_index)
            test, particle, reference = test_next, particle_next, reference_next
            running = max(running, phase_sup_distance(particle, test))
            if k % cfg.snapshot_stride == 0 or k == cfg.n_steps:
                times.append(k * cfg.dt)
                sups.append(running)
    except IntegrationError as err:
        raise IntegrationError(
            f"{err} (trial seed {seed_id(ss)})",
            particle_index=err.particle_index, time=err.time,
            seed=seed_id(ss),
        ) from err

    sups = np.array(sups)
    s_proc = np.minimum(1.0, float(n) ** alpha * sups)
    return DeviationRecord(trial_seed=seed_id(ss), n_particles=n, alpha=alpha,
                           times=np.array(times), sup_deviation=sups,
                           s_process=s_proc)


def estimate_exceedance(records: list[DeviationRecord],
                        alpha: float) -> ExceedanceEstimate:
    """Fraction of trials whose final running sup exceeds N^-alpha, with a
    95% Wilson half-width."""
    if not records:
        raise ValueError("need at least one record")
    n = records[0].n_particles
    t0 = records[0].times
    for r in records[1:]:
        if r.n_particles != n:
            raise ValueError("records mix particle counts")
        if not np.array_equal(r.times, t0):
            raise ValueError("records mix time grids")
    threshold = float(n) ** (-alpha)
    hits = int(sum(r.final_sup > threshold for r in records))
    trials = len(records)
    return ExceedanceEstimate(
        n_particles=n, alpha=alpha, threshold=threshold, trials=trials,
        hits=hits, p_hat=hits / trials,
        ci_halfwidth=wilson_halfwidth(hits, trials),
    )


def _trial_task(args) -> DeviationRecord:
    n, m, law, p, cfg, alpha, entropy, align_index = args
    return run_coupled_trial(n, m, law, p, cfg, alpha,
                             trial_seed(*entropy), align_index)


def coupled_trials(n: int, m: int, law: InitialLaw, p: ModelParams,
                   cfg: IntegratorConfig, alpha: float, trials: int,
                   master_seed: int, stream: int = 0, threads: int = 0,
                   align_index: str = "j") -> list[DeviationRecord]:
    """Run independent trials with counter-based per-trial seeds; results
    do not depend on the worker count."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tasks = [(n, m, law, p, cfg, alpha, (master_seed, stream, k), align_index)
             for k in range(trials)]
    return map_parallel(_trial_task, tasks, threads)


def sweep_exceedance(n_list: list[int], trials: int, exponents: ExponentSet,
                     law: InitialLaw, p_template: ModelParams, t_end: float,
                     m_factor: int = 16, master_seed: int = 0,
                     threads: int = 0, scheme: str = "rk4",
                     snapshot_stride: int = 1, align_index: str = "j"):
    """Exceedance estimates along a particle-count ladder.

    For each count the cut-off scales derive from the exponents; the step
    size comes from the stability guard.  Returns (rows, records) where
    rows carry the sweep table columns and records maps the count to its
    trial records.  Invalid exponents are rejected before any simulation.
    """
    report = validate_exponents(p_template.d, exponents)
    if not report.valid:
        raise ValueError(
            f"invalid exponents: {', '.join(report.violations)}"
        )
    if m_factor < 1:
        raise ValueError("m_factor must be >= 1")
    rows = []
    records_by_n = {}
    for rung, n in enumerate(n_list):
        eps, delta, r_cut = derive_scaling(n, exponents.theta,
                                           exponents.vartheta)
        p = replace(p_template, epsilon=eps, delta=delta, r_cut=r_cut)
        cfg = auto_config(p, t_end, scheme=scheme,
                          snapshot_stride=snapshot_stride)
        records = coupled_trials(n, m_factor * n, law, p, cfg,
                                 exponents.alpha, trials, master_seed,
                                 stream=rung, threads=threads,
                                 align_index=align_index)
        est = estimate_exceedance(records, exponents.alpha)
        rows.append({
            "N": n, "epsilon": eps, "delta": delta, "R": r_cut,
            "alpha": exponents.alpha, "trials": est.trials,
            "hits": est.hits, "p_hat": est.p_hat,
            "ci_halfwidth": est.ci_halfwidth,
            "mean_final_sup": float(np.mean([r.final_sup for r in records])),
        })
        records_by_n[n] = records
    return rows, records_by_n
