"""Force assembly and deterministic time integration of particle flows.

Two force modes share one code path.  With ``source=None`` (or a source
whose state equals the evolving ensemble) the flow is self-interacting:
every particle feels the empirical measure of the ensemble itself, and the
integrator substages re-evaluate that measure self-consistently.  With a
distinct ``source`` ensemble the flow is driven by that fixed reference
measure, which stays frozen during the substages of one step; advancing the
reference in lockstep is the caller's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fast
from .ensemble import PhaseEnsemble, _moll_const
from .kernels import ModelParams, force_bound, linear_drift, velocity_cutoff

_SCHEMES = ("rk4", "euler")


class IntegrationError(RuntimeError):
    """Non-finite state produced during integration."""

    def __init__(self, message, particle_index=None, time=None, seed=None):
        super().__init__(message)
        self.particle_index = particle_index
        self.time = time
        self.seed = seed


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size, horizon, scheme and snapshot stride.

    The horizon must be an integer number of steps (checked to 1e-12).
    ``t_end = 0`` is the degenerate single-snapshot case.
    """

    dt: float
    t_end: float
    scheme: str = "rk4"
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be an integer >= 1")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.t_end > 0:
            if self.dt <= 0:
                raise ValueError("dt must be > 0")
            n = round(self.t_end / self.dt)
            if n < 1 or abs(n * self.dt - self.t_end) > 1e-12 * max(1.0, self.t_end):
                raise ValueError(
                    f"t_end={self.t_end} is not an integer multiple of dt={self.dt}"
                )

    @property
    def n_steps(self) -> int:
        if self.t_end == 0:
            return 0
        return round(self.t_end / self.dt)

    def validate_for(self, p: ModelParams) -> None:
        """Check the step size against the stability guard for p."""
        if self.t_end > 0 and self.dt > stable_dt(p) * (1.0 + 1e-9):
            raise ValueError(
                f"dt={self.dt} exceeds the stability guard {stable_dt(p)}"
            )


def stable_dt(p: ModelParams) -> float:
    """Step-size guard 0.1 * min(1 / (lam * force bound), 1 / (gamma + beta
    + lam)).  The first term is infinite when pair coupling is off."""
    pair = p.lam * force_bound(p)
    t1 = math.inf if pair == 0 else 1.0 / pair
    t2 = 1.0 / (p.gamma_damp + p.beta + p.lam)
    return 0.1 * min(t1, t2)


def auto_config(p: ModelParams, t_end: float, scheme: str = "rk4",
                snapshot_stride: int = 1) -> IntegratorConfig:
    """Largest guard-respecting dt that divides t_end evenly."""
    guard = stable_dt(p)
    if t_end == 0:
        return IntegratorConfig(dt=guard, t_end=0.0, scheme=scheme,
                                snapshot_stride=snapshot_stride)
    n = max(1, math.ceil(t_end / guard - 1e-12))
    return IntegratorConfig(dt=t_end / n, t_end=t_end, scheme=scheme,
                            snapshot_stride=snapshot_stride)


# --------------------------------------------------------------------------
# force assembly

def _is_self(state: PhaseEnsemble, source) -> bool:
    # A reference equal in value to the evolving state is self-interaction:
    # the two modes coincide there, bitwise, by sharing this code path.
    if source is None or source is state:
        return True
    return (
        source.positions.shape == state.positions.shape
        and np.array_equal(source.positions, state.positions)
        and np.array_equal(source.velocities, state.velocities)
    )


class _FieldEval:
    """Acceleration of (x, v) batches for one mode, one parameter set."""

    def __init__(self, p: ModelParams, source, self_mode: bool,
                 align_index: str = "j", pair_force: bool = True,
                 debug_checks: bool = False):
        if align_index not in ("j", "i"):
            raise ValueError("align_index must be 'j' or 'i'")
        self.p = p
        self.self_mode = self_mode
        self.align_index = align_index
        self.lam_pair = p.lam if pair_force else 0.0
        self.debug_checks = debug_checks
        self.mc = _moll_const(p)
        if not self_mode:
            self.src_x = source.positions
            self.src_vcut = np.ascontiguousarray(
                velocity_cutoff(source.velocities, p))

    def __call__(self, x, v):
        p = self.p
        if self.self_mode:
            v_cut = np.ascontiguousarray(velocity_cutoff(v, p))
            force, den, num = _fast.self_dynamics_fields(
                x, v_cut, p.c_d, p.epsilon, self.mc, float(p.d))
            own_cut = v_cut
        else:
            force, den, num = _fast.cross_dynamics_fields(
                x, self.src_x, self.src_vcut, p.c_d, p.epsilon,
                self.mc, float(p.d))
            own_cut = None
        if self.align_index == "j":
            u = num / (den + p.delta)[:, None]
        else:
            if own_cut is None:
                own_cut = velocity_cutoff(v, p)
            u = own_cut * (den / (den + p.delta))[:, None]
        if self.debug_checks:
            f_norm = np.sqrt(np.sum(force * force, axis=-1))
            if np.any(self.lam_pair * f_norm >
                      self.lam_pair * force_bound(p) * (1 + 1e-12) + 1e-300):
                raise IntegrationError("interaction force bound violated")
            u_norm = np.sqrt(np.sum(u * u, axis=-1))
            if np.any(p.beta * u_norm > 2 * p.beta * p.r_cut * (1 + 1e-12)):
                raise IntegrationError("alignment force bound violated")
        return -self.lam_pair * force - linear_drift(x, v, p) + p.beta * u


def accelerations(state: PhaseEnsemble, p: ModelParams, source=None,
                  align_index: str = "j", pair_force: bool = True,
                  debug_checks: bool = False) -> np.ndarray:
    """Acceleration of every particle: interaction mean scaled by -lam,
    minus the linear drift, plus beta times the local mean velocity."""
    field = _FieldEval(p, source, _is_self(state, source), align_index,
                       pair_force, debug_checks)
    return field(state.positions, state.velocities)


def acceleration(i: int, state: PhaseEnsemble, p: ModelParams, source=None,
                 align_index: str = "j", pair_force: bool = True) -> np.ndarray:
    """Acceleration of particle i alone.  Evaluates the same sums as the
    full-ensemble call restricted to one query row."""
    if not 0 <= i < state.count:
        raise IndexError(f"particle index {i} out of range 0..{state.count - 1}")
    src = state if _is_self(state, source) else source
    qx = np.ascontiguousarray(state.positions[i:i + 1])
    qv = state.velocities[i:i + 1]
    lam_pair = p.lam if pair_force else 0.0
    mc = _moll_const(p)
    sv_cut = np.ascontiguousarray(velocity_cutoff(src.velocities, p))
    force, den, num = _fast.cross_dynamics_fields(
        qx, src.positions, sv_cut, p.c_d, p.epsilon, mc, float(p.d))
    if align_index == "j":
        u = num / (den + p.delta)[:, None]
    elif align_index == "i":
        u = velocity_cutoff(qv, p) * (den / (den + p.delta))[:, None]
    else:
        raise ValueError("align_index must be 'j' or 'i'")
    out = -lam_pair * force - linear_drift(qx, qv, p) + p.beta * u
    return out[0]


# --------------------------------------------------------------------------
# time stepping

def _check_finite(x, v, time, scheme):
    bad = ~(np.all(np.isfinite(x), axis=1) & np.all(np.isfinite(v), axis=1))
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise IntegrationError(
            f"non-finite state after {scheme} step to t={time}: "
            f"first offending particle {idx}",
            particle_index=idx, time=time,
        )


def step(state: PhaseEnsemble, p: ModelParams, dt: float, source=None,
         scheme: str = "rk4", align_index: str = "j",
         pair_force: bool = True, debug_checks: bool = False) -> PhaseEnsemble:
    """Advance the ensemble by one step.

    Self-interacting mode re-evaluates its own empirical measure at every
    substage; a distinct reference source stays frozen across the substages
    of this step.
    """
    field = _FieldEval(p, source, _is_self(state, source), align_index,
                       pair_force, debug_checks)
    x, v = state.positions, state.velocities
    if scheme == "euler":
        a = field(x, v)
        x1 = x + dt * v
        v1 = v + dt * a
    elif scheme == "rk4":
        k1v = field(x, v)
        k1x = v
        k2x = v + (dt / 2) * k1v
        k2v = field(x + (dt / 2) * k1x, v + (dt / 2) * k1v)
        k3x = v + (dt / 2) * k2v
        k3v = field(x + (dt / 2) * k2x, v + (dt / 2) * k2v)
        k4x = v + dt * k3v
        k4v = field(x + dt * k3x, v + dt * k3v)
        x1 = x + (dt / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v1 = v + (dt / 6) * (k1v + 2 * k2v + 2 * k3v + k4v)
    else:
        raise ValueError(f"scheme must be one of {_SCHEMES}, got {scheme!r}")
    t1 = state.time + dt
    _check_finite(x1, v1, t1, scheme)
    return PhaseEnsemble(x1, v1, time=t1)


def evolve(state: PhaseEnsemble, p: ModelParams, cfg: IntegratorConfig,
           source=None, align_index: str = "j", pair_force: bool = True,
           debug_checks: bool = False) -> list[PhaseEnsemble]:
    """Integrate over the configured horizon and return snapshots.

    Snapshots are taken every ``snapshot_stride`` steps and always include
    the initial and final states.  A distinct reference source is frozen
    for the whole horizon; lockstep advancement belongs to the caller.
    """
    cfg.validate_for(p)
    snaps = [state]
    n = cfg.n_steps
    cur = state
    for k in range(1, n + 1):
        cur = step(cur, p, cfg.dt, source=source, scheme=cfg.scheme,
                   align_index=align_index, pair_force=pair_force,
                   debug_checks=debug_checks)
        if k % cfg.snapshot_stride == 0 or k == n:
            snaps.append(cur)
    return snaps
