"""Phase-space ensembles and empirical-measure queries.

A :class:`PhaseEnsemble` is an immutable snapshot of particle positions and
velocities.  It doubles as the atomic empirical measure of the collection,
and the query operations below evaluate kernel convolutions against that
measure.  Query points may be a single point ``(d,)`` or a batch ``(q, d)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _fast
from .kernels import ModelParams, bump_normalization, velocity_cutoff


def _frozen_array(a, dtype=float) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PhaseEnsemble:
    """Positions and velocities of a particle collection at one time."""

    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        pos = _frozen_array(self.positions)
        vel = _frozen_array(self.velocities)
        if pos.ndim != 2 or vel.ndim != 2:
            raise ValueError("positions and velocities must be (count, d) arrays")
        if pos.shape != vel.shape:
            raise ValueError(
                f"positions {pos.shape} and velocities {vel.shape} disagree"
            )
        if pos.shape[0] < 1:
            raise ValueError("ensemble needs at least one particle")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise ValueError("ensemble entries must be finite")
        if self.time < 0:
            raise ValueError("time must be >= 0")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class InitialLaw:
    """Isotropic Gaussian product law for positions and velocities."""

    position_mean: np.ndarray
    position_std: float
    velocity_mean: np.ndarray
    velocity_std: float

    def __post_init__(self):
        pm = _frozen_array(np.atleast_1d(self.position_mean))
        vm = _frozen_array(np.atleast_1d(self.velocity_mean))
        if pm.shape != vm.shape or pm.ndim != 1:
            raise ValueError("mean vectors must be 1-d and of equal length")
        if self.position_std <= 0 or self.velocity_std <= 0:
            raise ValueError("standard deviations must be > 0")
        object.__setattr__(self, "position_mean", pm)
        object.__setattr__(self, "velocity_mean", vm)

    @property
    def d(self) -> int:
        return self.position_mean.shape[0]


@dataclass(frozen=True)
class DensityBoundReport:
    """Empirical sup-norm estimates of three density functionals:
    the mollified speed density, the convolved bump-gradient magnitude,
    and the capped inverse-power convolution."""

    sup_first_moment: float
    sup_grad_mollifier_conv: float
    sup_singular_conv: float
    query_count: int

    def __post_init__(self):
        for name in ("sup_first_moment", "sup_grad_mollifier_conv",
                     "sup_singular_conv"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def sample_initial(law: InitialLaw, n: int, seed) -> PhaseEnsemble:
    """Draw n independent particles from the law.  Deterministic given the
    seed: positions are drawn first, then velocities."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    d = law.d
    pos = law.position_mean + law.position_std * rng.standard_normal((n, d))
    vel = law.velocity_mean + law.velocity_std * rng.standard_normal((n, d))
    return PhaseEnsemble(pos, vel, time=0.0)


# --------------------------------------------------------------------------
# empirical-measure queries

def _as_batch(x_query, d):
    x = np.ascontiguousarray(x_query, dtype=float)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.shape[1] != d:
        raise ValueError(f"query dimension {x.shape[1]} != ensemble dimension {d}")
    return x, single


def _moll_const(p: ModelParams) -> float:
    return p.epsilon ** (-p.d) / bump_normalization(p.d)


def local_velocity(x_query, source: PhaseEnsemble, p: ModelParams) -> np.ndarray:
    """Regularized local mean velocity of the source ensemble.

    Ratio of the bump-weighted mean of cut-off velocities to the bump mass
    plus the regularizer delta.  The sum runs over every source particle,
    including one sitting at the query point.  The output norm is strictly
    below 2 * r_cut.
    """
    qx, single = _as_batch(x_query, source.d)
    v_cut = np.ascontiguousarray(velocity_cutoff(source.velocities, p))
    den, num = _fast.cross_moll(qx, source.positions, v_cut,
                                p.epsilon, _moll_const(p))
    u = num / (den + p.delta)[:, None]
    return u[0] if single else u


def convolved_force(x_query, source: PhaseEnsemble, p: ModelParams) -> np.ndarray:
    """Mean regularized interaction force exerted by the source measure."""
    qx, single = _as_batch(x_query, source.d)
    f = _fast.cross_force(qx, source.positions, p.c_d, p.epsilon, float(p.d))
    return f[0] if single else f


def convolved_envelope(x_query, source: PhaseEnsemble, p: ModelParams):
    """Interaction strength times the mean Lipschitz-envelope value."""
    qx, single = _as_batch(x_query, source.d)
    out = p.lam * _fast.cross_envelope(qx, source.positions,
                                       p.c_d, p.epsilon, float(p.d))
    return float(out[0]) if single else out


def convolved_mollifier_grad(x_query, source: PhaseEnsemble, p: ModelParams):
    """Mean bump-gradient magnitude against the source measure."""
    qx, single = _as_batch(x_query, source.d)
    out = _fast.cross_grad_moll(qx, source.positions,
                                p.epsilon, _moll_const(p), float(p.d))
    return float(out[0]) if single else out


def density_bound_estimates(
    source: PhaseEnsemble,
    p: ModelParams,
    query_points=None,
    sigma: float | None = None,
    cap: float | None = None,
    max_queries: int = 4096,
) -> DensityBoundReport:
    """Sup-norm estimates of three empirical density functionals.

    Query points default to the source positions, evenly subsampled to at
    most ``max_queries``.  ``sigma`` is the reporting bandwidth of the speed
    density (default: the cut-off radius).  The inverse-power integrand of
    the third functional is capped at ``cap * epsilon^-d`` (default cap
    3^d, the inner-branch level of the envelope).
    """
    if query_points is None:
        n = source.count
        if n > max_queries:
            idx = np.linspace(0, n - 1, max_queries).astype(np.int64)
            qx = np.ascontiguousarray(source.positions[idx])
        else:
            qx = source.positions
    else:
        qx, _ = _as_batch(query_points, source.d)
        if qx.shape[0] == 0:
            raise ValueError("query_points must be nonempty")
    if sigma is None:
        sigma = p.epsilon
    if cap is None:
        cap = 3.0 ** p.d

    speeds = np.ascontiguousarray(
        np.sqrt(np.sum(source.velocities ** 2, axis=-1))
    )
    sigma_const = sigma ** (-p.d) / bump_normalization(p.d)
    first = _fast.cross_weighted_moll(qx, source.positions, speeds,
                                      sigma, sigma_const)
    grad = _fast.cross_grad_moll(qx, source.positions,
                                 p.epsilon, _moll_const(p), float(p.d))
    sing = _fast.cross_capped_inverse(qx, source.positions,
                                      cap * p.epsilon ** (-p.d), float(p.d))
    return DensityBoundReport(
        sup_first_moment=float(first.max()),
        sup_grad_mollifier_conv=float(grad.max()),
        sup_singular_conv=float(sing.max()),
        query_count=qx.shape[0],
    )


# --------------------------------------------------------------------------
# snapshot files

def write_ensemble_csv(ens: PhaseEnsemble, path) -> None:
    """Write one row per particle with header id,x1..xd,v1..vd.  Floats use
    the shortest round-trip decimal representation."""
    d = ens.d
    header = ["id"] + [f"x{k + 1}" for k in range(d)] + [f"v{k + 1}" for k in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ens.count):
            row = [str(i)]
            row += [repr(float(v)) for v in ens.positions[i]]
            row += [repr(float(v)) for v in ens.velocities[i]]
            w.writerow(row)


def read_ensemble_csv(path, time: float = 0.0) -> PhaseEnsemble:
    """Read a snapshot written by :func:`write_ensemble_csv`."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if not header or header[0] != "id" or (len(header) - 1) % 2 != 0:
            raise ValueError(f"malformed ensemble header in {path}")
        d = (len(header) - 1) // 2
        pos, vel = [], []
        for row in r:
            vals = [float(s) for s in row[1:]]
            pos.append(vals[:d])
            vel.append(vals[d:])
    return PhaseEnsemble(np.array(pos), np.array(vel), time=time)
