"""Exponent intervals, scaling relations, and the decay-rate arithmetic.

The admissible parameter region couples seven exponents through strict open
intervals; the decay rate is the minimum of six linear expressions in them.
Everything here is exact arithmetic on the supplied decimals: no epsilon
slop, endpoints rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ExponentSet:
    """The seven scaling exponents.  gamma_exp is the concentration
    exponent, distinct from the damping strength of ModelParams."""

    theta: float
    vartheta: float
    alpha: float
    kappa: float
    gamma_exp: float
    eta: float
    mu: float

    def __post_init__(self):
        for name in ("theta", "vartheta", "alpha", "kappa", "gamma_exp",
                     "eta", "mu"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


@dataclass(frozen=True)
class Constraint:
    """One open-interval constraint row: lower < value < upper."""

    name: str
    lower: float
    value: float
    upper: float

    @property
    def ok(self) -> bool:
        return self.lower < self.value < self.upper

    @property
    def violations(self) -> list[str]:
        out = []
        if not self.value > self.lower:
            out.append(f"{self.name}_lower")
        if not self.value < self.upper:
            out.append(f"{self.name}_upper")
        return out


N_COMPONENT_NAMES = (
    "1 - 5(d-1)theta - 4kappa - alpha",
    "1 - (3d-1)theta - 4gamma - alpha",
    "1 - (5d+1)theta - 4eta - alpha",
    "1 - (5d+3)theta - 4mu - alpha",
    "kappa - alpha - (d-1)theta",
    "eta - alpha - (d-1)theta",
)


def n_components(d: int, e: ExponentSet) -> tuple[float, ...]:
    """The six expressions whose minimum is the decay rate."""
    th, al = e.theta, e.alpha
    return (
        1 - 5 * (d - 1) * th - 4 * e.kappa - al,
        1 - (3 * d - 1) * th - 4 * e.gamma_exp - al,
        1 - (5 * d + 1) * th - 4 * e.eta - al,
        1 - (5 * d + 3) * th - 4 * e.mu - al,
        e.kappa - al - (d - 1) * th,
        e.eta - al - (d - 1) * th,
    )


def _constraints(d: int, e: ExponentSet) -> list[Constraint]:
    th, al = e.theta, e.alpha
    return [
        Constraint("theta", 0.0, th, 1.0 / (9 * d + 2)),
        Constraint("alpha", th, al, (1 - (9 * d - 3) * th) / 5),
        Constraint("kappa", (d - 1) * th + al, e.kappa,
                   (1 - 5 * (d - 1) * th - al) / 4),
        Constraint("gamma_exp", 0.0, e.gamma_exp,
                   (1 - (3 * d - 1) * th - al) / 4),
        Constraint("eta", (d - 1) * th + al, e.eta,
                   (1 - (5 * d + 1) * th - al) / 4),
        Constraint("mu", 0.0, e.mu, (1 - (5 * d + 3) * th) / 4),
    ]


@dataclass(frozen=True)
class ScalingReport:
    """Validation outcome plus derived quantities.

    ``valid`` reflects the interval constraints only.  A non-positive decay
    rate on an interval-valid set is possible (the mu interval does not
    subtract alpha) and is surfaced in ``discrepancies`` rather than as a
    violation.  N-dependent fields are None until attached.
    """

    d: int
    exponents: ExponentSet
    constraints: list[Constraint]
    violations: list[str]
    n_rate: float
    n_values: tuple[float, ...]
    discrepancies: list[str] = field(default_factory=list)
    n_particles: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    r_cut: float | None = None

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_exponents(d: int, e: ExponentSet) -> ScalingReport:
    """Check every open-interval constraint strictly and report."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    rows = _constraints(d, e)
    violations = [v for row in rows for v in row.violations]
    comps = n_components(d, e)
    n_rate = min(comps)
    discrepancies = []
    if not violations and n_rate <= 0:
        discrepancies.append("n_rate_nonpositive")
    return ScalingReport(d=d, exponents=e, constraints=rows,
                         violations=violations, n_rate=n_rate,
                         n_values=comps, discrepancies=discrepancies)


def compute_n(d: int, e: ExponentSet) -> float:
    """Decay rate: the minimum of the six expressions.  Rejects exponent
    sets that fail interval validation."""
    report = validate_exponents(d, e)
    if not report.valid:
        raise ValueError(
            f"exponent set fails validation: {', '.join(report.violations)}"
        )
    return report.n_rate


def derive_scaling(n: int, theta: float, vartheta: float):
    """Cut-off radius, alignment regularizer, and velocity cutoff radius
    for a particle count: epsilon = n^-theta, delta = 1 / sqrt(vartheta
    ln n), r_cut = 1 / delta."""
    if n < 2:
        raise ValueError(f"particle count must be >= 2, got {n}")
    if theta <= 0 or vartheta <= 0:
        raise ValueError("theta and vartheta must be > 0")
    epsilon = float(n) ** (-theta)
    delta = 1.0 / math.sqrt(vartheta * math.log(n))
    r_cut = 1.0 / delta
    return epsilon, delta, r_cut


def attach_scaling(report: ScalingReport, n: int) -> ScalingReport:
    """Return a copy of the report with the N-dependent fields filled."""
    eps, delta, r_cut = derive_scaling(n, report.exponents.theta,
                                       report.exponents.vartheta)
    return ScalingReport(
        d=report.d, exponents=report.exponents,
        constraints=report.constraints, violations=report.violations,
        n_rate=report.n_rate, n_values=report.n_values,
        discrepancies=report.discrepancies,
        n_particles=n, epsilon=eps, delta=delta, r_cut=r_cut,
    )


def theoretical_bound(n_particles: int, t: float, c_const: float,
                      vartheta: float, n_rate: float) -> float:
    """Deviation-probability bound c * exp((c + c * vartheta * ln N) * t)
    * N^-n.  The constant is user-supplied; the bound is reported, never
    asserted."""
    if n_particles < 2 or t < 0 or c_const <= 0 or vartheta <= 0:
        raise ValueError("need n_particles >= 2, t >= 0, c_const > 0, vartheta > 0")
    ln_n = math.log(n_particles)
    return (c_const * math.exp((c_const + c_const * vartheta * ln_n) * t)
            * float(n_particles) ** (-n_rate))


def vartheta_admissible(d: int, e: ExponentSet, c_const: float, t: float):
    """Report whether vartheta lies below min(n / (c t), theta) for a
    user-supplied constant and horizon.  Returns (admissible, upper)."""
    if c_const <= 0 or t <= 0:
        raise ValueError("c_const and t must be > 0")
    n_rate = compute_n(d, e)
    upper = min(n_rate / (c_const * t), e.theta)
    return 0.0 < e.vartheta < upper, upper
