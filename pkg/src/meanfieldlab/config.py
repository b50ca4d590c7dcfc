"""Run configuration: flat ``key = value`` files plus inline overrides.

Parse, validate, freeze: a config that passes validation is immutable for
the run.  Unknown keys, duplicate keys, type mismatches and constraint
breaches are hard errors carrying the key name and line number.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .ensemble import InitialLaw
from .kernels import ModelParams
from .scaling import ExponentSet


class ConfigError(ValueError):
    pass


# key -> (type tag, default, help line)
SCHEMA = {
    "d": ("int", 2, "spatial dimension, >= 2"),
    "lam": ("float", 1.0, "interaction strength, >= 0"),
    "beta": ("float", 1.0, "alignment strength, >= 0"),
    "gamma_damp": ("float", 1.0, "damping strength, > 0"),
    "c_d": ("float", 1.0, "interaction force normalization, > 0"),
    "epsilon": ("float", 0.5, "spatial cut-off radius, > 0 (ignored when use_scaling)"),
    "delta": ("float", 0.5, "alignment regularizer, > 0 (ignored when use_scaling)"),
    "r_cut": ("float", 2.0, "velocity cutoff radius, > 0 (ignored when use_scaling)"),
    "theta": ("float", 0.04, "cut-off scaling exponent, in (0, 1)"),
    "vartheta": ("float", 0.02, "regularizer scaling exponent, in (0, 1)"),
    "alpha": ("float", 0.06, "deviation threshold exponent, in (0, 1)"),
    "kappa": ("float", 0.12, "interaction-set exponent, in (0, 1)"),
    "gamma_exp": ("float", 0.05, "envelope-set exponent, in (0, 1)"),
    "eta": ("float", 0.12, "alignment-set exponent, in (0, 1)"),
    "mu": ("float", 0.05, "gradient-set exponent, in (0, 1)"),
    "dt": ("float", 0.0, "step size; 0 derives it from the stability guard"),
    "t_end": ("float", 0.5, "integration horizon, >= 0"),
    "scheme": ("choice:rk4,euler", "rk4", "time integrator"),
    "snapshot_stride": ("int", 1, "steps between snapshots, >= 1"),
    "position_mean": ("vector", (0.0,), "initial position mean (comma list or scalar)"),
    "position_std": ("float", 1.0, "initial position std, > 0"),
    "velocity_mean": ("vector", (0.0,), "initial velocity mean (comma list or scalar)"),
    "velocity_std": ("float", 1.0, "initial velocity std, > 0"),
    "n": ("int", 64, "particle count for single-count commands, >= 1"),
    "n_list": ("ints", (64, 128, 256, 512), "particle-count ladder"),
    "trials": ("int", 50, "Monte Carlo trials per count, >= 1"),
    "m_factor": ("int", 16, "reference ensemble size multiplier, >= 1"),
    "m_oracle_factor": ("int", 64, "oracle ensemble size multiplier, >= 1"),
    "master_seed": ("int", 0, "root seed for counter-based trial seeds, >= 0"),
    "output_dir": ("str", "runs", "artifact directory"),
    "threads": ("int", 0, "worker processes; 0 = auto (env MEANFIELD_THREADS overrides)"),
    "t_eval": ("float", 0.0, "evaluation time for set probabilities / estimates, >= 0"),
    "which": ("choice:kappa,gamma,eta,mu", "kappa", "deviation set to probe"),
    "local_velocity_index": ("choice:j,i", "j", "alignment numerator velocity index"),
    "c_const": ("float", 1.0, "generic constant for reported bounds, > 0"),
    "use_scaling": ("bool", True, "derive epsilon/delta/r_cut from N and the exponents"),
    "write_trials": ("bool", True, "write per-trial deviation CSVs for couple"),
}


def _coerce(key: str, tag: str, raw: str, where: str):
    def fail(msg):
        raise ConfigError(f"{where}: key '{key}': {msg}")

    if tag == "int":
        try:
            return int(raw)
        except ValueError:
            fail(f"cannot parse {raw!r} as an integer")
    if tag == "float":
        try:
            return float(raw)
        except ValueError:
            fail(f"cannot parse {raw!r} as a number")
    if tag == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        fail(f"cannot parse {raw!r} as a boolean")
    if tag == "str":
        return raw
    if tag == "vector":
        try:
            return tuple(float(s) for s in raw.split(","))
        except ValueError:
            fail(f"cannot parse {raw!r} as a comma list of numbers")
    if tag == "ints":
        try:
            return tuple(int(s) for s in raw.split(","))
        except ValueError:
            fail(f"cannot parse {raw!r} as a comma list of integers")
    if tag.startswith("choice:"):
        choices = tag.split(":", 1)[1].split(",")
        if raw not in choices:
            fail(f"must be one of {choices}, got {raw!r}")
        return raw
    raise AssertionError(f"unknown schema tag {tag}")


@dataclass(frozen=True)
class RunConfig:
    d: int
    lam: float
    beta: float
    gamma_damp: float
    c_d: float
    epsilon: float
    delta: float
    r_cut: float
    theta: float
    vartheta: float
    alpha: float
    kappa: float
    gamma_exp: float
    eta: float
    mu: float
    dt: float
    t_end: float
    scheme: str
    snapshot_stride: int
    position_mean: tuple
    position_std: float
    velocity_mean: tuple
    velocity_std: float
    n: int
    n_list: tuple
    trials: int
    m_factor: int
    m_oracle_factor: int
    master_seed: int
    output_dir: str
    threads: int
    t_eval: float
    which: str
    local_velocity_index: str
    c_const: float
    use_scaling: bool
    write_trials: bool

    def to_params(self) -> ModelParams:
        return ModelParams(d=self.d, lam=self.lam, beta=self.beta,
                           gamma_damp=self.gamma_damp, c_d=self.c_d,
                           epsilon=self.epsilon, delta=self.delta,
                           r_cut=self.r_cut)

    def to_law(self) -> InitialLaw:
        def widen(vec):
            if len(vec) == 1:
                return tuple(vec) * self.d
            if len(vec) != self.d:
                raise ConfigError(
                    f"mean vector length {len(vec)} does not match d={self.d}"
                )
            return vec

        return InitialLaw(position_mean=widen(self.position_mean),
                          position_std=self.position_std,
                          velocity_mean=widen(self.velocity_mean),
                          velocity_std=self.velocity_std)

    def to_exponents(self) -> ExponentSet:
        return ExponentSet(theta=self.theta, vartheta=self.vartheta,
                           alpha=self.alpha, kappa=self.kappa,
                           gamma_exp=self.gamma_exp, eta=self.eta, mu=self.mu)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _validate(values: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(values["d"] >= 2, f"d must be >= 2, got {values['d']}")
    need(values["lam"] >= 0, "lam must be >= 0")
    need(values["beta"] >= 0, "beta must be >= 0")
    for key in ("gamma_damp", "c_d", "epsilon", "delta", "r_cut",
                "position_std", "velocity_std", "c_const"):
        need(values[key] > 0, f"{key} must be > 0, got {values[key]}")
    for key in ("theta", "vartheta", "alpha", "kappa", "gamma_exp", "eta", "mu"):
        need(0 < values[key] < 1, f"{key} must lie in (0, 1), got {values[key]}")
    for key in ("dt", "t_end", "t_eval"):
        need(values[key] >= 0, f"{key} must be >= 0, got {values[key]}")
    for key in ("n", "trials", "m_factor", "m_oracle_factor", "snapshot_stride"):
        need(values[key] >= 1, f"{key} must be >= 1, got {values[key]}")
    need(values["master_seed"] >= 0, "master_seed must be >= 0")
    need(values["threads"] >= 0, "threads must be >= 0")
    need(len(values["n_list"]) >= 1, "n_list must be nonempty")
    need(all(x >= 1 for x in values["n_list"]), "n_list entries must be >= 1")


def parse_config(path=None, overrides=()) -> RunConfig:
    """Build a frozen RunConfig from an optional file plus ``key=value``
    override strings (later overrides win; file duplicates are errors)."""
    values = {key: default for key, (_, default, _) in SCHEMA.items()}

    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        seen = {}
        for lineno, raw_line in enumerate(lines, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            where = f"{path}:{lineno}"
            if key not in SCHEMA:
                raise ConfigError(f"{where}: unknown key '{key}'")
            if key in seen:
                raise ConfigError(
                    f"{where}: duplicate key '{key}' (first set on line {seen[key]})"
                )
            if raw == "":
                raise ConfigError(f"{where}: key '{key}': empty value")
            seen[key] = lineno
            values[key] = _coerce(key, SCHEMA[key][0], raw, where)

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected KEY=VALUE")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"override: unknown key '{key}'")
        values[key] = _coerce(key, SCHEMA[key][0], raw, "override")

    _validate(values)
    return RunConfig(**values)


def schema_help() -> str:
    """One line per config key: name, default, description."""
    lines = ["config keys (key = value file, or --set KEY=VALUE):"]
    for key, (tag, default, text) in SCHEMA.items():
        if isinstance(default, tuple):
            shown = ",".join(str(v) for v in default)
        else:
            shown = str(default)
        lines.append(f"  {key:<22} default {shown:<18} {text}")
    return "\n".join(lines)
