"""Pointwise kernels of the interacting particle model.

All functions act on the last axis of their input, so a single point of
shape ``(d,)`` and a batch of shape ``(n, d)`` are both accepted.  They are
pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar


@dataclass(frozen=True)
class ModelParams:
    """Physical and regularization constants of the model.

    d          spatial dimension, integer >= 2
    lam        interaction strength (>= 0; zero disables pair coupling)
    beta       alignment strength (>= 0)
    gamma_damp damping strength (> 0)
    c_d        normalization of the interaction force (> 0)
    epsilon    spatial cut-off radius (> 0)
    delta      alignment regularizer added to the local density (> 0)
    r_cut      velocity cutoff radius (> 0)
    """

    d: int
    lam: float = 1.0
    beta: float = 1.0
    gamma_damp: float = 1.0
    c_d: float = 1.0
    epsilon: float = 0.5
    delta: float = 0.5
    r_cut: float = 2.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"d must be an integer >= 2, got {self.d}")
        if self.lam < 0 or self.beta < 0:
            raise ValueError("lam and beta must be >= 0")
        for name in ("gamma_damp", "c_d", "epsilon", "delta", "r_cut"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")


# --------------------------------------------------------------------------
# unit-scale bump normalization and gradient bound, cached per dimension

def _sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    from math import gamma, pi

    return 2.0 * pi ** (d / 2.0) / gamma(d / 2.0)


def _bump(r):
    r = np.asarray(r, dtype=float)
    s = 1.0 - r * r
    out = np.zeros_like(s)
    ok = s > 1e-12
    out[ok] = np.exp(-1.0 / s[ok])
    return out


@lru_cache(maxsize=None)
def bump_normalization(d: int) -> float:
    """Normalization Z_d making the unit bump integrate to one over R^d.

    Computed once per dimension by adaptive radial quadrature to 1e-10
    relative accuracy and cached.
    """
    val, err = quad(
        lambda r: r ** (d - 1) * float(_bump(r)),
        0.0,
        1.0,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    z = _sphere_area(d) * val
    if err > 1e-10 * z:
        raise RuntimeError(f"bump normalization quadrature too loose: {err}")
    return z


@lru_cache(maxsize=None)
def bump_grad_sup(d: int) -> float:
    """Supremum of the gradient magnitude of the normalized unit bump."""
    z = bump_normalization(d)

    def neg_mag(r):
        s = 1.0 - r * r
        if s <= 1e-12:
            return 0.0
        return -(2.0 * r / (s * s)) * np.exp(-1.0 / s) / z

    res = minimize_scalar(neg_mag, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-12})
    return -res.fun


# --------------------------------------------------------------------------
# radial weight profiles (shared with the batched pair routines)

def force_weight(r, p: ModelParams):
    """Radial weight w(r) with force(x) = w(|x|) * x.

    w(r) = c_d / r^d outside the cut-off radius and c_d / epsilon^d inside,
    so the force is continuous across r = epsilon and bounded by
    c_d * epsilon^-(d-1).
    """
    r = np.asarray(r, dtype=float)
    w = np.full(r.shape, p.c_d * p.epsilon ** (-p.d))
    outer = r >= p.epsilon
    w[outer] = p.c_d * r[outer] ** (-float(p.d))
    return w


def envelope_weight(r, p: ModelParams):
    """Radial profile of the force-difference envelope, constant 3^d * c_d."""
    r = np.asarray(r, dtype=float)
    cq = 3.0 ** p.d * p.c_d
    w = np.full(r.shape, cq * p.epsilon ** (-p.d))
    outer = r >= 3.0 * p.epsilon
    w[outer] = cq * r[outer] ** (-float(p.d))
    return w


def mollifier_radial(r, p: ModelParams):
    """Scaled bump value as a function of the radius |x|."""
    r = np.asarray(r, dtype=float)
    z = bump_normalization(p.d)
    u = r / p.epsilon
    s = 1.0 - u * u
    out = np.zeros_like(s)
    ok = s > 1e-12
    out[ok] = np.exp(-1.0 / s[ok]) / (z * p.epsilon ** p.d)
    return out


# --------------------------------------------------------------------------
# point kernels

def newtonian_force(x, p: ModelParams) -> np.ndarray:
    """Regularized interaction force at displacement x.

    Equals c_d * x / |x|^d for |x| >= epsilon and c_d * epsilon^-d * x
    inside, a linear profile replacing the singularity.  Total function:
    x = 0 maps to the zero vector.
    """
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return force_weight(r, p)[..., None] * x


def force_bound(p: ModelParams) -> float:
    """Uniform bound c_d * epsilon^-(d-1) on the regularized force."""
    return p.c_d * p.epsilon ** (-(p.d - 1))


def lipschitz_envelope(x, p: ModelParams):
    """Pointwise Lipschitz envelope q(x) of the regularized force.

    For displacements y with |x - y| < 2 epsilon the force difference is
    bounded by q(x) * |x - y|, with envelope constant 3^d * c_d.
    """
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return envelope_weight(r, p)


def mollifier(x, p: ModelParams):
    """Compactly supported smooth bump, scaled to integrate to one.

    Vanishes for |x| >= epsilon; the unit-scale profile is
    exp(-1/(1-|u|^2)) normalized by the cached per-dimension constant.
    """
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return mollifier_radial(r, p)


def mollifier_grad(x, p: ModelParams) -> np.ndarray:
    """Gradient of the scaled bump; zero outside the support."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    z = bump_normalization(p.d)
    eps2 = p.epsilon * p.epsilon
    s = 1.0 - r2 / eps2
    coef = np.zeros_like(s)
    ok = s > 1e-12
    coef[ok] = (
        -2.0 / (eps2 * s[ok] * s[ok])
        * np.exp(-1.0 / s[ok]) / (z * p.epsilon ** p.d)
    )
    return coef[..., None] * x


def mollifier_grad_bound(p: ModelParams) -> float:
    """Uniform bound on |grad mollifier|: sup of the unit profile times
    epsilon^-(d+1)."""
    return bump_grad_sup(p.d) * p.epsilon ** (-(p.d + 1))


def smoothstep(t):
    """Quintic polynomial 6t^5 - 15t^4 + 10t^3, the C^2 bridge from 0 to 1."""
    t = np.asarray(t, dtype=float)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def cutoff_h(r):
    """C^2 velocity cutoff profile: 1 below r = 1, 0 from r = 2 on.

    The bridge on [1, 2] is 1 - smoothstep(r - 1), which has vanishing
    first and second derivatives at both joins.  Rejects negative input.
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("cutoff_h requires r >= 0")
    out = np.ones_like(arr)
    out[arr >= 2.0] = 0.0
    mid = (arr > 1.0) & (arr < 2.0)
    out[mid] = 1.0 - smoothstep(arr[mid] - 1.0)
    if np.isscalar(r) or np.ndim(r) == 0:
        return float(out)
    return out


def velocity_cutoff(v, p: ModelParams) -> np.ndarray:
    """v scaled by h(|v| / r_cut): identity below the cutoff radius, zero
    past twice the radius, magnitude below 2 * r_cut everywhere."""
    v = np.asarray(v, dtype=float)
    speed = np.sqrt(np.sum(v * v, axis=-1))
    return np.asarray(cutoff_h(speed / p.r_cut))[..., None] * v


def linear_drift(x, v, p: ModelParams) -> np.ndarray:
    """Damping plus confinement drift (gamma + beta) v + lam x.

    Linear, hence Lipschitz with constant max(lam, gamma + beta) in the
    sum-of-norms sense.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (p.gamma_damp + p.beta) * v + p.lam * x
