"""Batched pairwise sums over particle ensembles.

Every routine accumulates its j-sums sequentially in ascending index order,
single-threaded, so results are bitwise reproducible and independent of any
caller-side parallelism.  The ``self_*`` variants exploit the symmetry of
the pair terms and visit each unordered pair once; the ``cross_*`` variants
sum a full source ensemble for every query row.  All of them return means
over the source count.

The planar case carries hand-specialized loops (the dominant workload);
generic-dimension fallbacks cover d >= 3.  Both paths share the radial
formulas of the point kernels in ``kernels``: force weight c_d * r^-d
outside the cut-off radius and c_d * eps^-d inside; envelope weight with
constant 3^d c_d and branch radius 3 eps; bump value exp(-1/s) / (Z_d
eps^d) with s = 1 - (r/eps)^2, treated as zero once s <= 1e-12.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


# --------------------------------------------------------------------------
# combined dynamics fields: interaction force mean, bump-mass mean,
# alignment numerator

@njit(cache=True)
def _self_dynamics_fields_2d(x, v_cut, c_d, eps, moll_const):
    n = x.shape[0]
    force = np.zeros((n, 2))
    den = np.zeros(n)
    num = np.zeros((n, 2))
    eps2 = eps * eps
    w_in = c_d / eps2
    m_self = moll_const * math.exp(-1.0)
    for i in range(n):
        xi0 = x[i, 0]
        xi1 = x[i, 1]
        vi0 = v_cut[i, 0]
        vi1 = v_cut[i, 1]
        f0 = 0.0
        f1 = 0.0
        dn = m_self
        n0 = m_self * vi0
        n1 = m_self * vi1
        for j in range(i + 1, n):
            t0 = xi0 - x[j, 0]
            t1 = xi1 - x[j, 1]
            r2 = t0 * t0 + t1 * t1
            if r2 >= eps2:
                w = c_d / r2
                ft0 = w * t0
                ft1 = w * t1
                f0 += ft0
                f1 += ft1
                force[j, 0] -= ft0
                force[j, 1] -= ft1
            else:
                ft0 = w_in * t0
                ft1 = w_in * t1
                f0 += ft0
                f1 += ft1
                force[j, 0] -= ft0
                force[j, 1] -= ft1
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    m = moll_const * math.exp(-1.0 / s)
                    n0 += m * v_cut[j, 0]
                    n1 += m * v_cut[j, 1]
                    num[j, 0] += m * vi0
                    num[j, 1] += m * vi1
                    dn += m
                    den[j] += m
        force[i, 0] += f0
        force[i, 1] += f1
        num[i, 0] += n0
        num[i, 1] += n1
        den[i] += dn
    inv = 1.0 / n
    return force * inv, den * inv, num * inv


@njit(cache=True)
def _self_dynamics_fields_nd(x, v_cut, c_d, eps, moll_const, d_exp):
    n, d = x.shape
    force = np.zeros((n, d))
    den = np.zeros(n)
    num = np.zeros((n, d))
    eps2 = eps * eps
    w_in = c_d * eps ** (-d_exp)
    m_self = moll_const * math.exp(-1.0)
    for i in range(n):
        den[i] += m_self
        for c in range(d):
            num[i, c] += m_self * v_cut[i, c]
        for j in range(i + 1, n):
            r2 = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                r2 += t * t
            if r2 >= eps2:
                w = c_d * math.sqrt(r2) ** (-d_exp)
                m = 0.0
            else:
                w = w_in
                s = 1.0 - r2 / eps2
                m = moll_const * math.exp(-1.0 / s) if s > 1e-12 else 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                f = w * t
                force[i, c] += f
                force[j, c] -= f
                num[i, c] += m * v_cut[j, c]
                num[j, c] += m * v_cut[i, c]
            den[i] += m
            den[j] += m
    inv = 1.0 / n
    return force * inv, den * inv, num * inv


@njit(cache=True)
def _cross_dynamics_fields_2d(qx, sx, sv_cut, c_d, eps, moll_const):
    nq = qx.shape[0]
    m_src = sx.shape[0]
    force = np.zeros((nq, 2))
    den = np.zeros(nq)
    num = np.zeros((nq, 2))
    eps2 = eps * eps
    w_in = c_d / eps2
    for i in range(nq):
        xi0 = qx[i, 0]
        xi1 = qx[i, 1]
        f0 = 0.0
        f1 = 0.0
        dn = 0.0
        n0 = 0.0
        n1 = 0.0
        for j in range(m_src):
            t0 = xi0 - sx[j, 0]
            t1 = xi1 - sx[j, 1]
            r2 = t0 * t0 + t1 * t1
            if r2 >= eps2:
                w = c_d / r2
                f0 += w * t0
                f1 += w * t1
            else:
                f0 += w_in * t0
                f1 += w_in * t1
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    m = moll_const * math.exp(-1.0 / s)
                    n0 += m * sv_cut[j, 0]
                    n1 += m * sv_cut[j, 1]
                    dn += m
        force[i, 0] = f0
        force[i, 1] = f1
        num[i, 0] = n0
        num[i, 1] = n1
        den[i] = dn
    inv = 1.0 / m_src
    return force * inv, den * inv, num * inv


@njit(cache=True)
def _cross_dynamics_fields_nd(qx, sx, sv_cut, c_d, eps, moll_const, d_exp):
    nq, d = qx.shape
    m_src = sx.shape[0]
    force = np.zeros((nq, d))
    den = np.zeros(nq)
    num = np.zeros((nq, d))
    eps2 = eps * eps
    w_in = c_d * eps ** (-d_exp)
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            if r2 >= eps2:
                w = c_d * math.sqrt(r2) ** (-d_exp)
                m = 0.0
            else:
                w = w_in
                s = 1.0 - r2 / eps2
                m = moll_const * math.exp(-1.0 / s) if s > 1e-12 else 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                force[i, c] += w * t
                num[i, c] += m * sv_cut[j, c]
            den[i] += m
    inv = 1.0 / m_src
    return force * inv, den * inv, num * inv


def self_dynamics_fields(x, v_cut, c_d, eps, moll_const, d_exp):
    if x.shape[1] == 2:
        return _self_dynamics_fields_2d(x, v_cut, c_d, eps, moll_const)
    return _self_dynamics_fields_nd(x, v_cut, c_d, eps, moll_const, d_exp)


def cross_dynamics_fields(qx, sx, sv_cut, c_d, eps, moll_const, d_exp):
    if qx.shape[1] == 2:
        return _cross_dynamics_fields_2d(qx, sx, sv_cut, c_d, eps, moll_const)
    return _cross_dynamics_fields_nd(qx, sx, sv_cut, c_d, eps, moll_const, d_exp)


# --------------------------------------------------------------------------
# interaction force alone

@njit(cache=True)
def _self_force_2d(x, c_d, eps):
    n = x.shape[0]
    force = np.zeros((n, 2))
    eps2 = eps * eps
    w_in = c_d / eps2
    for i in range(n):
        xi0 = x[i, 0]
        xi1 = x[i, 1]
        f0 = 0.0
        f1 = 0.0
        for j in range(i + 1, n):
            t0 = xi0 - x[j, 0]
            t1 = xi1 - x[j, 1]
            r2 = t0 * t0 + t1 * t1
            w = c_d / r2 if r2 >= eps2 else w_in
            ft0 = w * t0
            ft1 = w * t1
            f0 += ft0
            f1 += ft1
            force[j, 0] -= ft0
            force[j, 1] -= ft1
        force[i, 0] += f0
        force[i, 1] += f1
    return force * (1.0 / n)


@njit(cache=True)
def _self_force_nd(x, c_d, eps, d_exp):
    n, d = x.shape
    force = np.zeros((n, d))
    eps2 = eps * eps
    w_in = c_d * eps ** (-d_exp)
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                r2 += t * t
            w = c_d * math.sqrt(r2) ** (-d_exp) if r2 >= eps2 else w_in
            for c in range(d):
                f = w * (x[i, c] - x[j, c])
                force[i, c] += f
                force[j, c] -= f
    return force * (1.0 / n)


@njit(cache=True)
def _cross_force_2d(qx, sx, c_d, eps):
    nq = qx.shape[0]
    m_src = sx.shape[0]
    force = np.zeros((nq, 2))
    eps2 = eps * eps
    w_in = c_d / eps2
    for i in range(nq):
        xi0 = qx[i, 0]
        xi1 = qx[i, 1]
        f0 = 0.0
        f1 = 0.0
        for j in range(m_src):
            t0 = xi0 - sx[j, 0]
            t1 = xi1 - sx[j, 1]
            r2 = t0 * t0 + t1 * t1
            w = c_d / r2 if r2 >= eps2 else w_in
            f0 += w * t0
            f1 += w * t1
        force[i, 0] = f0
        force[i, 1] = f1
    return force * (1.0 / m_src)


@njit(cache=True)
def _cross_force_nd(qx, sx, c_d, eps, d_exp):
    nq, d = qx.shape
    m_src = sx.shape[0]
    force = np.zeros((nq, d))
    eps2 = eps * eps
    w_in = c_d * eps ** (-d_exp)
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            w = c_d * math.sqrt(r2) ** (-d_exp) if r2 >= eps2 else w_in
            for c in range(d):
                force[i, c] += w * (qx[i, c] - sx[j, c])
    return force * (1.0 / m_src)


def self_force(x, c_d, eps, d_exp):
    if x.shape[1] == 2:
        return _self_force_2d(x, c_d, eps)
    return _self_force_nd(x, c_d, eps, d_exp)


def cross_force(qx, sx, c_d, eps, d_exp):
    if qx.shape[1] == 2:
        return _cross_force_2d(qx, sx, c_d, eps)
    return _cross_force_nd(qx, sx, c_d, eps, d_exp)


# --------------------------------------------------------------------------
# Lipschitz-envelope means (even kernel; j = i contributes the inner value)

@njit(cache=True)
def _self_envelope(x, c_d, eps, d_exp):
    n, d = x.shape
    out = np.zeros(n)
    cq = 3.0 ** d_exp * c_d
    w_in = cq * eps ** (-d_exp)
    r_br2 = 9.0 * eps * eps
    for i in range(n):
        out[i] += w_in
        for j in range(i + 1, n):
            r2 = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                r2 += t * t
            if r2 >= r_br2:
                w = cq / r2 if d == 2 else cq * math.sqrt(r2) ** (-d_exp)
            else:
                w = w_in
            out[i] += w
            out[j] += w
    return out * (1.0 / n)


@njit(cache=True)
def _cross_envelope(qx, sx, c_d, eps, d_exp):
    nq, d = qx.shape
    m_src = sx.shape[0]
    out = np.zeros(nq)
    cq = 3.0 ** d_exp * c_d
    w_in = cq * eps ** (-d_exp)
    r_br2 = 9.0 * eps * eps
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            if r2 >= r_br2:
                w = cq / r2 if d == 2 else cq * math.sqrt(r2) ** (-d_exp)
            else:
                w = w_in
            out[i] += w
    return out * (1.0 / m_src)


def self_envelope(x, c_d, eps, d_exp):
    return _self_envelope(x, c_d, eps, d_exp)


def cross_envelope(qx, sx, c_d, eps, d_exp):
    return _cross_envelope(qx, sx, c_d, eps, d_exp)


# --------------------------------------------------------------------------
# bump-gradient magnitude means (even kernel; j = i contributes zero)

@njit(cache=True)
def _self_grad_moll(x, eps, moll_const):
    n = x.shape[0]
    d = x.shape[1]
    out = np.zeros(n)
    eps2 = eps * eps
    for i in range(n):
        for j in range(i + 1, n):
            r2 = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                r2 += t * t
            if r2 < eps2:
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    g = (2.0 * math.sqrt(r2) / (eps2 * s * s)) \
                        * moll_const * math.exp(-1.0 / s)
                    out[i] += g
                    out[j] += g
    return out * (1.0 / n)


@njit(cache=True)
def _cross_grad_moll(qx, sx, eps, moll_const):
    nq = qx.shape[0]
    d = qx.shape[1]
    m_src = sx.shape[0]
    out = np.zeros(nq)
    eps2 = eps * eps
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            if r2 < eps2:
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    out[i] += (2.0 * math.sqrt(r2) / (eps2 * s * s)) \
                        * moll_const * math.exp(-1.0 / s)
    return out * (1.0 / m_src)


def self_grad_moll(x, eps, moll_const, d_exp=None):
    return _self_grad_moll(x, eps, moll_const)


def cross_grad_moll(qx, sx, eps, moll_const, d_exp=None):
    return _cross_grad_moll(qx, sx, eps, moll_const)


# --------------------------------------------------------------------------
# bump-mass mean and alignment numerator

@njit(cache=True)
def _self_moll(x, v_cut, eps, moll_const):
    n, d = x.shape
    den = np.zeros(n)
    num = np.zeros((n, d))
    eps2 = eps * eps
    m_self = moll_const * math.exp(-1.0)
    for i in range(n):
        den[i] += m_self
        for c in range(d):
            num[i, c] += m_self * v_cut[i, c]
        for j in range(i + 1, n):
            r2 = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                r2 += t * t
            if r2 < eps2:
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    m = moll_const * math.exp(-1.0 / s)
                    for c in range(d):
                        num[i, c] += m * v_cut[j, c]
                        num[j, c] += m * v_cut[i, c]
                    den[i] += m
                    den[j] += m
    inv = 1.0 / n
    return den * inv, num * inv


@njit(cache=True)
def _cross_moll_2d(qx, sx, sv_cut, eps, moll_const):
    nq = qx.shape[0]
    m_src = sx.shape[0]
    den = np.zeros(nq)
    num = np.zeros((nq, 2))
    eps2 = eps * eps
    for i in range(nq):
        xi0 = qx[i, 0]
        xi1 = qx[i, 1]
        dn = 0.0
        n0 = 0.0
        n1 = 0.0
        for j in range(m_src):
            t0 = xi0 - sx[j, 0]
            t1 = xi1 - sx[j, 1]
            r2 = t0 * t0 + t1 * t1
            if r2 < eps2:
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    m = moll_const * math.exp(-1.0 / s)
                    n0 += m * sv_cut[j, 0]
                    n1 += m * sv_cut[j, 1]
                    dn += m
        den[i] = dn
        num[i, 0] = n0
        num[i, 1] = n1
    inv = 1.0 / m_src
    return den * inv, num * inv


@njit(cache=True)
def _cross_moll_nd(qx, sx, sv_cut, eps, moll_const):
    nq, d = qx.shape
    m_src = sx.shape[0]
    den = np.zeros(nq)
    num = np.zeros((nq, d))
    eps2 = eps * eps
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            if r2 < eps2:
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    m = moll_const * math.exp(-1.0 / s)
                    for c in range(d):
                        num[i, c] += m * sv_cut[j, c]
                    den[i] += m
    inv = 1.0 / m_src
    return den * inv, num * inv


def self_moll(x, v_cut, eps, moll_const):
    return _self_moll(x, v_cut, eps, moll_const)


def cross_moll(qx, sx, sv_cut, eps, moll_const):
    if qx.shape[1] == 2:
        return _cross_moll_2d(qx, sx, sv_cut, eps, moll_const)
    return _cross_moll_nd(qx, sx, sv_cut, eps, moll_const)


# --------------------------------------------------------------------------
# scalar-weighted bump mean and capped inverse-power mean

@njit(cache=True)
def _cross_weighted_moll(qx, sx, weights, eps, moll_const):
    nq = qx.shape[0]
    d = qx.shape[1]
    m_src = sx.shape[0]
    out = np.zeros(nq)
    eps2 = eps * eps
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            if r2 < eps2:
                s = 1.0 - r2 / eps2
                if s > 1e-12:
                    out[i] += weights[j] * moll_const * math.exp(-1.0 / s)
    return out * (1.0 / m_src)


@njit(cache=True)
def _cross_capped_inverse(qx, sx, cap_value, d_exp):
    nq = qx.shape[0]
    d = qx.shape[1]
    m_src = sx.shape[0]
    out = np.zeros(nq)
    for i in range(nq):
        for j in range(m_src):
            r2 = 0.0
            for c in range(d):
                t = qx[i, c] - sx[j, c]
                r2 += t * t
            if r2 > 0.0:
                w = 1.0 / r2 if d == 2 else math.sqrt(r2) ** (-d_exp)
                if w > cap_value:
                    w = cap_value
            else:
                w = cap_value
            out[i] += w
    return out * (1.0 / m_src)


def cross_weighted_moll(qx, sx, weights, eps, moll_const):
    return _cross_weighted_moll(qx, sx, weights, eps, moll_const)


def cross_capped_inverse(qx, sx, cap_value, d_exp):
    return _cross_capped_inverse(qx, sx, cap_value, d_exp)
