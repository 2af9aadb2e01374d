"""Numba-compiled twins of the hot kernels in ``_kernels_numpy``.

Same signatures, same semantics; plain loops that nopython mode
compiles well. Compilation results are cached on disk.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _wrap_scalar(theta):
    return math.pi - (math.pi - theta) % TWO_PI


def wrap_angle(theta):
    """Wrap angles to (-pi, pi]. Accepts scalars and arrays."""
    if np.ndim(theta) == 0:
        return _wrap_scalar(float(theta))
    return _wrap_array(np.ascontiguousarray(theta, dtype=np.float64))


@njit(cache=True)
def _wrap_array(theta):
    out = np.empty_like(theta)
    for i in range(theta.shape[0]):
        out[i] = math.pi - (math.pi - theta[i]) % TWO_PI
    return out


@njit(cache=True)
def pair_terms(states, pairs, v, dsq):
    m = pairs.shape[0]
    h = np.empty(m)
    lf = np.empty(m)
    lf2 = np.empty(m)
    gi = np.empty(m)
    gj = np.empty(m)
    for r in range(m):
        i = pairs[r, 0]
        j = pairs[r, 1]
        dx = states[i, 0] - states[j, 0]
        dy = states[i, 1] - states[j, 1]
        ci = math.cos(states[i, 2])
        si = math.sin(states[i, 2])
        cj = math.cos(states[j, 2])
        sj = math.sin(states[j, 2])
        dvx = v * (ci - cj)
        dvy = v * (si - sj)
        h[r] = dx * dx + dy * dy - dsq
        lf[r] = 2.0 * (dx * dvx + dy * dvy)
        lf2[r] = 2.0 * (dvx * dvx + dvy * dvy)
        gi[r] = 2.0 * v * (-dx * si + dy * ci)
        gj[r] = 2.0 * v * (dx * sj - dy * cj)
    return h, lf, lf2, gi, gj


@njit(cache=True)
def lse_weights(h, lam):
    m = h.shape[0]
    zmax = -lam * h[0]
    for r in range(1, m):
        z = -lam * h[r]
        if z > zmax:
            zmax = z
    s = 0.0
    w = np.empty(m)
    for r in range(m):
        w[r] = math.exp(-lam * h[r] - zmax)
        s += w[r]
    htilde = -(zmax + math.log(s)) / lam
    for r in range(m):
        w[r] /= s
    return htilde, w


@njit(cache=True)
def pair_condition(states, omegas, pairs, v, dsq, k1, k2):
    h, lf, lf2, gi, gj = pair_terms(states, pairs, v, dsq)
    m = pairs.shape[0]
    cond = np.empty(m)
    for r in range(m):
        wi = omegas[pairs[r, 0]]
        wj = omegas[pairs[r, 1]]
        cond[r] = lf2[r] + gi[r] * wi + gj[r] * wj + (k1 + k2) * lf[r] + k1 * k2 * h[r]
    return cond


@njit(cache=True)
def rk4_step(states, omegas, v, dt):
    n = states.shape[0]
    out = np.empty_like(states)
    for i in range(n):
        th = states[i, 2]
        w = omegas[i]
        t1 = th
        t2 = th + 0.5 * dt * w
        t3 = th + 0.5 * dt * w
        t4 = th + dt * w
        kx = v * (math.cos(t1) + 2.0 * math.cos(t2) + 2.0 * math.cos(t3) + math.cos(t4))
        ky = v * (math.sin(t1) + 2.0 * math.sin(t2) + 2.0 * math.sin(t3) + math.sin(t4))
        out[i, 0] = states[i, 0] + dt / 6.0 * kx
        out[i, 1] = states[i, 1] + dt / 6.0 * ky
        out[i, 2] = math.pi - (math.pi - (th + dt * w)) % TWO_PI
    return out


@njit(cache=True)
def br_scan(zs, group_betas, group_demands, w0, scale, shape):
    n = zs.shape[0]
    ng = group_betas.shape[0]
    out = np.empty(n)
    for t in range(n):
        z = zs[t]
        bz = scale * shape * math.exp(-shape * z)
        remaining = 1.0
        placed = False
        c_self = 0.0
        welfare = 0.0
        for g in range(ng):
            gb = group_betas[g]
            gd = group_demands[g]
            if not placed and bz > gb:
                c_self = z if z < remaining else remaining
                remaining -= c_self
                placed = True
            if not placed and bz == gb:
                tot = z + gd
                if tot <= remaining:
                    c_self = z
                    welfare += gb * gd
                    remaining -= tot
                else:
                    # tot > remaining >= 0 implies tot > 0
                    c_self = remaining * z / tot
                    welfare += gb * remaining * gd / tot
                    remaining = 0.0
                placed = True
                continue
            fill = gd if gd < remaining else remaining
            welfare += gb * fill
            remaining -= fill
        if not placed:
            c_self = z if z < remaining else remaining
        out[t] = scale * (1.0 - math.exp(-shape * c_self)) - (w0 - welfare)
    return out
