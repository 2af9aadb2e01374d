"""Pure-numpy implementations of the hot kernels.

Reference backend: every function here has a numba twin in
``_kernels_numba`` with the same signature and semantics. Selection
happens in :mod:`rightofway.backend`.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Wrap angles to (-pi, pi]. Works on scalars and arrays."""
    return np.pi - (np.pi - theta) % TWO_PI


def pair_terms(states, pairs, v, dsq):
    """Barrier values and Lie derivatives for the given agent pairs.

    states: (N, 3) poses [x, y, theta]; pairs: (M, 2) int indices.
    Returns (h, lf, lf2, gi, gj), each (M,):
      h    squared-distance barrier  |pi - pj|^2 - d^2
      lf   first drift derivative
      lf2  second drift derivative
      gi   mixed-derivative entry for the first agent of the pair
      gj   same for the second agent
    """
    ii = pairs[:, 0]
    jj = pairs[:, 1]
    dx = states[ii, 0] - states[jj, 0]
    dy = states[ii, 1] - states[jj, 1]
    ci = np.cos(states[ii, 2])
    si = np.sin(states[ii, 2])
    cj = np.cos(states[jj, 2])
    sj = np.sin(states[jj, 2])
    dvx = v * (ci - cj)
    dvy = v * (si - sj)
    h = dx * dx + dy * dy - dsq
    lf = 2.0 * (dx * dvx + dy * dvy)
    lf2 = 2.0 * (dvx * dvx + dvy * dvy)
    gi = 2.0 * v * (-dx * si + dy * ci)
    gj = 2.0 * v * (dx * sj - dy * cj)
    return h, lf, lf2, gi, gj


def lse_weights(h, lam):
    """Soft-minimum of h and its weights.

    Returns (htilde, w) where htilde = -(1/lam) log sum exp(-lam h),
    computed with a max shift so large -lam*h never overflows, and
    w are the softmin weights (sum to 1).
    """
    z = -lam * h
    zmax = np.max(z)
    e = np.exp(z - zmax)
    s = np.sum(e)
    htilde = -(zmax + np.log(s)) / lam
    return htilde, e / s


def pair_condition(states, omegas, pairs, v, dsq, k1, k2):
    """Per-pair activation test value under the given controls.

    cond = lf2 + gi*w_i + gj*w_j + (k1+k2)*lf + k1*k2*h; a pair is in
    conflict when cond < 0.
    """
    h, lf, lf2, gi, gj = pair_terms(states, pairs, v, dsq)
    wi = omegas[pairs[:, 0]]
    wj = omegas[pairs[:, 1]]
    return lf2 + gi * wi + gj * wj + (k1 + k2) * lf + k1 * k2 * h


def rk4_step(states, omegas, v, dt):
    """One fixed-step RK4 update of all unicycle agents.

    Dynamics per agent: xdot = v cos(theta), ydot = v sin(theta),
    thetadot = omega. Headings are re-wrapped to (-pi, pi].
    """
    th = states[:, 2]
    t1 = th
    t2 = th + 0.5 * dt * omegas
    t3 = th + 0.5 * dt * omegas
    t4 = th + dt * omegas
    kx = v * (np.cos(t1) + 2.0 * np.cos(t2) + 2.0 * np.cos(t3) + np.cos(t4))
    ky = v * (np.sin(t1) + 2.0 * np.sin(t2) + 2.0 * np.sin(t3) + np.sin(t4))
    out = np.empty_like(states)
    out[:, 0] = states[:, 0] + dt / 6.0 * kx
    out[:, 1] = states[:, 1] + dt / 6.0 * ky
    out[:, 2] = wrap_angle(th + dt * omegas)
    return out


def br_scan(zs, group_betas, group_demands, w0, scale, shape):
    """Utility of each candidate truthful bid against fixed opponents.

    zs: ascending demand candidates in [0, 1]. group_betas/group_demands:
    opponents merged into equal-price groups, sorted by descending price.
    w0: opponents' declared welfare when this agent is absent. The
    candidate bid prices are the marginal valuation scale*shape*exp(-shape*z).

    Returns utility(z) = v(c_self(z)) - payment(z) for every candidate,
    with allocation filled greedily by price and exact price ties shared
    pro rata by demand.
    """
    bz = scale * shape * np.exp(-shape * zs)
    n = zs.shape[0]
    remaining = np.ones(n)
    c_self = np.zeros(n)
    welfare = np.zeros(n)
    placed = np.zeros(n, dtype=np.bool_)
    for g in range(group_betas.shape[0]):
        gb = group_betas[g]
        gd = group_demands[g]
        above = ~placed & (bz > gb)
        if above.any():
            take = np.minimum(zs[above], remaining[above])
            c_self[above] = take
            remaining[above] -= take
            placed[above] = True
        tie = ~placed & (bz == gb)
        if tie.any():
            tot = zs[tie] + gd
            rem = remaining[tie]
            full = tot <= rem  # pro-rata branch has tot > rem >= 0, so tot > 0 there
            safe_tot = np.where(full, 1.0, tot)
            c_self[tie] = np.where(full, zs[tie], rem * zs[tie] / safe_tot)
            welfare[tie] += np.where(full, gb * gd, gb * rem * gd / safe_tot)
            remaining[tie] = np.where(full, rem - tot, 0.0)
            placed[tie] = True
            notie = ~tie
        else:
            notie = slice(None)
        fill = np.minimum(gd, remaining[notie])
        welfare[notie] += gb * fill
        remaining[notie] -= fill
    rest = ~placed
    if rest.any():
        c_self[rest] = np.minimum(zs[rest], remaining[rest])
    return scale * (1.0 - np.exp(-shape * c_self)) - (w0 - welfare)
