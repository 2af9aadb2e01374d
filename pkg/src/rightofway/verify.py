"""Independent numerical oracles behind the ``verify`` CLI subcommand.

Each suite re-derives a quantity by a route the implementation does not
use (finite differences along the flow, closed-form welfare optima,
projected-gradient minimization, direct summation) and reports the worst
disagreement.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import allocation, auction, safety
from .backend import kernels

SUITES = ("lie", "lse", "auction", "qp", "mapping")


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str


def _rel_err(a, b, floor=1e-6):
    return abs(a - b) / max(abs(a), abs(b), floor)


def _random_states(rng, n):
    while True:
        states = np.empty((n, 3))
        states[:, 0] = rng.uniform(-1.2, 1.2, n)
        states[:, 1] = rng.uniform(-1.2, 1.2, n)
        states[:, 2] = rng.uniform(-math.pi, math.pi, n)
        dmin = min(math.hypot(states[i, 0] - states[j, 0],
                              states[i, 1] - states[j, 1])
                   for i in range(n) for j in range(i + 1, n))
        if dmin > 0.06:
            return states


def _htilde(states, pairs, v, params):
    h, _, _, _, _ = kernels.pair_terms(states, pairs, v, params.d ** 2)
    return safety.lse_aggregate(h, params.lam)


def _lf_htilde(states, pairs, v, params):
    h, lf, _, _, _ = kernels.pair_terms(states, pairs, v, params.d ** 2)
    w = safety.softmin_weights(h, params.lam)
    return float(np.dot(w, lf))


def _drift(states, v):
    d = np.zeros_like(states)
    d[:, 0] = v * np.cos(states[:, 2])
    d[:, 1] = v * np.sin(states[:, 2])
    return d


def suite_lie(samples=1000, seed=7, tol=1e-4):
    """Analytic constraint terms vs central finite differences.

    The drift leaves headings unchanged, so the drift flow is the
    straight line x + eps*f(x); a central difference of the aggregate
    barrier along it checks the first drift derivative. The second
    drift derivative and the constraint row are, by definition,
    directional derivatives of the first one, so both are checked by
    central differences of the analytic first derivative along the
    drift and along each agent's control direction. A plain second
    difference of the barrier itself would drown in cancellation noise
    (~ulp/eps^2) next to the 1e-4 relative tolerance.
    """
    rng = np.random.default_rng(seed)
    params = safety.BarrierParams()
    v = 0.1
    eps = 1e-5
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 5))
        states = _random_states(rng, n)
        pairs = np.array(list(itertools.combinations(range(n), 2)),
                         dtype=np.int64)
        nominal = rng.uniform(-2.0, 2.0, n)
        con = safety.assemble_constraint(states, nominal, pairs, v, params)
        h, lf, lf2, _, _ = kernels.pair_terms(states, pairs, v, params.d ** 2)
        w = safety.softmin_weights(h, params.lam)
        lf_bar = float(np.dot(w, lf))
        lf2_bar = float(np.dot(w, lf2)) - params.lam * (
            float(np.dot(w, lf * lf)) - lf_bar ** 2)

        f = _drift(states, v)
        hp = _htilde(states + eps * f, pairs, v, params)
        hm = _htilde(states - eps * f, pairs, v, params)
        worst = max(worst, _rel_err(lf_bar, (hp - hm) / (2 * eps)))
        fd_lf2 = (_lf_htilde(states + eps * f, pairs, v, params)
                  - _lf_htilde(states - eps * f, pairs, v, params)) / (2 * eps)
        worst = max(worst, _rel_err(lf2_bar, fd_lf2, floor=1e-2))
        for i in range(n):
            bump = np.zeros_like(states)
            bump[i, 2] = eps
            fd = (_lf_htilde(states + bump, pairs, v, params)
                  - _lf_htilde(states - bump, pairs, v, params)) / (2 * eps)
            worst = max(worst, _rel_err(float(con.a_row[i]), fd))
    return SuiteResult("lie", worst <= tol, worst, tol,
                       f"max rel err over {samples} random states")


def suite_lse(samples=10000, seed=7, tol=1e-12):
    """Soft minimum stays below the true minimum, within ln(M)/lambda."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(samples):
        m = int(rng.integers(1, 9))
        lam = float(rng.uniform(1.0, 100.0))
        h = rng.uniform(-1.0, 3.0, m)
        ht = safety.lse_aggregate(h, lam)
        gap = float(np.min(h)) - ht
        worst = max(worst, ht - float(np.min(h)))          # must be <= 0
        worst = max(worst, gap - math.log(m) / lam)        # must be <= 0
    return SuiteResult("lse", worst <= tol, worst, tol,
                       f"max bound violation over {samples} random inputs")


def suite_auction(samples=100, seed=7, tol=1e-3, grid_step=1e-4):
    """Auction equilibria against the closed-form welfare optimum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    unconverged = 0
    for _ in range(samples):
        n = int(rng.integers(2, 5))
        k = float(rng.uniform(2.0, 8.0))
        weights = np.exp(rng.uniform(0.0, math.log(100.0), n))
        weights /= weights.min()
        vals = [auction.ValuationParams(alpha=float(wi), gamma=1.0, k=k, n=0)
                for wi in weights]
        out = auction.run_auction(vals, grid_step=grid_step)
        if not out.converged:
            unconverged += 1
        opt = auction.welfare_oracle(vals)
        worst = max(worst, float(np.max(np.abs(out.credits - opt))))
    passed = worst <= max(tol, grid_step) and unconverged == 0
    return SuiteResult("auction", passed, worst, max(tol, grid_step),
                       f"max credit error over {samples} draws, "
                       f"{unconverged} unconverged")


def _qp_projected_gradient(nominal, a, b, iters=4000, eta=0.2):
    u = nominal.copy()
    norm_sq = float(np.dot(a, a))
    for _ in range(iters):
        u = u - eta * 2.0 * (u - nominal)
        slack = float(np.dot(a, u)) - b
        if slack < 0.0:
            u = u - a * (slack / norm_sq)
    return u


def suite_qp(samples=200, seed=7, tol=1e-6):
    """Closed-form safety filter vs projected-gradient minimization."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 6))
        a = rng.normal(size=n)
        while np.linalg.norm(a) < 0.1:
            a = rng.normal(size=n)
        nominal = rng.normal(size=n)
        b = float(np.dot(a, nominal)) + rng.uniform(-1.0, 1.0)
        u = allocation.qp_baseline(nominal, a, b)
        u_ref = _qp_projected_gradient(nominal, a, b)
        worst = max(worst, float(np.max(np.abs(u - u_ref))))
        if float(np.dot(a, u)) < b - 1e-9:
            worst = max(worst, 1.0)
    return SuiteResult("qp", worst <= tol, worst, tol,
                       f"max control error over {samples} random instances")


def suite_mapping(samples=10000, seed=7, tol=1e-12):
    """Correction shares always add up to the deficit."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 7))
        c = rng.dirichlet(np.ones(n)) * rng.uniform(0.0, 1.0)
        s = float(rng.uniform(0.0, 10.0))
        deltas = allocation.credit_to_correction(c, s)
        worst = max(worst, abs(float(np.sum(deltas)) - s))
    return SuiteResult("mapping", worst <= tol, worst, tol,
                       f"max |sum(delta) - S| over {samples} random draws")


def run_suite(name, samples=None, seed=7):
    runners = {
        "lie": (suite_lie, 1000),
        "lse": (suite_lse, 10000),
        "auction": (suite_auction, 100),
        "qp": (suite_qp, 200),
        "mapping": (suite_mapping, 10000),
    }
    if name not in runners:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    fn, default_samples = runners[name]
    return fn(samples=samples or default_samples, seed=seed)
