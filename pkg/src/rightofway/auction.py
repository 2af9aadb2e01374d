"""Progressive second price auction for one unit of divisible avoidance credit.

Bidders submit (unit price, demand). The auctioneer fills demands in
descending price order, sharing the marginal residual pro rata among
exact price ties, and charges each winner the declared welfare its
presence removes from the others (second-price externality payments).
Equilibria are found by round-robin truthful best responses; an agent
rebids only when the candidate improves its utility by more than eps.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels


@dataclass(frozen=True)
class ValuationParams:
    """Saturating credit valuation v(c) = gamma^n * alpha * (1 - exp(-k c)).

    alpha > 0 is the base value, gamma >= 1 escalates with the encounter
    count n, and k > 0 sets the curvature. This family is strictly
    increasing and strictly concave on [0, 1].
    """

    alpha: float
    gamma: float = 8.0
    k: float = 5.0
    n: int = 0

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma >= 1.0 and self.k > 0 and self.n >= 0):
            raise ValueError("invalid valuation parameters")

    @property
    def scale(self):
        return self.gamma ** self.n * self.alpha


@dataclass(frozen=True)
class Bid:
    """Unit price beta >= 0 and demanded credit quantity in [0, 1]."""

    beta: float
    demand: float

    def __post_init__(self):
        if not (self.beta >= 0.0 and 0.0 <= self.demand <= 1.0):
            raise ValueError("bid must have beta >= 0 and demand in [0, 1]")


@dataclass(frozen=True)
class AuctionOutcome:
    """Equilibrium credits, externality payments, and convergence info."""

    credits: np.ndarray
    payments: np.ndarray
    iterations: int
    converged: bool
    bids: tuple = field(default=())


def valuation(c: float, p: ValuationParams) -> float:
    """Value of credit share c under p; rejects c outside [0, 1]."""
    if not 0.0 <= c <= 1.0:
        raise ValueError("credit must lie in [0, 1]")
    return p.scale * (1.0 - math.exp(-p.k * c))


def marginal_valuation(c: float, p: ValuationParams) -> float:
    """Derivative of the valuation, used for truthful bid prices."""
    return p.scale * p.k * math.exp(-p.k * c)


def allocate(bids) -> np.ndarray:
    """Fill demands by descending price until one unit is assigned.

    Exact price ties at the marginal price share the residual pro rata
    by demand. If total demand is below one unit the remainder stays
    unallocated.
    """
    if len(bids) == 0:
        raise ValueError("allocate needs at least one bid")
    betas = np.array([b.beta for b in bids])
    demands = np.array([b.demand for b in bids])
    return _allocate_arrays(betas, demands)


def _allocate_arrays(betas, demands):
    n = betas.shape[0]
    credits = np.zeros(n)
    order = np.argsort(-betas, kind="stable")
    remaining = 1.0
    i = 0
    while i < n and remaining > 0.0:
        j = i
        while j < n and betas[order[j]] == betas[order[i]]:
            j += 1
        group = order[i:j]
        dsum = float(demands[group].sum())
        if dsum <= remaining:
            credits[group] = demands[group]
            remaining -= dsum
        else:
            credits[group] = remaining * demands[group] / dsum
            remaining = 0.0
        i = j
    return credits


def vcg_payment(bids, i: int) -> float:
    """Externality payment of bidder i: welfare others lose to its demand."""
    betas = np.array([b.beta for b in bids])
    demands = np.array([b.demand for b in bids])
    credits = _allocate_arrays(betas, demands)
    absent = demands.copy()
    absent[i] = 0.0
    credits0 = _allocate_arrays(betas, absent)
    mask = np.arange(len(bids)) != i
    return float(np.sum(betas[mask] * (credits0[mask] - credits[mask])))


def _profile_utility(betas, demands, i, p: ValuationParams) -> float:
    credits = _allocate_arrays(betas, demands)
    absent = demands.copy()
    absent[i] = 0.0
    credits0 = _allocate_arrays(betas, absent)
    mask = np.arange(betas.shape[0]) != i
    payment = float(np.sum(betas[mask] * (credits0[mask] - credits[mask])))
    return p.scale * (1.0 - math.exp(-p.k * credits[i])) - payment


def _demand_grid(grid_step: float) -> np.ndarray:
    m = int(math.floor(1.0 / grid_step + 1e-9))
    zs = np.minimum(np.arange(m + 1) * grid_step, 1.0)
    if zs[-1] < 1.0 - 1e-12:
        zs = np.append(zs, 1.0)
    return zs


def _group_opponents(betas, demands):
    order = np.argsort(-betas, kind="stable")
    gb, gd = [], []
    i = 0
    while i < order.shape[0]:
        j = i
        while j < order.shape[0] and betas[order[j]] == betas[order[i]]:
            j += 1
        gb.append(betas[order[i]])
        gd.append(float(demands[order[i:j]].sum()))
        i = j
    return np.array(gb), np.array(gd)


def _scan_best(zs, opp_betas, opp_demands, p: ValuationParams):
    """Best truthful bid over the demand candidates zs (ties -> smaller z)."""
    if opp_betas.shape[0]:
        gb, gd = _group_opponents(opp_betas, opp_demands)
        w0 = float(np.sum(opp_betas * _allocate_arrays(opp_betas, opp_demands)))
    else:
        gb = np.empty(0)
        gd = np.empty(0)
        w0 = 0.0
    utils = kernels.br_scan(np.ascontiguousarray(zs), gb, gd, w0, p.scale, p.k)
    t = int(np.argmax(utils))  # first maximum, i.e. the smallest demand
    return float(utils[t]), float(zs[t])


def best_response(i: int, others, p: ValuationParams, grid_step: float) -> Bid:
    """Utility-maximizing truthful bid against the fixed bids of the others.

    Scans demands {0, grid_step, ..., 1}; each candidate z is priced at
    the marginal valuation in z. Utility ties resolve to the smaller
    demand. The index i is bookkeeping only; `others` must exclude it.
    """
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    opp_betas = np.array([b.beta for b in others])
    opp_demands = np.array([b.demand for b in others])
    _, z = _scan_best(_demand_grid(grid_step), opp_betas, opp_demands, p)
    return Bid(beta=marginal_valuation(z, p), demand=z)


def _refinement_levels(grid_step: float):
    # Undercutting advances about one grid step per rebid, so a single
    # fine grid needs O(1/grid_step) rounds. Start coarse and refine;
    # the final level is exactly the requested grid.
    levels = []
    g = max(grid_step, 0.02)
    while g > grid_step:
        levels.append(g)
        g /= 4.0
    levels.append(grid_step)
    return levels


def run_auction(valuations, eps: float = 1e-6, grid_step: float = 1e-4,
                max_rounds: int = 200) -> AuctionOutcome:
    """Round-robin best responses from the all-zero bid profile.

    An agent adopts a candidate bid only when it improves its utility by
    more than eps. The demand grid is refined coarse-to-fine down to
    grid_step; convergence means a full quiet round at the finest grid
    within max_rounds total rounds.
    """
    n = len(valuations)
    if n < 2:
        raise ValueError("run_auction needs at least two participants")
    if not eps > 0:
        raise ValueError("eps must be positive")
    betas = np.zeros(n)
    demands = np.zeros(n)
    rounds = 0
    converged = False
    for level, g in enumerate(_refinement_levels(grid_step)):
        zs = _demand_grid(g)
        level_quiet = False
        while rounds < max_rounds:
            rounds += 1
            improved = False
            for i in range(n):
                current = _profile_utility(betas, demands, i, valuations[i])
                mask = np.arange(n) != i
                best_u, best_z = _scan_best(zs, betas[mask], demands[mask],
                                            valuations[i])
                if best_u > current + eps:
                    betas[i] = marginal_valuation(best_z, valuations[i])
                    demands[i] = best_z
                    improved = True
            if not improved:
                level_quiet = True
                break
        if not level_quiet:
            break
    else:
        converged = True
    credits = _allocate_arrays(betas, demands)
    bids = tuple(Bid(float(b), float(d)) for b, d in zip(betas, demands))
    payments = np.array([vcg_payment(bids, i) for i in range(n)])
    return AuctionOutcome(credits=credits, payments=payments,
                          iterations=rounds, converged=converged, bids=bids)


def welfare_oracle(valuations) -> np.ndarray:
    """Welfare-maximizing credit split; independent of the auction path.

    Two agents: closed-form equal-marginal point, clamped to [0, 1].
    Three or more: bisection on the shared marginal value.
    """
    n = len(valuations)
    if n < 2:
        raise ValueError("welfare_oracle needs at least two participants")
    if n == 2:
        p1, p2 = valuations
        c1 = (math.log((p1.scale * p1.k) / (p2.scale * p2.k)) + p2.k) / (p1.k + p2.k)
        c1 = min(1.0, max(0.0, c1))
        return np.array([c1, 1.0 - c1])

    def total(mu):
        return sum(min(1.0, max(0.0, math.log(p.scale * p.k / mu) / p.k))
                   for p in valuations)

    hi = max(p.scale * p.k for p in valuations)
    lo = hi * 1e-16
    while total(lo) < 1.0:
        lo *= 1e-4
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if total(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    mu = math.sqrt(lo * hi)
    return np.array([min(1.0, max(0.0, math.log(p.scale * p.k / mu) / p.k))
                     for p in valuations])
