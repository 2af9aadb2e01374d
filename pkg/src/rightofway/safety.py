"""Pairwise distance barriers and the aggregated affine safety constraint.

Safety of a pair (i, j) is h = |pi - pj|^2 - d^2 >= 0. The barrier has
relative degree two for the constant-speed unicycle, so the enforceable
condition involves second derivatives. Individual pair barriers are
aggregated with a log-sum-exp soft minimum, and the result is an affine
condition a_row . u >= b on the stacked angular velocities, plus the
deficit S = b - a_row . u_nom measuring how unsafe the nominal controls
are.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels

# below this a_row norm the constraint has no control authority
DEGENERATE_NORM = 1e-9


@dataclass(frozen=True)
class BarrierParams:
    """Separation distance d, soft-min sharpness lam, class-K gains."""

    d: float = 0.12
    lam: float = 50.0
    kappa1: float = 1.2
    kappa2: float = 1.2

    def __post_init__(self):
        if not (self.d > 0 and self.lam > 0 and self.kappa1 > 0 and self.kappa2 > 0):
            raise ValueError("barrier parameters must be positive")


@dataclass(frozen=True)
class PairDerivatives:
    """Barrier value and Lie derivatives for one agent pair."""

    pair: tuple
    h: float
    lf_h: float
    lf2_h: float
    lglf_i: float
    lglf_j: float


@dataclass(frozen=True)
class SafetyConstraint:
    """Affine condition a_row . u >= b with its deficit under nominal u."""

    a_row: np.ndarray
    b: float
    deficit: float
    h_tilde: float

    @property
    def degenerate(self):
        """True when the row has no usable control authority."""
        return float(np.linalg.norm(self.a_row)) < DEGENERATE_NORM


def pair_barrier(pi, pj, params: BarrierParams) -> float:
    """Squared-distance barrier |pi - pj|^2 - d^2."""
    dx = pi[0] - pj[0]
    dy = pi[1] - pj[1]
    return dx * dx + dy * dy - params.d * params.d


def pair_derivatives(xi, xj, v: float, params: BarrierParams) -> PairDerivatives:
    """Barrier derivatives for the pair (xi, xj) at forward speed v."""
    states = np.array([[xi.x, xi.y, xi.theta], [xj.x, xj.y, xj.theta]])
    pairs = np.array([[0, 1]], dtype=np.int64)
    h, lf, lf2, gi, gj = kernels.pair_terms(states, pairs, float(v), params.d * params.d)
    return PairDerivatives((0, 1), float(h[0]), float(lf[0]), float(lf2[0]),
                           float(gi[0]), float(gj[0]))


def lse_aggregate(h_values, lam: float) -> float:
    """Smooth under-approximation of min(h) at sharpness lam."""
    h = np.asarray(h_values, dtype=np.float64)
    if h.size == 0:
        raise ValueError("lse_aggregate needs at least one barrier value")
    if not lam > 0:
        raise ValueError("lam must be positive")
    htilde, _ = kernels.lse_weights(np.ascontiguousarray(h), float(lam))
    return float(htilde)


def softmin_weights(h_values, lam: float) -> np.ndarray:
    """Chain-rule weights of the soft minimum; positive, sum to 1."""
    h = np.asarray(h_values, dtype=np.float64)
    if h.size == 0:
        raise ValueError("softmin_weights needs at least one barrier value")
    _, w = kernels.lse_weights(np.ascontiguousarray(h), float(lam))
    return np.asarray(w)


def assemble_constraint(states, nominal, pairs, v: float,
                        params: BarrierParams) -> SafetyConstraint:
    """Aggregate the given pairs into one affine condition on controls.

    states: (N, 3) array of poses; nominal: (N,) nominal angular
    velocities; pairs: iterable of (i, j) index pairs entering the
    soft-min aggregate.
    """
    states = np.ascontiguousarray(states, dtype=np.float64)
    nominal = np.ascontiguousarray(nominal, dtype=np.float64)
    pair_arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if pair_arr.shape[0] == 0:
        raise ValueError("assemble_constraint needs at least one pair")
    if not np.all(np.isfinite(states)):
        raise ValueError("states must be finite")
    n = states.shape[0]
    lam = params.lam
    h, lf, lf2, gi, gj = kernels.pair_terms(states, pair_arr, float(v),
                                            params.d * params.d)
    htilde, w = kernels.lse_weights(h, lam)
    lf_bar = float(np.dot(w, lf))
    # curvature of the soft-min pulls the second derivative down
    lf2_bar = float(np.dot(w, lf2)) - lam * (float(np.dot(w, lf * lf)) - lf_bar * lf_bar)
    a_row = np.zeros(n)
    np.add.at(a_row, pair_arr[:, 0], w * gi)
    np.add.at(a_row, pair_arr[:, 1], w * gj)
    b = -lf2_bar - (params.kappa1 + params.kappa2) * lf_bar \
        - params.kappa1 * params.kappa2 * float(htilde)
    deficit = b - float(np.dot(a_row, nominal))
    return SafetyConstraint(a_row=a_row, b=b, deficit=deficit, h_tilde=float(htilde))


def safety_deficit(constraint: SafetyConstraint) -> float:
    """Deficit S of the constraint; S > 0 means nominal controls are unsafe."""
    return constraint.deficit


def active_set(states, nominal, v: float, params: BarrierParams):
    """Agents and pairs whose barrier condition fails under nominal control.

    Evaluates the per-pair condition for every distinct pair and returns
    (frozenset of agent indices, tuple of (i, j) pairs) for pairs with a
    negative condition value.
    """
    states = np.ascontiguousarray(states, dtype=np.float64)
    nominal = np.ascontiguousarray(nominal, dtype=np.float64)
    n = states.shape[0]
    all_pairs = np.array(list(itertools.combinations(range(n), 2)), dtype=np.int64)
    if all_pairs.size == 0:
        return frozenset(), ()
    cond = kernels.pair_condition(states, nominal, all_pairs, float(v),
                                  params.d * params.d, params.kappa1, params.kappa2)
    active = [tuple(p) for p, c in zip(all_pairs.tolist(), cond) if c < 0.0]
    agents = frozenset(itertools.chain.from_iterable(active))
    return agents, tuple(active)


def lse_gap_warning(n_pairs: int, params: BarrierParams):
    """Message when the soft-min gap is large next to the barrier scale."""
    if n_pairs < 2:
        return None
    gap = math.log(n_pairs) / params.lam
    if gap > 0.5 * params.d * params.d:
        return (f"soft-min gap ln(M)/lambda = {gap:.4g} exceeds half the "
                f"barrier scale d^2 = {params.d * params.d:.4g} for M = {n_pairs} "
                f"pairs; consider a larger lambda")
    return None
