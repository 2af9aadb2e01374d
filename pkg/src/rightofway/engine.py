"""Event-triggered closed-loop simulation of the credit-allocated safety filter.

Each step computes nominal goal-seeking controls, finds the agent pairs
in conflict under those controls, and assembles the aggregated safety
constraint over the conflicting pairs. An auction over the conflicting
agents runs only when the deficit turns positive or the conflict set
changes; between auctions agents keep their credit shares while their
correction shares track the evolving deficit. The QP controller consumes
the identical constraint and splits the correction by least squares
instead.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import allocation, auction, safety
from .backend import kernels
from .dynamics import step_all, wrap_angle

GOAL_TOL = 0.05
DEFAULT_DURATION = 180.0


class SimulationFault(RuntimeError):
    """Simulation produced a non-finite state."""


@dataclass(frozen=True)
class AgentSpec:
    """Initial pose, goal abscissa, reference line, and base valuation."""

    x0: float
    y0: float
    goal_x: float
    y_ref: float
    alpha: float = 1.0
    theta0: Optional[float] = None  # None: start facing the goal point


@dataclass
class ScenarioConfig:
    agents: list
    controller: str = "auction"
    v: float = 0.1
    d: float = 0.12
    dt: float = 0.033
    duration: float = DEFAULT_DURATION
    stop_at_goals: bool = True
    lam: float = 50.0
    kappa1: float = 1.2
    kappa2: float = 1.2
    kx: float = 0.5
    ky: float = 2.5
    ktheta: float = 2.0
    gamma: float = 8.0
    k: float = 5.0
    eps: float = 1e-6
    grid_step: float = 1e-4
    max_rounds: int = 200
    omega_max: Optional[float] = None

    def validate(self):
        if len(self.agents) < 2:
            raise ValueError("a scenario needs at least two agents")
        if self.controller not in ("auction", "qp"):
            raise ValueError("controller must be 'auction' or 'qp'")
        for name in ("v", "d", "dt", "lam", "kappa1", "kappa2",
                     "kx", "ky", "ktheta", "k", "eps", "grid_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma < 1.0:
            raise ValueError("gamma must be at least 1")
        if self.duration <= 0 or self.max_rounds < 1:
            raise ValueError("duration and max_rounds must be positive")
        if self.omega_max is not None and self.omega_max <= 0:
            raise ValueError("omega_max must be positive when set")
        positions = [(a.x0, a.y0) for a in self.agents]
        if len(set(positions)) != len(positions):
            raise ValueError("agents must start at distinct positions")

    def barrier_params(self) -> safety.BarrierParams:
        return safety.BarrierParams(d=self.d, lam=self.lam,
                                    kappa1=self.kappa1, kappa2=self.kappa2)


@dataclass(frozen=True)
class EventRecord:
    """One auction: trigger instant, participants, bids, and outcome."""

    t: float
    reason: str
    agents: tuple          # 0-based agent indices, ascending
    n: tuple               # encounter counts at bid time
    bids: tuple
    credits: tuple
    payments: tuple
    iterations: int
    converged: bool


@dataclass
class TrajectoryLog:
    """Per-step arrays of one run plus cumulative effort bookkeeping."""

    t: np.ndarray
    states: np.ndarray        # (T, N, 3)
    omega_nom: np.ndarray     # (T, N)
    omega_app: np.ndarray     # (T, N)
    h_tilde: np.ndarray
    deficit: np.ndarray
    active_sets: list
    event_ids: np.ndarray
    effort: np.ndarray        # (T, N), cumulative
    min_dist: np.ndarray
    feasibility_violations: int = 0
    warnings: list = field(default_factory=list)

    @property
    def n_agents(self):
        return self.states.shape[1]

    @property
    def min_h_tilde(self):
        return float(np.min(self.h_tilde))

    @property
    def min_distance(self):
        return float(np.min(self.min_dist))


def nominal_control(state, goal_x: float, y_ref: float, gains) -> float:
    """Goal-seeking angular velocity for one agent.

    The desired heading points along a field pulling toward
    (goal_x, y_ref); the command is proportional in the wrapped heading
    error. gains is (kx, ky, ktheta).
    """
    kx, ky, ktheta = gains
    theta_des = math.atan2(-ky * (state.y - y_ref), kx * (goal_x - state.x))
    return ktheta * wrap_angle(theta_des - state.theta)


def _nominal_all(states, goals_x, y_refs, kx, ky, ktheta):
    theta_des = np.arctan2(-ky * (states[:, 1] - y_refs),
                           kx * (goals_x - states[:, 0]))
    err = np.pi - (np.pi - (theta_des - states[:, 2])) % (2.0 * np.pi)
    return ktheta * err


def trigger_check(s_now: float, s_prev: float, active_now, active_prev):
    """Decide whether a new auction is due and why.

    Triggers when the deficit turns positive, or when the conflict set
    changed and is nonempty. A persistently positive deficit over an
    unchanged set does not re-trigger.
    """
    if s_prev <= 0.0 and s_now > 0.0:
        return True, "deficit-positive"
    if active_now != active_prev and len(active_now) > 0:
        return True, "active-set-change"
    return False, None


def run_scenario(config: ScenarioConfig):
    """Simulate the scenario; returns (TrajectoryLog, list of EventRecord)."""
    config.validate()
    bp = config.barrier_params()
    n = len(config.agents)
    goals_x = np.array([a.goal_x for a in config.agents])
    y_refs = np.array([a.y_ref for a in config.agents])
    alphas = np.array([a.alpha for a in config.agents])
    gains = (config.kx, config.ky, config.ktheta)

    states = np.empty((n, 3))
    for i, a in enumerate(config.agents):
        if a.theta0 is None:
            theta = math.atan2(-config.ky * (a.y0 - a.y_ref),
                               config.kx * (a.goal_x - a.x0))
        else:
            theta = a.theta0
        states[i] = (a.x0, a.y0, wrap_angle(theta))

    all_pairs = np.array(list(itertools.combinations(range(n), 2)), dtype=np.int64)
    dsq = config.d * config.d
    max_steps = max(1, int(round(config.duration / config.dt)))

    events = []
    warnings = []
    feasibility_violations = 0
    n_counts = np.zeros(n, dtype=np.int64)
    held_credits = {}
    event_id = -1
    s_prev = 0.0
    active_prev = frozenset()
    # Agents that reached their goal hold position (the constant-speed
    # model no longer describes them, so they leave the safety machinery;
    # distance monitoring below still covers every pair).
    parked = np.zeros(n, dtype=bool)

    rows_t, rows_states, rows_nom, rows_app = [], [], [], []
    rows_ht, rows_s, rows_active, rows_event = [], [], [], []
    rows_effort, rows_mindist = [], []
    effort = np.zeros(n)

    t = 0.0
    for _ in range(max_steps):
        parked |= np.hypot(states[:, 0] - goals_x,
                           states[:, 1] - y_refs) <= GOAL_TOL
        if config.stop_at_goals and parked.all():
            break
        omega_nom = _nominal_all(states, goals_x, y_refs, *gains)
        omega_nom[parked] = 0.0
        h_all, _, _, _, _ = kernels.pair_terms(states, all_pairs, config.v, dsq)
        min_dist = math.sqrt(max(0.0, float(np.min(h_all)) + dsq))
        moving = [i for i in range(n) if not parked[i]]
        moving_pairs = np.array(list(itertools.combinations(moving, 2)),
                                dtype=np.int64).reshape(-1, 2)
        if moving_pairs.shape[0]:
            cond = kernels.pair_condition(states, omega_nom, moving_pairs,
                                          config.v, dsq, config.kappa1,
                                          config.kappa2)
            active_pairs = tuple(tuple(p) for p, c
                                 in zip(moving_pairs.tolist(), cond) if c < 0.0)
        else:
            active_pairs = ()
        active_agents = frozenset(itertools.chain.from_iterable(active_pairs))
        if active_pairs:
            constraint = safety.assemble_constraint(states, omega_nom,
                                                    active_pairs, config.v, bp)
            s_now = constraint.deficit
            h_tilde = constraint.h_tilde
        else:
            constraint = None
            s_now = 0.0
            h_tilde = safety.lse_aggregate(h_all, bp.lam)

        triggered, reason = trigger_check(s_now, s_prev, active_agents, active_prev)
        if triggered and config.controller == "auction":
            members = sorted(active_agents)
            gap_msg = safety.lse_gap_warning(len(active_pairs), bp)
            if gap_msg:
                warnings.append(f"t={t:.3f}: {gap_msg}")
            vals = [auction.ValuationParams(alpha=float(alphas[i]),
                                            gamma=config.gamma, k=config.k,
                                            n=int(n_counts[i]))
                    for i in members]
            outcome = auction.run_auction(vals, eps=config.eps,
                                          grid_step=config.grid_step,
                                          max_rounds=config.max_rounds)
            if not outcome.converged:
                warnings.append(
                    f"t={t:.3f}: auction hit max_rounds={config.max_rounds} "
                    f"without converging")
            events.append(EventRecord(
                t=t, reason=reason, agents=tuple(members),
                n=tuple(int(n_counts[i]) for i in members),
                bids=outcome.bids,
                credits=tuple(float(c) for c in outcome.credits),
                payments=tuple(float(p) for p in outcome.payments),
                iterations=outcome.iterations, converged=outcome.converged))
            held_credits = {i: float(c) for i, c in zip(members, outcome.credits)}
            for i in members:
                n_counts[i] += 1
            event_id = len(events) - 1
        if not active_agents:
            event_id = -1
            held_credits = {}

        omega_app = omega_nom.copy()
        if constraint is not None and s_now > 0.0:
            if config.controller == "auction":
                members = sorted(active_agents)
                credits = np.array([held_credits.get(i, 0.0) for i in members])
                deltas = allocation.credit_to_correction(credits, s_now)
                for idx, i in enumerate(members):
                    try:
                        omega_app[i] = allocation.synthesize_control(
                            omega_nom[i], constraint.a_row[i], float(deltas[idx]))
                    except allocation.UncontrollableCorrection:
                        feasibility_violations += 1
            else:
                if constraint.degenerate:
                    feasibility_violations += 1
                else:
                    omega_app = allocation.qp_baseline(omega_nom,
                                                       constraint.a_row,
                                                       constraint.b)
        if config.omega_max is not None:
            clipped = np.clip(omega_app, -config.omega_max, config.omega_max)
            if s_now > 0.0:
                truncated = np.nonzero(clipped != omega_app)[0]
                feasibility_violations += int(len(
                    [i for i in truncated if i in active_agents]))
            omega_app = clipped

        effort = effort + np.abs(omega_app - omega_nom) * config.dt
        rows_t.append(t)
        rows_states.append(states.copy())
        rows_nom.append(omega_nom)
        rows_app.append(omega_app)
        rows_ht.append(h_tilde)
        rows_s.append(s_now if constraint is not None else 0.0)
        rows_active.append(tuple(sorted(active_agents)))
        rows_event.append(event_id)
        rows_effort.append(effort.copy())
        rows_mindist.append(min_dist)

        advanced = step_all(states, omega_app, config.v, config.dt)
        advanced[parked] = states[parked]
        states = advanced
        if not np.all(np.isfinite(states)):
            raise SimulationFault(f"non-finite state at t={t + config.dt:.3f}")
        s_prev = s_now
        active_prev = active_agents
        t += config.dt

    log = TrajectoryLog(
        t=np.array(rows_t),
        states=np.array(rows_states),
        omega_nom=np.array(rows_nom),
        omega_app=np.array(rows_app),
        h_tilde=np.array(rows_ht),
        deficit=np.array(rows_s),
        active_sets=rows_active,
        event_ids=np.array(rows_event, dtype=np.int64),
        effort=np.array(rows_effort),
        min_dist=np.array(rows_mindist),
        feasibility_violations=feasibility_violations,
        warnings=warnings,
    )
    return log, events


def effort_summary(log: TrajectoryLog):
    """Final cumulative turning effort per agent and in total (radians)."""
    per_agent = log.effort[-1] if log.effort.size else np.zeros(log.n_agents)
    return {"per_agent": [float(e) for e in per_agent],
            "total": float(np.sum(per_agent))}
