"""Constant-speed unicycle model and fixed-step RK4 integration.

Each agent has pose (x, y, theta) and is steered only through its
angular velocity omega; forward speed is a fixed parameter. The
control-affine split is drift f = (v cos(theta), v sin(theta), 0) and
control field g = (0, 0, 1).
"""

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels


def wrap_angle(theta):
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


@dataclass(frozen=True)
class AgentState:
    """Planar pose of one agent; theta is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError("agent state must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self):
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class DynamicsParams:
    """Fixed forward speed v (m/s) and integration step dt (s).

    v = 0 (pure rotation) is well defined and allowed here; scenario
    configs still require a strictly positive speed.
    """

    v: float = 0.1
    dt: float = 0.033

    def __post_init__(self):
        if not (self.v >= 0.0 and self.dt > 0.0):
            raise ValueError("v must be nonnegative and dt positive")


def drift(state: AgentState, params: DynamicsParams):
    """Drift derivative (xdot, ydot, thetadot) with zero control."""
    return (params.v * math.cos(state.theta), params.v * math.sin(state.theta), 0.0)


def control_field(state: AgentState):
    """Control direction; omega enters only the heading rate."""
    return (0.0, 0.0, 1.0)


def step(state: AgentState, omega: float, params: DynamicsParams) -> AgentState:
    """Advance one agent a single RK4 step under angular velocity omega."""
    if not math.isfinite(omega):
        raise ValueError("control input must be finite")
    states = state.as_array().reshape(1, 3)
    out = kernels.rk4_step(states, np.array([float(omega)]), params.v, params.dt)
    return AgentState(out[0, 0], out[0, 1], out[0, 2])


def step_all(states: np.ndarray, omegas: np.ndarray, v: float, dt: float) -> np.ndarray:
    """Advance all agents one RK4 step. states is (N, 3), omegas (N,)."""
    if not (np.all(np.isfinite(states)) and np.all(np.isfinite(omegas))):
        raise ValueError("states and controls must be finite")
    return kernels.rk4_step(
        np.ascontiguousarray(states, dtype=np.float64),
        np.ascontiguousarray(omegas, dtype=np.float64),
        float(v),
        float(dt),
    )
