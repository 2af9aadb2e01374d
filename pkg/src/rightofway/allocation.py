"""From auction credits to concrete controls, plus the QP baseline filter.

Credits are turned into per-agent correction shares that always sum to
the deficit, each share is realized with the minimum-norm control change
that meets it exactly, and ``qp_baseline`` provides the impartial
least-squares filter both controllers are compared against.
"""

from dataclasses import dataclass

import numpy as np

UNCONTROLLABLE_NORM = 1e-9


class UncontrollableCorrection(RuntimeError):
    """A required correction has no control authority to act through."""


@dataclass(frozen=True)
class CorrectionAssignment:
    """One agent's assigned correction share and the resulting control."""

    agent: int
    delta: float
    applied_control: float


def credit_to_correction(credits, deficit: float) -> np.ndarray:
    """Split the deficit into shares inversely proportional to credit.

    delta_i = (1 - c_i) * S / sum_j (1 - c_j). Full credit means zero
    share; the shares always sum to S. With n >= 2 and sum(c) <= 1 the
    denominator is at least n - 1, so the split is always defined. A
    single participant takes the whole deficit.
    """
    c = np.asarray(credits, dtype=np.float64)
    if c.size == 0:
        raise ValueError("credit_to_correction needs at least one agent")
    if deficit < 0.0:
        raise ValueError("deficit must be nonnegative (caller clamps)")
    if c.size == 1:
        return np.array([float(deficit)])
    slack = 1.0 - c
    return slack * (deficit / float(slack.sum()))


def synthesize_control(nominal: float, a_i, delta: float) -> float:
    """Minimum-norm control meeting a_i . (u - nominal) = delta exactly.

    a_i is the agent's entries of the constraint row; for the unicycle
    it is a single scalar and the update is nominal + delta / a_i.
    """
    a = np.atleast_1d(np.asarray(a_i, dtype=np.float64))
    norm_sq = float(np.dot(a, a))
    if delta == 0.0:
        return float(nominal)
    if norm_sq < UNCONTROLLABLE_NORM ** 2:
        raise UncontrollableCorrection(
            f"correction {delta:g} requested with |a_i| = {np.sqrt(norm_sq):g}")
    if a.size == 1:
        return float(nominal) + float(delta) / float(a[0])
    raise ValueError("scalar-control agents expected")


def synthesize_control_vector(nominal, a_i, delta: float) -> np.ndarray:
    """Vector-control variant: nominal + a_i^T delta / (a_i . a_i)."""
    u0 = np.asarray(nominal, dtype=np.float64)
    a = np.asarray(a_i, dtype=np.float64)
    norm_sq = float(np.dot(a, a))
    if delta == 0.0:
        return u0.copy()
    if norm_sq < UNCONTROLLABLE_NORM ** 2:
        raise UncontrollableCorrection(
            f"correction {delta:g} requested with |a_i| = {np.sqrt(norm_sq):g}")
    return u0 + a * (float(delta) / norm_sq)


def qp_baseline(nominal, a_row, b: float) -> np.ndarray:
    """Least-squares safety filter for a single affine constraint.

    Returns the minimizer of sum |u - nominal|^2 subject to
    a_row . u >= b: nominal itself when already feasible, otherwise the
    projection nominal + a_row^T (b - a_row . nominal) / |a_row|^2.
    """
    u0 = np.asarray(nominal, dtype=np.float64)
    a = np.asarray(a_row, dtype=np.float64)
    slack = float(np.dot(a, u0)) - float(b)
    if slack >= 0.0:
        return u0.copy()
    norm_sq = float(np.dot(a, a))
    if norm_sq < UNCONTROLLABLE_NORM ** 2:
        raise UncontrollableCorrection(
            f"violated constraint with |a_row| = {np.sqrt(norm_sq):g}")
    return u0 + a * (-slack / norm_sq)
