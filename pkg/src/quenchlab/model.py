"""
Quenched cubic-quintic model: top-hat heterogeneity, nonlinearity and its
u-derivatives, optional mass source, and the primary front.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ChannelGrid, apply_dell, deriv_x

__all__ = ["ModelSpec", "FrontProfile", "quench_h", "f_eval", "f_derivs",
           "trivial_front", "front_residual"]


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the quenched cubic-quintic nonlinearity.

    f(x, u) = h(x) * u + gamma * u^3 - u^5 with a traveling top-hat
    heterogeneity h of steepness ``delta_steep`` and half-width
    ``K_halfwidth``, advected at quench speed ``c``.  ``chi`` is an optional
    sampled mass-source profile (defaults to zero).
    """

    gamma: float = -1.0
    delta_steep: float = 5.0
    K_halfwidth: float = 10.0 * np.pi
    k: float = 0.5
    c: float = 1.0
    omega: float = 0.0
    chi: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.delta_steep <= 0:
            raise ValueError("delta_steep must be positive")
        if self.K_halfwidth <= 0:
            raise ValueError("K_halfwidth must be positive")
        if self.k <= 0:
            raise ValueError("k must be positive")

    def chi_values(self, grid: ChannelGrid) -> np.ndarray:
        if self.chi is None:
            return np.zeros(grid.n_x)
        chi = np.asarray(self.chi, dtype=float)
        if chi.shape != (grid.n_x,):
            raise ValueError("chi sample does not match grid")
        return chi


@dataclass
class FrontProfile:
    """Primary front u_*(x) sampled on the grid, with far-field states."""

    values: np.ndarray
    asymptotic_states: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


def quench_h(x, spec: ModelSpec):
    """Top-hat heterogeneity tanh(d*(x-K)) * tanh(-d*(x+K)).

    Approximately +1 on the plateau |x| < K and -1 outside; even in x.
    """
    d, K = spec.delta_steep, spec.K_halfwidth
    return np.tanh(d * (x - K)) * np.tanh(-d * (x + K))


def f_eval(x, u, spec: ModelSpec):
    """f(x, u) = h(x) u + gamma u^3 - u^5."""
    u2 = u * u
    u3 = u2 * u
    return quench_h(x, spec) * u + spec.gamma * u3 - u2 * u3


def f_derivs(x, u, spec: ModelSpec, order: int):
    """u-derivatives of f: order 1, 2 or 3."""
    u2 = u * u
    if order == 1:
        return quench_h(x, spec) + 3.0 * spec.gamma * u2 - 5.0 * u2 * u2
    if order == 2:
        return 6.0 * spec.gamma * u - 20.0 * u2 * u
    if order == 3:
        return 6.0 * spec.gamma - 60.0 * u2
    raise ValueError(f"unsupported derivative order {order}")


def trivial_front(grid: ChannelGrid) -> FrontProfile:
    """The trivial primary front u_* = 0."""
    return FrontProfile(values=np.zeros(grid.n_x), asymptotic_states=(0.0, 0.0))


def front_residual(front: FrontProfile, spec: ModelSpec, grid: ChannelGrid) -> float:
    """Max-norm of the steady y-independent equation at the given front.

    Residual of -D0(D0 u + f(x, u)) + c u_x + c*chi on the grid.
    """
    u = front.values
    x = grid.x_nodes
    inner = apply_dell(grid, 0, u) + f_eval(x, u, spec)
    res = -apply_dell(grid, 0, inner) + spec.c * deriv_x(grid, u, 1) \
        + spec.c * spec.chi_values(grid)
    return float(np.max(np.abs(res)))
