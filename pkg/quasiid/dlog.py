"""
Distinguished logarithm of a nowhere-vanishing characteristic function.

Ln f(t) = ln|f(t)| + i Arg f(t), where Arg f is continuous with Arg f(0) = 0.
The trace is built on the half-line [0, t_max] by accumulating phase
increments between neighbouring nodes. A cell whose increment is not
clearly below pi/2 is bisected until every sub-increment is. The negative
half-line follows from Ln f(-t) = conj(Ln f(t)).
"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import pandas as pd

from quasiid.charfn import CharFn
from quasiid.exceptions import OffGrid, ZeroCF

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
MAX_REFINEMENT_DEPTH = 40

# Tolerance (in units of the step) for recognising grid nodes
_NODE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LogTrace:
    """
    Ln f sampled on the symmetric uniform grid step * (-n, ..., n).

    Attributes:
        grid: Strictly increasing nodes, symmetric about 0
        values: Ln f at each node
        step: Grid spacing
    """

    grid: np.ndarray
    values: np.ndarray
    step: float

    @property
    def half_size(self) -> int:
        """Number of nodes on the positive half-line (index of t = 0)."""
        return (self.grid.size - 1) // 2

    @property
    def t_max(self) -> float:
        return float(self.grid[-1])

    def node_offset(self, t: float) -> int:
        """Signed node number j with t = j*step; raises OffGrid otherwise."""
        j = t / self.step
        r = int(round(j))
        if abs(j - r) > _NODE_TOL or abs(r) > self.half_size:
            raise OffGrid(t)
        return r

    def nearest_node(self, t: float) -> float:
        """Grid node closest to t (t itself is not required to be covered)."""
        return float(round(t / self.step) * self.step)

    def index_of(self, t: float) -> int:
        return self.node_offset(t) + self.half_size

    def value_at(self, t: float) -> complex:
        return complex(self.values[self.index_of(t)])

    def to_frame(self) -> pd.DataFrame:
        """Plot-ready table with columns t, re_lnf, im_lnf."""
        return pd.DataFrame({
            "t": self.grid,
            "re_lnf": self.values.real,
            "im_lnf": self.values.imag,
        })


def _wrap(angle: float) -> float:
    return math.remainder(angle, 2.0 * math.pi)


def _checked_log(cf: CharFn, t: float) -> complex:
    value = complex(np.asarray(cf.log_evaluate(t)).reshape(-1)[0])
    if not math.isfinite(value.real) or not math.isfinite(value.imag):
        raise ZeroCF(t)
    return value


def _refined_increment(cf: CharFn, a: float, b: float,
                       log_a: complex, log_b: complex, depth: int) -> float:
    delta = _wrap(log_b.imag - log_a.imag)
    if abs(delta) < HALF_PI:
        return delta
    if depth >= MAX_REFINEMENT_DEPTH:
        raise ZeroCF(0.5 * (a + b),
                     f"Phase of the characteristic function could not be resolved on "
                     f"[{a:.17g}, {b:.17g}]; it vanishes or winds too fast there")
    mid = 0.5 * (a + b)
    log_mid = _checked_log(cf, mid)
    return (_refined_increment(cf, a, mid, log_a, log_mid, depth + 1)
            + _refined_increment(cf, mid, b, log_mid, log_b, depth + 1))


def _half_count(t_max: float, step: float) -> int:
    if not t_max > 0 or not step > 0:
        raise ValueError(f"t_max and step must be positive, got t_max={t_max}, step={step}")
    n = t_max / step
    count = int(round(n))
    if count < 1 or abs(n - count) > 1e-9 * max(1.0, n):
        raise ValueError(f"Step {step!r} does not divide t_max {t_max!r}")
    return count


def distinguished_log(cf: CharFn, t_max: float, step: float) -> LogTrace:
    """
    Compute the distinguished logarithm of `cf` on [-t_max, t_max].

    Args:
        cf: Characteristic function, nonzero on the grid
        t_max: Half-width of the grid; must be a multiple of step
        step: Grid spacing h

    Returns:
        LogTrace on step * (-n, ..., n)

    Raises:
        ValueError: If step does not divide t_max
        ZeroCF: If f vanishes numerically at some (refined) sample
    """
    n = _half_count(t_max, step)
    nodes = step * np.arange(n + 1)

    logs = np.asarray(cf.log_evaluate(nodes), dtype=complex)
    bad = ~np.isfinite(logs)
    if bad.any():
        raise ZeroCF(float(nodes[np.argmax(bad)]))

    increments = np.remainder(np.diff(logs.imag) + math.pi, 2.0 * math.pi) - math.pi
    refined = 0
    for k in np.nonzero(np.abs(increments) >= HALF_PI)[0]:
        increments[k] = _refined_increment(cf, float(nodes[k]), float(nodes[k + 1]),
                                           complex(logs[k]), complex(logs[k + 1]), 0)
        refined += 1
    if refined:
        logger.info("Refined %d of %d cells while unwrapping the phase", refined, n)

    phase = np.concatenate([[0.0], np.cumsum(increments)])
    positive = logs.real + 1j * phase
    positive[0] = 0.0

    grid = step * np.arange(-n, n + 1)
    values = np.concatenate([np.conj(positive[:0:-1]), positive])
    return LogTrace(grid=grid, values=values, step=float(step))


def second_difference(trace: LogTrace, t: float, h: float) -> complex:
    """Return Ln f(t-h) + Ln f(t+h) - 2 Ln f(t); every point must be a node."""
    return (trace.value_at(t - h) + trace.value_at(t + h)
            - 2.0 * trace.value_at(t))


def lattice_second_differences(trace: LogTrace, h: float,
                               k: Union[int, Sequence[int], np.ndarray]) -> np.ndarray:
    """
    Vectorized second differences at the lattice points t = k*h.

    Raises:
        OffGrid: If h is not a multiple of the step or some (k +- 1)*h
            falls outside the trace
    """
    m = trace.node_offset(h)
    if m <= 0:
        raise OffGrid(h, f"Difference step h = {h:.17g} must be a positive multiple of the grid step")
    k = np.atleast_1d(np.asarray(k, dtype=int))
    centre = trace.half_size + k * m
    for idx in (centre - m, centre + m):
        outside = (idx < 0) | (idx >= trace.grid.size)
        if outside.any():
            raise OffGrid(float((idx[np.argmax(outside)] - trace.half_size) * trace.step))
    return trace.values[centre - m] + trace.values[centre + m] - 2.0 * trace.values[centre]


def richardson_second_derivative(trace: LogTrace, t: Union[float, np.ndarray],
                                 h: float) -> np.ndarray:
    """
    Second derivative of Ln f at nodes t from the stencils with h and h/2.

        D(h) = second difference / h^2,  estimate = (4 D(h/2) - D(h)) / 3
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    offsets = np.array([trace.node_offset(float(x)) for x in t])
    m = trace.node_offset(h)
    if m <= 0 or m % 2:
        raise OffGrid(0.5 * h, f"Richardson step h = {h:.17g} needs h/2 on the grid")
    h = m * trace.step

    def stencil(width: int) -> np.ndarray:
        centre = trace.half_size + offsets
        lo, hi = centre - width, centre + width
        outside = (lo < 0) | (hi >= trace.grid.size)
        if outside.any():
            raise OffGrid(float(t[np.argmax(outside)]),
                          "Richardson stencil leaves the trace grid")
        return trace.values[lo] + trace.values[hi] - 2.0 * trace.values[centre]

    d_full = stencil(m) / (h * h)
    d_half = stencil(m // 2) / (0.25 * h * h)
    return (4.0 * d_half - d_full) / 3.0


def reconstruct_from_second_differences(d2: Sequence[complex], n: int) -> complex:
    """
    Telescoping sum of second differences d2[j] = Delta^2_h Ln f(jh):

        sum_{k=1..n} ( sum_{j=1..k-1} d2[j] + d2[0]/2 )

    which equals Ln f(nh) - i*n*Arg f(h).
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if n == 0:
        return 0j
    d2 = np.asarray(d2, dtype=complex)
    if d2.size < n:
        raise ValueError(f"Need {n} second differences, got {d2.size}")
    inner = np.concatenate([[0.0], np.cumsum(d2[1:n])])
    return complex(inner.sum() + 0.5 * n * d2[0])
