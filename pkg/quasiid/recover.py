"""
Recovery of the spectral pair (gamma, G) from a distinguished-log trace.

For a law carried by the integer lattice (plus an optional Gaussian factor)
the function -(Ln f)'' is 2*pi-periodic and its Fourier coefficients are
(1 + k^2) * G({k}). The coefficients are taken from period samples of a
Richardson estimate of (Ln f)''; the stencil multiplies exp(ikt) by a known
factor, which is divided out before masses are formed.
"""
import logging
import math
from typing import Tuple

import numpy as np

from quasiid.dlog import LogTrace, richardson_second_derivative
from quasiid.exceptions import NonLattice, OffGrid
from quasiid.lk import lk_log_cf
from quasiid.spectral import SpectralFunction, SpectralPair, jordan_decompose

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Recovered masses below this are dropped
MASS_FLOOR = 1e-12

# Largest admissible |Im c_k| / (1 + k^2)
IMAG_TOL = 1e-9

# Largest admissible spectral energy outside |k| <= k_max
ENERGY_TOL = 1e-6

# Sum of |c_k| outside the band above which k_max is raised
TAIL_TOL = 1e-7


def recover_gamma(trace: LogTrace) -> float:
    """
    Shift parameter gamma = Im Ln f(1).

    The imaginary part of the Levy-Khinchine kernel vanishes identically at
    t = 1 (sin x - sin x), so this holds for every representation.

    Raises:
        OffGrid: If t = 1 is not a node of the trace
    """
    return trace.value_at(1.0).imag


def _period_nodes(step: float) -> int:
    ratio = TWO_PI / step
    nodes = int(round(ratio))
    if nodes < 1 or abs(ratio - nodes) > 1e-9 * ratio:
        raise OffGrid(TWO_PI, f"Lattice recovery needs 2*pi on the grid; step {step:.17g} does not divide it")
    return nodes


def largest_band(step: float) -> int:
    """Largest k_max the grid supports: 4*k_max + 4 <= 2*pi/step."""
    return (_period_nodes(step) - 4) // 4


def period_sample_count(step: float, k_max: int) -> int:
    """
    Smallest divisor N of 2*pi/step with N >= 4*k_max + 4.

    Raises:
        OffGrid: If 2*pi is not a grid node or the grid is too coarse
    """
    nodes = _period_nodes(step)
    needed = 4 * k_max + 4
    for n in range(needed, nodes + 1):
        if nodes % n == 0:
            return n
    raise OffGrid(TWO_PI / needed,
                  f"Grid step {step:.17g} is too coarse for k_max = {k_max}; "
                  f"need at least {needed} samples per period")


def richardson_symbol(k: np.ndarray, h: float) -> np.ndarray:
    """
    Factor by which the Richardson estimate with steps h, h/2 multiplies
    exp(ikt); it tends to -k^2 as h -> 0.
    """
    k = np.asarray(k, dtype=float)

    def plain(width):
        return -4.0 * np.sin(0.5 * k * width) ** 2 / (width * width)

    return (4.0 * plain(0.5 * h) - plain(h)) / 3.0


def _fourier_coefficients(trace: LogTrace,
                          k_max: int) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """
    Corrected coefficients c_k of -(Ln f)'' for k = -k_max..k_max, the
    spectral energy left outside that band and the sum of |c_k| there.
    """
    n = period_sample_count(trace.step, k_max)
    stride = int(round(TWO_PI / trace.step)) // n
    t = trace.step * stride * np.arange(n)
    h = 2.0 * trace.step

    samples = -richardson_second_derivative(trace, t, h)
    coefficients = np.fft.fft(samples) / n

    ks = np.arange(-k_max, k_max + 1)
    inside = np.zeros(n, dtype=bool)
    inside[ks % n] = True
    outside = np.abs(coefficients[~inside])
    outside_energy = float(np.sum(outside ** 2))
    outside_tail = float(np.sum(outside))

    raw = coefficients[ks % n]
    symbol = richardson_symbol(ks, h)
    correction = np.ones(ks.size)
    nonzero = ks != 0
    correction[nonzero] = -(ks[nonzero] ** 2) / symbol[nonzero]
    return ks, raw * correction, outside_energy, outside_tail


def recover_gaussian_component(trace: LogTrace, k_max: int = 32) -> float:
    """Variance of the Gaussian factor: the mean of -(Ln f)'' over a period."""
    _, coefficients, _, _ = _fourier_coefficients(trace, k_max)
    return max(float(coefficients[k_max].real), 0.0)


def recover_lattice_spectral(trace: LogTrace, k_max: int,
                             tail_tol: float = TAIL_TOL) -> SpectralPair:
    """
    Recover (gamma, G) for a law on the integer lattice.

    Args:
        trace: Distinguished log covering at least [0, 2*pi + 2*step]
        k_max: Initial band |k| <= k_max; doubled, up to largest_band(step),
            while the sum of |c_k| outside the band exceeds tail_tol
        tail_tol: Bound on the sup error of -(Ln f)'' left by truncation

    Returns:
        SpectralPair with atoms at integers, the Gaussian variance as the
        atom at 0

    Raises:
        NonLattice: If the coefficients are not real or spectral energy
            remains outside the final band
        OffGrid: If the period samples or t = 1 are unavailable
    """
    limit = max(k_max, largest_band(trace.step))
    while True:
        ks, coefficients, outside_energy, outside_tail = _fourier_coefficients(trace, k_max)
        weights = 1.0 + ks.astype(float) ** 2

        imag = np.abs(coefficients.imag) / weights
        worst = int(np.argmax(imag))
        if imag[worst] > IMAG_TOL:
            raise NonLattice(
                f"Fourier coefficient at k = {ks[worst]} has imaginary part "
                f"{imag[worst]:.3g}; the law is not carried by the integer lattice"
            )
        if outside_tail <= tail_tol or k_max >= limit:
            break
        wider = min(max(2 * k_max, 1), limit)
        logger.info("Spectral tail %.3g outside |k| <= %d; retrying with k_max = %d",
                    outside_tail, k_max, wider)
        k_max = wider

    if outside_energy > ENERGY_TOL:
        raise NonLattice(
            f"Spectral energy {outside_energy:.3g} lies outside |k| <= {k_max}; "
            f"increase k_max or check that the support is a lattice"
        )

    masses = coefficients.real / weights
    keep = np.abs(masses) >= MASS_FLOOR
    g = SpectralFunction(ks[keep].astype(float), masses[keep])
    logger.info("Recovered %d atom(s) with k_max = %d (outside energy %.3g)",
                int(keep.sum()), k_max, outside_energy)

    try:
        gamma = recover_gamma(trace)
    except OffGrid:
        node = trace.nearest_node(1.0)
        if node == 0.0:
            node = trace.step
        jump_part = lk_log_cf(SpectralPair(0.0, g), node)
        gamma = (trace.value_at(node).imag - jump_part.imag) / node
        logger.info("t = 1 is not a grid node; gamma taken at t = %.17g", node)
    return SpectralPair(float(gamma), g)


def factorize(pair: SpectralPair) -> Tuple[SpectralPair, SpectralPair]:
    """
    Split a rational-class pair into two infinitely divisible ones.

    With G = G1 - G2 the Jordan decomposition, returns (gamma, G1) and
    (0, G2), so that f = f1 / f2.
    """
    plus, minus = jordan_decompose(pair.g)
    return SpectralPair(pair.gamma, plus), SpectralPair(0.0, minus)


def verify_factorization(pair: SpectralPair, t: np.ndarray) -> float:
    """Largest |Ln f1(t) - Ln f2(t) - Ln f(t)| over the points t."""
    first, second = factorize(pair)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    error = lk_log_cf(first, t) - lk_log_cf(second, t) - lk_log_cf(pair, t)
    return float(np.max(np.abs(error)))
