"""
Convergence diagnostics for membership in the rational class, and the
verdict built from them.

The second-difference criterion compares Delta^2_h Ln f(kh) with its
Levy-Khinchine counterpart for a candidate G, forms the weighted sums

    S(t, l) = sum_{k < n} (n - k) |r_k(h_l)|,  n = floor(t / h_l)

and asks them to vanish as h_l -> 0. The exponential variant works with
phi = exp(+-Delta^2) - 1 instead. The derivative criterion compares a
numeric (Ln f)'' with -int exp(itx)(1+x^2) dG(x).
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from quasiid.charfn import CharFn, min_modulus_on
from quasiid.dlog import (LogTrace, distinguished_log, lattice_second_differences,
                          richardson_second_derivative)
from quasiid.exceptions import NonLattice, OffGrid, ZeroCF
from quasiid.lk import lk_second_derivative, lk_second_difference_integral
from quasiid.recover import factorize, recover_lattice_spectral, verify_factorization
from quasiid.spectral import (SpectralFunction, SpectralPair, is_non_decreasing,
                              total_variation, variation_moment)

logger = logging.getLogger(__name__)

DEFAULT_H0 = 0.2
DEFAULT_RATIO = 0.5
DEFAULT_COUNT = 7
DEFAULT_PROBES = (0.5, 1.0, 2.0)
DEFAULT_K_MAX = 32

# |phi| range on which log(1 + phi) is compared with phi
PHI_BOUND_RADIUS = 0.5

# min |f| above which a lattice CF counts as separated from zero
SEPARATION_FLOOR = 1e-8

Residuals = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used when turning diagnostics into a verdict."""

    weighted_sum: float = 1e-6
    derivative: float = 1e-6
    exact_identity: float = 1e-9
    monotone: float = 1e-9

    def to_dict(self) -> Dict[str, float]:
        return {
            "weighted_sum": self.weighted_sum,
            "derivative": self.derivative,
            "exact_identity": self.exact_identity,
            "monotone": self.monotone,
        }


class TrajectoryKind(Enum):
    THEOREM_ONE = "TheoremOne"
    THEOREM_TWO_RESIDUALS = "TheoremTwoResiduals"
    THEOREM_TWO_SQUARES = "TheoremTwoSquares"


class Verdict(Enum):
    INFINITELY_DIVISIBLE = "InfinitelyDivisible"
    QUASI_ONLY = "QuasiOnly"
    INCONCLUSIVE = "Inconclusive"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True, eq=False)
class ResidualTrajectory:
    """
    Weighted sums S(t, l) of one residual family.

    Attributes:
        h_sequence: Decreasing steps h_l
        t_probes: Points t at which the sums are formed
        weighted_sums: Array of shape (len(t_probes), len(h_sequence))
        counts: n = floor(t / h_l) for each entry of weighted_sums
        kind: Residual family
        sign: +1 or -1 for the exponential variants, 0 otherwise
    """

    h_sequence: np.ndarray
    t_probes: np.ndarray
    weighted_sums: np.ndarray
    counts: np.ndarray
    kind: TrajectoryKind = TrajectoryKind.THEOREM_ONE
    sign: int = 0

    def thresholds(self, tolerance: float) -> np.ndarray:
        return tolerance * (1.0 + self.counts)

    def passes(self, tolerance: float) -> bool:
        """
        True when every final sum is below tolerance*(1 + n) and, over the
        last three steps, any increase still stays below that threshold.

        Deviates from the strict rule that the sums be non-increasing over
        the last three steps: a rise below the pass threshold counts as
        round-off.
        """
        if self.weighted_sums.size == 0:
            return False
        limits = self.thresholds(tolerance)
        for sums, bound in zip(self.weighted_sums, limits):
            if not sums[-1] < bound[-1]:
                return False
            for l in range(max(1, sums.size - 2), sums.size):
                if sums[l] > sums[l - 1] and not sums[l] < bound[l]:
                    return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "sign": self.sign,
            "h_sequence": [float(h) for h in self.h_sequence],
            "t_probes": [float(t) for t in self.t_probes],
            "counts": self.counts.astype(int).tolist(),
            "weighted_sums": self.weighted_sums.astype(float).tolist(),
        }


def default_h_sequence(step: float, h0: float = DEFAULT_H0,
                       ratio: float = DEFAULT_RATIO,
                       count: int = DEFAULT_COUNT) -> List[float]:
    """
    Dyadic-style sequence h_l = h_0 * ratio^l, l = 0..count-1, with h_0 the
    multiple of step / ratio^(count-1) nearest to `h0` (at least one unit),
    so that every h_l is a multiple of the grid step when 1/ratio is an
    integer.
    """
    unit = step / ratio ** (count - 1)
    multiple = max(1, int(round(h0 / unit)))
    first = multiple * unit
    return [first * ratio ** l for l in range(count)]


def floor_count(t: float, h: float) -> int:
    """floor(t / h) computed exactly on the binary values of t and h."""
    return math.floor(Fraction(t) / Fraction(h))


def _thm1_residuals(trace: LogTrace, g: SpectralFunction, h: float,
                    k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=int)
    if k.size == 0:
        return np.zeros(0, dtype=complex)
    numeric = lattice_second_differences(trace, h, k)
    return numeric - np.atleast_1d(lk_second_difference_integral(g, k * h, h))


def residuals_thm1(trace: LogTrace, g: SpectralFunction, h: float,
                   k_max: int) -> np.ndarray:
    """
    a_k(h) = Delta^2_h Ln f(kh) - 2 int exp(ikhx)(cos hx - 1)(1+x^2)/x^2 dG
    for k = 0..k_max.

    Raises:
        OffGrid: If some (k +- 1)h is not a node of the trace
    """
    return _thm1_residuals(trace, g, h, np.arange(k_max + 1))


def _phi_and_log(trace: LogTrace, h: float, k: np.ndarray,
                 sign: int) -> Tuple[np.ndarray, np.ndarray]:
    z = sign * lattice_second_differences(trace, h, k)
    return np.expm1(z), z


def residuals_thm2(trace: LogTrace, g: SpectralFunction, h: float, k_max: int,
                   sign: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exponential residuals for k = 0..k_max.

    Returns:
        (b, squared_phi) with phi = exp(sign * Delta^2) - 1,
        b_k = phi - sign * (LK second difference) and squared_phi = |phi|^2
    """
    return _thm2_residuals(trace, g, h, np.arange(k_max + 1), sign)


def _thm2_residuals(trace: LogTrace, g: SpectralFunction, h: float,
                    k: np.ndarray, sign: int) -> Tuple[np.ndarray, np.ndarray]:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    k = np.asarray(k, dtype=int)
    if k.size == 0:
        return np.zeros(0, dtype=complex), np.zeros(0)
    phi, _ = _phi_and_log(trace, h, k, sign)
    integral = np.atleast_1d(lk_second_difference_integral(g, k * h, h))
    return phi - sign * integral, np.abs(phi) ** 2


def _shared_thm2_residuals(trace: LogTrace, g: SpectralFunction,
                           sign: int) -> Callable[[np.ndarray, float],
                                                  Tuple[np.ndarray, np.ndarray]]:
    """Exponential residuals memoized per (h, window) for both trajectories."""
    cache: Dict[Tuple[float, int], Tuple[np.ndarray, np.ndarray]] = {}

    def residuals(k: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
        key = (h, int(k.size))
        if key not in cache:
            cache[key] = _thm2_residuals(trace, g, h, k, sign)
        return cache[key]

    return residuals


def _expm1_minus_z(z: np.ndarray) -> np.ndarray:
    """exp(z) - 1 - z, by its Taylor series where |z| < 1."""
    z = np.asarray(z, dtype=complex)
    term = 0.5 * z * z
    series = term.copy()
    for n in range(3, 30):
        term = term * z / n
        series = series + term
    return np.where(np.abs(z) < 1.0, series, np.expm1(z) - z)


def phi_bound_statistics(trace: LogTrace, h: float, k: np.ndarray,
                         sign: int) -> Tuple[int, int]:
    """
    Check |Ln(1 + phi) - phi| <= |phi|^2 wherever |phi| <= 1/2.

    Ln(1 + phi) is sign*Delta^2 itself, so the left side is evaluated as
    |exp(z) - 1 - z| without cancellation.

    Returns:
        (number of values checked, number of violations)
    """
    phi, z = _phi_and_log(trace, h, np.asarray(k, dtype=int), sign)
    checked = (np.abs(phi) <= PHI_BOUND_RADIUS) & (np.abs(z.imag) < math.pi)
    gap = np.abs(_expm1_minus_z(z[checked]))
    violations = int(np.count_nonzero(gap > np.abs(phi[checked]) ** 2))
    return int(checked.sum()), violations


def weighted_sum_trajectory(residuals: Residuals, h_sequence: Sequence[float],
                            t_probes: Sequence[float],
                            kind: TrajectoryKind = TrajectoryKind.THEOREM_ONE,
                            sign: int = 0) -> ResidualTrajectory:
    """
    Fill S(t, l) = sum_{k=0}^{n-1} (n - k) |r_k(h_l)| with n = floor(t / h_l).

    Args:
        residuals: Callable (k array, h) -> residual array, vectorized over k
        h_sequence: Decreasing positive steps
        t_probes: Positive probe points
    """
    h_sequence = np.asarray(h_sequence, dtype=float)
    t_probes = np.asarray(t_probes, dtype=float)
    sums = np.zeros((t_probes.size, h_sequence.size))
    counts = np.zeros((t_probes.size, h_sequence.size), dtype=int)

    for l, h in enumerate(h_sequence):
        n_probe = [floor_count(float(t), float(h)) for t in t_probes]
        n_max = max(n_probe, default=0)
        magnitudes = np.abs(np.asarray(residuals(np.arange(n_max), float(h))))
        for i, n in enumerate(n_probe):
            counts[i, l] = n
            weights = n - np.arange(n)
            sums[i, l] = float(weights @ magnitudes[:n]) if n else 0.0

    return ResidualTrajectory(h_sequence, t_probes, sums, counts, kind, sign)


def check_thm3(trace: LogTrace, g: SpectralFunction, t_probes: Sequence[float],
               h_fd: float) -> float:
    """
    Largest |numeric (Ln f)''(t) - lk_second_derivative(g, t)| over probes.

    The numeric derivative is the Richardson combination of the second
    differences with steps h_fd and h_fd/2. Probes are snapped to the
    nearest grid node.

    Raises:
        OffGrid: If h_fd/2 is not a multiple of the step or a stencil
            leaves the trace
    """
    nodes = np.array([trace.nearest_node(float(t)) for t in t_probes])
    if nodes.size == 0:
        return 0.0
    numeric = richardson_second_derivative(trace, nodes, h_fd)
    exact = np.atleast_1d(lk_second_derivative(g, nodes))
    return float(np.max(np.abs(numeric - exact)))


@dataclass
class CriterionReport:
    """Outcome of classifying one distribution."""

    verdict: Verdict
    reason: Optional[str] = None
    name: Optional[str] = None
    trajectories: List[ResidualTrajectory] = field(default_factory=list)
    derivative_max_error: Optional[float] = None
    pair: Optional[SpectralPair] = None
    factorization: Optional[Tuple[SpectralPair, SpectralPair]] = None
    factorization_error: Optional[float] = None
    exact_identity: bool = False
    phi_bound_checked: int = 0
    phi_bound_violations: int = 0
    probes: List[float] = field(default_factory=list)
    snapped_probes: List[float] = field(default_factory=list)
    min_modulus: Optional[float] = None
    separated_from_zero: Optional[bool] = None
    lattice: Optional[float] = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def to_dict(self) -> Dict[str, Any]:
        pair = self.pair
        factorization = None
        if self.factorization is not None:
            first, second = self.factorization
            factorization = {
                "first": first.to_dict(),
                "second": second.to_dict(),
                "max_error": self.factorization_error,
            }
        return {
            "name": self.name,
            "verdict": self.verdict.value,
            "reason": self.reason,
            "evidence": "numerical",
            "trajectories": [tr.to_dict() for tr in self.trajectories],
            "derivative_max_error": self.derivative_max_error,
            "probes": list(self.probes),
            "snapped_probes": list(self.snapped_probes),
            "exact_identity": self.exact_identity,
            "phi_bound": {
                "checked": self.phi_bound_checked,
                "violations": self.phi_bound_violations,
            },
            "pair": pair.to_dict() if pair is not None else None,
            "variation_norm": total_variation(pair.g) if pair is not None else None,
            "variation_moment": variation_moment(pair.g) if pair is not None else None,
            "factorization": factorization,
            "min_modulus": self.min_modulus,
            "separated_from_zero": self.separated_from_zero,
            "lattice": self.lattice,
            "tolerances": self.tolerances.to_dict(),
        }


def _not_applicable(reason: str, **kwargs) -> CriterionReport:
    return CriterionReport(verdict=Verdict.NOT_APPLICABLE, reason=reason, **kwargs)


def classify(trace: LogTrace, pair: SpectralPair,
             tolerances: Optional[Tolerances] = None,
             h_sequence: Optional[Sequence[float]] = None,
             t_probes: Sequence[float] = DEFAULT_PROBES,
             h_fd: Optional[float] = None,
             factorization_points: Optional[np.ndarray] = None) -> CriterionReport:
    """
    Classify a distribution from its trace and a candidate spectral pair.

    The second-difference criterion and the derivative criterion gate the
    verdict: both passing gives InfinitelyDivisible when G is
    non-decreasing and QuasiOnly otherwise (with the Jordan factorization
    attached); a failing gate gives Inconclusive. The exponential variant
    is reported for both signs but never gates. Grid errors become a
    NotApplicable verdict.
    """
    tolerances = tolerances or Tolerances()
    if h_sequence is None:
        h_sequence = default_h_sequence(trace.step)
    if h_fd is None:
        h_fd = 2.0 * trace.step
    g = pair.g
    probes = [float(t) for t in t_probes]
    snapped = [trace.nearest_node(t) for t in probes]

    try:
        first = weighted_sum_trajectory(
            lambda k, h: _thm1_residuals(trace, g, h, k), h_sequence, probes)

        floor = tolerances.exact_identity * (1.0 + total_variation(g))
        exact = True
        for h in h_sequence:
            n_max = max((floor_count(t, h) for t in probes), default=0)
            residual = _thm1_residuals(trace, g, h, np.arange(n_max))
            if residual.size and np.max(np.abs(residual)) > floor:
                exact = False
                break

        trajectories = [first]
        checked = violations = 0
        for sign in (1, -1):
            shared = _shared_thm2_residuals(trace, g, sign)
            trajectories.append(weighted_sum_trajectory(
                lambda k, h: shared(k, h)[0],
                h_sequence, probes, TrajectoryKind.THEOREM_TWO_RESIDUALS, sign))
            trajectories.append(weighted_sum_trajectory(
                lambda k, h: shared(k, h)[1],
                h_sequence, probes, TrajectoryKind.THEOREM_TWO_SQUARES, sign))
            for h in h_sequence:
                n_max = max((floor_count(t, h) for t in probes), default=0)
                c, v = phi_bound_statistics(trace, h, np.arange(n_max), sign)
                checked += c
                violations += v

        derivative_error = check_thm3(trace, g, probes, h_fd)
    except OffGrid as e:
        logger.warning("Classification skipped: %s", e)
        return _not_applicable(str(e), pair=pair, probes=probes,
                               snapped_probes=snapped, tolerances=tolerances)

    if violations:
        logger.warning("%d of %d exponential bound checks failed", violations, checked)

    report = CriterionReport(
        verdict=Verdict.INCONCLUSIVE,
        trajectories=trajectories,
        derivative_max_error=derivative_error,
        pair=pair,
        exact_identity=exact,
        phi_bound_checked=checked,
        phi_bound_violations=violations,
        probes=probes,
        snapped_probes=snapped,
        tolerances=tolerances,
    )

    first_passes = exact or first.passes(tolerances.weighted_sum)
    derivative_limit = tolerances.derivative * max(1.0, variation_moment(g))
    derivative_passes = derivative_error <= derivative_limit
    if not first_passes:
        report.reason = "weighted sums do not decrease below tolerance"
        return report
    if not derivative_passes:
        report.reason = (f"second derivative mismatch {derivative_error:.3g} "
                         f"exceeds {derivative_limit:.3g}")
        return report

    if is_non_decreasing(g, tolerances.monotone):
        report.verdict = Verdict.INFINITELY_DIVISIBLE
    else:
        report.verdict = Verdict.QUASI_ONLY
        if factorization_points is None:
            factorization_points = np.linspace(-10.0, 10.0, 1001)
        report.factorization = factorize(pair)
        report.factorization_error = verify_factorization(pair, factorization_points)
    return report


def classify_cf(cf: CharFn, pair: Optional[SpectralPair] = None,
                t_max: float = 4.0 * math.pi, step: float = math.pi / 512,
                k_max: int = DEFAULT_K_MAX, name: Optional[str] = None,
                **kwargs) -> Tuple[CriterionReport, Optional[LogTrace]]:
    """
    End-to-end analysis of a characteristic function.

    Builds the trace, recovers the pair by lattice recovery when none is
    given and the jump part sits on the integer lattice, then classifies.

    Returns:
        (report, trace); the trace is None when it could not be built
    """
    lattice = cf.jump_lattice
    try:
        trace = distinguished_log(cf, t_max, step)
    except ZeroCF as e:
        logger.warning("%s", e)
        return _not_applicable("characteristic function vanishes", name=name,
                               lattice=lattice), None

    modulus = min_modulus_on(cf, trace.grid)
    # meaningful only for laws carried by a lattice (no Gaussian factor)
    separated = modulus > SEPARATION_FLOOR if cf.lattice is not None else None

    if pair is None:
        if lattice is None or (lattice != 0.0 and abs(lattice - 1.0) > 1e-9):
            reason = ("lattice recovery does not apply: support is not a lattice"
                      if lattice is None else
                      f"lattice recovery needs spacing 1, got {lattice:.17g}")
            return _not_applicable(reason, name=name, lattice=lattice,
                                   min_modulus=modulus), trace
        try:
            tolerances = kwargs.get("tolerances") or Tolerances()
            pair = recover_lattice_spectral(trace, k_max,
                                            tail_tol=0.1 * tolerances.derivative)
        except (NonLattice, OffGrid) as e:
            logger.warning("Recovery failed for %s: %s", name or "distribution", e)
            return _not_applicable(str(e), name=name, lattice=lattice,
                                   min_modulus=modulus), trace

    report = classify(trace, pair, **kwargs)
    report.name = name
    report.min_modulus = modulus
    report.separated_from_zero = separated
    report.lattice = lattice
    return report, trace
