"""
Characteristic functions of the distribution families the toolkit analyzes.

A CharFn is an immutable description of a law F whose characteristic
function f(t) = E[exp(itX)] can be evaluated on scalars or numpy arrays.
Besides f itself every kind exposes a complex logarithm of f on some branch
(`log_evaluate`). Closed-form kinds return it exactly, which keeps traces of
fast-decaying functions (e.g. Gaussians on long grids) free of underflow.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

ArrayLike = Union[float, Sequence[float], np.ndarray]

# |sum| below this is treated as a zero of a directly summed CF
ZERO_MODULUS = 1e-12

# Lattice spacings smaller than this are reported as non-lattice
_MIN_SPACING = 1e-4


def _as_array(t: ArrayLike) -> np.ndarray:
    return np.asarray(t, dtype=float)


def lattice_spacing(values: Iterable[float], tol: float = 1e-9) -> Optional[float]:
    """
    Largest d > 0 such that every value is an integer multiple of d.

    Zeros are ignored. Returns 0.0 when all values are zero and None when
    no reasonable common spacing exists.
    """
    magnitudes = sorted({abs(float(v)) for v in values if abs(float(v)) > tol})
    if not magnitudes:
        return 0.0

    spacing = Fraction(magnitudes[0]).limit_denominator(10**4)
    for value in magnitudes[1:]:
        ratio = Fraction(value).limit_denominator(10**4)
        spacing = Fraction(math.gcd(spacing.numerator * ratio.denominator,
                                    ratio.numerator * spacing.denominator),
                           spacing.denominator * ratio.denominator)

    d = float(spacing)
    if d < _MIN_SPACING:
        return None
    for value in magnitudes:
        multiple = value / d
        if abs(multiple - round(multiple)) > tol * max(1.0, multiple):
            return None
    return d


def _support_spacing(spacing: Optional[float]) -> Optional[float]:
    # a law sitting at the origin lives on every lattice; report 1
    return 1.0 if spacing == 0.0 else spacing


def _combine_spacings(spacings: Iterable[Optional[float]]) -> Optional[float]:
    collected = []
    for s in spacings:
        if s is None:
            return None
        collected.append(s)
    return lattice_spacing(collected)


class CharFn:
    """Base class of all characteristic-function kinds."""

    def evaluate(self, t: ArrayLike) -> np.ndarray:
        """Return f(t) for scalar or array t (always as a complex ndarray)."""
        return np.exp(self.log_evaluate(t))

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        """Return a complex logarithm of f(t); the branch is unspecified."""
        raise NotImplementedError

    @property
    def lattice(self) -> Optional[float]:
        """Spacing d if every support point is an integer multiple of d."""
        return None

    @property
    def jump_lattice(self) -> Optional[float]:
        """
        Spacing of the lattice that carries the law up to a shift and a
        Gaussian factor: 0.0 for laws without a jump part, None when the
        support is not a lattice.
        """
        return None


@dataclass(frozen=True)
class Degenerate(CharFn):
    """Point mass at `a`: f(t) = exp(ita)."""

    a: float

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        return 1j * self.a * _as_array(t)

    @property
    def lattice(self) -> Optional[float]:
        return _support_spacing(lattice_spacing([self.a]))

    @property
    def jump_lattice(self) -> Optional[float]:
        return 0.0


@dataclass(frozen=True)
class Gaussian(CharFn):
    """Normal law: f(t) = exp(it*mean - variance*t^2/2)."""

    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"Gaussian variance must be non-negative, got {self.variance}")

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        return 1j * self.mean * t - 0.5 * self.variance * t * t

    @property
    def lattice(self) -> Optional[float]:
        if self.variance == 0:
            return Degenerate(self.mean).lattice
        return None

    @property
    def jump_lattice(self) -> Optional[float]:
        return 0.0


@dataclass(frozen=True)
class Poisson(CharFn):
    """Poisson law on the integers: f(t) = exp(rate*(exp(it) - 1))."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"Poisson rate must be positive, got {self.rate}")

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        # exp(it) - 1 = -2 sin^2(t/2) + i sin t, accurate near t = 0
        return self.rate * (-2.0 * np.sin(0.5 * t) ** 2 + 1j * np.sin(t))

    @property
    def lattice(self) -> Optional[float]:
        return 1.0

    @property
    def jump_lattice(self) -> Optional[float]:
        return 1.0


@dataclass(frozen=True)
class DiscretePMF(CharFn):
    """
    Finitely supported law given by (location, mass) atoms.

    Masses must be positive and sum to one within 1e-12. Evaluation is a
    direct sum over the atoms.
    """

    atoms: Tuple[Tuple[float, float], ...]
    _locations: np.ndarray = field(init=False, repr=False, compare=False)
    _masses: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        if not atoms:
            raise ValueError("DiscretePMF needs at least one atom")
        masses = np.array([m for _, m in atoms])
        if np.any(masses <= 0):
            raise ValueError("DiscretePMF masses must be positive")
        if abs(masses.sum() - 1.0) > 1e-12:
            raise ValueError(f"DiscretePMF masses must sum to 1, got {masses.sum():.17g}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_locations", np.array([x for x, _ in atoms]))
        object.__setattr__(self, "_masses", masses)

    @classmethod
    def bernoulli(cls, p: float) -> "DiscretePMF":
        """Two-point law P(X=1) = p, P(X=0) = 1 - p."""
        if not 0 < p < 1:
            raise ValueError(f"Bernoulli parameter must lie in (0, 1), got {p}")
        return cls(((0.0, 1.0 - p), (1.0, p)))

    def evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        phases = np.exp(1j * np.multiply.outer(t, self._locations))
        return phases @ self._masses

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        values = self.evaluate(t)
        modulus = np.abs(values)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(values)
        return np.where(modulus < ZERO_MODULUS, complex(-np.inf, 0.0), logs)

    @property
    def lattice(self) -> Optional[float]:
        return _support_spacing(lattice_spacing(self._locations))

    @property
    def jump_lattice(self) -> Optional[float]:
        return lattice_spacing(self._locations - self._locations[0])


@dataclass(frozen=True)
class Convolution(CharFn):
    """Sum of independent components: f is the product of component CFs."""

    components: Tuple[CharFn, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("Convolution needs at least one component")

    def evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        result = np.ones(t.shape, dtype=complex)
        for component in self.components:
            result = result * component.evaluate(t)
        return result

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        result = np.zeros(t.shape, dtype=complex)
        for component in self.components:
            result = result + component.log_evaluate(t)
        return result

    @property
    def lattice(self) -> Optional[float]:
        return _support_spacing(_combine_spacings(c.lattice for c in self.components))

    @property
    def jump_lattice(self) -> Optional[float]:
        return _combine_spacings(c.jump_lattice for c in self.components)


@dataclass(frozen=True)
class ScaledShift(CharFn):
    """Law of scale*X + shift: f(t) = exp(it*shift) * f_base(scale*t)."""

    base: CharFn
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.scale == 0:
            raise ValueError("ScaledShift scale must be nonzero")

    def evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        return np.exp(1j * self.shift * t) * self.base.evaluate(self.scale * t)

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        t = _as_array(t)
        return 1j * self.shift * t + self.base.log_evaluate(self.scale * t)

    @property
    def lattice(self) -> Optional[float]:
        base = self.base.lattice
        if base is None:
            return None
        return _support_spacing(_combine_spacings([base * abs(self.scale), self.shift]))

    @property
    def jump_lattice(self) -> Optional[float]:
        base = self.base.jump_lattice
        if base is None:
            return None
        return base * abs(self.scale)


def eval_cf(cf: CharFn, t: ArrayLike) -> Union[complex, np.ndarray]:
    """
    Evaluate the characteristic function of `cf` at t.

    Args:
        cf: Distribution description
        t: Scalar or array of real arguments

    Returns:
        complex for scalar t, complex ndarray otherwise
    """
    values = cf.evaluate(t)
    if np.ndim(t) == 0:
        return complex(values)
    return values


def min_modulus_on(cf: CharFn, grid: ArrayLike) -> float:
    """Return min |f(t)| over a nonempty grid."""
    grid = np.atleast_1d(_as_array(grid))
    if grid.size == 0:
        raise ValueError("Grid must contain at least one point")
    return float(np.min(np.abs(cf.evaluate(grid))))
