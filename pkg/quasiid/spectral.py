"""
Signed spectral functions of bounded variation.

A SpectralFunction stores the increments dG of a function G in BV: finitely
many atoms plus an optional density sampled on a uniform grid. Pointwise
values G(x) are not stored; everything downstream only integrates against
dG.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.integrate import simpson

logger = logging.getLogger(__name__)

# Atoms closer than this to the origin use the kernel's limit value
ZERO_LOCATION = 1e-12

Kernel = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Density:
    """Absolutely continuous part of dG sampled on grid_min + j*grid_step."""

    grid_min: float
    grid_step: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("Density values must be a nonempty 1-D array")
        if not self.grid_step > 0:
            raise ValueError(f"Density grid step must be positive, got {self.grid_step}")
        object.__setattr__(self, "values", values)

    @property
    def grid(self) -> np.ndarray:
        return self.grid_min + self.grid_step * np.arange(self.values.size)

    def with_values(self, values: np.ndarray) -> "Density":
        return Density(self.grid_min, self.grid_step, values)


def _simpson(y: np.ndarray, dx: float) -> np.ndarray:
    """Composite Simpson along the last axis, padding one zero node if needed."""
    if y.shape[-1] < 2:
        return np.zeros(y.shape[:-1], dtype=y.dtype)
    if (y.shape[-1] - 1) % 2 == 1:
        pad = [(0, 0)] * (y.ndim - 1) + [(0, 1)]
        y = np.pad(y, pad)
    return simpson(y, dx=dx, axis=-1)


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """
    Increments of a signed spectral function G.

    Attributes:
        locations: Atom locations
        masses: Atom masses (nonzero)
        density: Optional gridded density of the continuous part
    """

    locations: np.ndarray = field(default_factory=lambda: np.zeros(0))
    masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density: Optional[Density] = None

    def __post_init__(self):
        locations = np.asarray(self.locations, dtype=float).reshape(-1)
        masses = np.asarray(self.masses, dtype=float).reshape(-1)
        if locations.shape != masses.shape:
            raise ValueError("Atom locations and masses must have the same length")
        keep = masses != 0
        object.__setattr__(self, "locations", locations[keep])
        object.__setattr__(self, "masses", masses[keep])

    @classmethod
    def from_atoms(cls, atoms: Iterable[Tuple[float, float]],
                   density: Optional[Density] = None) -> "SpectralFunction":
        """Build from (location, mass) pairs; zero masses are dropped."""
        atoms = list(atoms)
        return cls(
            locations=np.array([float(x) for x, _ in atoms]),
            masses=np.array([float(m) for _, m in atoms]),
            density=density,
        )

    @classmethod
    def empty(cls) -> "SpectralFunction":
        return cls()

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return [(float(x), float(m)) for x, m in zip(self.locations, self.masses)]

    @property
    def is_empty(self) -> bool:
        return self.masses.size == 0 and self.density is None

    def mass_at(self, x: float, tol: float = 1e-9) -> float:
        """Total atom mass within `tol` of x."""
        return float(self.masses[np.abs(self.locations - x) <= tol].sum())

    def merged(self, other: "SpectralFunction", sign: float = 1.0) -> "SpectralFunction":
        """
        Atomwise G + sign*other.

        Atoms at equal locations are summed. Densities must share a grid.
        """
        locations = np.concatenate([self.locations, other.locations])
        masses = np.concatenate([self.masses, sign * other.masses])
        unique, inverse = np.unique(locations, return_inverse=True)
        summed = np.zeros(unique.size)
        np.add.at(summed, inverse, masses)

        density = self.density
        if other.density is not None:
            if density is None:
                density = other.density.with_values(sign * other.density.values)
            else:
                if (density.grid_min != other.density.grid_min
                        or density.grid_step != other.density.grid_step
                        or density.values.size != other.density.values.size):
                    raise ValueError("Cannot merge densities sampled on different grids")
                density = density.with_values(density.values + sign * other.density.values)
        return SpectralFunction(unique, summed, density)

    def to_dict(self) -> Dict[str, Any]:
        density = None
        if self.density is not None:
            density = {
                "grid_min": float(self.density.grid_min),
                "grid_step": float(self.density.grid_step),
                "values": [float(v) for v in self.density.values],
            }
        return {
            "atoms": [{"x": x, "mass": m} for x, m in self.atoms],
            "density": density,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectralFunction":
        atoms = [(a["x"], a["mass"]) for a in data.get("atoms", [])]
        density = None
        if data.get("density") is not None:
            d = data["density"]
            density = Density(float(d["grid_min"]), float(d["grid_step"]),
                              np.asarray(d["values"], dtype=float))
        return cls.from_atoms(atoms, density)


@dataclass(frozen=True, eq=False)
class SpectralPair:
    """Shift parameter gamma together with the spectral function G."""

    gamma: float
    g: SpectralFunction

    def to_dict(self) -> Dict[str, Any]:
        data = self.g.to_dict()
        data["gamma"] = float(self.gamma)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectralPair":
        return cls(float(data["gamma"]), SpectralFunction.from_dict(data))


def total_variation(g: SpectralFunction) -> float:
    """Return ||G|| = sum |atom masses| + integral of |density|."""
    total = float(np.abs(g.masses).sum())
    if g.density is not None:
        total += float(_simpson(np.abs(g.density.values), g.density.grid_step))
    return total


def jordan_decompose(g: SpectralFunction) -> Tuple[SpectralFunction, SpectralFunction]:
    """
    Split G into non-decreasing parts G+ and G- with G = G+ - G-.

    Atoms go to the part matching their sign; density values are split
    node by node on the shared grid.
    """
    positive = g.masses > 0
    plus_density = minus_density = None
    if g.density is not None:
        values = g.density.values
        plus_density = g.density.with_values(np.maximum(values, 0.0))
        minus_density = g.density.with_values(np.maximum(-values, 0.0))

    plus = SpectralFunction(g.locations[positive], g.masses[positive], plus_density)
    minus = SpectralFunction(g.locations[~positive], -g.masses[~positive], minus_density)
    return plus, minus


def integrate_kernel(g: SpectralFunction, kernel: Kernel,
                     kernel_at_zero: Any) -> Any:
    """
    Integrate a kernel against dG.

    The kernel receives a 1-D array of x values and may return an array of
    shape (..., len(x)); the leading axes are kept, so one call can
    integrate a whole family of kernels (e.g. over many t). Nodes within
    ZERO_LOCATION of the origin use `kernel_at_zero`, which must broadcast
    against the leading shape.

    Returns:
        complex (or complex ndarray for batched kernels)
    """
    zero = np.asarray(kernel_at_zero, dtype=complex)
    total = np.zeros(zero.shape, dtype=complex)

    if g.masses.size:
        total = total + _kernel_values(kernel, g.locations, zero) @ g.masses

    if g.density is not None:
        values = _kernel_values(kernel, g.density.grid, zero) * g.density.values
        total = total + _simpson(values, g.density.grid_step)

    if total.ndim == 0:
        return complex(total)
    return total


def _kernel_values(kernel: Kernel, x: np.ndarray, at_zero: np.ndarray) -> np.ndarray:
    near_zero = np.abs(x) <= ZERO_LOCATION
    safe_x = np.where(near_zero, 1.0, x)
    values = np.asarray(kernel(safe_x), dtype=complex)
    if near_zero.any():
        values = np.where(near_zero, at_zero[..., np.newaxis], values)
    return values


def variation_moment(g: SpectralFunction) -> float:
    """Return the integral of (1 + x^2) d|G|(x)."""
    total = float((np.abs(g.masses) * (1.0 + g.locations ** 2)).sum())
    if g.density is not None:
        grid = g.density.grid
        total += float(_simpson(np.abs(g.density.values) * (1.0 + grid ** 2),
                                g.density.grid_step))
    return total


def is_non_decreasing(g: SpectralFunction, rel_eps: float = 1e-9) -> bool:
    """
    Monotonicity test used to tell infinitely divisible laws apart.

    Atom masses and density values may dip below zero by at most
    rel_eps * max(||G||, 1), which absorbs recovery round-off.
    """
    eps = rel_eps * max(total_variation(g), 1.0)
    if np.any(g.masses < -eps):
        return False
    if g.density is not None and np.any(g.density.values < -eps):
        return False
    return True
