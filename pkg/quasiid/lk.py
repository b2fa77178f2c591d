"""
Forward evaluation of the Levy-Khinchine representation with sin centering.

    Ln f(t) = i*gamma*t + int (exp(itx) - 1 - it*sin x) (1+x^2)/x^2 dG(x)

together with the kernels derived from it: the second difference of Ln f
and its second derivative. All functions accept scalar or array t and are
vectorized over t.
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from quasiid.charfn import ArrayLike, CharFn, lattice_spacing
from quasiid.spectral import SpectralFunction, SpectralPair, integrate_kernel

Number = Union[complex, np.ndarray]


def _column(t: ArrayLike) -> np.ndarray:
    return np.asarray(t, dtype=float)[..., np.newaxis]


def _weight(x: np.ndarray) -> np.ndarray:
    return (1.0 + x * x) / (x * x)


def _unbatch(value: Number, t: ArrayLike) -> Number:
    if np.ndim(t) == 0:
        return complex(np.asarray(value).reshape(-1)[0])
    return value


def lk_log_cf(pair: SpectralPair, t: ArrayLike) -> Number:
    """
    Evaluate Ln f(t) from the spectral pair.

    An atom of G at the origin contributes -mass*t^2/2 (the Gaussian part).
    """
    t_arr = np.asarray(t, dtype=float)
    tc = _column(t_arr)

    def kernel(x):
        # exp(itx) - 1 = -2 sin^2(tx/2) + i sin(tx)
        real = -2.0 * np.sin(0.5 * tc * x) ** 2
        imag = np.sin(tc * x) - tc * np.sin(x)
        return (real + 1j * imag) * _weight(x)

    integral = integrate_kernel(pair.g, kernel, -0.5 * t_arr * t_arr)
    return _unbatch(1j * pair.gamma * t_arr + integral, t)


def lk_second_difference_integral(g: SpectralFunction, t: ArrayLike, h: float) -> Number:
    """
    Return 2 * int exp(itx) (cos(hx) - 1) (1+x^2)/x^2 dG(x).

    This equals the second difference Ln f(t-h) + Ln f(t+h) - 2 Ln f(t) for
    any f represented by (gamma, G).
    """
    t_arr = np.asarray(t, dtype=float)
    tc = _column(t_arr)

    def kernel(x):
        return np.exp(1j * tc * x) * (-2.0 * np.sin(0.5 * h * x) ** 2) * _weight(x)

    at_zero = np.full(t_arr.shape, -0.5 * h * h, dtype=complex)
    return _unbatch(2.0 * integrate_kernel(g, kernel, at_zero), t)


def lk_normalized_second_difference(g: SpectralFunction, t: ArrayLike, h: float) -> Number:
    """
    Sinc form of the second difference divided by h^2:

        -int exp(itx) sin^2(hx/2)/(hx/2)^2 (1+x^2) dG(x)

    which tends to the second derivative as h -> 0.
    """
    t_arr = np.asarray(t, dtype=float)
    tc = _column(t_arr)

    def kernel(x):
        sinc = np.sinc(0.5 * h * x / np.pi)
        return -np.exp(1j * tc * x) * sinc * sinc * (1.0 + x * x)

    at_zero = np.full(t_arr.shape, -1.0, dtype=complex)
    return _unbatch(integrate_kernel(g, kernel, at_zero), t)


def lk_second_derivative(g: SpectralFunction, t: ArrayLike) -> Number:
    """Return (Ln f)''(t) = -int exp(itx) (1+x^2) dG(x)."""
    t_arr = np.asarray(t, dtype=float)
    tc = _column(t_arr)

    def kernel(x):
        return np.exp(1j * tc * x) * (1.0 + x * x)

    at_zero = np.ones(t_arr.shape, dtype=complex)
    return _unbatch(-integrate_kernel(g, kernel, at_zero), t)


@dataclass(frozen=True, eq=False)
class LevyKhinchineCF(CharFn):
    """
    The function exp(lk_log_cf(pair, t)).

    It is a characteristic function only when the pair comes from a law in
    the rational class, but every analysis step just needs a nowhere
    vanishing function with Ln value 0 at t = 0.
    """

    pair: SpectralPair

    def log_evaluate(self, t: ArrayLike) -> np.ndarray:
        return np.asarray(lk_log_cf(self.pair, t), dtype=complex)

    @property
    def jump_lattice(self) -> Optional[float]:
        g = self.pair.g
        if g.density is not None:
            return None
        return lattice_spacing(g.locations)
