from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..numerics import irfft, is_power_of_two, rfft


@dataclass(frozen=True)
class Grid1D:
    """Periodic grid ``x_j = a + j dx`` on [a, b), ``dx = (b - a) / n``."""

    n: int
    a: float = -np.pi
    b: float = np.pi

    def __post_init__(self):
        if self.n < 4 or not is_power_of_two(self.n):
            raise ValueError(f"grid size must be a power of two >= 4, got {self.n}")
        if not self.b > self.a:
            raise ValueError(f"need b > a, got a={self.a}, b={self.b}")

    @property
    def length(self):
        return self.b - self.a

    @property
    def dx(self):
        return self.length / self.n

    @cached_property
    def x(self):
        return self.a + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self):
        """Physical wavenumbers of the rfft modes, ``2 pi m / L``."""
        return 2 * np.pi * np.arange(self.n // 2 + 1) / self.length

    @cached_property
    def odd_wavenumbers(self):
        """Wavenumbers for odd derivatives: the Nyquist mode is zeroed."""
        k = self.wavenumbers.copy()
        k[-1] = 0.0
        return k

    @cached_property
    def dealias_mask(self):
        """2/3 rule: keep modes ``m <= n/3``."""
        return np.arange(self.n // 2 + 1) <= self.n // 3

    def derivative(self, u, order=1):
        coeffs = rfft(u)
        k = self.odd_wavenumbers if order % 2 else self.wavenumbers
        return irfft(coeffs * (1j * k) ** order, self.n)

    def antiderivative(self, u):
        """Periodic antiderivative of a zero-mean signal with zero grid mean.

        The Nyquist component has no representable antiderivative and is dropped.
        """
        coeffs = rfft(u)
        k = self.odd_wavenumbers
        out = np.zeros_like(coeffs)
        nz = k != 0
        out[..., nz] = coeffs[..., nz] / (1j * k[nz])
        return irfft(out, self.n)

    def interpolate(self, u, x):
        """Evaluate the trigonometric interpolant of ``u`` at points ``x``."""
        coeffs = rfft(u)
        m = np.arange(self.n // 2 + 1)
        w = np.full(m.size, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        phase = np.exp(1j * np.multiply.outer(np.asarray(x) - self.a, self.wavenumbers))
        return (phase @ (w * coeffs).T).real.T / self.n

    @classmethod
    def for_domain(cls, n, domain):
        return cls(n, float(domain[0]), float(domain[1]))
