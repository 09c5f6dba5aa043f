"""Radix-2 real FFT.

Transforms act on the last axis and broadcast over any leading axes, so a
whole batch of trajectories is transformed with one call. Only butterflies
(elementwise numpy ops) are used, which keeps row results independent of the
batch they were computed in.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _check_length(n):
    if n < 2 or not is_power_of_two(n):
        raise ValueError(f"FFT length must be a power of two >= 2, got {n}")


@lru_cache(maxsize=None)
def _bit_reverse(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(n):
    """Per-stage twiddle tables for a length-n forward transform."""
    tables = []
    m = 2
    while m <= n:
        tables.append(np.exp(-2j * np.pi * np.arange(m // 2) / m))
        m *= 2
    return tuple(tables)


@lru_cache(maxsize=None)
def _real_twiddle(n):
    return np.exp(-2j * np.pi * np.arange(n // 2 + 1) / n)


def _cfft(z):
    """Iterative decimation-in-time complex FFT along the last axis."""
    n = z.shape[-1]
    if n == 1:
        return z.astype(complex, copy=True)
    lead = z.shape[:-1]
    src = z[..., _bit_reverse(n)].astype(complex)
    dst = np.empty_like(src)
    m = 2
    for w in _twiddles(n):
        half = m // 2
        s4 = src.reshape(lead + (n // m, 2, half))
        d4 = dst.reshape(lead + (n // m, 2, half))
        bot = s4[..., 1, :] * w
        np.add(s4[..., 0, :], bot, out=d4[..., 0, :])
        np.subtract(s4[..., 0, :], bot, out=d4[..., 1, :])
        src, dst = dst, src
        m *= 2
    return src


def _icfft(z):
    n = z.shape[-1]
    return np.conj(_cfft(np.conj(z))) / n


def rfft(u):
    """Forward real FFT: ``X_m = sum_j u_j exp(-2 pi i j m / n)``, m = 0..n/2."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    _check_length(n)
    half = n // 2
    # pack even/odd samples into one half-length complex transform
    z = _cfft(u[..., 0::2] + 1j * u[..., 1::2])
    zc = np.conj(np.concatenate((z[..., :1], z[..., :0:-1], z[..., :1]), axis=-1))
    z = np.concatenate((z, z[..., :1]), axis=-1)
    even = 0.5 * (z + zc)
    odd = -0.5j * (z - zc)
    out = even + _real_twiddle(n) * odd
    out[..., 0] = out[..., 0].real
    out[..., half] = out[..., half].real
    return out


def irfft(coeffs, n):
    """Inverse of :func:`rfft`; imaginary parts of modes 0 and n/2 are ignored."""
    s = np.asarray(coeffs, dtype=complex)
    _check_length(n)
    half = n // 2
    if s.shape[-1] != half + 1:
        raise ValueError(f"expected {half + 1} coefficients for n={n}, got {s.shape[-1]}")
    s = s.copy()
    s[..., 0] = s[..., 0].real
    s[..., half] = s[..., half].real
    sc = np.conj(s[..., ::-1])
    even = 0.5 * (s + sc)[..., :half]
    odd = (0.5 * (s - sc) * np.conj(_real_twiddle(n)))[..., :half]
    z = _icfft(even + 1j * odd)
    out = np.empty(s.shape[:-1] + (n,))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


@dataclass
class Spectrum:
    """Real-input Fourier coefficients together with their physical wavenumbers."""

    coefficients: np.ndarray
    wavenumbers: np.ndarray
    n: int

    @classmethod
    def from_signal(cls, u, length=2 * np.pi):
        u = np.asarray(u, dtype=float)
        n = u.shape[-1]
        return cls(rfft(u), 2 * np.pi * np.arange(n // 2 + 1) / length, n)

    def to_signal(self):
        return irfft(self.coefficients, self.n)

    def power(self):
        """Per-mode contribution to ``sum |u_j|^2`` (Parseval weights applied)."""
        w = np.full(self.coefficients.shape[-1], 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w * np.abs(self.coefficients) ** 2 / self.n
