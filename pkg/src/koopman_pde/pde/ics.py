"""Initial-condition families.

Sine parameters (A, phi) and the shape parameters of square, Gaussian and
triangle waves are drawn as a Latin hypercube over their ranges, one stratum
set per batch; sine frequencies follow a truncated geometric law. Ranges left
as ``None`` scale with the domain length ``L``.
"""

from dataclasses import dataclass, fields
from typing import Optional, Tuple

import numpy as np

from ..numerics import latin_hypercube, truncated_geometric

IC_KINDS = ("white_noise", "sine", "square", "gaussian", "triangle")
IC_TAGS = {kind: i for i, kind in enumerate(IC_KINDS)}

Range = Optional[Tuple[float, float]]


@dataclass
class ICParams:
    sigma: float = 0.5
    geometric_p: float = 0.25
    omega_max: int = 10
    sine_amplitude: Range = (0.0, 1.0)
    sine_phase: Range = (0.0, 2 * np.pi)
    square_height: Range = (0.2, 1.0)
    square_width: Range = None  # (0.5, L/4)
    square_center: Range = None  # domain
    gaussian_amplitude: Range = (0.2, 1.0)
    gaussian_width: Range = None  # (L/32, L/8)
    gaussian_center: Range = None
    triangle_amplitude: Range = (0.2, 1.0)
    triangle_half_width: Range = None  # (L/16, L/4)
    triangle_center: Range = None

    def resolved(self, grid):
        """Copy with every ``None`` range replaced by its domain-relative default."""
        L = grid.length
        defaults = {
            "square_width": (0.5, L / 4),
            "square_center": (grid.a, grid.b),
            "gaussian_width": (L / 32, L / 8),
            "gaussian_center": (grid.a, grid.b),
            "triangle_half_width": (L / 16, L / 4),
            "triangle_center": (grid.a, grid.b),
        }
        out = ICParams(**{f.name: getattr(self, f.name) for f in fields(self)})
        for key, val in defaults.items():
            if getattr(out, key) is None:
                setattr(out, key, val)
        return out


def periodic_offset(grid, center):
    """Signed distance ``x - center`` wrapped into ``[-L/2, L/2)``."""
    L = grid.length
    d = np.subtract.outer(np.atleast_1d(center), grid.x)
    return (-d + L / 2) % L - L / 2


def sine_wave(grid, amplitude, omega, phase):
    a = np.atleast_1d(amplitude)[:, None]
    w = np.atleast_1d(omega)[:, None]
    p = np.atleast_1d(phase)[:, None]
    return a * np.sin(w * grid.x + p)


def square_wave(grid, height, width, center):
    d = periodic_offset(grid, center)
    inside = np.abs(d) < np.atleast_1d(width)[:, None] / 2
    return np.where(inside, np.atleast_1d(height)[:, None], 0.0)


def gaussian(grid, amplitude, width, center):
    d = periodic_offset(grid, center)
    w = np.atleast_1d(width)[:, None]
    return np.atleast_1d(amplitude)[:, None] * np.exp(-0.5 * (d / w) ** 2)


def triangle_wave(grid, amplitude, half_width, center):
    d = periodic_offset(grid, center)
    hw = np.atleast_1d(half_width)[:, None]
    return np.atleast_1d(amplitude)[:, None] * np.maximum(0.0, 1.0 - np.abs(d) / hw)


def _scale(unit, ranges):
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    return lo + unit * (hi - lo)


def sample_ics(kind, grid, m, rng, params=None):
    """Draw ``m`` initial conditions of one family as an ``(m, n)`` array."""
    if kind not in IC_TAGS:
        raise ValueError(f"unknown initial condition kind {kind!r}; expected one of {IC_KINDS}")
    p = (params or ICParams()).resolved(grid)
    if kind == "white_noise":
        return p.sigma * rng.standard_normal((m, grid.n))
    if kind == "sine":
        amp, phase = _scale(latin_hypercube(2, m, rng), [p.sine_amplitude, p.sine_phase]).T
        omega = truncated_geometric(p.geometric_p, p.omega_max, rng, size=m)
        return sine_wave(grid, amp, omega, phase)
    if kind == "square":
        h, w, c = _scale(latin_hypercube(3, m, rng), [p.square_height, p.square_width, p.square_center]).T
        return square_wave(grid, h, w, c)
    if kind == "gaussian":
        ranges = [p.gaussian_amplitude, p.gaussian_width, p.gaussian_center]
        a, w, c = _scale(latin_hypercube(3, m, rng), ranges).T
        return gaussian(grid, a, w, c)
    ranges = [p.triangle_amplitude, p.triangle_half_width, p.triangle_center]
    a, hw, c = _scale(latin_hypercube(3, m, rng), ranges).T
    return triangle_wave(grid, a, hw, c)


def sample_ic(kind, grid, rng, params=None):
    return sample_ics(kind, grid, 1, rng, params)[0]


@dataclass
class InitialCondition:
    """A fully specified initial condition, e.g. ``InitialCondition("sine", {"A": 1, "omega": 4, "phi": 0})``."""

    kind: str
    values: dict

    _BUILDERS = {
        "sine": (sine_wave, ("A", "omega", "phi"), {"phi": 0.0}),
        "square": (square_wave, ("height", "width", "center"), {"center": 0.0}),
        "gaussian": (gaussian, ("amplitude", "width", "center"), {"center": 0.0}),
        "triangle": (triangle_wave, ("amplitude", "half_width", "center"), {"center": 0.0}),
    }

    def evaluate(self, grid):
        if self.kind == "zero":
            return np.zeros(grid.n)
        if self.kind not in self._BUILDERS:
            raise ValueError(f"cannot evaluate initial condition kind {self.kind!r}")
        fn, names, defaults = self._BUILDERS[self.kind]
        unknown = set(self.values) - set(names)
        if unknown:
            raise ValueError(f"unknown {self.kind} parameters: {sorted(unknown)}")
        args = []
        for name in names:
            if name in self.values:
                args.append(float(self.values[name]))
            elif name in defaults:
                args.append(defaults[name])
            else:
                raise ValueError(f"{self.kind} initial condition needs {name!r}")
        return fn(grid, *args)[0]

    @classmethod
    def parse(cls, text):
        """Parse ``kind:key=value,key=value`` (e.g. ``sine:A=1,omega=4``)."""
        kind, _, rest = text.partition(":")
        values = {}
        for item in filter(None, rest.split(",")):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"malformed initial condition parameter {item!r}")
            values[key.strip()] = float(val)
        return cls(kind.strip(), values)
