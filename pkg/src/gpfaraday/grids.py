"""Cartesian computation grids with FFT-compatible layout.

Axis order is (x, y, z); points run from -extent to +extent - spacing
(endpoint excluded, matching the periodic FFT convention), so the exact
origin is always a grid point for even point counts.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft


class GridError(ValueError):
    pass


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid; extents are half-widths per axis in um."""

    points: tuple          # points per axis, powers of two
    extents: tuple         # half-width per axis, um
    spacings: tuple = field(init=False)

    def __post_init__(self):
        points = tuple(int(n) for n in self.points)
        extents = tuple(float(e) for e in self.extents)
        if len(points) not in (1, 2, 3):
            raise GridError(f"grid must be 1D, 2D or 3D, got {len(points)} axes")
        if len(points) != len(extents):
            raise GridError("points and extents must have the same length")
        for n in points:
            if not _is_power_of_two(n):
                raise GridError(f"points per axis must be a power of two, got {n}")
        for e in extents:
            if not e > 0:
                raise GridError(f"extents must be positive, got {e}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "spacings",
                           tuple(2.0 * e / n for e, n in zip(extents, points)))

    @property
    def dims(self):
        return len(self.points)

    @property
    def shape(self):
        return self.points

    @property
    def dvol(self):
        """Volume element, um^dims."""
        return float(np.prod(self.spacings))

    def axis(self, i):
        """Coordinates along axis i, um."""
        n, d = self.points[i], self.spacings[i]
        return -self.extents[i] + d * np.arange(n)

    def meshgrid(self):
        return np.meshgrid(*(self.axis(i) for i in range(self.dims)), indexing="ij")

    def wavenumbers(self, i):
        """Angular wavenumbers along axis i, um^-1 (FFT layout)."""
        return 2.0 * np.pi * sfft.fftfreq(self.points[i], d=self.spacings[i])

    def ksquared(self):
        """|k|^2 on the full grid, um^-2 (FFT layout)."""
        ks = [self.wavenumbers(i) for i in range(self.dims)]
        out = np.zeros(self.shape)
        for i, k in enumerate(ks):
            shape = [1] * self.dims
            shape[i] = len(k)
            out = out + (k ** 2).reshape(shape)
        return out

    @property
    def center_index(self):
        """Index of the exact origin."""
        return tuple(n // 2 for n in self.points)

    def validate_for(self, tf_radii, healing_length):
        """Check containment of the Thomas-Fermi ellipsoid and resolution of the
        healing length; returns a list of warning strings, raises on a grid that
        cannot contain the cloud at all.
        """
        warnings = []
        for i, r in enumerate(tf_radii[: self.dims]):
            if r >= self.extents[i]:
                raise GridError(
                    f"axis {i}: extent {self.extents[i]:.3g} um does not contain "
                    f"the Thomas-Fermi radius {r:.3g} um")
            if self.extents[i] < 1.25 * r:
                warnings.append(
                    f"axis {i}: extent {self.extents[i]:.3g} um holds the "
                    f"Thomas-Fermi radius {r:.3g} um with <25% margin")
        if max(self.spacings) > 0.5 * healing_length:
            warnings.append(
                f"max spacing {max(self.spacings):.3g} um exceeds half the density "
                f"healing length {healing_length:.3g} um; fine for spin-channel "
                f"runs, not recommended for production density-channel runs")
        return warnings
