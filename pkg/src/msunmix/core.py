"""Core spectral data types and linear-mixing algebra.

Every other module builds on these containers.  Arrays are coerced to
float64, validated on construction, and made read-only so instances can be
shared freely across workers.  Pixel ordering is row-major everywhere:
left to right, top to bottom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


class NumericalError(RuntimeError):
    """Raised when an algorithm cannot proceed for numerical reasons."""


def _as_locked_array(values, name: str, *, ndim: int = 1) -> FloatArray:
    """Copy ``values`` to a read-only float64 array, rejecting bad entries."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite (no NaN or infinity)")
    arr.flags.writeable = False
    return arr


def _lock(arr: np.ndarray) -> FloatArray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class WavelengthAxis:
    """Strictly increasing wavelength samples in nanometers.

    A single-sample axis is allowed (a one-channel multispectral cube has
    one); interpolation and quadrature need at least two samples and raise
    where they require them.
    """

    samples: FloatArray

    def __post_init__(self) -> None:
        arr = _as_locked_array(self.samples, "wavelength samples")
        if arr.size < 1:
            raise ValueError("wavelength axis needs at least 1 sample")
        if np.any(arr <= 0):
            raise ValueError("wavelengths must be positive")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("wavelengths must be strictly increasing")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return int(self.samples.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WavelengthAxis):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.samples[0]), float(self.samples[-1])


@dataclass(frozen=True, eq=False)
class Spectrum:
    """A single spectrum sampled on a wavelength axis.

    Values are nonnegative: reflectance in [0, 1] or radiance in arbitrary
    linear units.  The container is unit-agnostic; no conversion happens here.
    """

    axis: WavelengthAxis
    values: FloatArray

    def __post_init__(self) -> None:
        arr = _as_locked_array(self.values, "spectrum values")
        if arr.size != len(self.axis):
            raise ValueError(
                f"spectrum has {arr.size} values but axis has {len(self.axis)} samples"
            )
        if np.any(arr < 0):
            raise ValueError("spectrum values must be nonnegative")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """A width x height grid of spectra on a shared band axis.

    ``data`` is indexed ``[row, col, band]`` with row-major pixel order.
    ``pan_bands`` flags band indices that come from panchromatic channels of
    a simulated camera; they take part in unmixing but are left out of
    wavelength-indexed spectra exports.
    """

    width: int
    height: int
    axis: WavelengthAxis
    data: FloatArray
    units: str = "arbitrary"
    pan_bands: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("cube must contain at least one pixel")
        arr = np.array(self.data, dtype=np.float64, copy=True)
        expected = (self.height, self.width, len(self.axis))
        if arr.shape != expected:
            raise ValueError(f"cube data has shape {arr.shape}, expected {expected}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("cube values must be finite (no NaN or infinity)")
        if np.any(arr < 0):
            raise ValueError("cube values must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        pan = tuple(int(i) for i in self.pan_bands)
        if any(i < 0 or i >= len(self.axis) for i in pan):
            raise ValueError("pan_bands indices out of band range")
        if len(set(pan)) != len(pan):
            raise ValueError("pan_bands indices must be distinct")
        object.__setattr__(self, "pan_bands", pan)

    @property
    def band_count(self) -> int:
        return len(self.axis)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def pixel_spectrum(self, row: int, col: int) -> Spectrum:
        return Spectrum(self.axis, self.data[row, col])


@dataclass(frozen=True, eq=False)
class EndmemberSet:
    """p spectral signatures on a shared band axis.

    ``pixel_indices`` records the source pixels (row-major, flattened) when
    the signatures were selected from real data.
    """

    axis: WavelengthAxis
    signatures: FloatArray
    names: tuple[str, ...] | None = None
    pixel_indices: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.signatures, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError("signatures must be a 2-D (p, bands) array")
        p, bands = arr.shape
        if bands != len(self.axis):
            raise ValueError(
                f"signatures have {bands} bands but axis has {len(self.axis)} samples"
            )
        if not 1 <= p <= bands:
            raise ValueError(f"endmember count must satisfy 1 <= p <= {bands}, got {p}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signatures must be finite")
        if np.any(arr < 0):
            raise ValueError("signatures must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "signatures", arr)
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != p:
                raise ValueError(f"expected {p} names, got {len(names)}")
            object.__setattr__(self, "names", names)
        if self.pixel_indices is not None:
            idx = tuple(int(i) for i in self.pixel_indices)
            if len(idx) != p:
                raise ValueError(f"expected {p} pixel indices, got {len(idx)}")
            object.__setattr__(self, "pixel_indices", idx)

    @property
    def count(self) -> int:
        return int(self.signatures.shape[0])

    def label(self, k: int) -> str:
        if self.names is not None:
            return self.names[k]
        return f"em{k + 1}"

    def labels(self) -> tuple[str, ...]:
        return tuple(self.label(k) for k in range(self.count))


@dataclass(frozen=True, eq=False)
class AbundanceField:
    """Per-pixel fractional endmember contributions.

    ``fractions`` is indexed ``[row, col, endmember]``.  All fractions are
    nonnegative; when ``sum_to_one`` is set each pixel's fractions sum to 1
    within 1e-6.
    """

    width: int
    height: int
    fractions: FloatArray
    sum_to_one: bool = True

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("abundance field must cover at least one pixel")
        arr = np.array(self.fractions, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[:2] != (self.height, self.width):
            raise ValueError(
                f"fractions have shape {arr.shape}, expected "
                f"({self.height}, {self.width}, p)"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("fractions must be finite")
        if np.any(arr < 0):
            raise ValueError("fractions must be nonnegative")
        if self.sum_to_one:
            sums = arr.sum(axis=2)
            worst = float(np.abs(sums - 1.0).max())
            if worst > 1e-6:
                raise ValueError(
                    f"sum-to-one violated: worst pixel sum deviates by {worst:.3e}"
                )
        arr.flags.writeable = False
        object.__setattr__(self, "fractions", arr)

    @property
    def endmember_count(self) -> int:
        return int(self.fractions.shape[2])

    def as_table(self) -> FloatArray:
        """Fractions as a (pixels, p) table in row-major pixel order."""
        p = self.endmember_count
        return _lock(self.fractions.reshape(self.height * self.width, p))


def mix(endmembers: EndmemberSet, fractions) -> Spectrum:
    """Fraction-weighted sum of the endmember signatures."""
    frac = np.asarray(fractions, dtype=np.float64)
    if frac.ndim != 1 or frac.size != endmembers.count:
        raise ValueError(
            f"expected {endmembers.count} fractions, got shape {frac.shape}"
        )
    if not np.all(np.isfinite(frac)):
        raise ValueError("fractions must be finite")
    if np.any(frac < 0):
        raise ValueError("fractions must be nonnegative")
    values = frac @ endmembers.signatures
    return Spectrum(endmembers.axis, values)


def flatten(cube: SpectralCube) -> FloatArray:
    """Cube as a (bands, pixels) table; column j is pixel j in row-major order."""
    table = cube.data.reshape(cube.pixel_count, cube.band_count).T
    return _lock(table)


def unflatten(
    table,
    width: int,
    height: int,
    axis: WavelengthAxis,
    *,
    units: str = "arbitrary",
    pan_bands: tuple[int, ...] = (),
) -> SpectralCube:
    """Inverse of :func:`flatten` given the original grid dimensions."""
    arr = np.asarray(table, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("table must be 2-D (bands, pixels)")
    bands, pixels = arr.shape
    if pixels != width * height:
        raise ValueError(f"table has {pixels} pixels, expected {width * height}")
    if bands != len(axis):
        raise ValueError(f"table has {bands} bands but axis has {len(axis)}")
    data = arr.T.reshape(height, width, bands)
    return SpectralCube(width, height, axis, data, units=units, pan_bands=pan_bands)
