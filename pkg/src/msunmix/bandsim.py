"""Simulate a multispectral cube from a hyperspectral cube and a camera model.

Each output channel value is the trapezoidal integral of
illumination * reflectance * sensitivity over the shared wavelength range.
Sensitivity curves are resampled onto the data axis by linear interpolation
(zero outside their support); the data axis is never resampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    FloatArray,
    Spectrum,
    SpectralCube,
    WavelengthAxis,
    _as_locked_array,
    flatten,
    unflatten,
)

KIND_SELECTIVE = "selective"
KIND_PANCHROMATIC = "panchromatic"

# Minimal nm step used to keep simulated band axes strictly increasing when a
# broad (panchromatic) channel's centroid falls below its predecessor's.
_AXIS_BUMP_NM = 1e-3


def trapezoid_weights(axis: WavelengthAxis) -> FloatArray:
    """Quadrature weights w such that sum(w * f) is the trapezoid rule on axis."""
    lam = axis.samples
    if lam.size < 2:  # zero-width integration range
        return np.zeros_like(lam)
    diffs = np.diff(lam)
    w = np.empty_like(lam)
    w[0] = diffs[0] / 2.0
    w[-1] = diffs[-1] / 2.0
    if lam.size > 2:
        w[1:-1] = (diffs[:-1] + diffs[1:]) / 2.0
    return w


@dataclass(frozen=True, eq=False)
class SensitivityChannel:
    """One camera channel: a nonnegative response curve S over wavelength."""

    name: str
    axis: WavelengthAxis
    response: FloatArray
    kind: str = KIND_SELECTIVE

    def __post_init__(self) -> None:
        arr = _as_locked_array(self.response, f"channel {self.name!r} response")
        if arr.size != len(self.axis):
            raise ValueError(
                f"channel {self.name!r}: {arr.size} response values for "
                f"{len(self.axis)} wavelengths"
            )
        if np.any(arr < 0):
            raise ValueError(f"channel {self.name!r}: response must be nonnegative")
        if not np.any(arr > 0):
            raise ValueError(f"channel {self.name!r}: response is identically zero")
        if self.kind not in (KIND_SELECTIVE, KIND_PANCHROMATIC):
            raise ValueError(f"channel {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "response", arr)

    @property
    def is_panchromatic(self) -> bool:
        return self.kind == KIND_PANCHROMATIC

    def centroid(self) -> float:
        """Response-weighted centroid wavelength of the channel."""
        w = trapezoid_weights(self.axis)
        weighted = w * self.response
        return float((weighted @ self.axis.samples) / weighted.sum())


@dataclass(frozen=True, eq=False)
class MultispectralValue:
    """Per-channel integrated values for one input spectrum."""

    values: FloatArray
    channel_names: tuple[str, ...]

    def __post_init__(self) -> None:
        arr = _as_locked_array(self.values, "channel values")
        if np.any(arr < 0):
            raise ValueError("channel values must be nonnegative")
        if arr.size != len(self.channel_names):
            raise ValueError(
                f"{arr.size} values for {len(self.channel_names)} channels"
            )
        object.__setattr__(self, "values", arr)
        object.__setattr__(
            self, "channel_names", tuple(str(n) for n in self.channel_names)
        )


@dataclass(frozen=True, eq=False)
class SensitivityModel:
    """A camera: ordered channels plus an optional illumination spectrum.

    When ``illumination`` is None a unit illuminant is assumed.
    """

    channels: tuple[SensitivityChannel, ...]
    illumination: Spectrum | None = None

    def __post_init__(self) -> None:
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("sensitivity model needs at least one channel")
        object.__setattr__(self, "channels", channels)

    @property
    def channel_count(self) -> int:
        return len(self.channels)

    def channel_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.channels)

    def pan_indices(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.channels) if c.is_panchromatic)


def resample_channel(
    channel: SensitivityChannel, target: WavelengthAxis
) -> SensitivityChannel:
    """Linearly interpolate a channel's response onto ``target``.

    Wavelengths outside the channel's support map to zero.  Raises when the
    supports do not overlap at all (the resampled response would vanish).
    """
    if len(channel.axis) < 2:
        raise ValueError(
            f"channel {channel.name!r}: degenerate source axis "
            f"({len(channel.axis)} sample)"
        )
    resp = np.interp(
        target.samples, channel.axis.samples, channel.response, left=0.0, right=0.0
    )
    if not np.any(resp > 0):
        lo, hi = channel.axis.span
        tlo, thi = target.span
        raise ValueError(
            f"channel {channel.name!r}: empty overlap between support "
            f"[{lo:g}, {hi:g}] nm and target axis [{tlo:g}, {thi:g}] nm"
        )
    return SensitivityChannel(channel.name, target, resp, kind=channel.kind)


def integrate_channel(
    reflectance: Spectrum,
    illumination: Spectrum | None,
    channel: SensitivityChannel,
) -> float:
    """Trapezoidal integral of I * R * S on the shared axis.

    The channel (and illumination, when given) must already live on the
    reflectance axis; use :func:`resample_channel` first.
    """
    axis = reflectance.axis
    if channel.axis != axis:
        raise ValueError(
            f"channel {channel.name!r} axis differs from the reflectance axis; "
            "resample it first"
        )
    if illumination is not None and illumination.axis != axis:
        raise ValueError("illumination axis differs from the reflectance axis")
    w = trapezoid_weights(axis)
    product = w * reflectance.values * channel.response
    if illumination is not None:
        product = product * illumination.values
    return float(product.sum())


def resample_illumination(illumination: Spectrum, target: WavelengthAxis) -> Spectrum:
    """Illumination interpolated onto ``target`` (zero outside its support)."""
    values = np.interp(
        target.samples, illumination.axis.samples, illumination.values,
        left=0.0, right=0.0,
    )
    return Spectrum(target, values)


def channel_reference_wavelengths(camera: SensitivityModel) -> FloatArray:
    """Strictly increasing per-channel reference wavelengths.

    The reference is the response-weighted centroid.  A channel whose centroid
    does not exceed its predecessor's (a broad panchromatic channel placed
    after narrow ones) is bumped up minimally; bumped values are cosmetic
    only, since panchromatic bands are excluded from wavelength-indexed plots.
    """
    refs = np.array([c.centroid() for c in camera.channels], dtype=np.float64)
    for i in range(1, refs.size):
        if refs[i] <= refs[i - 1]:
            refs[i] = refs[i - 1] + _AXIS_BUMP_NM
    return refs


def _channel_kernels(
    axis: WavelengthAxis, camera: SensitivityModel, normalize: bool
) -> FloatArray:
    """Per-channel weight vectors so that Y = kernels @ spectrum values."""
    w = trapezoid_weights(axis)
    illum = (
        resample_illumination(camera.illumination, axis).values
        if camera.illumination is not None
        else None
    )
    kernels = np.empty((camera.channel_count, len(axis)))
    for i, channel in enumerate(camera.channels):
        resampled = resample_channel(channel, axis)
        kernel = w * resampled.response
        if illum is not None:
            kernel = kernel * illum
        if normalize:
            area = float((w * resampled.response).sum())
            kernel = kernel / area
        kernels[i] = kernel
    return kernels


def simulate_spectrum(
    spectrum: Spectrum, camera: SensitivityModel, *, normalize: bool = False
) -> MultispectralValue:
    """Integrate one spectrum against every camera channel."""
    kernels = _channel_kernels(spectrum.axis, camera, normalize)
    values = np.maximum(kernels @ spectrum.values, 0.0)
    return MultispectralValue(values, camera.channel_names())


def simulate_cube(
    cube: SpectralCube, camera: SensitivityModel, *, normalize: bool = False
) -> SpectralCube:
    """Simulate a multispectral cube: one band per camera channel.

    Each pixel's channel value equals :func:`integrate_channel` applied to
    that pixel's spectrum.  With ``normalize`` set, every channel value is
    divided by the channel's own response integral on the data axis (off by
    default: raw integrals keep the trend imposed by decreasing sensitivity
    peaks at longer wavelengths).
    """
    kernels = _channel_kernels(cube.axis, camera, normalize)
    table = np.maximum(kernels @ flatten(cube), 0.0)  # guard rounding below 0
    out_axis = WavelengthAxis(channel_reference_wavelengths(camera))
    return unflatten(
        table,
        cube.width,
        cube.height,
        out_axis,
        units="arbitrary",
        pan_bands=camera.pan_indices(),
    )
