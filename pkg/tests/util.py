"""Shared builders for the test suite."""

import numpy as np

from msunmix.bandsim import (
    KIND_PANCHROMATIC,
    KIND_SELECTIVE,
    SensitivityChannel,
    SensitivityModel,
)
from msunmix.core import SpectralCube, WavelengthAxis


def uniform_axis(start=400.0, stop=1000.0, count=61):
    return WavelengthAxis(np.linspace(start, stop, count))


def triangle_channel(name, axis, center, half_width, peak=1.0, kind=KIND_SELECTIVE):
    lam = axis.samples
    resp = peak * np.maximum(0.0, 1.0 - np.abs(lam - center) / half_width)
    return SensitivityChannel(name, axis, resp, kind=kind)


def box_channel(name, axis, lo, hi, level=1.0, kind=KIND_SELECTIVE):
    lam = axis.samples
    resp = np.where((lam >= lo) & (lam <= hi), level, 0.0)
    return SensitivityChannel(name, axis, resp, kind=kind)


def toy_camera(axis=None, channels=3):
    """Small all-selective camera covering the axis span."""
    if axis is None:
        axis = uniform_axis()
    lo, hi = axis.span
    centers = np.linspace(lo + 50, hi - 50, channels)
    width = (hi - lo) / channels
    return SensitivityModel(
        tuple(
            triangle_channel(f"t{i + 1}", axis, centers[i], width)
            for i in range(channels)
        )
    )


def pan_camera(axis=None):
    """Three selective channels plus a trailing panchromatic one."""
    if axis is None:
        axis = uniform_axis()
    lo, hi = axis.span
    selective = [
        triangle_channel(f"s{i + 1}", axis, c, (hi - lo) / 4)
        for i, c in enumerate(np.linspace(lo + 60, hi - 60, 3))
    ]
    pan = box_channel("wide", axis, lo, hi, level=0.5, kind=KIND_PANCHROMATIC)
    return SensitivityModel(tuple(selective + [pan]))


def random_cube(rng, width=3, height=2, bands=5, axis=None):
    if axis is None:
        axis = WavelengthAxis(np.linspace(400.0, 900.0, bands))
    data = rng.random((height, width, bands))
    return SpectralCube(width, height, axis, data)
