#!/usr/bin/env python3
"""Regenerate the bundled camera sensitivity curves.

These are shape-faithful stand-ins, not measured data: band-limited
triangular lobes whose peaks decrease toward longer wavelengths, plus one
broad panchromatic channel on the 9-channel camera.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from msunmix.bandsim import (  # noqa: E402
    KIND_PANCHROMATIC,
    KIND_SELECTIVE,
    SensitivityChannel,
    SensitivityModel,
)
from msunmix.core import WavelengthAxis  # noqa: E402
from msunmix.fileio import write_curves  # noqa: E402

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "msunmix", "data")


def triangle(lam, center, half_width, peak):
    return peak * np.maximum(0.0, 1.0 - np.abs(lam - center) / half_width)


def smooth_plateau(lam, lo, hi, ramp, peak):
    rise = np.clip((lam - lo) / ramp, 0.0, 1.0)
    fall = np.clip((hi - lam) / ramp, 0.0, 1.0)
    return peak * np.minimum(rise, fall)


def real_camera():
    """9 channels on 400-1000 nm: 8 selective triangles + 1 panchromatic."""
    axis = WavelengthAxis(np.arange(400.0, 1000.0 + 1e-9, 5.0))
    lam = axis.samples
    centers = np.linspace(450.0, 915.0, 8)
    peaks = np.linspace(0.92, 0.38, 8)
    widths = np.linspace(38.0, 55.0, 8)
    channels = []
    for i in range(8):
        resp = triangle(lam, centers[i], widths[i], peaks[i])
        channels.append(
            SensitivityChannel(f"ch{i + 1}", axis, resp, kind=KIND_SELECTIVE)
        )
    pan = smooth_plateau(lam, 410.0, 990.0, 60.0, 0.55)
    channels.append(SensitivityChannel("ch9", axis, pan, kind=KIND_PANCHROMATIC))
    return SensitivityModel(tuple(channels))


def synthetic_camera():
    """14 selective channels covering 400-2500 nm with decreasing peaks."""
    axis = WavelengthAxis(np.arange(400.0, 2500.0 + 1e-9, 10.0))
    lam = axis.samples
    centers = np.linspace(470.0, 2430.0, 14)
    peaks = np.linspace(0.95, 0.30, 14)
    widths = np.linspace(70.0, 110.0, 14)
    channels = []
    for i in range(14):
        resp = triangle(lam, centers[i], widths[i], peaks[i])
        channels.append(
            SensitivityChannel(f"b{i + 1}", axis, resp, kind=KIND_SELECTIVE)
        )
    return SensitivityModel(tuple(channels))


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    write_curves(real_camera(), os.path.join(OUT_DIR, "real_camera.csv"))
    write_curves(synthetic_camera(), os.path.join(OUT_DIR, "synthetic_camera.csv"))
    print(f"wrote camera curves to {os.path.abspath(OUT_DIR)}")


if __name__ == "__main__":
    main()
