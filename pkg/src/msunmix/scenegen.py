"""Synthetic ground-truth scenes for desk-scale validation of the pipeline.

A scene is a linear mixture of smooth random signatures (sums of Gaussian
bumps over wavelength) under per-pixel Dirichlet abundances, with a chosen
number of pixels forced pure per endmember and optional clamped Gaussian
noise.  Everything is a pure function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AbundanceField, EndmemberSet, SpectralCube, WavelengthAxis

# Endmember smoothness: each signature sums this many Gaussian bumps.
_BUMPS_MIN, _BUMPS_MAX = 3, 6
# Baseline added so signatures stay safely positive.
_BASELINE = 0.05


@dataclass(frozen=True, eq=False)
class SceneSpec:
    """Parameters of a synthetic scene.

    ``alpha`` is the Dirichlet concentration of the abundance model;
    ``pure_pixel_count`` pixels per endmember are overwritten with one-hot
    abundances; ``noise_sigma`` is the additive Gaussian noise level (the
    noisy cube is clamped at zero, a slight upward bias by construction).
    """

    width: int
    height: int
    p: int
    axis: WavelengthAxis
    seed: int
    alpha: float = 1.0
    pure_pixel_count: int = 1
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("scene must contain at least one pixel")
        if self.p < 2:
            raise ValueError(f"endmember count must be >= 2, got {self.p}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.pure_pixel_count < 0:
            raise ValueError("pure_pixel_count must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.p * self.pure_pixel_count > self.width * self.height:
            raise ValueError("not enough pixels for the requested pure pixels")


def random_signatures(
    axis: WavelengthAxis, p: int, rng: np.random.Generator
) -> np.ndarray:
    """(p, bands) smooth nonnegative signatures from seeded Gaussian bumps."""
    lam = axis.samples
    lo, hi = axis.span
    span = hi - lo
    signatures = np.empty((p, lam.size))
    for k in range(p):
        bumps = int(rng.integers(_BUMPS_MIN, _BUMPS_MAX + 1))
        curve = np.full(lam.size, _BASELINE)
        for _ in range(bumps):
            center = rng.uniform(lo, hi)
            width = rng.uniform(0.04, 0.18) * span
            amp = rng.uniform(0.2, 1.0)
            curve = curve + amp * np.exp(-0.5 * ((lam - center) / width) ** 2)
        peak = rng.uniform(0.4, 0.95)
        signatures[k] = curve * (peak / curve.max())
    return signatures


def generate(spec: SceneSpec) -> tuple[SpectralCube, EndmemberSet, AbundanceField]:
    """Build (cube, true endmembers, true abundances) from the spec."""
    if spec.p > len(spec.axis):
        raise ValueError(
            f"cannot place {spec.p} endmembers on {len(spec.axis)} bands"
        )
    rng = np.random.default_rng(spec.seed)
    signatures = random_signatures(spec.axis, spec.p, rng)
    n = spec.width * spec.height

    fractions = rng.dirichlet(np.full(spec.p, spec.alpha), size=n)
    if spec.pure_pixel_count > 0:
        positions = rng.permutation(n)[: spec.p * spec.pure_pixel_count]
        for k in range(spec.p):
            chosen = positions[k * spec.pure_pixel_count:(k + 1) * spec.pure_pixel_count]
            fractions[chosen] = 0.0
            fractions[chosen, k] = 1.0

    table = signatures.T @ fractions.T  # (bands, pixels)
    if spec.noise_sigma > 0:
        table = table + spec.noise_sigma * rng.standard_normal(table.shape)
        table = np.maximum(table, 0.0)

    cube = SpectralCube(
        spec.width,
        spec.height,
        spec.axis,
        table.T.reshape(spec.height, spec.width, len(spec.axis)),
        units="reflectance",
    )
    endmembers = EndmemberSet(spec.axis, signatures)
    field = AbundanceField(
        spec.width,
        spec.height,
        fractions.reshape(spec.height, spec.width, spec.p),
        sum_to_one=True,
    )
    return cube, endmembers, field


def parse_scene_spec(text: str) -> SceneSpec:
    """Parse the key:value scene description format.

    Recognized keys: width, height, endmembers, seed, alpha, pure_pixels,
    noise_sigma, and wavelengths (either 'start:stop:count' or an explicit
    comma-separated list).  Blank lines and '#' comments are skipped.
    """
    entries: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition(":")
        if not sep:
            raise ValueError(f"line {line_no}: expected 'key: value', got {line!r}")
        entries[key.strip().lower()] = value.strip()

    def need(key: str) -> str:
        if key not in entries:
            raise ValueError(f"scene spec is missing the {key!r} key")
        return entries[key]

    wl = need("wavelengths")
    if "," in wl:
        axis = WavelengthAxis([float(tok) for tok in wl.split(",")])
    else:
        parts = wl.split(":")
        if len(parts) != 3:
            raise ValueError(
                "wavelengths must be 'start:stop:count' or a comma-separated list"
            )
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        axis = WavelengthAxis(np.linspace(start, stop, count))

    return SceneSpec(
        width=int(need("width")),
        height=int(need("height")),
        p=int(need("endmembers")),
        axis=axis,
        seed=int(need("seed")),
        alpha=float(entries.get("alpha", "1.0")),
        pure_pixel_count=int(entries.get("pure_pixels", "1")),
        noise_sigma=float(entries.get("noise_sigma", "0.0")),
    )


def load_scene_spec(path) -> SceneSpec:
    with open(path, "r", encoding="ascii") as handle:
        return parse_scene_spec(handle.read())
