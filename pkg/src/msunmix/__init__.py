"""Multispectral band simulation and linear spectral unmixing toolkit."""

from .abundance import AbundanceConfig, nnls, solve_cube, solve_pixel
from .bandsim import (
    MultispectralValue,
    SensitivityChannel,
    SensitivityModel,
    integrate_channel,
    resample_channel,
    simulate_cube,
    simulate_spectrum,
)
from .core import (
    AbundanceField,
    EndmemberSet,
    NumericalError,
    SpectralCube,
    Spectrum,
    WavelengthAxis,
    flatten,
    mix,
    unflatten,
)
from .extraction import (
    ExtractionConfig,
    ExtractionResult,
    extract,
    nfindr,
    nmf,
    project_subspace,
    vca,
)
from .metrics import (
    MatchResult,
    SavdReport,
    match_endmembers,
    reconstruction_rmse,
    savd,
    savd_report,
    spectral_angle,
)
from .scenegen import SceneSpec, generate, load_scene_spec

__version__ = "0.1.0"

__all__ = [
    "AbundanceConfig",
    "AbundanceField",
    "EndmemberSet",
    "ExtractionConfig",
    "ExtractionResult",
    "MatchResult",
    "MultispectralValue",
    "NumericalError",
    "SavdReport",
    "SceneSpec",
    "SensitivityChannel",
    "SensitivityModel",
    "SpectralCube",
    "Spectrum",
    "WavelengthAxis",
    "extract",
    "flatten",
    "generate",
    "integrate_channel",
    "load_scene_spec",
    "match_endmembers",
    "mix",
    "nfindr",
    "nmf",
    "nnls",
    "project_subspace",
    "reconstruction_rmse",
    "resample_channel",
    "savd",
    "savd_report",
    "simulate_cube",
    "simulate_spectrum",
    "solve_cube",
    "solve_pixel",
    "spectral_angle",
    "unflatten",
    "vca",
]
