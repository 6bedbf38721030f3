"""Per-pixel abundance estimation under the linear mixing model.

The default solve is fully constrained least squares: nonnegativity via an
active-set NNLS plus a soft sum-to-one constraint expressed as a heavily
weighted extra equation row, followed by an exact renormalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AbundanceField,
    EndmemberSet,
    FloatArray,
    NumericalError,
    SpectralCube,
    flatten,
)

# Fractions this close below zero are numerical dust and are clamped.
_DUST = 1e-12


@dataclass(frozen=True)
class AbundanceConfig:
    """Constraint flags and the sum-to-one row weight.

    Both constraints default to on (fully constrained least squares).
    ``sto_weight`` is the weight delta of the sum-to-one equation row,
    relative to unit-normalized endmember columns.
    """

    sum_to_one: bool = True
    nonnegative: bool = True
    sto_weight: float = 1e3

    def __post_init__(self) -> None:
        if not self.sto_weight > 0:
            raise ValueError(f"sto_weight must be > 0, got {self.sto_weight}")


def nnls(a, b, *, dual_tol: float = 1e-10, max_outer: int | None = None) -> FloatArray:
    """Nonnegative least squares by the Lawson-Hanson active-set method.

    Solves min ||a x - b|| subject to x >= 0.  A zeroed variable enters the
    passive set only while its column-normalized dual exceeds ``dual_tol``
    times the residual norm, which keeps the test scale-correct even when
    one equation row (the sum-to-one constraint) dwarfs the others.  The
    outer loop is capped at 3 * columns passes, exact for the small systems
    this package solves.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.size:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    n = a.shape[1]
    cap = 3 * n if max_outer is None else max_outer
    col_norms = np.linalg.norm(a, axis=0)
    if np.any(col_norms == 0):
        raise ValueError("system matrix contains a zero column")
    # Duals below the rounding noise of their own computation never enter.
    noise_floor = 10 * np.finfo(np.float64).eps * float(np.linalg.norm(b))

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)

    for _ in range(cap):
        residual = b - a @ x
        w = (a.T @ residual) / col_norms
        w[passive] = -np.inf
        t = int(np.argmax(w))
        if w[t] <= max(dual_tol * float(np.linalg.norm(residual)), noise_floor):
            return x
        passive[t] = True
        for _ in range(cap * 10):
            z = np.zeros(n)
            z[passive], *_ = np.linalg.lstsq(a[:, passive], b, rcond=None)
            if np.all(z[passive] > 0):
                x = z
                break
            blocking = passive & (z <= 0)
            denom = np.maximum(x[blocking] - z[blocking], 1e-300)
            ratios = x[blocking] / denom
            alpha = float(ratios.min())
            x = x + alpha * (z - x)
            # the ratio-achieving indices land on zero by construction; set
            # them exactly, or rounding dust keeps them passive forever
            x[np.flatnonzero(blocking)[ratios <= alpha]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
        else:
            raise NumericalError("NNLS inner loop failed to settle")
    raise NumericalError(f"NNLS did not converge within {cap} active-set passes")


def _augmented_system(
    normalized: FloatArray, norms: FloatArray, y: FloatArray, weight: float
) -> tuple[FloatArray, FloatArray]:
    """Append the sum-to-one row, expressed in the normalized variables.

    The row constrains the original fractions f = g / norms, so its entries
    are delta / norms.  The weight scales with the pixel magnitude so the
    constraint keeps dominating for arbitrarily scaled (radiance) data.
    """
    delta = weight * max(1.0, float(np.abs(y).max()))
    a = np.vstack([normalized, delta / norms])
    b = np.concatenate([y, [delta]])
    return a, b


def solve_pixel(spectrum, endmembers, config: AbundanceConfig) -> FloatArray:
    """Fractions of each endmember in one pixel spectrum.

    ``endmembers`` is a (bands, p) column table.  With both flags set this is
    fully constrained least squares; with only ``nonnegative`` it is plain
    NNLS; with neither it is an unconstrained normal-equations solve with a
    pseudo-inverse fallback on rank deficiency.  Columns are unit-normalized
    internally and fractions rescaled back, which leaves the solution
    unchanged while conditioning the system.
    """
    e = np.asarray(endmembers, dtype=np.float64)
    y = np.asarray(spectrum, dtype=np.float64)
    if e.ndim != 2:
        raise ValueError("endmembers must be a 2-D (bands, p) table")
    bands, p = e.shape
    if p > bands:
        raise ValueError(f"more endmembers ({p}) than bands ({bands})")
    if y.shape != (bands,):
        raise ValueError(f"spectrum has shape {y.shape}, expected ({bands},)")

    norms = np.linalg.norm(e, axis=0)
    if np.any(norms == 0):
        raise ValueError("endmember table contains a zero signature")
    normalized = e / norms

    if config.sum_to_one:
        a, b = _augmented_system(normalized, norms, y, config.sto_weight)
    else:
        a, b = normalized, y

    if config.nonnegative:
        g = nnls(a, b)
    else:
        gram = a.T @ a
        try:
            g = np.linalg.solve(gram, a.T @ b)
        except np.linalg.LinAlgError:
            g = np.linalg.pinv(a) @ b
        if not np.all(np.isfinite(g)):
            raise NumericalError("unconstrained solve failed on rank-deficient table")

    fractions = g / norms
    if config.sum_to_one:
        total = float(fractions.sum())
        if total > 1e-6:
            fractions = fractions / total
    return fractions


def solve_cube(
    cube: SpectralCube, endmembers: EndmemberSet, config: AbundanceConfig
) -> AbundanceField:
    """Apply :func:`solve_pixel` to every pixel of the cube.

    Requires the cube and endmember axes to match exactly.  With the
    nonnegative flag cleared a genuinely negative solution cannot be stored
    in an :class:`AbundanceField` and raises.
    """
    if cube.axis != endmembers.axis:
        raise ValueError("cube axis does not match endmember axis")
    table = flatten(cube)  # (bands, pixels)
    e = endmembers.signatures.T  # (bands, p)
    p = endmembers.count
    out = np.empty((cube.pixel_count, p))
    for j in range(cube.pixel_count):
        out[j] = solve_pixel(table[:, j], e, config)
    out[(out < 0) & (out > -_DUST)] = 0.0
    fractions = out.reshape(cube.height, cube.width, p)
    return AbundanceField(
        cube.width, cube.height, fractions, sum_to_one=config.sum_to_one
    )
