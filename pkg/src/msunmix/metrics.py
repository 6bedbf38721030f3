"""Evaluation metrics: spectral angles, endmember matching, SAVD, RMSE.

SAVD is the sum of absolute differences between an estimated and a
ground-truth abundance vector, reported in percent.  For sum-to-one vectors
it lives in [0, 200]: total confusion between two endmembers scores exactly
200 percent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import AbundanceField, EndmemberSet, FloatArray, Spectrum

# Above this endmember count matching switches from exhaustive permutation
# search to rectangular assignment.
_EXHAUSTIVE_LIMIT = 8

# Slack allowed on the [0, 200] bound before flagging a sum-to-one report.
_BOUND_SLACK = 1e-9


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("spectral angle is undefined for a zero spectrum")
    # Chord form of arccos of the normalized inner product: full relative
    # accuracy near zero, where arccos itself loses half the digits.
    chord = np.linalg.norm(u / nu - v / nv)
    return float(2.0 * np.arcsin(min(chord / 2.0, 1.0)))


def spectral_angle(a: Spectrum, b: Spectrum) -> float:
    """Angle in radians between two spectra; scale invariant."""
    if a.axis != b.axis:
        raise ValueError("spectra live on different axes")
    return _angle(a.values, b.values)


@dataclass(frozen=True, eq=False)
class MatchResult:
    """Best pairing of estimated endmembers to ground-truth endmembers.

    ``permutation[i]`` is the ground-truth index assigned to estimated
    endmember i; ``per_pair_sad`` holds the angle of each pair in estimated
    order.
    """

    permutation: tuple[int, ...]
    per_pair_sad: FloatArray
    total_sad: float

    def __post_init__(self) -> None:
        p = len(self.permutation)
        if sorted(self.permutation) != list(range(p)):
            raise ValueError("permutation must be a bijection on 0..p-1")
        sad = np.array(self.per_pair_sad, dtype=np.float64, copy=True)
        sad.flags.writeable = False
        object.__setattr__(self, "per_pair_sad", sad)


def match_endmembers(estimated: EndmemberSet, truth: EndmemberSet) -> MatchResult:
    """Permutation of ground-truth indices minimizing the total SAD."""
    if estimated.count != truth.count:
        raise ValueError(
            f"endmember counts differ: {estimated.count} vs {truth.count}"
        )
    if estimated.axis != truth.axis:
        raise ValueError("endmember sets live on different axes")
    p = estimated.count
    cost = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            cost[i, j] = _angle(estimated.signatures[i], truth.signatures[j])

    if p <= _EXHAUSTIVE_LIMIT:
        best = min(
            itertools.permutations(range(p)),
            key=lambda perm: sum(cost[i, perm[i]] for i in range(p)),
        )
        permutation = tuple(best)
    else:
        rows, cols = linear_sum_assignment(cost)
        permutation = tuple(int(cols[np.argsort(rows)[i]]) for i in range(p))

    per_pair = np.array([cost[i, permutation[i]] for i in range(p)])
    return MatchResult(permutation, per_pair, float(per_pair.sum()))


def savd(estimated, truth) -> float:
    """100 * sum_k |estimated_k - truth_k| for permutation-aligned fractions."""
    est = np.asarray(estimated, dtype=np.float64)
    ref = np.asarray(truth, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError(f"fraction vectors differ in shape: {est.shape} vs {ref.shape}")
    return 100.0 * float(np.abs(est - ref).sum())


@dataclass(frozen=True, eq=False)
class SavdReport:
    """SAVD statistics over a set of pixels or color patches.

    ``per_endmember_mean[k]`` averages the SAVD of instances whose ground
    truth contains endmember k with a positive fraction (NaN when no instance
    does).  ``overall_mean``/``overall_std`` summarize the per-endmember
    means; the std follows the sample (n-1) convention.
    """

    per_instance: FloatArray
    per_endmember_mean: FloatArray
    overall_mean: float
    overall_std: float
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        for attr in ("per_instance", "per_endmember_mean"):
            arr = np.array(getattr(self, attr), dtype=np.float64, copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, attr, arr)


def _as_fraction_table(value) -> FloatArray:
    if isinstance(value, AbundanceField):
        return value.as_table()
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected an (instances, p) fraction table")
    return arr


def savd_report(estimated, truth, names: tuple[str, ...] | None = None) -> SavdReport:
    """Per-instance and per-endmember SAVD for permutation-aligned abundances.

    ``estimated`` and ``truth`` are (instances, p) tables or AbundanceFields
    of the same shape.  When both are sum-to-one the per-instance values are
    checked against the [0, 200] bound.
    """
    est = _as_fraction_table(estimated)
    ref = _as_fraction_table(truth)
    if est.shape != ref.shape:
        raise ValueError(f"table shapes differ: {est.shape} vs {ref.shape}")
    n, p = est.shape
    if names is None:
        names = tuple(f"em{k + 1}" for k in range(p))
    elif len(names) != p:
        raise ValueError(f"expected {p} names, got {len(names)}")

    per_instance = 100.0 * np.abs(est - ref).sum(axis=1)

    est_dev = float(np.abs(est.sum(axis=1) - 1.0).max())
    ref_dev = float(np.abs(ref.sum(axis=1) - 1.0).max())
    if est_dev <= 1e-6 and ref_dev <= 1e-6:
        # sum-to-one fields: sum |a-b| <= sum a + sum b bounds SAVD by
        # 200 plus the tolerated sum deviations
        low, high = float(per_instance.min()), float(per_instance.max())
        bound = 200.0 + 100.0 * (est_dev + ref_dev) + _BOUND_SLACK
        if low < -_BOUND_SLACK or high > bound:
            raise ValueError(
                f"SAVD outside [0, 200] for sum-to-one fields: [{low}, {high}]"
            )

    per_endmember = np.full(p, np.nan)
    for k in range(p):
        present = ref[:, k] > 0
        if np.any(present):
            per_endmember[k] = per_instance[present].mean()

    valid = per_endmember[~np.isnan(per_endmember)]
    overall_mean = float(valid.mean()) if valid.size else float("nan")
    overall_std = float(valid.std(ddof=1)) if valid.size > 1 else 0.0
    return SavdReport(per_instance, per_endmember, overall_mean, overall_std, tuple(names))


def reconstruction_rmse(data, endmembers, abundances) -> float:
    """Root-mean-square of data - endmembers @ abundances over all entries."""
    d = np.asarray(data, dtype=np.float64)
    e = np.asarray(endmembers, dtype=np.float64)
    a = np.asarray(abundances, dtype=np.float64)
    if d.ndim != 2 or e.ndim != 2 or a.ndim != 2:
        raise ValueError("all inputs must be 2-D tables")
    if e.shape[0] != d.shape[0] or a.shape[1] != d.shape[1] or e.shape[1] != a.shape[0]:
        raise ValueError(
            f"incompatible shapes: data {d.shape}, endmembers {e.shape}, "
            f"abundances {a.shape}"
        )
    residual = d - e @ a
    return float(np.sqrt(np.mean(residual * residual)))
