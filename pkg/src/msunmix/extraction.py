"""Endmember extraction: VCA, N-FINDR, and NMF on a (bands, pixels) table.

All three methods draw their randomness from numpy's PCG64 generator seeded
with the caller-supplied 64-bit seed, so identical (data, config) inputs
reproduce identical results bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EndmemberSet, FloatArray, NumericalError, WavelengthAxis

VCA = "vca"
NFINDR = "nfindr"
NMF = "nmf"
METHODS = (VCA, NFINDR, NMF)

# Floor applied to multiplicative-update denominators.
_NMF_EPS = 1e-12
# Multiplicative sub-updates per factor per iteration.  The per-factor Gram
# products are fixed inside the sub-loop, so extra sub-steps are cheap and
# they cut the long convergence tail of the plain alternating rule.
_NMF_INNER = 10


@dataclass(frozen=True)
class ExtractionConfig:
    """Shared knobs for the extraction methods.

    p        -- number of endmembers to extract (>= 2)
    seed     -- 64-bit seed for the PCG64 generator
    max_iter -- iteration cap: NMF update steps / N-FINDR sweeps
    tol      -- relative objective-decrease stopping threshold (NMF)
    """

    p: int
    seed: int
    max_iter: int = 500
    tol: float = 1e-9

    def __post_init__(self) -> None:
        # NMF factorizes down to a single component; the simplex-geometry
        # methods additionally require p >= 2 and check it themselves.
        if self.p < 1:
            raise ValueError(f"endmember count must be >= 1, got {self.p}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    """Outcome of one extraction run.

    ``pixel_indices`` is present for the pure-pixel methods (VCA, N-FINDR)
    and names the selected columns of the input table.  ``objective_trace``
    holds per-iteration Frobenius errors for NMF (non-increasing) and simplex
    volumes for N-FINDR (non-decreasing); it is empty for VCA.
    """

    endmembers: EndmemberSet
    method: str
    pixel_indices: tuple[int, ...] | None
    objective_trace: FloatArray
    iterations: int

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        trace = np.array(self.objective_trace, dtype=np.float64, copy=True)
        trace.flags.writeable = False
        object.__setattr__(self, "objective_trace", trace)
        if self.pixel_indices is not None:
            idx = tuple(int(i) for i in self.pixel_indices)
            if len(set(idx)) != len(idx):
                raise ValueError("pixel_indices must be distinct")
            object.__setattr__(self, "pixel_indices", idx)
        if trace.size > 1:
            steps = np.diff(trace)
            if self.method == NMF and np.any(steps > 0):
                raise ValueError("NMF objective trace must be non-increasing")
            if self.method == NFINDR and np.any(steps < 0):
                raise ValueError("N-FINDR volume trace must be non-decreasing")


@dataclass(frozen=True, eq=False)
class SubspaceProjection:
    """Mean-centered data expressed in the top principal directions.

    ``rank`` counts the directions actually supported by the data; when the
    requested dimension exceeds it, the trailing basis columns are zero.
    """

    coords: FloatArray  # (dim, pixels)
    basis: FloatArray   # (bands, dim), orthonormal up to `rank`
    mean: FloatArray    # (bands,)
    rank: int

    @property
    def deficient(self) -> bool:
        return self.rank < self.basis.shape[1]

    def reconstruct(self, coords=None) -> FloatArray:
        c = self.coords if coords is None else np.asarray(coords, dtype=np.float64)
        return self.basis @ c + self.mean[:, None]


def _fix_signs(basis: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: each column's largest-|entry| is positive."""
    out = basis.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            out[:, j] = -col
    return out


def _validate_table(data) -> FloatArray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("data must be a 2-D (bands, pixels) table")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data must be finite")
    return arr


def _index_axis(bands: int) -> WavelengthAxis:
    # Pseudo-axis (1..bands) for callers that work on bare tables.
    return WavelengthAxis(np.arange(1.0, bands + 1.0))


def project_subspace(data, dim: int) -> SubspaceProjection:
    """Project mean-centered data onto its top ``dim`` principal directions.

    Directions follow singular-value order; signs follow :func:`_fix_signs`.
    Directions beyond the data rank are zeroed rather than arbitrary.
    """
    arr = _validate_table(data)
    bands, pixels = arr.shape
    if not 1 <= dim <= bands:
        raise ValueError(f"dim must be in [1, {bands}], got {dim}")
    mean = arr.mean(axis=1)
    centered = arr - mean[:, None]
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    cutoff = s[0] * max(bands, pixels) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int(np.sum(s > cutoff))
    basis = np.zeros((bands, dim))
    keep = min(dim, rank, u.shape[1])
    basis[:, :keep] = _fix_signs(u[:, :keep])
    coords = basis.T @ centered
    return SubspaceProjection(coords, basis, mean, min(rank, dim))


def _as_endmember_set(
    data: FloatArray,
    columns,
    axis: WavelengthAxis | None,
    pixel_indices: tuple[int, ...] | None,
) -> EndmemberSet:
    if axis is None:
        axis = _index_axis(data.shape[0])
    return EndmemberSet(axis, np.asarray(columns).T, pixel_indices=pixel_indices)


def vca(
    data, config: ExtractionConfig, *, axis: WavelengthAxis | None = None
) -> ExtractionResult:
    """Vertex component analysis with the projective representation.

    The table is projected onto the top p singular directions of the raw data
    and every projected pixel is divided by its inner product with the
    projected data mean.  Each of the p rounds draws a random direction,
    projects it orthogonal to the span of the endmembers selected so far, and
    keeps the pixel with the largest absolute projection.  Selected pixels
    are returned in original band space.
    """
    arr = _validate_table(data)
    bands, pixels = arr.shape
    p = config.p
    if p < 2:
        raise ValueError(f"vca needs p >= 2, got {p}")
    if p > bands:
        raise ValueError(f"cannot extract {p} endmembers from {bands} bands")
    if pixels < p:
        raise ValueError(f"need at least {p} pixels, got {pixels}")
    spread = float(np.ptp(arr, axis=1).max()) if pixels > 1 else 0.0
    if spread == 0.0:
        raise NumericalError("degenerate data: all pixels are identical")

    u_full, _, _ = np.linalg.svd(arr, full_matrices=False)
    basis = _fix_signs(u_full[:, :p])
    x = basis.T @ arr  # (p, pixels)
    mean_dir = x.mean(axis=1)
    denom = mean_dir @ x
    scale = float(np.abs(denom).max())
    if scale == 0.0:
        raise NumericalError("degenerate data: projective denominators vanish")
    tiny = 1e-12 * scale
    denom = np.where(np.abs(denom) < tiny, tiny, denom)
    y = x / denom

    rng = np.random.default_rng(config.seed)
    selected: list[int] = []
    span = np.zeros((p, p))
    span[-1, 0] = 1.0  # bootstrap direction for the first round
    for i in range(p):
        f = np.zeros(p)
        while not np.linalg.norm(f) > 0:
            w = rng.standard_normal(p)
            f = w - span @ (np.linalg.pinv(span) @ w)
        f /= np.linalg.norm(f)
        score = np.abs(f @ y)
        idx = int(np.argmax(score))
        if idx in selected:
            for candidate in np.argsort(-score, kind="stable"):
                if int(candidate) not in selected:
                    idx = int(candidate)
                    break
        selected.append(idx)
        span[:, i] = y[:, idx]

    endmembers = _as_endmember_set(arr, arr[:, selected], axis, tuple(selected))
    return ExtractionResult(
        endmembers=endmembers,
        method=VCA,
        pixel_indices=tuple(selected),
        objective_trace=np.empty(0),
        iterations=p,
    )


def _simplex_volumes_for_slot(
    aug: FloatArray, vertices: FloatArray, slot: int
) -> FloatArray:
    """|det| of the vertex matrix with column ``slot`` replaced by each pixel.

    Uses Cramer's rule: replacing column j of M by column c of A changes the
    determinant to det(M) * (M^-1 A)[j, c], so one solve covers all pixels.
    """
    base = abs(np.linalg.det(vertices))
    coeff = np.linalg.solve(vertices, aug)
    return base * np.abs(coeff[slot])


def _nfindr_sweep(
    aug: FloatArray, indices: np.ndarray, volume: float
) -> tuple[float, bool, list[float]]:
    """One full N-FINDR sweep over all vertex slots, in place.

    For each slot, candidate pixels are scanned in ascending index and every
    strictly volume-increasing replacement is taken immediately.  Returns the
    final volume, whether anything changed, and the accepted volumes in order.
    """
    p = aug.shape[0]
    changed = False
    accepted: list[float] = []
    for slot in range(p):
        vols = _simplex_volumes_for_slot(aug, aug[:, indices], slot)
        vols[indices] = -np.inf  # a current vertex can never replace another
        running = np.empty(vols.size)
        running[0] = volume
        np.maximum(np.maximum.accumulate(vols)[:-1], volume, out=running[1:])
        hits = np.nonzero(vols > running)[0]
        if hits.size:
            accepted.extend(float(v) for v in vols[hits])
            indices[slot] = int(hits[-1])
            volume = float(vols[hits[-1]])
            changed = True
    return volume, changed, accepted


def nfindr(
    data, config: ExtractionConfig, *, axis: WavelengthAxis | None = None
) -> ExtractionResult:
    """N-FINDR: grow the largest simplex spanned by data pixels.

    The table is reduced to p-1 principal dimensions; the volume objective is
    |det| of the p x p matrix of reduced vertices augmented with a row of
    ones.  Starting from p distinct seeded random pixels (reseeding from
    seed+attempt while the start simplex is degenerate), full sweeps replace
    vertices greedily until a sweep changes nothing or max_iter sweeps ran.
    """
    arr = _validate_table(data)
    bands, pixels = arr.shape
    p = config.p
    if p < 2:
        raise ValueError(f"nfindr needs p >= 2, got {p}")
    if p > bands:
        raise ValueError(f"cannot extract {p} endmembers from {bands} bands")
    if pixels < p:
        raise ValueError(f"need at least {p} pixels, got {pixels}")

    projection = project_subspace(arr, p - 1)
    aug = np.vstack([np.ones(pixels), projection.coords])  # (p, pixels)

    indices = None
    volume = 0.0
    for attempt in range(config.max_iter):
        rng = np.random.default_rng(config.seed + attempt)
        candidate = rng.choice(pixels, size=p, replace=False)
        vol = abs(np.linalg.det(aug[:, candidate]))
        if vol > 0.0:
            indices = np.array(candidate, dtype=np.intp)
            volume = float(vol)
            break
    if indices is None:
        raise NumericalError(
            f"no non-degenerate start simplex found in {config.max_iter} "
            "seeded attempts"
        )

    trace: list[float] = [volume]
    sweeps = 0
    for _ in range(config.max_iter):
        volume, changed, accepted = _nfindr_sweep(aug, indices, volume)
        trace.extend(accepted)
        trace.append(volume)
        sweeps += 1
        if not changed:
            break

    selected = tuple(int(i) for i in indices)
    endmembers = _as_endmember_set(arr, arr[:, list(selected)], axis, selected)
    return ExtractionResult(
        endmembers=endmembers,
        method=NFINDR,
        pixel_indices=selected,
        objective_trace=np.array(trace),
        iterations=sweeps,
    )


def _multiplicative_step(
    data: FloatArray, w: FloatArray, h: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """One outer Frobenius multiplicative update of both factors.

    H takes several sub-steps with W fixed, then W with H fixed; every
    sub-step descends, so the whole step does.  Denominators are floored at
    1e-12; exact zeros in either factor are fixed points and stay zero.
    """
    wtv = w.T @ data
    wtw = w.T @ w
    for _ in range(_NMF_INNER):
        h = h * wtv / np.maximum(wtw @ h, _NMF_EPS)
    vht = data @ h.T
    hht = h @ h.T
    for _ in range(_NMF_INNER):
        w = w * vht / np.maximum(w @ hht, _NMF_EPS)
    return w, h


def nmf(
    data, config: ExtractionConfig, *, axis: WavelengthAxis | None = None
) -> ExtractionResult:
    """Nonnegative matrix factorization with Frobenius multiplicative updates.

    data ~ W H with W (bands, p) endmember signatures and H (p, pixels)
    abundances.  Factors start from seeded uniform positives scaled to the
    data's mean magnitude; denominators are floored at 1e-12.  Iteration
    stops when the relative objective decrease falls below tol, after
    max_iter steps, or when a step would not improve the computed objective
    (a monotone safeguard against float-precision plateaus, so the reported
    trace is non-increasing by construction).  Returned endmembers are the W
    columns sorted by descending norm; there are no source pixels.
    """
    arr = _validate_table(data)
    bands, pixels = arr.shape
    p = config.p
    if np.any(arr < 0):
        raise ValueError("NMF input must be nonnegative")
    if p > min(bands, pixels):
        raise ValueError(
            f"cannot factorize {bands}x{pixels} data with p={p} components"
        )

    rng = np.random.default_rng(config.seed)
    scale = np.sqrt(arr.mean() / p) if arr.mean() > 0 else 1.0
    w = rng.uniform(size=(bands, p)) * scale
    h = rng.uniform(size=(p, pixels)) * scale

    def objective(wm, hm):
        return float(np.linalg.norm(arr - wm @ hm))

    prev = objective(w, h)
    trace: list[float] = []
    for _ in range(config.max_iter):
        w_new, h_new = _multiplicative_step(arr, w, h)
        current = objective(w_new, h_new)
        if current > prev:
            break
        w, h = w_new, h_new
        trace.append(current)
        if prev - current < config.tol * prev:
            break
        prev = current

    order = np.argsort(-np.linalg.norm(w, axis=0), kind="stable")
    endmembers = _as_endmember_set(arr, w[:, order], axis, None)
    return ExtractionResult(
        endmembers=endmembers,
        method=NMF,
        pixel_indices=None,
        objective_trace=np.array(trace),
        iterations=len(trace),
    )


def extract(
    data,
    method: str,
    config: ExtractionConfig,
    *,
    axis: WavelengthAxis | None = None,
) -> ExtractionResult:
    """Dispatch to one of :data:`METHODS` by name."""
    if method == VCA:
        return vca(data, config, axis=axis)
    if method == NFINDR:
        return nfindr(data, config, axis=axis)
    if method == NMF:
        return nmf(data, config, axis=axis)
    raise ValueError(f"unknown extraction method {method!r}")
