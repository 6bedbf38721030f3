"""File formats: spectral cubes, sensitivity curves, abundances, and maps.

All text numerics are written with 9 significant digits; the binary cube
payload is little-endian float32, band-interleaved-by-pixel, pixels in
row-major order.  Every reader failure is a typed error carrying the file
position; writers are atomic (write to a temp file, then rename).
"""

from __future__ import annotations

import csv
import os
import re
import tempfile
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .bandsim import (
    KIND_PANCHROMATIC,
    KIND_SELECTIVE,
    SensitivityChannel,
    SensitivityModel,
)
from .core import (
    AbundanceField,
    EndmemberSet,
    FloatArray,
    SpectralCube,
    Spectrum,
    WavelengthAxis,
)

CUBE_MAGIC = "MSUNMIX-CUBE 1"
_HEADER_LIMIT = 1 << 20  # runaway-header guard, bytes
_PAN_SUFFIX = ":pan"


class FormatError(ValueError):
    """Malformed file content; carries the path and position of the defect."""

    def __init__(self, path, message: str, *, line: int | None = None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class CubeFormatError(FormatError):
    pass


class CurveFormatError(FormatError):
    pass


class AbundanceFormatError(FormatError):
    pass


class EndmemberFormatError(FormatError):
    pass


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _atomic_write(path, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sanitize_name(name: str) -> str:
    """File-system-safe version of an endmember or channel name."""
    cleaned = re.sub(r"[^A-Za-z0-9._-]+", "_", name.strip())
    return cleaned or "unnamed"


# ---------------------------------------------------------------------------
# Cube files
# ---------------------------------------------------------------------------

def write_cube(cube: SpectralCube, path) -> None:
    """Write a cube file; values are quantized to float32 in the payload."""
    lines = [
        CUBE_MAGIC,
        f"width: {cube.width}",
        f"height: {cube.height}",
        f"bands: {cube.band_count}",
        f"units: {cube.units}",
        "wavelengths: " + ",".join(_fmt(v) for v in cube.axis.samples),
    ]
    if cube.pan_bands:
        lines.append("pan_bands: " + ",".join(str(i) for i in cube.pan_bands))
    lines.append("end-header")
    header = ("\n".join(lines) + "\n").encode("ascii")
    payload = cube.data.astype("<f4").tobytes()
    _atomic_write(path, header + payload)


def read_cube(path) -> SpectralCube:
    """Read a cube file written by :func:`write_cube`."""
    with open(path, "rb") as handle:
        raw = handle.read()

    newline = raw.find(b"\n")
    if newline < 0 or raw[:newline].decode("ascii", "replace") != CUBE_MAGIC:
        raise CubeFormatError(path, f"missing magic line {CUBE_MAGIC!r}", line=1)

    fields: dict[str, str] = {}
    offset = newline + 1
    line_no = 1
    while True:
        line_no += 1
        end = raw.find(b"\n", offset)
        if end < 0 or offset > _HEADER_LIMIT:
            raise CubeFormatError(path, "header not terminated by 'end-header'")
        try:
            line = raw[offset:end].decode("ascii")
        except UnicodeDecodeError:
            raise CubeFormatError(path, "non-ASCII bytes in header", line=line_no)
        offset = end + 1
        if line == "end-header":
            break
        key, sep, value = line.partition(":")
        if not sep:
            raise CubeFormatError(path, f"malformed header line {line!r}", line=line_no)
        fields[key.strip()] = value.strip()

    def require(key: str) -> str:
        if key not in fields:
            raise CubeFormatError(path, f"missing header field {key!r}")
        return fields[key]

    def parse_int(key: str) -> int:
        text = require(key)
        try:
            value = int(text)
        except ValueError:
            raise CubeFormatError(path, f"field {key!r} is not an integer: {text!r}")
        if value < 1:
            raise CubeFormatError(path, f"field {key!r} must be positive, got {value}")
        return value

    width = parse_int("width")
    height = parse_int("height")
    bands = parse_int("bands")
    units = require("units")
    try:
        wavelengths = [float(tok) for tok in require("wavelengths").split(",")]
    except ValueError:
        raise CubeFormatError(path, "wavelengths list contains a non-number")
    if len(wavelengths) != bands:
        raise CubeFormatError(
            path, f"header declares {bands} bands but {len(wavelengths)} wavelengths"
        )
    pan_bands: tuple[int, ...] = ()
    if "pan_bands" in fields and fields["pan_bands"]:
        try:
            pan_bands = tuple(int(tok) for tok in fields["pan_bands"].split(","))
        except ValueError:
            raise CubeFormatError(path, "pan_bands list contains a non-integer")

    expected = width * height * bands * 4
    actual = len(raw) - offset
    if actual != expected:
        raise CubeFormatError(
            path, f"payload is {actual} bytes, expected {expected}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=offset).astype(np.float64)
    data = values.reshape(height, width, bands)

    try:
        axis = WavelengthAxis(wavelengths)
        return SpectralCube(
            width, height, axis, data, units=units, pan_bands=pan_bands
        )
    except ValueError as exc:
        raise CubeFormatError(path, str(exc))


# ---------------------------------------------------------------------------
# Sensitivity curve files
# ---------------------------------------------------------------------------

def _read_csv_rows(path, error_cls):
    try:
        with open(path, "r", encoding="ascii", newline="") as handle:
            return list(csv.reader(handle))
    except UnicodeDecodeError as exc:
        raise error_cls(path, f"non-ASCII content: {exc}")


def _parse_float(token: str, path, line_no: int, error_cls, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise error_cls(path, f"{what} is not a number: {token!r}", line=line_no)
    if not np.isfinite(value):
        raise error_cls(path, f"{what} is not finite: {token!r}", line=line_no)
    return value


def write_curves(model: SensitivityModel, path) -> None:
    """Write one column per channel; panchromatic names get a ':pan' suffix.

    All channels must share one wavelength axis (resample first otherwise).
    """
    axis = model.channels[0].axis
    for channel in model.channels[1:]:
        if channel.axis != axis:
            raise ValueError("channels live on different axes; resample first")
    names = []
    for channel in model.channels:
        if "," in channel.name or "\n" in channel.name:
            raise ValueError(f"channel name {channel.name!r} not writable as CSV")
        suffix = _PAN_SUFFIX if channel.is_panchromatic else ""
        names.append(channel.name + suffix)
    lines = ["wavelength_nm," + ",".join(names)]
    for i, lam in enumerate(axis.samples):
        row = [_fmt(lam)] + [_fmt(c.response[i]) for c in model.channels]
        lines.append(",".join(row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_curves(path) -> SensitivityModel:
    """Read a sensitivity-curve CSV into a camera model."""
    rows = _read_csv_rows(path, CurveFormatError)
    if len(rows) < 3:
        raise CurveFormatError(path, "need a header row and at least two samples")
    header = rows[0]
    if len(header) < 2:
        raise CurveFormatError(path, "need a wavelength column and one channel", line=1)
    channel_names = header[1:]

    wavelengths = []
    responses = [[] for _ in channel_names]
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CurveFormatError(
                path,
                f"row has {len(row)} fields, header has {len(header)}",
                line=line_no,
            )
        lam = _parse_float(row[0], path, line_no, CurveFormatError, "wavelength")
        if wavelengths:
            if lam == wavelengths[-1]:
                raise CurveFormatError(
                    path, f"duplicate wavelength {row[0]}", line=line_no
                )
            if lam < wavelengths[-1]:
                raise CurveFormatError(
                    path, f"wavelengths must increase, got {row[0]}", line=line_no
                )
        wavelengths.append(lam)
        for k, token in enumerate(row[1:]):
            value = _parse_float(token, path, line_no, CurveFormatError, "response")
            if value < 0:
                raise CurveFormatError(
                    path, f"negative response {token}", line=line_no
                )
            responses[k].append(value)

    try:
        axis = WavelengthAxis(wavelengths)
        channels = []
        for name, resp in zip(channel_names, responses):
            if name.endswith(_PAN_SUFFIX):
                channels.append(
                    SensitivityChannel(
                        name[: -len(_PAN_SUFFIX)], axis, resp, kind=KIND_PANCHROMATIC
                    )
                )
            else:
                channels.append(
                    SensitivityChannel(name, axis, resp, kind=KIND_SELECTIVE)
                )
        return SensitivityModel(tuple(channels))
    except ValueError as exc:
        raise CurveFormatError(path, str(exc))


def read_illumination(path) -> Spectrum:
    """Read an illumination spectrum: a two-column wavelength/value CSV."""
    rows = _read_csv_rows(path, CurveFormatError)
    if len(rows) < 3:
        raise CurveFormatError(path, "need a header row and at least two samples")
    if len(rows[0]) != 2:
        raise CurveFormatError(
            path, f"expected 2 columns for an illumination file, got {len(rows[0])}",
            line=1,
        )
    wavelengths = []
    values = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise CurveFormatError(path, "expected 2 fields", line=line_no)
        wavelengths.append(
            _parse_float(row[0], path, line_no, CurveFormatError, "wavelength")
        )
        values.append(_parse_float(row[1], path, line_no, CurveFormatError, "value"))
    try:
        return Spectrum(WavelengthAxis(wavelengths), values)
    except ValueError as exc:
        raise CurveFormatError(path, str(exc))


# ---------------------------------------------------------------------------
# Abundance files
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AbundanceTable:
    """Abundance rows read from file: one identifier plus p fractions each.

    ``width``/``height``/``sum_to_one`` come from the optional metadata
    comment and are None for plain per-patch files.
    """

    ids: tuple[str, ...]
    names: tuple[str, ...]
    fractions: FloatArray
    width: int | None = None
    height: int | None = None
    sum_to_one: bool | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.fractions, dtype=np.float64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "fractions", arr)

    def to_field(self) -> AbundanceField:
        if self.width is None or self.height is None:
            raise ValueError("abundance table carries no grid dimensions")
        fractions = self.fractions.reshape(self.height, self.width, len(self.names))
        return AbundanceField(
            self.width, self.height, fractions,
            sum_to_one=bool(self.sum_to_one),
        )


def write_abundance(
    field: AbundanceField, path, names: tuple[str, ...] | None = None
) -> None:
    """Write an abundance field; rows are row-major pixel indices."""
    p = field.endmember_count
    if names is None:
        names = tuple(f"em{k + 1}" for k in range(p))
    if len(names) != p:
        raise ValueError(f"expected {p} names, got {len(names)}")
    table = field.as_table()
    lines = [
        f"# width={field.width} height={field.height} "
        f"sum_to_one={int(field.sum_to_one)}",
        "id," + ",".join(names),
    ]
    for j in range(table.shape[0]):
        lines.append(str(j) + "," + ",".join(_fmt(v) for v in table[j]))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_abundance(path) -> AbundanceTable:
    """Read an abundance CSV (pixel rows or named-patch rows)."""
    rows = _read_csv_rows(path, AbundanceFormatError)
    width = height = None
    sum_to_one = None
    start = 0
    if rows and rows[0] and rows[0][0].startswith("#"):
        meta = ",".join(rows[0])
        match = re.search(r"width=(\d+)\s+height=(\d+)\s+sum_to_one=([01])", meta)
        if match:
            width, height = int(match.group(1)), int(match.group(2))
            sum_to_one = match.group(3) == "1"
        start = 1
    if len(rows) - start < 2:
        raise AbundanceFormatError(path, "need a header row and at least one row")
    header = rows[start]
    if len(header) < 2:
        raise AbundanceFormatError(
            path, "need an id column and at least one endmember", line=start + 1
        )
    names = tuple(header[1:])
    ids = []
    fractions = []
    for line_no, row in enumerate(rows[start + 1:], start=start + 2):
        if len(row) != len(header):
            raise AbundanceFormatError(
                path,
                f"row has {len(row)} fields, header has {len(header)}",
                line=line_no,
            )
        ids.append(row[0])
        values = []
        for token in row[1:]:
            value = _parse_float(
                token, path, line_no, AbundanceFormatError, "fraction"
            )
            if value < 0:
                raise AbundanceFormatError(
                    path, f"negative fraction {token}", line=line_no
                )
            values.append(value)
        fractions.append(values)
    table = np.array(fractions)
    if width is not None and height is not None and width * height != table.shape[0]:
        raise AbundanceFormatError(
            path,
            f"metadata grid {width}x{height} does not match {table.shape[0]} rows",
        )
    return AbundanceTable(tuple(ids), names, table, width, height, sum_to_one)


# ---------------------------------------------------------------------------
# Endmember spectra CSV
# ---------------------------------------------------------------------------

def write_endmembers(
    endmembers: EndmemberSet, path, *, skip_bands: tuple[int, ...] = ()
) -> None:
    """Write endmember signatures as wavelength-indexed CSV columns.

    ``skip_bands`` drops the given band rows (used to hide panchromatic
    bands from plot-ready spectra exports).
    """
    skip = set(skip_bands)
    names = endmembers.labels()
    lines = ["wavelength_nm," + ",".join(names)]
    for b, lam in enumerate(endmembers.axis.samples):
        if b in skip:
            continue
        row = [_fmt(lam)] + [_fmt(v) for v in endmembers.signatures[:, b]]
        lines.append(",".join(row))
    if len(lines) < 3:
        raise ValueError("cannot write an endmember CSV with fewer than two bands")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_endmembers(path) -> EndmemberSet:
    """Read a wavelength-indexed endmember CSV."""
    rows = _read_csv_rows(path, EndmemberFormatError)
    if len(rows) < 3:
        raise EndmemberFormatError(path, "need a header row and at least two bands")
    header = rows[0]
    if len(header) < 2:
        raise EndmemberFormatError(
            path, "need a wavelength column and one endmember", line=1
        )
    names = tuple(header[1:])
    wavelengths = []
    table = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise EndmemberFormatError(
                path,
                f"row has {len(row)} fields, header has {len(header)}",
                line=line_no,
            )
        wavelengths.append(
            _parse_float(row[0], path, line_no, EndmemberFormatError, "wavelength")
        )
        table.append(
            [
                _parse_float(tok, path, line_no, EndmemberFormatError, "value")
                for tok in row[1:]
            ]
        )
    try:
        axis = WavelengthAxis(wavelengths)
        return EndmemberSet(axis, np.array(table).T, names=names)
    except ValueError as exc:
        raise EndmemberFormatError(path, str(exc))


# ---------------------------------------------------------------------------
# Abundance map images
# ---------------------------------------------------------------------------

def write_abundance_maps(
    field: AbundanceField, directory, names: tuple[str, ...] | None = None
) -> list[str]:
    """One 8-bit binary PGM per endmember; value = round(255 * fraction).

    Rounding is round-half-up; fractions are clamped to [0, 1] first.
    Returns the written paths in endmember order.
    """
    p = field.endmember_count
    if names is None:
        names = tuple(f"em{k + 1}" for k in range(p))
    if len(names) != p:
        raise ValueError(f"expected {p} names, got {len(names)}")
    os.makedirs(directory, exist_ok=True)
    paths = []
    for k in range(p):
        plane = np.clip(field.fractions[:, :, k], 0.0, 1.0)
        gray = np.floor(255.0 * plane + 0.5).astype(np.uint8)
        header = f"P5\n{field.width} {field.height}\n255\n".encode("ascii")
        out = os.path.join(directory, sanitize_name(names[k]) + ".pgm")
        _atomic_write(out, header + gray.tobytes())
        paths.append(out)
    return paths


# ---------------------------------------------------------------------------
# Bundled camera curves
# ---------------------------------------------------------------------------

def bundled_camera_path(name: str) -> str:
    """Path of a bundled camera curve file: 'real' (9ch) or 'synthetic' (14ch)."""
    files = {"real": "real_camera.csv", "synthetic": "synthetic_camera.csv"}
    if name not in files:
        raise ValueError(f"unknown bundled camera {name!r}; choose from {sorted(files)}")
    return str(resources.files("msunmix.data").joinpath(files[name]))


def load_bundled_camera(name: str) -> SensitivityModel:
    return read_curves(bundled_camera_path(name))
