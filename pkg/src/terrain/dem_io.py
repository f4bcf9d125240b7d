"""
Grid file format shared by DEMs, probability maps, entropy maps and safety maps.

Layout: a plain-text header of `key value` lines opened by the magic line and
closed by `end`, followed by a little-endian row-major payload:

    HDGRID 1
    kind dem
    width 64
    height 64
    pitch 1.0
    dtype f4
    end
    <width * height values>
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from src.core.errors import (GridFormatError, MalformedHeaderError,
                             NonFiniteValueError, TruncatedPayloadError)
from src.terrain.dem import DEM

logger = logging.getLogger(__name__)

MAGIC = 'HDGRID 1'
DTYPES = {'f4': np.dtype('<f4'), 'u1': np.dtype('u1')}
KINDS = ('dem', 'prob', 'entropy', 'safety')
MAX_HEADER_LINES = 16

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes):
    """Write bytes through a temp file in the target directory, then rename"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_grid(values: np.ndarray, kind: str, pitch_m: float = 1.0) -> bytes:
    """
    Serialize a 2-D grid

    Args:
        values: 2-D array (float grids are stored as float32, safety as uint8)
        kind: One of KINDS
        pitch_m: Meters per pixel

    Returns:
        File contents
    """
    if kind not in KINDS:
        raise ValueError(f"Unknown grid kind: {kind}")
    dtype_name = 'u1' if kind == 'safety' else 'f4'
    payload = np.ascontiguousarray(values, dtype=DTYPES[dtype_name])
    height, width = payload.shape
    header = (f"{MAGIC}\nkind {kind}\nwidth {width}\nheight {height}\n"
              f"pitch {float(pitch_m)!r}\ndtype {dtype_name}\nend\n")
    return header.encode('ascii') + payload.tobytes()


def _parse_header(data: bytes) -> Tuple[Dict[str, str], int]:
    offset = 0
    fields: Dict[str, str] = {}
    for index in range(MAX_HEADER_LINES):
        newline = data.find(b'\n', offset)
        if newline < 0:
            raise MalformedHeaderError("Header is not terminated by 'end'")
        try:
            line = data[offset:newline].decode('ascii').strip()
        except UnicodeDecodeError:
            raise MalformedHeaderError(f"Non-ASCII header line {index + 1}")
        offset = newline + 1
        if index == 0:
            if line != MAGIC:
                raise MalformedHeaderError(f"Bad magic line: {line!r}")
            continue
        if line == 'end':
            return fields, offset
        parts = line.split()
        if len(parts) != 2:
            raise MalformedHeaderError(f"Bad header line: {line!r}")
        fields[parts[0]] = parts[1]
    raise MalformedHeaderError("Header too long")


def decode_grid(data: bytes) -> Tuple[np.ndarray, str, float]:
    """
    Parse grid file contents

    Returns:
        (values, kind, pitch_m)

    Raises:
        MalformedHeaderError, TruncatedPayloadError, NonFiniteValueError
    """
    fields, offset = _parse_header(data)
    for key in ('kind', 'width', 'height', 'pitch', 'dtype'):
        if key not in fields:
            raise MalformedHeaderError(f"Header missing '{key}'")
    kind = fields['kind']
    if kind not in KINDS:
        raise MalformedHeaderError(f"Unknown grid kind: {kind}")
    try:
        width = int(fields['width'])
        height = int(fields['height'])
        pitch = float(fields['pitch'])
    except ValueError:
        raise MalformedHeaderError("Non-numeric width/height/pitch")
    if width < 1 or height < 1 or not pitch > 0:
        raise MalformedHeaderError(f"Invalid dimensions {width}x{height} pitch {pitch}")
    dtype = DTYPES.get(fields['dtype'])
    if dtype is None:
        raise MalformedHeaderError(f"Unknown dtype: {fields['dtype']}")

    expected = width * height * dtype.itemsize
    payload = data[offset:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"Payload holds {len(payload) // dtype.itemsize} values, header claims {width * height}")
    if len(payload) > expected:
        raise GridFormatError(f"{len(payload) - expected} trailing bytes after payload")

    values = np.frombuffer(payload, dtype=dtype).reshape(height, width).copy()
    if dtype.kind == 'f' and not np.all(np.isfinite(values)):
        raise NonFiniteValueError("Payload contains NaN or infinite values")
    return values, kind, pitch


def write_grid(path: PathLike, values: np.ndarray, kind: str, pitch_m: float = 1.0):
    atomic_write_bytes(path, encode_grid(values, kind, pitch_m))


def read_grid(path: PathLike, expected_kind: str = None) -> Tuple[np.ndarray, str, float]:
    with open(path, 'rb') as f:
        values, kind, pitch = decode_grid(f.read())
    if expected_kind is not None and kind != expected_kind:
        raise MalformedHeaderError(f"{path}: expected a '{expected_kind}' grid, found '{kind}'")
    return values, kind, pitch


def write_dem(dem: DEM, path: PathLike):
    """Write a DEM to a .dem file"""
    write_grid(path, dem.heights, 'dem', dem.pitch_m)
    logger.debug(f"Wrote DEM {dem.width}x{dem.height} to {path}")


def read_dem(path: PathLike) -> DEM:
    """Read a DEM from a .dem file"""
    values, _, pitch = read_grid(path, 'dem')
    return DEM(values, pitch)


def write_ascii_grid(path: PathLike, values: np.ndarray):
    """Debug export: one row per line, space-separated decimals"""
    lines = [' '.join(f"{float(v):.6f}" for v in row) for row in np.asarray(values)]
    atomic_write_bytes(path, ('\n'.join(lines) + '\n').encode('ascii'))
