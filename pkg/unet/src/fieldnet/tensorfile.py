"""Reader/writer for the sound field tensor directory format.

A tensor directory holds ``manifest.json`` (room geometry, grid layout,
frequencies, payload encoding), ``field.bin`` (little-endian complex64,
C row-major over [K][X][Y]) and an optional ``mask.bin`` (one 0/1 byte per
grid cell, row-major [X][Y]). This codec is self-contained; the format is
the only contract shared with producers of these files.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


class TensorFileError(ValueError):
    """Raised for malformed tensor directories."""


@dataclass(frozen=True)
class TensorFile:
    """In-memory view of one tensor directory."""

    values: np.ndarray          # [K, X, Y] complex
    freqs_hz: np.ndarray        # [K]
    room: dict                  # lx, ly, lz, t60, c
    grid: dict                  # I, J, up_x, up_y, z_o
    source_xyz: tuple
    mask: np.ndarray = field(default=None)  # [X, Y] bool or None

    @property
    def shape(self):
        return self.values.shape


def _fine_shape(grid):
    return (grid["I"] * grid["up_x"], grid["J"] * grid["up_y"])


def read_tensor(path):
    """Load a tensor directory into a TensorFile."""
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise TensorFileError(f"{manifest_path}: missing manifest")
    except json.JSONDecodeError as exc:
        raise TensorFileError(f"{manifest_path}: corrupt manifest ({exc})")

    for key in ("room", "grid", "freqs_hz", "source_xyz", "dtype",
                "byte_order", "axis_order"):
        if key not in manifest:
            raise TensorFileError(f"{manifest_path}: missing key {key!r}")
    if (manifest["dtype"] != "c64" or manifest["byte_order"] != "little"
            or manifest["axis_order"] != "k,x,y"):
        raise TensorFileError(f"{manifest_path}: unsupported encoding")

    grid = manifest["grid"]
    freqs = np.asarray(manifest["freqs_hz"], dtype=np.float64)
    shape = (freqs.size,) + _fine_shape(grid)
    expected = int(np.prod(shape)) * 8
    field_path = os.path.join(path, "field.bin")
    with open(field_path, "rb") as fh:
        raw = fh.read()
    if len(raw) != expected:
        raise TensorFileError(
            f"{field_path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<c8").reshape(shape)

    mask = None
    mask_path = os.path.join(path, "mask.bin")
    if os.path.exists(mask_path):
        with open(mask_path, "rb") as fh:
            raw = fh.read()
        n_cells = int(np.prod(_fine_shape(grid)))
        if len(raw) != n_cells:
            raise TensorFileError(
                f"{mask_path}: expected {n_cells} bytes, found {len(raw)}")
        bits = np.frombuffer(raw, dtype=np.uint8)
        if not np.isin(bits, (0, 1)).all():
            raise TensorFileError(f"{mask_path}: non-boolean byte values")
        mask = bits.reshape(_fine_shape(grid)).astype(bool)

    return TensorFile(values, freqs, dict(manifest["room"]), dict(grid),
                      tuple(manifest["source_xyz"]), mask)


def write_tensor(path, tensor):
    """Write a TensorFile as a tensor directory (values cast to complex64)."""
    os.makedirs(path, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "room": tensor.room,
        "grid": tensor.grid,
        "freqs_hz": [float(f) for f in tensor.freqs_hz],
        "source_xyz": list(tensor.source_xyz),
        "dtype": "c64",
        "byte_order": "little",
        "axis_order": "k,x,y",
    }
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    payload = np.ascontiguousarray(tensor.values, dtype="<c8")
    with open(os.path.join(path, "field.bin"), "wb") as fh:
        fh.write(payload.tobytes())
    if tensor.mask is not None:
        with open(os.path.join(path, "mask.bin"), "wb") as fh:
            fh.write(np.asarray(tensor.mask).astype(np.uint8).tobytes())


def read_dataset(root):
    """Load a dataset directory: entry names plus optional split map.

    Expects ``dataset.json`` with an ``entries`` list of tensor directory
    names and, optionally, ``splits.json`` mapping split names to subsets.
    """
    with open(os.path.join(root, "dataset.json")) as fh:
        manifest = json.load(fh)
    entries = list(manifest["entries"])
    splits = None
    splits_path = os.path.join(root, "splits.json")
    if os.path.exists(splits_path):
        with open(splits_path) as fh:
            splits = json.load(fh)
    return entries, splits
