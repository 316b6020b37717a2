"""Bit-exact tensor file format and measured impulse-response ingestion.

A tensor file is a directory holding ``manifest.json`` plus ``field.bin``
(little-endian float32 real/imaginary pairs, C row-major over [K][X][Y]) and
an optional ``mask.bin`` (one byte per cell, row-major [X][Y]). The format
is the sole data contract between this package and external consumers.

Measured data are ingested from a measurement manifest that maps impulse
response files (.npy sample arrays) to grid positions, heights, and
sources.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .core import FieldTensor, FrequencySet, GridSpec, Room, SamplingMask

__all__ = [
    "TensorFormatError",
    "MeasurementError",
    "ImpulseResponseRecord",
    "MeasurementManifest",
    "write_tensor",
    "read_tensor",
    "write_mask",
    "read_mask",
    "import_measurements",
    "ir_to_rtf",
    "assemble_field_tensor",
]

SCHEMA_VERSION = 1


class TensorFormatError(ValueError):
    """Raised for malformed tensor directories."""


class MeasurementError(ValueError):
    """Raised for inconsistent measurement manifests or data files."""


def _manifest_dict(tensor):
    return {
        "schema_version": SCHEMA_VERSION,
        "room": {"lx": tensor.room.l_x, "ly": tensor.room.l_y,
                 "lz": tensor.room.l_z, "t60": tensor.room.t60,
                 "c": tensor.room.c},
        "grid": {"I": tensor.grid.i_count, "J": tensor.grid.j_count,
                 "up_x": tensor.grid.up_x, "up_y": tensor.grid.up_y,
                 "z_o": tensor.grid.z_o},
        "freqs_hz": [float(f) for f in tensor.freqs.hz],
        "source_xyz": list(tensor.source),
        "dtype": "c64",
        "byte_order": "little",
        "axis_order": "k,x,y",
    }


def write_tensor(path, tensor, mask=None):
    """Write a FieldTensor (and optional SamplingMask) as a tensor directory.

    Field values are stored as little-endian complex64; complex128 input is
    cast on write.
    """
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(_manifest_dict(tensor), fh, indent=2)
    payload = np.ascontiguousarray(tensor.values, dtype="<c8")
    with open(os.path.join(path, "field.bin"), "wb") as fh:
        fh.write(payload.tobytes())
    if mask is not None:
        if mask.values.shape != tensor.grid.fine_shape:
            raise TensorFormatError("mask shape does not match grid")
        with open(os.path.join(path, "mask.bin"), "wb") as fh:
            fh.write(mask.values.astype(np.uint8).tobytes())


def _read_payload(path, name, expected_bytes):
    file_path = os.path.join(path, name)
    with open(file_path, "rb") as fh:
        raw = fh.read()
    if len(raw) != expected_bytes:
        raise TensorFormatError(
            f"{file_path}: expected {expected_bytes} bytes, found {len(raw)}")
    return raw


def read_tensor(path):
    """Read a tensor directory; returns (FieldTensor, SamplingMask | None)."""
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise TensorFormatError(f"{manifest_path}: missing manifest")
    except json.JSONDecodeError as exc:
        raise TensorFormatError(f"{manifest_path}: corrupt manifest ({exc})")

    required = {"schema_version", "room", "grid", "freqs_hz", "source_xyz",
                "dtype", "byte_order", "axis_order"}
    missing = required - manifest.keys()
    if missing:
        raise TensorFormatError(
            f"{manifest_path}: missing keys {sorted(missing)}")
    if manifest["dtype"] != "c64" or manifest["byte_order"] != "little":
        raise TensorFormatError(f"{manifest_path}: unsupported payload "
                                f"encoding {manifest['dtype']}")
    if manifest["axis_order"] != "k,x,y":
        raise TensorFormatError(
            f"{manifest_path}: unsupported axis order {manifest['axis_order']}")

    rm = manifest["room"]
    room = Room(rm["lx"], rm["ly"], rm["lz"], rm["t60"], rm.get("c", 343.0))
    gm = manifest["grid"]
    grid = GridSpec(gm["I"], gm["J"], gm["up_x"], gm["up_y"], gm["z_o"])
    freqs = FrequencySet(2.0 * np.pi * np.asarray(manifest["freqs_hz"]))
    shape = (len(freqs),) + grid.fine_shape

    raw = _read_payload(path, "field.bin", int(np.prod(shape)) * 8)
    values = np.frombuffer(raw, dtype="<c8").reshape(shape)
    tensor = FieldTensor(values, room, grid, freqs,
                         tuple(manifest["source_xyz"]))

    mask = None
    if os.path.exists(os.path.join(path, "mask.bin")):
        raw = _read_payload(path, "mask.bin", grid.n_points)
        bits = np.frombuffer(raw, dtype=np.uint8)
        if not np.isin(bits, (0, 1)).all():
            raise TensorFormatError(
                f"{os.path.join(path, 'mask.bin')}: non-boolean byte values")
        mask = SamplingMask(bits.reshape(grid.fine_shape).astype(bool))
    return tensor, mask


def write_mask(path, grid, mask):
    """Write a standalone mask directory (grid metadata + mask.bin)."""
    os.makedirs(path, exist_ok=True)
    meta = {"schema_version": SCHEMA_VERSION,
            "grid": {"I": grid.i_count, "J": grid.j_count,
                     "up_x": grid.up_x, "up_y": grid.up_y, "z_o": grid.z_o}}
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    with open(os.path.join(path, "mask.bin"), "wb") as fh:
        fh.write(mask.values.astype(np.uint8).tobytes())


def read_mask(path):
    """Read a standalone mask directory; returns (GridSpec, SamplingMask)."""
    with open(os.path.join(path, "manifest.json")) as fh:
        meta = json.load(fh)
    gm = meta["grid"]
    grid = GridSpec(gm["I"], gm["J"], gm["up_x"], gm["up_y"], gm["z_o"])
    raw = _read_payload(path, "mask.bin", grid.n_points)
    bits = np.frombuffer(raw, dtype=np.uint8)
    return grid, SamplingMask(bits.reshape(grid.fine_shape).astype(bool))


@dataclass(frozen=True)
class ImpulseResponseRecord:
    """One measured impulse response at a grid position."""

    i: int
    j: int
    height_id: str
    source_id: str
    sample_rate: float
    samples: np.ndarray

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise MeasurementError("sample rate must be positive")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.size == 0:
            raise MeasurementError("empty sample array")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def key(self):
        return (self.i, self.j, self.height_id, self.source_id)


@dataclass(frozen=True)
class MeasurementManifest:
    """Room geometry, grid layout, and file-to-position bookkeeping."""

    room: Room
    grid: GridSpec
    heights_m: dict
    source_positions: dict
    available: np.ndarray

    def __post_init__(self):
        avail = np.asarray(self.available, dtype=bool)
        avail.setflags(write=False)
        object.__setattr__(self, "available", avail)


def import_measurements(manifest_path, data_root=None):
    """Load measured impulse responses described by a manifest file.

    The manifest is JSON with keys ``room`` {lx,ly,lz,t60}, ``grid``
    {I,J,up_x,up_y,z_o}, ``sample_rate``, ``heights_m`` (id -> meters),
    ``sources`` (id -> [x,y,z]), and ``files``: a list of
    {i, j, height, source, path} entries with paths to .npy sample arrays.
    Unmeasured positions are flagged in the availability mask; missing files
    are fatal and reported together, duplicate keys are rejected naming both
    files.
    """
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if data_root is None:
        data_root = os.path.dirname(os.path.abspath(manifest_path))

    rm = manifest["room"]
    room = Room(rm["lx"], rm["ly"], rm["lz"], rm.get("t60", 0.6),
                rm.get("c", 343.0))
    gm = manifest["grid"]
    grid = GridSpec(gm["I"], gm["J"], gm.get("up_x", 1), gm.get("up_y", 1),
                    gm.get("z_o", 1.0))
    fs = float(manifest["sample_rate"])

    errors = []
    seen = {}
    records = []
    available = np.zeros(grid.fine_shape, dtype=bool)
    for entry in manifest["files"]:
        file_path = os.path.join(data_root, entry["path"])
        key = (entry["i"], entry["j"], entry["height"], entry["source"])
        if key in seen:
            errors.append(f"duplicate key {key}: {seen[key]} and "
                          f"{entry['path']}")
            continue
        seen[key] = entry["path"]
        if not os.path.exists(file_path):
            errors.append(f"missing file: {file_path}")
            continue
        samples = np.load(file_path)
        try:
            record = ImpulseResponseRecord(entry["i"], entry["j"],
                                           entry["height"], entry["source"],
                                           fs, samples)
        except MeasurementError as exc:
            errors.append(f"{file_path}: {exc}")
            continue
        records.append(record)
        available[entry["i"], entry["j"]] = True

    if errors:
        raise MeasurementError("measurement import failed:\n  " +
                               "\n  ".join(errors))

    meta = MeasurementManifest(room, grid,
                               dict(manifest.get("heights_m", {})),
                               dict(manifest.get("sources", {})),
                               available)
    return records, meta


def ir_to_rtf(record, freqs):
    """Exact-frequency DFT of an impulse response at each analysis frequency.

    Evaluates sum_t p[t] exp(-j omega_k t / fs) directly, with no FFT bin
    snapping. Frequencies at or above Nyquist are rejected.
    """
    fs = record.sample_rate
    hz = freqs.hz
    if np.any(hz >= fs / 2.0):
        bad = hz[hz >= fs / 2.0][0]
        raise MeasurementError(f"frequency {bad:.1f} Hz at or above "
                               f"Nyquist ({fs / 2.0:.1f} Hz)")
    t = np.arange(record.samples.size)
    kernel = np.exp(-1j * np.outer(freqs.omegas / fs, t))
    return kernel @ record.samples


def assemble_field_tensor(records, manifest, freqs, height, source):
    """Assemble measured RTFs into a FieldTensor plus availability mask.

    Only records matching (height, source) contribute; unmeasured positions
    stay zero and are excluded by the returned availability mask, which
    downstream mask draws must intersect.
    """
    selected = [r for r in records
                if r.height_id == height and r.source_id == source]
    if not selected:
        raise MeasurementError(
            f"no records for height={height!r} source={source!r}")
    shape = (len(freqs),) + manifest.grid.fine_shape
    values = np.zeros(shape, dtype=np.complex128)
    available = np.zeros(manifest.grid.fine_shape, dtype=bool)
    for record in selected:
        values[:, record.i, record.j] = ir_to_rtf(record, freqs)
        available[record.i, record.j] = True
    z_o = manifest.heights_m.get(height, manifest.grid.z_o)
    grid = GridSpec(manifest.grid.i_count, manifest.grid.j_count,
                    manifest.grid.up_x, manifest.grid.up_y, z_o)
    source_xyz = tuple(manifest.source_positions.get(source, (0.0, 0.0, 0.0)))
    tensor = FieldTensor(values, manifest.room, grid, freqs, source_xyz)
    return tensor, SamplingMask(available)
