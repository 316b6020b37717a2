"""Rooms, grids, frequency sets, sampling masks, and complex field tensors.

All types are immutable value objects; operations are pure functions.
Axis order for field tensors is fixed as [frequency, x, y].
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Room",
    "GridSpec",
    "FrequencySet",
    "SamplingMask",
    "FieldTensor",
    "build_grids",
    "build_frequency_set",
    "draw_mask",
    "concat_split",
    "split_concat",
]


@dataclass(frozen=True)
class Room:
    """Rectangular room geometry and acoustic parameters.

    Parameters
    ----------
    l_x, l_y, l_z : float
        Room length, width, and height in meters.
    t60 : float
        Reverberation time in seconds.
    c : float
        Speed of sound in m/s.
    """

    l_x: float
    l_y: float
    l_z: float
    t60: float = 0.6
    c: float = 343.0

    def __post_init__(self):
        if not (self.l_x > 0 and self.l_y > 0 and self.l_z > 0):
            raise ValueError("room dimensions must be positive")
        if not self.t60 > 0:
            raise ValueError("t60 must be positive")
        if not self.c > 0:
            raise ValueError("speed of sound must be positive")

    @property
    def volume(self):
        return self.l_x * self.l_y * self.l_z

    @property
    def dims(self):
        return np.array([self.l_x, self.l_y, self.l_z])


@dataclass(frozen=True)
class GridSpec:
    """Observation grid definition with per-axis upsampling factors.

    The coarse grid has ``i_count`` x ``j_count`` points; the fine grid has
    ``i_count * up_x`` x ``j_count * up_y`` points at plane height ``z_o``.
    """

    i_count: int
    j_count: int
    up_x: int = 1
    up_y: int = 1
    z_o: float = 1.0

    def __post_init__(self):
        if self.i_count < 2 or self.j_count < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if self.up_x < 1 or self.up_y < 1:
            raise ValueError("upsampling factors must be positive integers")
        if self.z_o < 0:
            raise ValueError("z_o must be non-negative")

    @property
    def fine_shape(self):
        return (self.i_count * self.up_x, self.j_count * self.up_y)

    @property
    def n_points(self):
        nx, ny = self.fine_shape
        return nx * ny


@dataclass(frozen=True)
class FrequencySet:
    """Ordered set of angular frequencies (rad/s) with a Hz view."""

    omegas: np.ndarray

    def __post_init__(self):
        omegas = np.atleast_1d(np.asarray(self.omegas, dtype=np.float64))
        if omegas.size and np.any(np.diff(omegas) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        omegas.setflags(write=False)
        object.__setattr__(self, "omegas", omegas)

    @property
    def hz(self):
        return self.omegas / (2.0 * np.pi)

    def __len__(self):
        return self.omegas.size


@dataclass(frozen=True)
class SamplingMask:
    """Boolean observation pattern over the fine grid."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=bool)
        if values.ndim != 2:
            raise ValueError("mask must be 2-D")
        if not values.any():
            raise ValueError("mask must select at least one point")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_mic(self):
        return int(self.values.sum())


@dataclass(frozen=True)
class FieldTensor:
    """Complex sound field on the fine grid across K frequencies.

    ``values`` has shape [K, X, Y] with X = I*up_x and Y = J*up_y.
    """

    values: np.ndarray
    room: Room
    grid: GridSpec
    freqs: FrequencySet
    source: tuple = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        values = np.asarray(self.values)
        if not np.iscomplexobj(values):
            values = values.astype(np.complex128)
        expected = (len(self.freqs),) + self.grid.fine_shape
        if values.shape != expected:
            raise ValueError(
                f"field shape {values.shape} does not match metadata {expected}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "source", tuple(float(v) for v in self.source))

    @property
    def magnitude(self):
        return np.abs(self.values)


def build_grids(room, spec):
    """Build coarse and fine (upsampled) observation grids.

    Returns
    -------
    coarse : ndarray, shape (I, J, 3)
    fine : ndarray, shape (I*up_x, J*up_y, 3)
        Absolute coordinates in meters; index 0 runs along x.
    """
    if not 0.0 <= spec.z_o <= room.l_z:
        raise ValueError(f"z_o={spec.z_o} outside [0, {room.l_z}]")

    def plane(nx, ny):
        x = np.arange(nx) * (room.l_x / (nx - 1))
        y = np.arange(ny) * (room.l_y / (ny - 1))
        pts = np.empty((nx, ny, 3))
        pts[:, :, 0] = x[:, None]
        pts[:, :, 1] = y[None, :]
        pts[:, :, 2] = spec.z_o
        return pts

    coarse = plane(spec.i_count, spec.j_count)
    fine = plane(*spec.fine_shape)
    return coarse, fine


def build_frequency_set(f_lo, f_hi, fraction):
    """Fractional-octave frequency ladder f_k = f_lo * 2**(k / fraction).

    Frequencies are generated while f_k <= f_hi; an empty set is returned
    when f_lo > f_hi.
    """
    if f_lo <= 0:
        raise ValueError("f_lo must be positive")
    if fraction < 1:
        raise ValueError("fraction must be >= 1")
    freqs = []
    k = 0
    while True:
        f = f_lo * 2.0 ** (k / fraction)
        if f > f_hi:
            break
        freqs.append(f)
        k += 1
    return FrequencySet(2.0 * np.pi * np.asarray(freqs))


def draw_mask(spec, n_mic, seed):
    """Draw a uniform random sampling mask with exactly ``n_mic`` points.

    Uses the counter-based Philox generator keyed on ``seed`` so that the
    same (spec, n_mic, seed) yields the same mask on every platform.
    """
    size = spec.n_points
    if not 1 <= n_mic <= size:
        raise ValueError(f"n_mic={n_mic} out of range [1, {size}]")
    rng = np.random.Generator(np.random.Philox(key=seed))
    chosen = rng.permutation(size)[:n_mic]
    flat = np.zeros(size, dtype=bool)
    flat[chosen] = True
    return SamplingMask(flat.reshape(spec.fine_shape))


def concat_split(values):
    """Stack real and imaginary parts along the frequency axis.

    Channels 0..K-1 hold the real parts and K..2K-1 the imaginary parts of
    a [K, X, Y] complex array. Inverse is :func:`split_concat`.
    """
    values = np.asarray(values)
    return np.concatenate([values.real, values.imag], axis=0)


def split_concat(stack):
    """Inverse of :func:`concat_split`; lossless for finite inputs."""
    stack = np.asarray(stack)
    if stack.shape[0] % 2:
        raise ValueError("stack must have an even number of channels")
    k = stack.shape[0] // 2
    return stack[:k] + 1j * stack[k:]
