"""Modal simulation of complex sound fields in lightly damped rectangular rooms.

The field is the modal Green's function summed over all rigid-wall room modes
with resonance frequencies below a cutoff, evaluated on the fine observation
grid at each analysis frequency. The module also provides the room samplers
used to generate training/evaluation datasets, and a band-limited renderer
that turns simulated fields into synthetic impulse responses.
"""

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from ._accel import modal_field_kernel, mode_shapes_kernel
from .core import FieldTensor, FrequencySet, GridSpec, Room, build_grids

__all__ = [
    "Mode",
    "ModeSet",
    "RoomSamplerConfig",
    "LISTENING_ROOM",
    "enumerate_modes",
    "mode_shape",
    "time_constants",
    "greens_function",
    "simulate_field",
    "sample_room",
    "generate_dataset",
    "render_impulse_responses",
]

# Listening Room geometry and T20 from the measured-room table.
LISTENING_ROOM = Room(l_x=4.14, l_y=7.80, l_z=2.78, t60=0.80)


@dataclass(frozen=True)
class Mode:
    """Single room mode: index triplet, resonance, normalization, damping."""

    n_x: int
    n_y: int
    n_z: int
    omega_n: float
    lambda_n: float
    tau_n: float


@dataclass(frozen=True)
class ModeSet:
    """Array-backed set of room modes.

    Attributes
    ----------
    indices : ndarray, shape (M, 3)
        Integer mode triplets (n_x, n_y, n_z).
    omega : ndarray, shape (M,)
        Angular resonance frequencies in rad/s.
    lam : ndarray, shape (M,)
        Normalization constants sqrt(eps_x eps_y eps_z).
    tau : ndarray, shape (M,)
        Modal time constants in seconds.
    """

    indices: np.ndarray
    omega: np.ndarray
    lam: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        for name in ("indices", "omega", "lam", "tau"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.omega.size

    def __iter__(self):
        for i in range(len(self)):
            yield Mode(*map(int, self.indices[i]), float(self.omega[i]),
                       float(self.lam[i]), float(self.tau[i]))


def time_constants(room, n_modes=1):
    """Uniform modal time constants from the reverberation time.

    A 60 dB decay of the squared envelope exp(-2 t / tau) at t = t60 gives
    tau = t60 / (3 ln 10) for every mode.
    """
    tau = room.t60 / (3.0 * math.log(10.0))
    return np.full(n_modes, tau)


def enumerate_modes(room, f_max=400.0, include_z_modes=True):
    """Enumerate every room mode with resonance frequency below ``f_max``.

    Resonances follow the rigid-wall relation
    f_N = (c/2) * sqrt((n_x/l_x)^2 + (n_y/l_y)^2 + (n_z/l_z)^2); the (0,0,0)
    mode is always included. With ``include_z_modes`` False only n_z = 0
    modes are kept.
    """
    if f_max <= 0:
        raise ValueError("f_max must be positive")
    c = room.c
    two_fc = 2.0 * f_max / c
    nx_max = int(two_fc * room.l_x)
    triplets = []
    for n_x in range(nx_max + 1):
        rem_x = two_fc**2 - (n_x / room.l_x) ** 2
        if rem_x < 0:
            break
        ny_max = int(math.sqrt(rem_x) * room.l_y)
        for n_y in range(ny_max + 1):
            rem_y = rem_x - (n_y / room.l_y) ** 2
            if rem_y < 0:
                break
            nz_max = 0 if not include_z_modes else int(math.sqrt(rem_y) * room.l_z)
            for n_z in range(nz_max + 1):
                f_n = (c / 2.0) * math.sqrt(
                    (n_x / room.l_x) ** 2
                    + (n_y / room.l_y) ** 2
                    + (n_z / room.l_z) ** 2
                )
                if f_n < f_max:
                    triplets.append((n_x, n_y, n_z, f_n))

    triplets.sort(key=lambda t: (t[3], t[0], t[1], t[2]))
    idx = np.array([t[:3] for t in triplets], dtype=np.int64)
    omega = 2.0 * np.pi * np.array([t[3] for t in triplets])
    lam = np.sqrt(np.where(idx > 0, 2.0, 1.0).prod(axis=1))
    tau = time_constants(room, len(triplets))
    return ModeSet(idx, omega, lam, tau)


def _check_inside(room, position):
    position = np.asarray(position, dtype=np.float64)
    lo = position < -0.0
    hi = position > room.dims
    if lo.any() or hi.any():
        raise ValueError(f"position {position} outside room {room.dims}")
    return position


def mode_shape(mode, room, position):
    """Rigid-boundary mode shape Lambda_N * prod cos(n pi x / l) at a point."""
    position = _check_inside(room, position)
    x, y, z = position
    return (
        mode.lambda_n
        * math.cos(mode.n_x * math.pi * x / room.l_x)
        * math.cos(mode.n_y * math.pi * y / room.l_y)
        * math.cos(mode.n_z * math.pi * z / room.l_z)
    )


def _mode_shapes(modes, room, points):
    """Mode shapes for all modes at all points, shape (M, P)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    psi = mode_shapes_kernel(modes.indices, room.dims, points)
    return modes.lam[:, None] * psi


def _modal_weights(room, modes, omegas):
    """Per-frequency complex weights -1/V / denominator, shape (K, M)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=np.float64))
    c = room.c
    denom = (
        (omegas[:, None] / c) ** 2
        - (modes.omega[None, :] / c) ** 2
        - 1j * omegas[:, None] / modes.tau[None, :]
    )
    return (-1.0 / room.volume) / denom


def greens_function(room, modes, r, r0, omega):
    """Modal Green's function between two points at one frequency."""
    r = _check_inside(room, r)
    r0 = _check_inside(room, r0)
    if omega <= 0:
        raise ValueError("omega must be positive")
    psi = _mode_shapes(modes, room, np.stack([r, r0]))
    weights = _modal_weights(room, modes, omega)[0]
    return complex(np.sum(weights * psi[:, 0] * psi[:, 1]))


def simulate_field(room, source, spec, freqs, modes=None, f_max=400.0,
                   include_z_modes=True):
    """Simulate the complex field on the fine grid at each frequency.

    Parameters
    ----------
    room : Room
    source : array_like, shape (3,)
        Source position in meters; must lie inside the room.
    spec : GridSpec
    freqs : FrequencySet
    modes : ModeSet, optional
        Pre-enumerated mode set; enumerated from ``f_max`` when omitted.
    """
    source = _check_inside(room, source)
    if modes is None:
        modes = enumerate_modes(room, f_max, include_z_modes)
    _, fine = build_grids(room, spec)
    points = fine.reshape(-1, 3)
    psi_grid = _mode_shapes(modes, room, points)
    psi_src = _mode_shapes(modes, room, source)[:, 0]
    weights = _modal_weights(room, modes, freqs.omegas)
    values = modal_field_kernel(weights, psi_src[:, None] * psi_grid)
    values = values.reshape((len(freqs),) + spec.fine_shape)
    return FieldTensor(values, room, spec, freqs, tuple(source))


@dataclass(frozen=True)
class RoomSamplerConfig:
    """Configuration for the three room-sampling families.

    ``extended`` draws volume, l_x, and l_z uniformly and derives l_y with
    T60 ~ U(0.2, 1.0) s; ``original`` uses fixed T60 = 0.6 s, direct
    dimension ranges, and excludes vertical modes; ``perturbed`` adds a
    uniform error of half-width ``delta`` to the base room's length while
    preserving its aspect ratio.
    """

    family: str
    seed: int
    volume_range: tuple = (50.0, 300.0)
    lx_range: tuple = (3.5, 10.0)
    lz_range: tuple = (1.5, 3.5)
    ly_bounds: tuple = (2.0, 25.0)
    t60_range: tuple = (0.2, 1.0)
    original_lx_range: tuple = (3.5, 8.0)
    original_ly_range: tuple = (4.5, 10.0)
    original_lz_range: tuple = (2.2, 3.5)
    original_t60: float = 0.6
    delta: float = 0.0
    base_room: Room = field(default=LISTENING_ROOM)
    source_mode: str = "floor"
    c: float = 343.0
    max_retries: int = 100

    def __post_init__(self):
        if self.family not in ("extended", "original", "perturbed"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.source_mode not in ("floor", "corner"):
            raise ValueError(f"unknown source_mode {self.source_mode!r}")

    @property
    def include_z_modes(self):
        return self.family != "original"


def sample_room(config, index):
    """Draw the room and source position for dataset entry ``index``.

    Deterministic for a fixed (config.seed, index) pair via a Philox stream
    keyed on both values.
    """
    rng = np.random.Generator(np.random.Philox(key=[config.seed, index]))
    if config.family == "extended":
        room = None
        # retries keep the drawn volume so its marginal stays uniform
        vol = rng.uniform(*config.volume_range)
        for _ in range(config.max_retries):
            l_x = rng.uniform(*config.lx_range)
            l_z = rng.uniform(*config.lz_range)
            l_y = vol / (l_x * l_z)
            if config.ly_bounds[0] <= l_y <= config.ly_bounds[1]:
                t60 = rng.uniform(*config.t60_range)
                room = Room(l_x, l_y, l_z, t60, config.c)
                break
        if room is None:
            raise RuntimeError(
                f"no admissible l_y within {config.max_retries} retries"
            )
    elif config.family == "original":
        room = Room(
            rng.uniform(*config.original_lx_range),
            rng.uniform(*config.original_ly_range),
            rng.uniform(*config.original_lz_range),
            config.original_t60,
            config.c,
        )
    else:  # perturbed
        base = config.base_room
        err = rng.uniform(-config.delta, config.delta) if config.delta else 0.0
        l_x = base.l_x + err
        l_y = l_x * (base.l_y / base.l_x)
        room = Room(l_x, l_y, base.l_z, base.t60, config.c)

    if config.source_mode == "corner":
        source = (0.0, 0.0, 0.0)
    else:
        source = (rng.uniform(0.0, room.l_x), rng.uniform(0.0, room.l_y), 0.0)
    return room, source


def generate_dataset(config, count, spec, freqs, out_path, split=None,
                     f_max=400.0):
    """Generate ``count`` simulated field tensors plus manifests on disk.

    Each entry is written as a tensor directory ``room_#####``; a dataset
    manifest records the sampler configuration. ``split`` optionally maps
    split names to entry counts (consumed in index order) and produces a
    ``splits.json`` next to the manifest.
    """
    from . import tensorio

    os.makedirs(out_path, exist_ok=True)
    names = []
    for i in range(count):
        room, source = sample_room(config, i)
        tensor = simulate_field(room, source, spec, freqs, f_max=f_max,
                                include_z_modes=config.include_z_modes)
        name = f"room_{i:05d}"
        tensorio.write_tensor(os.path.join(out_path, name), tensor)
        names.append(name)

    manifest = {
        "schema_version": 1,
        "count": count,
        "family": config.family,
        "seed": config.seed,
        "f_max_hz": f_max,
        "grid": {"I": spec.i_count, "J": spec.j_count,
                 "up_x": spec.up_x, "up_y": spec.up_y, "z_o": spec.z_o},
        "freqs_hz": [float(f) for f in freqs.hz],
        "entries": names,
    }
    with open(os.path.join(out_path, "dataset.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)

    if split is not None:
        if sum(split.values()) > count:
            raise ValueError("split sizes exceed dataset size")
        splits, start = {}, 0
        for split_name, n in split.items():
            splits[split_name] = names[start:start + n]
            start += n
        with open(os.path.join(out_path, "splits.json"), "w") as fh:
            json.dump(splits, fh, indent=2)
    return names


def _band_window(freqs_hz, band):
    """Band-pass weight: unity in the pass band, C^3 polynomial ramps.

    The smooth (three continuous derivatives) transition keeps the inverse
    transform's time-domain ringing short, which the exact-frequency DFT
    round trip relies on.
    """
    f1, f2, f3, f4 = band
    w = np.zeros_like(freqs_hz)
    w[(freqs_hz >= f2) & (freqs_hz <= f3)] = 1.0
    for lo, hi, rising in ((f1, f2, True), (f3, f4, False)):
        m = (freqs_hz > lo) & (freqs_hz < hi)
        s = (freqs_hz[m] - lo) / (hi - lo)
        v = s**4 * (35.0 - 84.0 * s + 70.0 * s**2 - 20.0 * s**3)
        w[m] = v if rising else 1.0 - v
    return w


def render_impulse_responses(room, modes, source, points, fs, n_samples,
                             band=(5.0, 20.0, 350.0, 500.0),
                             delay_samples=0):
    """Render band-limited synthetic impulse responses at given points.

    The Green's function is evaluated on a dense FFT bin grid, weighted by a
    smooth band-pass window, delayed by ``delay_samples`` (a pure linear
    phase), and inverse-transformed. Within the flat pass band the
    exact-frequency DFT of the result reproduces the original field times
    exp(-j omega d / fs), up to time-domain wrap-around of the modal decay
    and the window's acausal ringing; ``n_samples`` must cover several
    reverberation times and ``delay_samples`` must exceed the ringing width
    for high-accuracy round trips.
    """
    source = _check_inside(room, source)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n_bins = n_samples // 2 + 1
    bin_hz = np.arange(n_bins) * (fs / n_samples)
    window = _band_window(bin_hz, band)
    if delay_samples:
        window = window * np.exp(-2j * np.pi * np.arange(n_bins)
                                 * delay_samples / n_samples)
    live = np.abs(window) > 0.0

    psi_pts = _mode_shapes(modes, room, points)
    psi_src = _mode_shapes(modes, room, source)[:, 0]
    prod = psi_src[:, None] * psi_pts  # (M, P)

    irs = np.empty((points.shape[0], n_samples))
    spectrum = np.zeros(n_bins, dtype=np.complex128)
    omegas = 2.0 * np.pi * bin_hz[live]
    chunk = 8192
    for p in range(points.shape[0]):
        vals = np.empty(omegas.size, dtype=np.complex128)
        for start in range(0, omegas.size, chunk):
            w = _modal_weights(room, modes, omegas[start:start + chunk])
            vals[start:start + chunk] = w @ prod[:, p]
        spectrum[:] = 0.0
        spectrum[live] = window[live] * vals
        irs[p] = np.fft.irfft(spectrum, n=n_samples)
    return irs
