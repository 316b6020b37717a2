"""Reconstruction error measures over field tensors."""

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["NmseCurve", "nmse_per_frequency", "mnmse", "db",
           "write_nmse_csv", "write_mnmse_csv"]


def db(linear):
    """10 log10 of a linear power ratio; exact zeros map to -inf."""
    linear = np.asarray(linear, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(linear)


@dataclass(frozen=True)
class NmseCurve:
    """Per-frequency normalized mean square error (linear), with a dB view."""

    freqs_hz: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.freqs_hz, dtype=np.float64)
        linear = np.asarray(self.linear, dtype=np.float64)
        if freqs.shape != linear.shape:
            raise ValueError("frequency and value arrays must match")
        if np.any(linear < 0):
            raise ValueError("NMSE values must be non-negative")
        freqs.setflags(write=False)
        linear.setflags(write=False)
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "linear", linear)

    @property
    def dB(self):
        return db(self.linear)

    def __len__(self):
        return self.linear.size


def nmse_per_frequency(truth, estimate):
    """Normalized mean square error per frequency over the fine grid.

    NMSE_k = sum_r |s - s_hat|^2 / sum_r |s|^2. Both arguments are
    FieldTensors with identical shapes and frequency sets; magnitude-valued
    tensors (zero imaginary parts) work identically.
    """
    if truth.values.shape != estimate.values.shape:
        raise ValueError("truth and estimate shapes differ")
    if not np.array_equal(truth.freqs.omegas, estimate.freqs.omegas):
        raise ValueError("truth and estimate frequency sets differ")
    err = np.abs(truth.values - estimate.values) ** 2
    ref = np.abs(truth.values) ** 2
    energy = ref.reshape(ref.shape[0], -1).sum(axis=1)
    zero = np.flatnonzero(energy == 0.0)
    if zero.size:
        hz = truth.freqs.hz[zero[0]]
        raise ValueError(f"truth has zero energy at {hz:.3f} Hz")
    linear = err.reshape(err.shape[0], -1).sum(axis=1) / energy
    return NmseCurve(truth.freqs.hz, linear)


def mnmse(curves):
    """Mean of all linear NMSE values across curves and frequencies.

    All curves must share the same number of frequencies; the result is a
    linear ratio (use :func:`db` for the dB view).
    """
    curves = list(curves)
    if not curves:
        raise ValueError("mnmse requires at least one curve")
    k = len(curves[0])
    if any(len(c) != k for c in curves):
        raise ValueError("curves have mismatching lengths")
    return float(np.mean([c.linear for c in curves]))


def write_nmse_csv(path, curve):
    """One row per frequency: freq_hz, nmse_linear, nmse_db."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["freq_hz", "nmse_linear", "nmse_db"])
        for f, lin, d in zip(curve.freqs_hz, curve.linear, curve.dB):
            writer.writerow([f"{f:.6f}", f"{lin:.12e}", f"{d:.6f}"])


def write_mnmse_csv(path, rows):
    """Summary rows of (room, model, n_mic, mnmse_db)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["room", "model", "n_mic", "mnmse_db"])
        for room, model, n_mic, mnmse_db in rows:
            writer.writerow([room, model, n_mic, f"{mnmse_db:.6f}"])
