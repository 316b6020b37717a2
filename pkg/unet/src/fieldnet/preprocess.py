"""Input preparation: completion, per-frequency max scaling, mask stacking.

The complex variant stacks real and imaginary parts as 2K channels and
divides both channels of a frequency by the largest observed absolute
component, mapping observed entries into [-1, 1]. The magnitude variant
uses K channels of |s| scaled into [0, 1].
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ScaledSample:
    """One network sample: scaled input stack, mask stack, scales, target."""

    inputs: np.ndarray       # [C, X, Y] observed entries, zeros elsewhere
    mask: np.ndarray         # [C, X, Y] float 0/1, equal across channels
    scales: np.ndarray       # [K] per-frequency divisors
    target: np.ndarray       # [C, X, Y] fully scaled ground truth
    degenerate: np.ndarray = field(default=None)  # [K] all-zero slices

    def __post_init__(self):
        if self.inputs.shape != self.mask.shape:
            raise ValueError("input and mask stacks must share a shape")


def _stack(values, variant):
    if variant == "complex":
        return np.concatenate([values.real, values.imag], axis=0)
    if variant == "magnitude":
        return np.abs(values)
    raise ValueError(f"unknown variant {variant!r}")


def preprocess(values, mask, variant="complex"):
    """Build a ScaledSample from a complex field [K, X, Y] and a 2-D mask.

    Unobserved entries are completed with zero before scaling. The scale of
    a frequency is the maximum over observed positions of max(|Re|, |Im|)
    (complex) or of |s| (magnitude); an all-zero observed slice keeps scale
    1 and is flagged in ``degenerate``.
    """
    values = np.asarray(values)
    mask = np.asarray(mask, dtype=bool)
    if values.ndim != 3 or mask.shape != values.shape[1:]:
        raise ValueError("need values [K, X, Y] and mask [X, Y]")
    k_count = values.shape[0]

    observed = np.where(mask[None, :, :], values, 0.0)
    if variant == "complex":
        per_freq = np.maximum(np.abs(observed.real), np.abs(observed.imag))
    else:
        per_freq = np.abs(observed)
    scales = per_freq.reshape(k_count, -1).max(axis=1)
    degenerate = scales == 0.0
    scales = np.where(degenerate, 1.0, scales)

    scaled_obs = _stack(observed, variant) / np.tile(
        scales, 2 if variant == "complex" else 1)[:, None, None]
    scaled_target = _stack(values, variant) / np.tile(
        scales, 2 if variant == "complex" else 1)[:, None, None]
    channel_mask = np.broadcast_to(
        mask[None, :, :].astype(np.float64), scaled_obs.shape).copy()
    return ScaledSample(scaled_obs * channel_mask, channel_mask, scales,
                        scaled_target, degenerate)


def unscale(stack, scales, variant="complex"):
    """Invert the scaling and channel stacking back to complex [K, X, Y]."""
    stack = np.asarray(stack)
    if variant == "complex":
        k = stack.shape[0] // 2
        values = stack[:k] + 1j * stack[k:]
        return values * scales[:, None, None]
    return stack * scales[:, None, None]
