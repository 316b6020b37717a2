"""Inference: forward pass plus per-frequency affine rescaling.

After the network fills the unobserved entries, each frequency slice is
rescaled by a real (gain, offset) pair fitted by least squares between the
prediction and the observations at the observed positions (real and
imaginary channels fitted jointly). Frequencies with fewer than two
observed points skip the regression and undo the stored scale factor
instead; those slices are flagged in the result.
"""

import numpy as np
import torch

from . import tensorfile
from .preprocess import preprocess, unscale
from .train import load_checkpoint


def affine_rescale(predicted, observed, mask):
    """Per-frequency least-squares (gain, offset) on observed positions.

    ``predicted`` and ``observed`` are complex [K, X, Y]; the fit stacks
    real and imaginary samples so one real affine map serves both
    channels. Returns the rescaled prediction and a flag array marking
    frequencies with fewer than two observed points (left untouched).
    """
    out = predicted.copy()
    flagged = np.zeros(predicted.shape[0], dtype=bool)
    idx = np.flatnonzero(mask.ravel())
    for k in range(predicted.shape[0]):
        p = predicted[k].ravel()[idx]
        s = observed[k].ravel()[idx]
        x = np.concatenate([p.real, p.imag])
        y = np.concatenate([s.real, s.imag])
        if idx.size < 2:
            flagged[k] = True
            continue
        design = np.column_stack([x, np.ones_like(x)])
        (gain, offset), *_ = np.linalg.lstsq(design, y, rcond=None)
        out[k] = gain * predicted[k] + offset * (1.0 + 1.0j)
    return out, flagged


def reconstruct(checkpoint_dir, in_path, out_path):
    """Reconstruct a masked tensor file and write the estimate.

    The input tensor must carry a mask; observed entries are taken as
    ground truth for the rescaling regression. Returns the flag array from
    :func:`affine_rescale`.
    """
    model, _, _ = load_checkpoint(checkpoint_dir)
    model.eval()
    tensor = tensorfile.read_tensor(in_path)
    if tensor.mask is None:
        raise tensorfile.TensorFileError(f"{in_path}: no mask stored")

    variant = model.config.variant
    sample = preprocess(tensor.values, tensor.mask, variant)
    x = torch.from_numpy(sample.inputs[None]).float()
    m = torch.from_numpy(sample.mask[None, :1]).float()
    with torch.no_grad():
        out, _ = model(x, m)
    predicted = unscale(out[0].numpy().astype(np.float64), sample.scales,
                        variant)
    if variant == "magnitude":
        predicted = predicted.astype(np.complex128)

    observed = np.where(tensor.mask[None], tensor.values, 0.0)
    rescaled, flagged = affine_rescale(predicted, observed, tensor.mask)

    tensorfile.write_tensor(out_path, tensorfile.TensorFile(
        rescaled.astype(np.complex64), tensor.freqs_hz, tensor.room,
        tensor.grid, tensor.source_xyz, tensor.mask))
    return flagged
