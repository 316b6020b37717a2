"""Training loop: Adam, early stopping, resumable checkpoints.

Samples are drawn from a tensor dataset directory; each room is paired
with a deterministic random sampling mask per epoch (counter-based RNG, so
single-worker order is reproducible). The loss is mean squared error
between the network output and the scaled target over all grid points.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass

import numpy as np
import torch

from . import tensorfile
from .model import ModelConfig, build_model
from .preprocess import preprocess


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule settings."""

    lr: float = 1e-3
    batch_size: int = 4
    max_epochs: int = 100
    patience: int = 10
    n_mic_range: tuple = (5, 55)
    seed: int = 0


def dataset_digest(root):
    """Stable digest of the dataset manifest for checkpoint provenance."""
    with open(os.path.join(root, "dataset.json"), "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def load_split(root, split):
    entries, splits = tensorfile.read_dataset(root)
    if splits is not None and split in splits:
        entries = splits[split]
    tensors = [tensorfile.read_tensor(os.path.join(root, name))
               for name in entries]
    if not tensors:
        raise ValueError(f"split {split!r} of {root} is empty")
    return tensors


def draw_mask(shape, n_mic, key):
    rng = np.random.Generator(np.random.Philox(key=key))
    flat = np.zeros(shape[0] * shape[1], dtype=bool)
    flat[rng.permutation(flat.size)[:n_mic]] = True
    return flat.reshape(shape)


def make_batch(tensors, indices, variant, epoch, cfg):
    """Preprocess a list of rooms with per-(epoch, room) random masks."""
    inputs, masks, targets = [], [], []
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, epoch]))
    for idx in indices:
        tensor = tensors[idx]
        shape = tensor.values.shape[1:]
        n_mic = int(rng.integers(cfg.n_mic_range[0],
                                 cfg.n_mic_range[1] + 1))
        # Philox array keys take two 64-bit words; pack (epoch, room)
        mask = draw_mask(shape, n_mic,
                         [cfg.seed, (int(epoch) << 32) + int(idx)])
        sample = preprocess(tensor.values, mask, variant)
        inputs.append(sample.inputs)
        masks.append(sample.mask[:1])
        targets.append(sample.target)
    to = lambda arrays: torch.from_numpy(np.stack(arrays)).float()
    return to(inputs), to(masks), to(targets)


def evaluate_loss(model, tensors, variant, epoch, cfg):
    model.eval()
    losses = []
    with torch.no_grad():
        for start in range(0, len(tensors), cfg.batch_size):
            idx = range(start, min(start + cfg.batch_size, len(tensors)))
            x, m, y = make_batch(tensors, idx, variant, epoch, cfg)
            out, _ = model(x, m)
            losses.append(torch.mean((out - y) ** 2).item())
    return float(np.mean(losses))


def save_checkpoint(path, model, optimizer, epoch, best_val, digest):
    os.makedirs(path, exist_ok=True)
    torch.save({"model": model.state_dict(),
                "optimizer": optimizer.state_dict(),
                "epoch": epoch,
                "best_val": best_val}, os.path.join(path, "weights.pt"))
    with open(os.path.join(path, "config.json"), "w") as fh:
        json.dump({"model": asdict(model.config),
                   "dataset_sha256": digest}, fh, indent=2)


def load_checkpoint(path):
    with open(os.path.join(path, "config.json")) as fh:
        meta = json.load(fh)
    model_cfg = dict(meta["model"])
    model = build_model(ModelConfig(**model_cfg))
    state = torch.load(os.path.join(path, "weights.pt"),
                       weights_only=False)
    model.load_state_dict(state["model"])
    return model, state, meta


def train(data_root, out_dir, model_config, train_config=None,
          resume=False, log=print):
    """Train on the ``train`` split, early-stop on ``val``, checkpoint.

    Returns the per-epoch (train, val) loss history. A NaN training loss
    aborts with the offending batch identified.
    """
    cfg = train_config or TrainConfig()
    torch.manual_seed(cfg.seed)
    train_set = load_split(data_root, "train")
    val_set = load_split(data_root, "val")
    digest = dataset_digest(data_root)

    start_epoch = 0
    best_val = float("inf")
    if resume and os.path.exists(os.path.join(out_dir, "weights.pt")):
        model, state, meta = load_checkpoint(out_dir)
        if meta["dataset_sha256"] != digest:
            raise ValueError("checkpoint was trained on a different dataset")
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        optimizer.load_state_dict(state["optimizer"])
        start_epoch = state["epoch"] + 1
        best_val = state["best_val"]
    else:
        model = build_model(model_config)
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    history = []
    stale = 0
    order_rng = np.random.Generator(np.random.Philox(key=[cfg.seed, 999]))
    for epoch in range(start_epoch, cfg.max_epochs):
        model.train()
        order = order_rng.permutation(len(train_set))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch_ids = order[start:start + cfg.batch_size]
            x, m, y = make_batch(train_set, batch_ids,
                                 model.config.variant, epoch, cfg)
            optimizer.zero_grad()
            out, _ = model(x, m)
            loss = torch.mean((out - y) ** 2)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"NaN loss at epoch {epoch}, batch rooms "
                    f"{batch_ids.tolist()}")
            loss.backward()
            optimizer.step()
            epoch_losses.append(loss.item())

        train_loss = float(np.mean(epoch_losses))
        val_loss = evaluate_loss(model, val_set, model.config.variant,
                                 epoch, cfg)
        history.append((train_loss, val_loss))
        log(f"epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}")

        if val_loss < best_val:
            best_val = val_loss
            stale = 0
            save_checkpoint(out_dir, model, optimizer, epoch, best_val,
                            digest)
        else:
            stale += 1
            if stale >= cfg.patience:
                log(f"early stop at epoch {epoch}")
                break
    return history
