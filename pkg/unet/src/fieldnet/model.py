"""Partial-convolution U-Net for masked field reconstruction."""

from dataclasses import dataclass

import torch
from torch import nn

from .pconv import PartialConv2d


@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings.

    The complex variant doubles the kernel counts of the magnitude
    baseline; ``base_kernels`` is the magnitude count before doubling.
    """

    variant: str = "complex"
    in_channels: int = 80
    depth: int = 4
    base_kernels: int = 64
    kernel_size: int = 3
    leaky_slope: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("magnitude", "complex"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")

    @property
    def kernels(self):
        scale = 2 if self.variant == "complex" else 1
        return self.base_kernels * scale


class _Block(nn.Module):
    def __init__(self, in_ch, out_ch, kernel_size, stride, slope):
        super().__init__()
        self.pconv = PartialConv2d(in_ch, out_ch, kernel_size,
                                   stride=stride,
                                   padding=kernel_size // 2)
        self.act = (nn.ReLU() if slope is None
                    else nn.LeakyReLU(negative_slope=slope))

    def forward(self, features, mask):
        out, mask = self.pconv(features, mask)
        return self.act(out), mask


class PConvUNet(nn.Module):
    """Encoder of strided partial convolutions, decoder with skips.

    Encoder blocks halve the spatial dimensions and double the kernel
    counts (ReLU); decoder blocks nearest-neighbor upsample, concatenate
    the skip features, and apply a stride-1 partial convolution with leaky
    ReLU. The final layer maps back to the input channel count with no
    output nonlinearity.
    """

    def __init__(self, config):
        super().__init__()
        self.config = config
        torch.manual_seed(config.seed)

        ch = config.in_channels
        enc_channels = [ch]
        self.encoder = nn.ModuleList()
        kernels = config.kernels
        for level in range(config.depth):
            out_ch = kernels * (2 ** level)
            self.encoder.append(_Block(enc_channels[-1], out_ch,
                                       config.kernel_size, 2, None))
            enc_channels.append(out_ch)

        self.decoder = nn.ModuleList()
        for level in reversed(range(config.depth)):
            in_ch = enc_channels[level + 1] + enc_channels[level]
            out_ch = (enc_channels[level] if level > 0 else kernels)
            self.decoder.append(_Block(in_ch, out_ch, config.kernel_size,
                                       1, config.leaky_slope))
        self.head = PartialConv2d(kernels, ch, 1)

        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module):
        if isinstance(module, nn.Conv2d):
            nn.init.xavier_uniform_(module.weight)
            nn.init.zeros_(module.bias)

    def forward(self, features, mask):
        size = features.shape[-1]
        if size % (2 ** self.config.depth):
            raise ValueError(
                f"depth {self.config.depth} over-shrinks a {size}-wide grid")
        skips = [(features, mask)]
        out = features
        for block in self.encoder:
            out, mask = block(out, mask)
            skips.append((out, mask))
        skips.pop()
        for block in self.decoder:
            out = nn.functional.interpolate(out, scale_factor=2,
                                            mode="nearest")
            mask = nn.functional.interpolate(mask, scale_factor=2,
                                             mode="nearest")
            skip_feat, skip_mask = skips.pop()
            out = torch.cat([out, skip_feat], dim=1)
            mask = torch.maximum(mask, skip_mask)
            out, mask = block(out, mask)
        out, mask = self.head(out, mask)
        return out, mask


def build_model(config):
    """Construct the network; identical weights for identical seeds."""
    return PConvUNet(config)
