"""Partial convolution layer for irregularly masked inputs.

At each output site with at least one valid entry in the kernel window the
response is renormalized by the ratio of window size to valid count,
W (X o M) * sum(1)/sum(M) + b, and the site becomes valid; windows with no
valid entry output zero and stay invalid.
"""

import torch
import torch.nn.functional as functional
from torch import nn


class PartialConv2d(nn.Module):
    """Conv2d with mask renormalization and the mask update rule."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1,
                 padding=0):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size,
                              stride=stride, padding=padding)
        self.stride = self.conv.stride
        self.padding = self.conv.padding
        window = torch.ones(1, 1, *self.conv.kernel_size)
        self.register_buffer("window", window)

    def forward(self, features, mask):
        # mask is single-channel [N, 1, H, W]; features [N, C, H, W]
        valid = functional.conv2d(mask, self.window, stride=self.stride,
                                  padding=self.padding)
        # the window size term counts in-bounds positions only, so a fully
        # valid mask reduces exactly to a standard convolution
        in_bounds = functional.conv2d(torch.ones_like(mask), self.window,
                                      stride=self.stride,
                                      padding=self.padding)
        response = self.conv(features * mask)
        bias = self.conv.bias.view(1, -1, 1, 1)
        any_valid = valid > 0
        ratio = torch.where(any_valid, in_bounds / valid.clamp(min=1.0),
                            torch.zeros_like(valid))
        out = torch.where(any_valid, (response - bias) * ratio + bias,
                          torch.zeros_like(response))
        new_mask = any_valid.to(mask.dtype)
        return out, new_mask
