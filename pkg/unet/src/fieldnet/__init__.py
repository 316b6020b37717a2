"""Partial-convolution U-Net reconstruction of sound field tensors."""

from .model import ModelConfig, PConvUNet, build_model
from .pconv import PartialConv2d
from .preprocess import ScaledSample, preprocess, unscale
from .reconstruct import affine_rescale, reconstruct
from .tensorfile import TensorFile, TensorFileError, read_tensor, write_tensor
from .train import TrainConfig, train

__version__ = "0.1.0"
