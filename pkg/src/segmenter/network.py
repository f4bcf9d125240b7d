"""
Bayesian SegNet-style encoder-decoder.
Max-pool indices from each encoder block drive the unpooling of the mirrored
decoder block. Dropout sits after the innermost encoder and decoder blocks
and stays active at inference whenever a generator is supplied.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import torch
import torch.nn as nn

from src.core.errors import InvalidParameterError


@dataclass
class ModelConfig:
    """Network architecture"""

    input_size: int = 128
    encoder_blocks: int = 3
    channels_per_block: List[int] = field(default_factory=lambda: [16, 32, 64])
    dropout_rate: float = 0.5
    convs_per_block: int = 1
    rng_seed: int = 0
    in_channels: int = 1
    num_classes: int = 2

    def __post_init__(self):
        self.channels_per_block = [int(c) for c in self.channels_per_block]
        if self.encoder_blocks < 1:
            raise InvalidParameterError(f"encoder_blocks must be >= 1, got {self.encoder_blocks}")
        if len(self.channels_per_block) != self.encoder_blocks:
            raise InvalidParameterError(
                f"channels_per_block has {len(self.channels_per_block)} entries, "
                f"expected {self.encoder_blocks}")
        if any(c < 1 for c in self.channels_per_block):
            raise InvalidParameterError("Channel counts must be >= 1")
        if self.convs_per_block < 1:
            raise InvalidParameterError(f"convs_per_block must be >= 1, got {self.convs_per_block}")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidParameterError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        size = self.input_size
        if size < 1 or size & (size - 1):
            raise InvalidParameterError(f"input_size must be a power of two, got {size}")
        if size % (2 ** self.encoder_blocks):
            raise InvalidParameterError(
                f"input_size {size} is not divisible by 2^{self.encoder_blocks}")


class MCDropout(nn.Module):
    """
    Inverted dropout drawn from an explicit generator

    Unlike nn.Dropout this ignores train/eval mode: masks are applied
    whenever a generator is passed, so the same module serves training and
    Monte-Carlo inference, and a fixed generator seed freezes the masks.
    """

    def __init__(self, p: float):
        super().__init__()
        self.p = p

    def forward(self, x: torch.Tensor, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        if generator is None or self.p == 0:
            return x
        keep = torch.empty_like(x).bernoulli_(1.0 - self.p, generator=generator)
        return x * keep / (1.0 - self.p)


def _conv_bn_relu(c_in: int, c_out: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(c_in, c_out, kernel_size=3, stride=1, padding=1),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class BayesianSegNet(nn.Module):
    """Encoder-decoder producing per-pixel class logits"""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        channels = config.channels_per_block

        self.encoders = nn.ModuleList()
        c_in = config.in_channels
        for c in channels:
            layers = [_conv_bn_relu(c_in, c)]
            layers += [_conv_bn_relu(c, c) for _ in range(config.convs_per_block - 1)]
            self.encoders.append(nn.Sequential(*layers))
            c_in = c
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2, return_indices=True)
        self.unpool = nn.MaxUnpool2d(kernel_size=2, stride=2)

        # decoders[0] mirrors the innermost encoder
        self.decoders = nn.ModuleList()
        for level in reversed(range(len(channels))):
            c_out = channels[level - 1] if level > 0 else channels[0]
            layers = [_conv_bn_relu(channels[level], channels[level])
                      for _ in range(config.convs_per_block - 1)]
            self.decoders.append(nn.Sequential(*layers, _conv_bn_relu(channels[level], c_out)))
        self.classifier = nn.Conv2d(channels[0], config.num_classes, kernel_size=1)

        self.encoder_dropout = MCDropout(config.dropout_rate)
        self.decoder_dropout = MCDropout(config.dropout_rate)

    def forward(self, x: torch.Tensor, generator: Optional[torch.Generator] = None) -> torch.Tensor:
        indices = []
        sizes = []
        for encoder in self.encoders:
            x = encoder(x)
            sizes.append(x.size())
            x, idx = self.pool(x)
            indices.append(idx)
        x = self.encoder_dropout(x, generator)

        for step, decoder in enumerate(self.decoders):
            level = len(self.encoders) - 1 - step
            x = self.unpool(x, indices[level], output_size=sizes[level])
            x = decoder(x)
            if step == 0:
                x = self.decoder_dropout(x, generator)
        return self.classifier(x)


def build_network(config: ModelConfig) -> BayesianSegNet:
    """
    Construct a network with He-normal convolution weights drawn from config.rng_seed

    Biases start at zero; batch-norm starts at gamma=1, beta=0.
    """
    network = BayesianSegNet(config)
    generator = torch.Generator().manual_seed(int(config.rng_seed))
    with torch.no_grad():
        for module in network.modules():
            if isinstance(module, nn.Conv2d):
                fan_in = module.weight[0].numel()
                module.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=generator)
                module.bias.zero_()
            elif isinstance(module, nn.BatchNorm2d):
                module.reset_parameters()
    return network
