"""The segmentation network: a plain U-Net with a sigmoid head.

Encoder blocks are two 3x3 convolutions with ReLU followed by 2x2 max
pooling; the filter count doubles from 32 up to the 256-filter
bottleneck (the fourth block, which is not pooled). The decoder mirrors
the encoder with 2x2 transposed convolutions and skip concatenations,
and a 1x1 convolution squashes to a single probability channel.
"""

from dataclasses import dataclass

import torch
from torch import nn

# fixed by the default architecture; asserted at build time so an
# accidental layer edit cannot go unnoticed
DEFAULT_PARAM_COUNT = 1_925_025


@dataclass(frozen=True)
class UNetSpec:
    filters: tuple = (32, 64, 128, 256)
    in_channels: int = 1

    @property
    def pool_factor(self) -> int:
        return 2 ** (len(self.filters) - 1)


def _double_conv(in_ch: int, out_ch: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_ch, out_ch, kernel_size=3, padding=1),
        nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    def __init__(self, spec: UNetSpec | None = None):
        super().__init__()
        self.spec = spec or UNetSpec()
        filters = self.spec.filters
        if len(filters) < 2:
            raise ValueError("need at least two filter sizes")

        self.encoders = nn.ModuleList()
        in_ch = self.spec.in_channels
        for out_ch in filters[:-1]:
            self.encoders.append(_double_conv(in_ch, out_ch))
            in_ch = out_ch
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = _double_conv(filters[-2], filters[-1])

        self.ups = nn.ModuleList()
        self.decoders = nn.ModuleList()
        up_in = filters[-1]
        for skip_ch in reversed(filters[:-1]):
            self.ups.append(nn.ConvTranspose2d(up_in, skip_ch, kernel_size=2, stride=2))
            self.decoders.append(_double_conv(skip_ch * 2, skip_ch))
            up_in = skip_ch
        self.head = nn.Conv2d(filters[0], 1, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        factor = self.spec.pool_factor
        if x.ndim != 4 or x.shape[1] != self.spec.in_channels:
            raise ValueError(f"expected (n, {self.spec.in_channels}, h, w), got {tuple(x.shape)}")
        if x.shape[2] % factor or x.shape[3] % factor:
            raise ValueError(f"spatial size must be divisible by {factor}, got {tuple(x.shape[2:])}")
        skips = []
        for encoder in self.encoders:
            x = encoder(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for up, decoder, skip in zip(self.ups, self.decoders, reversed(skips)):
            x = up(x)
            x = decoder(torch.cat([skip, x], dim=1))
        return torch.sigmoid(self.head(x))


def build_model(spec: UNetSpec | None = None) -> UNet:
    model = UNet(spec)
    if model.spec == UNetSpec():
        count = sum(p.numel() for p in model.parameters())
        assert count == DEFAULT_PARAM_COUNT, f"default network has {count} parameters"
    return model
