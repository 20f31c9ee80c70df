"""Subtractive dithered scalar quantization with a soft training path.

The encoder output lives in [-1, 1]^dim. Each dimension is quantized onto L
evenly spaced levels spanning [-1, 1] (spacing 2/(L-1)). The sender adds a
shared uniform dither u before quantizing; the receiver decodes z - u, which
makes the quantization error independent of the signal.
"""

from __future__ import annotations

import numpy as np
import torch

from .datamodel import QuantizerSpec

__all__ = [
    "grid",
    "dither_bound",
    "sample_dither",
    "quantize",
    "dequantize",
    "soft_quantize",
    "ste_quantize",
]


def grid(levels: int) -> np.ndarray:
    """The L quantization levels: -1 + 2i/(L-1), i = 0..L-1."""
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    return -1.0 + 2.0 * np.arange(levels) / (levels - 1)


def dither_bound(spec: QuantizerSpec) -> float:
    """Half-width of the dither distribution: 1/(L-1)."""
    return 1.0 / (spec.levels - 1)


def sample_dither(
    spec: QuantizerSpec,
    generator: torch.Generator,
    batch_size: int | None = None,
) -> torch.Tensor:
    """Draw i.i.d. uniform dither on [-1/(L-1), +1/(L-1)]^dim.

    Returns shape (dim,) or (batch_size, dim). Deterministic given the
    generator state.
    """
    b = dither_bound(spec)
    shape = (spec.dim,) if batch_size is None else (batch_size, spec.dim)
    u = torch.rand(shape, generator=generator, dtype=torch.float32)
    return (2 * u - 1) * b


def quantize(y: torch.Tensor, spec: QuantizerSpec) -> torch.Tensor:
    """Map each entry to the nearest grid level.

    Out-of-range entries clamp to the outermost levels; midpoint ties round
    toward +inf (fixed rule for reproducibility).
    """
    spacing = 2.0 / (spec.levels - 1)
    idx = torch.floor((y + 1.0) / spacing + 0.5)
    idx = idx.clamp(0, spec.levels - 1)
    return -1.0 + idx * spacing


def dequantize(z: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
    """Receiver side: subtract the shared dither."""
    if z.shape != u.shape:
        raise ValueError(f"shape mismatch: z {tuple(z.shape)} vs u {tuple(u.shape)}")
    return z - u


def soft_quantize(
    y: torch.Tensor, spec: QuantizerSpec, temperature: float = 1.0
) -> torch.Tensor:
    """Differentiable surrogate: grid levels weighted by a distance softmax.

    Converges pointwise to the hard quantizer (off tie points) as the
    temperature goes to 0.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    g = torch.as_tensor(grid(spec.levels), dtype=y.dtype, device=y.device)
    d2 = (y.unsqueeze(-1) - g) ** 2
    w = torch.softmax(-d2 / temperature, dim=-1)
    return (w * g).sum(dim=-1)


def ste_quantize(
    y: torch.Tensor, spec: QuantizerSpec, temperature: float = 1.0
) -> torch.Tensor:
    """Hard values on the forward pass, soft gradients on the backward pass."""
    soft = soft_quantize(y, spec, temperature)
    return soft + (quantize(y, spec) - soft).detach()
