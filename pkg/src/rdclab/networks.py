"""Encoder, decoder, critic, and classifier for 28x28 grayscale inputs.

Parameter fingerprints hash every parameter and buffer, so freezing the
encoder in universal mode can be proven bit-exactly.
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn

from .datamodel import QuantizerSpec

__all__ = [
    "build_encoder",
    "build_decoder",
    "build_critic",
    "build_classifier",
    "fingerprint",
    "save_checkpoint",
    "load_checkpoint",
]

IMAGE_SHAPE = (1, 28, 28)
LEAKY_SLOPE = 0.2


def build_encoder(
    spec: QuantizerSpec, widths: tuple[int, ...] = (512, 256, 128, 64)
) -> nn.Sequential:
    """x in [0,1]^{28x28} -> f(x) in [-1,1]^dim.

    Flatten, four affine+batchnorm+leaky-ReLU blocks, then an
    affine+batchnorm+tanh head of size dim.
    """
    if len(widths) != 4:
        raise ValueError("encoder expects 4 hidden widths")
    layers: list[nn.Module] = [nn.Flatten()]
    prev = IMAGE_SHAPE[1] * IMAGE_SHAPE[2]
    for w in widths:
        layers += [nn.Linear(prev, w), nn.BatchNorm1d(w), nn.LeakyReLU(LEAKY_SLOPE)]
        prev = w
    layers += [nn.Linear(prev, spec.dim), nn.BatchNorm1d(spec.dim), nn.Tanh()]
    return nn.Sequential(*layers)


def build_decoder(
    spec: QuantizerSpec, widths: tuple[int, int] = (64, 128)
) -> nn.Sequential:
    """z - u in R^dim -> xhat in [0,1]^{28x28}.

    Two affine+batchnorm+leaky-ReLU blocks, unflatten to a (widths[1], 1, 1)
    spatial tensor, two transposed-conv+batchnorm+leaky-ReLU blocks
    (1 -> 7 -> 14), then a final transposed conv + sigmoid reaching 28x28.
    """
    w1, w2 = widths
    return nn.Sequential(
        nn.Linear(spec.dim, w1),
        nn.BatchNorm1d(w1),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Linear(w1, w2),
        nn.BatchNorm1d(w2),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Unflatten(1, (w2, 1, 1)),
        nn.ConvTranspose2d(w2, 64, kernel_size=7),
        nn.BatchNorm2d(64),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.ConvTranspose2d(64, 32, kernel_size=4, stride=2, padding=1),
        nn.BatchNorm2d(32),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.ConvTranspose2d(32, 1, kernel_size=4, stride=2, padding=1),
        nn.BatchNorm2d(1),
        nn.Sigmoid(),
    )


class _ScalarHead(nn.Module):
    """Flatten conv features and squeeze the final affine output to (batch,)."""

    def __init__(self, in_features: int):
        super().__init__()
        self.linear = nn.Linear(in_features, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.linear(torch.flatten(x, 1)).squeeze(-1)


def build_critic(channels: tuple[int, int, int] = (32, 64, 128)) -> nn.Sequential:
    """image -> scalar score; no normalization layers anywhere.

    Normalization would couple samples within a batch and invalidate the
    per-sample gradient penalty.
    """
    c1, c2, c3 = channels
    return nn.Sequential(
        nn.Conv2d(1, c1, kernel_size=4, stride=2, padding=1),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Conv2d(c1, c2, kernel_size=4, stride=2, padding=1),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Conv2d(c2, c3, kernel_size=4, stride=2, padding=1),
        nn.LeakyReLU(LEAKY_SLOPE),
        _ScalarHead(c3 * 3 * 3),
    )


def build_classifier(hidden: int = 50) -> nn.Sequential:
    """image -> probability vector over 10 classes."""
    return nn.Sequential(
        nn.Conv2d(1, 10, kernel_size=5),
        nn.ReLU(),
        nn.MaxPool2d(2),
        nn.Conv2d(10, 10, kernel_size=5),
        nn.ReLU(),
        nn.MaxPool2d(2),
        nn.Flatten(),
        nn.Linear(10 * 4 * 4, hidden),
        nn.ReLU(),
        nn.Linear(hidden, 10),
        nn.Softmax(dim=1),
    )


def fingerprint(module: nn.Module) -> str:
    """SHA-256 over all parameters and buffers in state-dict order."""
    h = hashlib.sha256()
    for key, tensor in sorted(module.state_dict().items()):
        h.update(key.encode())
        h.update(tensor.detach().cpu().numpy().tobytes())
    return h.hexdigest()


def save_checkpoint(
    path, module: nn.Module, *, arch: dict, config_hash: str, seed: int
) -> None:
    torch.save(
        {
            "state_dict": module.state_dict(),
            "arch": arch,
            "fingerprint": fingerprint(module),
            "config_hash": config_hash,
            "seed": seed,
        },
        path,
    )


def load_checkpoint(path, module: nn.Module) -> dict:
    """Load parameters into ``module`` and verify the stored fingerprint."""
    payload = torch.load(path, weights_only=False)
    module.load_state_dict(payload["state_dict"])
    got = fingerprint(module)
    if got != payload["fingerprint"]:
        raise ValueError(
            f"checkpoint fingerprint mismatch at {path}: {got} != {payload['fingerprint']}"
        )
    return payload
