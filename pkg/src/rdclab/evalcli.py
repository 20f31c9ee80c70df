"""Figure emission and reconstruction grids for sweep results."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch
from PIL import Image

from . import networks, quantizer
from .data import Dataset
from .datamodel import CurvePoint, Mode, QuantizerSpec

__all__ = ["plot_tradeoff", "dump_reconstructions", "AXES", "GROUPERS"]

AXES = {"mse", "ce", "accuracy", "w1_proxy"}
GROUPERS = {"rate", "mode"}


def plot_tradeoff(
    results: list[CurvePoint],
    x_axis: str,
    y_axis: str,
    group_by: str,
    out: Path | str,
) -> Path:
    """Scatter/line chart of curve points, one color per group.

    End-to-end points carry black outlines so they stand apart from
    universal points in mixed plots.
    """
    if x_axis not in AXES or y_axis not in AXES:
        raise ValueError(f"axes must be in {sorted(AXES)}")
    if group_by not in GROUPERS:
        raise ValueError(f"group_by must be in {sorted(GROUPERS)}")
    out = Path(out)
    keyfn = (lambda p: f"R={p.rate:.2f}") if group_by == "rate" else (lambda p: p.mode.value)
    groups: dict[str, list[CurvePoint]] = {}
    for p in results:
        groups.setdefault(keyfn(p), []).append(p)

    fig, ax = plt.subplots(figsize=(5, 4))
    for label, pts in sorted(groups.items()):
        pts = sorted(pts, key=lambda p: getattr(p, x_axis))
        xs = [getattr(p, x_axis) for p in pts]
        ys = [getattr(p, y_axis) for p in pts]
        edges = ["black" if p.mode is Mode.END_TO_END else "none" for p in pts]
        (line,) = ax.plot(xs, ys, alpha=0.6, label=label)
        ax.scatter(xs, ys, color=line.get_color(), edgecolors=edges, linewidths=1.2, zorder=3)
    ax.set_xlabel(x_axis)
    ax.set_ylabel(y_axis)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def dump_reconstructions(
    encoder_ckpt: Path | str,
    decoder_ckpt: Path | str,
    dataset: Dataset,
    n_images: int,
    out: Path | str,
    seed: int = 0,
) -> Path:
    """Write a 2 x n grid PNG: originals on top, reconstructions below.

    Dither is active; the seed is the only source of randomness, so repeated
    calls are byte-identical.
    """
    enc_meta = torch.load(Path(encoder_ckpt), weights_only=False)["arch"]
    dec_meta = torch.load(Path(decoder_ckpt), weights_only=False)["arch"]
    if (enc_meta["dim"], enc_meta["levels"]) != (dec_meta["dim"], dec_meta["levels"]):
        raise ValueError("encoder/decoder checkpoint quantizer specs differ")
    spec = QuantizerSpec(dim=enc_meta["dim"], levels=enc_meta["levels"])
    encoder = networks.build_encoder(spec)
    decoder = networks.build_decoder(spec)
    networks.load_checkpoint(encoder_ckpt, encoder)
    networks.load_checkpoint(decoder_ckpt, decoder)
    encoder.eval(), decoder.eval()

    gen = torch.Generator().manual_seed(seed)
    idx = torch.randperm(len(dataset.test_x), generator=gen)[:n_images]
    x = dataset.test_x[idx]
    with torch.no_grad():
        u = quantizer.sample_dither(spec, gen, batch_size=n_images)
        z = quantizer.quantize(encoder(x) + u, spec)
        xhat = decoder(quantizer.dequantize(z, u))

    def strip(batch: torch.Tensor) -> np.ndarray:
        imgs = (batch.squeeze(1).numpy() * 255).clip(0, 255).astype(np.uint8)
        return np.concatenate(list(imgs), axis=1)

    canvas = np.concatenate([strip(x), strip(xhat)], axis=0)
    out = Path(out)
    Image.fromarray(canvas, mode="L").save(out, format="PNG")
    return out
