"""Distortion, classification, and perception loss terms and their composites.

The composite generator loss is MSE + lambda_c * CE + lambda_p * W1-term,
with at most one of the two auxiliary terms active per run. The critic trains
against the Wasserstein dual objective with a gradient penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .datamodel import Mode, Objective, TradeoffParams

__all__ = [
    "LossBreakdown",
    "distortion",
    "ce_loss",
    "critic_loss",
    "w1_proxy",
    "composite_loss",
]

PROB_FLOOR = 1e-12


@dataclass
class LossBreakdown:
    total: torch.Tensor
    mse: torch.Tensor
    ce: torch.Tensor
    w1_term: torch.Tensor
    lambda_c: float
    lambda_p: float


def distortion(x: torch.Tensor, xhat: torch.Tensor) -> torch.Tensor:
    """Mean over batch and pixels of (x - xhat)^2."""
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(xhat.shape)}")
    return ((x - xhat) ** 2).mean()


def ce_loss(true_labels: torch.Tensor, probs: torch.Tensor) -> torch.Tensor:
    """Mean of -log p[true label], in nats.

    Probabilities at the true label are floored at 1e-12; a warning-worthy
    floor hit means the classifier assigned (numerically) zero mass.
    """
    p = probs.gather(1, true_labels.view(-1, 1)).squeeze(1)
    return -torch.log(p.clamp_min(PROB_FLOOR)).mean()


def critic_loss(
    critic: torch.nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor,
    lambda_gp: float,
    generator: torch.Generator,
) -> torch.Tensor:
    """Wasserstein dual loss with gradient penalty.

    mean score(fake) - mean score(real)
    + lambda_gp * mean ( ||grad score(x~)||_2 - 1 )^2,
    with x~ = eps*real + (1-eps)*fake, eps ~ U[0,1] per sample.
    """
    if real.shape != fake.shape:
        raise ValueError("real/fake batch shapes must match")
    eps = torch.rand(
        (real.shape[0],) + (1,) * (real.dim() - 1),
        generator=generator,
        dtype=real.dtype,
    )
    interp = (eps * real + (1 - eps) * fake.detach()).requires_grad_(True)
    scores = critic(interp)
    grads = torch.autograd.grad(
        scores.sum(), interp, create_graph=True, retain_graph=True
    )[0]
    norms = grads.flatten(1).norm(dim=1)
    penalty = ((norms - 1) ** 2).mean()
    return critic(fake.detach()).mean() - critic(real).mean() + lambda_gp * penalty


def w1_proxy(
    critic: torch.nn.Module, real: torch.Tensor, fake: torch.Tensor
) -> torch.Tensor:
    """Duality-gap estimate: mean score(real) - mean score(fake)."""
    return critic(real).mean() - critic(fake).mean()


def composite_loss(
    objective: Objective,
    mode: Mode,
    x: torch.Tensor,
    xhat: torch.Tensor,
    tradeoff: TradeoffParams,
    labels: torch.Tensor | None = None,
    probs: torch.Tensor | None = None,
    fake_scores: torch.Tensor | None = None,
) -> LossBreakdown:
    """Generator-side loss: MSE plus the single active auxiliary term.

    For RDP the perception term is the negated mean fake critic score (the
    real-batch mean is constant w.r.t. the generator). Universal mode uses
    the same functional form with its own lambda values.
    """
    if objective is Objective.RDC and tradeoff.lambda_p != 0:
        raise ValueError("rdc objective requires lambda_p = 0")
    if objective is Objective.RDP and tradeoff.lambda_c != 0:
        raise ValueError("rdp objective requires lambda_c = 0")

    mse = distortion(x, xhat)
    zero = torch.zeros((), dtype=mse.dtype)
    ce = zero
    w1_term = zero
    if tradeoff.lambda_c > 0:
        if labels is None or probs is None:
            raise ValueError("rdc loss with lambda_c > 0 needs labels and probs")
        ce = ce_loss(labels, probs)
    if tradeoff.lambda_p > 0:
        if fake_scores is None:
            raise ValueError("rdp loss with lambda_p > 0 needs critic fake scores")
        w1_term = -fake_scores.mean()
    total = mse + tradeoff.lambda_c * ce + tradeoff.lambda_p * w1_term
    return LossBreakdown(
        total=total,
        mse=mse,
        ce=ce,
        w1_term=w1_term,
        lambda_c=tradeoff.lambda_c,
        lambda_p=tradeoff.lambda_p,
    )
