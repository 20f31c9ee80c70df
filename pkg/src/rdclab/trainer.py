"""Training loops: classifier pretraining, end-to-end runs, the
freeze-encoder universal protocol, and sweep orchestration.

Every run is deterministic given its config (content-hashed into run_id),
which makes sweeps resumable: completed run_ids found in the results table
are skipped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn

from . import networks, objectives, quantizer
from .data import Dataset
from .datamodel import (
    CurvePoint,
    Mode,
    Objective,
    OptimSettings,
    QuantizerSpec,
    RunConfig,
    rate_of,
    run_id,
    validate,
)
from .results import ResultsTable

log = logging.getLogger(__name__)

__all__ = [
    "Workspace",
    "SweepPlan",
    "pretrain_classifier",
    "train_end_to_end",
    "train_universal",
    "train_run",
    "run_sweep",
    "CLASSIFIER_ACCURACY_FLOOR",
]

CLASSIFIER_ACCURACY_FLOOR = 0.97
_EVAL_SEED_OFFSET = 7919  # evaluation dither stream independent of training


@dataclass(frozen=True)
class Workspace:
    """Directory layout for checkpoints and the results table."""

    out_dir: Path

    def __post_init__(self):
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        (self.out_dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    def checkpoint(self, rid: str, component: str) -> Path:
        return self.out_dir / "checkpoints" / f"{rid}.{component}.pt"

    @property
    def classifier_path(self) -> Path:
        return self.out_dir / "classifier.pt"

    @property
    def results(self) -> ResultsTable:
        return ResultsTable(self.out_dir / "results.csv")


def _adam(params, opt: OptimSettings) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=opt.lr, betas=(opt.beta1, opt.beta2))


def _batches(n: int, batch_size: int, generator: torch.Generator):
    perm = torch.randperm(n, generator=generator)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def _classifier_nll(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return objectives.ce_loss(labels, probs)


def _shift_augment(
    x: torch.Tensor, gen: torch.Generator, max_shift: int
) -> torch.Tensor:
    """Random per-image circular translations of up to max_shift pixels."""
    n = x.shape[0]
    dx = torch.randint(-max_shift, max_shift + 1, (n,), generator=gen)
    dy = torch.randint(-max_shift, max_shift + 1, (n,), generator=gen)
    out = torch.empty_like(x)
    for i in range(n):
        out[i] = torch.roll(x[i], shifts=(int(dy[i]), int(dx[i])), dims=(1, 2))
    return out


def pretrain_classifier(
    dataset: Dataset,
    workspace: Workspace,
    seed: int = 0,
    epochs: int = 50,
    batch_size: int = 64,
    optim: OptimSettings | None = None,
    accuracy_floor: float = CLASSIFIER_ACCURACY_FLOOR,
    augment_shift: int = 2,
) -> tuple[Path, float]:
    """Train the shared classifier once; abort below the accuracy floor.

    Small random translations during training make the classifier tolerant
    of the reconstruction jitter it is later evaluated on.
    """
    from .datamodel import CLASSIFIER_OPTIM

    torch.manual_seed(seed)
    clf = networks.build_classifier()
    opt = _adam(clf.parameters(), optim or CLASSIFIER_OPTIM)
    gen = torch.Generator().manual_seed(seed)
    for epoch in range(epochs):
        clf.train()
        for idx in _batches(len(dataset.train_x), batch_size, gen):
            x = dataset.train_x[idx]
            if augment_shift > 0:
                x = _shift_augment(x, gen, augment_shift)
            opt.zero_grad()
            loss = _classifier_nll(clf(x), dataset.train_y[idx])
            loss.backward()
            opt.step()
    clf.eval()
    with torch.no_grad():
        preds = clf(dataset.test_x).argmax(dim=1)
        accuracy = (preds == dataset.test_y).float().mean().item()
    if accuracy < accuracy_floor:
        raise RuntimeError(
            f"classifier accuracy {accuracy:.4f} below floor {accuracy_floor}"
        )
    networks.save_checkpoint(
        workspace.classifier_path,
        clf,
        arch={"kind": "classifier", "dataset": dataset.name},
        config_hash=f"classifier-seed{seed}",
        seed=seed,
    )
    log.info("classifier test accuracy %.4f", accuracy)
    return workspace.classifier_path, accuracy


def _load_classifier(workspace: Workspace) -> nn.Module:
    clf = networks.build_classifier()
    networks.load_checkpoint(workspace.classifier_path, clf)
    clf.eval()
    for p in clf.parameters():
        p.requires_grad_(False)
    return clf


def _encode_decode(
    encoder: nn.Module,
    decoder: nn.Module,
    x: torch.Tensor,
    spec: QuantizerSpec,
    temperature: float,
    gen: torch.Generator,
) -> torch.Tensor:
    u = quantizer.sample_dither(spec, gen, batch_size=x.shape[0])
    z = quantizer.ste_quantize(encoder(x) + u, spec, temperature)
    return decoder(quantizer.dequantize(z, u))


@torch.no_grad()
def _evaluate(
    config: RunConfig,
    encoder: nn.Module,
    decoder: nn.Module,
    critic: nn.Module | None,
    classifier: nn.Module,
    dataset: Dataset,
) -> CurvePoint:
    """Held-out metrics on the full test split, dither active."""
    spec = config.quantizer
    encoder.eval(), decoder.eval()
    if critic is not None:
        critic.eval()
    gen = torch.Generator().manual_seed(config.seed + _EVAL_SEED_OFFSET)
    mse_sum = ce_sum = correct = w1_sum = 0.0
    n = len(dataset.test_x)
    for start in range(0, n, 512):
        x = dataset.test_x[start : start + 512]
        y = dataset.test_y[start : start + 512]
        xhat = _encode_decode(encoder, decoder, x, spec, config.temperature, gen)
        mse_sum += ((x - xhat) ** 2).mean(dim=(1, 2, 3)).sum().item()
        probs = classifier(xhat)
        p_true = probs.gather(1, y.view(-1, 1)).squeeze(1)
        ce_sum += (-torch.log(p_true.clamp_min(objectives.PROB_FLOOR))).sum().item()
        correct += (probs.argmax(dim=1) == y).float().sum().item()
        if critic is not None:
            w1_sum += (critic(x) - critic(xhat)).sum().item()
    return CurvePoint(
        run_id=run_id(config),
        mode=config.mode,
        objective=config.objective,
        dim=spec.dim,
        levels=spec.levels,
        rate=rate_of(spec),
        lambda_c=config.tradeoff.lambda_c,
        lambda_p=config.tradeoff.lambda_p,
        mse=mse_sum / n,
        ce=ce_sum / n,
        accuracy=correct / n,
        w1_proxy=(w1_sum / n) if critic is not None else math.nan,
        seed=config.seed,
    )


def _resolve_encoder_source(config: RunConfig, workspace: Workspace) -> Path:
    src = config.encoder_source
    path = Path(src)
    if not path.exists():
        path = workspace.checkpoint(src, "encoder")
    if not path.exists():
        raise FileNotFoundError(f"encoder_source {src!r} resolves to no checkpoint")
    return path


def _check_nonfinite(loss: torch.Tensor, epoch: int, step: int, what: str):
    if not torch.isfinite(loss):
        raise RuntimeError(f"non-finite {what} loss at epoch {epoch} step {step}")


def train_run(
    config: RunConfig, dataset: Dataset, workspace: Workspace
) -> CurvePoint:
    """Train one run (either mode) and persist checkpoints + curve point."""
    problems = validate(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    spec = config.quantizer
    rid = run_id(config)
    torch.manual_seed(config.seed)

    encoder = networks.build_encoder(spec)
    decoder = networks.build_decoder(spec)
    uses_critic = config.objective is Objective.RDP
    critic = networks.build_critic() if uses_critic else None

    frozen_fingerprint = None
    if config.mode is Mode.UNIVERSAL:
        src_path = _resolve_encoder_source(config, workspace)
        arch = torch.load(src_path, weights_only=False)["arch"]
        if (arch.get("dim"), arch.get("levels")) != (spec.dim, spec.levels):
            raise ValueError(
                f"encoder_source quantizer {arch.get('dim')}x{arch.get('levels')} "
                f"does not match config {spec.dim}x{spec.levels}"
            )
        networks.load_checkpoint(src_path, encoder)
        encoder.eval()
        for p in encoder.parameters():
            p.requires_grad_(False)
        frozen_fingerprint = networks.fingerprint(encoder)
        if uses_critic and config.critic_init.value == "from_source":
            src_critic = workspace.checkpoint(Path(src_path).name.split(".")[0], "critic")
            if src_critic.exists():
                networks.load_checkpoint(src_critic, critic)

    # The classifier is always loaded for evaluation; training only uses it
    # when the CE term is active.
    classifier = _load_classifier(workspace)

    groups = [
        {
            "params": decoder.parameters(),
            "lr": config.decoder_optim.lr,
            "betas": (config.decoder_optim.beta1, config.decoder_optim.beta2),
        }
    ]
    if config.mode is Mode.END_TO_END:
        groups.append(
            {
                "params": encoder.parameters(),
                "lr": config.encoder_optim.lr,
                "betas": (config.encoder_optim.beta1, config.encoder_optim.beta2),
            }
        )
    gen_opt = torch.optim.Adam(groups)
    critic_opt = _adam(critic.parameters(), config.critic_optim) if uses_critic else None

    gen = torch.Generator().manual_seed(config.seed)
    n = len(dataset.train_x)
    for epoch in range(config.epochs):
        decoder.train()
        if config.mode is Mode.END_TO_END:
            encoder.train()
        if critic is not None:
            critic.train()
        for step, idx in enumerate(_batches(n, config.batch_size, gen)):
            x = dataset.train_x[idx]
            y = dataset.train_y[idx]
            if uses_critic:
                with torch.no_grad():
                    fake = _encode_decode(
                        encoder, decoder, x, spec, config.temperature, gen
                    )
                critic_opt.zero_grad()
                c_loss = objectives.critic_loss(
                    critic, x, fake, config.lambda_gp, gen
                )
                _check_nonfinite(c_loss, epoch, step, "critic")
                c_loss.backward()
                critic_opt.step()
                if (step + 1) % config.critic_steps != 0:
                    continue
            gen_opt.zero_grad()
            xhat = _encode_decode(encoder, decoder, x, spec, config.temperature, gen)
            probs = classifier(xhat) if config.tradeoff.lambda_c > 0 else None
            fake_scores = critic(xhat) if (critic is not None and config.tradeoff.lambda_p > 0) else None
            breakdown = objectives.composite_loss(
                config.objective,
                config.mode,
                x,
                xhat,
                config.tradeoff,
                labels=y,
                probs=probs,
                fake_scores=fake_scores,
            )
            _check_nonfinite(breakdown.total, epoch, step, "generator")
            breakdown.total.backward()
            gen_opt.step()
        if frozen_fingerprint is not None:
            now = networks.fingerprint(encoder)
            if now != frozen_fingerprint:
                raise RuntimeError(
                    f"frozen encoder drifted at epoch {epoch}: {now} != {frozen_fingerprint}"
                )

    arch = {"dim": spec.dim, "levels": spec.levels}
    networks.save_checkpoint(
        workspace.checkpoint(rid, "encoder"), encoder,
        arch={**arch, "kind": "encoder"}, config_hash=rid, seed=config.seed,
    )
    networks.save_checkpoint(
        workspace.checkpoint(rid, "decoder"), decoder,
        arch={**arch, "kind": "decoder"}, config_hash=rid, seed=config.seed,
    )
    if critic is not None:
        networks.save_checkpoint(
            workspace.checkpoint(rid, "critic"), critic,
            arch={**arch, "kind": "critic"}, config_hash=rid, seed=config.seed,
        )
    point = _evaluate(config, encoder, decoder, critic, classifier, dataset)
    if frozen_fingerprint is not None:
        final = networks.fingerprint(encoder)
        if final != frozen_fingerprint:
            raise RuntimeError("frozen encoder drifted during evaluation")
    return point


def train_end_to_end(
    config: RunConfig, dataset: Dataset, workspace: Workspace
) -> CurvePoint:
    if config.mode is not Mode.END_TO_END:
        raise ValueError("config.mode must be end_to_end")
    return train_run(config, dataset, workspace)


def train_universal(
    config: RunConfig, dataset: Dataset, workspace: Workspace
) -> CurvePoint:
    if config.mode is not Mode.UNIVERSAL:
        raise ValueError("config.mode must be universal")
    return train_run(config, dataset, workspace)


@dataclass(frozen=True)
class SweepPlan:
    """Ordered runs sharing one dataset and classifier checkpoint.

    Universal entries must reference encoder checkpoints given explicitly or
    produced by earlier entries in the same plan.
    """

    configs: tuple[RunConfig, ...]
    group_key: str = "rate"  # or "lambda"


def run_sweep(
    plan: SweepPlan,
    dataset: Dataset,
    workspace: Workspace,
    resume: bool = True,
) -> list[CurvePoint]:
    """Execute a plan, skipping completed run_ids; failures are recorded and
    the sweep continues."""
    table = workspace.results
    done = {p.run_id: p for p in table.load()} if resume else {}
    points: list[CurvePoint] = []
    for config in plan.configs:
        rid = run_id(config)
        if rid in done:
            points.append(done[rid])
            continue
        try:
            point = train_run(config, dataset, workspace)
        except Exception:
            log.exception("run %s failed; continuing sweep", rid)
            continue
        table.append(point)
        points.append(point)
    return points
