"""Domain types, configuration schema, and result records.

Configs and results are exchanged as flat ``key = value`` text so sweep
recipes stay diffable and hashable. Run identifiers are content hashes of
the canonical serialization, which makes sweeps resumable.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "QuantizerSpec",
    "TradeoffParams",
    "Mode",
    "Objective",
    "CriticInit",
    "OptimSettings",
    "RunConfig",
    "CurvePoint",
    "DiscreteSource",
    "ConstraintRegion",
    "rate_of",
    "validate",
    "run_id",
    "dump_kv",
    "parse_kv",
    "config_to_kv",
    "config_from_kv",
]


class Mode(str, Enum):
    END_TO_END = "end_to_end"
    UNIVERSAL = "universal"


class Objective(str, Enum):
    RDC = "rdc"
    RDP = "rdp"


class CriticInit(str, Enum):
    RANDOM = "random"
    FROM_SOURCE = "from_source"


@dataclass(frozen=True)
class QuantizerSpec:
    """Representation dimensionality and per-dimension level count."""

    dim: int
    levels: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")

    @property
    def rate(self) -> float:
        return rate_of(self)


def rate_of(spec: QuantizerSpec) -> float:
    """Rate in bits: dim * log2(levels)."""
    return spec.dim * math.log2(spec.levels)


@dataclass(frozen=True)
class TradeoffParams:
    """Weights on the classification (CE) and perception (W1) terms.

    A single run trains against one auxiliary objective, so at most one of
    the two weights may be nonzero.
    """

    lambda_c: float = 0.0
    lambda_p: float = 0.0

    def __post_init__(self):
        if self.lambda_c < 0 or self.lambda_p < 0:
            raise ValueError("tradeoff weights must be nonnegative")


@dataclass(frozen=True)
class OptimSettings:
    """Adaptive-moment optimizer settings for one network component."""

    lr: float
    beta1: float
    beta2: float


# Hyperparameter defaults for each component (constant learning rates).
ENCODER_OPTIM = OptimSettings(1e-2, 0.5, 0.9)
DECODER_OPTIM = OptimSettings(1e-2, 0.5, 0.9)
CRITIC_OPTIM = OptimSettings(2e-4, 0.5, 0.9)
CLASSIFIER_OPTIM = OptimSettings(1e-3, 0.9, 0.999)


@dataclass(frozen=True)
class RunConfig:
    """Complete recipe for one training run."""

    mode: Mode
    objective: Objective
    quantizer: QuantizerSpec
    tradeoff: TradeoffParams
    seed: int = 0
    epochs: int = 40
    batch_size: int = 128
    encoder_optim: OptimSettings = ENCODER_OPTIM
    decoder_optim: OptimSettings = DECODER_OPTIM
    critic_optim: OptimSettings = CRITIC_OPTIM
    classifier_optim: OptimSettings = CLASSIFIER_OPTIM
    lambda_gp: float = 10.0
    critic_steps: int = 5
    temperature: float = 1.0
    encoder_source: Optional[str] = None
    critic_init: CriticInit = CriticInit.RANDOM


def validate(config: RunConfig) -> list[str]:
    """Return a list of invariant violations (empty iff config is valid)."""
    violations = []
    if config.epochs < 1:
        violations.append("epochs: must be a positive integer")
    if config.batch_size < 1:
        violations.append("batch_size: must be a positive integer")
    if config.critic_steps < 1:
        violations.append("critic_steps: must be a positive integer")
    if config.temperature <= 0:
        violations.append("temperature: must be positive")
    if config.lambda_gp < 0:
        violations.append("lambda_gp: must be nonnegative")
    t = config.tradeoff
    if t.lambda_c > 0 and t.lambda_p > 0:
        violations.append("tradeoff: exactly one tradeoff weight may be nonzero")
    if config.objective is Objective.RDC and t.lambda_p > 0:
        violations.append("tradeoff: rdc objective requires lambda_p = 0")
    if config.objective is Objective.RDP and t.lambda_c > 0:
        violations.append("tradeoff: rdp objective requires lambda_c = 0")
    if config.mode is Mode.UNIVERSAL and not config.encoder_source:
        violations.append("encoder_source: required when mode = universal")
    if config.mode is Mode.END_TO_END and config.encoder_source:
        violations.append("encoder_source: only allowed when mode = universal")
    for comp in ("encoder", "decoder", "critic", "classifier"):
        opt: OptimSettings = getattr(config, f"{comp}_optim")
        if opt.lr <= 0:
            violations.append(f"{comp}_optim.lr: must be positive")
        if not (0 <= opt.beta1 < 1 and 0 <= opt.beta2 < 1):
            violations.append(f"{comp}_optim.betas: must lie in [0, 1)")
    return violations


# ---------------------------------------------------------------------------
# Flat key = value serialization


def dump_kv(pairs: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs.items())


def parse_kv(text: str) -> dict[str, str]:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    return pairs


def _fmt_float(x: float) -> str:
    return repr(float(x))


def config_to_kv(config: RunConfig) -> dict[str, str]:
    """Canonical flat representation; field order is fixed by the schema."""
    kv = {
        "mode": config.mode.value,
        "objective": config.objective.value,
        "dim": str(config.quantizer.dim),
        "levels": str(config.quantizer.levels),
        "lambda_c": _fmt_float(config.tradeoff.lambda_c),
        "lambda_p": _fmt_float(config.tradeoff.lambda_p),
        "seed": str(config.seed),
        "epochs": str(config.epochs),
        "batch_size": str(config.batch_size),
    }
    for comp in ("encoder", "decoder", "critic", "classifier"):
        opt: OptimSettings = getattr(config, f"{comp}_optim")
        kv[f"{comp}_lr"] = _fmt_float(opt.lr)
        kv[f"{comp}_beta1"] = _fmt_float(opt.beta1)
        kv[f"{comp}_beta2"] = _fmt_float(opt.beta2)
    kv["lambda_gp"] = _fmt_float(config.lambda_gp)
    kv["critic_steps"] = str(config.critic_steps)
    kv["temperature"] = _fmt_float(config.temperature)
    if config.encoder_source is not None:
        kv["encoder_source"] = config.encoder_source
    kv["critic_init"] = config.critic_init.value
    return kv


def config_from_kv(kv: dict[str, str]) -> RunConfig:
    def opt(comp: str, default: OptimSettings) -> OptimSettings:
        return OptimSettings(
            lr=float(kv.get(f"{comp}_lr", default.lr)),
            beta1=float(kv.get(f"{comp}_beta1", default.beta1)),
            beta2=float(kv.get(f"{comp}_beta2", default.beta2)),
        )

    return RunConfig(
        mode=Mode(kv["mode"]),
        objective=Objective(kv["objective"]),
        quantizer=QuantizerSpec(dim=int(kv["dim"]), levels=int(kv["levels"])),
        tradeoff=TradeoffParams(
            lambda_c=float(kv.get("lambda_c", 0.0)),
            lambda_p=float(kv.get("lambda_p", 0.0)),
        ),
        seed=int(kv.get("seed", 0)),
        epochs=int(kv.get("epochs", 40)),
        batch_size=int(kv.get("batch_size", 128)),
        encoder_optim=opt("encoder", ENCODER_OPTIM),
        decoder_optim=opt("decoder", DECODER_OPTIM),
        critic_optim=opt("critic", CRITIC_OPTIM),
        classifier_optim=opt("classifier", CLASSIFIER_OPTIM),
        lambda_gp=float(kv.get("lambda_gp", 10.0)),
        critic_steps=int(kv.get("critic_steps", 5)),
        temperature=float(kv.get("temperature", 1.0)),
        encoder_source=kv.get("encoder_source"),
        critic_init=CriticInit(kv.get("critic_init", "random")),
    )


def run_id(config: RunConfig) -> str:
    """Content hash of the canonical serialization (16 hex chars)."""
    canon = dump_kv(config_to_kv(config))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Result records


@dataclass(frozen=True)
class CurvePoint:
    """One evaluated operating point on a tradeoff curve.

    ``ce`` is in nats; ``w1_proxy`` is the trained critic's duality-gap
    estimate (NaN when the run trained no critic).
    """

    run_id: str
    mode: Mode
    objective: Objective
    dim: int
    levels: int
    rate: float
    lambda_c: float
    lambda_p: float
    mse: float
    ce: float
    accuracy: float
    w1_proxy: float
    seed: int

    def __post_init__(self):
        if self.mse < 0:
            raise ValueError("mse must be nonnegative")
        if self.ce < 0:
            raise ValueError("ce must be nonnegative")
        if not (0 <= self.accuracy <= 1):
            raise ValueError("accuracy must lie in [0, 1]")

    def to_kv(self) -> dict[str, str]:
        return {
            "run_id": self.run_id,
            "mode": self.mode.value,
            "objective": self.objective.value,
            "dim": str(self.dim),
            "levels": str(self.levels),
            "rate": _fmt_float(self.rate),
            "lambda_c": _fmt_float(self.lambda_c),
            "lambda_p": _fmt_float(self.lambda_p),
            "mse": _fmt_float(self.mse),
            "ce": _fmt_float(self.ce),
            "accuracy": _fmt_float(self.accuracy),
            "w1_proxy": _fmt_float(self.w1_proxy),
            "seed": str(self.seed),
        }

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "CurvePoint":
        return cls(
            run_id=kv["run_id"],
            mode=Mode(kv["mode"]),
            objective=Objective(kv["objective"]),
            dim=int(kv["dim"]),
            levels=int(kv["levels"]),
            rate=float(kv["rate"]),
            lambda_c=float(kv["lambda_c"]),
            lambda_p=float(kv["lambda_p"]),
            mse=float(kv["mse"]),
            ce=float(kv["ce"]),
            accuracy=float(kv["accuracy"]),
            w1_proxy=float(kv["w1_proxy"]),
            seed=int(kv["seed"]),
        )


# ---------------------------------------------------------------------------
# Finite-alphabet sources for the exact oracle

_STOCHASTIC_ATOL = 1e-12


@dataclass(frozen=True)
class DiscreteSource:
    """Finite-alphabet source with labels and a distortion matrix.

    px: source marginal, length nx.
    label_channels: K row-stochastic matrices p(s_k | x), each nx x |S_k|.
    delta: nx x nxhat matrix of nonnegative distortions.
    """

    px: np.ndarray
    label_channels: tuple[np.ndarray, ...]
    delta: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.px, dtype=float)
        delta = np.asarray(self.delta, dtype=float)
        chans = tuple(np.asarray(c, dtype=float) for c in self.label_channels)
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "label_channels", chans)
        if px.ndim != 1 or abs(px.sum() - 1.0) > _STOCHASTIC_ATOL or (px < 0).any():
            raise ValueError("px must be a probability vector summing to 1")
        if delta.ndim != 2 or delta.shape[0] != px.size or (delta < 0).any():
            raise ValueError("delta must be a nonnegative nx x nxhat matrix")
        for k, chan in enumerate(chans):
            if chan.shape[0] != px.size or (chan < 0).any():
                raise ValueError(f"label channel {k}: shape/positivity mismatch")
            if np.abs(chan.sum(axis=1) - 1.0).max() > _STOCHASTIC_ATOL:
                raise ValueError(f"label channel {k}: rows must sum to 1")

    @property
    def nx(self) -> int:
        return self.px.size

    @property
    def nxhat(self) -> int:
        return self.delta.shape[1]

    @property
    def n_labels(self) -> int:
        return len(self.label_channels)


@dataclass(frozen=True)
class ConstraintRegion:
    """Finite set of (D, P, C-vector) constraint triples.

    +inf entries disable the corresponding constraint.
    """

    points: tuple[tuple[float, float, tuple[float, ...]], ...]

    def __post_init__(self):
        pts = tuple(
            (float(d), float(p), tuple(float(c) for c in cs))
            for d, p, cs in self.points
        )
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("constraint region must be nonempty")
        for d, p, cs in pts:
            if d < 0 or p < 0 or any(c < 0 for c in cs):
                raise ValueError("finite constraint entries must be nonnegative")
