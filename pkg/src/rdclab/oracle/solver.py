"""Desk-scale solvers for the information-theoretic tradeoff functions.

Computes, on tiny finite-alphabet sources:

* the joint rate-distortion-perception-classification function and its
  RDP / RDC specializations (minimal I(X; Xhat) under the constraints),
* the universal rate over a finite constraint region (one representation
  channel, one decoder per constraint point),
* the rate penalty of going universal.

The feasible sets are generally nonconvex because of the conditional-entropy
constraint, so every solve is multi-start penalized mirror descent, with an
exhaustive channel grid search available as a cross-check on 2-symbol
instances. All rates are in bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from ..datamodel import ConstraintRegion, DiscreteSource
from . import backend

__all__ = [
    "SolveOptions",
    "RdpcSolution",
    "UniversalSolution",
    "mutual_information",
    "constraint_values",
    "solve_rdpc",
    "solve_rdp",
    "solve_rdc",
    "solve_rdc_grid",
    "brute_force_rdpc",
    "universal_rate",
    "rate_penalty",
]

INF = math.inf
FEAS_TOL = 1e-7
WITNESS_TOL = 1e-6


@dataclass(frozen=True)
class SolveOptions:
    n_starts: int = 32
    seed: int = 0
    rounds: int = 8
    steps: int = 150
    lr0: float = 0.5
    lr_decay: float = 0.7
    mu0: float = 4.0
    mu_growth: float = 3.0
    feas_tol: float = FEAS_TOL


@dataclass(frozen=True)
class RdpcSolution:
    status: str  # "optimal" | "infeasible"
    rate: float  # bits; inf when infeasible
    channel: np.ndarray | None
    min_violation: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


@dataclass(frozen=True)
class UniversalSolution:
    status: str
    rate: float
    encoder_channel: np.ndarray | None
    decoders: tuple[np.ndarray, ...] = ()
    min_violation: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def mutual_information(px: np.ndarray, channel: np.ndarray) -> float:
    """I(X; Xhat) in bits for the joint px(x) * channel(xhat | x)."""
    return float(backend.mutual_information_bits(np.asarray(px, float), channel))


def _labels_cat(source: DiscreteSource) -> tuple[np.ndarray, np.ndarray]:
    if source.n_labels == 0:
        return np.zeros((source.nx, 0)), np.array([0], dtype=np.int64)
    cat = np.concatenate(source.label_channels, axis=1)
    offs = np.cumsum([0] + [c.shape[1] for c in source.label_channels])
    return np.ascontiguousarray(cat), offs.astype(np.int64)


def constraint_values(
    source: DiscreteSource, channel: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """(E[distortion], TV(p_X, p_Xhat), H(S_k | Xhat) per label) in bits.

    TV is NaN when the reconstruction alphabet differs from the source
    alphabet (the perception constraint is only defined on a shared one).
    """
    cat, offs = _labels_cat(source)
    d, p, c = backend.constraint_values_raw(
        source.px, cat, offs, source.delta, np.asarray(channel, float)
    )
    return float(d), float(p), np.asarray(c)


def _normalize_climits(source: DiscreteSource, C) -> np.ndarray:
    if C is None:
        return np.full(source.n_labels, INF)
    arr = np.atleast_1d(np.asarray(C, dtype=float))
    if np.isinf(arr).all():
        return np.full(source.n_labels, INF)
    if arr.size == 1 and source.n_labels > 1:
        arr = np.full(source.n_labels, float(arr[0]))
    if arr.size != source.n_labels:
        raise ValueError(
            f"expected {source.n_labels} classification limits, got {arr.size}"
        )
    return arr


def _channel_starts(
    nx: int, ny: int, n_random: int, rng: np.random.Generator
) -> list[np.ndarray]:
    starts = []
    ident = np.full((nx, ny), 1e-6)
    for i in range(nx):
        ident[i, min(i, ny - 1)] = 1.0
    starts.append(ident / ident.sum(axis=1, keepdims=True))
    starts.append(np.full((nx, ny), 1.0 / ny))
    for _ in range(max(n_random - 2, 0)):
        starts.append(rng.dirichlet(np.ones(ny), size=nx))
    return starts


def _violation(d, p, c, dlim, plim, clims) -> float:
    v = max(0.0, d - dlim)
    if math.isfinite(plim):
        v += max(0.0, p - plim)
    for ck, lim in zip(np.atleast_1d(c), clims):
        if math.isfinite(lim):
            v += max(0.0, ck - lim)
    return v


def solve_rdpc(
    source: DiscreteSource,
    D: float,
    P: float = INF,
    C=None,
    options: SolveOptions | None = None,
    warm_starts: tuple[np.ndarray, ...] = (),
) -> RdpcSolution:
    """Minimize I(X; Xhat) over channels meeting the (D, P, C) constraints.

    +inf (or None for C) disables a constraint. Returns a feasible witness
    channel, or an infeasible status with the smallest constraint violation
    any start reached.
    """
    opts = options or SolveOptions()
    clims = _normalize_climits(source, C)
    if math.isfinite(P) and source.nx != source.nxhat:
        raise ValueError("perception constraint needs matching alphabets")
    cat, offs = _labels_cat(source)
    rng = np.random.default_rng(opts.seed)
    starts = list(warm_starts) + _channel_starts(
        source.nx, source.nxhat, opts.n_starts - len(warm_starts), rng
    )

    kernel_kw = dict(
        rounds=opts.rounds,
        steps=opts.steps,
        lr0=opts.lr0,
        lr_decay=opts.lr_decay,
        mu0=opts.mu0,
        mu_growth=opts.mu_growth,
        feas_tol=opts.feas_tol,
    )

    best_q, best_rate = None, INF
    min_viol, min_viol_q = INF, None
    for q0 in starts:
        bq, br, mv, mvq = backend.descent_run(
            source.px, source.delta, cat, offs, D, P, clims, q0, **kernel_kw
        )
        if bq is not None and br < best_rate:
            best_q, best_rate = bq, br
        if mv < min_viol:
            min_viol, min_viol_q = mv, mvq

    if best_q is None and min_viol > opts.feas_tol:
        # dedicated feasibility phase before declaring infeasibility
        for q0 in starts[: max(4, len(warm_starts) + 2)]:
            _, _, mv, mvq = backend.descent_run(
                source.px, source.delta, cat, offs, D, P, clims, q0,
                minimize_rate=False, **kernel_kw,
            )
            if mv < min_viol:
                min_viol, min_viol_q = mv, mvq
        if min_viol <= opts.feas_tol:
            bq, br, _, _ = backend.descent_run(
                source.px, source.delta, cat, offs, D, P, clims, min_viol_q,
                **kernel_kw,
            )
            if bq is not None:
                best_q, best_rate = bq, br

    if best_q is None:
        return RdpcSolution("infeasible", INF, None, min_violation=min_viol)

    # polish from the incumbent with a gentler schedule
    bq, br, _, _ = backend.descent_run(
        source.px, source.delta, cat, offs, D, P, clims, best_q,
        rounds=opts.rounds,
        steps=opts.steps,
        lr0=opts.lr0 * 0.2,
        lr_decay=opts.lr_decay,
        mu0=opts.mu0 * opts.mu_growth ** 2,
        mu_growth=opts.mu_growth,
        feas_tol=opts.feas_tol,
    )
    if bq is not None and br < best_rate:
        best_q, best_rate = bq, br

    rate = mutual_information(source.px, best_q)
    return RdpcSolution("optimal", rate, best_q)


def solve_rdp(
    source: DiscreteSource, D: float, P: float, options: SolveOptions | None = None
) -> RdpcSolution:
    """Rate-distortion-perception: classification constraints disabled."""
    return solve_rdpc(source, D, P=P, C=None, options=options)


def solve_rdc(
    source: DiscreteSource, D: float, C, options: SolveOptions | None = None
) -> RdpcSolution:
    """Rate-distortion-classification: perception constraint disabled."""
    return solve_rdpc(source, D, P=INF, C=C, options=options)


def solve_rdc_grid(
    source: DiscreteSource,
    d_grid: np.ndarray,
    c_grid: np.ndarray,
    options: SolveOptions | None = None,
) -> np.ndarray:
    """R(D, C) over a grid, sweeping with warm starts from looser cells.

    A witness feasible at (D, C) stays feasible at any (D' >= D, C' >= C),
    and every start is itself evaluated by the kernel, so the returned
    surface is non-increasing along both axes by construction whenever the
    tighter cell was solved.
    """
    opts = options or SolveOptions()
    d_grid = np.asarray(d_grid, float)
    c_grid = np.asarray(c_grid, float)
    rates = np.full((d_grid.size, c_grid.size), INF)
    witnesses: dict[tuple[int, int], np.ndarray] = {}
    for i, d in enumerate(d_grid):
        for j, c in enumerate(c_grid):
            warm = []
            if (i - 1, j) in witnesses:
                warm.append(witnesses[(i - 1, j)])
            if (i, j - 1) in witnesses:
                warm.append(witnesses[(i, j - 1)])
            sol = solve_rdc(
                source, d, c, options=replace(opts, seed=opts.seed + 101 * i + j)
            ) if not warm else solve_rdpc(
                source, d, P=INF, C=c,
                options=replace(opts, seed=opts.seed + 101 * i + j),
                warm_starts=tuple(warm),
            )
            if sol.feasible:
                rates[i, j] = sol.rate
                witnesses[(i, j)] = sol.channel
    return rates


# ---------------------------------------------------------------------------
# Brute force cross-check


def _simplex_grid(dim: int, step: float) -> np.ndarray:
    n = round(1.0 / step)
    points = []
    for combo in itertools.product(range(n + 1), repeat=dim - 1):
        if sum(combo) <= n:
            row = [c / n for c in combo]
            points.append(row + [1.0 - sum(row)])
    return np.array(points)


def brute_force_rdpc(
    source: DiscreteSource, D: float, P: float = INF, C=None, step: float = 0.02
) -> RdpcSolution:
    """Exhaustive search over channels with rows on a discretized simplex.

    Only intended for alphabet sizes <= 3; complexity is exponential in the
    number of source symbols.
    """
    clims = _normalize_climits(source, C)
    rows = _simplex_grid(source.nxhat, step)
    best_rate, best_q = INF, None
    min_viol = INF
    for combo in itertools.product(range(len(rows)), repeat=source.nx):
        Q = rows[list(combo)]
        d, p, c = constraint_values(source, Q)
        v = _violation(d, p, c, D, P, clims)
        min_viol = min(min_viol, v)
        if v <= 1e-9:
            rate = mutual_information(source.px, Q)
            if rate < best_rate:
                best_rate, best_q = rate, Q
    if best_q is None:
        return RdpcSolution("infeasible", INF, None, min_violation=min_viol)
    return RdpcSolution("optimal", best_rate, best_q)


# ---------------------------------------------------------------------------
# Universal representations


def _effective_decoder_problem(source: DiscreteSource, pzx: np.ndarray):
    """Collapse the fixed representation channel into an effective source.

    With p(z|x) fixed, every constraint is a function of the decoder through
    the posterior p(x|z): distortion and labels average over it, and the
    reconstruction marginal is pz @ decoder.
    """
    pz = source.px @ pzx
    pz_safe = np.maximum(pz, 1e-15)
    post = (source.px[:, None] * pzx).T / pz_safe[:, None]  # p(x | z)
    delta_eff = post @ source.delta
    labels_eff = tuple(post @ chan for chan in source.label_channels)
    return pz, delta_eff, labels_eff


def _decoder_feasibility(
    source: DiscreteSource,
    pzx: np.ndarray,
    point,
    dec0: np.ndarray,
    rounds: int,
    steps: int,
    feas_tol: float,
) -> tuple[np.ndarray, float]:
    """Refine one decoder toward the constraint point; returns (decoder, viol)."""
    dlim, plim, clims = point
    pz, delta_eff, labels_eff = _effective_decoder_problem(source, pzx)
    if labels_eff:
        cat = np.ascontiguousarray(np.concatenate(labels_eff, axis=1))
        offs = np.cumsum([0] + [c.shape[1] for c in labels_eff]).astype(np.int64)
    else:
        cat = np.zeros((pz.size, 0))
        offs = np.array([0], dtype=np.int64)
    _, _, mv, mvq = backend.descent_run(
        pz, delta_eff, cat, offs, dlim, plim, np.asarray(clims, float), dec0,
        rounds=rounds, steps=steps, lr0=0.5, lr_decay=0.8, mu0=1.0,
        mu_growth=2.0, feas_tol=feas_tol, minimize_rate=False,
        tv_ref=source.px if math.isfinite(plim) else None,
    )
    return mvq, mv


def _region_points(
    source: DiscreteSource, region: ConstraintRegion
) -> list[tuple[float, float, np.ndarray]]:
    pts = []
    for d, p, cs in region.points:
        clims = _normalize_climits(source, np.asarray(cs)) if len(cs) else _normalize_climits(source, None)
        if math.isfinite(p) and source.nx != source.nxhat:
            raise ValueError("perception constraint needs matching alphabets")
        pts.append((float(d), float(p), clims))
    return pts


def universal_rate(
    source: DiscreteSource,
    region: ConstraintRegion,
    nz: int,
    options: SolveOptions | None = None,
) -> UniversalSolution:
    """Minimal I(X; Z) over representation channels from which some decoder
    meets every constraint point in the region.

    Outer multi-start mirror descent over p(z|x); decoders are maintained per
    constraint point with warm-started feasibility refinements, and their
    violations enter the outer objective as exact penalties (envelope
    gradients with the decoders held fixed).
    """
    if nz < 1:
        raise ValueError("nz must be >= 1")
    opts = options or SolveOptions()
    points = _region_points(source, region)
    rng = np.random.default_rng(opts.seed)

    outer_starts = _channel_starts(source.nx, nz, max(opts.n_starts // 4, 4), rng)
    # A single-point optimum padded into encoder shape is often near-optimal
    # for the whole region; add those witnesses when shapes allow.
    if nz == source.nxhat:
        for dlim, plim, clims in points:
            sol = solve_rdpc(
                source, dlim, plim, clims,
                options=replace(opts, n_starts=max(8, opts.n_starts // 4)),
            )
            if sol.feasible:
                outer_starts.insert(0, sol.channel)

    px = source.px
    px_safe = np.maximum(px, 1e-15)
    best_rate, best_pzx, best_decs = INF, None, None
    min_viol = INF
    inner_budget = dict(rounds=1, steps=12, feas_tol=opts.feas_tol)

    for pzx0 in outer_starts:
        pzx = np.clip(np.asarray(pzx0, float), 1e-12, None)
        pzx /= pzx.sum(axis=1, keepdims=True)
        decs = [np.full((nz, source.nxhat), 1.0 / source.nxhat) for _ in points]
        if nz == source.nxhat:
            decs = [np.eye(nz) * (1 - 1e-6) + 1e-6 / nz for _ in points]
        mu = opts.mu0
        lr = opts.lr0
        for _ in range(opts.rounds):
            for _ in range(opts.steps // 2):
                pz = px @ pzx
                pz_safe = np.maximum(pz, 1e-15)
                log_ratio = np.log2(np.maximum(pzx, 1e-15) / pz_safe[None, :])
                rate = float(np.sum(np.where(px[:, None] * pzx > 1e-15,
                                             px[:, None] * pzx * log_ratio, 0.0)))
                grad = px[:, None] * log_ratio
                total_viol = 0.0
                for idx, point in enumerate(points):
                    decs[idx], viol = _decoder_feasibility(
                        source, pzx, point, decs[idx], **inner_budget
                    )
                    total_viol += viol
                    if viol <= opts.feas_tol:
                        continue
                    dlim, plim, clims = point
                    dec = decs[idx]
                    Q = pzx @ dec
                    d, p, c = constraint_values(source, Q)
                    if d > dlim:
                        grad += mu * px[:, None] * (source.delta @ dec.T)
                    if math.isfinite(plim) and p > plim:
                        sgn = np.sign(px @ Q - px)
                        grad += mu * 0.5 * px[:, None] * (dec @ sgn)[None, :]
                    for k, chan in enumerate(source.label_channels):
                        if math.isfinite(clims[k]) and c[k] > clims[k]:
                            q_hat = np.maximum(px @ Q, 1e-15)
                            joint = (px[:, None] * Q).T @ chan
                            cond_log = np.log2(np.maximum(joint, 1e-15) / q_hat[:, None])
                            g_q = -px[:, None] * (chan @ cond_log.T)
                            grad += mu * (g_q @ dec.T)

                if total_viol <= opts.feas_tol * len(points):
                    exact = mutual_information(px, pzx)
                    if exact < best_rate:
                        best_rate, best_pzx = exact, pzx.copy()
                        best_decs = [d.copy() for d in decs]
                min_viol = min(min_viol, total_viol)

                pzx = pzx * np.exp(-lr * grad / px_safe[:, None])
                pzx = np.clip(pzx, 1e-15, None)
                pzx /= pzx.sum(axis=1, keepdims=True)
            mu *= opts.mu_growth
            lr *= opts.lr_decay

    if best_pzx is None:
        # thorough feasibility pass over the incumbent starts
        for pzx0 in outer_starts:
            pzx = np.clip(np.asarray(pzx0, float), 1e-12, None)
            pzx /= pzx.sum(axis=1, keepdims=True)
            decs, total = [], 0.0
            for point in points:
                dec0 = np.full((nz, source.nxhat), 1.0 / source.nxhat)
                dec, viol = _decoder_feasibility(
                    source, pzx, point, dec0,
                    rounds=opts.rounds, steps=opts.steps, feas_tol=opts.feas_tol,
                )
                decs.append(dec)
                total += viol
            min_viol = min(min_viol, total)
            if total <= opts.feas_tol * len(points):
                rate = mutual_information(px, pzx)
                if rate < best_rate:
                    best_rate, best_pzx, best_decs = rate, pzx, decs
    if best_pzx is None:
        return UniversalSolution("infeasible", INF, None, min_violation=min_viol)
    return UniversalSolution(
        "optimal", best_rate, best_pzx, tuple(best_decs), min_violation=0.0
    )


def rate_penalty(
    source: DiscreteSource,
    region: ConstraintRegion,
    nz: int,
    options: SolveOptions | None = None,
) -> float:
    """Universal rate minus the hardest single-point rate (>= 0 up to solver
    tolerance). Propagates infeasibility as +inf."""
    opts = options or SolveOptions()
    universal = universal_rate(source, region, nz, options=opts)
    if not universal.feasible:
        return INF
    worst = -INF
    for d, p, cs in region.points:
        sol = solve_rdpc(source, d, p, np.asarray(cs) if len(cs) else None, options=opts)
        if not sol.feasible:
            return INF
        worst = max(worst, sol.rate)
    return universal.rate - worst
