"""Pure NumPy kernels for the finite-alphabet oracle.

Same contract as the compiled ``rdclab._speedups`` module; one of the two is
selected at import time by :mod:`rdclab.oracle.backend`.

All rates and entropies are in bits. Channels are row-stochastic matrices
``Q[x, xhat] = p(xhat | x)``. Label channels are passed column-concatenated
(``labels_cat``) with an ``offsets`` index array so the kernel signature stays
flat enough to compile.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = 1e-15
_LN2 = math.log(2.0)


def mutual_information_bits(px: np.ndarray, Q: np.ndarray) -> float:
    """I(X; Xhat) of the joint px(x) * Q(xhat | x)."""
    px = np.asarray(px, dtype=float)
    Q = np.asarray(Q, dtype=float)
    q = px @ Q
    joint = px[:, None] * Q
    mask = joint > _EPS
    ratio = np.where(mask, Q / np.maximum(q, _EPS)[None, :], 1.0)
    return float(np.sum(joint[mask] * np.log2(ratio[mask])))


def constraint_values_raw(
    px: np.ndarray,
    labels_cat: np.ndarray,
    offsets: np.ndarray,
    delta: np.ndarray,
    Q: np.ndarray,
) -> tuple[float, float, np.ndarray]:
    """(expected distortion, TV to source marginal, per-label H(S_k|Xhat)).

    TV is only meaningful when the two alphabets coincide; for rectangular
    channels it is returned as NaN.
    """
    px = np.asarray(px, dtype=float)
    Q = np.asarray(Q, dtype=float)
    q = px @ Q
    d_val = float(np.sum(px[:, None] * Q * delta))
    if Q.shape[0] == Q.shape[1]:
        tv = 0.5 * float(np.abs(q - px).sum())
    else:
        tv = float("nan")
    n_labels = len(offsets) - 1
    c_vals = np.empty(n_labels)
    for k in range(n_labels):
        chan = labels_cat[:, offsets[k] : offsets[k + 1]]
        joint = (px[:, None] * Q).T @ chan  # p(xhat, s)
        mask = joint > _EPS
        cond = np.where(mask, joint / np.maximum(q, _EPS)[:, None], 1.0)
        c_vals[k] = -float(np.sum(joint[mask] * np.log2(cond[mask])))
    return d_val, tv, c_vals


def descent_run(
    px: np.ndarray,
    delta: np.ndarray,
    labels_cat: np.ndarray,
    offsets: np.ndarray,
    dlim: float,
    plim: float,
    clims: np.ndarray,
    Q0: np.ndarray,
    rounds: int = 8,
    steps: int = 150,
    lr0: float = 0.5,
    lr_decay: float = 0.7,
    mu0: float = 4.0,
    mu_growth: float = 3.0,
    feas_tol: float = 1e-7,
    minimize_rate: bool = True,
    tv_ref: np.ndarray | None = None,
):
    """Exact-penalty mirror descent over the channel simplex product.

    Tracks the best feasible iterate (constraint slack <= feas_tol) and the
    iterate of minimal violation seen anywhere along the trajectory,
    including the start. Returns
    ``(best_feasible_Q_or_None, best_rate_bits, min_violation, min_violation_Q)``.
    """
    px = np.asarray(px, dtype=float)
    delta = np.asarray(delta, dtype=float)
    clims = np.asarray(clims, dtype=float)
    Q = np.array(Q0, dtype=float)
    Q = np.clip(Q, _EPS, None)
    Q /= Q.sum(axis=1, keepdims=True)
    px_safe = np.maximum(px, _EPS)
    tv_ref = px if tv_ref is None else np.asarray(tv_ref, dtype=float)
    p_active = math.isfinite(plim)
    c_active = np.isfinite(clims)
    n_labels = len(offsets) - 1

    best_q = None
    best_rate = math.inf
    min_viol = math.inf
    min_viol_q = Q.copy()

    mu = mu0
    lr = lr0
    for _ in range(rounds):
        for _ in range(steps):
            q = px @ Q
            q_safe = np.maximum(q, _EPS)
            joint_x = px[:, None] * Q

            log_ratio = np.log2(Q / q_safe[None, :])
            rate = float(np.sum(np.where(joint_x > _EPS, joint_x * log_ratio, 0.0)))
            grad = np.zeros_like(Q)
            if minimize_rate:
                grad += px[:, None] * log_ratio

            viol = 0.0
            d_val = float(np.sum(joint_x * delta))
            if d_val > dlim:
                viol += d_val - dlim
                grad += mu * px[:, None] * delta
            if p_active:
                tv = 0.5 * float(np.abs(q - tv_ref).sum())
                if tv > plim:
                    viol += tv - plim
                    grad += mu * 0.5 * np.sign(q - tv_ref)[None, :] * px[:, None]
            for k in range(n_labels):
                if not c_active[k]:
                    continue
                chan = labels_cat[:, offsets[k] : offsets[k + 1]]
                joint = joint_x.T @ chan
                joint_safe = np.maximum(joint, _EPS)
                cond_log = np.log2(joint_safe / q_safe[:, None])
                c_val = -float(np.sum(joint * cond_log))
                if c_val > clims[k]:
                    viol += c_val - clims[k]
                    grad += mu * (-px[:, None]) * (chan @ cond_log.T)

            feasible = viol <= feas_tol
            if feasible and rate < best_rate:
                best_rate = rate
                best_q = Q.copy()
            if viol < min_viol:
                min_viol = viol
                min_viol_q = Q.copy()

            Q = Q * np.exp(-lr * grad / px_safe[:, None])
            Q = np.clip(Q, _EPS, None)
            Q /= Q.sum(axis=1, keepdims=True)
        mu *= mu_growth
        lr *= lr_decay

    return best_q, best_rate, min_viol, min_viol_q
