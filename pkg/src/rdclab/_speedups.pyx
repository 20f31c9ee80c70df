# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the finite-alphabet oracle.

Mirrors rdclab.oracle._pure exactly; parity is covered by tests. The mirror
descent inner loop dominates the oracle's runtime, which is why it lives
here.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log, log2

cnp.import_array()

cdef double _EPS = 1e-15
cdef double _INF = float("inf")


def mutual_information_bits(px, Q):
    """I(X; Xhat) in bits of the joint px(x) * Q(xhat | x)."""
    cdef double[:] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[:, :] Qv = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t nx = Qv.shape[0], ny = Qv.shape[1]
    cdef double[:] q = np.zeros(ny)
    cdef Py_ssize_t a, b
    cdef double total = 0.0, j
    for a in range(nx):
        for b in range(ny):
            q[b] += pxv[a] * Qv[a, b]
    for a in range(nx):
        for b in range(ny):
            j = pxv[a] * Qv[a, b]
            if j > _EPS:
                total += j * log2(Qv[a, b] / max(q[b], _EPS))
    return total


def constraint_values_raw(px, labels_cat, offsets, delta, Q):
    """(expected distortion, TV to source marginal, per-label H(S_k|Xhat))."""
    cdef double[:] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[:, :] lab = np.ascontiguousarray(labels_cat, dtype=np.float64)
    cdef long[:] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double[:, :] dv = np.ascontiguousarray(delta, dtype=np.float64)
    cdef double[:, :] Qv = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t nx = Qv.shape[0], ny = Qv.shape[1]
    cdef Py_ssize_t n_labels = offs.shape[0] - 1
    cdef Py_ssize_t a, b, k, s
    cdef double[:] q = np.zeros(ny)
    cdef double d_val = 0.0, tv, j, c_val
    cdef cnp.ndarray[double, ndim=1] c_out = np.empty(n_labels)
    for a in range(nx):
        for b in range(ny):
            q[b] += pxv[a] * Qv[a, b]
            d_val += pxv[a] * Qv[a, b] * dv[a, b]
    if nx == ny:
        tv = 0.0
        for b in range(ny):
            tv += fabs(q[b] - pxv[b])
        tv *= 0.5
    else:
        tv = float("nan")
    for k in range(n_labels):
        c_val = 0.0
        for b in range(ny):
            for s in range(offs[k], offs[k + 1]):
                j = 0.0
                for a in range(nx):
                    j += pxv[a] * Qv[a, b] * lab[a, s]
                if j > _EPS:
                    c_val -= j * log2(j / max(q[b], _EPS))
        c_out[k] = c_val
    return d_val, tv, c_out


def descent_run(px, delta, labels_cat, offsets,
                double dlim, double plim, clims, Q0,
                int rounds=8, int steps=150, double lr0=0.5,
                double lr_decay=0.7, double mu0=4.0, double mu_growth=3.0,
                double feas_tol=1e-7, bint minimize_rate=True, tv_ref=None):
    """Exact-penalty mirror descent; same contract as the NumPy fallback."""
    cdef double[:] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[:] tvrefv = np.ascontiguousarray(
        px if tv_ref is None else tv_ref, dtype=np.float64)
    cdef double[:, :] dv = np.ascontiguousarray(delta, dtype=np.float64)
    cdef double[:, :] lab = np.ascontiguousarray(labels_cat, dtype=np.float64)
    cdef long[:] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef double[:] climv = np.ascontiguousarray(clims, dtype=np.float64)

    cdef cnp.ndarray[double, ndim=2] Q_arr = np.array(Q0, dtype=np.float64)
    cdef double[:, :] Q = Q_arr
    cdef Py_ssize_t nx = Q.shape[0], ny = Q.shape[1]
    cdef Py_ssize_t n_labels = offs.shape[0] - 1
    cdef Py_ssize_t ns_total = lab.shape[1]
    cdef bint p_active = isfinite(plim)

    cdef double[:] q = np.zeros(ny)
    cdef double[:, :] grad = np.zeros((nx, ny))
    cdef double[:, :] joint = np.zeros((ny, ns_total))
    cdef double[:, :] cond_log = np.zeros((ny, ns_total))

    cdef cnp.ndarray[double, ndim=2] best_q_arr = np.empty((nx, ny))
    cdef cnp.ndarray[double, ndim=2] min_viol_q_arr = np.array(Q_arr)
    cdef double[:, :] best_q = best_q_arr
    cdef double[:, :] min_viol_q = min_viol_q_arr
    cdef bint have_best = False
    cdef double best_rate = _INF, min_viol = _INF

    cdef double mu = mu0, lr = lr0
    cdef Py_ssize_t r, t, a, b, k, s
    cdef double row_sum, rate, viol, d_val, tv, c_val, j, g, qb

    # normalize the start
    for a in range(nx):
        row_sum = 0.0
        for b in range(ny):
            if Q[a, b] < _EPS:
                Q[a, b] = _EPS
            row_sum += Q[a, b]
        for b in range(ny):
            Q[a, b] /= row_sum

    for r in range(rounds):
        for t in range(steps):
            for b in range(ny):
                q[b] = 0.0
            for a in range(nx):
                for b in range(ny):
                    q[b] += pxv[a] * Q[a, b]
                    grad[a, b] = 0.0

            rate = 0.0
            for a in range(nx):
                for b in range(ny):
                    j = pxv[a] * Q[a, b]
                    g = log2(Q[a, b] / max(q[b], _EPS))
                    if j > _EPS:
                        rate += j * g
                    if minimize_rate:
                        grad[a, b] += pxv[a] * g

            viol = 0.0
            d_val = 0.0
            for a in range(nx):
                for b in range(ny):
                    d_val += pxv[a] * Q[a, b] * dv[a, b]
            if d_val > dlim:
                viol += d_val - dlim
                for a in range(nx):
                    for b in range(ny):
                        grad[a, b] += mu * pxv[a] * dv[a, b]
            if p_active:
                tv = 0.0
                for b in range(ny):
                    tv += fabs(q[b] - tvrefv[b])
                tv *= 0.5
                if tv > plim:
                    viol += tv - plim
                    for a in range(nx):
                        for b in range(ny):
                            if q[b] > tvrefv[b]:
                                grad[a, b] += mu * 0.5 * pxv[a]
                            elif q[b] < tvrefv[b]:
                                grad[a, b] -= mu * 0.5 * pxv[a]

            for k in range(n_labels):
                if not isfinite(climv[k]):
                    continue
                c_val = 0.0
                for b in range(ny):
                    qb = max(q[b], _EPS)
                    for s in range(offs[k], offs[k + 1]):
                        j = 0.0
                        for a in range(nx):
                            j += pxv[a] * Q[a, b] * lab[a, s]
                        joint[b, s] = j
                        cond_log[b, s] = log2(max(j, _EPS) / qb)
                        c_val -= j * cond_log[b, s]
                if c_val > climv[k]:
                    viol += c_val - climv[k]
                    for a in range(nx):
                        for b in range(ny):
                            g = 0.0
                            for s in range(offs[k], offs[k + 1]):
                                g += lab[a, s] * cond_log[b, s]
                            grad[a, b] -= mu * pxv[a] * g

            if viol <= feas_tol and rate < best_rate:
                best_rate = rate
                have_best = True
                for a in range(nx):
                    for b in range(ny):
                        best_q[a, b] = Q[a, b]
            if viol < min_viol:
                min_viol = viol
                for a in range(nx):
                    for b in range(ny):
                        min_viol_q[a, b] = Q[a, b]

            for a in range(nx):
                row_sum = 0.0
                for b in range(ny):
                    Q[a, b] = Q[a, b] * exp(-lr * grad[a, b] / max(pxv[a], _EPS))
                    if Q[a, b] < _EPS:
                        Q[a, b] = _EPS
                    row_sum += Q[a, b]
                for b in range(ny):
                    Q[a, b] /= row_sum
        mu *= mu_growth
        lr *= lr_decay

    return (best_q_arr.copy() if have_best else None, best_rate, min_viol,
            min_viol_q_arr)
