"""Bit-level agreement between the compiled kernels and the NumPy fallback."""

import math

import numpy as np
import pytest

from rdclab.oracle import _pure

_speedups = pytest.importorskip("rdclab._speedups")

INF = math.inf


def random_instance(rng, nx=3, nxhat=3, n_labels=2, label_width=2):
    px = rng.dirichlet(np.ones(nx))
    delta = rng.uniform(0, 1, size=(nx, nxhat))
    chans = [rng.dirichlet(np.ones(label_width), size=nx) for _ in range(n_labels)]
    cat = np.ascontiguousarray(np.concatenate(chans, axis=1))
    offs = np.cumsum([0] + [c.shape[1] for c in chans]).astype(np.int64)
    Q = rng.dirichlet(np.ones(nxhat), size=nx)
    return px, delta, cat, offs, Q


@pytest.mark.parametrize("seed", range(5))
def test_mutual_information_parity(seed):
    rng = np.random.default_rng(seed)
    px, _, _, _, Q = random_instance(rng)
    a = _pure.mutual_information_bits(px, Q)
    b = _speedups.mutual_information_bits(px, Q)
    assert a == pytest.approx(b, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_constraint_values_parity(seed):
    rng = np.random.default_rng(seed)
    px, delta, cat, offs, Q = random_instance(rng)
    da, pa, ca = _pure.constraint_values_raw(px, cat, offs, delta, Q)
    db, pb, cb = _speedups.constraint_values_raw(px, cat, offs, delta, Q)
    assert da == pytest.approx(db, abs=1e-14)
    assert pa == pytest.approx(pb, abs=1e-14)
    np.testing.assert_allclose(ca, cb, atol=1e-14)


def test_constraint_values_parity_rectangular_nan_tv():
    rng = np.random.default_rng(0)
    px, delta, cat, offs, Q = random_instance(rng, nx=2, nxhat=3)
    _, pa, _ = _pure.constraint_values_raw(px, cat, offs, delta, Q)
    _, pb, _ = _speedups.constraint_values_raw(px, cat, offs, delta, Q)
    assert math.isnan(pa) and math.isnan(pb)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("minimize_rate", [True, False])
def test_descent_run_parity(seed, minimize_rate):
    rng = np.random.default_rng(100 + seed)
    px, delta, cat, offs, Q0 = random_instance(rng)
    clims = np.array([0.8, INF])
    kwargs = dict(
        rounds=4, steps=60, lr0=0.5, lr_decay=0.7, mu0=4.0, mu_growth=3.0,
        feas_tol=1e-7, minimize_rate=minimize_rate,
    )
    out_a = _pure.descent_run(px, delta, cat, offs, 0.3, INF, clims, Q0, **kwargs)
    out_b = _speedups.descent_run(px, delta, cat, offs, 0.3, INF, clims, Q0, **kwargs)
    for a, b in zip(out_a, out_b):
        if a is None or (isinstance(a, float) and math.isinf(a)):
            assert (b is None) or (isinstance(b, float) and math.isinf(b))
        elif isinstance(a, float):
            assert a == pytest.approx(b, abs=1e-10)
        else:
            np.testing.assert_allclose(a, b, atol=1e-10)


def test_descent_run_parity_with_tv_ref():
    rng = np.random.default_rng(7)
    px, delta, cat, offs, Q0 = random_instance(rng, nx=3, nxhat=3)
    tv_ref = rng.dirichlet(np.ones(3))
    clims = np.array([INF, INF])
    kwargs = dict(
        rounds=3, steps=40, lr0=0.5, lr_decay=0.8, mu0=1.0, mu_growth=2.0,
        feas_tol=1e-7, minimize_rate=False, tv_ref=tv_ref,
    )
    out_a = _pure.descent_run(px, delta, cat, offs, 0.4, 0.1, clims, Q0, **kwargs)
    out_b = _speedups.descent_run(px, delta, cat, offs, 0.4, 0.1, clims, Q0, **kwargs)
    assert out_a[2] == pytest.approx(out_b[2], abs=1e-10)
    np.testing.assert_allclose(out_a[3], out_b[3], atol=1e-10)


def test_backend_env_override(monkeypatch):
    import importlib

    from rdclab.oracle import backend

    monkeypatch.setenv("RDCLAB_PURE_PYTHON", "1")
    reloaded = importlib.reload(backend)
    try:
        assert reloaded.BACKEND == "numpy"
    finally:
        monkeypatch.delenv("RDCLAB_PURE_PYTHON")
        restored = importlib.reload(backend)
        assert restored.BACKEND in ("compiled", "numpy")
