import math

import pytest
from hypothesis import given, strategies as st

from rdclab.datamodel import (
    CurvePoint,
    Mode,
    Objective,
    QuantizerSpec,
    RunConfig,
    TradeoffParams,
    config_from_kv,
    config_to_kv,
    dump_kv,
    parse_kv,
    rate_of,
    run_id,
    validate,
)


def make_config(**overrides) -> RunConfig:
    base = dict(
        mode=Mode.END_TO_END,
        objective=Objective.RDC,
        quantizer=QuantizerSpec(3, 3),
        tradeoff=TradeoffParams(lambda_c=0.015),
    )
    base.update(overrides)
    return RunConfig(**base)


class TestRateOf:
    def test_rate_3_3(self):
        assert rate_of(QuantizerSpec(3, 3)) == pytest.approx(4.7549, abs=1e-4)

    def test_one_bit(self):
        assert rate_of(QuantizerSpec(1, 2)) == 1.0

    def test_4_4(self):
        assert rate_of(QuantizerSpec(4, 4)) == 8.0

    @given(dim=st.integers(1, 16), levels=st.integers(2, 64))
    def test_strictly_increasing(self, dim, levels):
        base = rate_of(QuantizerSpec(dim, levels))
        assert rate_of(QuantizerSpec(dim + 1, levels)) > base
        assert rate_of(QuantizerSpec(dim, levels + 1)) > base

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            QuantizerSpec(0, 3)
        with pytest.raises(ValueError):
            QuantizerSpec(3, 1)


class TestValidate:
    def test_universal_needs_encoder_source(self):
        cfg = make_config(mode=Mode.UNIVERSAL)
        assert any("encoder_source" in v for v in validate(cfg))

    def test_both_lambdas_nonzero_rejected(self):
        cfg = make_config(
            tradeoff=TradeoffParams(lambda_c=0.1, lambda_p=0.1),
        )
        assert any("exactly one tradeoff weight" in v for v in validate(cfg))

    def test_valid_rdc_config(self):
        assert validate(make_config()) == []

    def test_objective_tradeoff_mismatch(self):
        cfg = make_config(
            objective=Objective.RDP, tradeoff=TradeoffParams(lambda_c=0.1)
        )
        assert any("lambda_c" in v for v in validate(cfg))


class TestSerialization:
    def test_round_trip_identity(self):
        cfg = make_config(seed=7, epochs=3, encoder_source=None)
        assert config_from_kv(config_to_kv(cfg)) == cfg

    def test_round_trip_universal(self):
        cfg = make_config(
            mode=Mode.UNIVERSAL, encoder_source="abc123", seed=5
        )
        assert config_from_kv(config_to_kv(cfg)) == cfg

    def test_kv_text_round_trip(self):
        cfg = make_config()
        text = dump_kv(config_to_kv(cfg))
        assert config_from_kv(parse_kv(text)) == cfg

    @given(
        lam=st.floats(0, 10, allow_nan=False),
        seed=st.integers(0, 2**31),
        epochs=st.integers(1, 500),
    )
    def test_round_trip_property(self, lam, seed, epochs):
        cfg = make_config(
            tradeoff=TradeoffParams(lambda_c=lam), seed=seed, epochs=epochs
        )
        assert config_from_kv(config_to_kv(cfg)) == cfg

    def test_run_id_depends_on_content(self):
        a = make_config(seed=0)
        b = make_config(seed=1)
        assert run_id(a) != run_id(b)
        assert run_id(a) == run_id(make_config(seed=0))

    def test_curve_point_round_trip(self):
        p = CurvePoint(
            run_id="deadbeef",
            mode=Mode.END_TO_END,
            objective=Objective.RDC,
            dim=3,
            levels=3,
            rate=rate_of(QuantizerSpec(3, 3)),
            lambda_c=0.015,
            lambda_p=0.0,
            mse=0.04,
            ce=0.5,
            accuracy=0.95,
            w1_proxy=math.nan,
            seed=0,
        )
        q = CurvePoint.from_kv(p.to_kv())
        assert q.run_id == p.run_id and q.mse == p.mse
        assert math.isnan(q.w1_proxy)

    def test_curve_point_invariants(self):
        with pytest.raises(ValueError):
            CurvePoint(
                run_id="x", mode=Mode.END_TO_END, objective=Objective.RDC,
                dim=3, levels=3, rate=4.75, lambda_c=0.0, lambda_p=0.0,
                mse=-1.0, ce=0.5, accuracy=0.9, w1_proxy=0.0, seed=0,
            )
