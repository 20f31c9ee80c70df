import json
import math

import pytest
import torch

from rdclab import evalcli, networks
from rdclab.data import Dataset
from rdclab.datamodel import CurvePoint, Mode, Objective, QuantizerSpec, rate_of
from rdclab.results import (
    COLUMNS,
    SCHEMA_HEADER,
    ResultsTable,
    export_table,
    import_table,
)


def make_point(rid="r0", mode=Mode.END_TO_END, lam_c=0.015, seed=0, mse=0.04):
    return CurvePoint(
        run_id=rid,
        mode=mode,
        objective=Objective.RDC,
        dim=3,
        levels=3,
        rate=rate_of(QuantizerSpec(3, 3)),
        lambda_c=lam_c,
        lambda_p=0.0,
        mse=mse,
        ce=0.5,
        accuracy=0.95,
        w1_proxy=math.nan,
        seed=seed,
    )


class TestResultsTable:
    def test_append_and_load_round_trip(self, tmp_path):
        table = ResultsTable(tmp_path / "results.csv")
        table.append(make_point("a"))
        table.append(make_point("b", mse=0.05))
        loaded = table.load()
        assert [p.run_id for p in loaded] == ["a", "b"]
        assert loaded[1].mse == 0.05
        assert math.isnan(loaded[0].w1_proxy)

    def test_schema_header_written(self, tmp_path):
        path = tmp_path / "results.csv"
        ResultsTable(path).append(make_point())
        lines = path.read_text().splitlines()
        assert lines[0] == SCHEMA_HEADER
        assert lines[1] == ",".join(COLUMNS)

    def test_duplicate_run_id_rejected(self, tmp_path):
        table = ResultsTable(tmp_path / "results.csv")
        table.append(make_point("dup"))
        with pytest.raises(ValueError, match="duplicate"):
            table.append(make_point("dup"))

    def test_run_ids(self, tmp_path):
        table = ResultsTable(tmp_path / "results.csv")
        assert table.run_ids() == set()
        table.append(make_point("x"))
        assert table.run_ids() == {"x"}

    def test_byte_stable_rewrites(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            t = ResultsTable(path)
            t.append(make_point("p"))
            t.append(make_point("q", seed=1))
        assert a.read_bytes() == b.read_bytes()


class TestExportImport:
    def test_csv_round_trip(self, tmp_path):
        points = [make_point("a"), make_point("b", seed=2)]
        path = export_table(points, "csv", tmp_path / "out.csv")
        back = import_table(path)
        assert [p.run_id for p in back] == ["a", "b"]
        assert back[0].rate == pytest.approx(points[0].rate)

    def test_json_round_trip(self, tmp_path):
        points = [make_point("a")]
        path = export_table(points, "json", tmp_path / "out.json")
        payload = json.loads(path.read_text())
        assert payload["rows"][0]["run_id"] == "a"
        back = import_table(path)
        assert back[0].run_id == "a"

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_table([], "csv", tmp_path / "x.csv")

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            export_table([make_point()], "yaml", tmp_path / "x.yaml")


class TestPlot:
    def test_writes_figure(self, tmp_path):
        points = [
            make_point("a", lam_c=0.0, mse=0.06),
            make_point("b", lam_c=0.05, mse=0.04),
            make_point("c", mode=Mode.UNIVERSAL, lam_c=0.05, mse=0.045),
        ]
        out = evalcli.plot_tradeoff(points, "ce", "mse", "mode", tmp_path / "fig.png")
        assert out.exists() and out.stat().st_size > 0

    def test_rejects_unknown_axis(self, tmp_path):
        with pytest.raises(ValueError):
            evalcli.plot_tradeoff([make_point()], "rate", "mse", "mode", tmp_path / "f.png")

    def test_rejects_unknown_grouper(self, tmp_path):
        with pytest.raises(ValueError):
            evalcli.plot_tradeoff([make_point()], "ce", "mse", "seed", tmp_path / "f.png")


@pytest.fixture(scope="module")
def dumped_checkpoints(tmp_path_factory):
    root = tmp_path_factory.mktemp("ckpts")
    spec = QuantizerSpec(2, 2)
    torch.manual_seed(0)
    enc, dec = networks.build_encoder(spec), networks.build_decoder(spec)
    arch = {"dim": 2, "levels": 2}
    networks.save_checkpoint(root / "e.pt", enc, arch=arch, config_hash="h", seed=0)
    networks.save_checkpoint(root / "d.pt", dec, arch=arch, config_hash="h", seed=0)
    gen = torch.Generator().manual_seed(1)
    ds = Dataset(
        "synthetic",
        torch.rand((4, 1, 28, 28), generator=gen),
        torch.zeros(4, dtype=torch.int64),
        torch.rand((16, 1, 28, 28), generator=gen),
        torch.zeros(16, dtype=torch.int64),
    )
    return root, ds


class TestDumpReconstructions:
    def test_grid_dimensions(self, dumped_checkpoints, tmp_path):
        root, ds = dumped_checkpoints
        out = evalcli.dump_reconstructions(
            root / "e.pt", root / "d.pt", ds, 8, tmp_path / "grid.png", seed=0
        )
        from PIL import Image

        with Image.open(out) as im:
            assert im.size == (8 * 28, 2 * 28)
            assert im.mode == "L"

    def test_byte_identical_reruns(self, dumped_checkpoints, tmp_path):
        root, ds = dumped_checkpoints
        a = evalcli.dump_reconstructions(
            root / "e.pt", root / "d.pt", ds, 4, tmp_path / "a.png", seed=5
        )
        b = evalcli.dump_reconstructions(
            root / "e.pt", root / "d.pt", ds, 4, tmp_path / "b.png", seed=5
        )
        assert a.read_bytes() == b.read_bytes()

    def test_seed_changes_selection(self, dumped_checkpoints, tmp_path):
        root, ds = dumped_checkpoints
        a = evalcli.dump_reconstructions(
            root / "e.pt", root / "d.pt", ds, 4, tmp_path / "a.png", seed=0
        )
        b = evalcli.dump_reconstructions(
            root / "e.pt", root / "d.pt", ds, 4, tmp_path / "b.png", seed=1
        )
        assert a.read_bytes() != b.read_bytes()

    def test_spec_mismatch_rejected(self, dumped_checkpoints, tmp_path):
        root, ds = dumped_checkpoints
        spec = QuantizerSpec(3, 3)
        other = networks.build_decoder(spec)
        networks.save_checkpoint(
            tmp_path / "d33.pt", other, arch={"dim": 3, "levels": 3},
            config_hash="h", seed=0,
        )
        with pytest.raises(ValueError, match="differ"):
            evalcli.dump_reconstructions(
                root / "e.pt", tmp_path / "d33.pt", ds, 4, tmp_path / "x.png"
            )
