import json
from pathlib import Path

import polars as pl
import pytest

from main import build_parser, main
from src.config import FitConfig, PipelineConfig
from src.reporting import ArtifactWriter


@pytest.fixture
def synth_dir(tmp_path: Path) -> Path:
    spec = tmp_path / "synth.toml"
    spec.write_text(
        'domains = ["Sports", "Politics"]\n'
        "theta = 1.2\n"
        "markets_per_cell = 20\n"
        "trades_per_market = 10\n"
        "seed = 3\n"
    )
    out = tmp_path / "synth"
    assert main(["synth", "--spec", str(spec), "--output-dir", str(out)]) == 0
    return out


def _config(tmp_path: Path, data: Path, extra: str = "") -> Path:
    path = tmp_path / "pipeline.toml"
    path.write_text(
        f'output_dir = "{(tmp_path / "out").as_posix()}"\n'
        f"{extra}"
        "[inputs]\n"
        f'trades = "{(data / "trades.csv").as_posix()}"\n'
        f'markets = "{(data / "markets.csv").as_posix()}"\n'
        f'rules = "{(data / "rules.csv").as_posix()}"\n'
    )
    return path


def test_recalibrate_prints_four_decimals(tmp_path, capsys) -> None:
    code = main(
        ["recalibrate", "--price", "0.70", "--slope", "1.83", "--output-dir", str(tmp_path)]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() == "0.8250"


def test_recalibrate_outside_domain_exits_four(tmp_path, capsys) -> None:
    code = main(["recalibrate", "--price", "1.5", "--slope", "2", "--output-dir", str(tmp_path)])
    assert code == 4
    assert capsys.readouterr().err.startswith("error: Price must lie strictly inside")


def test_missing_config_exits_two(tmp_path, capsys) -> None:
    code = main(["fit-cells", "--config", str(tmp_path / "absent.toml")])
    assert code == 2
    assert "does not exist" in capsys.readouterr().err


def test_invalid_config_names_the_field(tmp_path, capsys) -> None:
    path = tmp_path / "bad.toml"
    path.write_text("[fit]\nregularization_C = -1\n")
    assert main(["fit-cells", "--config", str(path)]) == 2
    assert "fit.regularization_C" in capsys.readouterr().err


def test_fit_without_inputs_exits_two(tmp_path) -> None:
    assert main(["fit-cells", "--output-dir", str(tmp_path)]) == 2


def test_missing_cells_table_exits_two(tmp_path) -> None:
    assert main(["decompose", "--output-dir", str(tmp_path)]) == 2


def test_no_fittable_cell_exits_three(tmp_path, synth_dir, capsys) -> None:
    config = _config(tmp_path, synth_dir, "[filters]\nmin_trades_per_cell = 100000\n")
    assert main(["fit-cells", "--config", str(config)]) == 3
    assert "min_trades_per_cell" in capsys.readouterr().err
    assert not (tmp_path / "out" / "cells.csv").exists()


def test_synth_writes_ingest_files(synth_dir) -> None:
    for name in ("trades.csv", "markets.csv", "rules.csv", "truth.csv", "synth_components.csv"):
        assert (synth_dir / name).is_file()
    manifest = json.loads((synth_dir / "manifest.json").read_text())
    run = manifest["runs"]["synth"]
    assert run["synth_spec"]["seed"] == 3
    assert set(run["artifacts"]) >= {"trades.csv", "truth.csv"}


def test_synth_then_fit_then_decompose(tmp_path, synth_dir) -> None:
    config = _config(tmp_path, synth_dir)
    out = tmp_path / "out"

    assert main(["ingest-stats", "--config", str(config)]) == 0
    stats = pl.read_csv(out / "dataset_stats.csv")
    assert {"Sports", "Politics"} <= set(stats["domain"])

    assert main(["fit-cells", "--config", str(config)]) == 0
    cells = pl.read_csv(out / "cells.csv")
    assert cells.height == 72
    assert cells["n"].to_list() == [200] * 72
    assert cells["b"].median() == pytest.approx(1.2, abs=0.3)

    assert main(["decompose", "--config", str(config)]) == 0
    ftests = pl.read_csv(out / "ftests.csv")
    assert ftests["component"].to_list() == ["mu", "alpha", "beta", "gamma", "residual"]
    assert ftests["df"].to_list() == [8, 1, 8, 6, 48]
    variance = pl.read_csv(out / "variance.csv")
    assert set(variance["type"]) == {"I", "II", "III"}

    assert main(["recalibrate", "--config", str(config), "--price", "0.6",
                 "--domain", "Sports", "--horizon", "2", "--size", "1"]) == 0

    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["runs"]) == {"ingest-stats", "fit-cells", "decompose", "recalibrate"}
    fit_run = manifest["runs"]["fit-cells"]
    assert fit_run["cells"] == 72
    assert fit_run["config_hash"] == manifest["runs"]["decompose"]["config_hash"]
    assert len(fit_run["artifacts"]["cells.csv"]) == 64


def test_batch_recalibration(tmp_path) -> None:
    cells = tmp_path / "cells.csv"
    pl.DataFrame(
        {
            "domain": ["Politics"],
            "horizon_bin": [4],
            "size_bin": [0],
            "n": [500],
            "a": [0.0],
            "b": [1.83],
            "se_a": [0.1],
            "se_b": [0.1],
            "loglik": [-300.0],
            "converged": [True],
        }
    ).write_csv(cells)
    batch = tmp_path / "batch.csv"
    pl.DataFrame(
        {"price": [0.7], "domain": ["Politics"], "horizon_bin": [4], "size_bin": [0]}
    ).write_csv(batch)
    code = main(
        ["recalibrate", "--batch", str(batch), "--cells", str(cells), "--output-dir", str(tmp_path)]
    )
    assert code == 0
    out = pl.read_csv(tmp_path / "recalibrated.csv")
    assert out["recalibrated"].item() == pytest.approx(0.8250, abs=1e-4)


def test_writer_discards_partial_outputs(tmp_path) -> None:
    writer = ArtifactWriter(tmp_path, "fit-cells")
    path = writer.csv("cells.csv", pl.DataFrame({"x": [1]}))
    assert path.exists()
    writer.discard()
    assert not path.exists()
    assert writer.written == []


def test_manifest_keeps_other_commands(tmp_path) -> None:
    cfg = PipelineConfig(output_dir=tmp_path)
    first = ArtifactWriter(tmp_path, "synth")
    first.csv("a.csv", pl.DataFrame({"x": [1]}))
    first.manifest(cfg, 1)
    second = ArtifactWriter(tmp_path, "decompose")
    second.csv("b.csv", pl.DataFrame({"x": [2]}))
    second.manifest(cfg, 2, {"total_r2": 0.5})
    runs = json.loads((tmp_path / "manifest.json").read_text())["runs"]
    assert runs["synth"]["seed"] == 1
    assert runs["decompose"]["total_r2"] == 0.5
    assert list(runs["decompose"]["artifacts"]) == ["b.csv"]


def test_compare_platform_with_itself(tmp_path, synth_dir) -> None:
    config = _config(tmp_path, synth_dir)
    assert main(["compare-platforms", "--config", str(config), "--config-b", str(config)]) == 0
    out = tmp_path / "out"
    cells = pl.read_csv(out / "compare.csv")
    assert cells.height == 72
    assert cells["delta"].abs().max() == 0.0
    horizon = pl.read_csv(out / "compare_horizon.csv")
    assert horizon.height == 18
    assert set(horizon["domain"]) == {"Sports", "Politics"}
    assert horizon["delta"].abs().max() == 0.0
    assert horizon["slope_a"].to_list() == horizon["slope_b"].to_list()
    assert "size_bin" not in horizon.columns
    scale = pl.read_csv(out / "compare_scale.csv")
    assert set(scale["variant"]) == {"within_horizon", "aggregate"}
    assert set(scale["platform"]) == {"a", "b"}


def test_robustness_sweep(tmp_path, synth_dir, capsys) -> None:
    config = _config(
        tmp_path,
        synth_dir,
        "[robustness]\n"
        "price_ranges = [[5, 95], [10, 90]]\n"
        "regularization = [1.0, 100.0]\n"
        "volume_min_trades_per_market = 5\n",
    )
    assert main(["robustness", "--config", str(config)]) == 0
    table = pl.read_csv(tmp_path / "out" / "robustness.csv")
    assert table["variant"].to_list() == ["price_range"] * 4 + ["market_volume"]
    assert table.filter(pl.col("price_min") == 5)["missing_cells"].to_list()[0] == 0
    assert "Total R2 range" in capsys.readouterr().out


def test_undecodable_trade_line_is_ledgered(tmp_path, synth_dir) -> None:
    trades = synth_dir / "trades.csv"
    n_lines = len(trades.read_bytes().splitlines())
    with trades.open("ab") as f:
        f.write(b"\xff\xfe,50,1,yes,1\n")
    config = _config(tmp_path, synth_dir)

    assert main(["ingest-stats", "--config", str(config)]) == 0
    ledger = pl.read_csv(tmp_path / "out" / "ledger.csv")
    assert ledger["line"].to_list() == [n_lines + 1]
    assert "malformed_row" in ledger["reason"][0]


@pytest.mark.parametrize("argv", [[], ["fit-cells"], ["robustness"]])
def test_help_states_the_penalty_convention(argv, capsys) -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args([*argv, "--help"])
    text = " ".join(capsys.readouterr().out.split())
    assert "regularization_C" in text
    assert "(mean(w) / (2C))·b²" in text


def test_penalty_convention_is_in_the_config_schema() -> None:
    description = FitConfig.model_json_schema()["properties"]["regularization_C"]["description"]
    assert "mean(w) / (2C)" in description
    assert "b²/(2C)" in description
