import json
from pathlib import Path

import numpy as np
import pytest

from bilayer_hom.cli import main
from bilayer_hom.config import RunConfig
from bilayer_hom.errors import ConfigError
from bilayer_hom.export import fmt, read_pgm

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, **overrides):
    data = json.loads((CONFIGS / "e1_sweep.json").read_text())
    data.update(overrides)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# seed=")
    header = lines[1].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[2:]]


@pytest.mark.parametrize("overrides,name", [
    ({"lambda": 1.0}, "lambda_range"),
    ({"lambda": 0.0}, "lambda_range"),
    ({"epsilon_list": [0.1, -0.05]}, "epsilon_positive"),
    ({"tau": -0.1}, "tau_nonnegative"),
    ({"tau": 0.2, "slip": [1, 1], "gamma_profile": {"breakpoints": None, "values": [0.0]}},
     "tau_requires_e1"),
    ({"epsilon_list": []}, "epsilon_list_empty"),
    ({"bogus": 1}, "unknown_key"),
])
def test_config_validation_names(tmp_path, overrides, name, capsys):
    p = write_config(tmp_path, **overrides)
    with pytest.raises(ConfigError) as info:
        RunConfig.load(p).validate()
    assert info.value.name == name
    assert main(["sweep", "--config", str(p), "--quiet"]) == 1
    assert f"[{name}]" in capsys.readouterr().err


def test_config_roundtrip():
    cfg = RunConfig.load(CONFIGS / "diag_nested.json")
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(float("inf")) == "inf" and fmt(None) == "" and fmt(True) == "true"


def test_membership_command(tmp_path):
    assert main(["membership", "--config", str(CONFIGS / "membership.json"),
                 "--out", str(tmp_path), "--quiet"]) == 0
    _, rows = read_rows(tmp_path / "membership.csv")
    assert [rows[0][k] for k in ("SO2", "Ms", "Ns", "Me1capNs")] == ["true"] * 4
    assert rows[1]["Me1capNs"] == "false"
    assert rows[3]["Ms"] == "false" and rows[3]["Ns"] == "false"


def test_laminate_command(tmp_path):
    assert main(["laminate", "--config", str(CONFIGS / "laminate.json"),
                 "--out", str(tmp_path), "--quiet"]) == 0
    _, rows = read_rows(tmp_path / "laminate.csv")
    assert rows[0]["degenerate"] == "true"
    assert rows[1]["degenerate"] == "false"
    assert all(float(r["residual"]) <= 1e-10 for r in rows)


def test_sweep_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = str(CONFIGS / "e1_sweep.json")
    assert main(["sweep", "--config", cfg, "--out", str(a), "--quiet"]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(b), "--quiet"]) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    header, rows = read_rows(a / "sweep.csv")
    assert header == ["epsilon", "h", "energy", "hom_energy", "gap", "ledger"]
    assert all(abs(float(r["gap"])) <= 1e-12 for r in rows)


def test_sweep_nested_with_pgm(tmp_path):
    assert main(["sweep", "--config", str(CONFIGS / "diag_nested.json"),
                 "--out", str(tmp_path), "--quiet"]) == 0
    _, rows = read_rows(tmp_path / "sweep.csv")
    assert all(float(r["ledger"]) > 0 for r in rows)
    img = read_pgm(tmp_path / "sweep_eps0.pgm")
    assert img.shape == (256, 256)
    meta = (tmp_path / "sweep_eps0.pgm.meta.txt").read_text()
    assert "min=" in meta and "max=" in meta


def test_recover_raster_csv(tmp_path):
    p = write_config(tmp_path, outputs={"raster_csv": True, "resolution": [4, 8]})
    assert main(["recover", "--config", str(p), "--out", str(tmp_path), "--quiet"]) == 0
    header, rows = read_rows(tmp_path / "recover_raster.csv")
    assert header == ["x", "y", "A11", "A12", "A21", "A22"] and len(rows) == 32


def test_cell_command(tmp_path):
    assert main(["cell", "--config", str(CONFIGS / "cell.json"),
                 "--out", str(tmp_path), "--quiet"]) == 0
    _, rows = read_rows(tmp_path / "cell.csv")
    assert float(rows[0]["gap"]) == pytest.approx(0, abs=1e-12)
    assert rows[3]["ansatz"] == "inf"


def test_rigidity_command(tmp_path):
    assert main(["rigidity", "--config", str(CONFIGS / "rigidity.json"),
                 "--out", str(tmp_path), "--quiet", "--seed", "3"]) == 0
    _, bounds = read_rows(tmp_path / "bounds.csv")
    assert float(bounds[0]["rhs"]) == pytest.approx(1 / 3, abs=1e-15)
    assert all(float(b["ratio"]) <= 1 + 1e-12 for b in bounds)
    assert len(bounds) == 22
    _, trace = read_rows(tmp_path / "trace.csv")
    np.testing.assert_allclose([float(t["theta"]) for t in trace], [0, 0.1, 0.2, 0.3, 0.4])


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    import bilayer_hom.cli as cli
    monkeypatch.setattr(cli, "CELL_GAP_RANGE", (-1.0, -0.5))
    p = write_config(tmp_path, matrices=[[[1, 0.3], [0, 1]]])
    assert main(["cell", "--config", str(p), "--quiet"]) == 2


def test_missing_config_is_config_error(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.json"), "--quiet"]) == 1
