"""Config parsing, overrides, exit codes and scenario manifests."""

import hashlib
import json

import numpy as np
import pytest

from quenchlab.cli import _worker_count, main
from quenchlab.config import (
    ConfigError,
    apply_overrides,
    parse_config,
)
from quenchlab.scenarios import emit_plot, run_scenario


def test_empty_config_defaults():
    cfg = parse_config()
    assert cfg.model["delta_steep"] == 5.0
    assert cfg.model["k_halfwidth"] == 10.0 * np.pi
    assert cfg.model["k"] == 0.5
    assert cfg.model["gamma"] == -1.0
    assert cfg.numerics["eta"] == 0.2
    assert cfg.grid["n_x"] == 1024


def test_config_echo_roundtrip():
    cfg = parse_config(text="[model]\ngamma = 2.0\n")
    echo = cfg.echo()
    assert "[model]" in echo and "gamma = 2.0" in echo
    # the echo is itself parseable and reproduces the same config
    again = parse_config(text=echo.replace("'", ""))
    assert again.model == cfg.model
    assert again.grid == cfg.grid


def test_config_rejects_bad_nx_with_line_context():
    text = "[grid]\nn_x = 1000\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text=text)
    msg = str(err.value)
    assert "n_x" in msg and "power of two" in msg
    assert "line 2" in msg


def test_config_rejects_unknowns():
    with pytest.raises(ConfigError):
        parse_config(text="[model]\nviscosity = 1.0\n")
    with pytest.raises(ConfigError):
        parse_config(text="[turbulence]\nre = 100\n")
    with pytest.raises(ConfigError):
        parse_config(text="[model]\ndelta_steep = -3\n")
    with pytest.raises(ConfigError):
        parse_config(text="not ini at all [")


def test_config_cross_validation():
    with pytest.raises(ConfigError):
        parse_config(text="[grid]\nm = 10.0\n")  # m <= quench half-width


def test_overrides():
    cfg = parse_config()
    cfg = apply_overrides(cfg, ["model.gamma=2.0", "grid.n_x=256"])
    assert cfg.model["gamma"] == 2.0
    assert cfg.grid["n_x"] == 256
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["gamma=2.0"])  # missing section
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["model.gamma"])  # missing value
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["grid.n_x=999"])


def test_worker_count(monkeypatch):
    monkeypatch.delenv("QUENCH_LAB_THREADS", raising=False)
    assert _worker_count() == 1
    monkeypatch.setenv("QUENCH_LAB_THREADS", "4")
    assert _worker_count() == 4
    monkeypatch.setenv("QUENCH_LAB_THREADS", "abc")
    assert _worker_count() == 1
    monkeypatch.setenv("QUENCH_LAB_THREADS", "-2")
    assert _worker_count() == 1


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["speeds", "--out", str(out)]) == 0
    assert "speeds" in capsys.readouterr().out

    assert main(["speeds", "--override", "grid.n_x=1000",
                 "--out", str(out)]) == 2
    assert "config error" in capsys.readouterr().err

    # branch-point tracking over a c-range with no crossing
    assert main(["fig4-branches", "--override", "scenario.c_from=1.20",
                 "--override", "scenario.c_to=1.25",
                 "--out", str(tmp_path / "bad")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_manifest_digests_and_determinism(tmp_path):
    cfg = parse_config()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    man1 = run_scenario("speeds", cfg, out1)
    man2 = run_scenario("speeds", cfg, out2)

    # digests in the manifest match the bytes on disk
    for name, digest in man1.files.items():
        actual = hashlib.sha256((out1 / name).read_bytes()).hexdigest()
        assert actual == digest
    # identical configs produce byte-identical artifacts
    assert man1.files == man2.files
    assert man1.config_hash == man2.config_hash

    saved = json.loads((out1 / "manifest.json").read_text())
    assert saved["scenario"] == "speeds"
    assert saved["files"] == man1.files

    with pytest.raises(ValueError):
        run_scenario("nope", cfg, tmp_path / "c")


def test_emit_plot_csv_twin(tmp_path):
    path = tmp_path / "curve.png"
    emit_plot({"x": np.array([0.0, 1.0, 2.0]),
               "curves": {"f": np.array([1.0, 4.0, 9.0])},
               "xlabel": "c"}, "curves", path)
    assert path.exists()
    rows = (tmp_path / "curve.csv").read_text().strip().splitlines()
    assert rows[0] == "c,f"
    assert [float(v) for v in rows[2].split(",")] == [1.0, 4.0]
    with pytest.raises(ValueError):
        emit_plot({"x": np.array([]), "curves": {}}, "curves",
                  tmp_path / "e.png")
    with pytest.raises(ValueError):
        emit_plot({}, "sankey", tmp_path / "s.png")
