import csv
import json
import os

import pytest
from unittest.mock import AsyncMock, patch

from eksmor.core.exceptions import ConfigError, ReductionError
from eksmor.main import build_parser, run
from eksmor.schemas.manifests import PortFailure, RomIndex
from eksmor.schemas.run_config import RunConfig
from tests.factories import SINGULAR_RC

DIVIDER = "R1 1 0 2\nR2 1 2 1\nR3 2 0 1\nI1 1 0 1\n"

RESISTIVE_CHAIN = """R1 1 0 1
R2 1 2 1
R3 2 3 1
R4 3 4 1
R5 4 5 1
R6 5 6 1
R7 6 0 2
R8 3 0 4
I1 1 0 1
I2 6 0 1
"""


@pytest.fixture
def netlist(tmp_path):
    path = tmp_path / "circuit.sp"
    path.write_text(SINGULAR_RC)
    return str(path)


def test_parser_maps_flags():
    args = build_parser().parse_args([
        "reduce", "--input", "c.sp", "--k", "4", "--ports", "ports.txt",
        "--add-cap", "1e-12", "--cap-skip", "3", "--dense-cap", "50",
    ])
    assert args.command == "reduce"
    assert (args.k, args.ports_file, args.add_cap, args.cap_skip, args.dense_oracle_cap) == (
        4, "ports.txt", 1e-12, 3, 50,
    )
    assert args.method is None


def test_synth_needs_a_seed():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["synth", "--out", "x.sp"])


def test_run_dispatches_to_command():
    command = AsyncMock(return_value={"mm": RomIndex(method="mm", k=2, rom_order=2, p=1, q=1, original_order=3)})
    with patch.dict("eksmor.main.COMMANDS", {"reduce": command}):
        assert run(["reduce", "--input", "c.sp", "--method", "mm"]) == 0
    cfg = command.await_args.args[0]
    assert cfg.method == "mm"
    assert cfg.input == "c.sp"


def test_conflicting_k_and_order_exit_2(capsys):
    assert run(["reduce", "--input", "c.sp", "--k", "2", "--order", "3"]) == 2
    assert "config:" in capsys.readouterr().err


def test_reduction_error_exits_1(capsys):
    command = AsyncMock(side_effect=ReductionError("pivot 0 at node 7", stage="regularize"))
    with patch.dict("eksmor.main.COMMANDS", {"reduce": command}):
        assert run(["reduce", "--input", "c.sp"]) == 1
    assert "regularize: pivot 0 at node 7" in capsys.readouterr().err


def test_failed_ports_exit_1():
    index = RomIndex(
        method="eks", k=1, rom_order=2, p=2, q=2, original_order=9,
        failures=[PortFailure(port=1, error="reduce: E is singular")],
    )
    with patch.dict("eksmor.main.COMMANDS", {"reduce": AsyncMock(return_value={"eks": index})}):
        assert run(["reduce", "--input", "c.sp"]) == 1


def test_config_file_precedence(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"k": 3, "npoints": 50, "method": "eks"}))
    cfg = RunConfig.from_sources({"k": 5, "npoints": None}, str(config))
    assert (cfg.k, cfg.npoints, cfg.method) == (5, 50, "eks")
    with pytest.raises(ConfigError):
        RunConfig.from_sources({}, str(tmp_path / "missing.json"))


@pytest.mark.parametrize("flags, message", [
    ({"add_cap": 1e-12}, "seed"),
    ({"fmin": 10.0, "fmax": 1.0}, "frequency range"),
    ({"k": 0}, "k must be"),
])
def test_invalid_configs(flags, message):
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_sources(flags)
    assert message in str(exc.value)


def test_order_resolution():
    cfg = RunConfig(order=5)
    mm, eks = cfg.resolve("mm"), cfg.resolve("eks")
    assert (mm.k, mm.rom_order) == (5, 5)
    assert (eks.k, eks.rom_order) == (3, 6)
    assert eks.warnings
    default = RunConfig()
    assert default.resolve("eks").rom_order == default.resolve("mm").rom_order == 2
    assert RunConfig(method="both").methods == ["mm", "eks"]


def test_reduce_end_to_end(tmp_path, netlist, capsys):
    out = str(tmp_path / "out")
    assert run(["reduce", "--input", netlist, "--k", "2", "--out", out]) == 0
    for method in ("mm", "eks"):
        with open(os.path.join(out, "roms", method, "index.json")) as f:
            index = json.load(f)
        assert index["ports"] == ["port_000"]
        assert index["regularization"]["eliminated_nodes"] == ["3"]
        assert os.path.exists(os.path.join(out, "roms", method, "port_000", "A.mtx"))
    assert os.path.exists(os.path.join(out, "permutation.csv"))
    with open(os.path.join(out, "timings.json")) as f:
        assert "reduce_eks" in json.load(f)["stages"]
    assert "ROM order 2" in capsys.readouterr().out


def test_compare_end_to_end(tmp_path, netlist):
    out = str(tmp_path / "out")
    code = run([
        "compare", "--input", netlist, "--order", "2",
        "--fmin", "0.01", "--fmax", "100", "--npoints", "7", "--out", out,
    ])
    assert code == 0
    with open(os.path.join(out, "summary.json")) as f:
        summary = json.load(f)
    assert summary["dimension"] == 3
    assert summary["regularization"]["applied"]
    assert set(summary["methods"]) == {"mm", "eks"}
    assert all(entry["max_error"] >= 0 for entry in summary["methods"].values())
    assert os.path.exists(os.path.join(out, "error_curve.csv"))
    with open(os.path.join(out, "curve_0_0.csv")) as f:
        header = f.readline().strip().split(",")
    assert header == ["omega", "abs_H", "abs_H_mm", "abs_err_mm", "abs_H_eks", "abs_err_eks"]


def test_moments_end_to_end(tmp_path, netlist):
    out = str(tmp_path / "out")
    assert run(["moments", "--input", netlist, "--method", "mm", "--k", "2", "--out", out]) == 0
    with open(os.path.join(out, "moments.csv")) as f:
        lines = f.read().splitlines()
    # three original moments and three from the single MM ROM
    assert len(lines) == 1 + 6


def test_moments_of_static_network(tmp_path):
    path = tmp_path / "divider.sp"
    path.write_text(DIVIDER)
    out = str(tmp_path / "out")
    assert run(["moments", "--input", str(path), "--method", "mm", "--k", "2", "--out", out]) == 0
    with open(os.path.join(out, "moments.csv")) as f:
        rows = [row for row in csv.DictReader(f) if row["source"] == "original"]
    values = [json.loads(row["value"]) for row in rows]
    assert values[0] != [0.0]
    assert values[1] == [0.0] and values[2] == [0.0]


def test_info(netlist, capsys):
    assert run(["info", "--input", netlist]) == 0
    output = capsys.readouterr().out
    assert "capacitance_free_nodes: 1" in output


def test_synth_then_compare(tmp_path):
    path = str(tmp_path / "rlc.sp")
    assert run([
        "synth", "--kind", "rlc", "--rows", "4", "--cols", "4", "--ports", "2",
        "--pads", "2", "--inductance", "1e-3", "--cap-free", "2", "--seed", "9", "--out", path,
    ]) == 0
    out = str(tmp_path / "out")
    assert run([
        "compare", "--input", path, "--order", "4",
        "--fmin", "0.01", "--fmax", "1e3", "--npoints", "9", "--out", out,
    ]) == 0
    with open(os.path.join(out, "summary.json")) as f:
        summary = json.load(f)
    assert summary["ports"] == 2
    assert summary["methods"]["eks"]["rom_order"] == 4


def test_synth_model_directory_round_trip(tmp_path):
    directory = str(tmp_path / "ladder")
    assert run([
        "synth", "--kind", "ladder", "--nodes", "30", "--ports", "2", "--seed", "1",
        "--format", "mm-dir", "--out", directory,
    ]) == 0
    out = str(tmp_path / "out")
    assert run(["reduce", "--input", directory, "--format", "mm-dir", "--method", "eks", "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "roms", "eks", "port_001", "manifest.json"))
    assert run(["reduce", "--input", directory, "--format", "mm-dir", "--add-cap", "1e-12",
                "--seed", "1", "--out", out]) == 2


def rom_files(out):
    root = os.path.join(out, "roms")
    files = {}
    for directory, _, names in os.walk(root):
        for name in names:
            path = os.path.join(directory, name)
            with open(path, "rb") as f:
                files[os.path.relpath(path, root)] = f.read()
    return files


def test_reduce_replays_from_manifest_run_record(tmp_path):
    path = tmp_path / "chain.sp"
    path.write_text(RESISTIVE_CHAIN)
    first, replayed, reseeded = (str(tmp_path / name) for name in ("first", "replayed", "reseeded"))
    flags = ["reduce", "--input", str(path), "--method", "eks", "--add-cap", "1.0", "--cap-skip", "2"]
    assert run([*flags, "--seed", "7", "--out", first]) == 0

    with open(os.path.join(first, "roms", "eks", "port_000", "manifest.json")) as f:
        record = json.load(f)["run"]
    assert (record["seed"], record["add_cap"], record["cap_skip"]) == (7, 1.0, 2)
    config = tmp_path / "replay.json"
    config.write_text(json.dumps(record))
    assert run(["reduce", "--config", str(config), "--out", replayed]) == 0
    assert rom_files(replayed) == rom_files(first)

    assert run([*flags, "--seed", "8", "--out", reseeded]) == 0
    with open(os.path.join(reseeded, "roms", "eks", "index.json")) as f:
        assert json.load(f)["run"]["seed"] == 8
    assert rom_files(reseeded)["eks/port_000/A.mtx"] != rom_files(first)["eks/port_000/A.mtx"]


def test_reduce_records_model_warnings(tmp_path):
    path = tmp_path / "divider.sp"
    path.write_text(DIVIDER + ".tran 1n 10n\n")
    out = str(tmp_path / "out")
    assert run(["reduce", "--input", str(path), "--method", "mm", "--out", out]) == 0
    with open(os.path.join(out, "roms", "mm", "index.json")) as f:
        warnings = json.load(f)["model_warnings"]
    assert any("unsupported directive .tran" in w for w in warnings)
    assert any("no capacitance or inductance" in w for w in warnings)
    with open(os.path.join(out, "roms", "mm", "port_000", "manifest.json")) as f:
        assert json.load(f)["model_warnings"] == warnings


def test_compare_reuses_roms_with_matching_settings(tmp_path, netlist):
    out = str(tmp_path / "out")
    grid = ["--fmin", "0.01", "--fmax", "100", "--npoints", "5"]
    assert run(["reduce", "--input", netlist, "--k", "2", "--out", out]) == 0
    assert run(["compare", "--input", netlist, "--k", "2", *grid, "--out", out]) == 0
    with open(os.path.join(out, "summary.json")) as f:
        assert all(entry["reused"] for entry in json.load(f)["methods"].values())
    with open(os.path.join(out, "timings.json")) as f:
        assert not any(stage.startswith("reduce_") for stage in json.load(f)["stages"])

    assert run([
        "compare", "--input", netlist, "--k", "2", "--add-cap", "1e-12", "--seed", "1", *grid,
        "--out", out,
    ]) == 0
    with open(os.path.join(out, "summary.json")) as f:
        assert not any(entry["reused"] for entry in json.load(f)["methods"].values())
