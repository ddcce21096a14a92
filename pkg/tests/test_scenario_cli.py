import copy
import json

import numpy as np
import pytest

from formation_mpc import ScenarioError
from formation_mpc.cli import main
from formation_mpc.scenario import (
    bundled_document_path,
    document_to_scenario,
    documents_equivalent,
    load_document,
    save_document,
)


@pytest.fixture()
def example1_doc():
    return load_document(bundled_document_path("example1"))


def test_round_trip(tmp_path, example1_doc):
    path = tmp_path / "roundtrip.yaml"
    save_document(example1_doc, path)
    reparsed = load_document(path)
    assert documents_equivalent(example1_doc, reparsed)
    a = document_to_scenario(example1_doc)
    b = document_to_scenario(reparsed)
    assert np.array_equal(a.graph.adjacency, b.graph.adjacency)
    assert np.array_equal(a.x0, b.x0)
    assert a.sliding[0].c == b.sliding[0].c
    assert a.setup[0].horizon == b.setup[0].horizon


def test_unknown_keys_rejected(tmp_path, example1_doc):
    doc = copy.deepcopy(example1_doc)
    doc["controller"]["bogus"] = 1
    path = tmp_path / "bad.yaml"
    save_document(doc, path)
    with pytest.raises(ScenarioError, match="controller.bogus"):
        load_document(path)

    doc = copy.deepcopy(example1_doc)
    doc["extra_section"] = {}
    save_document(doc, path)
    with pytest.raises(ScenarioError, match="extra_section"):
        load_document(path)


def test_missing_section_rejected(tmp_path, example1_doc):
    doc = copy.deepcopy(example1_doc)
    del doc["leader"]
    path = tmp_path / "missing.yaml"
    save_document(doc, path)
    with pytest.raises(ScenarioError, match="leader"):
        load_document(path)


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("meta: {name: x\n  seed: [unclosed\n")
    with pytest.raises(ScenarioError, match="line"):
        load_document(path)


def test_k_s_auto_requires_region(tmp_path, example1_doc):
    doc = copy.deepcopy(example1_doc)
    doc["controller"]["k_s"] = "auto"
    path = tmp_path / "auto.yaml"
    save_document(doc, path)
    with pytest.raises(ScenarioError, match="autotune_region"):
        document_to_scenario(load_document(path))


def test_k_s_auto_with_region(tmp_path, example1_doc):
    doc = copy.deepcopy(example1_doc)
    doc["controller"]["k_s"] = "auto"
    doc["controller"]["autotune_region"] = {
        "offset_lo": [-0.1, -0.1, -0.1],
        "offset_hi": [0.1, 0.1, 0.1],
        "xi_hat_lo": [-0.3, -0.1, -0.1],
        "xi_hat_hi": [0.3, 0.1, 0.1],
        "delta_hat_lo": [-0.2, 0.0, 0.0],
        "delta_hat_hi": [0.2, 0.0, 0.0],
        "s_hat_spread": 0.05,
    }
    path = tmp_path / "auto.yaml"
    save_document(doc, path)
    scenario = document_to_scenario(load_document(path))
    assert all(sp.k_s > 0 for sp in scenario.sliding)


def test_check_command_passes_for_bundled(capsys):
    rc = main(["check", str(bundled_document_path("example1"))])
    out = capsys.readouterr().out
    assert rc == 0
    assert "topology: PASS" in out
    assert "sliding-surface polynomial: PASS" in out


def test_check_command_fails_unpinned_graph(tmp_path, example1_doc, capsys):
    doc = copy.deepcopy(example1_doc)
    doc["graph"]["pinning"] = [0.0, 0.0, 0.0]
    path = tmp_path / "unpinned.yaml"
    save_document(doc, path)
    rc = main(["check", str(path)])
    assert rc == 1
    assert "topology: FAIL" in capsys.readouterr().out


def test_check_command_fails_non_hurwitz(tmp_path, example1_doc, capsys):
    doc = copy.deepcopy(example1_doc)
    doc["controller"]["lambda"] = [-1.0]
    path = tmp_path / "nothurwitz.yaml"
    save_document(doc, path)
    rc = main(["check", str(path)])
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out


def test_check_command_schema_error_exit_code(tmp_path, capsys):
    path = tmp_path / "junk.yaml"
    path.write_text("nonsense: {}\n")
    assert main(["check", str(path)]) == 2


def test_run_t_final_zero_header_only(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(
        [
            "run",
            str(bundled_document_path("example1")),
            "--out",
            str(out),
            "--t-final",
            "0",
            "--no-plots",
        ]
    )
    assert rc == 0
    states = (out / "states.csv").read_text().splitlines()
    assert len(states) == 2  # header plus the initial row
    telemetry = (out / "telemetry.csv").read_text().splitlines()
    assert len(telemetry) == 1  # header only


def test_run_records_overrides_and_hashes(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    args = [
        "run",
        str(bundled_document_path("example1")),
        "--t-final",
        "0.4",
        "--seed",
        "99",
        "--no-plots",
    ]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    summary_a = json.loads((out_a / "summary.json").read_text())
    summary_b = json.loads((out_b / "summary.json").read_text())
    assert summary_a["overrides"] == {"seed": 99, "t_final": 0.4}
    assert summary_a["csv_sha256"] == summary_b["csv_sha256"]


def test_demo_emits_figures_and_plotdata(tmp_path):
    out = tmp_path / "demo"
    rc = main(["demo", "example1", "--out", str(out), "--t-final", "0.4"])
    assert rc == 0
    for name in (
        "states.csv",
        "telemetry.csv",
        "diagnostics.csv",
        "summary.json",
        "plotdata_outputs.csv",
        "plotdata_errors.csv",
        "plotdata_controls.csv",
        "outputs.png",
        "errors.png",
        "controls.png",
        "faults.png",
    ):
        assert (out / name).exists(), name


def test_run_missing_file_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.yaml"), "--no-plots"]) == 2


def test_theorem2_section_reaches_diagnostics(tmp_path, example1_doc):
    doc = copy.deepcopy(example1_doc)
    doc["theorem2"] = {"kappa1": 1.0, "kappa2": 0.5, "rho_s": 0.2}
    doc["meta"]["t_final"] = 0.2
    path = tmp_path / "t2.yaml"
    save_document(doc, path)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out), "--no-plots"]) == 0
    diag = (out / "diagnostics.csv").read_text()
    assert "theorem2_rho_floor,0.1" in diag
    assert "theorem2_holds,True" in diag


def test_p_construction_flag(tmp_path):
    out = tmp_path / "lit"
    rc = main(
        [
            "demo",
            "example1",
            "--out",
            str(out),
            "--t-final",
            "0.2",
            "--no-plots",
            "--p-construction",
            "literal",
        ]
    )
    assert rc == 0
    diag = (out / "diagnostics.csv").read_text()
    assert "p_construction,literal" in diag
