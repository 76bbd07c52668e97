import json

import numpy as np
import pytest

from src.cli.repro import match_up_to_relabeling, run_experiment, values_near
from src.main import main

M3_PLUS = np.array([[2.0, 1.0, 0.0], [0.0, 2.0, 1.0], [1.0, 0.0, 2.0]])


def test_relabeling_match():
    p = [2, 0, 1]
    gap, ok = match_up_to_relabeling(M3_PLUS[np.ix_(p, p)], M3_PLUS, 1e-12)
    assert ok
    assert gap == 0.0


def test_values_near():
    assert values_near([0.68, 0.7205, 0.72], (0.68, 0.72), 5e-3) == pytest.approx(5e-4)


def test_flat_bounds_passes(tmp_path, capsys):
    assert run_experiment("flat_bounds", out=tmp_path) == 0

    out = capsys.readouterr().out
    assert out.startswith("flat_bounds: PASS")
    report = json.loads((tmp_path / "flat_bounds.json").read_text())
    assert report["passed"]
    assert report["checks"][0]["observed"] == 0.54


def test_unknown_experiment():
    assert main(["repro", "sec99"]) == 2


@pytest.mark.slow
def test_three_graph_recipe():
    assert main(["repro", "sec41_m3"]) == 0


@pytest.mark.slow
def test_four_graph_recipe(tmp_path):
    assert run_experiment("sec41_m4", out=tmp_path) == 0

    report = json.loads((tmp_path / "sec41_m4.json").read_text())
    assert [c["passed"] for c in report["checks"]] == [True, True]


@pytest.mark.slow
def test_simulation_recipe(tmp_path):
    assert run_experiment("sec42_sim", out=tmp_path) == 0

    report = json.loads((tmp_path / "sec42_sim.json").read_text())
    assert len(report["checks"]) == 6
    assert len(report["notes"]) == 6
