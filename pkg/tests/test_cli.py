import csv
import json

import numpy as np
import pytest

from lscmf import io
from lscmf.cli import SIM_COLUMNS, main
from lscmf.pipeline import fit
from lscmf.simulate import builtin_scenario, estimated_partition, generate


def export(sim, root, fmt="csv"):
    layout = sim.spec.layout
    entries = []
    for m in sim.matrices:
        name = f"y_{m.key}.{fmt}"
        io.write_matrix(root / name, m.data)
        entries.append({"row_view": m.key.row_view, "col_view": m.key.col_view, "path": name, "format": fmt})
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"views": dict(layout.view_dims), "matrices": entries}))
    return manifest


@pytest.fixture(scope="module")
def scenario1():
    spec = builtin_scenario(1, dim_scale=4, seed=3)
    return generate(spec)


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_fit_writes_outputs(tmp_path, scenario1, fmt):
    manifest = export(scenario1, tmp_path, fmt)
    out = tmp_path / "out"
    assert main(["fit", str(manifest), str(out), "--format", fmt, "--threads", "1"]) == 0
    names = {p.name for p in out.iterdir()}
    assert {f"factors_{v}.{fmt}" for v in "123"} <= names
    assert {f"values_1_2.{fmt}", f"values_1_3.{fmt}", "graph.json", "summary.json", "diagnostics.json"} <= names
    graph = json.loads((out / "graph.json").read_text())
    values = io.read_matrix(out / f"values_1_2.{fmt}")
    assert values.shape == (1, len(graph["factors"]))


def test_exported_fit_matches_in_process(tmp_path, scenario1):
    manifest = export(scenario1, tmp_path)
    out = tmp_path / "out"
    assert main(["fit", str(manifest), str(out)]) == 0
    graph = json.loads((out / "graph.json").read_text())
    counts = {}
    for factor in graph["factors"]:
        counts[factor["class"]] = counts.get(factor["class"], 0) + 1
    direct = fit(scenario1.spec.layout, scenario1.matrices)
    assert dict(sorted(counts.items())) == estimated_partition(direct)


def test_disconnected_manifest(tmp_path, capsys):
    rng = np.random.default_rng(0)
    entries = []
    for a, b in (("1", "2"), ("3", "4")):
        io.write_matrix(tmp_path / f"{a}{b}.csv", rng.standard_normal((6, 5)))
        entries.append({"row_view": a, "col_view": b, "path": f"{a}{b}.csv"})
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"views": {"1": 6, "2": 5, "3": 6, "4": 5}, "matrices": entries}))
    out = tmp_path / "out"
    assert main(["fit", str(manifest), str(out)]) == 2
    assert "disconnected view graph" in capsys.readouterr().err
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []


def test_bad_manifest_and_busy_output(tmp_path, scenario1):
    assert main(["fit", str(tmp_path / "missing.json"), str(tmp_path / "o1")]) == 2
    (tmp_path / "m.json").write_text("{}")
    assert main(["fit", str(tmp_path / "m.json"), str(tmp_path / "o2")]) == 2
    manifest = export(scenario1, tmp_path)
    busy = tmp_path / "busy"
    busy.mkdir()
    (busy / "keep.txt").write_text("x")
    assert main(["fit", str(manifest), str(busy)]) == 2
    assert [p.name for p in busy.iterdir()] == ["keep.txt"]


def test_simulate_zero_reps(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--scenario", "1", "--reps", "0", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows == [list(SIM_COLUMNS)]


def test_simulate_rejects_unknown_scenario(tmp_path):
    assert main(["simulate", "--scenario", "7", "--reps", "1", "--out", str(tmp_path / "s.csv")]) == 2


def test_simulate_deterministic_apart_from_timings(tmp_path):
    def run(name):
        out = tmp_path / name
        assert main(["simulate", "--scenario", "3", "--dim-scale", "1", "--reps", "2", "--seed", "4",
                     "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        return [{k: v for k, v in r.items() if not k.endswith("_ms")} for r in rows]

    a, b = run("a.csv"), run("b.csv")
    assert a == b
    assert [r["seed"] for r in a] == ["4", "5"]
    json.loads(a[0]["estimated_partition"])


def test_simulate_appends(tmp_path):
    out = tmp_path / "s.csv"
    for _ in range(2):
        assert main(["simulate", "--scenario", "1", "--reps", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2
