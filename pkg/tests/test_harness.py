import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from spheregof.exceptions import EmptyAfterFilter, InvalidConfig, ParseError
from spheregof.harness import cli
from spheregof.harness.geomagia import ingest_geomagia_csv, run_real_data_analysis
from spheregof.harness.power import ExperimentSpec, PowerRow, PowerTable, run_power_study
from spheregof.harness.report import POWER_COLUMNS, emit_report, render_csv, render_json
from spheregof.harness.scenarios import (
    ACG_MATRIX, PRESETS, acg, acg_sigma, composite_alternatives, direction, mmf, preset,
    three_mode_alternatives, uniformity_alternatives, vmf,
)
from spheregof.samplers import MixtureVMF, Uniform, spec_to_dict
from spheregof.statistic import StableCF

pytestmark = pytest.mark.filterwarnings("ignore:b=19 replicates:RuntimeWarning")

FIXTURE = Path(__file__).parent / "data" / "geomagia_synthetic.csv"


def small_spec(**kw):
    base = dict(scenarios=[vmf(0.0), vmf(1.0)], null=Uniform(3), kernels=[StableCF(1.0), StableCF(5.0)],
                n=20, m=40, b=19, replications=6, seed=11)
    base.update(kw)
    with pytest.warns(RuntimeWarning):
        return ExperimentSpec(**base)


# scenarios

def test_named_directions():
    assert np.array_equal(direction("mu1"), [1.0, 0.0, 0.0])
    assert np.array_equal(direction("-mu1"), [-1.0, 0.0, 0.0])
    assert np.allclose(direction("one", 4), 0.5)
    assert np.allclose(direction("mu2"), np.array([-1.0, 1.0, 1.0]) / math.sqrt(3))
    with pytest.raises(KeyError):
        direction("mu7")


def test_acg_matrices():
    assert np.array_equal(acg_sigma(0), np.diag([1.0, 2.0, 3.0]))
    a2 = ACG_MATRIX * ACG_MATRIX
    assert np.allclose(acg_sigma(2), a2.T @ a2)
    for ell in range(5):
        s = acg_sigma(ell)
        assert np.allclose(s, s.T) and np.linalg.eigvalsh(s).min() > 0
    with pytest.raises(ValueError):
        acg_sigma(5)


def test_scenario_labels():
    assert vmf(0.5).label == "vMF(mu1,0.5)"
    sc = mmf((0.5, 0.5), ("-mu1", "mu1"), (2, 2))
    assert sc.label == "MMF((0.5,0.5),(-mu1,mu1),(2,2))"
    assert isinstance(sc.spec, MixtureVMF)
    assert acg(3).label == "ACG3"
    for rows in (uniformity_alternatives(), three_mode_alternatives(), composite_alternatives()):
        labels = [r.label for r in rows]
        assert len(labels) == len(set(labels))


@pytest.mark.parametrize("name", PRESETS)
def test_presets_are_valid_experiments(name):
    spec = ExperimentSpec.from_dict(preset(name))
    assert spec.replications >= 500 and spec.n == 50
    with pytest.raises(KeyError):
        preset("table9")


# experiment spec and power tables

def test_experiment_validation():
    with pytest.raises(InvalidConfig):
        ExperimentSpec([vmf(1.0)], Uniform(3), [StableCF(1.0)], replications=0)
    with pytest.raises(InvalidConfig):
        ExperimentSpec([vmf(1.0), vmf(1.0)], Uniform(3), [StableCF(1.0)])
    with pytest.raises(InvalidConfig):
        ExperimentSpec([vmf(1.0)], "bingham", [StableCF(1.0)])
    with pytest.raises(InvalidConfig):
        ExperimentSpec([vmf(1.0, d=4)], Uniform(3), [StableCF(1.0)])
    with pytest.raises(InvalidConfig):
        ExperimentSpec.from_dict({"null": "vmf"})


def test_experiment_dict_round_trip():
    spec = ExperimentSpec([vmf(1.0), acg(2)], "acg", [StableCF(0.5)], m_values=(10, 20))
    again = ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again.to_dict() == spec.to_dict()


def test_single_replication():
    table = run_power_study(small_spec(replications=1))
    assert len(table.rows) == 4
    for row in table.rows:
        assert row.replications == 1 and row.rejections in (0, 1)
        assert row.rate in (0.0, 1.0) and row.se == 0.0


def test_power_table_invariants():
    table = run_power_study(small_spec())
    for row in table.rows:
        assert 0.0 <= row.rate <= 1.0
        assert row.rate == row.rejections / row.replications
        assert row.se == pytest.approx(math.sqrt(row.rate * (1 - row.rate) / row.replications), abs=0)
    assert table.lookup("vMF(mu1,1)", "stable(xi=2,gamma=5)").n == 20


def test_power_study_independent_of_chunking_and_workers():
    spec = small_spec()
    ref = render_csv(run_power_study(spec))
    assert render_csv(run_power_study(spec, chunk=1)) == ref
    assert render_csv(run_power_study(spec, workers=2, chunk=2)) == ref


def test_m_sweep_rows():
    table = run_power_study(small_spec(m_values=(10, 40), replications=2))
    assert sorted({r.m for r in table.rows}) == [10, 40]


def test_partial_results_flushed_on_abort():
    spec = small_spec()
    seen = []

    def progress(done, total):
        if done >= 2:
            raise KeyboardInterrupt

    with pytest.raises(KeyboardInterrupt):
        run_power_study(spec, chunk=2, progress=progress, on_abort=seen.append)
    assert len(seen) == 1
    assert {r.replications for r in seen[0].rows} == {2}


def test_composite_power_study_runs():
    spec = ExperimentSpec([vmf(1.0)], "vmf", [StableCF(0.5)], n=30, m=40, b=99, replications=2, seed=3)
    row = run_power_study(spec).rows[0]
    assert row.replications + row.failures == 2


# reports

def test_empty_table_is_header_only_csv():
    assert render_csv(PowerTable()) == ",".join(POWER_COLUMNS) + "\n"


def test_one_row_table_is_two_line_csv(tmp_path):
    table = PowerTable((PowerRow("vMF(mu1,1)", "stable(xi=2,gamma=1)", 50, 500, 89, 100),))
    path = tmp_path / "t.csv"
    emit_report(table, "csv", path)
    text = path.read_text()
    assert text.count("\n") == 2
    rec = next(csv.DictReader(io.StringIO(text)))
    assert rec["rate"] == "0.89" and rec["rejections"] == "89"


def test_reports_are_byte_stable(tmp_path):
    table = run_power_study(small_spec(replications=2))
    for fmt in ("csv", "json"):
        a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
        emit_report(table, fmt, a)
        emit_report(table, fmt, b)
        assert a.read_bytes() == b.read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["schema_version"] == 1 and doc["kind"] == "power_table"
    assert ExperimentSpec.from_dict(doc["experiment"]).to_dict() == doc["experiment"]
    with pytest.raises(ValueError):
        emit_report(table, "xml", tmp_path / "x")


# GEOMAGIA ingestion

def test_fixture_ingest():
    x, records = ingest_geomagia_csv(FIXTURE)
    assert x.n == 20 and x.d == 3 and len(records) == 20
    assert np.allclose(np.linalg.norm(x.data, axis=1), 1.0, atol=1e-12)
    assert records[0].age == 1250 and records[0].lat == pytest.approx(30.74)
    inc = np.radians(records[0].inc)
    assert x.data[0, 0] == pytest.approx(np.sin(inc))


def test_fixture_age_filter():
    x, records = ingest_geomagia_csv(FIXTURE, age_filter=1250)
    assert x.n == 8 and all(r.age == 1250 for r in records)
    with pytest.raises(EmptyAfterFilter):
        ingest_geomagia_csv(FIXTURE, age_filter=999)


def test_out_of_range_inclination_names_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("age,dec,inc\n1250,10,20\n1250,10,95\n")
    with pytest.raises(ParseError) as info:
        ingest_geomagia_csv(p)
    assert info.value.row == 3 and info.value.column == "inc"
    assert "95" in str(info.value)


@pytest.mark.parametrize("text,col", [
    ("age,dec,inc\n1250,400,20\n", "dec"),
    ("age,dec,inc\n1250,abc,20\n", "dec"),
    ("age,dec,inc\n1250,10\n", "inc"),
])
def test_bad_fields(tmp_path, text, col):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ParseError) as info:
        ingest_geomagia_csv(p)
    assert info.value.row == 2 and info.value.column == col


def test_missing_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("age,declination,inc\n1,2,3\n")
    with pytest.raises(ParseError, match="dec"):
        ingest_geomagia_csv(p)


@pytest.mark.parametrize("sep", [";", "\t", "|", " "])
def test_delimiters(tmp_path, sep):
    rows = ["AGE", "Dec", "INC"], ["1250", "10.5", "20"], ["1300", "350", "-45.25"]
    p = tmp_path / "d.csv"
    p.write_text("\n".join(sep.join(r) for r in rows) + "\n")
    x, records = ingest_geomagia_csv(p)
    assert x.n == 2 and records[1].inc == -45.25


def test_real_data_on_fixture():
    rep = run_real_data_analysis(FIXTURE, "kent", [StableCF(0.5), StableCF(1.0)], b=99, m=50, seed=2)
    assert rep.n == 20 and rep.family == "kent" and rep.regime in ("unimodal", "bimodal")
    assert len(rep.outcomes) == 2 and all(0 < o.p_value <= 1 for o in rep.outcomes)
    text = render_csv([rep])
    header = next(csv.reader(io.StringIO(text)))
    assert header[-2:] == ["p[stable(xi=2,gamma=0.5)]", "p[stable(xi=2,gamma=1)]"]
    assert json.loads(render_json(rep))["kind"] == "real_data"


# CLI

def run_cli(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_sample_and_stat(tmp_path, capsys):
    spec = json.dumps(spec_to_dict(Uniform(3)))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(["sample", "--spec", spec, "-n", 15, "--seed", 1, "--out", a], capsys)[0] == 0
    assert run_cli(["sample", "--spec", spec, "-n", 10, "--seed", 2, "--out", b], capsys)[0] == 0
    x = cli.read_points(a)
    assert x.n == 15
    code, out, _ = run_cli(["stat", a, b, "--gamma", 0.5], capsys)
    assert code == 0 and json.loads(out)["n"] == 15


def test_cli_tests(tmp_path, capsys):
    pts = tmp_path / "x.csv"
    cli.main(["sample", "--spec", json.dumps(spec_to_dict(Uniform(3))), "-n", "30", "--out", str(pts)])
    code, out, _ = run_cli(["test-simple", pts, "--null", '{"type": "uniform", "d": 3}', "-m", 50, "-b", 99],
                           capsys)
    assert code == 0 and 0 < json.loads(out)["p_value"] <= 1
    code, out, _ = run_cli(["test-composite", pts, "--family", "vmf", "-m", 50, "-b", 99, "--gamma", 0.5], capsys)
    assert code == 0 and json.loads(out)["fitted"]["type"] == "vmf"


def test_cli_power_study(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    spec = ExperimentSpec([vmf(1.0)], Uniform(3), [StableCF(1.0)], n=20, m=40, b=99, replications=3, seed=1)
    cfg.write_text(json.dumps(spec.to_dict()))
    out_csv, out_json = tmp_path / "p.csv", tmp_path / "p.json"
    code, _, _ = run_cli(["power-study", "--config", f"@{cfg}", "--replications", 2, "--workers", 1,
                          "--csv", out_csv, "--json", out_json, "--quiet"], capsys)
    assert code == 0
    assert out_csv.read_text().count("\n") == 2
    assert json.loads(out_json.read_text())["experiment"]["replications"] == 2


def test_cli_ingest_and_real_data(tmp_path, capsys):
    out = tmp_path / "pts.csv"
    code, _, err = run_cli(["ingest", FIXTURE, "--age", 1250, "--out", out], capsys)
    assert code == 0 and "8 records" in err and cli.read_points(out).n == 8
    code, text, _ = run_cli(["real-data", FIXTURE, "--family", "vmf", "--gammas", "0.5", "-b", 99, "-m", 50],
                            capsys)
    assert code == 0 and text.startswith("sample,family,n,kappa")


def test_cli_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["sample"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == 1
    assert run_cli(["sample", "--spec", "{not json", "-n", 3], capsys)[0] == 1
    assert run_cli(["sample", "--spec", '{"type": "vmf", "theta": [1, 0, 0], "kappa": -1}', "-n", 3], capsys)[0] == 1
    assert run_cli(["power-study"], capsys)[0] == 1


def test_cli_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("age,dec,inc\n1250,10,95\n")
    code, _, err = run_cli(["ingest", bad], capsys)
    assert code == 2 and "row 2" in err
    assert run_cli(["ingest", tmp_path / "missing.csv"], capsys)[0] == 2
    off = tmp_path / "off.csv"
    off.write_text("x1,x2,x3\n1,1,0\n")
    assert run_cli(["stat", off, off], capsys)[0] == 2


def test_cli_numeric_failure(tmp_path, capsys):
    pts = tmp_path / "anti.csv"
    pts.write_text("x1,x2,x3\n1,0,0\n-1,0,0\n")
    code, _, err = run_cli(["test-composite", pts, "--family", "vmf", "-b", 99], capsys)
    assert code == 3 and "numerical failure" in err
