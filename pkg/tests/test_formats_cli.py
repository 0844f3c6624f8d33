import csv
import json

import numpy as np
import pytest

from metric_anova import formats
from metric_anova.cli import main
from metric_anova.core import GroupLayout, TwoWayLayout
from metric_anova.formats import DataError
from metric_anova.pattern_space import DistanceMatrix, MetricParams, PointPattern, distance_matrix
from metric_anova.simulate import sample_csr


@pytest.fixture
def pattern_file(tmp_path, rng):
    pats = [sample_csr(8, rng=rng) for _ in range(8)]
    pats[3] = PointPattern.empty()
    ids = [f"q{i}" for i in range(8)]
    path = tmp_path / "pats.csv"
    formats.write_patterns_csv(path, ids, pats)
    return path, ids, pats


def write(path, text):
    path.write_text(text)
    return path


def labels_file(tmp_path, ids, groups, name="labels.csv"):
    path = tmp_path / name
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pattern_id", "group"] if not isinstance(groups[0], tuple) else
                   ["pattern_id", "factorA", "factorB"])
        for i, g in zip(ids, groups):
            w.writerow([i, *g] if isinstance(g, tuple) else [i, g])
    return path


# ----------------------------------------------------------------- formats

def test_pattern_csv_round_trip_with_empty(pattern_file):
    path, ids, pats = pattern_file
    got_ids, got = formats.read_patterns(path)
    assert got_ids == ids
    assert len(got[3]) == 0
    for a, b in zip(pats, got):
        assert np.array_equal(a.points, b.points)


def test_pattern_json_round_trip(tmp_path, pattern_file):
    _, ids, pats = pattern_file
    path = tmp_path / "pats.json"
    formats.write_patterns_json(path, ids, pats)
    got_ids, got = formats.read_patterns(path)
    assert got_ids == ids and all(np.array_equal(a.points, b.points) for a, b in zip(pats, got))


@pytest.mark.parametrize("body,line", [
    ("pattern_id,x,y\na,0.1,0.2\na,0.3\n", ":3"),
    ("pattern_id,x,y\na,0.1,zz\n", ":2"),
    ("pattern_id,x,y\na,nan,0.1\n", ":2"),
    ("id,x,y\na,0.1,0.2\n", ":1"),
])
def test_malformed_pattern_csv_reports_line(tmp_path, body, line):
    path = write(tmp_path / "bad.csv", body)
    with pytest.raises(DataError, match=line):
        formats.read_patterns(path)


def test_manifest_must_cover_ids(tmp_path):
    path = write(tmp_path / "p.csv", "pattern_id,x,y\na,0.1,0.2\nb,0.3,0.3\n")
    write(tmp_path / "p.manifest.csv", "pattern_id\na\n")
    with pytest.raises(DataError):
        formats.read_patterns(path)


def test_bad_json(tmp_path):
    with pytest.raises(DataError):
        formats.read_patterns(write(tmp_path / "p.json", "[{"))
    with pytest.raises(DataError):
        formats.read_patterns(write(tmp_path / "p.json", '[{"id": 1}]'))


def test_distance_csv_round_trip_exact(tmp_path, pattern_file):
    path, ids, pats = pattern_file
    D = distance_matrix(pats, MetricParams(), ids=ids)
    out = tmp_path / "d.csv"
    formats.write_distance_csv(out, D)
    back = formats.read_distance_csv(out)
    assert back.ids == tuple(ids) and np.array_equal(back.data, D.data)


def test_distance_csv_errors(tmp_path):
    with pytest.raises(DataError, match=":3"):
        formats.read_distance_csv(write(tmp_path / "d.csv", "a,b\n0,1\n1\n"))
    with pytest.raises(DataError):
        formats.read_distance_csv(write(tmp_path / "d.csv", "a,b\n0,1\n2,0\n"))
    with pytest.raises(DataError):
        formats.read_distance_csv(write(tmp_path / "d.csv", "a,b\n0,1\n"))


def test_labels_align_and_layouts(tmp_path):
    path = labels_file(tmp_path, ["b", "a", "c", "d"], ["x", "y", "x", "y"])
    ids, cols = formats.read_labels_csv(path)
    aligned = formats.align_labels(["a", "b", "c", "d"], ids, cols)
    assert aligned == [["y", "x", "x", "y"]]
    layout = formats.layout_from_columns(aligned)
    assert isinstance(layout, GroupLayout) and layout.sizes.tolist() == [2, 2]
    with pytest.raises(DataError):
        formats.align_labels(["a", "zz"], ids, cols)
    two = formats.layout_from_columns([["1", "1", "2", "2"], ["u", "v", "u", "v"]])
    assert isinstance(two, TwoWayLayout)
    with pytest.raises(DataError):
        formats.layout_from_columns([["1", "1", "2", "2"], ["u", "u", "u", "v"]])


def test_scalar_csv(tmp_path):
    path = write(tmp_path / "s.csv", "id,value,group\na,1.5,g\nb,2,h\n")
    ids, vals, cols = formats.read_scalar_csv(path)
    assert ids == ["a", "b"] and vals.tolist() == [1.5, 2.0] and cols == [["g", "h"]]


# --------------------------------------------------------------------- CLI

def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_dist_then_mds(tmp_path, pattern_file, capsys):
    path, ids, pats = pattern_file
    out = tmp_path / "d.csv"
    code, _, _ = run(["dist", path, "-o", out, "--C", "0.2"], capsys)
    assert code == 0
    D = formats.read_distance_csv(out)
    assert np.array_equal(D.data, distance_matrix(pats, MetricParams(C=0.2)).data)
    # the empty pattern sits at distance C * sqrt(|other|)
    assert D.data[3, 0] == pytest.approx(0.2 * np.sqrt(len(pats[0])))
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
    assert meta["C"] == 0.2
    code, stdout, err = run(["mds", out, "--dims", "2"], capsys)
    assert code == 0 and stdout.splitlines()[0] == "pattern_id,dim1,dim2"
    assert "negative_mass" in json.loads(err)


def test_cli_adaptive_cutoff(tmp_path, pattern_file, capsys):
    path, _, pats = pattern_file
    out = tmp_path / "d.csv"
    assert run(["dist", path, "-o", out, "--adaptive-cutoff"], capsys)[0] == 0
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
    mean = np.mean([len(p) for p in pats])
    assert meta["C"] == pytest.approx(0.25 * 35 / mean)


def test_cli_test_is_deterministic(tmp_path, pattern_file, capsys):
    path, ids, _ = pattern_file
    labels = labels_file(tmp_path, ids, ["a"] * 4 + ["b"] * 4)
    o1, o2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run(["test", path, labels, "--statistic", "anderson", "--M", "99", "--seed", "3", "-o", o1], capsys)[0] == 0
    assert run(["--seed", "3", "test", path, labels, "--statistic", "anderson", "--M", "99", "-o", o2], capsys)[0] == 0
    assert o1.read_bytes() == o2.read_bytes()
    rec = json.loads(o1.read_text())["results"][0]
    assert rec["M"] == 99 and 0 < rec["p_value"] <= 1


def test_cli_test_on_matrix_and_chi2(tmp_path, pattern_file, capsys):
    path, ids, _ = pattern_file
    labels = labels_file(tmp_path, ids, ["a"] * 4 + ["b"] * 4)
    dm = tmp_path / "d.csv"
    run(["dist", path, "-o", dm], capsys)
    code, stdout, _ = run(["test", dm, labels, "--statistic", "levene_ltilde", "--mode", "chi2"], capsys)
    rec = json.loads(stdout)["results"][0]
    assert code in (0, 3) and rec["df"] == 1
    if code == 0:
        assert 0 <= rec["p_value"] <= 1
    code, _, err = run(["test", dm, labels, "--statistic", "anderson", "--mode", "chi2"], capsys)
    assert code == 1 and "chi2" in err


def test_cli_two_way(tmp_path, rng, capsys):
    pats = [sample_csr(10, rng=rng) for _ in range(12)]
    ids = [f"s{i}" for i in range(12)]
    path = tmp_path / "p.json"
    formats.write_patterns_json(path, ids, pats)
    groups = [(str(i // 6), str((i // 3) % 2)) for i in range(12)]
    labels = labels_file(tmp_path, ids, groups)
    code, stdout, _ = run(["test", path, labels, "--statistic", "two_way", "--M", "19"], capsys)
    assert code == 0
    names = [r["statistic"] for r in json.loads(stdout)["results"]]
    assert names == ["L", "La", "Lb", "Li"]


def test_cli_degenerate_exit(tmp_path, capsys):
    p = PointPattern([[0.5, 0.5]])
    path = tmp_path / "p.csv"
    formats.write_patterns_csv(path, ["a", "b", "c", "d"], [p] * 4)
    labels = labels_file(tmp_path, ["a", "b", "c", "d"], ["x", "x", "y", "y"])
    code, stdout, _ = run(["test", path, labels, "--statistic", "anderson", "--M", "9"], capsys)
    assert code == 3
    assert "degenerate" in json.loads(stdout)["results"][0]["flags"]


def test_cli_errors(tmp_path, pattern_file, capsys):
    path, ids, _ = pattern_file
    assert run(["frobnicate"], capsys)[0] == 1
    assert run(["dist", tmp_path / "missing.csv"], capsys)[0] == 2
    bad = write(tmp_path / "bad.csv", "pattern_id,x,y\na,1,oops\n")
    code, _, err = run(["dist", bad], capsys)
    assert code == 2 and ":2" in err
    labels = labels_file(tmp_path, ids, ["a"] * 4 + ["b"] * 4)
    dm = tmp_path / "d.csv"
    run(["dist", path, "-o", dm], capsys)
    assert run(["test", dm, labels, "--statistic", "frechet_t"], capsys)[0] == 1


def test_cli_simulate(tmp_path, capsys):
    code, stdout, _ = run(["simulate", "csr", "--count", "0"], capsys)
    assert code == 0 and stdout.strip() == "pattern_id,x,y"
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["simulate", "scenario1", "--count", "5", "--seed", "4", "-o", out1], capsys)
    run(["simulate", "scenario1", "--count", "5", "--seed", "4", "-o", out2], capsys)
    assert out1.read_bytes() == out2.read_bytes()
    ids, pats = formats.read_patterns(out1)
    assert len(ids) == 5
    code, stdout, _ = run(["simulate", "strauss", "--param", "beta=40", "--param", "gamma=0",
                           "--count", "2", "--format", "json"], capsys)
    assert code == 0 and len(json.loads(stdout)) == 2
    assert run(["simulate", "bogus"], capsys)[0] == 1


def test_cli_config_file(tmp_path, capsys):
    cfg = write(tmp_path / "c.toml", 'seed = 9\n[simulate]\ncount = 3\nprefix = "z"\n')
    code, stdout, _ = run(["simulate", "csr", "--config", cfg], capsys)
    assert code == 0
    ids = {line.split(",")[0] for line in stdout.splitlines()[1:]}
    assert ids <= {"z0", "z1", "z2"}
    direct = run(["simulate", "csr", "--count", "3", "--prefix", "z", "--seed", "9"], capsys)[1]
    assert stdout == direct
    cfgj = write(tmp_path / "c.json", json.dumps({"simulate": {"count": 2}, "seed": 1}))
    # explicit flags beat config values
    lines = run(["simulate", "csr", "--config", cfgj, "--count", "1"], capsys)[1].splitlines()[1:]
    assert {line.split(",")[0] for line in lines} == {"p0"}
    bad = write(tmp_path / "bad.toml", "[simulate]\nnonsense = 1\n")
    assert run(["simulate", "csr", "--config", bad], capsys)[0] == 1


def test_cli_study_and_qq(tmp_path, capsys):
    out = tmp_path / "study.csv"
    code, _, _ = run(["study", "--preset", "table3", "--only", "0,1", "--n-per-group", "5",
                      "--replicates", "3", "--M", "19", "--statistics", "anderson,levene_l",
                      "-o", out], capsys)
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    assert [(r["column"], r["statistic"]) for r in rows] == [
        ("0", "anderson"), ("0", "levene_l"), ("1", "anderson"), ("1", "levene_l")]
    assert all(0 <= int(r["rejections"]) <= 3 for r in rows)
    code, stdout, err = run(["qq", "--n-per-group", "5", "--replicates", "20"], capsys)
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0] == "rank,value,chi2_quantile" and len(lines) <= 21
    assert json.loads(err)["df"] == 1
    assert run(["qq", "--statistic", "anderson"], capsys)[0] == 1


def test_distance_matrix_output_is_valid_input(tmp_path, rng):
    D = DistanceMatrix(np.array([[0, 0.5], [0.5, 0.0]]), ids=("u", "v"))
    path = tmp_path / "m.csv"
    formats.write_distance_csv(path, D)
    assert formats.read_distance_csv(path).ids == ("u", "v")
