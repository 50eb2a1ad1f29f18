import filecmp
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from promal.cli import main, read_config
from promal.io import read_distance_csv, read_matrix


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    assert err.strip().splitlines()[-1].startswith("STATUS: ")
    return code, out, err


@pytest.fixture
def zero_noise(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--n", 8, "--m", 4, "--N", 4, "--seed", 1, "--out", tmp_path / "sim")
    assert code == 0
    return tmp_path / "sim" / "manifest.txt"


@pytest.fixture
def grouped(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--n", 30, "--m", 8, "--N", 8, "--noise", 0.1, "--scheme", "grouped",
                     "--groups", "4,4", "--seed", 5, "--out", tmp_path / "grp")
    assert code == 0
    return tmp_path / "grp"


def test_simulate_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "simulate", "--n", 5, "--m", 6, "--N", 3, "--noise", 0.2, "--seed", 9, "--out", tmp_path / name)
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only
    assert len(list((tmp_path / "a" / "truth" / "rotations").glob("*.csv"))) == 3


def test_align_zero_noise(tmp_path, capsys, zero_noise):
    code, _, err = run(capsys, "align", zero_noise, "--method", "gpa", "--out", tmp_path / "al")
    assert code == 0 and "STATUS: ok" in err
    hist = read_matrix(tmp_path / "al" / "objective_history.csv")
    assert hist[-1, 1] < 1e-12


def test_align_opp_needs_two(tmp_path, capsys, zero_noise):
    code, _, err = run(capsys, "align", zero_noise, "--method", "opp", "--out", tmp_path / "x")
    assert code == 1 and "N=2" in err


def test_promises_k0_matches_gpa(tmp_path, capsys):
    run(capsys, "simulate", "--n", 6, "--m", 4, "--N", 4, "--noise", 0.3, "--seed", 2, "--out", tmp_path / "s")
    man = tmp_path / "s" / "manifest.txt"
    run(capsys, "align", man, "--method", "gpa", "--out", tmp_path / "g")
    run(capsys, "align", man, "--method", "promises", "--k", 0, "--out", tmp_path / "p")
    for lab in ("s01", "s02", "s03", "s04"):
        a = read_matrix(tmp_path / "g" / "rotations" / f"{lab}.csv")
        b = read_matrix(tmp_path / "p" / "rotations" / f"{lab}.csv")
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_align_nonconvergence_exit_2(tmp_path, capsys):
    run(capsys, "simulate", "--n", 5, "--m", 8, "--N", 4, "--noise", 1.0, "--seed", 2, "--out", tmp_path / "s")
    code, _, err = run(capsys, "align", tmp_path / "s" / "manifest.txt", "--max-iter", 1, "--tol", 1e-15,
                       "--out", tmp_path / "a")
    assert code == 2 and "STATUS: warning" in err
    assert (tmp_path / "a" / "run.json").is_file()


def test_dist_and_compare(tmp_path, capsys, zero_noise):
    run(capsys, "align", zero_noise, "--out", tmp_path / "al")
    code, _, _ = run(capsys, "dist", tmp_path / "al", "--kind", "residual", "--out", tmp_path / "res.csv")
    assert code == 0
    dm = read_distance_csv(tmp_path / "res.csv")
    assert np.all(np.abs(dm.values) < 1e-10)
    run(capsys, "dist", zero_noise, "--kind", "raw", "--out", tmp_path / "raw.csv")
    code, out, _ = run(capsys, "dist", tmp_path / "raw.csv", "--compare", tmp_path / "raw.csv")
    assert code == 0 and "pearson correlation: 1.000000" in out


def test_dist_rotational_needs_alignment(tmp_path, capsys, zero_noise):
    code, _, err = run(capsys, "dist", zero_noise, "--kind", "rotational", "--out", tmp_path / "r.csv")
    assert code == 1 and "MissingArtifact" in err


def test_grouped_rotational_mds_cluster(tmp_path, capsys, grouped):
    run(capsys, "align", grouped / "manifest.txt", "--method", "promises", "--k", 1, "--max-iter", 2000,
        "--out", tmp_path / "al")
    run(capsys, "dist", tmp_path / "al", "--kind", "rotational", "--out", tmp_path / "rot.csv")
    dm = read_distance_csv(tmp_path / "rot.csv")
    g = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    iu = np.triu_indices(8, 1)
    same = (g[:, None] == g[None, :])[iu]
    assert dm.values[iu][same].mean() < dm.values[iu][~same].mean()

    code, out, _ = run(capsys, "cluster", tmp_path / "rot.csv", "--k", 2, "--truth", grouped / "truth" / "groups.csv",
                       "--out", tmp_path / "cl")
    assert code == 0 and "rand index vs truth: 1.000000" in out
    assert (tmp_path / "cl_merges.csv").read_text().startswith("step,node_a,node_b,height")
    run(capsys, "cluster", tmp_path / "rot.csv", "--k", 1, "--out", tmp_path / "one")
    lines = (tmp_path / "one_clusters.csv").read_text().splitlines()
    assert lines[0] == "label,cluster" and {ln.split(",")[1] for ln in lines[1:]} == {"0"}

    cov = tmp_path / "cov.csv"
    cov.write_text("label,score\n" + "".join(f"s{i + 1:02d},{i}\n" for i in range(8)))
    code, out, _ = run(capsys, "mds", tmp_path / "rot.csv", "--scan", 6, "--plot-dims", "1,2", "--color-by", cov,
                       "--out", tmp_path / "mds")
    assert code == 0 and "first k with stress1 < 0.05" in out
    scan = read_matrix(tmp_path / "mds_scan.csv")
    assert np.all(np.diff(scan[:, 1]) <= 1e-6)
    root = ET.parse(tmp_path / "mds.svg").getroot()
    circles = root.findall(".//{http://www.w3.org/2000/svg}circle")
    assert len(circles) == 8


def test_mds_plot_dims_1_6(tmp_path, capsys, grouped):
    run(capsys, "dist", grouped / "manifest.txt", "--kind", "raw", "--form", "root", "--out", tmp_path / "raw.csv")
    code, _, _ = run(capsys, "mds", tmp_path / "raw.csv", "--dims", 6, "--plot-dims", "1,6", "--engine", "classical",
                     "--out", tmp_path / "m")
    assert code == 0
    root = ET.parse(tmp_path / "m.svg").getroot()
    texts = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
    assert "dim1" in texts and "dim6" in texts
    code, _, _ = run(capsys, "mds", tmp_path / "raw.csv", "--dims", 2, "--plot-dims", "1,6", "--out", tmp_path / "m2")
    assert code == 1


def test_unreadable_input(tmp_path, capsys):
    code, _, err = run(capsys, "cluster", tmp_path / "nope.csv", "--k", 2, "--out", tmp_path / "c")
    assert code == 1 and "nope.csv" in err


def test_bad_usage(capsys):
    code = main(["align"])
    _, err = capsys.readouterr()
    assert code == 1 and "STATUS: error" in err


def test_pipeline_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"n = 30\nm = 8\nN = 6\nnoise = 0.1\ngroups = 3,3\nk = 1\nscan = 3\nout = {tmp_path / 'p'}\n")
    assert read_config(cfg)["groups"] == "3,3"
    code, out, _ = run(capsys, "pipeline", "--config", cfg)
    assert code == 0
    assert (tmp_path / "p" / "summary.json").is_file()
    assert '"rand_index": 1.0' in out
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    code, _, _ = run(capsys, "pipeline", "--config", bad)
    assert code == 1
