import json

import numpy as np
import pytest

import declutter as dc
from declutter.cli import main


def _write_line_points(path):
    path.write_text("0\n1\n2\n100\n")


def test_declutter_line_example(tmp_path, capsys):
    pts = tmp_path / "points.csv"
    _write_line_points(pts)
    out = tmp_path / "run"
    rc = main(["declutter", "--points", str(pts), "--k", "2",
               "--out-dir", str(out)])
    assert rc == 0
    kept = dc.load_points(out / "kept.csv")
    assert kept.ravel().tolist() == [0.0, 2.0]
    report = json.loads((out / "report.json").read_text())
    assert report["result"]["kept_order"] == [0, 2]
    assert report["schema_version"] == 1
    assert report["library_version"] == dc.__version__


def test_gen_roundtrip_and_determinism(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    args = ["gen", "--shape", "circle", "--n", "64", "--sigma", "0.02",
            "--ambient", "10", "--seed", "5"]
    assert main(args + ["--out-dir", str(out_a)]) == 0
    assert main(args + ["--out-dir", str(out_b)]) == 0
    pa = dc.load_points(out_a / "points.csv")
    pb = dc.load_points(out_b / "points.csv")
    assert np.array_equal(pa, pb)  # identical config -> identical outputs
    dc.save_points(out_a / "again.csv", pa)
    assert np.array_equal(dc.load_points(out_a / "again.csv"), pa)
    tags = np.loadtxt(out_a / "tags.csv")
    assert tags.sum() == 10


def test_parfree_monotone_trace(tmp_path):
    gen_dir = tmp_path / "gen"
    assert main(["gen", "--shape", "circle", "--n", "128", "--sigma", "0.02",
                 "--ambient", "16", "--seed", "2", "--out-dir", str(gen_dir)]) == 0
    run_dir = tmp_path / "run"
    rc = main(["parfree", "--points", str(gen_dir / "points.csv"),
               "--out-dir", str(run_dir), "--dump-iterations"])
    assert rc == 0
    trace = json.loads((run_dir / "trace.json").read_text())["trace"]
    cards = [it["n_resampled"] for it in trace["iterations"]]
    assert all(a >= b for a, b in zip(cards, cards[1:]))
    assert (run_dir / "iterations").is_dir()


def test_certify_eval_strict_pipeline(tmp_path):
    # near-regular sample: bounds should certify and pass end to end
    shape = dc.Circle((0.0, 0.0), 1.0)
    kref, sample = dc.sample_shape(shape, 128, seed=None)
    noisy = dc.perturb_gaussian(sample, 0.0005, 3)
    pts = tmp_path / "points.csv"
    ref = tmp_path / "reference.csv"
    dc.save_points(pts, noisy)
    dc.save_points(ref, kref.points)

    certs = tmp_path / "certs.json"
    assert main(["certify", "--points", str(pts), "--reference", str(ref),
                 "--k", "4", "--out", str(certs)]) == 0
    run = tmp_path / "run"
    assert main(["declutter", "--points", str(pts), "--k", "4",
                 "--resample-C", str(dc.THEORETICAL_C),
                 "--out-dir", str(run)]) == 0
    rc = main(["eval", "--points", str(pts), "--reference", str(ref),
               "--bounds", "thm3.3,lem3.1,lem3.2,prop3.4",
               "--report", str(run / "report.json"),
               "--certificates", str(certs), "--strict"])
    assert rc == 0
    rc = main(["eval", "--points", str(pts), "--reference", str(ref),
               "--bounds", "lem4.4",
               "--report", str(run / "report.json"),
               "--certificates", str(certs),
               "--resampled-ids", str(run / "resampled_ids.csv"),
               "--C", str(dc.THEORETICAL_C), "--strict"])
    assert rc == 0


def test_eval_parfree_bounds(tmp_path):
    shape = dc.Circle((0.0, 0.0), 1.0)
    kref, sample = dc.sample_shape(shape, 128, seed=None)
    noisy = dc.perturb_gaussian(sample, 0.0005, 4)
    pts = tmp_path / "points.csv"
    ref = tmp_path / "reference.csv"
    dc.save_points(pts, noisy)
    dc.save_points(ref, kref.points)
    run = tmp_path / "run"
    assert main(["parfree", "--points", str(pts), "--out-dir", str(run),
                 "--dump-iterations"]) == 0
    certs = tmp_path / "certs.json"
    assert main(["certify", "--points", str(pts), "--reference", str(ref),
                 "--k", "2,4,8,16,32,64,128", "--out", str(certs)]) == 0
    out = tmp_path / "bounds.json"
    rc = main(["eval", "--points", str(pts), "--reference", str(ref),
               "--bounds", "lem4.5,thm4.1,lem4.2", "--k", "8",
               "--trace-dir", str(run), "--certificates", str(certs),
               "--i0", "1", "--strict", "--out", str(out)])
    assert rc == 0
    data = json.loads(out.read_text())["bounds"]
    assert all(b["passed"] for b in data if b["applicable"])
    assert any(b["bound_name"] == "thm4.1" and b["applicable"] for b in data)


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main(["declutter", "--k", "2", "--out-dir", str(tmp_path)]) == 1
    missing = tmp_path / "nope.csv"
    assert main(["declutter", "--points", str(missing), "--k", "2",
                 "--out-dir", str(tmp_path)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["declutter", "--points", str(bad), "--k", "2",
                 "--out-dir", str(tmp_path)]) == 1
    both = tmp_path / "p.csv"
    _write_line_points(both)
    assert main(["declutter", "--points", str(both), "--matrix", str(both),
                 "--k", "2", "--out-dir", str(tmp_path)]) == 1
    assert main(["repro", "nofig", "--out-dir", str(tmp_path)]) == 1
    assert main(["eval", "--points", str(both), "--bounds", "bogus"]) == 1


def test_eval_strict_failure_exits_2(tmp_path):
    # forge a certificate with epsilon too small: thm3.3 must fail hard
    pts = tmp_path / "points.csv"
    _write_line_points(pts)
    ref = tmp_path / "ref.csv"
    ref.write_text("0\n1\n2\n")
    run = tmp_path / "run"
    assert main(["declutter", "--points", str(pts), "--k", "2",
                 "--out-dir", str(run)]) == 0
    certs = {"schema_version": 1, "certificates": [
        {"k": 2, "kind": "rms-k", "epsilon_k": 1e-6, "uniformity_c": 1.5,
         "weak_uniform": False, "adaptive": False, "conditions": {}}]}
    cert_path = tmp_path / "certs.json"
    cert_path.write_text(json.dumps(certs))
    rc = main(["eval", "--points", str(pts), "--reference", str(ref),
               "--bounds", "thm3.3", "--report", str(run / "report.json"),
               "--certificates", str(cert_path), "--strict"])
    assert rc == 2


def test_matrix_input_pipeline(tmp_path):
    m = dc.cross_distances(dc.Metric(), np.arange(6, dtype=float).reshape(-1, 1),
                           np.arange(6, dtype=float).reshape(-1, 1))
    mat = tmp_path / "matrix.csv"
    np.savetxt(mat, m, fmt="%.17g", delimiter=",")
    out = tmp_path / "run"
    rc = main(["declutter", "--matrix", str(mat), "--k", "2",
               "--out-dir", str(out)])
    assert rc == 0
    kept = np.loadtxt(out / "kept_ids.csv", dtype=int)
    assert kept.size >= 1


def test_repro_fig1_outputs(tmp_path):
    out = tmp_path / "fig1"
    rc = main(["repro", "fig1", "--n", "160", "--out-dir", str(out)])
    assert rc == 0
    for stem in ("declutter_k2", "declutter_k10", "parfree"):
        assert (out / f"{stem}.csv").exists()
        assert (out / f"{stem}.svg").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["outputs"]["k10"] < report["outputs"]["k2"]


def test_repro_fig2_small_scale(tmp_path):
    out = tmp_path / "fig2"
    rc = main(["repro", "fig2", "--n", "700", "--ambient", "120",
               "--out-dir", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["surviving_ambient"] == 0
    assert (out / "parfree.svg").exists()


def test_repro_fig4_and_fig5_smoke(tmp_path):
    out4 = tmp_path / "fig4"
    assert main(["repro", "fig4", "--n", "400", "--ambient", "60",
                 "--out-dir", str(out4)]) == 0
    assert (out4 / "declutter_k9.csv").exists()
    assert (out4 / "declutter_k30.csv").exists()
    out5 = tmp_path / "fig5"
    assert main(["repro", "fig5", "--n", "300", "--ambient", "40",
                 "--out-dir", str(out5)]) == 0
    pts = dc.load_points(out5 / "parfree.csv")
    assert pts.shape[1] == 3  # 3-D recipe emits CSV, no SVG
    assert not (out5 / "parfree.svg").exists()


def test_threads_flag_equals_single_thread(tmp_path):
    gen_dir = tmp_path / "gen"
    assert main(["gen", "--shape", "circle", "--n", "150", "--sigma", "0.03",
                 "--ambient", "20", "--seed", "3", "--out-dir", str(gen_dir)]) == 0
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out, threads in ((a, "1"), (b, "4")):
        assert main(["declutter", "--points", str(gen_dir / "points.csv"),
                     "--k", "6", "--threads", threads,
                     "--out-dir", str(out)]) == 0
    ra = json.loads((a / "report.json").read_text())["result"]
    rb = json.loads((b / "report.json").read_text())["result"]
    assert ra["kept_order"] == rb["kept_order"]
    assert ra["profile_values"] == rb["profile_values"]


def test_emit_figures_flag(tmp_path):
    out = tmp_path / "gen"
    assert main(["gen", "--shape", "circle", "--n", "50", "--ambient", "5",
                 "--emit-figures", "--out-dir", str(out)]) == 0
    assert (out / "input.svg").exists()
    run = tmp_path / "run"
    assert main(["declutter", "--points", str(out / "points.csv"), "--k", "3",
                 "--emit-figures", "--out-dir", str(run)]) == 0
    assert (run / "declutter.svg").exists()


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
