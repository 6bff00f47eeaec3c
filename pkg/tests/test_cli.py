import csv
import io
import math

import pytest

from slicecauchy import format_element, get_algebra
from slicecauchy.cli import ConfigError, kernel_reference, main, parse_config_text
from slicecauchy.geometry import Gis
from slicecauchy.quadrature import kernel_CS


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    meta = dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))
    return list(csv.DictReader(io.StringIO("\n".join(lines)))), meta


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_cauchy_regular(capsys, monkeypatch):
    monkeypatch.setenv("SLICE_CAUCHY_THREADS", "2")
    code, out, _ = run(capsys, "verify-cauchy", "--function", "poly:[1,0,-2,1]",
                       "--points", "0.3+0.2i;-0.4j+0.1k", "--grid", "64,8")
    rows, meta = table(out)
    assert code == 0 and len(rows) == 2
    assert meta["command"] == "verify-cauchy" and meta["tol"] == "1.0000000000000001e-05"
    assert all(r["pass"] == "true" and float(r["rel_error"]) < 1e-10 for r in rows)
    assert rows[0]["volume_nodes"] == "0" and "wall_time_s" not in rows[0]


def test_verify_cauchy_failing_row_exits_1(capsys):
    code, out, _ = run(capsys, "verify-cauchy", "--function", "poly:[0,0,1]",
                       "--points", "0.3;0.999", "--grid", "16,2", "--timing")
    rows, _ = table(out)
    assert code == 1
    assert rows[1]["pass"] == "false" and "boundary" in rows[1]["note"]
    assert float(rows[0]["wall_time_s"]) >= 0


def test_verify_cauchy_rejects_boundary_only_datum(capsys):
    code, _, err = run(capsys, "verify-cauchy", "--function", "stem:remark", "--points", "0.1")
    assert code == 2 and "verify-jump" in err


def test_verify_jump_plane_datum(capsys, tmp_path):
    out_path = tmp_path / "jump.csv"
    code, _, _ = run(capsys, "verify-jump", "--gis", "plane:i", "--function", "stem:remark",
                     "--points", "0.6+0.8i;-1i", "--offsets", "0.04,0.02,0.01", "--out", str(out_path))
    rows, meta = table(out_path.read_text())
    assert code == 0 and meta["gis"] == "plane:i"
    assert all(r["pass"] == "true" for r in rows)
    assert rows[0]["offsets"] == "0.040000000000000001 0.02 0.01"


def test_extension_cli(capsys):
    base = ["extension-test", "--function", "stem:remark", "--offsets", "0.04,0.02,0.01"]
    code, out, _ = run(capsys, *base, "--gis", "plane:i", "--expect", "true")
    rows, meta = table(out)
    assert code == 0 and meta["extends"] == "true" and len(rows) == 8
    code, out, _ = run(capsys, *base, "--gis", "plane:j", "--expect", "true")
    _, meta = table(out)
    assert code == 1 and meta["extends"] == "false"
    assert float(meta["max_f_minus_norm"]) == pytest.approx(0.5, abs=1e-3)


def test_lemma_suite_cli(capsys):
    code, out, _ = run(capsys, "lemma-suite", "--samples", "20", "--seed", "3")
    rows, _ = table(out)
    assert code == 0 and len(rows) == 12
    assert {r["check"] for r in rows} == {"product_vs_det", "product_vs_gram", "integral_In"}
    code, _, err = run(capsys, "lemma-suite", "--n-max", "6")
    assert code == 2 and "n_max" in err


def test_kernel_eval_cli(capsys):
    code, out, _ = run(capsys, "kernel-eval", "--points", "0;0.5j;0.2-0.1i+0.3k", "--w", "i")
    rows, _ = table(out)
    assert code == 0 and len(rows) == 3
    assert float(rows[0]["computed"].split("*")[0].replace(" ", "")) == pytest.approx(-1 / (2 * math.pi))
    code, out, _ = run(capsys, "kernel-eval", "--points", "j", "--w", "i")
    rows, _ = table(out)
    assert code == 1 and rows[0]["pass"] == "false"
    code, _, err = run(capsys, "kernel-eval", "--points", "0;1", "--w", "i;j;k")
    assert code == 2


def test_kernel_reference_matches_on_paravectors():
    A = get_algebra("clifford:3")
    gis = Gis.paravector(A)
    x, w = A.parse("0.3-0.2e1+0.1e3"), A.parse("-0.4+0.6e2+0.3e3")
    assert kernel_reference(gis, x, w).allclose(kernel_CS(gis, x, w), atol=1e-14)


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# kernel values\ncommand = kernel-eval\nalgebra = quaternion\n"
                   "points = 0.1i\nw = j\ntol = 1e-12\n")
    code, out, _ = run(capsys, "kernel-eval", "--config", str(cfg), "--w", "k")
    rows, _ = table(out)
    H = get_algebra("quaternion")
    assert code == 0 and rows[0]["w"] == format_element(H.basis("k"))


@pytest.mark.parametrize("text,where", [
    ("algebra = quaternion\npoints = 0.1;1+q\nw = i\n", "run.cfg:2:16"),
    ("algebra quaternion\n", "run.cfg:1:1"),
    ("  colour = red\n", "run.cfg:1:3"),
    ("algebra = quaternion\nfunction = poly:[1, 2x]\n", "run.cfg:2:22"),
    ("grid = 4,a\n", "run.cfg:1:8"),
])
def test_config_errors_are_located(capsys, tmp_path, text, where):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    cmd = "verify-cauchy" if "function" in text or "grid" in text else "kernel-eval"
    extra = [] if "function" in text else ["--function", "poly:[1]"]
    code, _, err = run(capsys, cmd, "--config", str(cfg), "--points", "0.1", *extra) \
        if "points" not in text else run(capsys, cmd, "--config", str(cfg))
    assert code == 2
    assert where in err, err


def test_parse_config_text_positions():
    vals = parse_config_text("tol =  1e-3\n", "f")
    assert vals["tol"].text == "1e-3" and (vals["tol"].line, vals["tol"].column) == (1, 8)
    with pytest.raises(ConfigError):
        parse_config_text("points\n")


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("SLICE_CAUCHY_THREADS", "many")
    code, _, err = run(capsys, "verify-cauchy", "--function", "poly:[1]", "--points", "0.1")
    assert code == 2 and "SLICE_CAUCHY_THREADS" in err


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    outs = []
    for n in ("1", "3"):
        monkeypatch.setenv("SLICE_CAUCHY_THREADS", n)
        _, out, _ = run(capsys, "verify-cauchy", "--function", "poly:[0,1,1]",
                        "--points", "0.1;0.2i;0.3j;-0.4k;0.5", "--grid", "32,4")
        outs.append(out)
    assert outs[0] == outs[1]
