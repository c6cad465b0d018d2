import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entrolab.artifacts import read_csv, render_csv, svg_line_chart
from entrolab.cli import main
from entrolab.config import SCHEMAS, ConfigError, default_config, loads


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows_of(path):
    return list(csv.DictReader(line for line in path.read_text().splitlines() if not line.startswith("#")))


@pytest.mark.parametrize("kind", sorted(SCHEMAS))
def test_default_config_roundtrip(kind):
    cfg = default_config(kind)
    again = loads(cfg.dumps())
    assert again == cfg
    assert again.digest() == cfg.digest()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), L=st.integers(2, 12),
       J=st.lists(st.floats(-5, 5, allow_nan=False), max_size=5), svg=st.booleans())
def test_config_roundtrip_lossless(seed, L, J, svg):
    cfg = default_config("mfim-growth")
    cfg.run.update(seed=seed, svg=svg)
    cfg.params.update(L=L, J=J)
    assert loads(cfg.dumps()) == cfg


def test_unknown_key_reports_line():
    text = "[run]\nseed = 1\n\n[gue]\nV = 4\nsampels = 3\n"
    with pytest.raises(ConfigError) as exc:
        loads(text, "gue-s2")
    assert exc.value.line == 6
    assert "gue.sampels" in str(exc.value)


def test_unknown_table_and_type_errors():
    with pytest.raises(ConfigError) as exc:
        loads("[mfim]\nL = 4\n", "gue-s2")
    assert exc.value.line == 1
    with pytest.raises(ConfigError) as exc:
        loads("[gue]\nV = \"eight\"\n", "gue-s2")
    assert exc.value.line == 2
    with pytest.raises(ConfigError) as exc:
        loads("[gue]\nV = 4\nV = 6\n", "gue-s2")
    assert exc.value.line == 3
    with pytest.raises(ConfigError):
        loads('kind = "mfim-growth"\n', "gue-s2")


def test_int_promoted_to_float():
    cfg = loads("[gue]\nt_max = 2\n", "gue-s2")
    assert cfg.params["t_max"] == 2.0 and isinstance(cfg.params["t_max"], float)


def test_render_csv_provenance_and_cells():
    text = render_csv(("a", "b", "c"), [(1.0, True, None)], "# prov")
    assert text == "# prov\na,b,c\n1.0,true,\n"


def test_svg_chart_is_wellformed():
    import xml.etree.ElementTree as ET

    svg = svg_line_chart([("s", [0, 1, 2], [0, 1, 4]), ("b", [0, 2], [0, 3])], title="x<y", dashed=["b"])
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert svg.count("<polyline") == 2 and "stroke-dasharray" in svg


def test_exit_code_config_errors(tmp_path, capsys):
    assert main(["fuzz-inequalities", "--samples", "0", "--out", str(tmp_path)]) == 2
    bad = write(tmp_path, "bad.toml", "[fuzz]\npairs = 5\nbogus = 1\n")
    assert main(["fuzz-inequalities", "--config", bad]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["fuzz-inequalities", "--config", str(tmp_path / "missing.toml")]) == 2
    syntax = write(tmp_path, "syn.toml", "[gue]\nV = = 3\n")
    assert main(["gue-s2", "--config", syntax]) == 2


def test_caps(tmp_path):
    big = write(tmp_path, "g.toml", "[gue]\nV = 14\nsamples = 1\n")
    assert main(["gue-s2", "--config", big, "--out", str(tmp_path)]) == 2
    assert main(["mfim-growth", "--config", write(tmp_path, "m.toml", "[mfim]\nL = 13\n")]) == 2
    assert main(["syk-growth", "--config", write(tmp_path, "s.toml", "[syk]\nN = 16\n")]) == 2


def test_fuzz_small_run(tmp_path):
    cfg = write(tmp_path, "f.toml", "[fuzz]\npairs = 60\nsearch_samples = 50\n")
    assert main(["fuzz-inequalities", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "2"]) == 0
    header, rows = read_csv(tmp_path / "o" / "fuzz_campaign.csv")
    assert header == ["checker", "alpha", "dim", "provenance", "seed", "lhs", "rhs", "margin", "holds"]
    assert all(r["holds"] == "true" for r in rows)
    first = (tmp_path / "o" / "fuzz_campaign.csv").read_text().splitlines()[0]
    assert first.startswith("# entrolab ") and "seed=2" in first and "config_sha256=" in first


def test_gue_run_deterministic_with_svg(tmp_path):
    cfg = write(tmp_path, "g.toml", "[gue]\nV = 4\nsamples = 20\nn_times = 11\n")
    for d in ("a", "b"):
        assert main(["gue-s2", "--config", cfg, "--out", str(tmp_path / d), "--svg", "--jobs", "2"]) == 0
    a, b = (tmp_path / d / "gue_s2.csv" for d in "ab")
    assert a.read_bytes() == b.read_bytes()
    rows = rows_of(a)
    assert abs(float(rows[0]["mc_mean"])) < 1e-12 and float(rows[0]["analytic"]) == 0.0
    assert (tmp_path / "a" / "gue_s2.svg").read_text().startswith("<svg")


def test_mfim_zero_coupling_is_flat(tmp_path):
    cfg = write(tmp_path, "m.toml", "[mfim]\nL = 4\nsamples = 3\nJ = [0.0, 1.0]\nn_times = 41\nt_max = 10.0\n")
    assert main(["mfim-growth", "--config", cfg, "--out", str(tmp_path), "--svg"]) == 0
    curves = rows_of(tmp_path / "mfim_curves.csv")
    flat = [float(r["mean"]) for r in curves if r["J"] == "0.0" and r["alpha"] == "1.0"]
    assert max(abs(v) for v in flat) < 1e-10
    slopes = rows_of(tmp_path / "mfim_slopes.csv")
    assert [r["flag"] for r in slopes][0] == "ok"
    assert (tmp_path / "mfim_slopes.svg").exists()


def test_syk_run(tmp_path):
    assert main(["syk-growth", "--out", str(tmp_path)]) == 0
    census = rows_of(tmp_path / "syk_census.csv")
    assert {r["v_boundary"] for r in census} == {"68"}
    curves = rows_of(tmp_path / "syk_curves.csv")
    assert all(abs(float(r["mean"])) < 1e-12 for r in curves if r["t"] == "0.0")


def test_bounds_report(tmp_path):
    cfg = write(tmp_path, "b.toml", "[bounds]\nformulas = [\"mfim\", \"power_law_vn\"]\n"
                "[bounds.base]\nhbar = 1.0\nJ = 1.0\n[bounds.grid]\nalpha = [1.0]\nw = [3.0, 4.0]\n")
    assert main(["bounds-report", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = rows_of(tmp_path / "bounds.csv")
    assert rows[0]["formulaId"] == "mfim" and float(rows[0]["value"]) == pytest.approx(1.3862943611198906)
    assert [r["applicable"] for r in rows if r["formulaId"] == "power_law_vn"] == ["false", "true"]
    empty = write(tmp_path, "e.toml", "[bounds.grid]\nalpha = []\n")
    assert main(["bounds-report", "--config", empty, "--out", str(tmp_path / "e")]) == 0
    text = (tmp_path / "e" / "bounds.csv").read_text().splitlines()
    assert text[1:] == ["formulaId,alpha,value,applicable,reason"]
    bad = write(tmp_path, "x.toml", "[bounds.grid]\nomega = [1]\n")
    assert main(["bounds-report", "--config", bad]) == 2
