import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densecode import __version__
from densecode.cli import main
from densecode.config import SCHEMA, ConfigError, JobSpec, defaults, parse_config, render

finite = st.floats(allow_nan=False, allow_infinity=False)
positive = st.floats(1e-6, 1e6)

param_values = {
    "g": st.floats(0, 10),
    "detuning_offset": finite,
    "temporal_dispersion": finite,
    "correction": st.sampled_from(["none", "quadratic_lens", "ideal"]),
    "d_A": positive,
    "P": st.floats(0, 1e6),
    "tol": positive,
    "seed": st.integers(0, 2**64 - 1),
    "n_samples": st.integers(1, 10**6),
    "nx": st.integers(1, 512),
    "omega": st.lists(finite, min_size=1, max_size=4).map(tuple),
    "values": st.lists(positive, min_size=1, max_size=6).map(tuple),
    "axis": st.sampled_from(["d_A", "P", "g"]),
    "units": st.sampled_from(["nats", "bits"]),
}


@settings(max_examples=150)
@given(st.sampled_from(["spectrum", "capacity", "simulate"]), st.fixed_dictionaries({}, optional=param_values))
def test_round_trip(mode, overrides):
    spec = JobSpec(mode, {**defaults(), **overrides})
    assert parse_config(render(spec)) == spec


def test_exp_r00_stores_log():
    spec = parse_config("exp_r00 = 3\n")
    assert spec["g"] == math.log(3)
    assert parse_config(render(spec)) == spec


def test_comments_and_blank_lines():
    spec = parse_config("# header\n\nd_A = 2   # width\n  P=4\n")
    assert spec["d_A"] == 2.0 and spec["P"] == 4.0


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("d_A = 1\nwidth = 2\n", "line 2: unknown key 'width'"),
        ("d_A = 1\nd_A = 2\n", "line 2: duplicate key 'd_A'"),
        ("d_A = -1\n", "line 1: d_A out of range"),
        ("seed = 1.5\n", "line 1: bad value for seed"),
        ("correction = lens\n", "line 1: bad value for correction"),
        ("g = 1\nexp_r00 = 3\n", "give either g or exp_r00"),
        ("exp_r00 = 0.5\n", "line 1: exp_r00"),
        ("just words\n", "line 1: expected"),
        ("mode = plot\n", "line 1: mode"),
        ("tol = inf\n", "line 1: tol must be finite"),
    ],
)
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(")):
        parse_config(text)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert main(["capacity", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "unknown key 'colour'" in capsys.readouterr().err
    assert main(["capacity", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["spectrum", "--out", str(blocker / "sub")]) == 4
    assert main(["capacity", "--tol", "1e-300", "--out", str(tmp_path)]) == 3
    assert (tmp_path / "capacity.csv").exists()
    assert main(["capacity", "--threads", "0", "--out", str(tmp_path)]) == 2


def _body(path):
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    rows = [ln.split(",") for ln in lines if not ln.startswith("#")]
    return comments, rows[0], rows[1:]


def test_headers_and_columns(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("exp_r00 = 3\nn_kappa = 5\nkappa_max = 1\nomega = 0, 0.2\n")
    assert main(["spectrum", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    comments, cols, rows = _body(tmp_path / "spectrum.csv")
    assert comments[0] == f"# densecode {__version__}"
    keys = {c[2:].split(" = ")[0] for c in comments[1:]}
    assert keys >= set(SCHEMA) - {"threads"}
    assert cols == ["kappa", "omega", "re_U", "im_U", "re_V", "im_V", "r", "psi", "phi"]
    assert len(rows) == 10
    assert rows[0][6] == f"{math.log(3):.12g}"
    # header reproduces the effective config
    spec = parse_config("\n".join(c[2:] for c in comments[1:]))
    assert spec["g"] == math.log(3) and spec["omega"] == (0.0, 0.2)

    assert main(["variance", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, cols, rows = _body(tmp_path / "variance.csv")
    assert cols == ["kappa", "sigma_BA_none", "sigma_BA_lens", "sigma_BA_ideal", "sigma_A"]
    assert [float(x) for x in rows[0][1:4]] == pytest.approx([1 / 9] * 3, rel=1e-11)

    assert main(["sweep", "--config", str(cfg), "--units", "bits", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("bits") == 6
    _, cols, rows = _body(tmp_path / "sweep.csv")
    assert cols == ["axis_value", "J_nats", "J_bits", "quad_error", "correction_mode", "g", "P", "d_A"]
    assert float(rows[0][2]) == pytest.approx(float(rows[0][1]) / math.log(2), rel=1e-11)


def test_figures(tmp_path):
    assert main(["figures", "--out", str(tmp_path)]) == 0
    _, cols, rows = _body(tmp_path / "fig3.csv")
    assert cols[1] == "curve1_vacuum" and cols[3] == "curve3_ideal"
    assert all(float(r[1]) == 1.0 for r in rows)
    assert float(rows[0][3]) == pytest.approx(9.0, rel=1e-11)
    _, cols, rows = _body(tmp_path / "fig2.csv")
    assert float(rows[0][1]) == pytest.approx(math.log(3), rel=1e-11)
    for name in ("fig4a", "fig4b"):
        _, cols, rows = _body(tmp_path / f"{name}.csv")
        assert len(rows) >= 12
        d = [float(r[0]) for r in rows]
        assert d[0] == pytest.approx(0.1) and d[-1] == pytest.approx(20)


def test_simulate_output(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("nx = 8\nny = 8\nnt = 4\nkappa_step = 0.25\nomega_step = 0.25\nn_samples = 200\nblocks = 4\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "42", "--out", str(tmp_path)]) == 0
    comments, cols, rows = _body(tmp_path / "simulate.csv")
    assert cols == ["kappa", "omega", "var_i1_emp", "var_i1_analytic", "var_i2_emp", "var_i2_analytic"]
    assert len(rows) == 8 * 8 * 4
    assert "# seed = 42" in comments and "# n_samples = 200" in comments
    assert any(c.startswith("# J_emp=") for c in comments)
    assert "J_analytic=" in capsys.readouterr().out
    cfg.write_text(cfg.read_text().replace("200", "50"))
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_byte_identical_across_threads(tmp_path):
    outs = []
    for threads in (1, 3):
        d = tmp_path / str(threads)
        assert main(["sweep", "--threads", str(threads), "--out", str(d)]) == 0
        outs.append((d / "sweep.csv").read_bytes())
    assert outs[0] == outs[1]
