import textwrap

import numpy as np
import pytest

from blockboot.cli import config_from_output, main
from blockboot.config import RunConfig, format_config, parse_config
from blockboot.core import ScheduleParams
from blockboot.errors import ConfigError
from blockboot.process_gen import make_spec

GENERATE = """\
command = generate
[generator]
family = ar1
phi = 0.5
n = 50
"""

EXPERIMENT = """\
command = experiment
seed = 5
[generator]
family = doubling_map
[bootstrap]
statistic = mean
B = 40
[experiment]
n_grid = 32, 64, 128
M = 100
R = 3
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def test_minimal_generate_config():
    cfg = parse_config(GENERATE)
    assert cfg == RunConfig(command="generate", spec=make_spec("ar1", phi=0.5), n=50)
    assert cfg.seed == 0 and cfg.B == 2000 and cfg.M == 2000 and cfg.R == 50
    assert cfg.schedule == ScheduleParams(1 / 3, 1.0, 2)
    assert cfg.spec.burn_in == 1000


def test_stationarity_violation_names_line():
    with pytest.raises(ConfigError, match=r"line 4: .*\|phi\| < 1.*stationarity"):
        parse_config(GENERATE.replace("phi = 0.5", "phi = 1.5"))


def test_duplicate_key_names_both_lines():
    with pytest.raises(ConfigError, match=r"line 6: duplicate key 'n'.*line 5"):
        parse_config(GENERATE + "n = 60\n")


@pytest.mark.parametrize("extra,pattern", [
    ("colour = red\n", r"line 5: unknown key 'colour'"),
    ("tail_bits = 3\n", r"line 5: .*does not apply"),
    ("n = many\n", r"line 5: malformed value"),
    ("[gizmo]\n", r"line 5: unknown section"),
    ("just words\n", r"line 5: expected 'key = value'"),
])
def test_parse_errors_name_the_line(extra, pattern):
    text = GENERATE.replace("n = 50\n", "") + extra
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


@pytest.mark.parametrize("text,pattern", [
    ("[generator]\nfamily = ar1\nphi = 0.1\nn = 3\n", "command"),
    ("command = generate\n[generator]\nn = 3\n", "family"),
    ("command = generate\n[generator]\nfamily = ar1\nn = 3\n", "phi"),
    ("command = experiment\n[generator]\nfamily = iid_gaussian\n", "n_grid"),
    ("command = generate\n[generator]\nfamily = iid_gaussian\n", "'n'"),
])
def test_missing_required_keys(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_other_validation():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("command = generate\nseed = -1\n[generator]\nfamily = iid_gaussian\nn = 3\n")
    with pytest.raises(ConfigError, match="strictly increasing"):
        parse_config(EXPERIMENT.replace("32, 64, 128", "64, 32"))
    with pytest.raises(ConfigError, match="diagonal"):
        parse_config("command = generate\n[generator]\nfamily = volterra2\ncoeffs = 1:1:0.5\nn = 3\n")
    with pytest.raises(ConfigError, match="line 7: B must be positive"):
        parse_config(EXPERIMENT.replace("B = 40", "B = 0"))


@pytest.mark.parametrize("text", [
    GENERATE,
    EXPERIMENT,
    "command = bootstrap\nseed = 3\nout = x.csv\n[generator]\nfamily = garch11\nalpha0 = 0.1\n"
    "alpha1 = 0.05\nalpha2 = 0.9\nburn_in = 20\nn = 100\n[bootstrap]\nstatistic = gini\np = 5\n"
    "eps = 0.25\nc = 2.0\np_min = 3\n",
    "command = generate\n[generator]\nfamily = volterra2\ncoeffs = 0:1:1.0, 2:5:-0.25\nn = 9\n",
    "command = bootstrap\n[bootstrap]\ninput = data.csv\n[experiment]\nbudget = 1000\n",
])
def test_format_round_trip(text):
    cfg = parse_config(text)
    assert parse_config(format_config(cfg)) == cfg


def run_cli(tmp_path, text, *args):
    cfg = write(tmp_path, text)
    return main(["--config", str(cfg), "--no-timestamp", *args])


def test_generate_byte_identical(tmp_path):
    out = tmp_path / "a.csv"
    assert run_cli(tmp_path, GENERATE, "--seed", "7", "--out", str(out)) == 0
    first = out.read_bytes()
    assert run_cli(tmp_path, GENERATE, "--seed", "7", "--out", str(out)) == 0
    assert out.read_bytes() == first
    values = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(values) == 50
    assert run_cli(tmp_path, GENERATE, "--seed", "8", "--out", str(out)) == 0
    assert out.read_bytes() != first


def test_experiment_one_row_per_n(tmp_path):
    out = tmp_path / "exp.csv"
    assert run_cli(tmp_path, EXPERIMENT, "--out", str(out)) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].startswith("process,statistic,n,")
    assert [r.split(",")[2] for r in rows[1:]] == ["32", "64", "128"]


def test_output_echo_round_trips(tmp_path):
    out = tmp_path / "exp.csv"
    assert run_cli(tmp_path, EXPERIMENT, "--seed", "99", "--out", str(out)) == 0
    cfg = config_from_output(out.read_text())
    assert cfg.seed == 99 and cfg.n_grid == (32, 64, 128) and cfg.out == str(out)
    again = tmp_path / "again.cfg"
    again.write_text(format_config(cfg))
    out2 = tmp_path / "exp2.csv"
    assert main(["--config", str(again), "--no-timestamp", "--out", str(out2)]) == 0
    body = lambda p: [l for l in p.read_text().splitlines() if "out =" not in l]
    assert body(out) == body(out2)


def test_threads_do_not_change_output(tmp_path):
    out = tmp_path / "t.csv"
    text = EXPERIMENT.replace("statistic = mean", "statistic = gini")
    assert run_cli(tmp_path, text, "--threads", "1", "--out", str(out)) == 0
    serial = out.read_bytes()
    assert run_cli(tmp_path, text, "--threads", "8", "--out", str(out)) == 0
    assert out.read_bytes() == serial


def test_timestamp_line_is_optional(tmp_path):
    out = tmp_path / "g.csv"
    cfg = write(tmp_path, GENERATE)
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    assert any(l.startswith("# timestamp=") for l in out.read_text().splitlines())


def test_bootstrap_command(tmp_path):
    text = GENERATE.replace("generate", "bootstrap") + "[bootstrap]\nstatistic = gini\nB = 25\n"
    out = tmp_path / "boot.csv"
    assert run_cli(tmp_path, text, "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert "# statistic=gini" in lines and "# p=3" in lines
    data = lines[lines.index("replicate,pivot") + 1:]
    assert len(data) == 25


def test_bootstrap_from_input_file(tmp_path):
    series = tmp_path / "series.csv"
    series.write_text("# external\n1\n2\n3\n4\n")
    text = f"command = bootstrap\n[bootstrap]\ninput = {series}\np = 2\nB = 400\n"
    out = tmp_path / "boot.csv"
    assert run_cli(tmp_path, text, "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    pivots = np.array([float(l.split(",")[1]) for l in lines[lines.index("replicate,pivot") + 1:]])
    assert set(pivots) <= {-2.0, 0.0, 2.0}
    assert "# exact_variance=2.0" in lines


def test_bootstrap_p_larger_than_n_exits_1(tmp_path, capsys):
    text = GENERATE.replace("generate", "bootstrap").replace("n = 50", "n = 5") + "[bootstrap]\np = 8\n"
    assert run_cli(tmp_path, text, "--out", str(tmp_path / "x.csv")) == 1
    assert "block length p=8" in capsys.readouterr().err


def test_config_error_exits_1(tmp_path, capsys):
    assert run_cli(tmp_path, GENERATE.replace("0.5", "1.5")) == 1
    assert "stationarity" in capsys.readouterr().err


def test_capacity_error_exits_2(tmp_path, capsys):
    text = EXPERIMENT + "budget = 1000\n"
    assert run_cli(tmp_path, text, "--out", str(tmp_path / "x.csv")) == 2
    assert "budget" in capsys.readouterr().err


def test_missing_output_directory_exits_1(tmp_path):
    assert run_cli(tmp_path, GENERATE, "--out", str(tmp_path / "nope" / "x.csv")) == 1


def test_stdout_output(tmp_path, capsys):
    assert run_cli(tmp_path, GENERATE) == 0
    out = capsys.readouterr().out
    assert out.startswith("# blockboot ")
