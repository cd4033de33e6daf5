"""Exit codes, header format, config-file merging, and determinism of the
command-line surface.  Heavy numerical behavior is covered by the module
suites; here the subject is the plumbing."""

import numpy as np
import pytest

from conedeg.cli import (
    EXIT_EXPECTED_VIOLATION,
    EXIT_FAIL,
    EXIT_PASS,
    EXIT_USAGE,
    dispatch,
)
from conedeg.envelopes import GridFn, grid_to_csv


def run_to_file(tmp_path, args, name="report.csv"):
    out = tmp_path / name
    code = dispatch(args + ["--out", str(out)])
    return code, out.read_text()


# ---------------------------------------------------------------------------
# usage errors


def test_no_command_is_usage(capsys):
    assert dispatch([]) == EXIT_USAGE
    assert "usage error" in capsys.readouterr().err


def test_unknown_command_is_usage(capsys):
    assert dispatch(["nonsense"]) == EXIT_USAGE
    assert "invalid choice" in capsys.readouterr().err


def test_unknown_flag_is_usage(capsys):
    assert dispatch(["dyadic", "--nope"]) == EXIT_USAGE
    assert "unrecognized arguments" in capsys.readouterr().err


def test_bad_flag_value_is_usage(capsys):
    assert dispatch(["envelope", "--eps", "-1"]) == EXIT_USAGE
    assert dispatch(["perron", "--grid", "2"]) == EXIT_USAGE
    assert dispatch(["kelvin", "--n", "2"]) == EXIT_USAGE
    assert dispatch(["cone-axioms", "--cone", "weird:thing"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert err.count("usage error") == 4


def test_help_exits_zero(capsys):
    assert dispatch(["--help"]) == 0
    assert "command" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# header contract


def test_header_has_sorted_config_echo_and_one_claim(tmp_path):
    code, text = run_to_file(tmp_path, ["dyadic"])
    assert code == EXIT_PASS
    lines = text.splitlines()
    config = [ln for ln in lines if ln.startswith("# config: ")]
    assert lines[: len(config)] == config  # echo block comes first
    keys = [ln.split(" ", 2)[2].split("=", 1)[0] for ln in config]
    assert keys == sorted(keys)
    assert "# config: command=dyadic" in config
    assert sum(1 for ln in lines if ln.startswith("# claim: ")) == 1
    assert lines[len(config)].startswith("# claim: ")


def test_stdout_when_no_out_flag(capsys):
    assert dispatch(["dyadic"]) == EXIT_PASS
    captured = capsys.readouterr()
    assert captured.out.startswith("# config: ")


def test_out_flag_leaves_stdout_empty(tmp_path, capsys):
    code, text = run_to_file(tmp_path, ["dyadic"])
    assert code == EXIT_PASS
    assert capsys.readouterr().out == ""
    assert text.endswith("\n")


# ---------------------------------------------------------------------------
# determinism


def test_same_config_same_bytes(tmp_path):
    # the out path is itself part of the echoed config, so rerun into one file
    args = ["touching", "--pair", "random", "--trials", "3", "--seed", "9"]
    _, first = run_to_file(tmp_path, args)
    _, second = run_to_file(tmp_path, args)
    assert first == second


def test_seed_feeds_the_randomness(tmp_path):
    _, a = run_to_file(tmp_path, ["envelope", "--source", "random", "--grid", "101",
                                  "--eps", "1e-2", "--seed", "1"], "a.csv")
    _, b = run_to_file(tmp_path, ["envelope", "--source", "random", "--grid", "101",
                                  "--eps", "1e-2", "--seed", "2"], "b.csv")
    rows_a = [ln for ln in a.splitlines() if not ln.startswith("#")]
    rows_b = [ln for ln in b.splitlines() if not ln.startswith("#")]
    assert rows_a != rows_b


# ---------------------------------------------------------------------------
# config files


def test_config_file_fills_unset_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("problem=interval-linear\ngrid=31   # small smoke grid\n\n")
    code, text = run_to_file(tmp_path, ["perron", "--config", str(cfg)])
    assert code == EXIT_PASS
    assert "# config: grid=31" in text
    assert "# config: problem=interval-linear" in text


def test_explicit_flag_beats_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("problem=interval-linear\ngrid=31\n")
    code, text = run_to_file(tmp_path, ["perron", "--config", str(cfg), "--grid", "21"])
    assert code == EXIT_PASS
    assert "# config: grid=21" in text


def test_config_unknown_key_is_usage(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus=3\n")
    assert dispatch(["perron", "--config", str(cfg)]) == EXIT_USAGE
    assert "unknown key" in capsys.readouterr().err


def test_config_bad_value_is_usage(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid=abc\n")
    assert dispatch(["perron", "--config", str(cfg)]) == EXIT_USAGE
    assert "bad value 'abc' for --grid" in capsys.readouterr().err


def test_config_bad_choice_is_usage(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("problem=weird\n")
    assert dispatch(["perron", "--config", str(cfg)]) == EXIT_USAGE
    assert "choose from" in capsys.readouterr().err


def test_config_missing_file_is_usage(tmp_path, capsys):
    assert dispatch(["perron", "--config", str(tmp_path / "absent.cfg")]) == EXIT_USAGE
    assert "cannot read config file" in capsys.readouterr().err


def test_config_malformed_line_is_usage(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("just some words\n")
    assert dispatch(["perron", "--config", str(cfg)]) == EXIT_USAGE
    assert "expected key=value" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# subcommand outcomes


def test_ctex_beta_sign_passes(tmp_path):
    code, text = run_to_file(tmp_path, ["ctex", "--kind", "beta-sign", "--alpha", "-3"])
    assert code == EXIT_PASS
    assert "verdict=pass" in text
    assert sum(1 for ln in text.splitlines() if ln.startswith("# root: ")) == 4
    assert "r,w,v,mu_w,nu_w,mu_v,nu_v,verdict" in text


def test_touching_cusp_exits_expected_violation(tmp_path):
    code, text = run_to_file(tmp_path, ["touching", "--pair", "cusp"])
    assert code == EXIT_EXPECTED_VIOLATION
    assert "PropagationViolated" in text


def test_touching_logpair_passes(tmp_path):
    code, text = run_to_file(tmp_path, ["touching", "--pair", "logpair", "--grid", "301"])
    assert code == EXIT_PASS
    assert text.count("PropagationConsistent") == 3


def test_perron_interval_row(tmp_path):
    code, text = run_to_file(tmp_path, ["perron", "--problem", "interval-linear",
                                        "--grid", "41"])
    assert code == EXIT_PASS
    header = next(ln for ln in text.splitlines() if ln.startswith("problem,"))
    row = text.splitlines()[-1].split(",")
    assert header.split(",")[8] == "sup_error"
    assert float(row[8]) <= float(row[9])


def test_perron_dump_writes_solution(tmp_path):
    dump = tmp_path / "solution.csv"
    code, _ = run_to_file(tmp_path, ["perron", "--problem", "interval-linear",
                                     "--grid", "21", "--dump", str(dump)])
    assert code == EXIT_PASS
    assert dump.read_text().startswith("node,x,u,residual_class")


def test_uniqueness_passes_and_inconclusive_fails(tmp_path):
    code, text = run_to_file(tmp_path, ["uniqueness", "--grid", "41"])
    assert code == EXIT_PASS
    assert ",pass" in text
    code, text = run_to_file(tmp_path, ["uniqueness", "--grid", "41",
                                        "--max-sweeps", "2"], "inc.csv")
    assert code == EXIT_FAIL
    assert "inconclusive" in text


def test_kelvin_constant_field(tmp_path):
    code, text = run_to_file(tmp_path, ["kelvin", "--field", "constant",
                                        "--samples", "10", "--centers", "1",
                                        "--lambdas", "0.1"])
    assert code == EXIT_PASS
    assert "sphere_identity" in text


def test_kelvin_harmonic_is_involution_only(tmp_path):
    code, text = run_to_file(tmp_path, ["kelvin", "--field", "harmonic",
                                        "--samples", "10"])
    assert code == EXIT_PASS
    assert "involution" in text
    assert "sphere_identity" not in text


def test_kelvin_oversized_radius_is_usage(capsys):
    # the admissible start radius for the constant field is 1/4
    assert dispatch(["kelvin", "--field", "constant", "--samples", "4",
                     "--centers", "1", "--lambdas", "0.9"]) == EXIT_USAGE
    assert "admissible start radius" in capsys.readouterr().err


def test_cone_axioms_failing_cone_exits_one(tmp_path):
    code, text = run_to_file(tmp_path, ["cone-axioms", "--cone", "one_pos"])
    assert code == EXIT_FAIL
    assert "trace_positive,false" in text


def test_envelope_file_source_roundtrip(tmp_path):
    xs = np.linspace(-1.0, 1.0, 81)
    grid_path = tmp_path / "grid.csv"
    grid_path.write_text(grid_to_csv(GridFn(((-1.0, 1.0),), np.abs(xs))))
    code, text = run_to_file(tmp_path, ["envelope", "--source", "file",
                                        "--input", str(grid_path), "--eps", "1e-2"])
    assert code == EXIT_PASS
    assert "row_ok" in text


def test_envelope_file_source_needs_input(capsys):
    assert dispatch(["envelope", "--source", "file"]) == EXIT_USAGE
    assert "--input" in capsys.readouterr().err


def test_probe_l_default_operator(tmp_path):
    code, text = run_to_file(tmp_path, ["probe-L", "--samples", "60"])
    assert code == EXIT_PASS
    assert "s_monotone,true" in text


def test_probe_l_non_monotone_operator_exits_one(tmp_path):
    code, text = run_to_file(tmp_path, ["probe-L", "--operator", "genL:cubic_mix",
                                        "--samples", "120"])
    assert code == EXIT_FAIL
    assert "s_monotone,false" in text
