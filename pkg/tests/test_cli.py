import json

import pytest

from qrec.cli import ConfigError, build_config, int_list, main, parse_header


def run(tmp_path, *args):
    return main(list(args) + ["--output", str(tmp_path)])


def test_int_list():
    assert int_list("5,10,20") == [5, 10, 20]
    assert int_list("1:3,7") == [1, 2, 3, 7]


def test_estimate_writes_header_and_rows(tmp_path):
    assert run(tmp_path, "estimate", "--system", "beta:2", "--n", "5,10", "--samples", "5000", "--seed", "1") == 0
    text = (tmp_path / "an.csv").read_text()
    header = parse_header(text)
    assert header["system"] == "beta:2" and header["seed"] == "1"
    assert "workers" not in header and "output" not in header
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "n,psi,psi_delta,estimate,stderr,hits,ambiguous"
    assert len(lines) == 3


def test_replay_from_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "pair", "--m", "2,3", "--n", "6", "--samples", "3000", "--seed", "4") == 0
    assert main(["pair", "--config", str(a / "pair.csv"), "--output", str(b), "--workers", "2"]) == 0
    assert (a / "pair.csv").read_bytes() == (b / "pair.csv").read_bytes()


def test_json_mirrors_csv_fields(tmp_path):
    assert run(tmp_path, "zn", "--N", "16", "--samples", "500", "--seed", "2", "--format", "json",
               "--psi", "power:c=0.5,a=1") == 0
    payload = json.loads((tmp_path / "zn.json").read_text())
    assert payload["config"]["N"] == 16 and payload["columns"][:5] == ["N", "mean", "second_moment", "pz_lhs", "pz_rhs"]
    assert [row["N"] for row in payload["rows"]] == [4, 8, 16]
    replay = tmp_path / "again"
    assert main(["zn", "--config", str(tmp_path / "zn.json"), "--output", str(replay)]) == 0
    assert (replay / "zn.json").read_bytes() == (tmp_path / "zn.json").read_bytes()


def test_ini_file_and_flag_override(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[experiment]\nsystem = cantor3\nseed = 3\nsamples = 2000\n\n[estimate]\nn = 2\n"
                   "psi = constant:c=0.02\n")
    assert main(["estimate", "--config", str(ini), "--samples", "1000", "--output", str(tmp_path)]) == 0
    header = parse_header((tmp_path / "an.csv").read_text())
    assert header["system"] == "cantor3" and header["samples"] == "1000" and header["n"] == "2"


@pytest.mark.parametrize("args", [
    ["estimate", "--n", "5"],  # no seed
    ["estimate", "--seed", "1", "--psi", "wave:c=1"],
    ["estimate", "--seed", "1", "--system", "tent"],
    ["estimate", "--seed", "1", "--samples", "0"],
    ["pair", "--seed", "1", "--m", "5", "--n", "5"],
    ["dichotomy", "--seed", "1", "--window", "100"],
    ["zn", "--seed", "1", "--lam", "1.5"],
])
def test_config_errors_exit_two(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_unknown_ini_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[experiment]\nseed = 1\ncolour = red\n")
    assert main(["estimate", "--config", str(ini), "--output", str(tmp_path)]) == 2


def test_ambiguity_budget_exit_three(tmp_path):
    # zero guard digits leave most verdicts undecidable
    assert run(tmp_path, "estimate", "--seed", "1", "--n", "3", "--samples", "2000", "--guard", "1",
               "--digits", "4", "--psi", "constant:c=0.3") == 3
    assert (tmp_path / "an.csv").exists()


def test_precision_exhaustion_exit_four(tmp_path, monkeypatch):
    from qrec import cli
    from qrec.errors import PrecisionExhausted

    def exhausted(config):
        raise PrecisionExhausted("cap reached")

    monkeypatch.setitem(cli.RUNNERS, "estimate", exhausted)
    assert run(tmp_path, "estimate", "--seed", "1") == 4


def test_dichotomy_columns(tmp_path):
    assert run(tmp_path, "dichotomy", "--psi", "power:c=0.1,a=1", "--window", "20:80", "--samples", "500",
               "--seed", "7") == 0
    lines = [l for l in (tmp_path / "dichotomy.csv").read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("window_start,window_end,hit_fraction,series_partial_sum,verdict")
    assert len(lines) == 1 + 3 and lines[1].split(",")[4] == "divergent"


def test_cylinders_and_conditions(tmp_path):
    assert run(tmp_path, "cylinders", "--system", "beta:phi", "--n-max", "5", "--seed", "0") == 0
    rows = [l for l in (tmp_path / "cylinders.csv").read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "word,left,right,measure,K_Jn" and len(rows) == 1 + 13
    assert run(tmp_path, "verify-conditions", "--system", "cantor3", "--n-max", "5", "--seed", "0",
               "--mixing-samples", "30000") == 0
    rows = [l for l in (tmp_path / "conditions.csv").read_text().splitlines() if not l.startswith("#")]
    assert [r.split(",")[1] for r in rows[1:]] == ["PASS"] * 5


def test_build_config_types():
    cfg = build_config("estimate", {"samples": "10", "seed": "3"}, {"split": "false", "lam": "0.25"})
    assert cfg.samples == 10 and cfg.seed == 3 and cfg.split is False and cfg.lam == 0.25
    with pytest.raises(ConfigError):
        build_config("estimate", {"seed": "x"}, {})
