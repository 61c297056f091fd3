import json
import subprocess
import sys
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from critbd import experiments as ex
from critbd.experiments import (
    ConfigError,
    default_config,
    format_number,
    parse_config,
    report,
    run,
    serialize_config,
)


def test_config_round_trip():
    for name in ex.EXPERIMENTS:
        cfg = default_config(name)
        assert parse_config(serialize_config(cfg)) == cfg


def test_config_round_trip_with_overrides():
    cfg = replace(
        default_config("persistence"),
        lam=1.5, alpha=0.25, replicates=123, seed=99,
        s_values=(0.25, 0.5, 2.0), out="x.csv",
    )
    assert parse_config(serialize_config(cfg)) == cfg


def test_unknown_keys_listed():
    with pytest.raises(ConfigError, match="frobnicate"):
        parse_config("experiment = persistence\nfrobnicate = 3\n")
    with pytest.raises(ConfigError, match="typo_key"):
        parse_config("experiment = persistence\ntypo_key = 1\nalso_bad = 2\n")


def test_config_comments_and_blank_lines():
    cfg = parse_config("# a comment\n\nexperiment = renewal-solve\nstep = 0.02 # inline\n")
    assert cfg.step == 0.02


def test_invalid_values_rejected():
    with pytest.raises(ConfigError, match="alpha"):
        parse_config("experiment = persistence\nalpha = 1.5\n")
    with pytest.raises(ConfigError, match="lambda"):
        parse_config("experiment = persistence\nlambda = -1\n")
    with pytest.raises(ConfigError):
        parse_config("experiment = nosuch\n")
    with pytest.raises(ConfigError, match="does not match"):
        parse_config("experiment = persistence\n", experiment="tn-scaling")


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_number_round_trips(x):
    assert float(format_number(x)) == x


def test_format_number_ints():
    assert format_number(3) == "3"
    assert format_number(True) == "1"
    assert format_number(0.1) == "0.10000000000000001"


def test_renewal_solve_row_count(tmp_path):
    cfg = replace(default_config("renewal-solve"), out=str(tmp_path / "r.csv"))
    run(cfg)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "t,F,Fprime"
    assert len(lines) == 1 + 5001  # header + horizon/step + 1 rows


def test_persistence_alpha_one(tmp_path):
    cfg = replace(
        default_config("persistence"),
        alpha=1.0, replicates=200, t=5.0, out=str(tmp_path / "p.csv"),
    )
    rec = run(cfg)
    row = rec.payload["estimate"]["rows"][0]
    header = rec.payload["estimate"]["header"]
    assert row[header.index("estimate")] == 1.0


def test_schemas_frozen(tmp_path):
    # documented output headers; drift here breaks downstream readers
    cases = {
        "hitting-cdf": ("replicate,time,censored,events", {"replicates": 50, "time_cap": 100.0}),
        "persistence": (
            "lambda,alpha,t,replicates,completed,same_count,estimate,stderr",
            {"replicates": 50, "t": 5.0},
        ),
        "tn-scaling": ("n,replicate,total_time,ratio", {"replicates": 5, "n": 100}),
        "renewal-solve": ("t,F,Fprime", {"step": 0.1, "horizon": 5.0}),
    }
    for name, (header, overrides) in cases.items():
        cfg = replace(default_config(name), out=str(tmp_path / f"{name}.csv"), **overrides)
        run(cfg)
        assert (tmp_path / f"{name}.csv").read_text().splitlines()[0] == header
    cfg = replace(
        default_config("tauberian"),
        step=0.05, horizon=100.0, refine_levels=2,
        h_values=(50.0, 100.0), s_values=(0.1,),
        out=str(tmp_path / "tb.csv"),
    )
    run(cfg)
    assert (tmp_path / "tb_moments.csv").read_text().splitlines()[0] == "h,m,s2,tail_product"
    assert (tmp_path / "tb_transforms.csv").read_text().splitlines()[0] == "s,value,tail_share"


def test_worker_count_invariance(tmp_path):
    base = replace(
        default_config("persistence"), replicates=400, t=10.0, seed=408,
    )
    paths = []
    for workers, name in ((1, "w1.csv"), (8, "w8.csv")):
        cfg = replace(base, out=str(tmp_path / name))
        run(cfg, workers=workers)
        paths.append(tmp_path / name)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_rerun_reproduces_bytes(tmp_path):
    cfg = replace(
        default_config("hitting-cdf"), replicates=500, time_cap=100.0, seed=5,
        out=str(tmp_path / "a.csv"),
    )
    run(cfg)
    first = (tmp_path / "a.csv").read_bytes()
    run(cfg)
    assert (tmp_path / "a.csv").read_bytes() == first


def test_seed_override_env(tmp_path, monkeypatch):
    cfg = replace(
        default_config("hitting-cdf"), replicates=50, time_cap=100.0, seed=1,
        out=str(tmp_path / "o.csv"),
    )
    rec_plain = run(cfg, write=False)
    monkeypatch.setenv("SEED_OVERRIDE", "777")
    rec_override = run(cfg, write=False)
    assert rec_override.seed_override_applied
    assert rec_plain.payload != rec_override.payload
    monkeypatch.setenv("SEED_OVERRIDE", "1")
    rec_same = run(cfg, write=False)
    assert rec_same.payload == rec_plain.payload


def test_json_record_round_trip(tmp_path):
    cfg = replace(
        default_config("persistence"),
        replicates=100, t=5.0, format="json", out=str(tmp_path / "p.json"),
    )
    rec = run(cfg)
    loaded = ex.load_record(str(tmp_path / "p.json"))
    assert loaded.config == cfg
    assert loaded.payload == rec.payload
    doc = json.loads((tmp_path / "p.json").read_text())
    assert "wall_clock" not in doc  # volatile metadata stays out of files


def test_report_persistence_ordering():
    recs = []
    for lam, seed in ((1.5, 2), (0.5, 3)):
        cfg = replace(default_config("persistence"), lam=lam, replicates=100, t=5.0, seed=seed)
        recs.append(run(cfg, write=False))
    table = report(recs)
    lams = [row[0] for row in table["rows"]]
    assert lams == sorted(lams)


def test_report_tn_summary():
    recs = []
    for n, seed in ((100, 4), (1000, 5)):
        cfg = replace(default_config("tn-scaling"), n=n, replicates=30, seed=seed)
        recs.append(run(cfg, write=False))
    table = report(recs)
    assert table["header"] == ["n", "replicates", "median_ratio", "iqr_ratio"]
    assert [row[0] for row in table["rows"]] == [100, 1000]


def test_report_errors():
    with pytest.raises(ValueError, match="no records"):
        report([])
    a = run(replace(default_config("persistence"), replicates=50, t=5.0), write=False)
    b = run(replace(default_config("tn-scaling"), n=100, replicates=5), write=False)
    with pytest.raises(ValueError, match="mixed"):
        report([a, b])


def _cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "critbd.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def test_cli_validation_error_exit_code(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("experiment = persistence\nbogus_key = 1\n")
    proc = _cli(["persistence", "--config", str(bad)], tmp_path)
    assert proc.returncode == 2
    assert "bogus_key" in proc.stderr


def test_cli_success_and_partial_exit_codes(tmp_path):
    cfg = tmp_path / "ok.txt"
    cfg.write_text("experiment = renewal-solve\nstep = 0.1\nhorizon = 5\n")
    proc = _cli(["renewal-solve", "--config", str(cfg), "--out", "r.csv"], tmp_path)
    assert proc.returncode == 0, proc.stderr
    # a tiny event cap forces aborted replicates -> partial-result exit code
    cfg2 = tmp_path / "partial.txt"
    cfg2.write_text(
        "experiment = persistence\nlambda = 1.5\nt = 10\nreplicates = 50\nevent_cap = 100\n"
    )
    proc = _cli(["persistence", "--config", str(cfg2), "--out", "p.csv"], tmp_path)
    assert proc.returncode == 3, proc.stderr


def test_cli_report_round_trip(tmp_path):
    for n, seed in ((100, 8), (200, 9)):
        cfg = tmp_path / f"tn{n}.txt"
        cfg.write_text(
            f"experiment = tn-scaling\nn = {n}\nreplicates = 10\nseed = {seed}\n"
            f"format = json\nout = tn{n}.json\n"
        )
        proc = _cli(["tn-scaling", "--config", str(cfg)], tmp_path)
        assert proc.returncode == 0, proc.stderr
    proc = _cli(["report", "tn100.json", "tn200.json"], tmp_path)
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0] == "n,replicates,median_ratio,iqr_ratio"
    assert len(lines) == 3
