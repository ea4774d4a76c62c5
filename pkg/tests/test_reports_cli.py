"""Reports, merging, run configuration and the command-line front end."""
import json
import os

import numpy as np
import pytest

from bergman_lab.cli import main
from bergman_lab.config import ConfigError, RunConfig, load_config, parse_config
from bergman_lab.domains import disc
from bergman_lab.kernels import disc_kernel
from bergman_lab.regularity import NegRho, RegularityProbe, h_regularity_ratio
from bergman_lab.reports import (ChunkStats, EstimateReport, MergeError, bundle_reports, combine_chunks, config_hash,
                                 merge_reports, read_report, unbundle, worst_status)


def _probe(**kw):
    base = {"eps_grid": (0.5,), "levels": 4, "n_samples": 8_000, "chunk_size": 2_000, "seed": 0}
    base.update(kw)
    return RegularityProbe(**base)


def _reg(**kw):
    return h_regularity_ratio(disc_kernel(), NegRho(disc().default_rho()), _probe(**kw))


def _body(path):
    with open(path) as fh:
        return fh.read().split("\n", 1)[1]


class TestReports:
    def test_round_trip(self, tmp_path):
        rep = EstimateReport("demo", "pass", metrics={"x": 1.5, "z": complex(1, 2)}, rows=[{"a": 1}, {"a": 2}],
                             settings={"seed": 3}, provenance={"property": "demo"},
                             chunks=[ChunkStats("c", 0, 10, 2.0, 1.0)])
        path = tmp_path / "r.jsonl"
        rep.write(path, timestamp="T0")
        header, back = read_report(path)
        assert header["created"] == "T0" and header["config_hash"] == rep.config_hash
        assert back.body_lines() == rep.body_lines()
        assert back.metrics["z"] == [1.0, 2.0]

    def test_header_is_the_only_varying_line(self, tmp_path):
        rep = _reg()
        rep.write(tmp_path / "a.jsonl", timestamp="2020")
        rep.write(tmp_path / "b.jsonl", timestamp="2030")
        a, b = (tmp_path / "a.jsonl").read_text(), (tmp_path / "b.jsonl").read_text()
        assert a != b and _body(tmp_path / "a.jsonl") == _body(tmp_path / "b.jsonl")

    def test_csv(self, tmp_path):
        rep = _reg()
        rep.write_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + len(rep.rows) and "ratio" in lines[0]

    def test_config_hash_stable_and_order_free(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_combine_chunks(self):
        mean, se, n = combine_chunks([ChunkStats("c", 0, 2, 2.0, 2.0), ChunkStats("c", 1, 2, 6.0, 18.0)])["c"]
        # values 1, 1, 3, 3: mean 2, sample variance 4/3
        assert (mean, n) == (2.0, 4) and se == pytest.approx(np.sqrt(4 / 3 / 4))

    def test_worst_status(self):
        assert worst_status(["pass", "inconclusive"]) == "inconclusive"
        assert worst_status(["inconclusive", "fail", "pass"]) == "fail"
        assert worst_status([]) == "pass"

    def test_exit_codes(self):
        assert [EstimateReport("x", s).exit_code for s in ("pass", "fail", "inconclusive")] == [0, 1, 3]

    def test_half_runs_merge_to_full(self):
        full = _reg()
        merged = merge_reports([_reg(chunks=(0, 2)), _reg(chunks=(2, 4))])
        assert merged.body_lines() == full.body_lines()

    def test_merge_order_free(self):
        a, b = _reg(chunks=(0, 2)), _reg(chunks=(2, 4))
        assert merge_reports([a, b]).body_lines() == merge_reports([b, a]).body_lines()

    def test_hash_mismatch(self):
        with pytest.raises(MergeError):
            merge_reports([_reg(chunks=(0, 2)), _reg(chunks=(2, 4), seed=1)])

    def test_overlapping_chunks(self):
        with pytest.raises(MergeError):
            merge_reports([_reg(chunks=(0, 2)), _reg(chunks=(1, 3))])

    def test_four_way_merge_halves_error_bar(self):
        # [DERIVED] 1/sqrt(N): four chunks give error bars ~2x smaller than one chunk
        one = _reg(chunks=(0, 1))
        four = merge_reports([_reg(chunks=(i, i + 1)) for i in range(4)])
        shrink = np.array([a["error"] / b["error"] for a, b in zip(one.rows, four.rows)])
        assert 1.5 < float(np.median(shrink)) < 2.7

    def test_bundle_round_trip_and_merge(self):
        parts_a = {"mc": _reg(chunks=(0, 2)), "det": EstimateReport("det", "pass", {"v": 1.0}, [{"r": 1}])}
        parts_b = {"mc": _reg(chunks=(2, 4)), "det": EstimateReport("det", "pass", {"v": 1.0}, [{"r": 1}])}
        ba, bb = bundle_reports("suite", parts_a), bundle_reports("suite", parts_b)
        back = unbundle(ba)
        assert back["mc"].body_lines() == parts_a["mc"].body_lines()
        merged = merge_reports([ba, bb])
        full = bundle_reports("suite", {"mc": _reg(), "det": parts_a["det"]})
        assert merged.body_lines() == full.body_lines()

    def test_bundle_status(self):
        b = bundle_reports("s", {"a": EstimateReport("a", "pass"), "b": EstimateReport("b", "inconclusive")})
        assert b.status == "inconclusive" and b.exit_code == 3


def _cfg(**kw):
    d = {"schema_version": 1, "suites": ["thm22"], "sampling": {"seed": 1}}
    d.update(kw)
    return d


class TestConfig:
    def test_minimal(self):
        cfg = parse_config(_cfg())
        assert isinstance(cfg, RunConfig) and cfg.suites == ("thm22",) and cfg.seed == 1
        assert cfg.tol("thm22", "ball_rel") == 1e-8

    def test_all_expands(self):
        assert len(parse_config(_cfg(suites="all")).suites) == 6

    @pytest.mark.parametrize("bad", [
        {"suites": ["nope"]},
        {"schema_version": 2},
        {"sampling": {}},
        {"sampling": {"seed": 1, "n": 0}},
        {"tolerances": {"not_a_key": 1.0}},
        {"tolerances": {"ball_rel": -1.0}},
        {"kernel": "magic"},
        {"units": {"distance": "metre"}},
        {"region": {"domain": "torus"}},
        {"options": {"eps": [1.5]}},
        {"extra": 1},
    ])
    def test_rejected(self, bad):
        with pytest.raises(ConfigError):
            parse_config(_cfg(**bad))

    def test_record_is_output_independent(self):
        a = parse_config(_cfg(output_dir="x"))
        b = parse_config(_cfg(output_dir="y"))
        assert a.record() == b.record() and "units" in a.record()

    def test_region(self):
        cfg = parse_config(_cfg(region={"domain": "disc", "alpha": [2], "k": 1}))
        assert cfg.region.is_successor and cfg.region.region().n == 2

    def test_load_invalid_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)


class TestCli:
    def test_unknown_suite(self, tmp_path, capsys):
        assert main(["verify", "nope", "--out", str(tmp_path)]) == 2
        assert "unknown suite" in capsys.readouterr().err

    def test_bad_flag(self, capsys):
        assert main(["verify", "thm22", "--bogus"]) == 2

    def test_bad_tolerance(self, tmp_path):
        assert main(["verify", "thm22", "--tol", "ball_rel", "--out", str(tmp_path)]) == 2

    def test_config_without_seed(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"schema_version": 1, "suites": ["thm22"]}))
        assert main(["verify", "--config", str(p)]) == 2

    def test_thm22_example(self, tmp_path, capsys):
        code = main(["verify", "thm22", "--domain", "disc", "--alpha", "1", "--k", "1", "--seed", "7",
                     "--out", str(tmp_path)])
        assert code == 0
        _, rep = read_report(tmp_path / "thm22.jsonl")
        assert rep.metrics["ball_oracle"]["max_rel_error"] <= 1e-8
        assert (tmp_path / "thm22.csv").exists()
        assert "overall: pass" in capsys.readouterr().out

    def test_lemma34_example(self, tmp_path):
        assert main(["verify", "lemma34", "--k", "1", "--delta", "-0.5", "--out", str(tmp_path)]) == 0
        _, rep = read_report(tmp_path / "lemma34.jsonl")
        slope = rep.metrics["forelli_rudin"]["delta=-0.5:slope"]
        assert abs(slope + 0.5) <= 0.05

    def test_config_file_run(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"schema_version": 1, "suites": ["mobius"], "sampling": {"seed": 2, "n": 50},
                                 "region": {"domain": "disc", "alpha": [2], "k": 1},
                                 "output_dir": str(tmp_path / "out")}))
        assert main(["verify", "--config", str(p)]) == 0
        assert (tmp_path / "out" / "mobius.jsonl").exists()

    def test_failing_tolerance_exits_one(self, tmp_path):
        code = main(["verify", "thm22", "--domain", "disc", "--alpha", "1", "--k", "1", "--samples", "10",
                     "--tol", "ball_rel=1e-30", "--out", str(tmp_path)])
        assert code == 1

    def test_kernel_eval(self, capsys):
        assert main(["kernel", "eval", "--domain", "disc", "--z", "0", "--zeta", "0"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["value"][0] == pytest.approx(1 / np.pi, rel=1e-14)

    def test_kernel_eval_outside(self):
        assert main(["kernel", "eval", "--domain", "disc", "--z", "1.5", "--zeta", "0"]) == 2

    def test_merge_verb(self, tmp_path):
        _reg(chunks=(0, 2)).write(tmp_path / "a.jsonl")
        _reg(chunks=(2, 4)).write(tmp_path / "b.jsonl")
        _reg().write(tmp_path / "full.jsonl")
        assert main(["merge", str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl"), "-o",
                     str(tmp_path / "m.jsonl")]) in (0, 1, 3)
        assert _body(tmp_path / "m.jsonl") == _body(tmp_path / "full.jsonl")

    def test_merge_verb_mismatch(self, tmp_path):
        _reg(chunks=(0, 2)).write(tmp_path / "a.jsonl")
        _reg(chunks=(2, 4), seed=5).write(tmp_path / "b.jsonl")
        assert main(["merge", str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl"), "-o",
                     str(tmp_path / "m.jsonl")]) == 2

    def test_merge_missing_file(self, tmp_path):
        assert main(["merge", str(tmp_path / "none.jsonl"), "-o", str(tmp_path / "m.jsonl")]) == 2

    def test_identical_runs_identical_bodies(self, tmp_path):
        args = ["verify", "defining", "--domain", "ball", "--n", "2", "--samples", "500", "--seed", "4"]
        assert main(args + ["--out", str(tmp_path / "a"), "--timestamp", "first"]) == 0
        assert main(args + ["--out", str(tmp_path / "b"), "--timestamp", "second"]) == 0
        assert _body(tmp_path / "a" / "defining.jsonl") == _body(tmp_path / "b" / "defining.jsonl")
        assert os.path.getsize(tmp_path / "a" / "defining.csv") > 0
