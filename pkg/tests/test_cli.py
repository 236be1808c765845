"""Tests for the experiment runner.

Mechanics are pinned end-to-end on the cheap experiment kinds: config
parsing against the per-kind schemas, diagnostics that mirror module
invariants without running anything, manifest completeness (every file
digested, manifest last), the determinism contract (identical config
implies byte-identical CSVs), and the 0/1/2 exit code convention.
"""

import hashlib
import json

import numpy as np
import pytest

from ccresolvent import cli
from ccresolvent.cli import (
    KINDS,
    ExperimentConfig,
    UsageError,
    main,
    parse_config,
    run_experiment,
    validate_config,
)


def write_config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def minimal(kind, out_dir, extra=""):
    return f"[experiment]\nkind = {kind}\n\n[output]\ndir = {out_dir}\n{extra}"


class TestParseConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError):
            parse_config(tmp_path / "nope.ini")

    def test_kind_required(self, tmp_path):
        path = write_config(tmp_path, "[experiment]\nseed = 3\n")
        with pytest.raises(UsageError):
            parse_config(path)

    def test_unknown_kind(self, tmp_path):
        path = write_config(tmp_path, "[experiment]\nkind = frobnicate\n")
        with pytest.raises(UsageError):
            parse_config(path)

    def test_unknown_section_and_key_rejected(self, tmp_path):
        path = write_config(tmp_path,
                            "[experiment]\nkind = scan\n\n[wave]\ndt = 1\n")
        with pytest.raises(UsageError):
            parse_config(path)
        path = write_config(tmp_path,
                            "[experiment]\nkind = scan\n\n[scan]\nfoo = 1\n")
        with pytest.raises(UsageError):
            parse_config(path)

    def test_defaults_are_merged(self, tmp_path):
        path = write_config(tmp_path, minimal("wave-decay", tmp_path / "o"))
        cfg = parse_config(path)
        assert cfg.kind == "wave-decay"
        assert cfg.seed == 0
        assert cfg.sections["wave"]["omega0"] == "14.0"
        assert cfg.sections["model"]["modes"] == "1.0:1"

    def test_seed_must_be_integer(self, tmp_path):
        path = write_config(
            tmp_path, "[experiment]\nkind = scan\nseed = pi\n")
        with pytest.raises(UsageError):
            parse_config(path)

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        path = write_config(tmp_path, minimal("cv-energy", "rel/out"))
        cfg = parse_config(path)
        assert cfg.out_dir == tmp_path / "root" / "rel" / "out"
        path = write_config(tmp_path, minimal("cv-energy", tmp_path / "abs"))
        assert parse_config(path).out_dir == tmp_path / "abs"


class TestValidateConfig:
    @pytest.mark.parametrize("kind", KINDS)
    def test_every_default_config_is_clean(self, tmp_path, kind):
        path = write_config(tmp_path, minimal(kind, tmp_path / "o"))
        assert validate_config(parse_config(path)) == []

    def test_metric_inner_radius_invariant(self, tmp_path):
        path = write_config(tmp_path, minimal("cv-assumptions", tmp_path,
                                              "\n[metric]\na = 0.5\n"))
        diags = validate_config(parse_config(path))
        assert any("metric.a" in d and "a >= 1" in d for d in diags)

    def test_weight_exponent_window(self, tmp_path):
        path = write_config(tmp_path, minimal("cv-highenergy", tmp_path,
                                              "\n[cv]\ns = 0.9\n"))
        diags = validate_config(parse_config(path))
        assert any("cv.s" in d and "delta0" in d for d in diags)

    def test_scan_region_must_avoid_continuation_boundary(self, tmp_path):
        path = write_config(
            tmp_path, minimal("scan", tmp_path,
                              "\n[scan]\nregion = 0.6,1.4,2.0,8.0\n"))
        diags = validate_config(parse_config(path))
        assert any("scan.region" in d and "continuation" in d for d in diags)

    def test_wave_constraints(self, tmp_path):
        path = write_config(tmp_path, minimal("wave-decay", tmp_path,
                                              "\n[wave]\nepsilon = 1.5\n"
                                              "t_lo = 2\nt_hi = 300\n"))
        diags = validate_config(parse_config(path))
        assert any("wave.epsilon" in d for d in diags)
        assert any("t_lo" in d for d in diags)

    def test_norm_orders_checked(self, tmp_path):
        path = write_config(tmp_path, minimal("model-norms", tmp_path,
                                              "\n[norms]\np = 0,7\nq = 3\n"))
        diags = validate_config(parse_config(path))
        assert any("norms.p" in d for d in diags)
        assert any("norms.q" in d for d in diags)

    def test_non_numeric_field_is_a_diagnostic(self, tmp_path):
        path = write_config(tmp_path, minimal("bessel-bounds", tmp_path,
                                              "\n[bessel]\nm_max = many\n"))
        diags = validate_config(parse_config(path))
        assert any("bessel.m_max" in d for d in diags)

    def test_run_refuses_dirty_config(self, tmp_path):
        path = write_config(tmp_path, minimal("cv-assumptions", tmp_path,
                                              "\n[metric]\na = 0.5\n"))
        with pytest.raises(UsageError):
            run_experiment(parse_config(path))
        assert not (tmp_path / "manifest.json").exists()


BB_SMALL = "\n[bessel]\nm_max = 6\nn_t = 41\n"


class TestRunExperiment:
    def test_manifest_lists_every_artifact_with_digest(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, minimal("bessel-bounds", out, BB_SMALL))
        manifest = run_experiment(parse_config(path))
        assert manifest.status == "pass"
        data = json.loads((out / "manifest.json").read_text())
        names = {a["path"] for a in data["artifacts"]}
        on_disk = {p.name for p in out.iterdir() if p.name != "manifest.json"}
        assert names == on_disk and names
        for a in data["artifacts"]:
            digest = hashlib.sha256((out / a["path"]).read_bytes()).hexdigest()
            assert digest == a["sha256"]

    def test_stray_files_are_digested_too(self, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "stray.txt").write_text("leftover\n")
        path = write_config(tmp_path, minimal("cv-energy", out))
        run_experiment(parse_config(path))
        data = json.loads((out / "manifest.json").read_text())
        stray = [a for a in data["artifacts"] if a["path"] == "stray.txt"]
        assert stray and not stray[0]["from_this_run"]

    def test_reruns_are_byte_identical(self, tmp_path):
        digests = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            path = write_config(tmp_path, minimal("bessel-bounds", out,
                                                  BB_SMALL), f"{tag}.ini")
            run_experiment(parse_config(path))
            data = json.loads((out / "manifest.json").read_text())
            digests.append({a["path"]: a["sha256"]
                            for a in data["artifacts"]})
        assert digests[0] == digests[1]

    def test_seventeen_digit_floats(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, minimal("bessel-bounds", out, BB_SMALL))
        run_experiment(parse_config(path))
        body = (out / "pointwise_growth_bounds.csv").read_text().splitlines()
        rows = [l for l in body if not l.startswith("#")][1:]
        cell = rows[0].split(",")[4]
        assert float(cell) != 0.0 and len(cell.replace("-", "").
                                          replace(".", "").lstrip("0")) >= 16

    def test_failing_check_fails_the_manifest(self, tmp_path):
        # the cylinder family violates the boundary-metric assumptions,
        # so its form constant comes back 0 and the check reads FAIL
        out = tmp_path / "out"
        path = write_config(tmp_path, minimal(
            "cv-assumptions", out, "\n[metric]\nfamily = cylinder\n"))
        manifest = run_experiment(parse_config(path))
        assert manifest.status == "fail"
        assert manifest.checks["assump2_form_constant"] == "FAIL"

    def test_scan_runs_clean_region(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, minimal(
            "scan", out,
            "\n[scan]\nregion = 0.9,1.2,2.0,4.0\ndensity = 16\n"))
        manifest = run_experiment(parse_config(path))
        assert manifest.checks["candidates_resolved"] == "PASS"
        assert (out / "scan_map.csv").exists()
        assert (out / "scan_zeros.csv").exists()
        zeros = [l for l in (out / "scan_zeros.csv").read_text().splitlines()
                 if l and not l.startswith("#")]
        assert zeros[0] == "re_xi,im_xi,multiplicity,residual"
        assert len(zeros) == 1  # free model: nothing in the region

    def test_wave_decay_artifacts(self, tmp_path):
        out = tmp_path / "out"
        path = write_config(tmp_path, minimal(
            "wave-decay", out,
            "\n[wave]\ngrid = -12,4,1601\ncenter = -3.0\nwidth = 0.5\n"
            "omega0 = 12.0\nt_hi = 20.0\ncross_check_time =\ndt =\n"))
        manifest = run_experiment(parse_config(path))
        assert manifest.checks["decay_exponents"] == "PASS"
        assert "two_method_cross_check" not in manifest.checks
        lines = (out / "decay.csv").read_text().splitlines()
        notes = [l for l in lines if l.startswith("#")]
        assert any("local norm" in n for n in notes)
        header = next(l for l in lines if not l.startswith("#"))
        assert header == "t,local_norm,window_id,fitted_exponent"


class TestMain:
    def test_list_experiments(self, capsys):
        assert main(["list-experiments"]) == 0
        out = capsys.readouterr().out.split()
        assert list(KINDS) == out

    def test_unknown_kind_exits_2_without_files(self, tmp_path, capsys):
        out = tmp_path / "out"
        path = write_config(tmp_path, minimal("frobnicate", out))
        assert main(["run", str(path)]) == 2
        assert not out.exists()

    def test_validate_verb_exit_codes(self, tmp_path, capsys):
        clean = write_config(tmp_path, minimal("cv-energy", tmp_path / "o"))
        assert main(["validate", str(clean)]) == 0
        dirty = write_config(tmp_path, minimal(
            "cv-energy", tmp_path / "o", "\n[metric]\na = 0.2\n"), "d.ini")
        assert main(["validate", str(dirty)]) == 2
        assert "metric.a" in capsys.readouterr().out

    def test_run_exit_reflects_checks(self, tmp_path, capsys):
        ok = write_config(tmp_path, minimal("cv-assumptions",
                                            tmp_path / "ok"))
        assert main(["run", str(ok)]) == 0
        assert "[PASS]" in capsys.readouterr().out
        bad = write_config(tmp_path, minimal(
            "cv-assumptions", tmp_path / "bad",
            "\n[metric]\nfamily = cylinder\n"), "bad.ini")
        assert main(["run", str(bad)]) == 1
        assert "[FAIL]" in capsys.readouterr().out

    def test_no_verb_is_usage(self):
        assert main([]) == 2
