"""Harness: sample sizes, certification, trace/report files, CLI, sweeps."""

import dataclasses
import json
import math

import numpy as np
import pytest

from ncgopt import SolveConfig, certify, make_matfac_problem, sample_sizes
from ncgopt.errors import CertificationUnavailable, ConfigError
from ncgopt.harness.cli import run_cli
from ncgopt.harness.reporting import TRACE_COLUMNS, RunTrace
from ncgopt.harness.samples import sample_sizes_explicit
from ncgopt.core import SmoothnessParams
from ncgopt.solvers import SolveReport


class TestSampleSizes:
    def test_plugin_example_s1(self):
        # G = 1, L2 = 1, eps1 = eps2 = 1, delta' = 2/e: log(2/delta') = 1
        params = SmoothnessParams(l1=1.0, l2=1.0, delta_gap=1.0, g_bound=1.0)
        s1, _ = sample_sizes_explicit(1.0, 1.0, 2.0 / math.e, params, 4)
        assert s1 == 9216

    def test_plugin_example_s2(self):
        # with log(4d/delta') = 1 the Hessian size is exactly 9216 L1^2/eps2^2
        params = SmoothnessParams(l1=1.0, l2=1.0, delta_gap=1.0, g_bound=1.0)
        delta_prime = 2.0 / math.e
        d = math.e * delta_prime / 4.0  # makes the log factor exactly one
        _, s2 = sample_sizes_explicit(1.0, 1.0, delta_prime, params, d)
        assert s2 == 9216

    def test_halving_eps2_quadruples_s2(self):
        params = SmoothnessParams(l1=2.0, l2=1.0, delta_gap=1.0, g_bound=1.0)
        # hold the log factor fixed by keeping delta' and d unchanged
        log_factor = math.log(4 * 10 / 0.05)
        raw = lambda eps2: 9216.0 * params.l1**2 / eps2**2 * log_factor
        assert raw(0.5) / raw(1.0) == pytest.approx(4.0)
        _, s2a = sample_sizes_explicit(1.0, 1.0, 0.05, params, 10)
        _, s2b = sample_sizes_explicit(1.0, 0.5, 0.05, params, 10)
        assert s2b == pytest.approx(4 * s2a, abs=4)

    def test_missing_g_bound_rejected(self):
        params = SmoothnessParams(l1=1.0, l2=1.0, delta_gap=1.0)
        with pytest.raises(ConfigError):
            sample_sizes(SolveConfig(eps1=0.1, eps2=0.3), params, 5)

    def test_cfg_variant_consistent(self):
        params = SmoothnessParams(l1=1.0, l2=1.0, delta_gap=1.0, g_bound=1.0)
        s1, s2 = sample_sizes(SolveConfig(eps1=0.1, eps2=0.3, delta=0.1), params, 5)
        assert s1 > 0 and s2 > 0


class TestCertify:
    def test_trig_minimum_passes_both(self, trig2):
        cert = certify(trig2, np.array([np.pi, np.pi]), 1e-3, 1e-2)
        assert cert.passed_first_order and cert.passed_second_order
        assert cert.lambda_min == pytest.approx(1.0)

    def test_trig_saddle_fails_second_order(self, trig2):
        cert = certify(trig2, np.zeros(2), 1e-3, 1e-2)
        assert cert.passed_first_order and not cert.passed_second_order
        assert cert.lambda_min == pytest.approx(-1.0)

    def test_matfac_global_minimum(self):
        p = make_matfac_problem(np.eye(2), 2)
        cert = certify(p, np.eye(2).reshape(-1), 1e-3, 1e-2)
        assert cert.passed_first_order and cert.passed_second_order

    def test_unavailable_above_cap(self, trig2, monkeypatch):
        monkeypatch.setenv("NCGOPT_DENSE_CAP", "1")
        with pytest.raises(CertificationUnavailable):
            certify(trig2, np.zeros(2), 1e-3, 1e-2)


class TestTraceCsv:
    def test_roundtrip(self, tmp_path, trig2):
        from ncgopt import ncg_a1
        from ncgopt.problems import default_start

        rep = ncg_a1(trig2, default_start(trig2, 1), SolveConfig(eps1=1e-3, eps2=1e-2, seed=1))
        path = tmp_path / "t.trace.csv"
        rep.trace.write_csv(path)
        back = RunTrace.read_csv(path)
        assert len(back) == len(rep.trace)
        for a, b in zip(rep.trace.rows, back.rows):
            assert a.iter == b.iter and a.f == b.f and a.grad_norm == b.grad_norm
            assert a.step_kind == b.step_kind and a.hvp_cum == b.hvp_cum

    def test_header_matches_schema(self, tmp_path, trig2):
        from ncgopt import gd

        rep = gd(trig2, np.array([0.4, 0.2]), 0.5)
        path = tmp_path / "g.trace.csv"
        rep.trace.write_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(TRACE_COLUMNS)

    def test_cumulative_columns_nondecreasing(self, trig10):
        from ncgopt import ncg_a1
        from ncgopt.problems import default_start

        rep = ncg_a1(trig10, default_start(trig10, 2), SolveConfig(eps1=1e-3, eps2=1e-2, seed=2))
        hvp = [r.hvp_cum for r in rep.trace.rows]
        grad = [r.grad_cum for r in rep.trace.rows]
        assert hvp == sorted(hvp) and grad == sorted(grad)


def _run_args(tmp_path, name, extra=()):
    return [
        "run",
        "--problem",
        "trig",
        "--algo",
        "ncg-a1",
        "--eps1",
        "1e-3",
        "--eps2",
        "1e-2",
        "--delta",
        "0.1",
        "--seed",
        "7",
        "--out",
        str(tmp_path / name),
        *extra,
    ]


class TestCli:
    def test_run_writes_outputs_and_exits_zero(self, tmp_path):
        code = run_cli(_run_args(tmp_path, "t1"))
        assert code == 0
        assert (tmp_path / "t1.trace.csv").exists()
        assert (tmp_path / "t1.report.json").exists()

    def test_unknown_algorithm_is_usage_error(self, tmp_path):
        assert run_cli(["run", "--algo", "nope", "--out", str(tmp_path / "x")]) == 64

    def test_missing_subcommand_is_usage_error(self):
        assert run_cli([]) == 64

    def test_reproducibility_byte_identical(self, tmp_path):
        assert run_cli(_run_args(tmp_path, "a")) == 0
        assert run_cli(_run_args(tmp_path, "b")) == 0
        a = (tmp_path / "a.trace.csv").read_bytes()
        b = (tmp_path / "b.trace.csv").read_bytes()
        assert a == b

    def test_report_schema_complete(self, tmp_path):
        run_cli(_run_args(tmp_path, "t2"))
        payload = json.loads((tmp_path / "t2.report.json").read_text())
        for field in dataclasses.fields(SolveReport):
            assert field.name in payload
        assert payload["certificate"]["passed_first_order"] is True
        assert payload["trace"]["rows"] == payload["iters"]

    def test_certification_failure_exit_code(self, tmp_path):
        code = run_cli(
            [
                "certify",
                "--problem",
                "trig",
                "--eps1",
                "1e-3",
                "--eps2",
                "1e-2",
                "--x",
                "0.0,0.0",
            ]
        )
        assert code == 2

    def test_run_exit_two_when_certificate_fails(self, tmp_path):
        # curvature-only descent stops at a PSD point regardless of the
        # gradient, so its first-order certificate flag can fail
        code = run_cli(
            [
                "run",
                "--problem",
                "trig",
                "--algo",
                "ncd",
                "--ncd-pure",
                "--eps1",
                "1e-3",
                "--eps2",
                "1e-2",
                "--x0",
                "1.77,1.77",
                "--seed",
                "4",
                "--out",
                str(tmp_path / "pure"),
            ]
        )
        assert code == 2

    def test_trace_length_equals_iters(self, tmp_path):
        run_cli(_run_args(tmp_path, "len"))
        payload = json.loads((tmp_path / "len.report.json").read_text())
        trace = RunTrace.read_csv(tmp_path / "len.trace.csv")
        assert len(trace) == payload["iters"]

    def test_certify_pass_exit_code(self):
        code = run_cli(
            [
                "certify",
                "--problem",
                "trig",
                "--eps1",
                "1e-3",
                "--eps2",
                "1e-2",
                "--x",
                f"{np.pi},{np.pi}",
            ]
        )
        assert code == 0

    def test_list_problems(self, capsys):
        assert run_cli(["list-problems"]) == 0
        out = capsys.readouterr().out.split()
        assert out == ["finitesum-sigmoid", "matfac", "trig"]

    def test_problem_opt_and_config(self, tmp_path):
        cfgfile = tmp_path / "prob.toml"
        cfgfile.write_text('[problem]\nd = 3\namplitudes = [1.0, 0.5, 2.0]\n')
        code = run_cli(
            [
                "run",
                "--problem",
                "trig",
                "--config",
                str(cfgfile),
                "--algo",
                "gd",
                "--eps1",
                "1e-2",
                "--seed",
                "3",
                "--out",
                str(tmp_path / "cfg"),
            ]
        )
        assert code == 0
        payload = json.loads((tmp_path / "cfg.report.json").read_text())
        assert len(payload["x_final"]) == 3


class TestSweep:
    def test_aggregate_equals_recomputation(self, tmp_path):
        out = tmp_path / "cmp"
        code = run_cli(
            [
                "sweep",
                "--problem",
                "trig",
                "--algo",
                "ncg-a1,ncd",
                "--eps1",
                "1e-3",
                "--eps2",
                "1e-2",
                "--seeds",
                "1..6",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        for algo in ("ncg-a1", "ncd"):
            per_run = []
            for seed in range(1, 7):
                trace = RunTrace.read_csv(out / f"{algo}-s{seed}.trace.csv")
                per_run.append(trace.rows[-1].hvp_cum)
            assert summary["algos"][algo]["mean_hvp_evals"] == pytest.approx(
                np.mean(per_run)
            )
        assert summary["algos"]["ncg-a1"]["mean_hvp_evals"] <= summary["algos"]["ncd"][
            "mean_hvp_evals"
        ]

    def test_seed_list_parsing(self, tmp_path):
        out = tmp_path / "s"
        code = run_cli(
            [
                "sweep",
                "--problem",
                "trig",
                "--algo",
                "gd",
                "--eps1",
                "1e-2",
                "--seeds",
                "0,2",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert (out / "gd-s0.trace.csv").exists() and (out / "gd-s2.trace.csv").exists()
