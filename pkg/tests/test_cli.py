import json
import os

import numpy as np
import pytest

from ndpinfer.cli import main


def _files(d):
    return sorted(os.listdir(d))


class TestInfer:
    def test_scenario_run_writes_report_and_samples(self, tmp_path):
        out = tmp_path / "run"
        rc = main(
            [
                "infer", "--scenario", "pennies", "--K", "2000", "--seed", "7",
                "--query", "new_agent_component 1", "--out", str(out),
            ]
        )
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["K"] == 2000
        assert 0.55 < report["queries"][0]["expectation"] < 0.72
        assert (out / "samples_new_agent_component_1.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert "config_sha256" in manifest
        assert manifest["argv"][:3] == ["infer", "--scenario", "pennies"]
        assert "samples_new_agent_component_1.csv" in manifest["outputs"]

    def test_byte_identical_reports_across_reruns_and_threads(self, tmp_path):
        outs = []
        for i, threads in enumerate(("1", "2", "1")):
            out = tmp_path / f"run{i}"
            rc = main(
                [
                    "infer", "--scenario", "pennies", "--K", "3000", "--seed", "11",
                    "--threads", threads, "--query", "component 5 1", "--out", str(out),
                ]
            )
            assert rc == 0
            outs.append(out)
        ref_report = (outs[0] / "report.json").read_bytes()
        ref_samples = (outs[0] / "samples_component_5_1.csv").read_bytes()
        for out in outs[1:]:
            assert (out / "report.json").read_bytes() == ref_report
            assert (out / "samples_component_5_1.csv").read_bytes() == ref_samples

    def test_data_and_config_files(self, tmp_path):
        data = tmp_path / "obs.csv"
        data.write_text("row_id,label\na,1\na,0\nb,1\nb,1\n")
        cfg = tmp_path / "config.json"
        cfg.write_text('{"kappa": 1.0, "eps": 1.0, "base": [0.5, 0.5]}')
        out = tmp_path / "out"
        rc = main(
            [
                "infer", "--data", str(data), "--config", str(cfg), "--K", "500",
                "--seed", "3", "--query", "component 1 1", "--out", str(out),
            ]
        )
        assert rc == 0

    def test_missing_data_file_is_io_error(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text('{"kappa": 1.0, "eps": 1.0, "base": [0.5, 0.5]}')
        rc = main(
            [
                "infer", "--data", str(tmp_path / "absent.csv"), "--config", str(cfg),
                "--out", str(tmp_path / "o"),
            ]
        )
        assert rc == 2

    def test_bad_label_is_validation_error(self, tmp_path):
        data = tmp_path / "obs.csv"
        data.write_text("row_id,label\na,9\n")
        cfg = tmp_path / "config.json"
        cfg.write_text('{"kappa": 1.0, "eps": 1.0, "base": [0.5, 0.5]}')
        rc = main(
            [
                "infer", "--data", str(data), "--config", str(cfg),
                "--out", str(tmp_path / "o"),
            ]
        )
        assert rc == 1

    def test_malformed_config_json_is_validation_error(self, tmp_path):
        data = tmp_path / "obs.csv"
        data.write_text("row_id,label\na,1\n")
        cfg = tmp_path / "config.json"
        cfg.write_text("{not json")
        rc = main(
            [
                "infer", "--data", str(data), "--config", str(cfg),
                "--out", str(tmp_path / "o"),
            ]
        )
        assert rc == 1

    def test_plot_renders_figures(self, tmp_path):
        out = tmp_path / "fig"
        rc = main(
            [
                "infer", "--scenario", "pennies", "--K", "800", "--seed", "2",
                "--query", "component 5 1", "--plot", "--out", str(out),
            ]
        )
        assert rc == 0
        svg = out / "density_component_5_1.svg"
        assert svg.exists() and svg.read_bytes().startswith(b"<?xml")


class TestDensity:
    def test_pipeline_from_infer_samples(self, tmp_path):
        run = tmp_path / "run"
        main(
            [
                "infer", "--scenario", "pennies", "--K", "1500", "--seed", "5",
                "--query", "new_agent_component 1", "--out", str(run),
            ]
        )
        out = tmp_path / "dens"
        rc = main(
            [
                "density", "--samples", str(run / "samples_new_agent_component_1.csv"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert _files(out) == ["density.csv", "density.json", "density.svg"]
        sidecar = json.loads((out / "density.json").read_text())
        assert 0.05 < sidecar["scott_factor"] < 0.25
        rows = (out / "density.csv").read_text().splitlines()
        assert rows[0] == "x,density"
        values = np.array([float(r.split(",")[1]) for r in rows[1:]])
        assert np.all(values >= 0)

    def test_explicit_tiny_bandwidth(self, tmp_path):
        samples = tmp_path / "s.csv"
        samples.write_text("atom,weight\n0.2,0.5\n0.8,0.5\n")
        out = tmp_path / "d"
        rc = main(
            ["density", "--samples", str(samples), "--bandwidth", "0.001", "--out", str(out)]
        )
        assert rc == 0
        sidecar = json.loads((out / "density.json").read_text())
        assert sidecar["bandwidth"] == 0.001

    def test_missing_samples_is_io_error(self, tmp_path):
        rc = main(["density", "--samples", str(tmp_path / "no.csv"), "--out", str(tmp_path)])
        assert rc == 2


class TestOracle:
    def test_penny_oracle_report(self, tmp_path):
        out = tmp_path / "oracle"
        rc = main(
            [
                "oracle", "--scenario", "pennies",
                "--query", "component 5 1", "--query", "new_agent_component 1",
                "--out", str(out),
            ]
        )
        assert rc == 0
        report = json.loads((out / "oracle.json").read_text())
        assert report["partition_count"] == 877
        vals = {q["query"]: q["value"] for q in report["queries"]}
        assert vals["component 5 1"] == pytest.approx(0.4574, abs=1e-3)
        assert vals["new_agent_component 1"] == pytest.approx(0.6319, abs=1e-3)

    def test_cap_exceeded_exit_code(self, tmp_path):
        data = tmp_path / "obs.csv"
        data.write_text("row_id,label\n" + "".join(f"r{i},0\n" for i in range(13)))
        cfg = tmp_path / "config.json"
        cfg.write_text('{"kappa": 1.0, "eps": 1.0, "base": [0.5, 0.5]}')
        rc = main(
            ["oracle", "--data", str(data), "--config", str(cfg), "--out", str(tmp_path / "o")]
        )
        assert rc == 1


class TestGamer:
    def test_discretize_sums_to_one(self, tmp_path):
        out = tmp_path / "p.csv"
        rc = main(
            [
                "gamer", "discretize", "--r", "2.333333333333333", "--c", "28",
                "--alpha", "3", "--L", "500", "--out", str(out),
            ]
        )
        assert rc == 0
        rows = out.read_text().splitlines()[1:]
        total = sum(float(r.split(",")[1]) for r in rows)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_pdf_grid_integrates_near_one(self, tmp_path):
        out = tmp_path / "pdf.csv"
        rc = main(
            [
                "gamer", "pdf", "--r", "2.3333333333", "--c", "28", "--alpha", "3",
                "--x-min", "0.001", "--x-max", "100000", "--points", "400000",
                "--out", str(out),
            ]
        )
        assert rc == 0
        rows = out.read_text().splitlines()[1:]
        xy = np.array([[float(v) for v in r.split(",")] for r in rows])
        mass = np.trapezoid(xy[:, 1], xy[:, 0])
        assert mass == pytest.approx(1.0, abs=0.01)

    def test_sample_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            rc = main(
                [
                    "gamer", "sample", "--r", "2.5", "--c", "10", "--alpha", "2",
                    "--n", "1000", "--seed", "7", "--out", str(path),
                ]
            )
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()


class TestExamples:
    def test_export(self, tmp_path):
        rc = main(["examples", "export", "--name", "pennies", "--out", str(tmp_path)])
        assert rc == 0
        counts = (tmp_path / "pennies_counts.csv").read_text().splitlines()
        assert counts[0] == "row_id,count_0,count_1"
        assert len(counts) == 8
        cfg = json.loads((tmp_path / "pennies_config.json").read_text())
        assert cfg["kappa"] == 1.0

    def test_list(self, capsys):
        assert main(["examples", "list"]) == 0
        out = capsys.readouterr().out.split()
        assert "pennies" in out and "games3" in out
