"""Experiment runner: config validation, outputs, determinism, exit codes."""
import filecmp
import json
import math
from pathlib import Path

import numpy as np
import pytest

from tnflab.cli import main


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def data_files(out_dir: Path):
    return sorted(
        p.name
        for p in out_dir.iterdir()
        if p.name != "manifest.json" and not p.name.startswith("timing")
    )


VMC_SMALL = {
    "version": 1,
    "kind": "vmc",
    "seed": 11,
    "lattice": {"rows": 3, "cols": 3, "boundary": "obc"},
    "model": {"name": "heisenberg"},
    "grid": {"bond_dims": [2], "chis": [2], "modes": ["fixed"]},
    "sweeps": 60,
    "warmup": 20,
    "chains": 1,
    "init": {"method": "simple_update", "tau": 0.05, "steps": 30},
}


class TestConfigValidation:
    def test_missing_field_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "bad.json", {"version": 1, "kind": "vmc", "seed": 1})
        assert main(["vmc", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        assert "config." in err  # field path included

    def test_bad_version(self, tmp_path):
        cfg = write_config(tmp_path, "v.json", {**VMC_SMALL, "version": 9})
        assert main(["vmc", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_kind_mismatch(self, tmp_path):
        cfg = write_config(tmp_path, "k.json", VMC_SMALL)
        assert main(["floquet", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_zero_sweeps_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "z.json", {**VMC_SMALL, "sweeps": 0})
        assert main(["vmc", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_unknown_mode_rejected(self, tmp_path):
        bad = {**VMC_SMALL, "grid": {"bond_dims": [2], "chis": [2], "modes": ["foo"]}}
        cfg = write_config(tmp_path, "m.json", bad)
        assert main(["vmc", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_no_output_before_validation_failure(self, tmp_path):
        out = tmp_path / "o"
        cfg = write_config(tmp_path, "bad2.json", {**VMC_SMALL, "sweeps": -3})
        main(["vmc", "--config", cfg, "--out", str(out)])
        assert not out.exists()


class TestResourceGuards:
    def test_floquet_site_guard_exits_3(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "f.json",
            {
                "version": 1,
                "kind": "floquet",
                "seed": 1,
                "sites": 16,
                "t_max": 2,
                "preset": "maximally_chaotic",
                "methods": ["exact"],
            },
        )
        assert main(["floquet", "--config", cfg, "--out", str(tmp_path / "o")]) == 3

    def test_circuit_width_guard_exits_3(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "c.json",
            {
                "version": 1,
                "kind": "circuit",
                "seed": 1,
                "suites": ["adder"],
                "max_bits": {"adder": 9},
            },
        )
        assert main(["circuit", "--config", cfg, "--out", str(tmp_path / "o")]) == 3

    def test_vmc_lattice_guard_exits_3(self, tmp_path):
        big = {**VMC_SMALL, "lattice": {"rows": 9, "cols": 9, "boundary": "obc"}}
        cfg = write_config(tmp_path, "big.json", big)
        assert main(["vmc", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


class TestVmcRun:
    def test_outputs_and_determinism(self, tmp_path):
        cfg = write_config(tmp_path, "vmc.json", VMC_SMALL)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["vmc", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["vmc", "--config", cfg, "--out", str(out2)]) == 0
        names = data_files(out1)
        assert "energies.csv" in names
        assert any(n.startswith("vmc_D2_chi2_fixed") for n in names)
        assert names == data_files(out2)
        for n in names:
            assert filecmp.cmp(out1 / n, out2 / n, shallow=False), f"{n} differs"
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 11
        assert sorted(manifest["files"]) == manifest["files"]

    def test_seed_flag_overrides(self, tmp_path):
        cfg = write_config(tmp_path, "vmc.json", VMC_SMALL)
        out1, out3 = tmp_path / "a", tmp_path / "b"
        assert main(["vmc", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["vmc", "--config", cfg, "--out", str(out3), "--seed", "99"]) == 0
        assert not filecmp.cmp(out1 / "energies.csv", out3 / "energies.csv", shallow=False)


class TestFloquetRun:
    def test_t_max_zero_single_row(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "f0.json",
            {
                "version": 1,
                "kind": "floquet",
                "seed": 1,
                "sites": 6,
                "t_max": 0,
                "preset": "less_chaotic",
                "methods": ["exact", "mps", "mpo"],
                "chis": [2],
            },
        )
        out = tmp_path / "o"
        assert main(["floquet", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "entropy.csv").read_text().strip().splitlines()
        body = rows[1:]
        assert len(body) == 3  # one t=0 row per method
        for line in body:
            t, s_exact, s_method = line.split(",")[:3]
            assert t == "0"
            assert abs(float(s_method)) < 1e-10

    def test_methods_aligned_series(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "f1.json",
            {
                "version": 1,
                "kind": "floquet",
                "seed": 1,
                "sites": 6,
                "t_max": 3,
                "preset": "maximally_chaotic",
                "methods": ["exact", "mps", "tnf_transverse", "tnf_inverse", "mpo"],
                "chis": [2],
            },
        )
        out = tmp_path / "o"
        assert main(["floquet", "--config", cfg, "--out", str(out)]) == 0
        rows = (out / "entropy.csv").read_text().strip().splitlines()[1:]
        methods = {line.split(",")[4] for line in rows}
        assert methods == {"exact", "mps", "tnf_transverse", "tnf_inverse", "mpo"}
        for line in rows:
            t = int(line.split(",")[0])
            assert 0 <= t <= 3
        assert (out / "spectrum_exact.csv").exists()
        assert (out / "spectrum_tnf_transverse_chi2.csv").exists()


class TestCircuitRun:
    def test_empty_suite_rejected(self, tmp_path):
        cfg = write_config(
            tmp_path, "c0.json", {"version": 1, "kind": "circuit", "seed": 1, "suites": []}
        )
        assert main(["circuit", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_suites_pass(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "c1.json",
            {
                "version": 1,
                "kind": "circuit",
                "seed": 5,
                "suites": ["adder", "multiplier", "square", "fnn", "memo"],
                "max_bits": {"adder": 4, "multiplier": 3, "square": 4},
                "fnn": {"widths": [2, 3, 1], "n_inputs": 25},
            },
        )
        out = tmp_path / "o"
        assert main(["circuit", "--config", cfg, "--out", str(out)]) == 0
        results = json.loads((out / "results.json").read_text())
        assert results["passed"] is True
        assert results["suites"]["fnn"]["max_abs_error"] < 1e-12


class TestParetoRun:
    def test_single_point_is_frontier(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "p.json",
            {
                "version": 1,
                "kind": "pareto",
                "seed": 2,
                "lattice": {"rows": 2, "cols": 2, "boundary": "obc"},
                "model": {"name": "heisenberg"},
                "grid": {"bond_dims": [2], "chis": [2]},
                "sgd": {"iterations": 2, "sweeps": 40, "learning_rate": 0.05},
                "sweeps": 80,
                "timing_amplitudes": 5,
                "init": {"method": "simple_update", "tau": 0.05, "steps": 30},
            },
        )
        out = tmp_path / "o"
        assert main(["pareto", "--config", cfg, "--out", str(out)]) == 0
        timing = (out / "timing_pareto.csv").read_text().strip().splitlines()
        assert timing[1].split(",")[-1] == "1"  # the single point is the frontier
        pareto = (out / "pareto.csv").read_text().strip().splitlines()
        assert pareto[0].split(",")[0] == "bond_dim"
        assert len(pareto) == 2
