"""Command line interface: smoke tests, determinism, exit codes."""

import csv
import os
import subprocess
import sys

import pytest

from rcgeo.cli import CSV_COLUMNS, main


def run_cli(args):
    return subprocess.run([sys.executable, "-m", "rcgeo.cli", *args],
                          capture_output=True, text=True)


def test_gen_writes_loadable_file(tmp_path):
    out = tmp_path / "inst.npz"
    r = run_cli(["gen", "--family", "emd1d", "--n", "1024", "--s", "8",
                 "--witness", "3", "--out", str(out)])
    assert r.returncode == 0, r.stderr
    from rcgeo import PointSet
    ps = PointSet.load(str(out))
    assert len(ps.reds) == len(ps.blues) == 1024


def test_gen_random_witness_deterministic(tmp_path):
    outs = []
    for name in ("a.npz", "b.npz"):
        out = tmp_path / name
        r = run_cli(["gen", "--family", "cellsampling", "--n", "4096",
                     "--c", "2", "--witness", "random", "--seed", "9",
                     "--out", str(out)])
        assert r.returncode == 0, r.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_gen_infeasible_params_exit_2(tmp_path):
    r = run_cli(["gen", "--family", "emd1d", "--n", "1000", "--s", "8",
                 "--out", str(tmp_path / "x.npz")])
    assert r.returncode == 2
    assert not (tmp_path / "x.npz").exists()


def test_estimate_emd_csv_deterministic(tmp_path):
    files = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        r = run_cli(["estimate-emd", "--n", "64", "--delta", "256",
                     "--d", "1", "--s", "8", "--trials", "2",
                     "--seed", "7", "--out", str(out)])
        assert r.returncode == 0, r.stderr
        assert "queries" in r.stdout
        files.append(out.read_bytes())
    assert files[0] == files[1]
    rows = list(csv.DictReader(files[0].decode().splitlines()))
    assert list(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == 2
    assert {row["trial"] for row in rows} == {"0", "1"}


def test_exact_roundtrip_on_generated_file(tmp_path):
    inst = tmp_path / "inst.npz"
    assert run_cli(["gen", "--family", "emd1d", "--n", "1024", "--s", "8",
                    "--out", str(inst)]).returncode == 0
    r = run_cli(["exact-emd", "--in", str(inst)])
    assert r.returncode == 0
    assert "1024" in r.stdout      # near-only cost is exactly n


def test_count_cells_on_gadget(tmp_path):
    inst = tmp_path / "inst.npz"
    assert run_cli(["gen", "--family", "cellsampling", "--n", "4096",
                    "--c", "2", "--out", str(inst)]).returncode == 0
    r = run_cli(["count-cells", "--in", str(inst), "--r", "1",
                 "--seed", "3"])
    assert r.returncode == 0, r.stderr


def test_sample_cell_reports_cell(tmp_path):
    inst = tmp_path / "inst.npz"
    assert run_cli(["gen", "--family", "cellsampling", "--n", "4096",
                    "--c", "2", "--out", str(inst)]).returncode == 0
    r = run_cli(["sample-cell", "--in", str(inst), "--r", "1",
                 "--seed", "3"])
    assert r.returncode == 0, r.stderr


def test_estimate_mst_runs(tmp_path):
    out = tmp_path / "m.csv"
    r = run_cli(["estimate-mst", "--n", "64", "--delta", "256", "--d", "2",
                 "--eps", "0.5", "--trials", "1", "--seed", "5",
                 "--out", str(out)])
    assert r.returncode == 0, r.stderr
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert rows[0]["family"] == "mst"
    assert float(rows[0]["queries"]) > 0


def test_missing_input_file_exit_2(tmp_path):
    r = run_cli(["exact-emd", "--in", str(tmp_path / "nope.npz")])
    assert r.returncode == 2


def test_main_callable_in_process(tmp_path, capsys):
    out = tmp_path / "inst.npz"
    rc = main(["gen", "--family", "mst", "--n", "4096", "--witness", "0",
               "--out", str(out)])
    assert rc == 0
    assert out.exists()


def test_bench_sweep_writes_rows(tmp_path):
    out = tmp_path / "sweep.csv"
    r = run_cli(["bench", "--family", "emd1d", "--n", "128", "--delta",
                 "1024", "--sweep", "4", "8", "--trials", "2",
                 "--seed", "11", "--out", str(out)])
    assert r.returncode == 0, r.stderr
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 4
    assert {row["param"] for row in rows} == {"4", "8"}
