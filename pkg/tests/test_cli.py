import csv
import hashlib
import json
import os

import numpy as np
import pytest

from roomfield import (GridSpec, Room, build_frequency_set, draw_mask,
                       simulate_field, write_tensor)
from roomfield.cli import main

SMALL_CFG = {
    "grid": {"I": 4, "J": 4, "up_x": 1, "up_y": 1, "z_o": 1.0},
    "freqs": {"f_lo": 60.0, "f_hi": 120.0, "fraction": 4},
    "f_max_hz": 200.0,
}


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CFG))
    return str(path)


def tree_digest(root):
    """Digest of every payload file under a directory, provenance included."""
    h = hashlib.sha256()
    for dirpath, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            h.update(name.encode())
            h.update((os.path.join(dirpath, name)).encode())
            with open(os.path.join(dirpath, name), "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def make_tensor(tmp_path, name, scale=1.0, seed=0):
    room = Room(4.0, 6.0, 3.0)
    spec = GridSpec(4, 4, z_o=1.0)
    freqs = build_frequency_set(60.0, 120.0, 4)
    tensor = simulate_field(room, (0.5, 0.5, 0.0), spec, freqs)
    if scale != 1.0:
        from roomfield import FieldTensor
        tensor = FieldTensor(scale * tensor.values, room, spec, freqs,
                             tensor.source)
    path = tmp_path / name
    write_tensor(path, tensor)
    return str(path), spec


class TestEvaluate:
    def test_exact_estimate(self, tmp_path, capsys):
        truth, _ = make_tensor(tmp_path, "truth")
        out = tmp_path / "eval"
        code = main(["evaluate", "--truth", truth, "--estimate", truth,
                     "--out", str(out)])
        assert code == 0
        assert "exact" in capsys.readouterr().out
        assert (out / "nmse.csv").exists()
        assert (out / "provenance.json").exists()

    def test_imperfect_estimate_reports_db(self, tmp_path, capsys):
        truth, _ = make_tensor(tmp_path, "truth")
        est, _ = make_tensor(tmp_path, "est", scale=2.0)
        code = main(["evaluate", "--truth", truth, "--estimate", est,
                     "--out", str(tmp_path / "eval")])
        assert code == 0
        assert "dB" in capsys.readouterr().out

    def test_bad_tensor_is_data_error(self, tmp_path):
        truth, _ = make_tensor(tmp_path, "truth")
        code = main(["evaluate", "--truth", truth,
                     "--estimate", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "eval")])
        assert code == 2


class TestSimulate:
    def test_deterministic_digests(self, tmp_path, cfg_path):
        for name in ("a", "b"):
            code = main(["simulate", "--family", "extended", "--count", "3",
                         "--seed", "1", "--config", cfg_path,
                         "--out", str(tmp_path / name)])
            assert code == 0
        assert tree_digest(tmp_path / "a") != ""
        da = hashlib.sha256()
        db = hashlib.sha256()
        for root, d in ((tmp_path / "a", da), (tmp_path / "b", db)):
            for i in range(3):
                with open(root / f"room_{i:05d}" / "field.bin", "rb") as fh:
                    d.update(fh.read())
        assert da.hexdigest() == db.hexdigest()

    def test_missing_seed_is_usage_error(self, tmp_path, cfg_path, capsys):
        code = main(["simulate", "--family", "extended", "--count", "1",
                     "--config", cfg_path, "--out", str(tmp_path / "x")])
        assert code == 1
        assert "seed" in capsys.readouterr().err

    def test_seed_from_environment(self, tmp_path, cfg_path, monkeypatch):
        monkeypatch.setenv("ROOMFIELD_SEED", "5")
        code = main(["simulate", "--family", "extended", "--count", "1",
                     "--config", cfg_path, "--out", str(tmp_path / "x")])
        assert code == 0

    def test_provenance_has_no_timestamp(self, tmp_path, cfg_path):
        main(["simulate", "--family", "extended", "--count", "1",
              "--seed", "1", "--config", cfg_path,
              "--out", str(tmp_path / "x")])
        record = json.loads((tmp_path / "x" / "provenance.json").read_text())
        assert record["command"] == "simulate"
        assert "time" not in json.dumps(record).lower()


class TestMask:
    def test_writes_masks(self, tmp_path, cfg_path):
        out = tmp_path / "masks"
        code = main(["mask", "--count", "2", "--n-mic", "5", "--seed", "3",
                     "--config", cfg_path, "--out", str(out)])
        assert code == 0
        from roomfield import read_mask
        _, mask = read_mask(out / "mask_0000")
        assert mask.n_mic == 5


class TestSparse:
    def test_reconstruction_output(self, tmp_path, cfg_path):
        truth, spec = make_tensor(tmp_path, "truth")
        from roomfield import write_mask
        mask = draw_mask(spec, 8, seed=2)
        mask_dir = tmp_path / "mask"
        write_mask(mask_dir, spec, mask)
        cfg = dict(SMALL_CFG)
        cfg["sparse"] = {"n_per_axis": 4, "lambda": 1e-6, "tol": 1e-8,
                        "max_iter": 200}
        cfg_file = tmp_path / "sparse_cfg.json"
        cfg_file.write_text(json.dumps(cfg))
        out = tmp_path / "recon"
        code = main(["sparse", "--input", truth, "--mask", str(mask_dir),
                     "--config", str(cfg_file), "--out", str(out)])
        assert code == 0
        from roomfield import read_tensor
        tensor, stored_mask = read_tensor(out)
        assert tensor.values.shape == (5, 4, 4)
        assert stored_mask.n_mic == 8

    def test_missing_mask_is_data_error(self, tmp_path, cfg_path, capsys):
        truth, _ = make_tensor(tmp_path, "truth")
        code = main(["sparse", "--input", truth, "--config", cfg_path,
                     "--out", str(tmp_path / "recon")])
        assert code == 2
        assert "mask" in capsys.readouterr().err


class TestZones:
    def test_true_source_zero_std(self, tmp_path, cfg_path):
        out = tmp_path / "zones"
        code = main(["zones", "--rtf-source", "true", "--trials", "3",
                     "--seed", "0", "--config", cfg_path, "--out", str(out)])
        assert code == 0
        with open(out / "contrast.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "freq_hz"
        assert len(rows) == 1 + len(build_frequency_set(60.0, 120.0, 4))
        assert all(float(r[2]) == 0.0 for r in rows[1:])


class TestImport:
    def test_end_to_end(self, tmp_path, cfg_path):
        from test_tensorio import build_measurement_tree
        manifest = build_measurement_tree(tmp_path)
        out = tmp_path / "imported"
        code = main(["import", "--manifest", str(manifest),
                     "--height", "h1", "--source", "s1",
                     "--config", cfg_path, "--out", str(out)])
        assert code == 0
        from roomfield import read_tensor
        tensor, mask = read_tensor(out)
        assert tensor.values.shape[1:] == (3, 3)
        assert mask.values.all()

    def test_bad_manifest_is_data_error(self, tmp_path, cfg_path):
        bad = tmp_path / "manifest.json"
        bad.write_text("{not json")
        code = main(["import", "--manifest", str(bad), "--height", "h1",
                     "--source", "s1", "--config", cfg_path,
                     "--out", str(tmp_path / "x")])
        assert code == 2


class TestPlotData:
    def test_merges_csvs(self, tmp_path):
        for name in ("a", "b"):
            with open(tmp_path / f"{name}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["freq_hz", "nmse_linear", "nmse_db"])
                writer.writerow([50.0, 0.5, -3.01])
        out = tmp_path / "plot"
        code = main(["plot-data", "--inputs", str(tmp_path / "a.csv"),
                     str(tmp_path / "b.csv"), "--out", str(out)])
        assert code == 0
        with open(out / "plot_data.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["freq_hz", "nmse_linear", "nmse_db", "input"]
        assert {r[-1] for r in rows[1:]} == {"a", "b"}

    def test_column_mismatch_is_data_error(self, tmp_path):
        (tmp_path / "a.csv").write_text("x,y\n1,2\n")
        (tmp_path / "b.csv").write_text("p,q\n1,2\n")
        code = main(["plot-data", "--inputs", str(tmp_path / "a.csv"),
                     str(tmp_path / "b.csv"), "--out", str(tmp_path / "o")])
        assert code == 2


class TestUsage:
    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0
