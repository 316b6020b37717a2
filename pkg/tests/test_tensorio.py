import json

import numpy as np
import pytest

from roomfield import (FieldTensor, FrequencySet, GridSpec,
                       ImpulseResponseRecord, Room, SamplingMask,
                       TensorFormatError, assemble_field_tensor, draw_mask,
                       import_measurements, ir_to_rtf, read_mask, read_tensor,
                       write_mask, write_tensor)
from roomfield.tensorio import MeasurementError
from conftest import random_tensor


class TestTensorRoundTrip:
    def test_bit_identical(self, tmp_path, small_room, small_freqs):
        grid = GridSpec(8, 8, up_x=4, up_y=4, z_o=1.0)
        rng = np.random.Generator(np.random.Philox(key=2))
        shape = (3, 32, 32)
        # values drawn in float32 so the stored c64 payload is exact
        values = (rng.standard_normal(shape).astype(np.float32)
                  + 1j * rng.standard_normal(shape).astype(np.float32))
        tensor = FieldTensor(values.astype(np.complex128), small_room, grid,
                             small_freqs, (1.0, 2.0, 0.5))
        write_tensor(tmp_path / "t", tensor)
        back, mask = read_tensor(tmp_path / "t")
        assert np.array_equal(back.values, tensor.values)
        assert back.room == tensor.room
        assert back.grid == tensor.grid
        assert back.source == tensor.source
        np.testing.assert_array_equal(back.freqs.omegas, tensor.freqs.omegas)
        assert mask is None

    def test_mask_payload(self, tmp_path, small_room, small_grid,
                          small_freqs):
        tensor = random_tensor(small_room, small_grid, small_freqs)
        mask = draw_mask(small_grid, 5, seed=3)
        write_tensor(tmp_path / "t", tensor, mask)
        _, back = read_tensor(tmp_path / "t")
        assert back.n_mic == 5
        np.testing.assert_array_equal(back.values, mask.values)

    def test_truncated_payload_diagnosed(self, tmp_path, small_room,
                                         small_grid, small_freqs):
        tensor = random_tensor(small_room, small_grid, small_freqs)
        write_tensor(tmp_path / "t", tensor)
        payload = (tmp_path / "t" / "field.bin").read_bytes()
        (tmp_path / "t" / "field.bin").write_bytes(payload[:-8])
        with pytest.raises(TensorFormatError, match="expected"):
            read_tensor(tmp_path / "t")

    def test_missing_manifest_key_diagnosed(self, tmp_path, small_room,
                                            small_grid, small_freqs):
        tensor = random_tensor(small_room, small_grid, small_freqs)
        write_tensor(tmp_path / "t", tensor)
        path = tmp_path / "t" / "manifest.json"
        manifest = json.loads(path.read_text())
        del manifest["freqs_hz"]
        path.write_text(json.dumps(manifest))
        with pytest.raises(TensorFormatError, match="freqs_hz"):
            read_tensor(tmp_path / "t")

    def test_wrong_dtype_rejected(self, tmp_path, small_room, small_grid,
                                  small_freqs):
        tensor = random_tensor(small_room, small_grid, small_freqs)
        write_tensor(tmp_path / "t", tensor)
        path = tmp_path / "t" / "manifest.json"
        manifest = json.loads(path.read_text())
        manifest["dtype"] = "f8"
        path.write_text(json.dumps(manifest))
        with pytest.raises(TensorFormatError):
            read_tensor(tmp_path / "t")

    def test_corrupt_mask_values_rejected(self, tmp_path, small_room,
                                          small_grid, small_freqs):
        tensor = random_tensor(small_room, small_grid, small_freqs)
        mask = draw_mask(small_grid, 5, seed=3)
        write_tensor(tmp_path / "t", tensor, mask)
        raw = bytearray((tmp_path / "t" / "mask.bin").read_bytes())
        raw[0] = 7
        (tmp_path / "t" / "mask.bin").write_bytes(bytes(raw))
        with pytest.raises(TensorFormatError):
            read_tensor(tmp_path / "t")

    def test_standalone_mask_round_trip(self, tmp_path, small_grid):
        mask = draw_mask(small_grid, 7, seed=9)
        write_mask(tmp_path / "m", small_grid, mask)
        _, back = read_mask(tmp_path / "m")
        assert back.n_mic == 7
        np.testing.assert_array_equal(back.values, mask.values)


def build_measurement_tree(tmp_path, n_i=3, n_j=3, skip=(), duplicate=False,
                           drop_file=False):
    """Synthetic measurement layout: npy impulse responses plus manifest."""
    rng = np.random.Generator(np.random.Philox(key=8))
    files = []
    for i in range(n_i):
        for j in range(n_j):
            if (i, j) in skip:
                continue
            name = f"ir_{i}_{j}.npy"
            np.save(tmp_path / name, rng.standard_normal(256))
            files.append({"i": i, "j": j, "height": "h1", "source": "s1",
                          "path": name})
    if duplicate:
        files.append(dict(files[0]))
        files[-1]["path"] = "ir_dup.npy"
        np.save(tmp_path / "ir_dup.npy", rng.standard_normal(256))
    if drop_file:
        (tmp_path / files[0]["path"]).unlink()
    manifest = {
        "room": {"lx": 4.0, "ly": 6.0, "lz": 3.0, "t60": 0.6},
        "grid": {"I": n_i, "J": n_j, "up_x": 1, "up_y": 1, "z_o": 1.0},
        "sample_rate": 1000.0,
        "heights_m": {"h1": 1.0},
        "sources": {"s1": [0.5, 0.5, 0.0]},
        "files": files,
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


class TestImportMeasurements:
    def test_availability_bookkeeping(self, tmp_path):
        path = build_measurement_tree(tmp_path, skip={(2, 2)})
        records, manifest = import_measurements(path)
        assert len(records) == 8
        assert manifest.available.sum() == 8
        assert not manifest.available[2, 2]

    def test_duplicate_key_names_both_files(self, tmp_path):
        path = build_measurement_tree(tmp_path, duplicate=True)
        with pytest.raises(MeasurementError) as excinfo:
            import_measurements(path)
        assert "ir_0_0.npy" in str(excinfo.value)
        assert "ir_dup.npy" in str(excinfo.value)

    def test_missing_files_fatal_together(self, tmp_path):
        path = build_measurement_tree(tmp_path, drop_file=True)
        with pytest.raises(MeasurementError, match="missing file"):
            import_measurements(path)


class TestIrToRtf:
    def freqs(self, *hz):
        return FrequencySet(2.0 * np.pi * np.array(hz))

    def record(self, samples, fs=1000.0):
        return ImpulseResponseRecord(0, 0, "h1", "s1", fs,
                                     np.asarray(samples, dtype=np.float64))

    def test_unit_impulse(self):
        samples = np.zeros(64)
        samples[0] = 1.0
        rtf = ir_to_rtf(self.record(samples), self.freqs(50.0, 120.0, 333.0))
        np.testing.assert_allclose(rtf, 1.0 + 0j, atol=1e-14)

    def test_delayed_impulse(self):
        d = 5
        samples = np.zeros(64)
        samples[d] = 1.0
        freqs = self.freqs(50.0, 120.0)
        rtf = ir_to_rtf(self.record(samples), freqs)
        expected = np.exp(-1j * freqs.omegas * d / 1000.0)
        np.testing.assert_allclose(rtf, expected, atol=1e-14)
        np.testing.assert_allclose(np.abs(rtf), 1.0, atol=1e-14)

    def test_pure_tone_magnitude(self):
        fs, f_k = 1000.0, 100.0
        n = int(fs)
        t = np.arange(n) / fs
        rtf = ir_to_rtf(self.record(np.sin(2.0 * np.pi * f_k * t), fs),
                        self.freqs(f_k))
        assert abs(rtf[0]) == pytest.approx(n / 2.0, rel=0.01)

    def test_nyquist_rejected(self):
        with pytest.raises(MeasurementError, match="Nyquist"):
            ir_to_rtf(self.record(np.ones(16)), self.freqs(600.0))


class TestAssembleFieldTensor:
    def test_full_grid_availability(self, tmp_path):
        path = build_measurement_tree(tmp_path)
        records, manifest = import_measurements(path)
        freqs = FrequencySet(2.0 * np.pi * np.array([50.0, 100.0]))
        tensor, mask = assemble_field_tensor(records, manifest, freqs,
                                             "h1", "s1")
        assert tensor.values.shape == (2, 3, 3)
        assert mask.values.all()
        assert tensor.source == (0.5, 0.5, 0.0)

    def test_two_sources_no_cross_contamination(self, tmp_path):
        rng = np.random.Generator(np.random.Philox(key=4))
        records = []
        for source in ("s1", "s2"):
            for i in range(2):
                for j in range(2):
                    records.append(ImpulseResponseRecord(
                        i, j, "h1", source, 1000.0,
                        rng.standard_normal(128)))
        manifest_meta = type("M", (), {})
        from roomfield import MeasurementManifest
        manifest = MeasurementManifest(
            Room(4.0, 6.0, 3.0), GridSpec(2, 2, z_o=1.0), {"h1": 1.0},
            {"s1": [0.0, 0.0, 0.0], "s2": [1.0, 1.0, 0.0]},
            np.ones((2, 2), dtype=bool))
        freqs = FrequencySet(2.0 * np.pi * np.array([60.0]))
        t1, _ = assemble_field_tensor(records, manifest, freqs, "h1", "s1")
        t2, _ = assemble_field_tensor(records, manifest, freqs, "h1", "s2")
        assert not np.allclose(t1.values, t2.values)
        only_s1 = [r for r in records if r.source_id == "s1"]
        t1_again, _ = assemble_field_tensor(only_s1, manifest, freqs,
                                            "h1", "s1")
        np.testing.assert_array_equal(t1.values, t1_again.values)

    def test_no_matching_records_rejected(self, tmp_path):
        path = build_measurement_tree(tmp_path)
        records, manifest = import_measurements(path)
        freqs = FrequencySet(2.0 * np.pi * np.array([50.0]))
        with pytest.raises(MeasurementError):
            assemble_field_tensor(records, manifest, freqs, "h9", "s1")

    def test_simulated_round_trip(self):
        # synthetic impulse responses rendered from the modal model come
        # back through the exact-frequency DFT to the simulated field
        from roomfield import (build_frequency_set, build_grids,
                               enumerate_modes, simulate_field)
        from roomfield.modal import render_impulse_responses
        room = Room(3.0, 4.0, 2.5, t60=0.5)
        spec = GridSpec(2, 2, z_o=1.0)
        freqs = build_frequency_set(50.0, 200.0, 3)
        source = (0.5, 0.5, 0.0)
        modes = enumerate_modes(room, 500.0)
        truth = simulate_field(room, source, spec, freqs, modes=modes)

        fs, n, delay = 1024.0, 2 ** 17, int(2 * 1024)
        _, fine = build_grids(room, spec)
        points = fine.reshape(-1, 3)
        irs = render_impulse_responses(room, modes, source, points, fs, n,
                                       delay_samples=delay)
        undo = np.exp(1j * freqs.omegas * delay / fs)
        values = np.empty((len(freqs), 2, 2), dtype=np.complex128)
        for p, (i, j) in enumerate(np.ndindex(2, 2)):
            rec = ImpulseResponseRecord(i, j, "h1", "s1", fs, irs[p])
            values[:, i, j] = ir_to_rtf(rec, freqs) * undo
        err = np.linalg.norm(values - truth.values)
        ref = np.linalg.norm(truth.values)
        assert err / ref < 1e-6
