import numpy as np
import pytest

from evact.errors import BadMagicError, NonFiniteError, TruncatedPayloadError
from evact.features import (FeatureSequence, frames_to_features,
                            read_features, write_features)


class TestFramesToFeatures:
    def test_dimension_arithmetic(self):
        frames = np.zeros((4, 180, 250, 2), np.float32)
        seq = frames_to_features(frames, pool_factor=10)
        assert seq.dim == 18 * 25 * 2 == 900
        assert len(seq) == 4

    def test_all_zero_frame(self):
        seq = frames_to_features(np.zeros((2, 8, 8, 1), np.float32), 4)
        assert (seq.vectors == 0).all()

    def test_pool_factor_one_is_flatten(self):
        rng = np.random.default_rng(0)
        frames = rng.random((2, 3, 4, 2)).astype(np.float32)
        seq = frames_to_features(frames, 1)
        assert seq.dim == 3 * 4 * 2
        np.testing.assert_array_equal(seq.vectors[0], frames[0].reshape(-1))

    def test_channel_interleaving_is_row_major_channels_last(self):
        frames = np.zeros((1, 2, 2, 2), np.float32)
        frames[0, 0, 1, 1] = 0.5   # row 0, col 1, channel 1
        seq = frames_to_features(frames, 1)
        assert seq.vectors[0, (0 * 2 + 1) * 2 + 1] == np.float32(0.5)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        frames = rng.random((5, 6, 6, 2)).astype(np.float32)
        perm = rng.permutation(5)
        a = frames_to_features(frames, 2).vectors[perm]
        b = frames_to_features(frames[perm], 2).vectors
        np.testing.assert_array_equal(a, b)

    def test_inconsistent_shapes_error(self):
        with pytest.raises(ValueError):
            frames_to_features([np.zeros((3, 3, 2)), np.zeros((4, 4, 2))], 1)


class TestInterchangeFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        for i in range(10):
            seq = FeatureSequence(rng.random((7, 13)).astype(np.float32),
                                  clip_id=f"clip_{i}", label=i % 4)
            path = tmp_path / f"f{i}.ftr"
            write_features(path, seq)
            back = read_features(path)
            np.testing.assert_array_equal(back.vectors, seq.vectors)
            assert back.clip_id == seq.clip_id
            assert back.label == seq.label

    def test_unlabeled_round_trip(self, tmp_path):
        seq = FeatureSequence(np.zeros((2, 3), np.float32), "x", None)
        path = tmp_path / "u.ftr"
        write_features(path, seq)
        assert read_features(path).label is None

    def test_zero_row_round_trip(self, tmp_path):
        # a clip that produced no vectors (e.g. no blobs) still round-trips
        seq = FeatureSequence(np.empty((0, 500), np.float32), "empty", 3)
        path = tmp_path / "z.ftr"
        write_features(path, seq)
        back = read_features(path)
        assert len(back) == 0 and back.dim == 500 and back.label == 3

    def test_truncated_payload(self, tmp_path):
        seq = FeatureSequence(np.ones((4, 8), np.float32), "t", 1)
        path = tmp_path / "t.ftr"
        write_features(path, seq)
        data = path.read_bytes()
        for cut in (12, 7):   # aligned and mid-float truncation
            path.write_bytes(data[:-cut])
            with pytest.raises(TruncatedPayloadError):
                read_features(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.ftr"
        path.write_bytes(b"WHAT" + b"\0" * 40)
        with pytest.raises(BadMagicError):
            read_features(path)

    def test_non_finite_payload(self, tmp_path):
        seq = FeatureSequence(np.ones((2, 4), np.float32), "n", 0)
        path = tmp_path / "n.ftr"
        write_features(path, seq)
        data = bytearray(path.read_bytes())
        data[-4:] = np.float32(np.nan).tobytes()
        path.write_bytes(bytes(data))
        with pytest.raises(NonFiniteError):
            read_features(path)

    def test_constructor_rejects_non_finite(self):
        with pytest.raises(NonFiniteError):
            FeatureSequence(np.array([[np.inf, 0.0]], np.float32), "bad")

    def test_write_is_atomic(self, tmp_path):
        # no temp files left behind after a successful write
        seq = FeatureSequence(np.zeros((1, 2), np.float32), "a", 0)
        write_features(tmp_path / "a.ftr", seq)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["a.ftr"]
