import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitpro.encoders import (
    EmbeddingStore,
    MockEncoder,
    cosine_sim,
    load_store,
    mock_embed,
    save_store,
)
from fitpro.errors import DegenerateVectorError, DimensionError, FormatError


def unit_vectors(dim=8):
    return (
        st.lists(
            st.floats(-10, 10, allow_nan=False, allow_infinity=False),
            min_size=dim,
            max_size=dim,
        )
        .map(np.asarray)
        .filter(lambda v: np.linalg.norm(v) > 1e-6)
    )


class TestCosine:
    def test_identical_unit_vectors(self):
        assert cosine_sim([1, 0], [1, 0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_sim([1, 0], [0, 1]) == pytest.approx(0.0)

    def test_derived_scalar_oracle(self):
        # dot = 0.6, |a| = 1, |b| = 1; recomputed with exact arithmetic
        assert cosine_sim([0.6, 0.8], [1, 0]) == pytest.approx(0.6, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            cosine_sim([1, 0], [1, 0, 0])

    def test_zero_vector(self):
        with pytest.raises(DegenerateVectorError):
            cosine_sim([0, 0], [1, 0])

    @given(unit_vectors())
    def test_self_similarity(self, v):
        assert cosine_sim(v, v) == pytest.approx(1.0, abs=1e-6)

    @given(unit_vectors(), unit_vectors())
    def test_symmetry_exact(self, a, b):
        assert cosine_sim(a, b) == cosine_sim(b, a)

    @given(unit_vectors(), unit_vectors(), st.floats(1e-3, 1e3))
    def test_positive_scale_invariance(self, a, b, c):
        assert cosine_sim(c * a, b) == pytest.approx(cosine_sim(a, b), abs=1e-6)


class TestMockEmbed:
    def test_deterministic(self):
        a = mock_embed(["red", "hat"], seed=3, dim=64)
        b = mock_embed(["red", "hat"], seed=3, dim=64)
        assert np.array_equal(a, b)
        assert cosine_sim(a, b) == pytest.approx(1.0)

    def test_bag_order_irrelevant(self):
        a = mock_embed(["red", "hat"], seed=3, dim=64)
        b = mock_embed(["hat", "red"], seed=3, dim=64)
        assert np.array_equal(a, b)

    def test_unit_norm(self):
        v = mock_embed(["a", "b", "c"], seed=0, dim=32)
        assert abs(np.linalg.norm(v.astype(np.float64)) - 1.0) < 1e-6

    def test_disjoint_bags_nearly_orthogonal(self):
        # bound frozen from a 1000-draw concentration run: max |cos| was 0.199
        worst = 0.0
        for i in range(1000):
            a = mock_embed([f"a{i}x", f"a{i}y", f"a{i}z"], seed=42, dim=256)
            b = mock_embed([f"b{i}x", f"b{i}y", f"b{i}z"], seed=42, dim=256)
            worst = max(worst, abs(cosine_sim(a, b)))
        assert worst < 0.3

    def test_overlap_monotone(self):
        q = mock_embed(["a", "b", "c", "d"], seed=1, dim=128)
        more = mock_embed(["a", "b", "c", "x"], seed=1, dim=128)
        less = mock_embed(["a", "y", "z", "x"], seed=1, dim=128)
        assert cosine_sim(q, more) > cosine_sim(q, less)

    def test_empty_bag(self):
        with pytest.raises(DegenerateVectorError):
            mock_embed([], seed=0, dim=64)

    def test_small_dim_rejected(self):
        with pytest.raises(DimensionError):
            mock_embed(["a"], seed=0, dim=4)

    def test_encoder_embed_text(self):
        enc = MockEncoder(seed=5, dim=64)
        a = enc.embed_text("red jacket, blue jeans")
        b = enc.embed_bag(["red", "jacket", "blue", "jeans"])
        assert np.array_equal(a, b)


class TestStore:
    def test_single_record_roundtrip(self, tmp_path):
        v = np.asarray([0.25, -1.5, 3.0, 0.125], dtype=np.float32)
        path = tmp_path / "one.fpem"
        save_store(path, 4, {"img_001": v})
        store = load_store(path)
        assert np.array_equal(store.lookup("img_001"), v)

    def test_missing_key_is_none(self, tmp_path):
        path = tmp_path / "one.fpem"
        save_store(path, 4, {"img_001": np.zeros(4, dtype=np.float32)})
        assert load_store(path).lookup("absent") is None

    def test_hundred_random_records_bit_identical(self, tmp_path):
        rng = np.random.default_rng(9)
        vectors = {
            f"key_{i:03d}": rng.standard_normal(16).astype(np.float32)
            for i in range(100)
        }
        path = tmp_path / "many.fpem"
        save_store(path, 16, vectors)
        store = load_store(path)
        assert store.count == 100
        for key, v in vectors.items():
            assert np.array_equal(store.lookup(key), v)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fpem"
        save_store(path, 4, {"k": np.zeros(4, dtype=np.float32)})
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_store(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "bad.fpem"
        save_store(path, 4, {"k": np.zeros(4, dtype=np.float32)})
        data = bytearray(path.read_bytes())
        data[4] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_store(path)

    def test_truncated_record(self, tmp_path):
        path = tmp_path / "trunc.fpem"
        save_store(path, 4, {"k": np.ones(4, dtype=np.float32)})
        data = path.read_bytes()
        path.write_bytes(data[:-3])
        with pytest.raises(FormatError):
            load_store(path)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_special_floats(self, tmp_path_factory, seed):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(8).astype(np.float32)
        v[0] = np.float32(1e-38)  # subnormal-adjacent values survive too
        path = tmp_path_factory.mktemp("s") / "f.fpem"
        save_store(path, 8, {"k": v})
        assert np.array_equal(load_store(path).lookup("k"), v)
