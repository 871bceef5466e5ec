"""
Tests for the benchmark registry, samplers, noise and CSV datasets.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from benchmarks import (
    Dataset,
    DatasetError,
    SamplingSpec,
    UnknownBenchmarkError,
    add_noise,
    describe,
    get_benchmark,
    list_benchmarks,
    load_csv,
    realize,
    registry_size,
    resolve_names,
    sample,
    with_sampling,
    write_csv,
)

EPS = 1e-6


def pdiv(a, d):
    return a / (np.where(d < 0, -1.0, 1.0) * np.maximum(np.abs(d), EPS))


def plog(u):
    return np.log(np.maximum(np.abs(u), EPS))


def psqrt(u):
    return np.sqrt(np.abs(u))


def ptan(u):
    return pdiv(np.sin(u), np.cos(u))


# Independent numpy transcriptions of a cross-section of the registry
REFERENCE = {
    "Nguyen-1": lambda X: X[:, 0] ** 3 + X[:, 0] ** 2 + X[:, 0],
    "Nguyen-2": lambda X: X[:, 0] ** 4 + X[:, 0] ** 3 + X[:, 0] ** 2 + X[:, 0],
    "Nguyen-4": lambda X: sum(X[:, 0] ** p for p in range(1, 7)),
    "Nguyen-5": lambda X: np.sin(X[:, 0] ** 2) * np.cos(X[:, 0]) - 1,
    "Nguyen-6": lambda X: np.sin(X[:, 0]) + np.sin(X[:, 0] + X[:, 0] ** 2),
    "Nguyen-7": lambda X: plog(X[:, 0] + 1) + plog(X[:, 0] ** 2 + 1),
    "Nguyen-8": lambda X: psqrt(X[:, 0]),
    "Nguyen-9": lambda X: np.sin(X[:, 0]) + np.sin(X[:, 1] ** 2),
    "Nguyen-10": lambda X: 2 * np.sin(X[:, 0]) * np.cos(X[:, 1]),
    "Nguyen-11": lambda X: np.exp(X[:, 1] * plog(X[:, 0])),
    "Nguyen-12": lambda X: X[:, 0] ** 4 - X[:, 0] ** 3 + 0.5 * X[:, 1] ** 2 - X[:, 1],
    "Korns-1": lambda X: 1.57 + 24.3 * X[:, 0] ** 4,
    "Korns-2": lambda X: 0.23 + 14.2 * pdiv(X[:, 3] + X[:, 0], 3 * X[:, 1]),
    "Korns-4": lambda X: -2.3 + 0.13 * np.sin(X[:, 0]),
    "Korns-7": lambda X: 2.1 * (1 - np.exp(-0.55 * X[:, 0])),
    "Korns-14": lambda X: 22.0
    - (4.2 * np.cos(X[:, 0]) - ptan(X[:, 1])) * pdiv(np.tanh(X[:, 2]), np.sin(X[:, 3])),
    "Keijzer-6": lambda X: X[:, 0] * (X[:, 0] + 1) / 2,
    "Keijzer-14": lambda X: pdiv(8.0, 2 + X[:, 0] ** 2 + X[:, 1] ** 2),
    "Jin-4": lambda X: 1.5 * np.exp(X[:, 0]) + 5 * np.cos(X[:, 1]),
    "Livermore-7": lambda X: np.sinh(X[:, 0]),
    "Livermore-13": lambda X: np.exp(plog(X[:, 0]) / 3),
    "Constant-4": lambda X: 2.7 * np.exp(X[:, 1] * plog(X[:, 0])),
    "R1": lambda X: pdiv((X[:, 0] + 1) ** 3, X[:, 0] ** 2 - X[:, 0] + 1),
    "Feynman-II.38.3": lambda X: pdiv(X[:, 0] * X[:, 1] * X[:, 2], X[:, 3]),
    "Vladislavleva-4": lambda X: pdiv(10.0, 5 + np.sum((X - 3) ** 2, axis=1)),
}


class TestRegistry:
    """Tests for the benchmark registry."""

    def test_size(self):
        """Every benchmark is registered once."""
        assert registry_size() == 126
        assert len(list_benchmarks()) == 126

    def test_sorted(self):
        """Names come back in ascending order."""
        names = list_benchmarks()
        assert names == sorted(names)

    def test_glob(self):
        """fnmatch globs filter names."""
        assert len(list_benchmarks("Nguyen-*")) == 12
        assert list_benchmarks("Nguyen-1?") == ["Nguyen-10", "Nguyen-11", "Nguyen-12"]
        assert list_benchmarks("Nope*") == []

    def test_unknown_name(self):
        """Unknown names raise UnknownBenchmarkError."""
        with pytest.raises(UnknownBenchmarkError) as exc_info:
            get_benchmark("Bogus-1")
        assert str(exc_info.value) == "Unknown benchmark: Bogus-1"

    def test_entry_metadata(self):
        """Arity, sampling and group come from the entry."""
        entry = get_benchmark("Feynman-I.12.1")
        assert entry.k == 2
        assert entry.group == "Feynman"
        assert str(entry.spec) == "U(1, 5, 100)"

    def test_describe(self):
        """describe reports name, arity, sampling and size."""
        assert describe(get_benchmark("Nguyen-1")) == {
            "name": "Nguyen-1",
            "k": 1,
            "sampling": "U(-1, 1, 20)",
            "nodes": 11,
        }

    @pytest.mark.parametrize("name", sorted(REFERENCE))
    def test_matches_reference_transcription(self, name):
        """Registry formulas agree with hand-written numpy forms."""
        data = realize(get_benchmark(name), seed=0)
        np.testing.assert_allclose(data.y, REFERENCE[name](data.X), rtol=1e-9, atol=1e-12)

    def test_harmonic_target_is_exact(self):
        """Neat-6 uses the exact partial harmonic sum, not its expansion."""
        data = realize(get_benchmark("Neat-6"), seed=0)
        assert data.y[0] == 1.0
        assert data.y[1] == 1.5
        assert data.y[-1] == pytest.approx(sum(1.0 / i for i in range(1, 51)))

    def test_every_entry_realizes_finite(self):
        """Every registry target is finite on its own sample."""
        for name in list_benchmarks():
            data = realize(get_benchmark(name), seed=1)
            assert np.all(np.isfinite(data.y)), name


class TestResolveNames:
    """Tests for resolve_names."""

    def test_mixed_names_and_globs(self):
        """Exact names and globs expand in first-seen order without duplicates."""
        names = resolve_names(["Korns-1", "Nguyen-1?", "Korns-1", " "])
        assert names == ["Korns-1", "Nguyen-10", "Nguyen-11", "Nguyen-12"]

    @pytest.mark.parametrize("pattern", ["Bogus-1", "Bogus-*"])
    def test_unmatched_pattern(self, pattern):
        """A name or glob with no match is an error."""
        with pytest.raises(UnknownBenchmarkError):
            resolve_names(["Nguyen-1", pattern])


class TestSampling:
    """Tests for SamplingSpec and sample."""

    def test_uniform_is_seeded_and_bounded(self):
        """U sampling is reproducible per seed and stays inside [a, b]."""
        spec = SamplingSpec("U", -2.0, 3.0, 50, seed=5)
        X = sample(spec, 3)
        assert X.shape == (50, 3)
        assert X.min() >= -2.0 and X.max() <= 3.0
        np.testing.assert_array_equal(X, sample(spec, 3))
        assert not np.array_equal(X, sample(SamplingSpec("U", -2.0, 3.0, 50, seed=6), 3))

    def test_even_grid_is_zipped(self):
        """E sampling repeats the same grid in every column."""
        X = sample(SamplingSpec("E", -1.0, 1.0, 5), 2)
        np.testing.assert_allclose(X[:, 0], [-1.0, -0.5, 0.0, 0.5, 1.0])
        np.testing.assert_array_equal(X[:, 0], X[:, 1])

    @pytest.mark.parametrize(
        "kind,a,b,count",
        [("Z", 0.0, 1.0, 5), ("U", 1.0, 1.0, 5), ("E", 2.0, 1.0, 5), ("U", 0.0, 1.0, 0)],
    )
    def test_invalid_specs(self, kind, a, b, count):
        """Bad kinds, empty ranges and zero counts are rejected."""
        with pytest.raises(DatasetError):
            SamplingSpec(kind, a, b, count)

    def test_with_sampling(self):
        """with_sampling replaces only the given fields."""
        entry = get_benchmark("Nguyen-1")
        dense = with_sampling(entry, count=200, seed=9)
        assert (dense.spec.kind, dense.spec.a, dense.spec.b) == ("U", -1.0, 1.0)
        assert (dense.spec.count, dense.spec.seed) == (200, 9)
        assert entry.spec.count == 20

    def test_realize_records_seed(self):
        """The realized dataset carries the sampling it was drawn with."""
        data = realize(get_benchmark("Nguyen-9"), seed=4)
        assert data.sampling.seed == 4
        assert data.X.shape == (20, 2)
        assert data.name == "Nguyen-9"


class TestNoise:
    """Tests for add_noise."""

    def test_bounded_by_span(self):
        """Noise stays within level * span."""
        y = np.random.default_rng(0).normal(size=100_000)
        span = y.max() - y.min()
        noisy = add_noise(y, 0.05, seed=1)
        assert np.max(np.abs(noisy - y)) <= 0.05 * span
        # the uniform fills most of its range at this size
        assert np.max(np.abs(noisy - y)) > 0.049 * span

    def test_zero_level_is_a_copy(self):
        """Level 0 returns an equal, independent array."""
        y = np.array([1.0, 2.0, 3.0])
        out = add_noise(y, 0.0, seed=0)
        np.testing.assert_array_equal(out, y)
        assert out is not y

    def test_constant_target_unchanged(self):
        """A zero span adds no noise."""
        y = np.full(5, 2.0)
        np.testing.assert_array_equal(add_noise(y, 0.1, seed=0), y)

    def test_seeded(self):
        """Same seed, same noise."""
        y = np.linspace(0, 1, 10)
        np.testing.assert_array_equal(add_noise(y, 0.1, seed=3), add_noise(y, 0.1, seed=3))

    def test_negative_level(self):
        """Negative levels are rejected."""
        with pytest.raises(DatasetError):
            add_noise(np.ones(3), -0.1, seed=0)


class TestDataset:
    """Tests for Dataset validation."""

    def test_shape_mismatch(self):
        """y must have one entry per row."""
        with pytest.raises(DatasetError):
            Dataset(np.zeros((3, 1)), np.zeros(2))

    def test_non_finite(self):
        """NaN and inf are rejected."""
        with pytest.raises(DatasetError):
            Dataset(np.array([[np.nan]]), np.array([1.0]))

    def test_properties(self):
        """m and k follow the input matrix."""
        data = Dataset(np.zeros((4, 3)), np.zeros(4))
        assert (data.m, data.k) == (4, 3)


class TestCsv:
    """Tests for load_csv and write_csv."""

    def test_load(self, tmp_path):
        """A well-formed file loads into X and y."""
        path = tmp_path / "points.csv"
        path.write_text("x1,x2,y\n1,2,3\n4,5,6\n\n")
        data = load_csv(path)
        np.testing.assert_array_equal(data.X, [[1.0, 2.0], [4.0, 5.0]])
        np.testing.assert_array_equal(data.y, [3.0, 6.0])
        assert data.name == "points"

    def test_write_then_load_is_exact(self, tmp_path, nguyen1_dataset):
        """17 significant digits survive the trip through a file."""
        path = tmp_path / "nguyen1.csv"
        write_csv(nguyen1_dataset, path)
        assert path.read_text().splitlines()[0] == "x1,y"
        data = load_csv(path)
        np.testing.assert_array_equal(data.X, nguyen1_dataset.X)
        np.testing.assert_array_equal(data.y, nguyen1_dataset.y)

    def test_missing_file(self, tmp_path):
        """A missing path is a DatasetError."""
        with pytest.raises(DatasetError, match="Dataset file not found"):
            load_csv(tmp_path / "absent.csv")

    @pytest.mark.parametrize(
        "text,message",
        [
            ("", "empty file"),
            ("a,b\n1,2\n", "malformed header"),
            ("x2,y\n1,2\n", "malformed header"),
            ("y\n1\n", "malformed header"),
            ("x1,y\n", "no data rows"),
            ("x1,y\n1,abc\n", "non-numeric value 'abc' at row 2, column y"),
            ("x1,y\n1,2\ninf,3\n", "non-finite value 'inf' at row 3, column x1"),
            ("x1,y\n1\n", "row 2 has 1 cells"),
        ],
    )
    def test_malformed(self, tmp_path, text, message):
        """Malformed files name the offending row and column."""
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(DatasetError, match=message):
            load_csv(path)
