import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flucta import FluctaError, ParameterError, DegenerateInputError
from flucta.series import (
    Series, autocorrelation, compute_profile, read_series, series_stats, write_series,
)
from flucta.surrogate import GeneratorSpec, generate_power_law, shuffle_boxes

from oracles import autocorrelation as ac_oracle

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_series_rejects_empty_and_nonfinite():
    with pytest.raises(FluctaError):
        Series([])
    with pytest.raises(FluctaError):
        Series([1.0, np.nan])
    with pytest.raises(FluctaError):
        Series([1.0, np.inf])


def test_series_is_immutable():
    s = Series([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 3.0


def test_profile_examples():
    assert compute_profile([5, 5, 5, 5]).values.tolist() == [0, 0, 0, 0]
    p = compute_profile([1, 2, 3])
    assert p.values.tolist() == [-1, -1, 0]
    assert p.source_mean == 2


def test_profile_empty_series():
    with pytest.raises(FluctaError):
        compute_profile([])


def test_profile_telescopes_to_zero(rng):
    x = rng.standard_normal(1000)
    assert abs(compute_profile(x).values[-1]) < 1e-6


@given(arrays(float, st.integers(1, 200), elements=finite), st.integers(-50, 50))
def test_profile_translation_covariant(x, c):
    # integer shifts keep x + c exact in floating point, so the mean shifts
    # exactly too
    x = np.round(x, 3)
    a = compute_profile(x).values
    b = compute_profile(x + c).values
    np.testing.assert_allclose(a, b, atol=1e-9 * max(1.0, np.abs(x).max()) * x.size)


@given(arrays(float, st.integers(1, 300), elements=finite))
def test_profile_end_is_zero(x):
    X = compute_profile(x).values
    assert abs(X[-1]) <= 1e-9 * x.size * max(np.std(x), 1e-300) + 1e-9


def test_autocorrelation_lag_zero(rng):
    assert autocorrelation(rng.standard_normal(50), 0) == 1.0


def test_autocorrelation_alternating():
    x = np.tile([1.0, -1.0], 50)
    assert autocorrelation(x, 1) == pytest.approx(-1.0, abs=1e-12)


def test_autocorrelation_errors():
    with pytest.raises(ParameterError):
        autocorrelation([1.0, 2.0, 3.0], 3)
    with pytest.raises(DegenerateInputError):
        autocorrelation([2.0, 2.0, 2.0], 1)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lag", [1, 7, 100])
def test_autocorrelation_matches_double_loop(seed, lag):
    x = np.random.default_rng(seed).standard_normal(2048) + 3.0
    got = autocorrelation(x, lag)
    want = ac_oracle(list(x), lag)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-14)


@given(arrays(float, st.integers(10, 100), elements=finite), st.integers(-100, 100))
@settings(max_examples=50)
def test_autocorrelation_shift_invariant(x, c):
    x = np.round(x, 2)
    if np.std(x) < 1e-3:
        return
    a = autocorrelation(x, 3)
    b = autocorrelation(x + c, 3)
    assert a == pytest.approx(b, abs=1e-9)


def test_shuffled_correlated_series_is_uncorrelated():
    # Monte-Carlo check of the 3/sqrt(N) band on box-shuffled (s_u = 1)
    # long-range correlated data
    n = 10000
    vals = []
    for seed in range(100):
        x = generate_power_law(GeneratorSpec(n, 0.8, seed=seed))
        vals.append(autocorrelation(shuffle_boxes(x, 1, seed=seed + 1000), 1))
    vals = np.array(vals)
    assert np.all(np.abs(vals) < 3 / np.sqrt(n) * 1.5)
    assert abs(vals.mean()) < 3 / np.sqrt(n)


def test_series_stats_examples():
    assert series_stats([0, 0, 0]) == (0.0, 0.0)
    assert series_stats([1, 3]) == (2.0, 1.0)


def test_series_stats_generated():
    m, sd = series_stats(generate_power_law(GeneratorSpec(50000, 0.7, seed=3)))
    assert abs(m) < 0.02 and abs(sd - 1) < 0.02


def test_read_plain_text(tmp_path):
    f = tmp_path / "x.txt"
    f.write_text("# header comment\n1.5\n\n-2\n# mid\n3e-1\n")
    assert read_series(f).values.tolist() == [1.5, -2.0, 0.3]


def test_read_csv_by_name_and_index(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("t,v\n0,1.0\n1,2.5\n2,-1\n")
    assert read_series(f, "v").values.tolist() == [1.0, 2.5, -1.0]
    assert read_series(f, 0).values.tolist() == [0, 1, 2]
    assert read_series(f).values.tolist() == [0, 1, 2]
    with pytest.raises(FluctaError):
        read_series(f, "missing")


def test_read_headerless_csv(tmp_path):
    f = tmp_path / "y.csv"
    f.write_text("1\n2\n3\n")
    assert read_series(f).values.tolist() == [1, 2, 3]


def test_write_read_roundtrip_is_lossless(tmp_path, rng):
    x = rng.standard_normal(100) * 1e-3 + np.pi
    write_series(tmp_path / "s.txt", x)
    assert np.array_equal(read_series(tmp_path / "s.txt").values, x)


def test_read_bad_line(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("1\nabc\n")
    with pytest.raises(FluctaError):
        read_series(f)
