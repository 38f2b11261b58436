import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phoneslip.errors import DuplicateSample, EmptyFitSet, SchemaMismatch
from phoneslip.featuredb import (
    FeatureMatrix,
    build_database,
    load_matrix,
    matrix_from_csv,
    matrix_to_csv,
    pearson_rows,
    save_matrix,
    standardize,
    validate_correlation,
)
from phoneslip.features import FEATURE_NAMES
from phoneslip.ingest import CaseLabel
from phoneslip.synthgen import generate_trace


def _matrix(values, cases=None):
    values = np.asarray(values, dtype=float)
    if cases is None:
        cases = [CaseLabel.A] * len(values)
    return FeatureMatrix(list(cases), list(range(len(values))), values)


def test_build_default_database(default_matrix):
    assert default_matrix.values.shape == (120, 54)
    assert default_matrix.n_values == 6480
    labels = default_matrix.labels()
    assert np.all(np.diff(labels) >= 0)  # grouped by case in label order
    assert default_matrix.sample_ids[:20] == list(range(20))


def test_build_single_and_duplicate():
    tr = generate_trace(CaseLabel.B, 1, sample_id=4)
    m = build_database([tr])
    assert m.values.shape == (1, 54)
    with pytest.raises(DuplicateSample):
        build_database([tr, generate_trace(CaseLabel.B, 2, sample_id=4)])


def test_standardize_examples():
    values = np.zeros((2, 54))
    values[:, 0] = [1.0, 3.0]
    values[:, 1] = 5.0
    scaled, params = standardize(_matrix(values), [0, 1])
    np.testing.assert_array_equal(scaled.values[:, 0], [-1.0, 1.0])
    np.testing.assert_array_equal(scaled.values[:, 1], [5.0, 5.0])
    assert params.flagged[1] and not params.flagged[0]
    assert np.all(params.std > 0)
    with pytest.raises(EmptyFitSet):
        standardize(_matrix(values), [])


def test_standardized_fit_rows_have_unit_moments(default_matrix):
    fit = list(range(0, 120, 2))
    scaled, params = standardize(default_matrix, fit)
    sub = scaled.values[fit]
    live = ~params.flagged
    np.testing.assert_allclose(sub[:, live].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.sqrt((sub[:, live] ** 2).mean(axis=0)), 1.0, atol=1e-12)


def test_correlation_identical_rows_within_case():
    rng = np.random.default_rng(0)
    protos = rng.normal(size=(6, 54))
    cases = [c for c in CaseLabel for _ in range(3)]
    values = np.repeat(protos, 3, axis=0)
    report = validate_correlation(FeatureMatrix(cases, list(range(18)), values))
    assert report.intra_case_mean == pytest.approx(1.0, abs=1e-15)
    assert report.n_intra_pairs == 18 and report.n_inter_pairs == 135
    assert report.pair_means.shape == (6, 6)
    np.testing.assert_allclose(report.pair_means, report.pair_means.T)


def test_orthogonal_standardized_rows_have_zero_correlation():
    a = np.tile([1.0, -1.0], 27)
    b = np.tile([1.0, 1.0, -1.0, -1.0], 14)[:54]
    b = b - b.mean()
    corr = pearson_rows(np.vstack([a, b]))
    assert abs(corr[0, 1]) < 1e-12


def test_degenerate_rows_are_excluded_and_counted():
    rng = np.random.default_rng(1)
    values = rng.normal(size=(12, 54))
    values[3] = 2.0
    cases = [c for c in CaseLabel for _ in range(2)]
    m = FeatureMatrix(cases, list(range(12)), values)
    report = validate_correlation(m)
    assert report.degenerate_rows == [(CaseLabel.B, 3)]
    assert report.n_intra_pairs + report.n_inter_pairs == 11 * 10 // 2


def test_synthetic_intra_exceeds_inter(default_matrix):
    scaled, _ = standardize(default_matrix, range(len(default_matrix)))
    report = validate_correlation(scaled)
    assert report.intra_case_mean > report.inter_case_mean
    assert "intra > inter: PASS" in report.to_text()
    assert report.to_csv().splitlines()[0] == "case,A,B,C,D,E,F"


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pearson_properties(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(5, 54))
    c = pearson_rows(x)
    np.testing.assert_allclose(c, c.T, atol=0)
    assert np.all(np.abs(c) <= 1.0)
    np.testing.assert_allclose(np.diag(c), 1.0, atol=1e-12)
    # a common positive scale plus offset applied to both rows leaves correlation unchanged
    a, b = rng.uniform(0.1, 10.0), rng.normal()
    np.testing.assert_allclose(pearson_rows(a * x + b), c, atol=1e-12)


def test_save_load_round_trip(tmp_path, default_matrix):
    path = tmp_path / "f.csv"
    save_matrix(default_matrix, path)
    loaded = load_matrix(path)
    assert loaded.equals(default_matrix)
    assert matrix_to_csv(loaded) == path.read_text()


def test_load_rejects_wrong_column_count():
    header = ",".join(["case", "sample_id", *FEATURE_NAMES[:53]])
    with pytest.raises(SchemaMismatch, match="53"):
        matrix_from_csv(header + "\nA,0," + ",".join(["0"] * 53) + "\n")


def test_load_rejects_unknown_case_with_row_number():
    header = ",".join(["case", "sample_id", *FEATURE_NAMES])
    row = ",".join(["0"] * 54)
    text = f"{header}\nA,0,{row}\nG,1,{row}\n"
    with pytest.raises(SchemaMismatch, match="row 2"):
        matrix_from_csv(text)


def test_load_missing_file_is_io_failure(tmp_path):
    from phoneslip.errors import IoFailure

    with pytest.raises(IoFailure):
        load_matrix(tmp_path / "nope.csv")
