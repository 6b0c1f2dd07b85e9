import math
import pathlib

import numpy as np
import pytest

import hydroens as he

ROOT = pathlib.Path(__file__).resolve().parents[2]
EXAMPLES = ROOT / "docs" / "examples"


def test_l2_normalized_has_energy_n():
    v = np.array([3.0, 4.0, 0.0, 12.0])
    out = he.l2_normalized(v)
    assert np.linalg.norm(out) == pytest.approx(len(v))


def test_global_ensemble_matches_numpy():
    rng = np.random.default_rng(7)
    ys = [rng.gamma(2.0, 50.0, 48) for _ in range(3)]
    a = np.array([0.2, 0.5, 0.3])
    want = sum(w * y / (np.linalg.norm(y) / y.size) for w, y in zip(a, ys))
    np.testing.assert_allclose(he.global_ensemble(ys, a), want, rtol=1e-12)


def test_single_term_batch_equals_global():
    rng = np.random.default_rng(11)
    ys = [rng.gamma(2.0, 50.0, 30) for _ in range(3)]
    a = np.array([0.1, 0.6, 0.3])
    batch = he.batch_ensemble([[y] for y in ys], a.reshape(1, 3))
    np.testing.assert_array_equal(batch[0], he.global_ensemble(ys, a))


def test_bad_coefficients_raise():
    ys = [[np.ones(4)], [np.ones(4)]]
    with pytest.raises(he.Error):
        he.batch_ensemble(ys, np.array([[0.7, 0.7]]))


def test_median_sigma_coefficients_on_simplex():
    norms = np.array([[1.0, 2.0], [3.0, 2.0], [5.0, 2.0]])
    r = he.median_sigma_coeffs(norms)
    np.testing.assert_allclose(r["raw"], [3.0 + 2.0, 2.0])
    assert r["coefficients"].sum() == pytest.approx(1.0)


def test_metrics_and_identity():
    rng = np.random.default_rng(3)
    y = rng.gamma(2.0, 40.0, 64)
    yhat = y + rng.normal(0, 10, 64)
    assert he.rmse(yhat, y) == pytest.approx(math.sqrt(np.mean((yhat - y) ** 2)))
    assert he.mae(yhat, y) == pytest.approx(np.mean(np.abs(yhat - y)))
    cos = yhat @ y / (np.linalg.norm(yhat) * np.linalg.norm(y))
    assert he.sim(yhat, y) == pytest.approx(cos)
    lhs, rhs = he.mse_skill_identity(yhat, y)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_proposition_sweep_has_no_violations():
    s = he.proposition1_sweep(2000, 5)
    assert s["instances"] == 2000
    assert s["violations"] == 0


def test_weights_standardize_to_unit_range():
    w = he.finalize_weights(he.minmax_standardize(np.array([4.0, -2.0, 1.0])))
    np.testing.assert_allclose(w, [1.0 + 1e-8, 1e-8, 0.5 + 1e-8])
    with pytest.raises(he.DegenerateInput):
        he.minmax_standardize(np.array([2.0, 2.0]))


def test_feature_csv_ingest():
    months, z = he.read_features(EXAMPLES / "sst_features.csv")
    assert months == ["2018-06", "2018-07"]
    np.testing.assert_array_equal(z, [[0.5, -1.25, 3.0], [0.75, -1.0, 2.5]])


def test_embedding_exchange_and_silhouette(tmp_path):
    rng = np.random.default_rng(1)
    months = [f"{2015 + i // 12}-{i % 12 + 1:02d}" for i in range(24)]
    flood = np.array([6 <= int(m[5:]) <= 10 for m in months])
    e = rng.normal(0, 0.1, (24, 3)) + np.where(flood[:, None], 5.0, 0.0)
    path = tmp_path / "embedding.csv"
    he.write_embedding(path, months, e)
    got_months, got = he.read_embedding(path)
    assert got_months == months
    np.testing.assert_array_equal(got, e)
    assert he.flood_month_silhouette(got, got_months) > 0.9
    assert he.silhouette(got, flood.astype(int).tolist()) == pytest.approx(he.flood_month_silhouette(got, months))


def test_sst_weights_pipeline():
    rng = np.random.default_rng(2)
    months = [f"{2016 + i // 12}-{i % 12 + 1:02d}" for i in range(36)]
    flood = np.array([6 <= int(m[5:]) <= 10 for m in months])
    z = rng.normal(0, 1, (36, 16)) + np.where(flood[:, None], 6.0, 0.0)
    r = he.compute_sst_weights(months, z, seed=2019, iterations=500)
    stw = r["stw"]
    assert stw.min() == pytest.approx(1e-8, abs=1e-15)
    assert stw.max() == pytest.approx(1.0 + 1e-8)
    assert r["embedding"].shape == (36, 3)
    again = he.compute_sst_weights(months, z, seed=2019, iterations=500)
    np.testing.assert_array_equal(again["stw"], stw)


def test_weights_csv_example():
    months, w = he.read_weights(EXAMPLES / "stw.csv")
    assert months == ["2018-06", "2018-07", "2018-08"]
    np.testing.assert_array_equal(w, [1e-08, 0.5, 1.00000001])


def test_malformed_csv_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("month_id,z1\n2018-06,1\n2018-07,oops\n")
    with pytest.raises(he.LineError, match="line 3"):
        he.read_features(path)
