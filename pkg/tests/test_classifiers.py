import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairclass.classifiers import (
    ByCount,
    ByThreshold,
    EmptyModelWarning,
    LinearIndependenceModel,
    error_rate,
    fair_scale,
    fit_fair,
    fit_independence,
    fit_oracle,
    fit_projection,
    fit_shrunken_centroids,
    fit_truncated_nc,
    load_model,
    nested_error_curve,
    predict,
    random_unit_direction,
    save_model,
    score,
)
from fairclass.data import LabeledDataset
from fairclass.errors import DataError
from fairclass.stats import class_summaries, pooled_diag, rank_by_abs, t_statistics
from conftest import make_dataset


def _plugin(ds):
    s1, s2 = class_summaries(ds)
    return s1.means, s2.means, pooled_diag(s1, s2)


def test_independence_plugin_identities(small_ds):
    m1, m2, d = _plugin(small_ds)
    model = fit_independence(small_ds)
    expected = 0.5 * np.sum((m1 - m2) ** 2 / d)
    assert score(model, m1) == pytest.approx(expected, rel=1e-12)
    assert score(model, (m1 + m2) / 2) == 0.0


def test_label_swap_negates_exactly(small_ds, rng):
    X = rng.standard_normal((20, small_ds.p))
    a = fit_independence(small_ds).decision_function(X)
    b = fit_independence(small_ds.swapped()).decision_function(X)
    np.testing.assert_array_equal(a, -b)


def test_label_swap_error_rate_unchanged(rng):
    train = make_dataset(rng, p=10)
    test = make_dataset(rng, n1=30, n2=30, p=10)
    for fit in (fit_independence, lambda d: fit_fair(d, ByCount(3))):
        assert error_rate(fit(train), test) == error_rate(fit(train.swapped()), test.swapped())


def test_truncated_full_equals_independence_unit_variance(rng):
    # rows chosen so every pooled variance is exactly 1
    X = np.array([[1.0, 2.0], [-1.0, 0.0], [2.0, 5.0], [0.0, 3.0]]) / np.sqrt(2.0)
    ds = LabeledDataset(X, [1, 1, 2, 2])
    np.testing.assert_allclose(pooled_diag(*class_summaries(ds)), 1.0, rtol=1e-15)
    ident = rank_by_abs([2.0, 1.0])
    Y = rng.standard_normal((15, 2))
    np.testing.assert_allclose(
        fit_truncated_nc(ds, ident, 2).decision_function(Y),
        fit_independence(ds).decision_function(Y), atol=1e-12)


def test_truncated_m1_depends_on_top_feature_only(small_ds, rng):
    r = rank_by_abs(t_statistics(*class_summaries(small_ds)).values)
    model = fit_truncated_nc(small_ds, r, 1)
    x = rng.standard_normal(small_ds.p)
    y = rng.standard_normal(small_ds.p)
    y[r.order[0]] = x[r.order[0]]
    assert score(model, x) == score(model, y)


def test_truncated_nested_partial_sums(small_ds, rng):
    r = rank_by_abs(t_statistics(*class_summaries(small_ds)).values)
    m1, m2, _ = _plugin(small_ds)
    alpha, mid = m1 - m2, (m1 + m2) / 2
    x = rng.standard_normal(small_ds.p)
    for m in range(2, small_ds.p + 1):
        j = r.order[m - 1]
        inc = score(fit_truncated_nc(small_ds, r, m - 1), x) + alpha[j] * (x[j] - mid[j])
        assert score(fit_truncated_nc(small_ds, r, m), x) == pytest.approx(inc, abs=1e-12)
    with pytest.raises(DataError):
        fit_truncated_nc(small_ds, r, 0)


def test_fair_b0_equals_independence(small_ds, rng):
    X = rng.standard_normal((30, small_ds.p))
    np.testing.assert_allclose(fit_fair(small_ds, ByThreshold(0.0)).decision_function(X),
                               fit_independence(small_ds).decision_function(X), atol=1e-12)


def test_fair_empty_model(small_ds):
    T = t_statistics(*class_summaries(small_ds)).values
    b = fair_scale(small_ds.n1, small_ds.n2) * np.abs(T).max() + 1.0
    with pytest.warns(EmptyModelWarning):
        model = fit_fair(small_ds, ByThreshold(b))
    assert model.is_empty and "empty" in model.flags
    assert score(model, np.ones(small_ds.p)) == 0.0
    assert predict(model, np.ones(small_ds.p)) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fair_count_matches_threshold_between_order_statistics(seed):
    rng = np.random.default_rng(seed)
    ds = make_dataset(rng, p=15)
    T = t_statistics(*class_summaries(ds)).values
    scaled = np.sort(fair_scale(ds.n1, ds.n2) * np.abs(T))[::-1]
    m = int(rng.integers(1, 15))
    if scaled[m - 1] == scaled[m]:
        return
    b = scaled[m] + rng.uniform(0.01, 0.99) * (scaled[m - 1] - scaled[m])
    a = fit_fair(ds, ByCount(m))
    c = fit_fair(ds, ByThreshold(b))
    assert set(a.active.tolist()) == set(c.active.tolist())
    X = rng.standard_normal((10, ds.p))
    np.testing.assert_allclose(a.decision_function(X), c.decision_function(X), atol=1e-12)


def test_fair_scale_equivariance(rng):
    train = make_dataset(rng, p=12)
    test = make_dataset(rng, n1=20, n2=20, p=12)
    s = rng.uniform(0.1, 10.0, 12)
    a = fit_fair(train, ByCount(4))
    b = fit_fair(train.with_features(train.features * s), ByCount(4))
    assert set(a.active.tolist()) == set(b.active.tolist())
    np.testing.assert_array_equal(predict(a, test.features), predict(b, test.features * s))


def test_oracle_gate(small_ds):
    alpha = np.linspace(-1, 1, small_ds.p)
    with pytest.warns(EmptyModelWarning):
        assert fit_oracle(small_ds, alpha, 1.0).is_empty
    full = fit_oracle(small_ds, np.full(small_ds.p, 0.3), 0.0)
    r = rank_by_abs(np.arange(small_ds.p, 0, -1, dtype=float))
    assert set(full.active.tolist()) == set(fit_truncated_nc(small_ds, r, small_ds.p).active.tolist())
    model = fit_oracle(small_ds, alpha, 0.4)
    assert model.active.tolist() == [j for j in range(small_ds.p) if abs(alpha[j]) > 0.4]
    m1, m2, _ = _plugin(small_ds)
    np.testing.assert_array_equal(model.weights, (m1 - m2)[model.active])


def test_random_direction_properties():
    a = random_unit_direction(50, 3)
    assert np.linalg.norm(a.a) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(a.a, random_unit_direction(50, 3).a)
    draws = np.array([random_unit_direction(5, s).a for s in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0)) < 3 / np.sqrt(10_000))


def test_projection_matches_direct_formula(small_ds, rng):
    d = random_unit_direction(small_ds.p, 9)
    model = fit_projection(small_ds, d)
    m1, m2, _ = _plugin(small_ds)
    a = d.a
    X = rng.standard_normal((25, small_ds.p))
    direct = (X @ a - a @ ((m1 + m2) / 2)) * (a @ m1 - a @ m2)
    np.testing.assert_allclose(model.decision_function(X), direct, atol=1e-10)
    assert score(model, m1) == pytest.approx((a @ (m1 - m2)) ** 2 / 2, rel=1e-10)
    assert score(model, (m1 + m2) / 2) == 0.0
    with pytest.raises(DataError):
        fit_projection(small_ds, random_unit_direction(small_ds.p + 1, 0))


def test_shrunken_centroids(small_ds):
    ind = fit_independence(small_ds)
    nsc = fit_shrunken_centroids(small_ds, 0.0)
    assert nsc.active.tolist() == ind.active.tolist()
    np.testing.assert_array_equal(np.sign(nsc.weights), np.sign(ind.weights))
    with pytest.warns(EmptyModelWarning):
        assert fit_shrunken_centroids(small_ds, 1e9).is_empty
    prev = None
    for delta in np.linspace(0, 3, 25):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyModelWarning)
            m = fit_shrunken_centroids(small_ds, delta)
        w = np.zeros(small_ds.p)
        w[m.active] = m.weights
        if prev is not None:
            assert np.all(np.abs(w) <= np.abs(prev) + 1e-15)
        prev = w


def _constant_model(p, value):
    return LinearIndependenceModel(p=p, active=[0], weights=[value], centers=[0.0],
                                   kind="independence", n1=2, n2=2)


def test_predict_tie_rule_and_strictness():
    assert predict(_constant_model(1, 1.0), [0.0]) == 2
    assert predict(_constant_model(1, 1.0), [1e-300]) == 1
    assert predict(_constant_model(1, -1.0), [-1e-300]) == 1
    with pytest.raises(DataError):
        predict(_constant_model(2, 1.0), [0.0])


def test_error_rate_recount(rng):
    train = make_dataset(rng, p=6)
    test = make_dataset(rng, n1=15, n2=15, p=6)
    m = fit_independence(train)
    tally = sum(predict(m, x) != y for x, y in zip(test.features, test.labels))
    assert error_rate(m, test) == tally / test.n


def test_error_rate_constant_prediction():
    # every sample on the positive side: all of class 2 is wrong
    ds = LabeledDataset(np.ones((5, 1)), [1, 1, 2, 2, 2])
    assert error_rate(_constant_model(1, 1.0), ds) == 0.6


def test_nested_error_curve_matches_refits(rng):
    train = make_dataset(rng, p=10)
    test = make_dataset(rng, n1=25, n2=25, p=10)
    order = rank_by_abs(t_statistics(*class_summaries(train)).values).order
    curve = nested_error_curve(train, test, order)
    for m in range(1, 11):
        assert curve[m - 1] == error_rate(fit_fair(train, ByCount(m)), test)


def test_model_round_trip(tmp_path, small_ds, rng):
    for model in (fit_fair(small_ds, ByCount(4)), fit_independence(small_ds),
                  fit_projection(small_ds, random_unit_direction(small_ds.p, 1))):
        path = tmp_path / f"{model.kind}.tsv"
        save_model(model, path)
        back = load_model(path)
        assert back.kind == model.kind and back.p == model.p
        X = rng.standard_normal((30, small_ds.p)) * 100
        np.testing.assert_allclose(back.decision_function(X), model.decision_function(X), atol=1e-12)
        np.testing.assert_array_equal(predict(back, X), predict(model, X))
