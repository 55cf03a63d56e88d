import math

import numpy as np
import pytest

from mpego.dataset import FeatureTable, merge_label
from mpego.discretize import apply_bins, fit_bins
from mpego.hie import AggregationWeights, HieConfig, HieError, fis, fis_direct, gafis, run_hie, safis, sis
from mpego.measures import DISTRIBUTION_MEASURES, MEASURES

from conftest import continuous_table


def test_fis_examples():
    assert fis([0.406, 0.631, 0.986, 0.671, 0.586]).value == pytest.approx(0.656, abs=5e-4)
    assert fis([0.322, 0.840, 0.824, 0.637, 0.939]).value == pytest.approx(0.7124)
    assert fis([0.42]).value == 0.42
    with pytest.raises(HieError):
        fis([0.1, 0.2], AggregationWeights.uniform(3))


def test_weights_validation():
    with pytest.raises(HieError):
        AggregationWeights((0.5, 0.6), "custom")
    with pytest.raises(HieError):
        AggregationWeights((1.5, -0.5), "custom")
    w = AggregationWeights.from_raw([1, 3])
    assert fis([0.0, 1.0], w).value == pytest.approx(0.75)


def test_safis_and_gafis_examples():
    assert safis({"QED": 0.946, "LogP": 0.951, "W": 0.5}, ["QED", "LogP"]).value == pytest.approx(0.9485)
    assert safis({"QED": 0.471, "LogP": 0.219, "W": 0.5}, ["QED", "LogP"]).value == pytest.approx(0.345)
    assert safis({"a": 0.3, "b": 0.9}, ["a"]).value == 0.3
    with pytest.raises(HieError):
        safis({"a": 0.3, "b": 0.9}, ["zzz"])
    with pytest.raises(HieError):
        safis({"a": 0.3, "b": 0.9}, ["a", "b"])
    col = dict(zip("abcdef", [1.000, 0.912, 0.951, 0.656, 0.946, 0.825]))
    assert gafis(col).value == pytest.approx(0.88167, abs=1e-5)
    assert gafis({"a": 1.0, "b": 1.0}).value == 1.0
    with pytest.raises(HieError):
        gafis({})


def test_fis_direct_examples():
    assert fis_direct([1, 2, 3], [1, 2, 3], "ks").value == 1.0
    assert fis_direct([0, 1], [5, 6], "ks").value == 0.0
    assert fis_direct([0, 1], [0, 2], "wasserstein").value == 0.75
    with pytest.raises(HieError):
        fis_direct([0, 1], [0, 2], "yules-y")


def two_strata_tables(g_codes, r_codes):
    kinds = {"c": "categorical"}
    return (FeatureTable.from_columns({"c": g_codes}, kinds, "g"),
            FeatureTable.from_columns({"c": r_codes}, kinds, "r"))


def test_sis_perfect_separation_and_identity():
    g, r = two_strata_tables(["A"] * 10, ["B"] * 10)
    spec = fit_bins(merge_label(g, r))
    scored, skipped = sis(apply_bins(g, spec), apply_bins(r, spec), "c")
    assert [s.score for s in scored] == [0.0, 0.0] and skipped == []
    rep = run_hie(g, r)
    assert rep.gafis == 0.0
    with pytest.raises(HieError):
        sis(apply_bins(g, spec), apply_bins(r, spec), "c", "ks")


def test_hand_built_pivot_chain():
    """Two categorical features with known counts, scored by an independent pivot computation."""
    g = {"a": ["x"] * 6 + ["y"] * 4, "b": ["p"] * 3 + ["q"] * 7}
    r = {"a": ["x"] * 2 + ["y"] * 8, "b": ["p"] * 5 + ["q"] * 5}
    kinds = {"a": "categorical", "b": "categorical"}
    rep = run_hie(FeatureTable.from_columns(g, kinds, "g"), FeatureTable.from_columns(r, kinds, "r"))

    def y(al, be, de, ga):
        s, t = math.sqrt(al * ga), math.sqrt(be * de)
        return 1 - abs((s - t) / (s + t))

    fa = (y(6, 4, 2, 8) + y(4, 6, 8, 2)) / 2
    fb = (y(3, 7, 5, 5) + y(7, 3, 5, 5)) / 2
    assert rep.feature("a").fis == pytest.approx(fa, abs=1e-15)
    assert rep.feature("b").fis == pytest.approx(fb, abs=1e-15)
    assert rep.gafis == pytest.approx((fa + fb) / 2, abs=1e-15)


def test_baseline_swap_invariance(rng):
    a = continuous_table(rng, 300, [0.0, 0.5], "a")
    b = continuous_table(rng, 400, [0.3, 0.0], "b")
    for m in ("yules-y", "yules-q"):
        ab = run_hie(a, b, HieConfig(measure=m))
        ba = run_hie(b, a, HieConfig(measure=m))
        assert ab.all_scores() == pytest.approx(ba.all_scores(), abs=1e-15)


@pytest.mark.parametrize("measure", list(MEASURES))
def test_scores_in_range_and_consistent(rng, measure):
    a = continuous_table(rng, 300, [0.0, 1.0, 2.0], "a")
    b = continuous_table(rng, 300, [0.0, 0.0, 0.0], "b")
    rep = run_hie(a, b, HieConfig(measure=measure, groups={"g": ["x0", "x1"]}))
    assert all(0.0 <= s <= 1.0 for s in rep.all_scores())
    assert rep.gafis == pytest.approx(np.mean([f.fis for f in rep.features]), abs=1e-12)
    if measure not in DISTRIBUTION_MEASURES:
        for f in rep.features:
            assert f.fis == pytest.approx(np.mean([s.score for s in f.sis]), abs=1e-12)


def test_monotone_transform_invariance(rng):
    a = continuous_table(rng, 500, [0.0, 0.8], "a")
    b = continuous_table(rng, 500, [0.2, 0.0], "b")

    def transform(t):
        cols = {n: np.exp(t.column(n)) * 3 + 1 for n in t.schema.names}
        return FeatureTable.from_columns(cols, {n: "continuous" for n in cols}, t.source)

    r1 = run_hie(a, b)
    r2 = run_hie(transform(a), transform(b))
    assert [s.score for f in r1.features for s in f.sis] == [s.score for f in r2.features for s in f.sis]


def test_support_weighted_scheme(rng):
    a = continuous_table(rng, 300, [0.5], "a")
    b = continuous_table(rng, 300, [0.0], "b")
    rep = run_hie(a, b, HieConfig(sis_weights="support-weighted"))
    f = rep.features[0]
    w = np.array([s.counts.alpha + s.counts.delta for s in f.sis], float)
    assert f.fis == pytest.approx(np.dot(w / w.sum(), [s.score for s in f.sis]), abs=1e-12)


def test_report_json_shape(rng):
    a = continuous_table(rng, 100, [0.0, 0.0], "a")
    d = run_hie(a, a.with_source("b"), HieConfig(groups={"g": ["x0"]})).to_dict()
    assert {"comparison", "config", "features", "safis", "gafis"} <= set(d)
    assert {"name", "sis", "fis"} <= set(d["features"][0])
    assert {"stratum", "score"} <= set(d["features"][0]["sis"][0])
    assert d["safis"][0]["members"] == ["x0"]
