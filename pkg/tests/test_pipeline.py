import json
import re

import numpy as np
import pytest

from mpego.config import resolve
from mpego.dataset import FeatureTable
from mpego.pipeline import ablation_sweep, run
from mpego.report import emit_histograms, fmt3

from conftest import continuous_table, planted_tables


def volatile_free(d):
    d = json.loads(json.dumps(d))
    d.pop("timestamps")
    for g in d["gfa"]:
        g.pop("elapsed_seconds")
    return d


@pytest.fixture
def planted_files(tmp_path):
    gen, ref = planted_tables(5, n=1500)
    gen.save(tmp_path / "g.csv")
    ref.save(tmp_path / "r.csv")
    return tmp_path


def cfg_for(path, **extra):
    raw = {"generated": {"model": str(path / "g.csv")}, "reference": str(path / "r.csv"),
           "reference_name": "train", "seed": 3, "gfa": {"permutations": 19}}
    raw.update(extra)
    return resolve(raw)


def test_report_has_both_sections_and_is_deterministic(planted_files):
    cfg = cfg_for(planted_files)
    a = run(cfg, write=False).to_dict()
    b = run(cfg, write=False).to_dict()
    assert a["hie"] and a["gfa"]
    assert json.dumps(volatile_free(a), sort_keys=True) == json.dumps(volatile_free(b), sort_keys=True)


def test_self_comparison_run(tmp_path):
    rng = np.random.default_rng(0)
    t = continuous_table(rng, 400, [0.0, 0.0], "t")
    t.save(tmp_path / "t.csv")
    cfg = resolve({"generated": {"same": str(tmp_path / "t.csv")}, "reference": str(tmp_path / "t.csv"),
                   "gfa": {"permutations": 9, "restarts": 3}})
    rep = run(cfg, write=False)
    assert rep.hie[0].gafis == 1.0
    assert rep.gfa[0].score == pytest.approx(0.0, abs=1e-9)
    assert rep.gfa[0].p_value == 1.0


def test_markdown_numbers_match_json(planted_files):
    cfg = cfg_for(planted_files, hie={"groups": {"first": ["f1"]}})
    rep = run(cfg, write=False)
    md = rep.markdown()
    d = rep.to_dict()
    expected = {fmt3(f["fis"]) for h in d["hie"] for f in h["features"]}
    expected |= {fmt3(h["gafis"]) for h in d["hie"]} | {fmt3(s["score"]) for h in d["hie"] for s in h["safis"]}
    expected |= {fmt3(s["score"]) for h in d["hie"] for f in h["features"] for s in f["sis"]}
    g = d["gfa"][0]
    expected |= {fmt3(g[k]) for k in ("expected", "observed", "q", "odds_ratio", "p_value", "score")}
    shown = set(re.findall(r"(?<![\w.])\d+\.\d{3}(?![\d])", md))
    assert expected <= shown
    for v in expected:
        assert float(v) == round(float(v), 3)


def test_config_echo_complete(planted_files):
    text = json.dumps(run(cfg_for(planted_files), write=False).to_dict())
    for key in ("measure", "bins", "discretizer", "sis_weights", "fis_weights", "seed", "normalization",
                "q_min", "q_max", "restarts", "permutations"):
        assert f'"{key}"' in text


def test_outputs_written(planted_files):
    out = planted_files
    cfg = cfg_for(planted_files, output={"json": str(out / "r.json"), "markdown": str(out / "r.md"),
                                         "bins": str(out / "b.json")})
    run(cfg)
    assert json.loads((out / "r.json").read_text())["schema_version"] == "1"
    assert (out / "r.md").read_text().startswith("#")
    assert "f1" in json.loads((out / "b.json").read_text())


def test_histograms():
    rng = np.random.default_rng(4)
    a = continuous_table(rng, 300, [0.0], "a")
    same = emit_histograms(a, a.with_source("b"))[0]
    assert np.array_equal(same.densities["a"], same.densities["b"])
    for d in same.densities.values():
        assert np.sum(d * np.diff(same.edges)) == pytest.approx(1.0)
    far = FeatureTable.from_columns({"x0": rng.normal(100, 1, 300)}, {"x0": "continuous"}, "far")
    h = emit_histograms(a, far)[0]
    assert not np.any((h.densities["a"] > 0) & (h.densities["far"] > 0))
    assert len(h.edges) == 51


def test_sweep_identical_populations_and_empty_axes(tmp_path):
    rng = np.random.default_rng(6)
    continuous_table(rng, 300, [0.0, 1.0], "t").save(tmp_path / "t.csv")
    cfg = resolve({"generated": {"t": str(tmp_path / "t.csv")}, "reference": str(tmp_path / "t.csv")})
    _, rows = ablation_sweep(cfg, {"measures": ["yules-y", "yules-q"]}, write=False)
    assert rows and all(r["fis"] == 1.0 for r in rows)
    with pytest.raises(ValueError):
        ablation_sweep(cfg, {}, write=False)


def test_subsample_and_balance(planted_files):
    rep = run(cfg_for(planted_files, subsample=300), write=False)
    assert rep.gfa[0].expected == pytest.approx(0.5)
    rep = run(cfg_for(planted_files, balance=True), write=False)
    assert rep.gfa[0].expected == pytest.approx(0.5)
