"""Experiment drivers, config parsing, and output writers."""

import csv
import json

import numpy as np
import pytest

from plab import cli
from plab import experiments as expm
from plab import geometry as geo
from plab.config import load_config, parse_metric, parse_region
from plab.fluxop import MetricField


def test_config_round_trip(tmp_path):
    cfg_file = tmp_path / "exp.yaml"
    cfg_file.write_text("""
name: demo
n: 2
p: 2.5
domain: {kind: ball, center: [0.0, 0.0], radius: 1.0}
obstacle: {kind: disk, center: [0.0, 0.0], radius: 0.5, codim: 1}
metric: {kind: diagonal, exprs: ["1 + 0.5*x1**2", "1 + 0.5*x2**2"]}
spacings: [0.125, 0.0625]
x0: [0.0, 0.0]
epsilon: [0.125]
probe_distance: 0.25
seed: 3
expect: {dichotomy: Regular}
""")
    cfg = load_config(cfg_file)
    assert cfg.name == "demo" and cfg.p == 2.5
    assert isinstance(cfg.domain, geo.Ball)
    assert isinstance(cfg.obstacle, geo.CodimDisk)
    assert cfg.metric is not None
    assert cfg.spacings == [0.125, 0.0625]
    assert cfg.expect == {"dichotomy": "Regular"}
    assert cfg.obstacle_codim() == 1
    assert np.allclose(cfg.anchor(), [0.0, 0.0])


def test_parse_region_nested():
    r = parse_region({"kind": "intersection", "of": [
        {"kind": "complement", "of": {"kind": "ball", "center": [0, 0], "radius": 1}},
        {"kind": "box", "lo": [-2, -2], "hi": [2, 2]},
    ]})
    assert isinstance(r, geo.RegionIntersection)
    assert geo.contains(r, [1.5, 0.0])
    assert not geo.contains(r, [0.5, 0.0])


def test_parse_region_unknown_kind():
    with pytest.raises(ValueError):
        parse_region({"kind": "torus"})
    with pytest.raises(ValueError):
        parse_region("ball")


def test_parse_metric_kinds():
    assert parse_metric(None, 2) is None
    m = parse_metric({"kind": "conformal", "expr": "1 + x1**2"}, 2)
    g, _, _ = m.tensors(np.array([[1.0, 0.0]]))
    assert np.allclose(g[0], 2.0 * np.eye(2))


def test_experiment_config_validation():
    dom = geo.Ball(np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        expm.ExperimentConfig("x", 2, 1.0, dom)
    with pytest.raises(ValueError):
        expm.ExperimentConfig("x", 2, 2.0, dom, spacings=[0.1, 0.2])


def test_removability_requires_codim_at_least_p():
    cfg = expm.ExperimentConfig("x", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.CodimDisk(np.zeros(2), 0.5, 1),
                                spacings=[0.25, 0.125, 0.0625])
    with pytest.raises(ValueError):
        expm.run_removability(cfg, lambda X: X[:, 0], lambda X: X[:, 0])


def test_removability_rejects_mismatched_boundary_data():
    cfg = expm.ExperimentConfig("x", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.PointSet(np.zeros(2)),
                                spacings=[0.25, 0.125, 0.0625])
    with pytest.raises(ValueError):
        expm.run_removability(cfg, lambda X: X[:, 0], lambda X: X[:, 0] + 1.0)


def test_removability_identical_data_is_zero():
    cfg = expm.ExperimentConfig("x", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.PointSet(np.zeros(2)),
                                spacings=[0.25, 0.125, 0.0625])
    v = expm.run_removability(cfg, lambda X: X[:, 0], lambda X: X[:, 0])
    assert v.evidence["sups"] == [0.0, 0.0, 0.0]


def test_removability_point_jump_vanishes():
    """Data disagreeing only on a point obstacle: the influence decays like
    the point's capacity."""
    cfg = expm.ExperimentConfig("x", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.PointSet(np.zeros(2)),
                                spacings=[1 / 8, 1 / 16, 1 / 32, 1 / 64])

    def f(X):
        on = np.linalg.norm(X, axis=1) <= 1e-9
        return np.where(on, 1.0, 0.0)

    v = expm.run_removability(cfg, f, lambda X: np.zeros(len(X)))
    assert v.kind == expm.IRREGULAR
    sups = v.evidence["sups"]
    assert sups[-1] < sups[0]


def test_cone_rejects_codim_at_least_p():
    ray = geo.TruncatedCone(np.zeros(3), [1.0, 0.0, 0.0], np.pi / 6, 0.5, 2)
    cfg = expm.ExperimentConfig("x", 3, 2.0, geo.Ball(np.zeros(3), 1.0), ray,
                                spacings=[0.25, 0.125])
    with pytest.raises(ValueError):
        expm.run_cone(cfg)


def test_cone_requires_cone_obstacle():
    cfg = expm.ExperimentConfig("x", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.PointSet(np.zeros(2)), spacings=[0.25])
    with pytest.raises(ValueError):
        expm.run_cone(cfg)


def test_p_greater_n_precondition():
    with pytest.raises(ValueError):
        expm.run_p_greater_n(2, 2.0)


def test_operator_invariance_identity_metric_trivially_agrees():
    cfg = expm.ExperimentConfig("x", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.PointSet(np.zeros(2)),
                                spacings=[1 / 8, 1 / 16, 1 / 32, 1 / 64])
    res = expm.run_operator_invariance(cfg, MetricField.identity(2))
    assert res["euclidean"].kind == res["metric"].kind
    assert res["agree"] in (True, None)


def test_verdict_json_and_csv_writers(tmp_path):
    cfg = expm.ExperimentConfig("w", 2, 2.0, geo.Ball(np.zeros(2), 1.0),
                                geo.PointSet(np.zeros(2)),
                                spacings=[1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128])
    v = expm.run_dichotomy(cfg)
    jpath = tmp_path / "verdict.json"
    expm.write_verdict_json(jpath, "w", v)
    d = json.loads(jpath.read_text())
    assert d["result"]["kind"] == v.kind
    cpath = tmp_path / "cap.csv"
    expm.write_capacity_csv(cpath, "w", 2, 2.0, v.evidence["capacity"])
    rows = list(csv.DictReader(open(cpath)))
    assert len(rows) == 5
    assert rows[0]["condenser_id"] == "w"
    # every spacing appears in the evidence rows; none silently dropped
    cap_rows = [r for r in v.rows if r["test"] == "capacity"]
    assert len(cap_rows) == 5


def test_cli_exit_codes(tmp_path):
    cfg_file = tmp_path / "c.yaml"
    cfg_file.write_text("""
name: cli-demo
n: 2
p: 2.0
domain: {kind: ball, center: [0.0, 0.0], radius: 1.0}
obstacle: {kind: ball, center: [0.0, 0.0], radius: 0.25}
spacings: [0.125, 0.0625, 0.03125]
expect: {capacity: BoundedBelow}
""")
    out = tmp_path / "out"
    rc = cli.main(["--config", str(cfg_file), "--out", str(out), "capacity"])
    assert rc == 0
    assert (out / "cli-demo_capacity.csv").exists()
    # mismatched expectation -> nonzero exit
    cfg_file.write_text(cfg_file.read_text().replace("BoundedBelow", "VanishingLog"))
    rc = cli.main(["--config", str(cfg_file), "--out", str(out), "capacity"])
    assert rc != 0


def test_cli_solve_dumps_field(tmp_path):
    cfg_file = tmp_path / "s.yaml"
    cfg_file.write_text("""
name: slv
n: 2
p: 2.0
domain: {kind: box, lo: [0.0, 0.0], hi: [1.0, 1.0]}
spacings: [0.125]
""")
    out = tmp_path / "out"
    rc = cli.main(["--config", str(cfg_file), "--out", str(out),
                   "solve", "--data", "x1 + 2*x2"])
    assert rc == 0
    dump = (out / "slv_solution.txt").read_text().strip().splitlines()
    assert len(dump) == 9 ** 2
