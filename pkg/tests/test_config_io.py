import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavlab import io
from cavlab.config import ConfigError, parse_config
from cavlab.experiments import worker_count
from cavlab.fem import mesh_disk
from cavlab.radial import RadialField, RadialGrid


def test_minimal_defaults():
    cfg = parse_config({"experiment": "radial-classical", "lambda": 1.5})
    assert cfg.material == {"mu": 1.0, "p": 2.0, "c1": 1.0, "c2": 2.0, "gamma": 2.0, "delta": 2.0}
    assert cfg.penalty["tau"] == 3.0 and cfg.penalty["alpha"] == 2.0
    assert cfg.grid["m"] == 100 and cfg.lam == 1.5


def test_fluid_regimes():
    comp = parse_config({"experiment": "fluid2d"})
    assert comp.lam == 0.8 and comp.material["mu"] == 0 and comp.material["c2"] == 1.0
    assert comp.penalty["eps2"] == 1e-2 and comp.flow["init"] == "zero"
    exp = parse_config({"experiment": "fluid2d", "lambda": 1.2})
    assert (exp.penalty["eps2"], exp.penalty["tau"], exp.penalty["M"]) == (1e-3, 1.0, 100.0)
    assert exp.flow["init"] == "gaussian" and exp.flow["dt_v"] == 3e-3
    # explicit values beat regime defaults
    own = parse_config({"experiment": "fluid2d", "lambda": 1.2, "penalty": {"tau": 2.0}})
    assert own.penalty["tau"] == 2.0 and own.penalty["eps2"] == 1e-3


@pytest.mark.parametrize("raw, path", [
    ({"experiment": "radial-classical", "material": {"p": 3.5}}, "material.p"),
    ({"experiment": "radial-classical", "material": {"pp": 1}}, "material.pp"),
    ({"experiment": "radial-classical", "bogus": 1}, "bogus"),
    ({}, "experiment"),
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "table1", "penalty": {"eps2": "x"}}, "penalty.eps2"),
    ({"experiment": "table1", "grid": {"m": 10.5}}, "grid.m"),
    ({"experiment": "table1", "table1": {"eps2_list": [1e-6, -1]}}, "table1.eps2_list[1]"),
    ({"experiment": "repulsion", "repulsion": {"ns": [3, 4]}}, "repulsion.ns[0]"),
    ({"experiment": "gamma-pair", "gamma_pair": {"deltas": [0.105]}}, "gamma_pair.deltas[0]"),
    ({"experiment": "fluid2d", "mesh": {"jitter": 0.7}}, "mesh.jitter"),
    ({"experiment": "fluid2d", "flow": {"solver": "lu"}}, "flow.solver"),
    ({"experiment": "table1", "lambda": -1}, "lambda"),
])
def test_errors_name_key(raw, path):
    with pytest.raises(ConfigError) as exc:
        parse_config(raw)
    assert str(exc.value).startswith(path)


def test_file_and_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"experiment": "table1", "penalty": {"eps2": 1e-4}}))
    cfg = parse_config(p, {"penalty.eps2": 1e-8, "grid.m": 50, "seed": None})
    assert cfg.penalty["eps2"] == 1e-8 and cfg.grid["m"] == 50
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="config"):
        parse_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "missing.json")


def test_deterministic_and_round_trip():
    raw = {"experiment": "repulsion", "lambda": 1.4, "repulsion": {"ns": [2, 4]}}
    a, b = parse_config(raw), parse_config(raw)
    assert a == b
    assert parse_config(json.loads(json.dumps(a.to_dict()))) == a


@given(st.sampled_from(["radial-classical", "radial-decoupled", "table1", "repulsion",
                        "gamma-pair", "fluid2d"]),
       st.floats(0.5, 2.0), st.floats(1e-10, 1e-2), st.integers(0, 1000))
def test_round_trip_property(exp, lam, eps2, seed):
    cfg = parse_config({"experiment": exp, "lambda": lam, "penalty": {"eps2": eps2},
                        "seed": seed})
    again = parse_config(json.loads(json.dumps(io._round(cfg.to_dict()))))
    assert again.experiment == exp and again.seed == seed
    assert again.lam == pytest.approx(lam, rel=1e-8)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("CAVLAB_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("CAVLAB_THREADS", "0")
    with pytest.raises(ConfigError):
        worker_count()
    monkeypatch.delenv("CAVLAB_THREADS")
    assert worker_count() == 1


def test_profile_csv(tmp_path):
    f = RadialField.affine(RadialGrid(10), 1.5)
    io.write_radial_field(tmp_path, f)
    lines = (tmp_path / "profile_r.csv").read_text().splitlines()
    assert lines[0] == "R,value" and len(lines) == 12
    assert lines[-1] == "1,1.5"


def test_nine_digits(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["a", "b"], [(1 / 3, 2), (np.float64(np.pi), 5)])
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[1] == ["0.333333333", "2"] and rows[2][0] == "3.14159265"
    io.write_summary(tmp_path / "s.json", {"x": 1 / 3, "n": np.int64(4), "inf": np.inf})
    data = json.loads((tmp_path / "s.json").read_text())
    assert data == {"x": 0.333333333, "n": 4, "inf": "inf"}


def test_vtk(tmp_path):
    m = mesh_disk(2)
    u = 1.1 * m.vertices
    v = np.zeros(m.n_vertices)
    io.write_fluid_field(tmp_path, m, u, v, np.full(m.n_vertices, 1.21))
    text = (tmp_path / "field.vtk").read_text()
    assert "DATASET UNSTRUCTURED_GRID" in text and "POINTS 19 double" in text
    assert "CELLS 24 96" in text and "SCALARS v double 1" in text
    assert "SCALARS detu double 1" in text and "VECTORS u double" in text
    header = (tmp_path / "field.csv").read_text().splitlines()[0]
    assert header == "x,y,u1,u2,v"


def test_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        io.ensure_dir(blocker / "sub")
