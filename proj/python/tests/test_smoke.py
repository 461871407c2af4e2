import cmath
import math

import pytest

import anomalykit as ak


def small_config():
    cfg = ak.default_config()
    cfg["grid"]["nx"] = 20
    cfg["grid"]["ny"] = 20
    return cfg


def test_default_config_and_hash():
    cfg = ak.default_config()
    assert cfg["model"]["chemicals"] == 2
    assert ak.config_hash(cfg) == ak.config_hash(None)
    changed = ak.apply_override(cfg, "grid.nx=128")
    assert changed["grid"]["nx"] == 128
    assert ak.config_hash(changed) != ak.config_hash(cfg)


def test_grid_and_inclusion():
    g = ak.Grid(33, 33)
    assert g.hx == pytest.approx(1 / 32)
    assert len(g.boundary_nodes()) == 4 * 32
    c = ak.Inclusion.circle(0.5, 0.5, 0.2)
    assert c.signed_distance(0.5, 0.5) == pytest.approx(-0.2)
    assert ak.rasterized_area(c, g) == pytest.approx(math.pi * 0.04, rel=1e-2)
    with pytest.raises(ak.GeometryError):
        ak.Inclusion.circle(0.5, 0.5, -1.0)


def test_sector_probe_matches_closed_form():
    beta = math.pi / 6
    res = ak.sector_probe(beta)
    assert res["exponent"] == pytest.approx(-2.0, abs=0.05)
    assert res["weighted_exponent"] == pytest.approx(-3.0, abs=0.08)
    tau = 160.0
    assert abs(res["integrals"][-1]) == pytest.approx(math.sin(2 * beta) / tau**2, rel=1e-8)


def test_laplace_tail():
    mu = complex(2, 1)
    lhs, residual, applies, holds = ak.laplace_tail(1.0, mu, 1.0)
    closed = (1 - cmath.exp(-mu) * (1 + mu)) / mu**2
    assert abs(lhs - closed) < 1e-13
    assert residual < 1e-10
    assert applies and holds


def test_simulate_and_discrepancy():
    cfg = small_config()
    a = ak.simulate(cfg, 0.5, 0.5, 0.15)
    b = ak.simulate(cfg, 0.5, 0.5, 0.2)
    assert a["format_version"] == 1
    assert len(a["traces"][0]) == 3
    assert ak.discrepancy(a, a) == 0.0
    assert ak.discrepancy(a, b) > 1e-6


def test_forward_run_writes_manifest(tmp_path):
    man = ak.run("forward", small_config(), out=tmp_path)
    assert man["exit_code"] == 0
    assert (tmp_path / "forward" / "manifest.json").exists()
    names = {f for f, _ in man["files"]}
    assert {"measurements.json", "snapshot.csv"} <= names


def test_verify_single_criterion(tmp_path):
    man = ak.run("verify", None, out=tmp_path, only=[3])
    assert man["summary"] == {"c03": "pass"}


def test_config_errors_are_typed():
    cfg = small_config()
    cfg["boundary"] = "sideways"
    with pytest.raises(ak.ConfigError):
        ak.run("forward", cfg, out="/tmp/anomalykit_py_err")
