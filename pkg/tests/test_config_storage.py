import json

import numpy as np
import pytest

from rotating_atmosphere.config import config_from_dict, parse_config, preset_config
from rotating_atmosphere.errors import ConfigError, NumericError
from rotating_atmosphere.storage import (
    HEADER_SIZE, RunManifest, dumps, read_csv_points, read_matrix, write_csv, write_matrix,
)

BASE = {"gm0": 1.0, "r0": 1.0, "r_cap": 2.0, "a_const": 0.3, "gamma": 1.4}


def test_reference_preset():
    cfg = preset_config()
    p = cfg.params
    assert (p.gm0, p.r0, p.r_cap, p.gamma) == (1.0, 1.0, 2.0, 1.4)
    assert p.a_const == pytest.approx(2 / 7, rel=1e-15)
    assert p.omega == pytest.approx(np.sqrt(0.02), rel=1e-15)
    assert cfg.discretization.order == 8 and cfg.profile is None


def test_missing_rotation_means_rest():
    assert config_from_dict({"params": BASE}).params.omega == 0.0


def test_preset_override():
    cfg = config_from_dict({"preset": "reference", "params": {"omega": 0.05},
                            "discretization": {"m": 2, "family": "gradient"}})
    assert cfg.params.omega == 0.05 and cfg.params.a_const == pytest.approx(2 / 7)
    assert cfg.discretization.m == 2 and cfg.discretization.family == "gradient"


@pytest.mark.parametrize("raw, field", [
    ({"params": {**BASE, "gamma": 2.5}}, "params.gamma"),
    ({"params": {**BASE, "gamma": 1.0}}, "params.gamma"),
    ({"params": {k: v for k, v in BASE.items() if k != "r0"}}, "params.r0"),
    ({"params": {**BASE, "r_cap": 0.5}}, "params.r_cap"),
    ({"params": {**BASE, "omega": 0.1, "omega_sq": 0.01}}, "params.omega"),
    ({"params": {**BASE, "omega_sq": -1.0}}, "params.omega_sq"),
    ({"params": {**BASE, "spin": 1.0}}, "params.spin"),
    ({"params": BASE, "extras": {}}, "extras"),
    ({"preset": "nonsense"}, "preset"),
    ({"preset": "reference", "discretization": {"n_s": 4.5}}, "discretization.n_s"),
    ({"preset": "reference", "discretization": {"family": "other"}}, "discretization.family"),
    ({"preset": "reference", "evolution": {"dt": "fast"}}, "evolution.dt"),
    ({"preset": "reference", "profile": {"kind": "polynomial"}}, "profile.coefficients"),
    ({"preset": "reference", "profile": {"kind": "spiral"}}, "profile.kind"),
])
def test_config_errors_name_the_field(raw, field):
    with pytest.raises(ConfigError) as err:
        config_from_dict(raw)
    assert err.value.details["field"] == field


def test_polynomial_profile():
    cfg = config_from_dict({"preset": "reference", "profile": {"kind": "polynomial", "coefficients": [0.1, 0.0, 0.2]}})
    assert cfg.profile.omega_of_varpi(2.0) == pytest.approx(0.9)
    assert cfg.snapshot()["profile"]["coefficients"] == [0.1, 0.0, 0.2]


def test_snapshot_round_trip(tmp_path):
    cfg = config_from_dict({"preset": "reference", "tolerances": {"reality": 1e-9}, "oracle": {"n_r": 128}})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.snapshot()))
    again = parse_config(path)
    assert again.snapshot() == cfg.snapshot()


def test_parse_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{\"params\": ")
    with pytest.raises(ConfigError):
        parse_config(bad)


@pytest.mark.parametrize("mat", [np.arange(9.0).reshape(3, 3), (np.arange(4) + 1j * np.arange(4)[::-1]).reshape(2, 2),
                                 np.zeros((0, 0))])
def test_matrix_container_round_trip(tmp_path, mat):
    path = tmp_path / "m.bin"
    write_matrix(path, mat)
    data = path.read_bytes()
    assert data[:8] == b"RATMMAT1" and len(data) == HEADER_SIZE + mat.size * mat.itemsize
    back = read_matrix(path)
    assert back.dtype == mat.dtype and np.array_equal(back, mat)


def test_matrix_container_rejects_corruption(tmp_path):
    path = tmp_path / "m.bin"
    write_matrix(path, np.eye(3))
    data = path.read_bytes()
    (tmp_path / "magic.bin").write_bytes(b"XXXXXXXX" + data[8:])
    (tmp_path / "short.bin").write_bytes(data[:-8])
    (tmp_path / "tiny.bin").write_bytes(data[:10])
    for name in ("magic.bin", "short.bin", "tiny.bin"):
        with pytest.raises(NumericError):
            read_matrix(tmp_path / name)
    with pytest.raises(ValueError):
        write_matrix(path, np.ones((2, 3)))


def test_json_is_deterministic():
    obj = {"b": np.float64(0.1), "a": [1 + 2j, np.inf, np.nan], "c": np.arange(2), "d": np.bool_(True)}
    text = dumps(obj)
    assert text == dumps(dict(reversed(list(obj.items()))))
    assert json.loads(text) == {"a": [[1.0, 2.0], "inf", "nan"], "b": 0.1, "c": [0, 1], "d": True}


def test_csv_round_trip(tmp_path):
    path = tmp_path / "p.csv"
    pts = np.array([[0.1, 0.2, 1 / 3], [1.5, -2.0, 0.0]])
    write_csv(path, ["x", "y", "z"], pts.tolist())
    assert np.array_equal(read_csv_points(path), pts)
    write_csv(path, ["x", "y"], [[1, 2]])
    with pytest.raises(ConfigError):
        read_csv_points(path)


def test_manifest_hashes(tmp_path):
    art = tmp_path / "a.json"
    art.write_text("{}")
    man = RunManifest("test", {"x": 1}, {})
    man.add(art)
    first = man.content_hash()
    rec = json.loads(man.write(tmp_path).read_text())
    assert rec["content_hash"] == first and rec["config_hash"] == man.config_hash()
    assert set(rec["versions"]) >= {"numpy", "scipy", "python"}
    art.write_text("{ }")
    man.add(art)
    assert man.content_hash() != first
