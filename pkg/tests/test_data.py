import json

import numpy as np
import pytest

from cablecal.data import (
    CSV_HEADER, DataFormatError, MeasurementSet, SyntheticScenario, load, load_deviation,
    load_scenario, save, save_deviation, synthesize,
)
from cablecal.error_model import residuals
from cablecal.kinematics import cable_length

from conftest import GENERIC


def write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_load_two_rows(tmp_path):
    p = write(tmp_path / "d.csv", [CSV_HEADER, "0,0,0,0,0,0,100.5", "0.1,0.2,0.3,0.4,0.5,0.6,200"])
    data = load(p)
    assert len(data) == 2
    np.testing.assert_array_equal(data.z, [100.5, 200.0])
    np.testing.assert_array_equal(data.q[1], [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])


def test_load_wrong_column_count_names_line(tmp_path):
    p = write(tmp_path / "d.csv", [CSV_HEADER, "0,0,0,0,0,0,1", "0,0,0,0,0,1"])
    with pytest.raises(DataFormatError) as exc:
        load(p)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


@pytest.mark.parametrize("row", ["0,0,0,0,0,nan,1", "0,0,0,0,0,0,inf", "0,0,x,0,0,0,1", "0,0,0,0,0,0,-5"])
def test_load_bad_values(tmp_path, row):
    p = write(tmp_path / "d.csv", [CSV_HEADER, row])
    with pytest.raises(DataFormatError) as exc:
        load(p)
    assert exc.value.line == 2


def test_load_bad_header_and_empty(tmp_path):
    with pytest.raises(DataFormatError):
        load(write(tmp_path / "a.csv", ["q1,q2,q3,q4,q5,q6,z", "0,0,0,0,0,0,1"]))
    with pytest.raises(DataFormatError):
        load(write(tmp_path / "b.csv", [CSV_HEADER]))
    with pytest.raises(FileNotFoundError):
        load(tmp_path / "missing.csv")


def test_load_degree_header_converted(tmp_path):
    p = write(tmp_path / "d.csv", ["q1_deg,q2_deg,q3_deg,q4_deg,q5_deg,q6_deg,z_mm", "180,90,0,0,0,-45,10"])
    np.testing.assert_allclose(load(p).q[0], [np.pi, np.pi / 2, 0, 0, 0, -np.pi / 4])


def test_round_trip(tmp_path, rng):
    data = MeasurementSet(rng.uniform(-3, 3, (50, 6)), rng.uniform(100, 900, 50))
    save(data, tmp_path / "d.csv")
    back = load(tmp_path / "d.csv")
    np.testing.assert_allclose(back.q, data.q, rtol=1e-12, atol=0)
    np.testing.assert_allclose(back.z, data.z, rtol=1e-12, atol=0)


def test_save_format(tmp_path):
    data = MeasurementSet(np.full((1, 6), 0.1), [1 / 3])
    save(data, tmp_path / "d.csv")
    raw = (tmp_path / "d.csv").read_bytes()
    assert raw.startswith((CSV_HEADER + "\n").encode())
    assert b"\r" not in raw
    last = raw.decode().splitlines()[1].split(",")[-1]
    assert last == f"{1 / 3:.17g}"


def test_empty_set_rejected_before_write(tmp_path):
    class Empty:
        def __len__(self):
            return 0

    with pytest.raises(ValueError):
        save(Empty(), tmp_path / "d.csv")
    assert not (tmp_path / "d.csv").exists()


def test_synthesize_noiseless_nominal():
    data, x = synthesize(SyntheticScenario(GENERIC, x_true=np.zeros(24), seed=1, n_points=20))
    assert np.all(x == 0)
    want = [cable_length(GENERIC, q) for q in data.q]
    np.testing.assert_allclose(data.z, want, rtol=1e-13)
    assert np.all(residuals(GENERIC, np.zeros(24), data) == 0.0)


def test_synthesize_noise_statistics():
    sc = SyntheticScenario(GENERIC, seed=2, n_points=10000)
    clean, x_true = synthesize(sc)
    noisy, _ = synthesize(SyntheticScenario(GENERIC, seed=2, n_points=10000, noise_std=0.1))
    np.testing.assert_array_equal(clean.q, noisy.q)
    assert 0.095 <= np.std(noisy.z - clean.z) <= 0.105


def test_synthesize_deterministic_and_in_range():
    sc = SyntheticScenario(GENERIC, seed=3, noise_std=0.1, joint_ranges=[(-0.5, 0.5)] * 3 + [(0, 1)] * 3)
    a, xa = synthesize(sc)
    b, xb = synthesize(sc)
    assert np.array_equal(a.q, b.q) and np.array_equal(a.z, b.z) and np.array_equal(xa, xb)
    assert np.all(a.q[:, :3] >= -0.5) and np.all(a.q[:, :3] <= 0.5)
    assert np.all(a.q[:, 3:] >= 0) and np.all(a.q[:, 3:] <= 1)
    assert np.all(np.abs(xa[:12]) <= 0.5) and np.all(np.abs(xa[12:]) <= 0.005)


@pytest.mark.parametrize("kw", [dict(noise_std=-1), dict(n_points=0), dict(joint_ranges=[(1, 0)] * 6),
                                dict(joint_ranges=[(0, 1)] * 5)])
def test_invalid_scenario(kw):
    with pytest.raises(ValueError):
        SyntheticScenario(GENERIC, **kw)


def test_scenario_file(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps(GENERIC.to_dict()))
    (tmp_path / "s.json").write_text(json.dumps({"nominal": "m.json", "seed": 5, "n_points": 7, "noise_std_mm": 0.2}))
    sc = load_scenario(tmp_path / "s.json")
    assert sc.nominal == GENERIC and sc.seed == 5 and sc.n_points == 7 and sc.noise_std == 0.2
    again = SyntheticScenario.from_dict(sc.to_dict())
    assert synthesize(again)[0].z.tolist() == synthesize(sc)[0].z.tolist()


def test_deviation_file_round_trip(tmp_path, rng):
    x = rng.normal(size=24)
    save_deviation(x, tmp_path / "x.json")
    assert json.loads((tmp_path / "x.json").read_text())["names"][0] == "a1"
    np.testing.assert_array_equal(load_deviation(tmp_path / "x.json"), x)
