import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from widebnn.config import ExperimentConfig
from widebnn.data import gaussian_blobs, linear_regression, load_csv, shifted_one_hot, synthetic_1d
from widebnn.errors import ConfigError, LabelOutOfRange, MalformedCsv
from widebnn.io import SampleWriter, fmt, load_vector, read_samples, write_samples


def test_shifted_one_hot_examples():
    y = shifted_one_hot([3], 10)[0]
    np.testing.assert_allclose(y, np.where(np.arange(10) == 3, 0.9, -0.1))
    np.testing.assert_allclose(shifted_one_hot([0], 2), [[0.5, -0.5]])
    np.testing.assert_allclose(shifted_one_hot([2, 0, 1], 3).sum(axis=1), 0.0, atol=1e-15)
    with pytest.raises(LabelOutOfRange):
        shifted_one_hot([3], 3)


def test_generators():
    d = synthetic_1d()
    assert d.X.shape == (3, 1)
    b = gaussian_blobs(30, 4, 3, seed=1)
    assert b.X.shape == (30, 4) and b.Y.shape == (30, 3)
    np.testing.assert_allclose(b.X.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(b.X.std(axis=0), 1.0)
    lin = linear_regression(20, 5, seed=2)
    np.testing.assert_allclose(np.linalg.norm(lin.X, axis=1), 1.0)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_csv_classification(tmp_path):
    p = write(tmp_path, "a,b,label\n1,2,0\n3,5,1\n2,2,2\n")
    d = load_csv(p, noise=0.1)
    assert d.X.shape == (3, 2) and d.Y.shape == (3, 3)
    np.testing.assert_allclose(d.Y[1], [-1 / 3, 2 / 3, -1 / 3])
    np.testing.assert_allclose(d.X.mean(axis=0), 0.0, atol=1e-12)


def test_csv_regression_passthrough(tmp_path):
    p = write(tmp_path, "x,y\n1,0.25\n2,-3.5\n4,7\n")
    d = load_csv(p, mode="regression")
    np.testing.assert_array_equal(d.Y[:, 0], [0.25, -3.5, 7.0])


@pytest.mark.parametrize(
    "text, err",
    [
        ("a,label\n1,x\n", MalformedCsv),
        ("a,label\n1,0.5\n", MalformedCsv),
        ("a,b,label\n1,0\n", MalformedCsv),
        ("a,label\n", MalformedCsv),
        ("a,label\n1,-1\n", LabelOutOfRange),
    ],
)
def test_csv_errors(tmp_path, text, err):
    with pytest.raises(err):
        load_csv(write(tmp_path, text))


def test_csv_declared_classes(tmp_path):
    with pytest.raises(LabelOutOfRange):
        load_csv(write(tmp_path, "a,label\n1,4\n2,0\n"), num_classes=3)


def test_config_defaults_and_round_trip():
    cfg = ExperimentConfig().validate()
    assert cfg.noise == 0.01 and cfg.sampler.thin == 25 and cfg.projections == 100
    text = cfg.to_json()
    again = ExperimentConfig.from_json(text)
    assert again.to_json() == text


@settings(max_examples=30)
@given(
    st.sampled_from(["standard", "repriorised"]),
    st.floats(1e-4, 1.0),
    st.lists(st.integers(1, 512), min_size=1, max_size=3),
    st.integers(0, 10**6),
)
def test_config_round_trip_idempotent(param, noise, widths, seed):
    d = {"parametrisation": param, "noise": noise, "network": {"widths": widths}, "seed": seed}
    text = ExperimentConfig.from_dict(d).to_json()
    assert ExperimentConfig.from_json(text).to_json() == text


@pytest.mark.parametrize(
    "doc",
    [
        {"lam": 0.5},
        {"parametrisation": "fancy"},
        {"noise": 0},
        {"sampler": {"burn_in": 100, "steps": 100}},
        {"sampler": {"stepsize": "fast"}},
        {"data": {"source": "csv"}},
        {"data": {"colour": "red"}},
        {"unknown": 1},
        {"slice": {"param_files": ["a", "b"]}},
    ],
)
def test_config_validation(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_config_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


@settings(max_examples=20)
@given(arrays(float, st.tuples(st.integers(0, 6), st.integers(1, 5)), elements=st.floats(allow_nan=False)))
def test_sample_file_round_trip(tmp_path_factory, samples):
    p = tmp_path_factory.mktemp("s") / "x.bin"
    write_samples(p, samples, {"k": 1})
    back, meta = read_samples(p)
    assert back.shape == samples.shape
    np.testing.assert_array_equal(back, samples)
    assert meta == {"k": 1}


def test_sample_file_header(tmp_path):
    p = tmp_path / "s.bin"
    write_samples(p, np.arange(6.0).reshape(3, 2))
    raw = p.read_bytes()
    assert raw[:8] == b"WBNNSAMP" and len(raw) == 32 + 6 * 8
    assert int.from_bytes(raw[8:16], "little") == 2
    assert int.from_bytes(raw[16:24], "little") == 3


def test_streaming_append(tmp_path):
    p = tmp_path / "s.bin"
    with SampleWriter(p, 3) as w:
        w.append(np.ones(3))
        w.append(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            w.append(np.ones(4))
    back, meta = read_samples(p)
    assert back.shape == (3, 3) and meta is None


def test_read_rejects_garbage(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTASAMPLEFILE" * 4)
    with pytest.raises(ValueError):
        read_samples(p)


def test_load_vector_formats(tmp_path):
    v = np.array([1.5, -2.0, 3.25])
    np.save(tmp_path / "v.npy", v)
    np.savetxt(tmp_path / "v.txt", v)
    write_samples(tmp_path / "v.bin", np.stack([np.zeros(3), v]))
    for name in ("v.npy", "v.txt", "v.bin"):
        np.testing.assert_array_equal(load_vector(tmp_path / name), v)


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 12345.0):
        assert float(fmt(x)) == x
    assert fmt(None) == ""
    assert json.loads(fmt(0.5)) == 0.5
