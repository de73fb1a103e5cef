import numpy as np
import pytest

from dikernel.artifacts import MAGIC, load_map, load_model, read_artifact, save_map, save_model
from dikernel.exceptions import DataFormatError
from dikernel.feature_maps import init_fourier, init_nystrom
from dikernel.kernels import KernelConfig
from dikernel.predictors import KRRModel


def test_nystrom_round_trip(tmp_path, rng):
    kc = KernelConfig(gamma=2.5)
    nmap = init_nystrom(rng.uniform(size=(3, 20)), 5, 0)
    save_map(tmp_path / "m.bin", nmap, kc)
    back, kc2, head = load_map(tmp_path / "m.bin")
    np.testing.assert_array_equal(back.X_r, nmap.X_r)
    assert kc2 == kc
    assert head["kind"] == "nystrom" and head["d"] == 3 and head["n"] == 5


def test_fourier_round_trip_and_layout(tmp_path):
    kc = KernelConfig(gamma=0.5)
    fmap = init_fourier(kc, 2, 3, seed=1)
    path = tmp_path / "f.bin"
    save_map(path, fmap, kc)
    raw = path.read_bytes()
    assert raw.startswith(MAGIC)
    payload = raw[raw.index(b"\n", len(MAGIC)) + 1:]
    # row-major W_f followed by b_f
    np.testing.assert_array_equal(np.frombuffer(payload, "<f8"), np.concatenate([fmap.W_f.ravel(), fmap.b_f]))
    back, _, head = load_map(path)
    assert head["J"] == 3
    np.testing.assert_array_equal(back.W_f, fmap.W_f)


def test_model_round_trip(tmp_path, rng):
    m = KRRModel(rng.normal(size=(4, 2)), rng.normal(size=2), 1e-4)
    save_model(tmp_path / "k.bin", m)
    back = load_model(tmp_path / "k.bin")
    np.testing.assert_array_equal(back.W, m.W)
    assert back.rho_used == 1e-4
    with pytest.raises(DataFormatError):
        load_map(tmp_path / "k.bin")


def test_truncated_file(tmp_path):
    kc = KernelConfig()
    save_map(tmp_path / "m.bin", init_fourier(kc, 2, 2, 0), kc)
    data = (tmp_path / "m.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(data[:-8])
    with pytest.raises((DataFormatError, ValueError)):
        read_artifact(tmp_path / "t.bin")
