"""Checkpoint round trips and corruption handling."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracpme import FracParams, PMEConfig, load_checkpoint, make_torus, random_field, save_checkpoint
from fracpme.checkpoint import CHECKPOINT_FORMAT, CHECKPOINT_VERSION
from fracpme.torus import forward_transform


def test_roundtrip_bit_exact(tmp_path, cube):
    u = random_field(cube, 3, band=5, offset=0.2)
    cfg = PMEConfig(2.0, FracParams(0.25, 0.1), horizon=3.0, steps=30, record_times=[1.0, 3.0])
    path = save_checkpoint(tmp_path / "u.ckpt", u, time=1.5, config=cfg)
    ck = load_checkpoint(path)
    np.testing.assert_array_equal(ck.coeffs.coeffs, forward_transform(u).coeffs)
    np.testing.assert_allclose(ck.field.values, u.values, atol=1e-14)
    assert ck.time == 1.5 and ck.config == cfg
    assert ck.coeffs.spec == cube
    assert ck.header["format"] == CHECKPOINT_FORMAT and ck.header["version"] == CHECKPOINT_VERSION


@given(st.integers(1, 3), st.sampled_from([4, 6, 8]), st.booleans(), st.integers(0, 1000))
def test_roundtrip_property(tmp_path_factory, dim, n, normalized, seed):
    spec = make_torus(dim, grid=n, volume_normalized=normalized, laplacian="lattice" if seed % 2 else "spectral")
    u = random_field(spec, seed)
    path = tmp_path_factory.mktemp("ck") / "f.ckpt"
    save_checkpoint(path, forward_transform(u))
    ck = load_checkpoint(path)
    assert ck.config is None and ck.coeffs.spec == spec
    np.testing.assert_array_equal(ck.coeffs.coeffs, forward_transform(u).coeffs)


def test_layout_is_header_line_plus_raw_coefficients(tmp_path, circle):
    u = random_field(circle, 1)
    path = save_checkpoint(tmp_path / "u.ckpt", u)
    data = path.read_bytes()
    head, body = data.split(b"\n", 1)
    header = json.loads(head)
    assert header["dtype"] == "<c16" and header["shape"] == [64]
    assert len(body) == 64 * 16
    # stored coefficients are fft/N after Hermitian symmetrization (round-off level change)
    np.testing.assert_allclose(np.frombuffer(body, "<c16"), np.fft.fft(u.values) / 64, rtol=0, atol=1e-15)


def test_no_temporary_files_left(tmp_path, circle):
    save_checkpoint(tmp_path / "u.ckpt", random_field(circle, 1))
    assert [p.name for p in tmp_path.iterdir()] == ["u.ckpt"]


def _write(path, header, body):
    path.write_bytes(json.dumps(header).encode() + b"\n" + body)


@pytest.mark.parametrize("mutate,match", [
    (lambda h: h.update(format="other"), "format"),
    (lambda h: h.update(version=CHECKPOINT_VERSION + 1), "newer"),
    (lambda h: h.update(dtype="<f8"), "dtype"),
    (lambda h: h.update(shape=[32]), "shape"),
])
def test_rejects_bad_headers(tmp_path, circle, mutate, match):
    path = save_checkpoint(tmp_path / "u.ckpt", random_field(circle, 1))
    head, body = path.read_bytes().split(b"\n", 1)
    header = json.loads(head)
    mutate(header)
    _write(path, header, body)
    with pytest.raises(ValueError, match=match):
        load_checkpoint(path)


def test_rejects_truncated_or_headerless(tmp_path, circle):
    path = save_checkpoint(tmp_path / "u.ckpt", random_field(circle, 1))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ValueError, match="bytes"):
        load_checkpoint(path)
    path.write_bytes(b"no newline here")
    with pytest.raises(ValueError, match="header"):
        load_checkpoint(path)
    path.write_bytes(b"{not json\n")
    with pytest.raises(ValueError, match="bad header"):
        load_checkpoint(path)


def test_unknown_header_keys_are_ignored(tmp_path, circle):
    u = random_field(circle, 2)
    path = save_checkpoint(tmp_path / "u.ckpt", u)
    head, body = path.read_bytes().split(b"\n", 1)
    header = json.loads(head) | {"comment": "added by a later writer"}
    _write(path, header, body)
    np.testing.assert_allclose(load_checkpoint(path).field.values, u.values, atol=1e-14)
