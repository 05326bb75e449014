"""Field snapshot format and solve sidecars."""

import struct

import numpy as np
import pytest

from choqlab.errors import FormatError
from choqlab.snapshot import load_field, save_field, save_solve_sidecar
from choqlab.spectral import Field
from conftest import make_positive_field


def test_roundtrip_bitwise(tmp_path, grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    path = tmp_path / "field.chqf"
    save_field(u, path)
    v = load_field(path)
    assert v.grid == u.grid
    assert np.array_equal(v.values, u.values)  # bitwise
    # double roundtrip produces identical bytes
    path2 = tmp_path / "field2.chqf"
    save_field(v, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_wrong_magic(tmp_path, grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    path = tmp_path / "field.chqf"
    save_field(u, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as err:
        load_field(path)
    assert "CHQF" in str(err.value)
    assert err.value.offset == 0


def test_truncated_file(tmp_path, grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    path = tmp_path / "field.chqf"
    save_field(u, path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 16])
    with pytest.raises(FormatError):
        load_field(path)


def test_version_mismatch(tmp_path, grid_unit, rng):
    u = make_positive_field(grid_unit, rng)
    path = tmp_path / "field.chqf"
    save_field(u, path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as err:
        load_field(path)
    assert err.value.offset == 4


def test_sidecar(tmp_path, autonomous_mu0, desk_config):
    path = tmp_path / "solve.txt"
    save_solve_sidecar(autonomous_mu0, path, desk_config,
                       extra={"note": "unit"})
    text = path.read_text()
    assert f"level = {autonomous_mu0.level!r}" in text
    assert f"lambda = {autonomous_mu0.lam!r}" in text
    assert "config.grad_tol" in text
    assert "note = 'unit'" in text
