import struct

import numpy as np
import pytest

from hydrolim.cf import CfIntegrator, StepperConfig
from hydrolim.checkpoint import MAGIC, CheckpointError, checkpoint_read, checkpoint_write
from hydrolim.spectral import Grid, to_physical
from hydrolim.state import make_well_prepared_ic, random_state, reference_cpe_init

G = Grid(8, 8, 8)


def same(a, b):
    return (a.epsilon == b.epsilon and a.time == b.time and a.grid == b.grid
            and all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a.fields, b.fields)))


@pytest.fixture
def mid_run():
    s0 = make_well_prepared_ic(reference_cpe_init(G), 0.1)
    it = CfIntegrator(StepperConfig(1e-3))
    s = it.advance(s0, 7)
    return s, it


def test_round_trip_bit_exact(tmp_path, mid_run):
    s, _ = mid_run
    p = tmp_path / "a.hlim"
    checkpoint_write(s, p)
    assert same(checkpoint_read(p), s)


def test_round_trip_of_initial_and_random_states(tmp_path):
    for s in (make_well_prepared_ic(reference_cpe_init(G), 0.05),
              random_state(G, 0.3, rng=1)):
        p = tmp_path / "b.hlim"
        checkpoint_write(s, p)
        assert same(checkpoint_read(p), s)


def test_layout(tmp_path, mid_run):
    s, _ = mid_run
    p = tmp_path / "c.hlim"
    checkpoint_write(s, p)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    version, nx, ny, nz = struct.unpack_from("<IIII", raw, 4)
    eps, t = struct.unpack_from("<dd", raw, 20)
    assert (version, nx, ny, nz) == (1, 8, 8, 8) and eps == 0.1 and t == s.time
    assert len(raw) == 36 + 4 * G.size * 8
    sigma = np.frombuffer(raw, "<f8", G.size, 36)
    # x runs fastest
    assert np.array_equal(sigma[:8], to_physical(s.sigma)[:, 0, 0])


def test_resume_matches_uninterrupted(tmp_path, mid_run):
    s, it = mid_run
    p = tmp_path / "d.hlim"
    checkpoint_write(s, p, it.prev)
    back, hist = checkpoint_read(p, with_history=True)
    ref = it.advance(s, 10)
    res = CfIntegrator(StepperConfig(1e-3), hist).advance(back, 10)
    gap = max(np.abs(a.coeffs - b.coeffs).max() for a, b in zip(ref.fields, res.fields))
    assert gap <= 1e-14
    assert ref.time == res.time


def test_errors(tmp_path, mid_run):
    s, it = mid_run
    p = tmp_path / "e.hlim"
    checkpoint_write(s, p, it.prev)
    raw = bytearray(p.read_bytes())
    bad = tmp_path / "bad.hlim"
    bad.write_bytes(b"XLIM" + raw[4:])
    with pytest.raises(CheckpointError) as info:
        checkpoint_read(bad)
    assert info.value.offset == 0
    bad.write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(CheckpointError) as info:
        checkpoint_read(bad)
    assert info.value.offset == 4 and "byte offset 4" in str(info.value)
    bad.write_bytes(raw[:1000])
    with pytest.raises(CheckpointError, match="truncated"):
        checkpoint_read(bad)
    bad.write_bytes(raw[:20])
    with pytest.raises(CheckpointError, match="truncated header"):
        checkpoint_read(bad)
    bad.write_bytes(raw + b"\0")
    with pytest.raises(CheckpointError, match="trailing"):
        checkpoint_read(bad)
    with pytest.raises(FileNotFoundError):
        checkpoint_read(tmp_path / "missing.hlim")
