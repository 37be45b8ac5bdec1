import struct
import zlib
from pathlib import Path

import numpy as np

from camcim import config, harness
from camcim.array import Plane, run_gemv

GOLDEN = Path(__file__).parent / "golden"


def test_plane_image_matches_golden():
    cfg = config.load(GOLDEN / "small_config.json")
    plane, layout, _ = harness.functional_plane(cfg)
    assert plane.to_bytes() == (GOLDEN / "small_plane.img").read_bytes()
    assert layout.to_json() == (GOLDEN / "small_layout.json").read_text()


def test_golden_header_layout():
    data = (GOLDEN / "small_plane.img").read_bytes()
    magic, version, bits, m, L, layers, ssls, blocks, page, cam = struct.unpack_from("<8sHBBBIIIII", data)
    assert (magic, version, bits, m, L) == (b"CCPLANE\x00", 1, 4, 3, 2)
    assert (layers, ssls, blocks, page, cam) == (4, 4, 16, 5, 1)
    (n,) = struct.unpack_from("<Q", data, 33)
    assert n == (layers * blocks * ssls * page + 1) // 2
    (crc,) = struct.unpack_from("<I", data, 41 + n)
    assert crc == zlib.crc32(data[41:41 + n])


def test_golden_decodes_to_programmed_weights():
    cfg = config.load(GOLDEN / "small_config.json")
    _, layout, weights = harness.functional_plane(cfg)
    plane = Plane.load(GOLDEN / "small_plane.img")
    x = np.arange(6) % 5 - 2
    for e in range(4):
        assert (run_gemv(plane, layout, e, x).y == weights[e] @ x).all()
