import os
import subprocess
import sys

import numpy as np
import pytest

from elghp import _backend, _fallback
from elghp.descriptor import angle_offsets

compiled = _backend.available_backends().get("cython")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


@needs_compiled
@pytest.mark.parametrize("delta", [1, 2])
def test_code_histograms_agree(delta):
    rng = np.random.default_rng(delta)
    offsets = np.array(angle_offsets(delta).offsets, dtype=np.int32)
    radii = np.array([1, 2, 3], dtype=np.int32)
    for _ in range(30):
        h, w = rng.integers(13, 70, size=2)
        img = rng.integers(0, 256, (h, w), dtype=np.uint8)
        assert np.array_equal(compiled.code_histograms(img, offsets, radii),
                              _fallback.code_histograms(img, offsets, radii))


@needs_compiled
def test_l1_kernels_agree():
    rng = np.random.default_rng(0)
    gallery = rng.integers(0, 2**31, (40, 300)).astype(np.uint32)
    q = rng.integers(0, 2**31, 300).astype(np.uint32)
    assert np.array_equal(compiled.l1_distances(q, gallery), _fallback.l1_distances(q, gallery))
    assert compiled.l1_nearest(q, gallery) == _fallback.l1_nearest(q, gallery)
    tied = np.vstack([gallery[3], gallery[3]])
    assert compiled.l1_nearest(gallery[3], tied) == (0, 0) == _fallback.l1_nearest(gallery[3], tied)


def test_env_forces_fallback():
    env = dict(os.environ, ELGHP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import elghp; print(elghp.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_prefers_compiled():
    if os.environ.get("ELGHP_PURE_PYTHON", "") not in ("", "0"):
        pytest.skip("fallback forced by environment")
    assert _backend.BACKEND == ("cython" if compiled is not None else "python")
