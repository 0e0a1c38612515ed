"""Shared fixtures and frozen regression values.

The frozen numbers below were produced by standalone oracle scripts that
reimplement the selection rules with independent linear algebra (QR-based
residuals, loop-level cosines) on the documented probe instance, then
pinned here.  Regenerating the probe: default_rng(42), standard normals,
float32 cast, the (12, 6) token block drawn before the (3, 6) text block.
"""

import numpy as np
import pytest

import resprune as rp

# Gated run on the probe pair: alpha=0.75, epsilon=1e-6, max-cos, max-norm
# seed, budget 4.
REFERENCE_INDICES = (0, 10, 5, 9)
REFERENCE_RECON = 2.591189082768404
REFERENCE_RAW = (
    8.124467864350382,
    3.999754268463712,
    3.611398422581311,
    1.839296231476729,
)

# Same probe without text (uniform weights).
REFERENCE_TEXTFREE_INDICES = (0, 5, 9, 6)
REFERENCE_TEXTFREE_RECON = 3.252090706237047

# ASCII keep map of the gated run on the probe's 4x3 grid.
REFERENCE_MASK = "#..\n..#\n...\n##.\n"

# default_rng(7).choice(10, size=3, replace=False), sorted.
RANDOM_10_3_SEED7 = [5, 6, 7]


@pytest.fixture
def probe_pair():
    return rp.reference_instance()


@pytest.fixture
def probe_files(tmp_path):
    """Probe pair written to NPY files; returns (visual_path, text_path)."""
    tokens, text = rp.reference_instance()
    visual_path = tmp_path / "visual.npy"
    text_path = tmp_path / "text.npy"
    rp.write_npy(visual_path, tokens.data)
    rp.write_npy(text_path, text.data)
    return str(visual_path), str(text_path)


def random_tokens(rng, count, dim, grid=None):
    data = rng.standard_normal((count, dim)).astype(np.float32)
    return rp.TokenMatrix(data, grid=grid)


def random_text(rng, count, dim):
    data = rng.standard_normal((count, dim)).astype(np.float32)
    return rp.TextMatrix(data)
