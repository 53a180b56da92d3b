"""Shared test setup.

Thread pinning must happen before numpy is imported anywhere in the
process: the acceptance timings assume a single core, and BLAS
oversubscription makes small-matrix work slower, not faster.
"""

import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_model_config():
    from quatmotion.model import ModelConfig

    return ModelConfig(d_model=8, heads=2, encoder_layers=1, decoder_layers=1,
                       periods=2, seed_motion_frames=6, audio_frames=9,
                       future_frames=2)
