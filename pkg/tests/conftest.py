import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ofpstream.dsp import StftConfig, make_window_pair  # noqa: E402
from ofpstream.engine import Mode, design_for  # noqa: E402

PAPER_CONFIGS = [(512, 128), (320, 160), (64, 32)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=PAPER_CONFIGS, ids=lambda c: f"{c[0]}/{c[1]}")
def config(request):
    w, h = request.param
    return StftConfig(w, h)


@pytest.fixture(params=list(Mode), ids=lambda m: m.value)
def mode(request):
    return request.param


def pair_for(config, mode):
    return make_window_pair(config, design_for(mode))
