import math

import pytest

from rsacsma.radio import RadioConfig, derive_inhibition


@pytest.fixture
def radio():
    """Transmit 20 dBm over 10 MHz, sense at -65 dBm, alpha = 4."""
    return RadioConfig(20.0, -65.0, 4.0, 10e6)


@pytest.fixture
def geom(radio):
    return derive_inhibition(radio)


KAPPA_UNIT = math.pi / 4.0
