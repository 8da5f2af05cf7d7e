import pytest

from spsqkd import ChannelParams, DetectorParams, OpticsParams, SecurityParams, SourceParams

# Reference operating point: measured back-to-back parameters of the telecom
# single-photon-source testbed (80 MHz excitation, O-band emission).
MU = 8.955e-5
G2_PULSED = 0.356
ETA_Z = 0.182
ETA_X = 0.0784
E_Z = 0.0089
E_X_EFFECTIVE = 0.0188


@pytest.fixture
def ref_source():
    return SourceParams(mu=MU, g2_pulsed=G2_PULSED)


@pytest.fixture
def ref_optics():
    return OpticsParams()


@pytest.fixture
def ref_detector():
    return DetectorParams(dark_prob=2e-8, gate_ns=1.0)


@pytest.fixture
def ref_channel_0km():
    return ChannelParams(loss_db=0.0, background_cps=0.0)


@pytest.fixture
def security():
    return SecurityParams()
