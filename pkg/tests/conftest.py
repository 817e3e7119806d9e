"""
Pytest configuration and shared fixtures.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config import settings
from src.services.scenario_loader import build_campaign_setup, load_scenario
from src.services.schedule_capture import run_campaign
from src.services.thermal import AmbientProfile, PiLoop, SensorModel, ThermalNode

PROJECT_ROOT = Path(__file__).parent.parent
DEFAULT_SCENARIO = PROJECT_ROOT / "scenarios" / "default.yaml"

# 100 measurement rounds of 1.3 s
SHORT_DURATION = 130.0


@pytest.fixture(autouse=True)
def isolated_output_dir(tmp_path, monkeypatch):
    """Keep every run directory inside the test's tmp_path."""
    monkeypatch.setattr(settings, "output_dir", str(tmp_path / "runs"))
    monkeypatch.setattr(settings, "default_scenario", str(DEFAULT_SCENARIO))
    return tmp_path / "runs"


@pytest.fixture(scope="session")
def default_scenario_path() -> Path:
    return DEFAULT_SCENARIO


@pytest.fixture
def default_scenario_data() -> dict:
    """Raw mapping of the bundled scenario, safe to mutate."""
    return yaml.safe_load(DEFAULT_SCENARIO.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def short_scenario():
    return load_scenario(DEFAULT_SCENARIO, duration=SHORT_DURATION)


@pytest.fixture(scope="session")
def short_setup(short_scenario):
    return build_campaign_setup(short_scenario)


@pytest.fixture(scope="session")
def short_campaign(short_setup):
    """Control-on campaign over the short scenario, seed 11."""
    return run_campaign(short_setup, control="on", seed=11)


@pytest.fixture
def device_node() -> ThermalNode:
    """Heater-regulated plate as in the bundled scenario, starting 5 degC cold."""
    return ThermalNode(
        node_id="plate",
        temperature=40.0,
        heat_capacity=4.0,
        ambient_coupling=0.2,
        heater_power_max=2.0,
        self_heating=0.5,
    )


@pytest.fixture
def heater_loop() -> PiLoop:
    return PiLoop(kp=0.5, ki=0.025, setpoint=45.0, loop_id="plate.heater", node_id="plate", hold_duty=0.75)


@pytest.fixture
def fine_sensor() -> SensorModel:
    """16-bit noiseless sensor; resolution far below the regulation tolerance."""
    return SensorModel(adc_bits=16)


@pytest.fixture
def steady_ambient() -> AmbientProfile:
    return AmbientProfile(mean=35.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
