# Models module
from src.models.registry import PORT_REGISTRY, DEVICE_KIND_REGISTRY, validate_port_kind, list_port_kinds, get_port_config
from src.models.schemas import (
    Scenario, ThermalConfig, SignalPathConfig, MeasurementConfig, ClockConfig,
    RunManifest, FidelityRow, CalibrationRow
)
