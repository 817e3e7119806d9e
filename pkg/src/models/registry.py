"""
Hardware registries for the thermal-stability twin.
Defines the port kinds of a controller unit, the device kinds that couple
temperature into the RF path, and the system clock frequencies.
"""

from typing import Dict, List, Optional, Tuple


# Port kinds of one unit, keyed by the identifier used in scenario files
PORT_REGISTRY: Dict[str, Dict] = {
    "ctrl": {
        "display_name": "CTRL (direct qubit drive)",
        "direction": "output",
        "requires_lo": False,
        "conversion": "direct",
        "rf_range_hz": (2.0e9, 5.8e9),
    },
    "rout": {
        "display_name": "ROUT (readout output)",
        "direction": "output",
        "requires_lo": True,
        "conversion": "up",
        "rf_range_hz": (5.8e9, 8.0e9),
    },
    "pump": {
        "display_name": "PUMP (amplifier pump output)",
        "direction": "output",
        "requires_lo": True,
        "conversion": "up",
        "rf_range_hz": (5.8e9, 8.0e9),
    },
    "rin": {
        "display_name": "RIN (readout input)",
        "direction": "input",
        "requires_lo": True,
        "conversion": "down",
        "rf_range_hz": (5.8e9, 8.0e9),
    },
    "monitor": {
        "display_name": "MONITOR (diagnostic input)",
        "direction": "input",
        "requires_lo": True,
        "conversion": "down",
        "rf_range_hz": (2.0e9, 8.0e9),
    },
}

# Device kinds that couple temperature into gain and phase
DEVICE_KIND_REGISTRY: Dict[str, Dict] = {
    "amplifier": {"display_name": "RF amplifier", "phase_coupling": False},
    "pll": {"display_name": "PLL synthesizer", "phase_coupling": True},
    "mixer": {"display_name": "Mixer", "phase_coupling": True},
    "passive": {"display_name": "Cable / combiner outside the regulated zone", "phase_coupling": True},
}

# The four frequencies distributed by the clock tree
SYSTEM_CLOCK_FREQS: Dict[str, int] = {
    "ref10M": 10_000_000,
    "c100M": 100_000_000,
    "c250M": 250_000_000,
    "c62k5": 62_500,
}


def validate_port_kind(port_kind: str) -> bool:
    """
    Validate if a port kind exists in the registry.

    Args:
        port_kind: Port identifier (e.g., "ctrl")

    Returns:
        True if the port kind is known, False otherwise
    """
    return port_kind in PORT_REGISTRY


def list_port_kinds() -> List[str]:
    return list(PORT_REGISTRY.keys())


def get_port_config(port_kind: str) -> Optional[Dict]:
    """
    Get configuration for a port kind.

    Args:
        port_kind: Port identifier

    Returns:
        Port configuration dict or None if not found
    """
    return PORT_REGISTRY.get(port_kind)


def port_requires_lo(port_kind: str) -> bool:
    config = PORT_REGISTRY.get(port_kind)
    return bool(config and config["requires_lo"])


def is_capture_port(port_kind: str) -> bool:
    """Downconverting ports can feed the capture ADC."""
    config = PORT_REGISTRY.get(port_kind)
    return bool(config and config["conversion"] == "down")


def get_rf_range(port_kind: str) -> Tuple[float, float]:
    config = PORT_REGISTRY.get(port_kind)
    if config is None:
        return (0.0, float("inf"))
    return config["rf_range_hz"]


def validate_device_kind(kind: str) -> bool:
    return kind in DEVICE_KIND_REGISTRY


def list_device_kinds() -> List[str]:
    return list(DEVICE_KIND_REGISTRY.keys())


def device_allows_phase_coupling(kind: str) -> bool:
    """
    Whether a device kind may carry a nonzero phase coefficient.

    Args:
        kind: Device kind identifier

    Returns:
        False for amplifiers and unknown kinds, True otherwise
    """
    config = DEVICE_KIND_REGISTRY.get(kind)
    return bool(config and config["phase_coupling"])


def is_system_clock_freq(freq_hz: float) -> bool:
    return freq_hz in SYSTEM_CLOCK_FREQS.values()
