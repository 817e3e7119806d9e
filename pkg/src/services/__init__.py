# Services module
from src.services.thermal import ThermalNetwork, PiLoop, ThermalNode
from src.services.coupling import DeviceSensitivity, PathPerturbation
from src.services.rfchain import ComplexEnvelope, SignalPath, LoState
from src.services.schedule_capture import MeasurementPlan, run_campaign
from src.services.analysis import compute_stats, compare_stats
from src.services.fidelity import amp_error_infidelity, phase_error_infidelity
