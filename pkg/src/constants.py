"""
Constants for the qubit-controller thermal-stability twin.
Contains physical defaults, reference results and message templates that
don't need to be in environment variables.
"""

# =============================================================================
# SOFTWARE
# =============================================================================

SOFTWARE_NAME = "qubit-thermal-twin"
SOFTWARE_VERSION = "1.0.0"

# =============================================================================
# THERMAL DEFAULTS
# =============================================================================

DEFAULT_THERMAL_DT = 0.1  # s
DEFAULT_WARMUP = 3600.0  # s
DEFAULT_TRACE_INTERVAL = 10.0  # s

DEFAULT_ADC_BITS = 12
DEFAULT_SENSOR_RANGE = (0.0, 100.0)  # degC

DEFAULT_AMBIENT_PERIOD = 1800.0  # s

AMBIENT_ROOM = "room"

POLARITY_HEATING = "heating"
POLARITY_COOLING = "cooling"

ACTUATOR_HEATER = "heater"
ACTUATOR_FAN = "fan"

# Sensor noise is drawn in blocks of this many steps
NOISE_BLOCK_STEPS = 4096

# =============================================================================
# MEASUREMENT PROTOCOL
# =============================================================================

DEFAULT_UNITS = 3
DEFAULT_CHANNELS_PER_UNIT = 5
DEFAULT_PULSE_DURATION = 100e-6  # s
DEFAULT_PULSE_GAP = 100e-6  # s
DEFAULT_ROUND_PERIOD = 1.3  # s, 81250 sync ticks
DEFAULT_TOTAL_DURATION = 86400.0  # s
DEFAULT_CARRIER = 5.0e9  # Hz
DEFAULT_SAMPLE_RATE = 1.0e6  # S/s, decimated simulation rate
SAMPLE_RATE_RANGE = (1.0e6, 10.0e6)
DEFAULT_GUARD_FRACTION = 0.05
DEFAULT_FULL_SCALE_DBM = 0.0

# Samples per vectorized capture block (rounds x channels x pulse samples)
CAPTURE_BLOCK_SAMPLES = 1 << 20

CONTROL_ON = "on"
CONTROL_OFF = "off"
CONTROL_MODES = [CONTROL_ON, CONTROL_OFF]

# =============================================================================
# CLOCK TREE
# =============================================================================

SYNC_TICK_HZ = 62_500
REFERENCE_CLOCK_HZ = 10_000_000
MAX_FRACTIONAL_OFFSET = 1e-6
DISTRIBUTOR_CHANNELS = 12
CLOCKS_PER_CHANNEL = 3
DEFAULT_COMPENSATOR_GAIN = 0.5
DEFAULT_DISCIPLINE_INTERVAL = 1.0  # s

# =============================================================================
# REFERENCE RESULTS (15 channels, unit-major order)
# =============================================================================

REFERENCE_AMP_P2P_PCT = [
    0.50, 0.58, 0.78, 1.10, 0.72,
    0.50, 0.60, 0.89, 0.47, 0.78,
    0.81, 0.62, 1.10, 0.69, 0.87,
]
REFERENCE_AMP_STD_PCT = [
    0.092, 0.110, 0.150, 0.220, 0.140,
    0.098, 0.130, 0.150, 0.090, 0.150,
    0.180, 0.140, 0.220, 0.150, 0.190,
]
REFERENCE_PHASE_P2P_DEG = [
    3.1, 2.5, 2.6, 2.7, 2.6,
    3.0, 2.7, 2.8, 3.0, 3.0,
    3.1, 2.8, 2.9, 2.8, 2.6,
]
REFERENCE_PHASE_STD_DEG = [
    0.43, 0.37, 0.36, 0.35, 0.36,
    0.44, 0.40, 0.42, 0.41, 0.40,
    0.41, 0.37, 0.37, 0.37, 0.36,
]

# Without thermal control
REFERENCE_OFF_AMP_STD_MEAN_PCT = 0.45
REFERENCE_OFF_PHASE_STD_MEAN_DEG = 0.73

# =============================================================================
# CALIBRATION
# =============================================================================

CALIBRATION_TARGET_AMP_STD_PCT = sum(REFERENCE_AMP_STD_PCT) / len(REFERENCE_AMP_STD_PCT)
CALIBRATION_TARGET_PHASE_STD_DEG = sum(REFERENCE_PHASE_STD_DEG) / len(REFERENCE_PHASE_STD_DEG)
CALIBRATION_MAX_ITERATIONS = 100
CALIBRATION_MAX_BRACKET_DOUBLINGS = 40
CALIBRATION_XTOL = 1e-9

DEFAULT_FIDELITY_BUDGET = 1e-4

# =============================================================================
# OUTPUT FILES
# =============================================================================

MANIFEST_FILE = "manifest.json"
CAMPAIGN_FILE = "campaign.csv"
STATS_FILE = "stats.csv"
STATS_TABLE_FILE = "stats.txt"
SUMMARY_FILE = "summary.txt"
INFIDELITY_FILE = "infidelity.csv"
THERMAL_TRACE_FILE = "thermal_trace.csv"
PLOT_SERIES_FILE = "plot_series.csv"
ENVELOPE_FILE = "envelopes.csv"
COMPARISON_FILE = "comparison.csv"
COMPARISON_SUMMARY_FILE = "comparison_summary.txt"
MERGED_SERIES_FILE = "merged_series.csv"
CALIBRATION_REPORT_FILE = "calibration_report.csv"
CALIBRATED_SCENARIO_FILE = "calibrated_scenario.yaml"
VERIFY_STATS_FILE = "verify_stats.csv"
SKEW_REPORT_FILE = "skew_report.csv"
DISCIPLINE_TRACE_FILE = "discipline_trace.csv"

RUN_STATUS_RUNNING = "running"
RUN_STATUS_COMPLETE = "complete"
RUN_STATUS_FAILED = "failed"

CSV_FLOAT_FORMAT = "%.15g"

STATS_COLUMNS = ["unit", "channel", "amp_p2p", "amp_std", "phase_p2p", "phase_std"]
CAMPAIGN_COLUMNS = ["unit", "channel", "round", "t_s", "amp", "phase_deg"]
TRACE_COLUMNS = ["t_s", "node_id", "temp_C", "duty"]

# =============================================================================
# ERROR MESSAGES
# =============================================================================

ERROR_DT_UNSTABLE = "Time step {dt} s exceeds stability limit for node '{node_id}'; maximum admissible dt is {max_dt} s"
ERROR_TRACE_TOO_SHORT = "Recorded ambient trace needs at least 2 samples, got {count}"
ERROR_GAIN_NONPOSITIVE = "Gain multiplier {gain} is not positive; coefficients are outside the small-signal regime"
ERROR_TEMPERATURE_NOT_FINITE = "Temperature of device '{device_id}' is not finite"
ERROR_AMPLIFIER_PHASE = "Amplifier '{device_id}' must have phase_coeff = 0, got {phase_coeff}"
ERROR_GUARD_EMPTY = "Guard of {guard} samples per edge leaves nothing of a {count}-sample window"
ERROR_SCHEDULE_OVERFLOW = "(pulse_duration + pulse_gap) x slots = {needed} s exceeds round_period = {round_period} s"
ERROR_NOT_INTEGRAL = "{name} = {value} is not an integral number of {unit}"
ERROR_ZERO_MEAN = "Channel {channel_id} has non-positive mean amplitude {mean}"
ERROR_TOO_FEW_RECORDS = "Channel {channel_id} needs at least 2 records, got {count}"
ERROR_NOT_UNITARY = "Matrix is not unitary within {tolerance}"
ERROR_WRONG_REFERENCE = "Reference clock must be {expected} Hz, got {actual} Hz"
ERROR_UNKNOWN_REFERENCE = "Unknown {kind} '{name}'"
ERROR_CALIBRATION_DIVERGED = "Calibration of {quantity} did not converge after {iterations} iterations (residual {residual})"
ERROR_SCENARIO_MISMATCH = "Runs have different scenario hashes: {hash_a} vs {hash_b}"
ERROR_DUMP_TOO_LARGE = "Envelope dump would write {rows} rows (limit {limit}); pass --force-dump to override"
