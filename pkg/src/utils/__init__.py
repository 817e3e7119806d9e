# Utils module
from src.utils.logging import setup_logging, get_logger, run_context
from src.utils.phase import wrap_degrees
