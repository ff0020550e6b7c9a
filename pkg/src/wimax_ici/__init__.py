"""ICI self-cancellation for 2x1 Alamouti OFDM links over SUI channels."""

from .channel import SUI_PROFILES, apply_channel, realize_channel, sui_profile
from .ici import CancellationScheme, ici_coefficients, theoretical_cir
from .ofdm import wimax_allocation
from .sim import ConfigError, LinkConfig, RunResult, measure_cir, run_link, sweep, write_csv

__all__ = [
    "SUI_PROFILES", "CancellationScheme", "ConfigError", "LinkConfig", "RunResult",
    "apply_channel", "ici_coefficients", "measure_cir", "realize_channel", "run_link",
    "sui_profile", "sweep", "theoretical_cir", "wimax_allocation", "write_csv",
]
__version__ = "0.1.0"
