"""Monte Carlo and exact tools for quantitative recurrence of expanding interval maps."""
from .systems import build_beta_system, build_cantor_system, build_gauss_system, parse_system
from .measures import measure_for
from .rates import parse_rate
from .recurrence import EngineConfig, estimate_An, estimate_pair, z_counter

__version__ = "0.1.0"

__all__ = [
    "EngineConfig", "build_beta_system", "build_cantor_system", "build_gauss_system",
    "estimate_An", "estimate_pair", "measure_for", "parse_rate", "parse_system", "z_counter",
    "__version__",
]
