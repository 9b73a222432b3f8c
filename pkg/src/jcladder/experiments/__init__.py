from .config import ConfigError, ExperimentConfig, dump_config, from_dict, load_config
from .output import emit_outputs
from .runners import FigureResult, oracle_check, run_config, run_fig2, run_fig3, run_fig4, run_sweep

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FigureResult",
    "dump_config",
    "emit_outputs",
    "from_dict",
    "load_config",
    "oracle_check",
    "run_config",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_sweep",
]
