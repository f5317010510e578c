"""Online split-network training simulator for cooperative spectrum sensing."""

from ._core import (
    Environment,
    Mlp,
    __version__,
    mse_loss,
    preset_names,
    quantize_hex,
    quantize_uniform,
    run_experiment,
    run_experiment_file,
    run_preset,
)

__all__ = [
    "Environment",
    "Mlp",
    "__version__",
    "mse_loss",
    "preset_names",
    "quantize_hex",
    "quantize_uniform",
    "run_experiment",
    "run_experiment_file",
    "run_preset",
]
