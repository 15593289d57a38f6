"""Delay-coordinate state reconstruction."""

from ._delayrecon import (
    ConfigError,
    FormatError,
    NumericError,
    add_gaussian_noise,
    average_mutual_information,
    cao_curves,
    constrained_kmeans,
    delay_embed,
    load_csv_series,
    load_dmat,
    mmd_grad_second,
    mmd_squared,
    mse,
    normalize,
    pod_basis,
    preset_names,
    run_experiment,
    save_dmat,
    select_dim,
    select_tau,
    simulate,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "NumericError",
    "add_gaussian_noise",
    "average_mutual_information",
    "cao_curves",
    "constrained_kmeans",
    "delay_embed",
    "load_csv_series",
    "load_dmat",
    "mmd_grad_second",
    "mmd_squared",
    "mse",
    "normalize",
    "pod_basis",
    "preset_names",
    "run_experiment",
    "save_dmat",
    "select_dim",
    "select_tau",
    "simulate",
]
