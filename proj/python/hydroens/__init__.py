"""Normalized ensemble postprocessing for dam-inflow forecasts."""

from ._hydroens import (
    ConfigError,
    DegenerateInput,
    Error,
    LineError,
    ShapeError,
    ValidationError,
    ZeroNormError,
    batch_ensemble,
    check_proposition1,
    compute_sst_weights,
    finalize_weights,
    flood_month_silhouette,
    global_ensemble,
    l2_normalized,
    mae,
    median_sigma_coeffs,
    minmax_standardize,
    mse,
    mse_skill_identity,
    proposition1_sweep,
    read_embedding,
    read_features,
    read_weights,
    restore_level,
    rmse,
    run,
    silhouette,
    sim,
    write_embedding,
)

__all__ = [name for name in dir() if not name.startswith("_")]
