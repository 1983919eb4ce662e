"""Online-PCA bottleneck: streaming PCA, batch PCA oracle, metrics and datasets."""

from ._core import (
    ConfigError,
    GammaFadeMean,
    InputError,
    NumericalError,
    OjaPca,
    batch_pca,
    bit_budget_continuous,
    bit_budget_discrete,
    budget_table,
    gamma_fade_direct,
    gen_gaussian_lowrank,
    gen_toy_shapes,
    inv_sqrt_sym,
    principal_angles,
    psnr,
    reconstruction_mse,
    rho,
    sample_covariance,
    ssim,
    sym_eig,
)

__all__ = [
    "ConfigError",
    "GammaFadeMean",
    "InputError",
    "NumericalError",
    "OjaPca",
    "batch_pca",
    "bit_budget_continuous",
    "bit_budget_discrete",
    "budget_table",
    "gamma_fade_direct",
    "gen_gaussian_lowrank",
    "gen_toy_shapes",
    "inv_sqrt_sym",
    "principal_angles",
    "psnr",
    "reconstruction_mse",
    "rho",
    "sample_covariance",
    "ssim",
    "sym_eig",
]
