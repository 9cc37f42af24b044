"""Image restoration with iterative denoising and backward projections."""

from ._idbp import (
    BlurOperator,
    BridgeError,
    DegradationOperator,
    InpaintingOperator,
    SolverError,
    add_gaussian_noise,
    bsnr,
    condition_ratio,
    denoise,
    idbp,
    idbp_auto,
    load_pgm,
    median_initialize,
    pnp,
    psnr,
    save_pgm,
    scenario_kernel,
    verify,
)

__all__ = [
    "BlurOperator",
    "BridgeError",
    "DegradationOperator",
    "InpaintingOperator",
    "SolverError",
    "add_gaussian_noise",
    "bsnr",
    "condition_ratio",
    "denoise",
    "idbp",
    "idbp_auto",
    "load_pgm",
    "median_initialize",
    "pnp",
    "psnr",
    "save_pgm",
    "scenario_kernel",
    "verify",
]
