"""Spectral Poisson solvers and eigenbasis restoration sampling on the unit square."""

__version__ = "0.1.0"

from .grid import EvalRecord, GridSpec, PairSample, ScalarField, eval_batch, mae, zero_field
from .spectral import (dst_forward, dst_inverse, eigenvalues, spectral_laplacian,
                       spectral_poisson_solve, to_f_space_from_u, to_u_space_from_f)
from .fd import fd_eigenvalues, fd_inverse_estimate, fd_laplacian, fd_poisson_solve
from .datagen import AnalyticalSpec, gen_analytical, gen_dataset, gen_nn_pair
from .jets import Jet2, TanhNetSpec, tanh_net_jet
from .noise import (BridgeSpec, NoiseSchedule, make_schedule, sample_brownian_bridge,
                    sample_iid_gaussian)
from .greens import greens_psi, k_kernel, kbar_table, verify_thm2_mc, verify_thm3_bound_mc
from .ddrm import (ChainTrace, ConfigurationError, DdrmConfig, builtin_identity_denoiser,
                   builtin_spectral_prior_denoiser, ddrm_forward, ddrm_inverse,
                   verify_marginal_property)

__all__ = [
    "AnalyticalSpec", "BridgeSpec", "ChainTrace", "ConfigurationError", "DdrmConfig",
    "EvalRecord", "GridSpec", "Jet2", "NoiseSchedule", "PairSample", "ScalarField",
    "TanhNetSpec", "builtin_identity_denoiser", "builtin_spectral_prior_denoiser",
    "ddrm_forward", "ddrm_inverse", "dst_forward", "dst_inverse", "eigenvalues",
    "eval_batch", "fd_eigenvalues", "fd_inverse_estimate", "fd_laplacian", "fd_poisson_solve",
    "gen_analytical", "gen_dataset", "gen_nn_pair", "greens_psi", "k_kernel", "kbar_table",
    "mae", "make_schedule", "sample_brownian_bridge", "sample_iid_gaussian",
    "spectral_laplacian", "spectral_poisson_solve", "tanh_net_jet", "to_f_space_from_u",
    "to_u_space_from_f", "verify_marginal_property", "verify_thm2_mc", "verify_thm3_bound_mc",
    "zero_field",
]
