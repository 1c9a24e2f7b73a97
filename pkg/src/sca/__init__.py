"""Scatter Component Analysis for domain adaptation and domain generalization."""

from .core import HyperParams, ScaModel, Variant, assemble_pencil, fit, transform
from .data import Dataset, SynthSpec, gen_synthetic, load_csv, save_csv
from .kernels import KernelSpec, center_gram, gram, median_bandwidth, rbf, solve_gen_eig
from .scatter import domain_coeff, domain_scatter, mmd_sq, scatter_of

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "HyperParams",
    "KernelSpec",
    "ScaModel",
    "SynthSpec",
    "Variant",
    "assemble_pencil",
    "center_gram",
    "domain_coeff",
    "domain_scatter",
    "fit",
    "gen_synthetic",
    "gram",
    "load_csv",
    "median_bandwidth",
    "mmd_sq",
    "rbf",
    "save_csv",
    "scatter_of",
    "solve_gen_eig",
    "transform",
]
