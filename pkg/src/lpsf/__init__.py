"""Spectral scale decompositions and dispersive-decay experiments for
Schrodinger operators H = -Laplacian + V on periodic grids.

The toolkit builds smooth dyadic windows adapted to the spectrum of H,
applies them through Chebyshev polynomial calculus (no dense
diagonalization required), measures the resulting Besov and
Triebel-Lizorkin norms, screens potentials through Kato- and
Rollnik-type functionals, and runs reproducible decay experiments for
the unitary group exp(-itH).
"""

from ._kernels import BACKEND
from ._settings import set_threads
from .config import (ConfigError, ExperimentConfig, FieldSpec, RunConfig,
                     canonical_json, content_hash, load_config, parse_config)
from .decaylab import (DecayReport, SplitReport, ThetaScanReport, bracket,
                       corollary_experiment, dispersive_scan,
                       dyadic_split_diagnostic, fit_exponent, lemma_jn_scan,
                       long_time_experiment, save_report,
                       short_time_experiment, split_index, theory_exponent)
from .dyadic import (DyadicSystem, DyadicValidation, build_dyadic_system,
                     cutoff, required_j_max, transition, validate_dyadic)
from .evolve import (PropagationResult, WrapDiagnostic, phase_function,
                     propagate, propagate_series, wrap_diagnostic)
from .funcalc import (ChebFunction, NonConvergedError, apply_callable,
                      apply_function, cheb_fit, coefficient_report,
                      expansion_interval, lp_decompose, window_function,
                      window_project)
from .hamiltonian import (EigenDecomposition, Hamiltonian, apply, assemble,
                          dense_eig, fd2_symbol_1d, fourier_symbol,
                          spectral_range)
from .lattice import (Field, Grid, PotentialSpec, gaussian_packet, inner,
                      load_field, lp_norm, make_grid, sample_potential,
                      save_field)
from .norms import (BesovIndex, EmbeddingReport, PotentialReport,
                    RollnikEstimate, besov_from_pieces, besov_norm,
                    conjugate_exponent, embedding_check, hypothesis_check,
                    kato_norm, kato_profile, lebesgue_3_2, rollnik_functional,
                    triebel_from_pieces, triebel_norm)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "set_threads",
    "ConfigError", "ExperimentConfig", "FieldSpec", "RunConfig",
    "canonical_json", "content_hash", "load_config", "parse_config",
    "DecayReport", "SplitReport", "ThetaScanReport", "bracket",
    "corollary_experiment", "dispersive_scan", "dyadic_split_diagnostic",
    "fit_exponent", "lemma_jn_scan", "long_time_experiment", "save_report",
    "short_time_experiment", "split_index", "theory_exponent",
    "DyadicSystem", "DyadicValidation", "build_dyadic_system", "cutoff",
    "required_j_max", "transition", "validate_dyadic",
    "PropagationResult", "WrapDiagnostic", "phase_function", "propagate",
    "propagate_series", "wrap_diagnostic",
    "ChebFunction", "NonConvergedError", "apply_callable", "apply_function",
    "cheb_fit", "coefficient_report", "expansion_interval", "lp_decompose",
    "window_function", "window_project",
    "EigenDecomposition", "Hamiltonian", "apply", "assemble", "dense_eig",
    "fd2_symbol_1d", "fourier_symbol", "spectral_range",
    "Field", "Grid", "PotentialSpec", "gaussian_packet", "inner",
    "load_field", "lp_norm", "make_grid", "sample_potential", "save_field",
    "BesovIndex", "EmbeddingReport", "PotentialReport", "RollnikEstimate",
    "besov_from_pieces", "besov_norm", "conjugate_exponent",
    "embedding_check", "hypothesis_check", "kato_norm", "kato_profile",
    "lebesgue_3_2", "rollnik_functional", "triebel_from_pieces",
    "triebel_norm",
]
