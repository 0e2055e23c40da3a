//! Random matrices on `M₂(ℝ)^{⊗N}` built from a Jordan–Wigner type
//! transform, evaluated as an automaton on basis strings.
//!
//! Every generator sends a basis string `e_{b₁} ⊗ ⋯ ⊗ e_{b_N}` to a multiple
//! of one basis string, so nothing of size `2^N` is ever built.

mod coefficients;
mod fock;

pub use coefficients::{
    sample_coefficients, CoefficientLaw, CoefficientTable, PsiLaw, TwoPointLaw, DEFAULT_SEPARATION,
};
pub use fock::{
    act, apply_generator, block_word_moment, commutation_scalar, mixed_sum_moment,
    vacuum_expectation, z_moment, BasisString, GeneratorWord, SparseFockVector, FOCK_BUDGET,
};
