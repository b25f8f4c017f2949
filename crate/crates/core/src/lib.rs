//! Attention-driven graph diffusion viewed as a continuous-time Markov chain.
//!
//! A row-stochastic attention matrix `A` on a graph defines the generator
//! `Q = A - I` of a Markov semigroup `P_t = e^{tQ}`. This crate builds such
//! generators (optionally with ergodicity-breaking or killing terms), evaluates
//! the semigroup by matrix exponential or ODE integration, analyses its
//! spectrum and invariant measure, rolls out feature-dependent (nonlinear)
//! attention layers, samples the underlying jump process, and measures
//! oversmoothing through Dirichlet energy.

pub mod attention;
pub mod error;
pub mod field;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod nonlinear;
pub mod semigroup;
pub mod stochastic;

pub use attention::{
    breaking_term, build_attention, build_attention_with_logits, generator_from_attention, killed_generator,
    modified_generator, AttentionBuild, AttentionKernel, BreakingKind, BreakingSpec, Generator, Provenance,
    StochasticMatrix,
};
pub use error::{Error, Result};
pub use field::FeatureField;
pub use graph::{generate_homophily_graph, homophily_ratio, sbm_probabilities, Graph, NodeLabels};
pub use metrics::{constant_killing_energy_law, dirichlet_energy, energy_trace, EnergyNormalization, EnergyTrace};
pub use nonlinear::{nonlinear_rollout, weak_ergodicity_trace, Rollout};
pub use semigroup::spectral::{
    convergence_rate_fit, fixed_point_horizon, invariant_measure, oversmoothing_fixed_point, spectral_report,
    SpectralReport,
};
pub use semigroup::{matrix_exponential, solve_cauchy, SemigroupSolution, SolveMethod};
pub use stochastic::{
    feynman_kac_estimate, killed_feature_estimate, sample_ctmc, sample_killed_ctmc, KillingMode, McEstimate, Trajectory,
};
