//! Exact random-coding correct-decoding exponent of the wiretap channel
//! decoder.
//!
//! The crate evaluates `E(R1, R2)`, the exponential decay rate of the
//! eavesdropper's ensemble-average probability of correctly decoding the
//! message when a constant-composition random code of rate `R1` is binned
//! into sub-codes of rate `R2`:
//!
//! * [`channel`]: distributions, channels and information measures;
//! * [`solver`]: the convex inner problem `min D + μ·I`;
//! * [`dmc`]: both single-letter representations of `E(R1, R2)`;
//! * [`region`]: zero / partial / full-security rate regions;
//! * [`gaussian`]: the additive white Gaussian noise analogue;
//! * [`ensemble`]: a finite-blocklength oracle of the coding ensemble.
//!
//! Rates and exponents are in nats.

pub mod channel;
pub mod dmc;
pub mod ensemble;
pub mod error;
pub mod gaussian;
pub mod numeric;
pub mod region;
pub mod solver;

pub use channel::{
    check_degraded, entropy, mutual_information, weighted_divergence, ChannelFile, ChannelSpec,
    ConditionalChannel, Degradedness, Distribution, Dmc,
};
pub use dmc::{
    bsc_exponent_closed_form, exponent_r2_zero, exponent_rep1, exponent_rep2, gamma_dmc,
    pareto_curve, Branch, ExponentResult, ExponentSolver, MuGrid, ParetoCurve, ParetoPoint,
    RatePair, Rep1Result, Rep2Result,
};
pub use ensemble::{
    decoder_score, estimate_ensemble_pc, exact_pc_for_codebook, sample_codebook,
    type_enum_exponent, Codebook, EnsembleSpec, SimulationResult, TypeEnumExponent,
};
pub use error::{Error, Result};
pub use gaussian::{
    gamma_gaussian, gaussian_divergence_term, gaussian_exponent, gaussian_mutual_info,
    sigma_z_star, GaussianOptimum, GaussianSpec, RhoGrid,
};
pub use region::{
    classify_rate_point, compute_qstar, full_security_interval, FullSecurityInterval, RateClass,
    SecurityAnalysis,
};
pub use solver::{inner_lagrangian_min, InnerProblem, InnerSolution, SolverOptions};
