//! Mallows models over top-k rankings: exact probabilities, sampling,
//! concentric expert/non-expert mixtures and consensus estimation.
//!
//! Items and ranks are 0-based in memory; the text formats in [`io`] use
//! 1-based item ids.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod experiments;
mod fenwick;
pub mod io;
pub mod mixture;
pub mod model;
pub mod oracle;
pub mod rankings;
pub mod rng;

pub use error::{Error, Result};
pub use estimation::{
    borda, borda_estimate, borda_sample_complexity, delta_1k, eborda, empirical_pair_accuracy,
    estimate_theta_mle, partial_estimate_error, BordaBound, ConsensusEstimate, PartialError,
    ThetaClamp, ThetaEstimate,
};
pub use mixture::{
    approx_mean_distances, fit_mixture, hoeffding_draws, mean_distances, min_sample_size,
    mixture_log_likelihood, sample_mixture, separate, separation_gap, Component, ConcentricMixture,
    GroundTruth, SeparationResult, SplitMethod,
};
pub use model::{
    expected_distance, theta_for_expected_distance, variance_distance, MallowsModel,
    PairwiseMarginal, THETA_CAP,
};
pub use rankings::{
    distance_to_full, invert_topk, kendall_full, kendall_topk, InversionVector, Permutation,
    TopKRanking,
};
pub use rng::RandomSource;
