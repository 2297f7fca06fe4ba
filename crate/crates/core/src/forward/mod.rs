//! Log-semiring forward and forward-backward over an [`Fsa`](crate::graphs::Fsa)
//! and an emission matrix.

mod emissions;
mod objective;
mod pass;

pub use emissions::{
    lemi_bytes, read_lemi, write_lemi, EmissionMatrix, FrameMatrix, EMISSION_FORMAT_VERSION,
    NORMALIZATION_TOLERANCE,
};
pub use objective::{
    combine_training_objectives, lfmmi_objective_and_grad, lfmmi_objective_and_grad_scaled,
    LfMmiOutput, ModelKind, ObjectiveParts, DEFAULT_ALPHA_AED, DEFAULT_ALPHA_NT,
};
pub use pass::{
    forward_backward, forward_prefix_series, forward_score, occupation_posteriors,
    ForwardBackward, ForwardGraph, PrefixForwardState,
};
