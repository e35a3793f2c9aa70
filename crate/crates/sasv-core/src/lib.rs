//! Spoof-aware speaker verification (SASV) toolkit.
//!
//! The crate covers a complete desk-scale SASV pipeline:
//!
//! - [`corpus`]: manifest/trial file formats and a deterministic synthetic
//!   micro-corpus generator.
//! - [`frontend`]: waveform handling, log-mel features, and the reshaped
//!   views consumed by the discriminator stacks.
//! - [`labeling`]: speaker-ID label design strategies (dual and multi).
//! - [`backbone`]: residual convolutional embedding network with statistics
//!   pooling and an additive-angular-margin softmax head.
//! - [`subjudge`]: discriminator-based spoof classifiers (multi-period,
//!   multi-scale, and multi-resolution stacks) pooled by multi-query
//!   multi-head attentive statistics pooling.
//! - [`scoring`]: trial scoring, score files, and linear score fusion.
//! - [`metrics`]: EER, min-DCF, and a-DCF with exact threshold-sweep
//!   semantics.

pub mod backbone;
pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod frontend;
pub mod labeling;
pub mod metrics;
pub mod nn;
pub mod scoring;
pub mod subjudge;
pub mod wav;

pub use error::{Error, Result};
