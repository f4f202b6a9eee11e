//! Analytics engine for research-unit panels.
//!
//! Takes an unbalanced sub-project × year panel of funding inputs and research
//! output, and computes:
//!
//! - time fixed-effects (within) regressions with year dummies, collinearity
//!   omission and cluster-robust inference ([`linear`]);
//! - fixed-effects Poisson regressions via the conditional (multinomial)
//!   likelihood with Newton iterations and robust sandwich covariance
//!   ([`poisson`]);
//! - bibliometric performance indicators: citation ratios, h-index, fractional
//!   productivity, scientific strength, efficiency ratios ([`indicators`]);
//! - descriptive analytics: publication–field bipartite networks, expertise
//!   weighting, keyword extraction/overlap and mosaic layouts ([`descriptive`]).
//!
//! With the `parallel` feature (default) the per-group likelihood kernels and
//! corpus tokenization run on rayon; the sequential fallbacks live in `seq`
//! submodules and are always compiled.

pub mod descriptive;
pub mod indicators;
pub mod jel;
pub mod linear;
pub mod panel;
pub mod poisson;
pub mod synth;

pub use jel::JelCode;
pub use panel::{CsvSchema, DropReason, DropReport, Panel, PanelObservation};
