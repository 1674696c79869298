//! Multi-view Bayesian group factor analysis.
//!
//! A collection of paired data matrices ("views") sharing the same sample
//! rows is decomposed into latent components that are group-sparse (whole
//! per-view loading columns switched off by binary gates) and element-sparse
//! (per-entry ARD precisions). Inference is plain Gibbs sampling over the
//! exact conjugate conditionals, with a collapsed gate update so components
//! can enter and leave the spike state.
//!
//! The crate is generic over the scalar type through the [`Real`] trait;
//! `f64` aliases for the main types live at the crate root.

pub mod components;
pub mod data;
pub mod error;
pub mod gibbs;
pub mod ingest;
pub mod model;
pub mod ontology;
pub mod real;

pub use error::{GfaError, Result};
pub use real::Real;

/// `f64` aliases for the core model types.
pub type Dataset = data::MultiViewDataset<f64>;
pub type View = data::ViewMatrix<f64>;
pub type Config = model::ModelConfig<f64>;
pub type State = model::ModelState<f64>;
pub type Trace = gibbs::ChainTrace<f64>;
pub type Summary = gibbs::PosteriorSummary<f64>;
pub type Table = ingest::ProfileTable<f64>;
pub type Curve = ontology::SimilarityCurve<f64>;
