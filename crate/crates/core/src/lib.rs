//! Multivariate bag-of-patterns (BOP) classification of synchrophasor event windows.
//!
//! The pipeline turns every channel of an [`EventRecord`] into a bag of SAX words,
//! stacks the per-channel bags into a BOP matrix, reweights it with TF-DF (term
//! frequency times a scaled document frequency that rewards words shared across
//! channels) and averages the rows into a sparse feature vector. Current and
//! voltage channels are processed separately and concatenated, current first.
//!
//! ```
//! use pmu_bop::{extract_features, synth, EventLabel, SaxParams};
//!
//! let cfg = synth::SynthConfig::default();
//! let record = synth::gen_event(EventLabel::Fault, &cfg, 7).unwrap();
//! let features = extract_features(&record, &SaxParams::default()).unwrap();
//! assert_eq!(features.dim(), 512);
//! ```
//!
//! Batch work (feature extraction, fold training, dataset synthesis) runs on rayon
//! when the `parallel` feature is enabled (the default). Results are identical to
//! the sequential path in either case.

pub mod classify;
pub mod data;
mod error;
pub mod normal;
pub mod par;
pub mod sax;
pub mod synth;
pub mod vectorize;

pub use classify::{
    confusion_to_report, kfold_evaluate, predict, train, ClassifierKind, ClassifierModel,
    Confusion, EvalReport, Hyperparams,
};
pub use data::{load_dataset, save_dataset, Dataset, EventLabel, EventRecord, TimeSeries};
pub use error::{Error, Result};
pub use par::Execution;
pub use sax::{SaxParams, SaxWord};
pub use vectorize::{extract_features, BopMatrix, FeatureKey, FeatureVector, WeightMatrix};
