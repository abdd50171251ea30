//! Predicting neural-network generalization gaps from perturbation-response
//! curves.
//!
//! The toolkit measures how a trained classifier's accuracy degrades as a
//! parameterized perturbation grows, summarizes the resulting curve with
//! inequality-style statistics, and evaluates how informative each statistic
//! is about the train/test gap:
//!
//! * [`nn`] — small dense/convolutional networks whose forward pass can be
//!   split at any layer, plus deterministic mini-batch training;
//! * [`data`] — synthetic vector and glyph-image datasets with train/test
//!   splits and none/partial/full augmentation regimes;
//! * [`perturb`] — interpolation (mixup) pairing and elementwise
//!   perturbations: Gaussian noise, rotation, translation, color jitter;
//! * [`prcurve`] — perturbation-response (PR) curves and their cumulative
//!   (PCD) form;
//! * [`scores`] — Gi-score, Pal-score, single-magnitude and mean-curve
//!   baselines;
//! * [`combine`] — PCA/AVG/PROD/rank combinations of score columns;
//! * [`cmi`] — conditional mutual information between pairwise gap
//!   orderings and measure orderings, minimized over hyperparameter
//!   conditioning subsets.
//!
//! Everything is deterministic given explicit seeds; parallel work derives
//! independent RNG substreams per task so output never depends on
//! scheduling.

pub mod cmi;
pub mod combine;
pub mod data;
pub mod error;
pub mod nn;
pub mod perturb;
pub mod prcurve;
pub mod rng;
pub mod scores;
pub mod shape;
pub mod stats;

pub use error::{Error, Result};
pub use shape::Shape;
