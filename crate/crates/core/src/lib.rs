//! Compositional-data transforms, feature maps, probabilistic classifiers and
//! evaluation metrics for multi-class geozone classification experiments.

pub mod classifiers;
pub mod dataset;
pub mod datagen;
pub mod error;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod seeding;
pub mod simplex;

/// Library version, echoed into result files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use classifiers::{fit_classifier, Classifier, ClassifierKind, ClassifierSpec, ProbPrediction};
pub use dataset::{Group, GroupMap, LabeledDataset};
pub use error::{Error, Result};
pub use features::{fit_pipeline, FittedTransform, TransformKind, TransformSpec};
pub use metrics::{evaluate, MetricsReport};
pub use simplex::{Composition, HelmertBasis, PwlrDenominator};
