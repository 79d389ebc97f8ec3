//! Sentiment classification of software-engineering text with n-gram IDF
//! features and budgeted automated model search.

pub mod automl;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod ngram;
pub mod num;
pub mod preprocess;
pub mod synthetic;

pub use corpus::{LabeledDataset, LabeledDocument, SentimentLabel};
pub use error::{Error, Result};
pub use ngram::NGramDictionary;
pub use num::Scalar;
pub use preprocess::{Preprocessor, StopList, TokenSequence};

pub type SparseVector64 = features::SparseVector<f64>;
pub type SparseVector32 = features::SparseVector<f32>;
pub type FeatureMatrix64 = features::FeatureMatrix<f64>;
pub type FeatureMatrix32 = features::FeatureMatrix<f32>;
pub type TrainedModel64 = learners::TrainedModel<f64>;
pub type TrainedModel32 = learners::TrainedModel<f32>;
pub type Leaderboard64 = automl::Leaderboard<f64>;
pub type Leaderboard32 = automl::Leaderboard<f32>;
pub type TrainedEnsemble64 = automl::TrainedEnsemble<f64>;
pub type TrainedEnsemble32 = automl::TrainedEnsemble<f32>;
