//! RBF-kernel SVM classification of spectrum embeddings.

pub mod cv;
pub mod multiclass;
pub mod svm;

pub use cv::{nested_cv, nested_cv_embedded, CvOptions, CvResult, HyperGrid, Hyperparams};
pub use multiclass::{multiclass_train_predict, MulticlassModel};
pub use svm::{svm_decision_values, svm_predict, svm_train_binary, SvmModel};
