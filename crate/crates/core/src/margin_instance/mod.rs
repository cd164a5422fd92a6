//! Margin- and instance-based classifiers: kernel SVM and k-nearest neighbors.

mod kernel;
mod knn;
mod svm;

pub use kernel::{default_gamma, kernel_eval, KernelSpec};
pub use knn::{fit_knn, KnnModel};
pub use svm::{
    fit_svm_binary, fit_svm_multiclass, SvmBinaryModel, SvmMulticlassModel, SvmParams, SvmSummary,
    SUPPORT_THRESHOLD,
};
