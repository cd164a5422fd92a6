//! Linear and probabilistic classifiers: discriminant analysis, logistic
//! regression and Gaussian naive Bayes.

mod lda;
mod logistic;
mod naive_bayes;

pub use lda::{fit_lda, LdaModel, LDA_EPSILON};
pub use logistic::{fit_logistic, loss_and_gradient, LogisticConfig, LogisticModel};
pub use naive_bayes::{fit_naive_bayes, GaussianParams, NaiveBayesModel, NB_VARIANCE_FLOOR};
