//! Entropy-driven decision trees and bootstrap random forests.

mod decision_tree;
mod forest;
mod impurity;

pub use decision_tree::{
    fit_decision_tree, fit_tree_with_criterion, Criterion, DecisionTreeModel, TreeNode, TreeParams,
};
pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use impurity::{conditional_entropy, entropy, gini, information_gain};
