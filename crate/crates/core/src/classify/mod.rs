pub mod eval;
pub mod model;
mod svm;

pub use eval::{confusion_to_report, kfold_evaluate, kfold_evaluate_with, Confusion, EvalReport};
pub use model::{predict, train, ClassifierKind, ClassifierModel, Hyperparams};
