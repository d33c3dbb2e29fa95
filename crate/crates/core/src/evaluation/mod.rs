//! Segmentation overlap, classification metrics, subject-grouped splits and
//! cross-validation.

mod cv;
mod overlap;
mod report;
mod roc;
mod split;

pub use cv::{cross_validate, evaluate_fold, holdout, FoldResult};
pub use overlap::{dice, jaccard, overlap, overlap_all, DiceReport, LabelGrid, Overlap};
pub use report::{fmt_g6, json_array, json_string, AucReport, EvalMode, MetricSummary};
pub use roc::{
    accuracy, one_vs_all_aucs, pair_counts, roc_auc, roc_curve, trapezoid_area, PairCounts,
};
pub use split::{allocate, grouped_folds, grouped_split, subject_ids, subject_of};
