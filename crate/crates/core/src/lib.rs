//! Multi-task permutation flowshop optimization.
//!
//! Pairs of flowshop problems are compared with an inter-task distance,
//! optionally reordered into a shared job space, and solved together by a
//! scatter search that exchanges solutions between the two runs.

pub mod assignment;
pub mod benchgen;
pub mod distance;
pub mod error;
pub mod harness;
pub mod model;
pub mod mtco;
pub mod rng;
pub mod search;
pub mod taillard;
pub mod transfer;
pub mod transform;

#[cfg(test)]
pub(crate) mod testutil;

pub use benchgen::{generate_pair, generate_suite, load_mt, save_mt, MultiTaskInstance};
pub use distance::{inter_task_distance, normalized_distance, DistanceReport, MatchingResult};
pub use error::{Error, Result};
pub use model::{
    evaluate, evaluate_with_completion, matrix_to_perm, perm_to_matrix, EvalResult, Evaluator, Instance,
    Objective, Permutation, SolutionMatrix,
};
pub use mtco::{run_ablation, run_mtco, run_pair, run_stss, RunConfig, RunTrace, Variant};
pub use taillard::{load_taillard, Orientation};
pub use transform::{transform_pair, TransformRecord};
