//! Metrics, statistics, experiment runners and result files.

pub mod metrics;
pub mod persist;
pub mod stats;
pub mod studies;

pub use metrics::{relative_errors, rps, transferability_value, ErrorSummary, RPSTable};
pub use stats::{linear_fit, wilcoxon_signed_rank, LinearFit, WilcoxonResult};
pub use studies::{
    study_ablation, study_compare, study_distance_srcc, study_mtco_vs_stss, study_transferability,
    study_transformation, CompareConfig, CompareStudy, SrccStudy, TransferabilityStudy,
};
