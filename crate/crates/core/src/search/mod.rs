//! Single-task scatter search components.

pub mod anneal;
pub mod combine;
pub mod heuristics;
pub mod refset;

pub use anneal::{simulated_annealing, Annealer, SAParams};
pub use combine::{insert_neighbor, solution_combination};
pub use heuristics::{cds, diversification_generation, johnson, neh};
pub use refset::{subset_generation, ReferenceSet};
