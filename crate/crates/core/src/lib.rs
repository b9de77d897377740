//! Reassembly of eroded 3x3 jigsaw puzzles.
//!
//! Given, for every lateral fragment, a probability distribution over the
//! eight slots around a center fragment plus an outsider class, the solver
//! finds the placement maximizing the product of the chosen probabilities.
//! It does so by a shortest path over a layered decision graph whose
//! low-probability branches are cut before they are expanded.
//!
//! Modules:
//! - [`types`] and [`matrix`]: the shared data model and JSON formats.
//! - [`counting`]: closed-form graph sizes and reassembly counts.
//! - [`graph`] and [`solver`]: graph construction and exact solving.
//! - [`metrics`]: perfect, well-placed and almost-perfect scores.
//! - [`fragmenter`]: cutting puzzle instances from images.
//! - [`synth`]: a calibrated synthetic scorer.
//! - [`bench`]: the experiment harness.

pub mod bench;
pub mod counting;
pub mod error;
pub mod exec;
pub mod fragmenter;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod solver;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use exec::Execution;
pub use graph::{build_graph, enumerate_paths, BuildOptions, CutPolicy, ReassemblyGraph, SlotSet};
pub use matrix::{load_prediction_matrix, log_weight, PredictionMatrix};
pub use solver::{solve, solve_matrix, solve_unknown_center, Solution};
pub use types::{Assignment, FragmentId, GraphStats, PositionClass, PuzzleInstance};
