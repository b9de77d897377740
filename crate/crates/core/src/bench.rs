//! Desk-scale experiment harness: the missing x outsider grid, the cut
//! threshold sweep and the known versus unknown center comparison.
//!
//! Every puzzle draws its own seed from the master seed and its cell, so
//! reports are bit-identical across runs and independent of parallelism.
//! Wall-clock figures are only included when `timings` is set.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{explored_node_count, BuildOptions, CutPolicy, DEFAULT_NODE_BUDGET};
use crate::matrix::{load_prediction_matrix, PredictionMatrix};
use crate::metrics::{evaluate, EvalOptions, FragmentPixels, MetricReport, DEFAULT_TAU};
use crate::solver::{solve_matrix, solve_unknown_center, Solution};
use crate::synth::{
    derive_seed, random_truth, rng_for, synthesize, synthesize_hypotheses, ScorerModel,
};
use crate::types::{Assignment, FragmentId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerSource {
    Synthetic(ScorerModel),
    /// Directory of puzzles, one subdirectory each holding `matrix.json`,
    /// `truth.json` and optionally `frag_<id>.png`.
    External {
        dir: PathBuf,
    },
}

/// Synthetic fragment appearance used by the almost-perfect metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPixels {
    /// Share of genuine fragments that look like plain background.
    pub background_share: f64,
}

impl Default for SyntheticPixels {
    fn default() -> Self {
        SyntheticPixels {
            background_share: 0.3,
        }
    }
}

fn default_missing() -> Vec<usize> {
    (0..=7).collect()
}
fn default_outsiders() -> Vec<usize> {
    (0..=3).collect()
}
fn default_thetas() -> Vec<f64> {
    vec![0.0, 0.01, 0.05]
}
fn default_grid_theta() -> f64 {
    0.05
}
fn default_n_puzzles() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_scorer() -> ScorerSource {
    ScorerSource::Synthetic(ScorerModel {
        accuracy: 0.65,
        confusion: Default::default(),
        seed: 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(default = "default_missing")]
    pub missing: Vec<usize>,
    #[serde(default = "default_outsiders")]
    pub outsiders: Vec<usize>,
    /// Thresholds compared by the sweep; the smallest is the baseline.
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Threshold used by the grid and the center comparison.
    #[serde(default = "default_grid_theta")]
    pub grid_theta: f64,
    #[serde(default = "default_n_puzzles")]
    pub n_puzzles: usize,
    #[serde(default = "default_scorer")]
    pub scorer: ScorerSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub reorder: bool,
    /// Weight per unfilled slot; 0 makes emptiness free.
    #[serde(default)]
    pub empty_weight: f64,
    #[serde(default = "default_budget")]
    pub node_budget: u64,
    #[serde(default)]
    pub pixels: SyntheticPixels,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub timings: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for BenchConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_puzzles < 1 {
            return Err(Error::Config("n_puzzles must be at least 1".into()));
        }
        if self.thetas.is_empty() {
            return Err(Error::Config("no thresholds to sweep".into()));
        }
        for &t in self.thetas.iter().chain([&self.grid_theta]) {
            CutPolicy::new(t, self.reorder)?;
        }
        if let ScorerSource::Synthetic(model) = &self.scorer {
            model.validate()?;
        }
        Ok(())
    }

    fn options(&self, allow_outsiders: bool) -> BuildOptions {
        BuildOptions {
            allow_outsiders,
            empty_weight: self.empty_weight,
            node_budget: self.node_budget,
            ..Default::default()
        }
    }
}

/// One evaluation puzzle: ground truth, its matrix and optional pixels.
#[derive(Clone, Debug)]
pub struct BenchPuzzle {
    pub truth: Assignment,
    pub matrix: PredictionMatrix,
    pub pixels: Option<BTreeMap<FragmentId, FragmentPixels>>,
}

fn cell_seed(master: u64, missing: usize, outsiders: usize, index: usize) -> u64 {
    derive_seed(
        derive_seed(master, (missing * 64 + outsiders) as u64),
        index as u64,
    )
}

/// Flat colour tiles: background fragments share one tone up to small
/// noise, the others get independent random colours.
pub fn synthetic_pixels(
    truth: &Assignment,
    style: SyntheticPixels,
    rng: &mut impl Rng,
) -> BTreeMap<FragmentId, FragmentPixels> {
    let background: [u8; 3] = rng.random();
    truth
        .fragments()
        .into_iter()
        .map(|f| {
            let genuine = truth.position_of(f).is_some_and(|p| p.is_on_board());
            let rgb = if genuine && rng.random::<f64>() < style.background_share {
                background.map(|c| c.saturating_add(rng.random_range(0..6)))
            } else {
                rng.random()
            };
            (f, FragmentPixels::filled(4, 4, rgb))
        })
        .collect()
}

/// Generates the synthetic puzzle for one grid slot.
pub fn synthetic_puzzle(
    config: &BenchConfig,
    model: &ScorerModel,
    missing: usize,
    outsiders: usize,
    index: usize,
) -> Result<BenchPuzzle> {
    let seed = cell_seed(config.seed, missing, outsiders, index);
    let truth = random_truth(missing, outsiders, &mut rng_for(derive_seed(seed, 0)))?;
    let matrix = synthesize(&truth, &model.with_seed(derive_seed(seed, 1)))?;
    let pixels = synthetic_pixels(&truth, config.pixels, &mut rng_for(derive_seed(seed, 2)));
    Ok(BenchPuzzle {
        truth,
        matrix,
        pixels: Some(pixels),
    })
}

/// Loads every puzzle under an external directory, sorted by name.
pub fn load_external(dir: &Path) -> Result<Vec<BenchPuzzle>> {
    let mut entries: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.join("matrix.json").is_file() && p.join("truth.json").is_file())
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| {
            let matrix = load_prediction_matrix(&fs::read_to_string(p.join("matrix.json"))?)?;
            let truth = Assignment::from_json(&fs::read_to_string(p.join("truth.json"))?)?;
            let mut pixels = BTreeMap::new();
            for f in truth.fragments() {
                let file = p.join(crate::fragmenter::fragment_file_name(f));
                if file.is_file() {
                    pixels.insert(f, FragmentPixels::load_png(&file)?);
                }
            }
            let complete = pixels.len() == truth.fragments().len();
            Ok(BenchPuzzle {
                truth,
                matrix,
                pixels: complete.then_some(pixels),
            })
        })
        .collect()
}

/// Result of solving and scoring one puzzle.
#[derive(Clone, Debug, PartialEq)]
pub struct PuzzleOutcome {
    pub solution: Option<Solution>,
    pub report: Option<MetricReport>,
    pub error: Option<String>,
}

fn score(puzzle: &BenchPuzzle, solution: Result<Solution>, tau: f64) -> PuzzleOutcome {
    match solution {
        Ok(solution) => {
            let eval = EvalOptions {
                tau,
                ..Default::default()
            };
            match evaluate(
                &solution.assignment,
                &puzzle.truth,
                puzzle.pixels.as_ref(),
                eval,
            ) {
                Ok(report) => PuzzleOutcome {
                    solution: Some(solution),
                    report: Some(report),
                    error: None,
                },
                Err(e) => PuzzleOutcome {
                    solution: Some(solution),
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        }
        Err(e) => PuzzleOutcome {
            solution: None,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub missing: usize,
    pub outsiders: usize,
    pub puzzles: usize,
    /// Puzzles that could not be solved or scored.
    pub failures: usize,
    pub perfect_rate: f64,
    pub almost_perfect_rate: f64,
    pub well_placed_fraction: f64,
    pub mean_explored_nodes: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_solve_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub theta: f64,
    pub n_puzzles: usize,
    pub cells: Vec<GridCell>,
}

fn summarize(
    missing: usize,
    outsiders: usize,
    outcomes: &[PuzzleOutcome],
    timings: bool,
) -> GridCell {
    let n = outcomes.len();
    if n == 0 {
        return GridCell {
            missing,
            outsiders,
            skipped: Some("no puzzles".into()),
            ..Default::default()
        };
    }
    let reports: Vec<&MetricReport> = outcomes.iter().filter_map(|o| o.report.as_ref()).collect();
    let solutions: Vec<&Solution> = outcomes
        .iter()
        .filter_map(|o| o.solution.as_ref())
        .collect();
    let rate = |pred: &dyn Fn(&MetricReport) -> bool| {
        reports.iter().filter(|r| pred(r)).count() as f64 / n as f64
    };
    let mean_explored = if solutions.is_empty() {
        0.0
    } else {
        solutions
            .iter()
            .map(|s| s.stats.explored_nodes as f64)
            .sum::<f64>()
            / solutions.len() as f64
    };
    let mean_time = (timings && !solutions.is_empty()).then(|| {
        solutions
            .iter()
            .map(|s| s.stats.build_time.unwrap_or(0.0) + s.stats.solve_time.unwrap_or(0.0))
            .sum::<f64>()
            / solutions.len() as f64
    });
    GridCell {
        missing,
        outsiders,
        puzzles: n,
        failures: n - reports.len(),
        perfect_rate: rate(&|r| r.perfect),
        almost_perfect_rate: rate(&|r| r.almost_perfect),
        well_placed_fraction: reports.iter().map(|r| r.well_placed_fraction).sum::<f64>()
            / n as f64,
        mean_explored_nodes: mean_explored,
        mean_solve_time: mean_time,
        skipped: None,
    }
}

type CellPuzzles = ((usize, usize), Result<Vec<BenchPuzzle>>);

/// Puzzles grouped by grid cell, in `(missing, outsiders)` order.
fn grid_puzzles(config: &BenchConfig) -> Result<Vec<CellPuzzles>> {
    let cells: Vec<(usize, usize)> = config
        .missing
        .iter()
        .flat_map(|&m| config.outsiders.iter().map(move |&o| (m, o)))
        .collect();
    match &config.scorer {
        ScorerSource::Synthetic(model) => Ok(cells
            .into_iter()
            .map(|(m, o)| {
                let puzzles = if m > 7 {
                    Err(Error::Config(format!("{m} missing fragments, at most 7")))
                } else {
                    (0..config.n_puzzles)
                        .map(|i| synthetic_puzzle(config, model, m, o, i))
                        .collect()
                };
                ((m, o), puzzles)
            })
            .collect()),
        ScorerSource::External { dir } => {
            let all = load_external(dir)?;
            Ok(cells
                .into_iter()
                .map(|(m, o)| {
                    let mut chosen: Vec<BenchPuzzle> = all
                        .iter()
                        .filter(|p| p.truth.empties.len() == m && p.truth.outsiders().count() == o)
                        .take(config.n_puzzles)
                        .cloned()
                        .collect();
                    chosen.shrink_to_fit();
                    let puzzles = if chosen.is_empty() {
                        Err(Error::Config(
                            "no matching puzzles in the external directory".into(),
                        ))
                    } else {
                        Ok(chosen)
                    };
                    ((m, o), puzzles)
                })
                .collect())
        }
    }
}

/// Solves every puzzle of every cell at `grid_theta` with outsiders enabled.
pub fn run_grid(config: &BenchConfig) -> Result<GridReport> {
    config.validate()?;
    let policy = CutPolicy::new(config.grid_theta, config.reorder)?;
    let options = config.options(true);
    let mut cells = Vec::new();
    for ((m, o), puzzles) in grid_puzzles(config)? {
        let cell = match puzzles {
            Ok(puzzles) => {
                let outcomes = config.execution.map(&puzzles, |p| {
                    score(p, solve_matrix(&p.matrix, &options, &policy), config.tau)
                });
                summarize(m, o, &outcomes, config.timings)
            }
            Err(e) => GridCell {
                missing: m,
                outsiders: o,
                skipped: Some(e.to_string()),
                ..Default::default()
            },
        };
        cells.push(cell);
    }
    Ok(GridReport {
        theta: config.grid_theta,
        n_puzzles: config.n_puzzles,
        cells,
    })
}

impl GridReport {
    pub fn cell(&self, missing: usize, outsiders: usize) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.missing == missing && c.outsiders == outsiders)
    }

    /// Table layout: one row per missing count, one column per outsider
    /// count, values in percent.
    pub fn to_csv(&self, metric: GridMetric) -> String {
        let mut outsiders: Vec<usize> = self.cells.iter().map(|c| c.outsiders).collect();
        outsiders.sort();
        outsiders.dedup();
        let mut missing: Vec<usize> = self.cells.iter().map(|c| c.missing).collect();
        missing.sort();
        missing.dedup();
        let mut out = String::from("missing");
        for o in &outsiders {
            let _ = write!(out, ",outsiders_{o}");
        }
        out.push('\n');
        for m in &missing {
            let _ = write!(out, "{m}");
            for &o in &outsiders {
                match self.cell(*m, o).filter(|c| c.skipped.is_none()) {
                    Some(c) => {
                        let v = match metric {
                            GridMetric::Perfect => c.perfect_rate,
                            GridMetric::AlmostPerfect => c.almost_perfect_rate,
                            GridMetric::WellPlaced => c.well_placed_fraction,
                        };
                        let _ = write!(out, ",{:.1}", 100.0 * v);
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMetric {
    Perfect,
    AlmostPerfect,
    WellPlaced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub theta: f64,
    pub instances: usize,
    /// Instances solved at this threshold and at the baseline.
    pub compared: usize,
    pub explored_nodes: u128,
    /// Explored nodes relative to the baseline threshold.
    pub explored_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_cost_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perfect_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_delta: Option<f64>,
    /// Instances whose cost fell below the baseline cost.
    pub cost_violations: usize,
    /// Instances whose graph exceeded the node budget.
    pub over_budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_solve_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub baseline_theta: f64,
    pub rows: Vec<ThetaRow>,
}

/// Cost, perfect flag and solve time of one solve.
type Solved = (f64, bool, f64);

struct ThetaOutcome {
    explored: u128,
    solved: Option<Solved>,
    over_budget: bool,
}

/// Compares every threshold against the smallest one on the grid puzzles.
///
/// Explored-node counts are exact even when a graph is too large to build;
/// costs and accuracy are compared only where both graphs were solved.
pub fn run_theta_sweep(config: &BenchConfig) -> Result<ThetaReport> {
    config.validate()?;
    let mut thetas = config.thetas.clone();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let options = config.options(true);
    let puzzles: Vec<BenchPuzzle> = grid_puzzles(config)?
        .into_iter()
        .filter_map(|(_, p)| p.ok())
        .flatten()
        .collect();

    let per_puzzle: Vec<Result<Vec<ThetaOutcome>>> = config.execution.map(&puzzles, |p| {
        thetas
            .iter()
            .map(|&theta| {
                let policy = CutPolicy::new(theta, config.reorder)?;
                let explored = explored_node_count(&p.matrix, &options, &policy)?.explored;
                let (solved, over_budget) = match solve_matrix(&p.matrix, &options, &policy) {
                    Ok(s) => {
                        let perfect = p.truth == s.assignment;
                        let time =
                            s.stats.build_time.unwrap_or(0.0) + s.stats.solve_time.unwrap_or(0.0);
                        (Some((s.cost, perfect, time)), false)
                    }
                    Err(Error::NodeBudget { .. }) => (None, true),
                    Err(Error::Infeasible { .. }) => (None, false),
                    Err(e) => return Err(e),
                };
                Ok(ThetaOutcome {
                    explored,
                    solved,
                    over_budget,
                })
            })
            .collect()
    });
    let per_puzzle: Vec<Vec<ThetaOutcome>> = per_puzzle.into_iter().collect::<Result<_>>()?;

    let base_explored: u128 = per_puzzle.iter().map(|o| o[0].explored).sum();
    let rows = thetas
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let pairs: Vec<_> = per_puzzle
                .iter()
                .filter_map(|o| Some((o[0].solved?, o[k].solved?)))
                .collect();
            let compared = pairs.len();
            let mean = |f: &dyn Fn(&(Solved, Solved)) -> f64| {
                (compared > 0).then(|| pairs.iter().map(f).sum::<f64>() / compared as f64)
            };
            let explored: u128 = per_puzzle.iter().map(|o| o[k].explored).sum();
            let solved: Vec<_> = per_puzzle.iter().filter_map(|o| o[k].solved).collect();
            ThetaRow {
                theta,
                instances: per_puzzle.len(),
                compared,
                explored_nodes: explored,
                explored_ratio: explored as f64 / base_explored.max(1) as f64,
                mean_cost_delta: mean(&|(b, c)| c.0 - b.0),
                perfect_rate: (!solved.is_empty())
                    .then(|| solved.iter().filter(|s| s.1).count() as f64 / solved.len() as f64),
                accuracy_delta: mean(&|(b, c)| f64::from(u8::from(c.1)) - f64::from(u8::from(b.1))),
                cost_violations: pairs.iter().filter(|(b, c)| c.0 < b.0 - 1e-9).count(),
                over_budget: per_puzzle.iter().filter(|o| o[k].over_budget).count(),
                mean_solve_time: (config.timings && !solved.is_empty())
                    .then(|| solved.iter().map(|s| s.2).sum::<f64>() / solved.len() as f64),
            }
        })
        .collect();
    Ok(ThetaReport {
        baseline_theta: thetas[0],
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterReport {
    pub puzzles: usize,
    pub known_perfect_rate: f64,
    pub unknown_perfect_rate: f64,
    pub known_well_placed: f64,
    pub unknown_well_placed: f64,
    /// Share of puzzles where the unknown-center search picked the true center.
    pub center_found_rate: f64,
    /// Puzzles without a surviving path; they score zero.
    pub known_infeasible: usize,
    pub unknown_infeasible: usize,
}

#[derive(Clone, Copy, Default)]
struct CenterScore {
    perfect: bool,
    well_placed: f64,
    center_found: bool,
    infeasible: bool,
}

fn center_score(solution: Result<Solution>, truth: &Assignment) -> Result<CenterScore> {
    match solution {
        Ok(s) => {
            let r = evaluate(&s.assignment, truth, None, EvalOptions::default())?;
            Ok(CenterScore {
                perfect: r.perfect,
                well_placed: r.well_placed_fraction,
                center_found: Some(s.center_hypothesis) == truth.center,
                infeasible: false,
            })
        }
        Err(Error::Infeasible { .. } | Error::AllHypothesesInfeasible { .. }) => Ok(CenterScore {
            infeasible: true,
            ..Default::default()
        }),
        Err(e) => Err(e),
    }
}

/// Complete puzzles without outsiders, solved once with the true center and
/// once over every center hypothesis.
pub fn run_center_comparison(config: &BenchConfig) -> Result<CenterReport> {
    config.validate()?;
    let ScorerSource::Synthetic(model) = &config.scorer else {
        return Err(Error::Config(
            "the center comparison needs a synthetic scorer".into(),
        ));
    };
    let policy = CutPolicy::new(config.grid_theta, config.reorder)?;
    let options = config.options(false);
    let results: Vec<Result<(CenterScore, CenterScore)>> =
        config.execution.map_range(config.n_puzzles, |i| {
            let seed = cell_seed(config.seed, 0, 0, i);
            let truth = random_truth(0, 0, &mut rng_for(derive_seed(seed, 0)))?;
            let hypotheses = synthesize_hypotheses(&truth, &model.with_seed(derive_seed(seed, 1)))?;
            let known_matrix = hypotheses
                .iter()
                .find(|m| Some(m.center) == truth.center)
                .expect("true center hypothesis");
            let known = solve_matrix(known_matrix, &options, &policy);
            let unknown =
                solve_unknown_center(&hypotheses, &options, &policy, Execution::Sequential);
            Ok((center_score(known, &truth)?, center_score(unknown, &truth)?))
        });
    let results: Vec<_> = results.into_iter().collect::<Result<_>>()?;
    let n = results.len() as f64;
    let frac =
        |f: &dyn Fn(&(CenterScore, CenterScore)) -> f64| results.iter().map(f).sum::<f64>() / n;
    let flag = |b: bool| f64::from(u8::from(b));
    Ok(CenterReport {
        puzzles: results.len(),
        known_perfect_rate: frac(&|r| flag(r.0.perfect)),
        unknown_perfect_rate: frac(&|r| flag(r.1.perfect)),
        known_well_placed: frac(&|r| r.0.well_placed),
        unknown_well_placed: frac(&|r| r.1.well_placed),
        center_found_rate: frac(&|r| flag(r.1.center_found)),
        known_infeasible: results.iter().filter(|r| r.0.infeasible).count(),
        unknown_infeasible: results.iter().filter(|r| r.1.infeasible).count(),
    })
}
