//! Calibrated stand-in for a trained position classifier.
//!
//! Each row's argmax lands on the true class with probability `accuracy`.
//! The row itself mixes a one-hot on the argmax with a sorted symmetric
//! Dirichlet draw whose largest component also goes to the argmax, so the
//! argmax is never ambiguous and `accuracy = 1` yields one-hot rows.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{MatrixRow, PredictionMatrix, CLASSES};
use crate::types::{Assignment, FragmentId, PositionClass};

/// How the mass left over from the argmax is spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Confusion {
    /// Residual components go to the other classes in random order, and a
    /// wrong argmax is any other class.
    Dirichlet { concentration: f64 },
    /// Residual components go to classes in order of grid distance from the
    /// true slot, and a wrong argmax is a slot adjacent to the true one.
    ConfusableNeighbor { concentration: f64 },
}

impl Default for Confusion {
    fn default() -> Self {
        Confusion::Dirichlet { concentration: 1.0 }
    }
}

impl Confusion {
    fn concentration(self) -> f64 {
        match self {
            Confusion::Dirichlet { concentration }
            | Confusion::ConfusableNeighbor { concentration } => concentration,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerModel {
    /// Probability that a row's argmax is the true class, in (1/9, 1].
    pub accuracy: f64,
    #[serde(default)]
    pub confusion: Confusion,
    #[serde(default)]
    pub seed: u64,
}

impl ScorerModel {
    pub fn new(accuracy: f64, confusion: Confusion, seed: u64) -> Result<Self> {
        let model = ScorerModel {
            accuracy,
            confusion,
            seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.accuracy > 1.0 / 9.0 && self.accuracy <= 1.0) {
            return Err(Error::Domain {
                what: "scorer accuracy must lie in (1/9, 1]",
                value: self.accuracy,
            });
        }
        let c = self.confusion.concentration();
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Domain {
                what: "Dirichlet concentration must be positive",
                value: c,
            });
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Weight of the one-hot part of each row.
    fn sharpness(&self) -> f64 {
        ((self.accuracy - 1.0 / 9.0) / (8.0 / 9.0)).clamp(0.0, 1.0)
    }
}

/// Independent per-task seed derived from a master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A ground truth with fragment 0 at the center, `n_missing` lateral slots
/// left empty and `n_outsiders` foreign fragments. Fragment ids are shuffled
/// so they carry no positional information.
pub fn random_truth(
    n_missing: usize,
    n_outsiders: usize,
    rng: &mut impl Rng,
) -> Result<Assignment> {
    if n_missing > 8 {
        return Err(Error::Config(format!(
            "{n_missing} missing fragments on 8 slots"
        )));
    }
    let mut slots: Vec<PositionClass> = PositionClass::laterals().collect();
    slots.shuffle(rng);
    let mut kept = slots[n_missing..].to_vec();
    kept.sort();
    let lateral_count = kept.len() + n_outsiders;
    let mut ids: Vec<u32> = (1..=lateral_count as u32).collect();
    ids.shuffle(rng);

    let mut truth = Assignment::new(Some(FragmentId(0)));
    let positions = kept
        .into_iter()
        .chain(std::iter::repeat(PositionClass::OUTSIDER));
    for (id, position) in ids.into_iter().zip(positions) {
        truth.placements.insert(FragmentId(id), position);
    }
    truth.mark_unfilled_as_empty();
    Ok(truth)
}

fn class_index(class: PositionClass) -> usize {
    class.code() as usize - 1
}

fn class_at(index: usize) -> PositionClass {
    PositionClass::new(index as u8 + 1).expect("index below 9")
}

/// Grid distance between classes; the outsider class sits beyond every slot.
fn class_distance(a: PositionClass, b: PositionClass) -> u8 {
    match (a.offset(), b.offset()) {
        (Some((ax, ay)), Some((bx, by))) => (ax - bx).unsigned_abs().max((ay - by).unsigned_abs()),
        _ if a == b => 0,
        _ => 3,
    }
}

fn dirichlet(concentration: f64, rng: &mut impl Rng) -> [f64; CLASSES] {
    let gamma = Gamma::new(concentration, 1.0).expect("validated concentration");
    let mut d = [0.0; CLASSES];
    for v in &mut d {
        *v = gamma.sample(rng);
    }
    let sum: f64 = d.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        d.iter_mut().for_each(|v| *v /= sum);
    } else {
        d = [1.0 / CLASSES as f64; CLASSES];
    }
    d
}

fn synth_row(true_class: PositionClass, model: &ScorerModel, rng: &mut impl Rng) -> [f64; CLASSES] {
    let others: Vec<PositionClass> = (0..CLASSES)
        .map(class_at)
        .filter(|&c| c != true_class)
        .collect();
    let neighbor_mode = matches!(model.confusion, Confusion::ConfusableNeighbor { .. });

    let winner = if rng.random::<f64>() < model.accuracy {
        true_class
    } else if neighbor_mode && true_class.is_lateral() {
        let adjacent: Vec<_> = others
            .iter()
            .copied()
            .filter(|&c| class_distance(c, true_class) == 1)
            .collect();
        *adjacent.choose(rng).expect("every slot has neighbors")
    } else if neighbor_mode {
        *others[..8].choose(rng).expect("eight laterals")
    } else {
        *others.choose(rng).expect("eight other classes")
    };

    let mut residual: Vec<PositionClass> = (0..CLASSES)
        .map(class_at)
        .filter(|&c| c != winner)
        .collect();
    residual.shuffle(rng);
    if neighbor_mode {
        // Stable sort keeps the shuffled order within equal distances.
        residual.sort_by_key(|&c| class_distance(c, true_class));
    }

    let mut d = dirichlet(model.confusion.concentration(), rng);
    d.sort_by(|a, b| b.total_cmp(a));
    let lambda = model.sharpness();
    let mut probs = [0.0; CLASSES];
    probs[class_index(winner)] = lambda + (1.0 - lambda) * d[0];
    for (class, &v) in residual.iter().zip(&d[1..]) {
        probs[class_index(*class)] = (1.0 - lambda) * v;
    }
    probs
}

/// Rows for every non-center fragment, ordered by fragment id, with the
/// class each fragment truly belongs to taken from `classes`.
fn rows_for(
    classes: &[(FragmentId, PositionClass)],
    model: &ScorerModel,
    rng: &mut impl Rng,
) -> Vec<MatrixRow> {
    classes
        .iter()
        .map(|&(fragment, class)| MatrixRow {
            fragment,
            probs: synth_row(class, model, rng),
        })
        .collect()
}

/// Prediction matrix conditioned on the true center.
pub fn synthesize(truth: &Assignment, model: &ScorerModel) -> Result<PredictionMatrix> {
    model.validate()?;
    let center = truth
        .center
        .ok_or_else(|| Error::Config("synthesis needs a known center".into()))?;
    let classes: Vec<_> = truth.placements.iter().map(|(&f, &p)| (f, p)).collect();
    if let Some((f, _)) = classes.iter().find(|(_, p)| *p == PositionClass::CENTER) {
        return Err(Error::Config(format!(
            "fragment {f} sits on the center slot"
        )));
    }
    let mut rng = rng_for(model.seed);
    PredictionMatrix::new(center, rows_for(&classes, model, &mut rng))
}

/// One matrix per fragment taken as the center, in fragment id order.
///
/// Under a wrong hypothesis a fragment's class is its offset from the
/// hypothesized center when that offset stays inside the 3x3 window, and the
/// outsider class otherwise. The true center's matrix equals [`synthesize`].
pub fn synthesize_hypotheses(
    truth: &Assignment,
    model: &ScorerModel,
) -> Result<Vec<PredictionMatrix>> {
    let true_center = truth
        .center
        .ok_or_else(|| Error::Config("synthesis needs a known center".into()))?;
    truth
        .fragments()
        .into_iter()
        .map(|c| {
            if c == true_center {
                return synthesize(truth, model);
            }
            let anchor = truth.position_of(c).and_then(|p| p.offset());
            let classes: Vec<_> = truth
                .fragments()
                .into_iter()
                .filter(|&f| f != c)
                .map(|f| {
                    let class = match (anchor, truth.position_of(f).and_then(|p| p.offset())) {
                        (Some((cx, cy)), Some((fx, fy))) => {
                            PositionClass::from_offset(fx - cx, fy - cy)
                                .unwrap_or(PositionClass::OUTSIDER)
                        }
                        _ => PositionClass::OUTSIDER,
                    };
                    (f, class)
                })
                .collect();
            let mut rng = rng_for(derive_seed(model.seed, c.0 as u64 + 1));
            PredictionMatrix::new(c, rows_for(&classes, model, &mut rng))
        })
        .collect()
}

/// Rows that carry no information: every class equally likely.
pub fn uniform_matrix(truth: &Assignment) -> Result<PredictionMatrix> {
    let center = truth
        .center
        .ok_or_else(|| Error::Config("a known center is required".into()))?;
    let rows = truth
        .placements
        .keys()
        .map(|&fragment| MatrixRow {
            fragment,
            probs: [1.0 / CLASSES as f64; CLASSES],
        })
        .collect();
    PredictionMatrix::new(center, rows)
}
