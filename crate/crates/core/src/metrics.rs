//! Perfect reassembly, well-placed fraction and the almost-perfect metric.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Assignment, FragmentId, PositionClass};

/// Swaps between fragments closer than this (mean absolute difference on
/// the 0-255 scale) do not count as errors.
pub const DEFAULT_TAU: f64 = 20.0;

pub const CANONICAL_SIDE: u32 = 96;

/// 8-bit RGB pixels, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentPixels {
    pub width: u32,
    pub height: u32,
    pub values: Vec<u8>,
}

impl FragmentPixels {
    pub fn new(width: u32, height: u32, values: Vec<u8>) -> Result<Self> {
        if values.len() != (width * height * 3) as usize {
            return Err(Error::Metric(format!(
                "{} values for a {width}x{height} RGB fragment",
                values.len()
            )));
        }
        Ok(FragmentPixels {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let values = rgb
            .iter()
            .copied()
            .cycle()
            .take((width * height * 3) as usize)
            .collect();
        FragmentPixels {
            width,
            height,
            values,
        }
    }

    pub fn from_image(image: &image::RgbImage) -> Self {
        FragmentPixels {
            width: image.width(),
            height: image.height(),
            values: image.as_raw().clone(),
        }
    }

    pub fn load_png(path: &std::path::Path) -> Result<Self> {
        Ok(Self::from_image(&image::open(path)?.to_rgb8()))
    }
}

/// How two fragments are compared.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelNorm {
    #[default]
    MeanAbsolute,
    RootMeanSquare,
}

pub fn pixel_distance(a: &FragmentPixels, b: &FragmentPixels) -> Result<f64> {
    pixel_distance_with(a, b, PixelNorm::MeanAbsolute)
}

pub fn pixel_distance_with(a: &FragmentPixels, b: &FragmentPixels, norm: PixelNorm) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) || a.values.len() != b.values.len() {
        return Err(Error::Metric(format!(
            "cannot compare {}x{} with {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if a.values.is_empty() {
        return Ok(0.0);
    }
    let n = a.values.len() as f64;
    let diffs = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| (x as f64 - y as f64).abs());
    Ok(match norm {
        PixelNorm::MeanAbsolute => diffs.sum::<f64>() / n,
        PixelNorm::RootMeanSquare => (diffs.map(|d| d * d).sum::<f64>() / n).sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionDetail {
    pub position: PositionClass,
    pub predicted: Option<FragmentId>,
    pub truth: Option<FragmentId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub perfect: bool,
    pub well_placed_fraction: f64,
    pub almost_perfect: bool,
    pub per_position_detail: Vec<PositionDetail>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub tau: f64,
    pub norm: PixelNorm,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            tau: DEFAULT_TAU,
            norm: PixelNorm::MeanAbsolute,
        }
    }
}

/// Scores a predicted assignment against the truth.
///
/// Without pixels the almost-perfect flag equals the perfect flag. With
/// pixels, a mismatched slot is excused only when both the predicted and the
/// true occupant are genuine fragments closer than `tau`; any outsider
/// mislabel or empty-slot confusion is never excused.
pub fn evaluate(
    predicted: &Assignment,
    truth: &Assignment,
    pixels: Option<&BTreeMap<FragmentId, FragmentPixels>>,
    options: EvalOptions,
) -> Result<MetricReport> {
    if predicted.fragments() != truth.fragments() {
        return Err(Error::Config(
            "predicted and true assignments cover different fragments".into(),
        ));
    }
    let pred_board = predicted.board();
    let true_board = truth.board();
    let same_outsiders = predicted.outsiders().eq(truth.outsiders());

    let matched = pred_board
        .iter()
        .zip(&true_board)
        .filter(|(a, b)| a == b)
        .count();
    let perfect = matched == 9 && same_outsiders;

    fn lookup(
        map: &BTreeMap<FragmentId, FragmentPixels>,
        f: FragmentId,
    ) -> Result<&FragmentPixels> {
        map.get(&f)
            .ok_or_else(|| Error::Config(format!("no pixels for fragment {f}")))
    }

    let mut details = Vec::with_capacity(9);
    let mut excusable = same_outsiders;
    for slot in 0..9 {
        let position = PositionClass::new(slot as u8).expect("slot below 9");
        let (p, t) = (pred_board[slot], true_board[slot]);
        let mut distance = None;
        if p != t {
            match (p, t, pixels) {
                (Some(pf), Some(tf), Some(map)) => {
                    let d = pixel_distance_with(lookup(map, pf)?, lookup(map, tf)?, options.norm)?;
                    distance = Some(d);
                    excusable &= d < options.tau;
                }
                _ => excusable = false,
            }
        }
        details.push(PositionDetail {
            position,
            predicted: p,
            truth: t,
            pixel_distance: distance,
        });
    }

    let almost_perfect = perfect || (pixels.is_some() && excusable);
    Ok(MetricReport {
        perfect,
        well_placed_fraction: matched as f64 / 9.0,
        almost_perfect,
        per_position_detail: details,
    })
}
