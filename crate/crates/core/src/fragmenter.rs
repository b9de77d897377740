//! Cuts eroded puzzle instances out of source images.
//!
//! A square of side `3 * (fragment_size + margin)` is cropped from the
//! image and split into a 3x3 grid of cells. Inside each cell the fragment
//! is cropped at a uniform offset in `0..=margin` on both axes, so the gap
//! between neighbouring fragments ranges over `0..=2 * margin` with mean
//! `margin`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use image::{imageops, DynamicImage, RgbImage};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::FragmentPixels;
use crate::synth::{derive_seed, rng_for};
use crate::types::{Assignment, FragmentId, FragmentRecord, PositionClass, PuzzleInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentationSpec {
    pub fragment_size: u32,
    pub margin: u32,
    pub seed: u64,
    pub n_missing: usize,
    pub n_outsiders: usize,
    /// Allow several outsiders from the same source image.
    #[serde(default)]
    pub multiple_per_source: bool,
}

impl Default for FragmentationSpec {
    fn default() -> Self {
        FragmentationSpec {
            fragment_size: 96,
            margin: 48,
            seed: 0,
            n_missing: 0,
            n_outsiders: 0,
            multiple_per_source: false,
        }
    }
}

impl FragmentationSpec {
    pub fn cell(&self) -> u32 {
        self.fragment_size + self.margin
    }

    /// Side of the square cropped from the source image.
    pub fn square_side(&self) -> u32 {
        3 * self.cell()
    }
}

/// Where a fragment was cut from, in source image coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRect {
    pub x: u32,
    pub y: u32,
    pub size: u32,
}

impl SourceRect {
    pub fn overlaps(&self, other: &SourceRect) -> bool {
        self.x < other.x + other.size
            && other.x < self.x + self.size
            && self.y < other.y + other.size
            && other.y < self.y + self.size
    }
}

#[derive(Clone, Debug)]
pub struct Fragmentation {
    pub instance: PuzzleInstance,
    pub truth: Assignment,
    pub fragments: BTreeMap<FragmentId, RgbImage>,
    /// Rectangles of the genuine fragments in the main image.
    pub source_rects: BTreeMap<FragmentId, SourceRect>,
}

fn crop_square(
    image: &RgbImage,
    spec: &FragmentationSpec,
    rng: &mut impl Rng,
) -> Result<(u32, u32)> {
    let side = spec.square_side();
    if image.width() < side || image.height() < side {
        return Err(Error::ImageSize {
            required: side,
            width: image.width(),
            height: image.height(),
        });
    }
    Ok((
        rng.random_range(0..=image.width() - side),
        rng.random_range(0..=image.height() - side),
    ))
}

/// Fragment rectangle inside grid cell `(col, row)` of a square at `origin`.
fn cell_fragment(
    origin: (u32, u32),
    col: u32,
    row: u32,
    spec: &FragmentationSpec,
    rng: &mut impl Rng,
) -> SourceRect {
    let cell = spec.cell();
    SourceRect {
        x: origin.0 + col * cell + rng.random_range(0..=spec.margin),
        y: origin.1 + row * cell + rng.random_range(0..=spec.margin),
        size: spec.fragment_size,
    }
}

fn cut(image: &RgbImage, rect: SourceRect) -> RgbImage {
    imageops::crop_imm(image, rect.x, rect.y, rect.size, rect.size).to_image()
}

fn grid_cell(position: PositionClass) -> (u32, u32) {
    let (dx, dy) = position.offset().expect("board position");
    ((dx + 1) as u32, (dy + 1) as u32)
}

/// Cuts one instance. Fragment 0 is the center; other ids are shuffled.
pub fn fragment_image(
    image: &DynamicImage,
    spec: &FragmentationSpec,
    outsider_sources: &[DynamicImage],
) -> Result<Fragmentation> {
    if spec.n_missing > 7 {
        return Err(Error::Config(format!(
            "{} missing fragments, at most 7",
            spec.n_missing
        )));
    }
    if spec.n_outsiders > 0 && outsider_sources.is_empty() {
        return Err(Error::Config(
            "outsiders requested without source images".into(),
        ));
    }
    if spec.n_outsiders > outsider_sources.len() && !spec.multiple_per_source {
        return Err(Error::Config(format!(
            "{} outsiders need as many source images, got {}",
            spec.n_outsiders,
            outsider_sources.len()
        )));
    }
    let mut rng = rng_for(spec.seed);
    let main = image.to_rgb8();
    let origin = crop_square(&main, spec, &mut rng)?;

    let mut cells: Vec<(PositionClass, SourceRect)> = std::iter::once(PositionClass::CENTER)
        .chain(PositionClass::laterals())
        .map(|p| {
            let (col, row) = grid_cell(p);
            (p, cell_fragment(origin, col, row, spec, &mut rng))
        })
        .collect();

    let mut laterals: Vec<PositionClass> = PositionClass::laterals().collect();
    laterals.shuffle(&mut rng);
    let missing: Vec<PositionClass> = laterals[..spec.n_missing].to_vec();
    cells.retain(|(p, _)| !missing.contains(p));

    let mut outsiders = Vec::with_capacity(spec.n_outsiders);
    for k in 0..spec.n_outsiders {
        let source = outsider_sources[k % outsider_sources.len()].to_rgb8();
        let o = crop_square(&source, spec, &mut rng)?;
        let (col, row) = *[
            (0, 0),
            (1, 0),
            (2, 0),
            (0, 1),
            (1, 1),
            (2, 1),
            (0, 2),
            (1, 2),
            (2, 2),
        ]
        .choose(&mut rng)
        .expect("nine cells");
        outsiders.push(cut(&source, cell_fragment(o, col, row, spec, &mut rng)));
    }

    let lateral_count = cells.len() - 1 + outsiders.len();
    let mut ids: Vec<u32> = (1..=lateral_count as u32).collect();
    ids.shuffle(&mut rng);

    let mut truth = Assignment::new(Some(FragmentId(0)));
    let mut fragments = BTreeMap::new();
    let mut source_rects = BTreeMap::new();
    let mut next_id = ids.into_iter().map(FragmentId);
    for (position, rect) in cells {
        let id = if position == PositionClass::CENTER {
            FragmentId(0)
        } else {
            let id = next_id.next().expect("enough ids");
            truth.placements.insert(id, position);
            id
        };
        fragments.insert(id, cut(&main, rect));
        source_rects.insert(id, rect);
    }
    for fragment in outsiders {
        let id = next_id.next().expect("enough ids");
        truth.placements.insert(id, PositionClass::OUTSIDER);
        fragments.insert(id, fragment);
    }
    truth.mark_unfilled_as_empty();

    let instance = PuzzleInstance {
        fragments: fragments
            .keys()
            .map(|&id| FragmentRecord {
                id,
                file: Some(fragment_file_name(id)),
            })
            .collect(),
        known_center: Some(FragmentId(0)),
        ground_truth: None,
        n_missing: spec.n_missing,
        n_outsiders: spec.n_outsiders,
    };
    Ok(Fragmentation {
        instance,
        truth,
        fragments,
        source_rects,
    })
}

/// Fragments several images, each with its own seed derived from `spec.seed`.
pub fn fragment_batch(
    images: &[DynamicImage],
    spec: &FragmentationSpec,
    outsider_sources: &[DynamicImage],
    exec: Execution,
) -> Vec<Result<Fragmentation>> {
    exec.map_range(images.len(), |i| {
        let task = FragmentationSpec {
            seed: derive_seed(spec.seed, i as u64),
            ..spec.clone()
        };
        fragment_image(&images[i], &task, outsider_sources)
    })
}

pub fn fragment_file_name(id: FragmentId) -> String {
    format!("frag_{id}.png")
}

/// Decodes an image file; the format is taken from its contents.
pub fn load_image(path: &Path) -> Result<DynamicImage> {
    Ok(image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?)
}

/// Reads `frag_<id>.png` for every listed fragment.
pub fn load_fragment_pixels(
    dir: &Path,
    ids: impl IntoIterator<Item = FragmentId>,
) -> Result<BTreeMap<FragmentId, FragmentPixels>> {
    ids.into_iter()
        .map(|id| {
            Ok((
                id,
                FragmentPixels::load_png(&dir.join(fragment_file_name(id)))?,
            ))
        })
        .collect()
}

impl Fragmentation {
    /// Writes `frag_<id>.png`, `truth.json` and `instance.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (id, fragment) in &self.fragments {
            fragment
                .save_with_format(dir.join(fragment_file_name(*id)), image::ImageFormat::Png)?;
        }
        fs::write(dir.join("truth.json"), self.truth.to_json())?;
        fs::write(
            dir.join("instance.json"),
            serde_json::to_string_pretty(&self.instance)?,
        )?;
        Ok(())
    }
}
