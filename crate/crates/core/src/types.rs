//! Domain types shared by every stage of the pipeline.
//!
//! Board positions use a fixed raster convention: `0` is the center, `1..=8`
//! are the lateral slots read left to right, top to bottom (top-left, top,
//! top-right, left, right, bottom-left, bottom, bottom-right) and `9` labels
//! a fragment that does not belong to the puzzle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A placement class: board slot `0..=8` or the outsider label `9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct PositionClass(u8);

impl PositionClass {
    pub const CENTER: PositionClass = PositionClass(0);
    pub const OUTSIDER: PositionClass = PositionClass(9);

    pub fn new(code: u8) -> Result<Self> {
        if code <= 9 {
            Ok(PositionClass(code))
        } else {
            Err(Error::Validation(format!(
                "position code {code} is not in 0..=9"
            )))
        }
    }

    /// Lateral slot from a code in `1..=8`.
    pub fn lateral(code: u8) -> Result<Self> {
        if (1..=8).contains(&code) {
            Ok(PositionClass(code))
        } else {
            Err(Error::Validation(format!(
                "lateral position code {code} is not in 1..=8"
            )))
        }
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn is_lateral(self) -> bool {
        (1..=8).contains(&self.0)
    }

    pub fn is_outsider(self) -> bool {
        self.0 == 9
    }

    pub fn is_on_board(self) -> bool {
        self.0 <= 8
    }

    /// All eight lateral slots in code order.
    pub fn laterals() -> impl Iterator<Item = PositionClass> {
        (1..=8).map(PositionClass)
    }

    /// Column and row offsets from the center, each in `-1..=1`.
    /// `None` for the outsider class.
    pub fn offset(self) -> Option<(i8, i8)> {
        match self.0 {
            0 => Some((0, 0)),
            1..=8 => {
                // Raster index over the 3x3 grid, skipping the center cell.
                let raster = if self.0 <= 4 { self.0 - 1 } else { self.0 };
                Some(((raster % 3) as i8 - 1, (raster / 3) as i8 - 1))
            }
            _ => None,
        }
    }

    /// Inverse of [`PositionClass::offset`].
    pub fn from_offset(dx: i8, dy: i8) -> Option<PositionClass> {
        if !(-1..=1).contains(&dx) || !(-1..=1).contains(&dy) {
            return None;
        }
        let raster = ((dy + 1) * 3 + (dx + 1)) as u8;
        Some(PositionClass(match raster {
            4 => 0,
            r if r < 4 => r + 1,
            r => r,
        }))
    }
}

impl TryFrom<i64> for PositionClass {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        u8::try_from(value)
            .ok()
            .and_then(|v| PositionClass::new(v).ok())
            .ok_or_else(|| Error::parse("position", format!("{value} is not in 0..=9")))
    }
}

impl From<PositionClass> for u8 {
    fn from(p: PositionClass) -> u8 {
        p.0
    }
}

impl fmt::Display for PositionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FragmentId(pub u32);

impl fmt::Display for FragmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A complete solution: where every fragment went and which lateral slots
/// were left empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentWire", into = "AssignmentWire")]
pub struct Assignment {
    pub center: Option<FragmentId>,
    pub placements: BTreeMap<FragmentId, PositionClass>,
    pub empties: BTreeSet<PositionClass>,
}

#[derive(Serialize, Deserialize)]
struct PlacementWire {
    fragment: FragmentId,
    position: PositionClass,
}

#[derive(Serialize, Deserialize)]
struct AssignmentWire {
    center: Option<FragmentId>,
    placements: Vec<PlacementWire>,
    #[serde(default)]
    empties: Vec<PositionClass>,
}

impl TryFrom<AssignmentWire> for Assignment {
    type Error = Error;

    fn try_from(wire: AssignmentWire) -> Result<Self> {
        let mut placements = BTreeMap::new();
        for p in wire.placements {
            if placements.insert(p.fragment, p.position).is_some() {
                return Err(Error::parse(
                    "placements",
                    format!("fragment {} placed twice", p.fragment),
                ));
            }
        }
        let assignment = Assignment {
            center: wire.center,
            placements,
            empties: wire.empties.into_iter().collect(),
        };
        assignment.validate()?;
        Ok(assignment)
    }
}

impl From<Assignment> for AssignmentWire {
    fn from(a: Assignment) -> Self {
        AssignmentWire {
            center: a.center,
            placements: a
                .placements
                .into_iter()
                .map(|(fragment, position)| PlacementWire { fragment, position })
                .collect(),
            empties: a.empties.into_iter().collect(),
        }
    }
}

impl Assignment {
    pub fn new(center: Option<FragmentId>) -> Self {
        Assignment {
            center,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut occupied = BTreeMap::new();
        if let Some(center) = self.center {
            if self.placements.contains_key(&center) {
                return Err(Error::Validation(format!(
                    "center fragment {center} also appears in placements"
                )));
            }
            occupied.insert(PositionClass::CENTER, center);
        }
        for (&fragment, &position) in &self.placements {
            if position.is_on_board() {
                if let Some(other) = occupied.insert(position, fragment) {
                    return Err(Error::Validation(format!(
                        "fragments {other} and {fragment} share position {position}"
                    )));
                }
            }
        }
        for &empty in &self.empties {
            if !empty.is_lateral() {
                return Err(Error::Validation(format!(
                    "empty position {empty} is not lateral"
                )));
            }
            if occupied.contains_key(&empty) {
                return Err(Error::Validation(format!(
                    "position {empty} is both empty and occupied"
                )));
            }
        }
        Ok(())
    }

    /// Every fragment mentioned, center included.
    pub fn fragments(&self) -> BTreeSet<FragmentId> {
        self.center
            .into_iter()
            .chain(self.placements.keys().copied())
            .collect()
    }

    /// Occupant of each board slot `0..=8`; `None` marks an empty slot.
    pub fn board(&self) -> [Option<FragmentId>; 9] {
        let mut board = [None; 9];
        board[0] = self.center;
        for (&fragment, &position) in &self.placements {
            if position.is_on_board() {
                board[position.code() as usize] = Some(fragment);
            }
        }
        board
    }

    pub fn position_of(&self, fragment: FragmentId) -> Option<PositionClass> {
        if self.center == Some(fragment) {
            Some(PositionClass::CENTER)
        } else {
            self.placements.get(&fragment).copied()
        }
    }

    pub fn outsiders(&self) -> impl Iterator<Item = FragmentId> + '_ {
        self.placements
            .iter()
            .filter(|(_, p)| p.is_outsider())
            .map(|(&f, _)| f)
    }

    /// Fills `empties` with every lateral slot nobody occupies.
    pub fn mark_unfilled_as_empty(&mut self) {
        let board = self.board();
        self.empties = PositionClass::laterals()
            .filter(|p| board[p.code() as usize].is_none())
            .collect();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assignment serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentRecord {
    pub id: FragmentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

/// The fragment set handed to the solver, with optional ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuzzleInstance {
    pub fragments: Vec<FragmentRecord>,
    pub known_center: Option<FragmentId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Assignment>,
    pub n_missing: usize,
    pub n_outsiders: usize,
}

impl PuzzleInstance {
    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<_> = self.fragments.iter().map(|f| f.id).collect();
        if ids.len() != self.fragments.len() {
            return Err(Error::Validation("duplicate fragment id".into()));
        }
        if self.n_missing > 8 {
            return Err(Error::Validation(format!(
                "{} missing fragments on an 8-slot ring",
                self.n_missing
            )));
        }
        if let Some(center) = self.known_center {
            if !ids.contains(&center) {
                return Err(Error::Validation(format!(
                    "known center {center} is not among the fragments"
                )));
            }
        }
        let genuine_laterals = 8 - self.n_missing;
        let expected =
            usize::from(self.known_center.is_some()) + genuine_laterals + self.n_outsiders;
        if expected != self.fragments.len() {
            return Err(Error::Validation(format!(
                "expected {expected} fragments, found {}",
                self.fragments.len()
            )));
        }
        if let Some(truth) = &self.ground_truth {
            truth.validate()?;
            if truth.fragments() != ids {
                return Err(Error::Validation(
                    "ground truth does not cover the fragment set".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Size and effort figures for one built graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    /// Materialized nodes including source and sink.
    pub nodes: u64,
    pub edges: u64,
    /// Nodes generated while expanding placements (source included, sink not).
    pub explored_nodes: u64,
    /// Layers whose every lateral edge fell under the cut and kept their best edge.
    #[serde(default)]
    pub rescued_layers: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve_time: Option<f64>,
}

impl GraphStats {
    pub fn without_timings(mut self) -> Self {
        self.build_time = None;
        self.solve_time = None;
        self
    }
}
