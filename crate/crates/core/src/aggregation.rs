//! Root-side boundary bookkeeping: angular binning of reported boundary points,
//! per-direction change detection and periodic sampling for the relay.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::ThresholdMode;
use crate::protocol::NodeState;
use crate::types::{ChangeSign, Location, Message, RelaySample};

/// Bin index for an angle in `[0, 2π)` measured from the positive x axis.
pub fn bin_for_angle(angle: f64, max_dir: u32, dof: f64) -> usize {
    let full = PI * dof;
    let mut a = angle.rem_euclid(full);
    if a >= full {
        a = 0.0;
    }
    let bin = (a * f64::from(max_dir) / full).round() as usize;
    if bin >= max_dir as usize {
        0
    } else {
        bin
    }
}

/// Angular bin and distance of `boundary` as seen from `root`, or `None` when
/// the two coincide.
pub fn quantize_angle(
    root: &Location,
    boundary: &Location,
    max_dir: u32,
    dof: f64,
) -> Option<(usize, f64)> {
    let (dx, dy) = (boundary.x - root.x, boundary.y - root.y);
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let mut angle = dy.atan2(dx);
    if angle < 0.0 {
        angle += 2.0 * PI;
    }
    Some((bin_for_angle(angle, max_dir, dof), dx.hypot(dy)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEntry {
    pub loc: Location,
    pub dist: f64,
    /// Round in which the entry was last written.
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeReport {
    pub root_loc: Location,
    pub boundary_loc: Location,
    pub sign: ChangeSign,
    pub round: u32,
    pub bin: usize,
}

impl ChangeReport {
    pub fn to_message(&self, sender: crate::types::NodeId) -> Message {
        Message::Change {
            sender,
            root_loc: self.root_loc,
            boundary_loc: self.boundary_loc,
            sign: self.sign,
        }
    }
}

/// Angle-binned store of the boundary as seen from one root.
///
/// Reports arriving during a round are collected per bin, keeping the point
/// farthest from the root. [`BoundaryLedger::close_round`] then compares each
/// collected point with the one stored from the previous round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLedger {
    pub root_loc: Location,
    pub max_dir: u32,
    pub dof: f64,
    pub bins: Vec<Option<BinEntry>>,
    /// Outermost point per bin reported in the open round.
    pub pending: Vec<Option<BinEntry>>,
}

impl BoundaryLedger {
    pub fn new(root_loc: Location, max_dir: u32, dof: f64) -> Self {
        Self {
            root_loc,
            max_dir,
            dof,
            bins: vec![None; max_dir as usize],
            pending: vec![None; max_dir as usize],
        }
    }

    pub fn filled(&self) -> impl Iterator<Item = (usize, &BinEntry)> {
        self.bins
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.as_ref().map(|b| (i, b)))
    }

    /// Collects a boundary point reported in `round`. Returns its bin, or
    /// `None` when the point coincides with the root.
    pub fn ingest_boundary(&mut self, boundary: Location, round: u32) -> Option<usize> {
        let (bin, dist) = quantize_angle(&self.root_loc, &boundary, self.max_dir, self.dof)?;
        let slot = &mut self.pending[bin];
        if slot.is_none_or(|p| dist > p.dist) {
            *slot = Some(BinEntry {
                loc: boundary,
                dist,
                round,
            });
        }
        Some(bin)
    }

    /// Compares every bin collected this round with its stored distance,
    /// stores the new point, and returns the reports in ascending bin order.
    /// A bin seen for the first time is stored silently.
    pub fn close_round(&mut self, threshold: f64, mode: ThresholdMode) -> Vec<ChangeReport> {
        let mut reports = Vec::new();
        for (bin, slot) in self.pending.iter_mut().enumerate() {
            let Some(entry) = slot.take() else { continue };
            if let Some(prev) = self.bins[bin] {
                if let Some(sign) = classify(entry.dist, prev.dist, threshold, mode) {
                    reports.push(ChangeReport {
                        root_loc: self.root_loc,
                        boundary_loc: entry.loc,
                        sign,
                        round: entry.round,
                        bin,
                    });
                }
            }
            self.bins[bin] = Some(entry);
        }
        reports
    }

    /// Uniform-in-angle sample of the filled bins, every ⌈filled/sample_count⌉-th
    /// one in ascending bin order. `None` off-interval or when nothing is stored.
    pub fn periodic_relay_report(
        &self,
        t: u32,
        t_interval: u32,
        sample_count: u32,
    ) -> Option<Vec<RelaySample>> {
        if t_interval == 0 || !t.is_multiple_of(t_interval) {
            return None;
        }
        let filled: Vec<(usize, &BinEntry)> = self.filled().collect();
        if filled.is_empty() {
            return None;
        }
        let stride = filled.len().div_ceil(sample_count.max(1) as usize);
        Some(
            filled
                .iter()
                .step_by(stride)
                .map(|(bin, e)| RelaySample {
                    bin: *bin as u8,
                    loc: e.loc,
                    dist: e.dist,
                })
                .collect(),
        )
    }
}

/// Change sign for a bin whose distance went from `d_old` to `d_new`.
pub fn classify(d_new: f64, d_old: f64, threshold: f64, mode: ThresholdMode) -> Option<ChangeSign> {
    let (grow, shrink) = match mode {
        ThresholdMode::Band => ((1.0 + threshold) * d_old, (1.0 - threshold) * d_old),
        ThresholdMode::Literal => (threshold * d_old, threshold * d_old),
    };
    if d_new > grow {
        Some(ChangeSign::Growth)
    } else if d_new < shrink {
        Some(ChangeSign::Shrinkage)
    } else {
        None
    }
}

/// The root's per-round LOCATION carrying its own id and position.
pub fn root_self_announce(node: &NodeState) -> Option<Message> {
    (node.is_root() && node.participates()).then_some(Message::Location {
        sender: node.id,
        loc: node.loc,
        parent: node.id,
    })
}
