//! Per-round measurements and their CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregation::ChangeReport;
use crate::error::{Error, Result};
use crate::types::{MessageKind, NodeId, RelaySample};

pub const METRICS_HEADER: &str = "round,energy_nj,cum_energy_nj,dead_nodes,active_nodes,status_msgs,location_msgs,change_msgs,relay_msgs,root_ids";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u32,
    pub energy_nj: f64,
    pub cum_energy_nj: f64,
    pub dead_nodes: u32,
    pub active_nodes: u32,
    pub status_msgs: u64,
    /// Every LOCATION transmission: root announcements, boundary origins and forwards.
    pub location_msgs: u64,
    pub change_msgs: u64,
    pub relay_msgs: u64,
    /// Self-rooted participating nodes at the end of the round, ascending.
    pub root_ids: Vec<NodeId>,
    pub change_reports: Vec<ChangeReport>,
    pub boundary_samples: Vec<(NodeId, Vec<RelaySample>)>,
    /// Nodes that originated a boundary LOCATION this round, ascending.
    pub location_origins: Vec<NodeId>,
    /// Boundary LOCATION transmissions (origins plus forwards).
    pub location_hops: u64,
    pub root_announcements: u64,
    /// Convergecast messages abandoned (sender died, or hop budget exhausted).
    pub dropped_locations: u64,
    /// Nodes that re-rooted because their parent chain looped: a LOCATION came
    /// back to a node that had already forwarded it, or a parent offered a
    /// root the node had recently given up.
    pub loops_broken: u64,
    /// `(node, root)` for every participating node at the end of the round.
    pub assignments: Vec<(NodeId, NodeId)>,
}

impl RoundMetrics {
    pub fn count(&self, kind: MessageKind) -> u64 {
        match kind {
            MessageKind::Status => self.status_msgs,
            MessageKind::Location => self.location_msgs,
            MessageKind::Change => self.change_msgs,
            MessageKind::Relay => self.relay_msgs,
        }
    }

    pub fn total_msgs(&self) -> u64 {
        self.status_msgs + self.location_msgs + self.change_msgs + self.relay_msgs
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub rounds: Vec<RoundMetrics>,
}

impl MetricsSeries {
    pub fn last(&self) -> Option<&RoundMetrics> {
        self.rounds.last()
    }

    pub fn final_cum_energy(&self) -> f64 {
        self.last().map_or(0.0, |r| r.cum_energy_nj)
    }

    pub fn final_dead_nodes(&self) -> u32 {
        self.last().map_or(0, |r| r.dead_nodes)
    }

    /// CSV text with one row per round.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rounds.len() + 1));
        out.push_str(METRICS_HEADER);
        out.push('\n');
        for r in &self.rounds {
            let roots: Vec<String> = r.root_ids.iter().map(|id| id.0.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.round,
                fmt_f64(r.energy_nj),
                fmt_f64(r.cum_energy_nj),
                r.dead_nodes,
                r.active_nodes,
                r.status_msgs,
                r.location_msgs,
                r.change_msgs,
                r.relay_msgs,
                roots.join(";"),
            ));
        }
        out
    }
}

/// Plain decimal with enough digits to read back the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    // `Display` for f64 is the shortest round-tripping decimal and never uses exponents.
    format!("{v}")
}

pub fn write_metrics(series: &MetricsSeries, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(series.to_csv().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads back the columns written by [`write_metrics`].
pub fn read_metrics(path: &Path) -> Result<MetricsSeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if headers != METRICS_HEADER {
        return Err(Error::Metrics {
            path: path.to_path_buf(),
            reason: format!("unexpected header `{headers}`"),
        });
    }
    let bad = |reason: String| Error::Metrics {
        path: path.to_path_buf(),
        reason,
    };
    let mut rounds = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        fn num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad number `{s}`"))
        }
        let root_ids = if field(9).is_empty() {
            Vec::new()
        } else {
            field(9)
                .split(';')
                .map(|s| num::<u32>(s).map(NodeId))
                .collect::<std::result::Result<_, _>>()
                .map_err(bad)?
        };
        rounds.push(RoundMetrics {
            round: num(field(0)).map_err(bad)?,
            energy_nj: num(field(1)).map_err(bad)?,
            cum_energy_nj: num(field(2)).map_err(bad)?,
            dead_nodes: num(field(3)).map_err(bad)?,
            active_nodes: num(field(4)).map_err(bad)?,
            status_msgs: num(field(5)).map_err(bad)?,
            location_msgs: num(field(6)).map_err(bad)?,
            change_msgs: num(field(7)).map_err(bad)?,
            relay_msgs: num(field(8)).map_err(bad)?,
            root_ids,
            ..RoundMetrics::default()
        });
    }
    Ok(MetricsSeries { rounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_root_join() {
        let s = MetricsSeries {
            rounds: vec![RoundMetrics {
                round: 0,
                energy_nj: 1.5,
                cum_energy_nj: 1.5,
                root_ids: vec![NodeId(3), NodeId(10), NodeId(44)],
                ..RoundMetrics::default()
            }],
        };
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(METRICS_HEADER));
        assert_eq!(lines.next(), Some("0,1.5,1.5,0,0,0,0,0,0,3;10;44"));
    }

    #[test]
    fn fixed_decimal() {
        assert_eq!(fmt_f64(1e21), "1000000000000000000000");
        assert_eq!(fmt_f64(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(fmt_f64(0.0), "0");
    }
}
