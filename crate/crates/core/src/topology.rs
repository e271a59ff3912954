//! Sensor placement, relay placement and radio adjacency.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::types::{Location, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub sensors: Vec<(NodeId, Location)>,
    pub relays: Vec<Location>,
    /// Neighbours within radio range, indexed by node id, ascending.
    pub adjacency: Vec<Vec<NodeId>>,
    pub comm_range: f64,
}

/// Relays sit at the centres of a 3×3 partition of the patch.
pub const RELAY_GRID: usize = 3;

/// Lattice placement with uniform per-axis jitter; ids in row-major order.
pub fn build_topology<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Topology {
    let p = &config.patch;
    let (cols, rows) = (config.columns(), config.rows());
    let mut sensors = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let id = NodeId((row * cols + col) as u32);
            let mut jitter = || {
                if p.placement_jitter > 0.0 {
                    rng.gen_range(-p.placement_jitter..=p.placement_jitter)
                } else {
                    0.0
                }
            };
            let jx = jitter();
            let jy = jitter();
            let x = ((col as f64 + 0.5) * p.grid_spacing + jx).clamp(0.0, p.width);
            let y = ((row as f64 + 0.5) * p.grid_spacing + jy).clamp(0.0, p.height);
            sensors.push((id, Location::new(x, y)));
        }
    }

    // Only lattice cells within `reach` rows/columns can be in range.
    let reach = ((p.comm_range + 2.0 * p.placement_jitter) / p.grid_spacing).ceil() as isize;
    let mut adjacency = vec![Vec::new(); sensors.len()];
    for row in 0..rows as isize {
        for col in 0..cols as isize {
            let i = (row as usize) * cols + col as usize;
            let a = sensors[i].1;
            for r2 in (row - reach).max(0)..=(row + reach).min(rows as isize - 1) {
                for c2 in (col - reach).max(0)..=(col + reach).min(cols as isize - 1) {
                    let j = (r2 as usize) * cols + c2 as usize;
                    if j != i && a.distance(&sensors[j].1) <= p.comm_range {
                        adjacency[i].push(NodeId(j as u32));
                    }
                }
            }
            adjacency[i].sort_unstable();
        }
    }

    let relays = (0..RELAY_GRID)
        .flat_map(|r| {
            (0..RELAY_GRID).map(move |c| {
                Location::new(
                    (c as f64 + 0.5) * p.width / RELAY_GRID as f64,
                    (r as f64 + 0.5) * p.height / RELAY_GRID as f64,
                )
            })
        })
        .collect();

    Topology {
        sensors,
        relays,
        adjacency,
        comm_range: p.comm_range,
    }
}

impl Topology {
    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn location(&self, id: NodeId) -> Location {
        self.sensors[id.index()].1
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    /// Nearest relay and its distance in cm.
    pub fn nearest_relay(&self, loc: &Location) -> (Location, f64) {
        self.relays
            .iter()
            .map(|r| (*r, r.distance(loc)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((*loc, 0.0))
    }
}
