//! Empirical message-complexity counters checked against graph-theoretic
//! bounds recomputed from the topology.
//!
//! A *static window* is a maximal run of rounds with an unchanged set of
//! participating sensors. Inside a window each connected component should
//! settle on one root within its hop diameter `D`, costing about `N·D` STATUS
//! broadcasts, and once settled a round's LOCATION traffic should stay within
//! `Σ D_c·p_c`, where `p_c` is the number of boundary sensors in component `c`.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::metrics::MetricsSeries;
use crate::topology::Topology;
use crate::types::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentConvergence {
    /// Smallest member id.
    pub first: NodeId,
    pub size: usize,
    /// Hop diameter over participating sensors.
    pub diameter: u32,
    /// Rounds from the start of the window until every member agreed on one
    /// in-component root for the rest of the window.
    pub converged_after: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    pub start: u32,
    pub len: u32,
    pub nodes: usize,
    pub components: Vec<ComponentConvergence>,
    /// STATUS broadcasts from the window start until its slowest component settled.
    pub status_to_converge: u64,
    /// `N · D` with `D` the largest component diameter in the window.
    pub status_bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationRound {
    pub round: u32,
    pub hops: u64,
    /// Sensors with at least one non-participating radio neighbour, roots excluded.
    pub boundary_nodes: usize,
    /// `Σ D_c · p_c` over the round's components.
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub slack: f64,
    pub windows: Vec<WindowReport>,
    /// Settled rounds only: inside a window, after every component converged.
    pub location_rounds: Vec<LocationRound>,
}

impl ComplexityReport {
    /// Descriptions of every counter that exceeds `slack` times its bound.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for w in &self.windows {
            for c in &w.components {
                if let Some(k) = c.converged_after {
                    if f64::from(k) > self.slack * f64::from(c.diameter.max(1)) {
                        out.push(format!(
                            "window at round {}: component of node {} took {k} rounds, diameter {}",
                            w.start, c.first.0, c.diameter
                        ));
                    }
                }
            }
            if w.status_to_converge as f64 > self.slack * w.status_bound.max(1) as f64 {
                out.push(format!(
                    "window at round {}: {} STATUS messages to converge, N·D = {}",
                    w.start, w.status_to_converge, w.status_bound
                ));
            }
        }
        for r in &self.location_rounds {
            if r.hops as f64 > self.slack * r.bound as f64 {
                out.push(format!(
                    "round {}: {} LOCATION hops, D·p bound {}",
                    r.round, r.hops, r.bound
                ));
            }
        }
        out
    }

    pub fn within_slack(&self) -> bool {
        self.violations().is_empty()
    }

    /// Largest observed `counter / bound` ratio for LOCATION hops.
    pub fn worst_location_ratio(&self) -> f64 {
        self.location_rounds
            .iter()
            .filter(|r| r.bound > 0)
            .map(|r| r.hops as f64 / r.bound as f64)
            .fold(0.0, f64::max)
    }

    /// Largest observed `STATUS / (N·D)` ratio over converged windows.
    pub fn worst_status_ratio(&self) -> f64 {
        self.windows
            .iter()
            .filter(|w| {
                w.status_bound > 0 && w.components.iter().all(|c| c.converged_after.is_some())
            })
            .map(|w| w.status_to_converge as f64 / w.status_bound as f64)
            .fold(0.0, f64::max)
    }
}

/// Connected components of the participating sensors, each sorted ascending,
/// ordered by smallest member.
pub fn components(topology: &Topology, members: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut inside = vec![false; topology.len()];
    for m in members {
        inside[m.index()] = true;
    }
    let mut seen = vec![false; topology.len()];
    let mut out = Vec::new();
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    for &start in &sorted {
        if seen[start.index()] {
            continue;
        }
        seen[start.index()] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in topology.neighbors(u) {
                if inside[v.index()] && !seen[v.index()] {
                    seen[v.index()] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Hop diameter of a connected node set (all-pairs BFS).
pub fn hop_diameter(topology: &Topology, comp: &[NodeId]) -> u32 {
    let mut inside = vec![false; topology.len()];
    for m in comp {
        inside[m.index()] = true;
    }
    let mut dist = vec![u32::MAX; topology.len()];
    let mut best = 0;
    for &s in comp {
        for m in comp {
            dist[m.index()] = u32::MAX;
        }
        dist[s.index()] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.index()];
            best = best.max(d);
            for &v in topology.neighbors(u) {
                if inside[v.index()] && dist[v.index()] == u32::MAX {
                    dist[v.index()] = d + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    best
}

/// Participating sensors with at least one radio neighbour outside `members`.
pub fn boundary_oracle(topology: &Topology, members: &[NodeId]) -> Vec<NodeId> {
    let mut inside = vec![false; topology.len()];
    for m in members {
        inside[m.index()] = true;
    }
    let mut out: Vec<NodeId> = members
        .iter()
        .copied()
        .filter(|&m| topology.neighbors(m).iter().any(|n| !inside[n.index()]))
        .collect();
    out.sort_unstable();
    out
}

/// Builds the report for a finished run.
pub fn complexity_counters(
    series: &MetricsSeries,
    topology: &Topology,
    slack: f64,
) -> ComplexityReport {
    let rounds = &series.rounds;
    let members: Vec<Vec<NodeId>> = rounds
        .iter()
        .map(|r| {
            let mut m: Vec<NodeId> = r.assignments.iter().map(|a| a.0).collect();
            m.sort_unstable();
            m
        })
        .collect();

    let mut windows = Vec::new();
    let mut location_rounds = Vec::new();
    let mut start = 0;
    while start < rounds.len() {
        let mut end = start + 1;
        while end < rounds.len() && members[end] == members[start] {
            end += 1;
        }
        if !members[start].is_empty() {
            let comps = components(topology, &members[start]);
            let mut reports = Vec::new();
            let mut diam = BTreeMap::new();
            for comp in &comps {
                let d = hop_diameter(topology, comp);
                diam.insert(comp[0], d);
                let converged = settled_from(rounds, start, end, comp);
                reports.push(ComponentConvergence {
                    first: comp[0],
                    size: comp.len(),
                    diameter: d,
                    converged_after: converged.map(|t| (t - start + 1) as u32),
                });
            }
            let all_settled: Option<usize> = reports
                .iter()
                .map(|c| c.converged_after.map(|k| start + k as usize))
                .collect::<Option<Vec<_>>>()
                .map(|v| v.into_iter().max().unwrap_or(start));
            let max_d = diam.values().copied().max().unwrap_or(0);
            let status_to_converge = match all_settled {
                Some(last) => rounds[start..last].iter().map(|r| r.status_msgs).sum(),
                None => rounds[start..end].iter().map(|r| r.status_msgs).sum(),
            };
            windows.push(WindowReport {
                start: rounds[start].round,
                len: (end - start) as u32,
                nodes: members[start].len(),
                components: reports,
                status_to_converge,
                status_bound: members[start].len() as u64 * u64::from(max_d),
            });

            if let Some(first_settled) = all_settled {
                let boundary = boundary_oracle(topology, &members[start]);
                for r in &rounds[first_settled..end] {
                    let roots: Vec<NodeId> = r.root_ids.clone();
                    let mut bound = 0u64;
                    let mut count = 0usize;
                    for comp in &comps {
                        let p = boundary
                            .iter()
                            .filter(|b| {
                                comp.binary_search(b).is_ok() && roots.binary_search(b).is_err()
                            })
                            .count();
                        count += p;
                        bound += u64::from(diam[&comp[0]]) * p as u64;
                    }
                    location_rounds.push(LocationRound {
                        round: r.round,
                        hops: r.location_hops,
                        boundary_nodes: count,
                        bound,
                    });
                }
            }
        }
        start = end;
    }
    ComplexityReport {
        slack,
        windows,
        location_rounds,
    }
}

/// First round index in `[start, end)` from which every member of `comp`
/// reports the same root, that root is itself a member, and this holds to
/// the end of the window.
fn settled_from(
    rounds: &[crate::metrics::RoundMetrics],
    start: usize,
    end: usize,
    comp: &[NodeId],
) -> Option<usize> {
    let agreed = |i: usize| -> bool {
        let a = &rounds[i].assignments;
        let root_of = |n: NodeId| a.binary_search_by_key(&n, |x| x.0).ok().map(|k| a[k].1);
        let Some(root) = root_of(comp[0]) else {
            return false;
        };
        comp.binary_search(&root).is_ok() && comp.iter().all(|&n| root_of(n) == Some(root))
    };
    let mut first = None;
    for i in (start..end).rev() {
        if agreed(i) {
            first = Some(i);
        } else {
            break;
        }
    }
    first
}
