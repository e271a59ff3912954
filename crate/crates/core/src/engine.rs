//! Synchronous round engine.
//!
//! Every round runs seven phases in a fixed order: activity update, STATUS and
//! root announcements, delivery, border checks, LOCATION convergecast with root
//! ingestion, relay reporting, and metrics. Within a phase nodes act in
//! ascending id order, so a `(config, seed)` pair fixes every output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{root_self_announce, BoundaryLedger};
use crate::config::{Scheme, SimConfig};
use crate::error::ConfigError;
use crate::metrics::{MetricsSeries, RoundMetrics};
use crate::protocol::{
    BorderOutcome, ElectionRule, ForwardAction, NodeState, ProtocolParams, StatusOutcome,
};
use crate::radio::{cm_to_m, debit, rx_energy, tx_energy};
use crate::topology::{build_topology, Topology};
use crate::types::{message_bits, EnergyBudget, Location, Message, MessageKind, NodeId};
use crate::wound::Shape;

/// One radio emission as accounted by the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxRecord {
    pub round: u32,
    pub kind: MessageKind,
    pub sender: NodeId,
    pub bits: u64,
    /// Distance the transmitter drives its amplifier for, in metres.
    pub distance_m: f64,
    /// Sensors that received (and paid for) the message. Empty for relay uplinks.
    pub receivers: Vec<NodeId>,
    /// Transmit plus receive energy charged for this emission.
    pub energy_nj: f64,
}

pub struct SimState {
    pub config: SimConfig,
    pub topology: Topology,
    pub nodes: Vec<NodeState>,
    /// Index of the next round to execute.
    pub round: u32,
    pub cum_energy: f64,
    /// Evaluate the wound at this fixed round instead of the current one.
    pub frozen_wound: Option<u32>,
    pub record_log: bool,
    pub log: Vec<TxRecord>,
    params: ProtocolParams,
    pending: Vec<Message>,
}

#[derive(Debug, Clone, Copy)]
struct Emission {
    bits: u64,
    d: f64,
    tx: f64,
}

#[derive(Default)]
struct RoundAcc {
    m: RoundMetrics,
}

impl SimState {
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
        let topology = build_topology(&config, &mut rng);
        Ok(Self::with_topology(config, topology))
    }

    /// State over a prebuilt topology; every node starts asleep with `initial_energy`.
    pub fn with_topology(config: SimConfig, topology: Topology) -> Self {
        let nodes = topology
            .sensors
            .iter()
            .map(|(id, loc)| {
                NodeState::new(
                    *id,
                    *loc,
                    EnergyBudget::new(config.initial_energy),
                    topology.neighbors(*id),
                )
            })
            .collect();
        let rule = match config.run.scheme {
            Scheme::WoundOnlyStatic => ElectionRule::IdOnly,
            Scheme::Proposed | Scheme::AllActive => ElectionRule::EnergyThenId,
        };
        let q = &config.protocol;
        let params = ProtocolParams::new(q.recharge, q.alive_cap, q.holddown, rule);
        Self {
            config,
            topology,
            nodes,
            round: 0,
            cum_energy: 0.0,
            frozen_wound: None,
            record_log: true,
            log: Vec::new(),
            params,
            pending: Vec::new(),
        }
    }

    /// Replaces a node's battery with a fresh one holding `energy` nJ.
    pub fn set_initial_energy(&mut self, id: NodeId, energy: f64) {
        let node = &mut self.nodes[id.index()];
        node.budget = EnergyBudget::new(energy);
        if node.is_root() {
            node.root_energy = energy;
        }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Round at which the wound is sampled for round index `t`.
    pub fn wound_round(&self, t: u32) -> u32 {
        self.frozen_wound.unwrap_or(t)
    }

    pub fn participating(&self) -> impl Iterator<Item = &NodeState> {
        self.nodes.iter().filter(|n| n.participates())
    }

    pub fn dead_count(&self) -> u32 {
        self.nodes.iter().filter(|n| !n.is_alive()).count() as u32
    }

    fn broadcast_distance_m(&self) -> f64 {
        cm_to_m(self.config.patch.comm_range)
    }

    /// Debits `cost` from node `idx`; a node that dies is switched off at once.
    fn charge(&mut self, idx: usize, cost: f64) -> bool {
        let node = &mut self.nodes[idx];
        let (budget, died) = debit(node.budget, cost);
        node.budget = budget;
        if died {
            node.sleep();
        }
        !died
    }

    /// Transmit half of a sensor broadcast: the sender pays once.
    fn emit(&mut self, msg: &Message) -> Emission {
        let bits = message_bits(msg);
        let d = self.broadcast_distance_m();
        let tx = tx_energy(&self.config.radio, bits, d);
        self.charge(msg.sender().index(), tx);
        Emission { bits, d, tx }
    }

    /// Receive half: every participating neighbour pays reception. Returns the
    /// receivers that survived it.
    fn deliver(&mut self, msg: &Message, e: Emission, acc: &mut RoundAcc) -> Vec<NodeId> {
        let sender = msg.sender();
        let rx = rx_energy(&self.config.radio, e.bits);
        let mut receivers = Vec::new();
        let mut alive = Vec::new();
        for i in 0..self.topology.adjacency[sender.index()].len() {
            let r = self.topology.adjacency[sender.index()][i];
            if !self.nodes[r.index()].participates() {
                continue;
            }
            receivers.push(r);
            if self.charge(r.index(), rx) {
                alive.push(r);
            }
        }
        let energy = e.tx + rx * receivers.len() as f64;
        acc.m.energy_nj += energy;
        self.count(msg.kind(), acc);
        if self.record_log {
            self.log.push(TxRecord {
                round: self.round,
                kind: msg.kind(),
                sender,
                bits: e.bits,
                distance_m: e.d,
                receivers,
                energy_nj: energy,
            });
        }
        alive
    }

    fn broadcast(&mut self, msg: &Message, acc: &mut RoundAcc) -> Vec<NodeId> {
        let e = self.emit(msg);
        self.deliver(msg, e, acc)
    }

    /// Uplink from a root to its nearest relay; relays are not energy limited.
    fn uplink(&mut self, msg: &Message, acc: &mut RoundAcc) {
        let sender = msg.sender();
        let loc = self.nodes[sender.index()].loc;
        let (_, d_cm) = self.topology.nearest_relay(&loc);
        let bits = message_bits(msg);
        let d = cm_to_m(d_cm);
        let tx = tx_energy(&self.config.radio, bits, d);
        self.charge(sender.index(), tx);
        acc.m.energy_nj += tx;
        self.count(msg.kind(), acc);
        if self.record_log {
            self.log.push(TxRecord {
                round: self.round,
                kind: msg.kind(),
                sender,
                bits,
                distance_m: d,
                receivers: Vec::new(),
                energy_nj: tx,
            });
        }
    }

    fn count(&self, kind: MessageKind, acc: &mut RoundAcc) {
        match kind {
            MessageKind::Status => acc.m.status_msgs += 1,
            MessageKind::Location => acc.m.location_msgs += 1,
            MessageKind::Change => acc.m.change_msgs += 1,
            MessageKind::Relay => acc.m.relay_msgs += 1,
        }
    }

    fn update_activity(&mut self, acc: &mut RoundAcc) {
        let t = self.wound_round(self.round);
        let scheme = self.config.run.scheme;
        let shapes = self.config.wound.shapes_at(t);
        for node in &mut self.nodes {
            let want = node.is_alive()
                && match scheme {
                    Scheme::AllActive => true,
                    Scheme::Proposed | Scheme::WoundOnlyStatic => {
                        shapes.iter().any(|s| s.contains(&node.loc))
                    }
                };
            if want && !node.active {
                node.wake();
            } else if !want && node.active {
                node.sleep();
            }
        }
        acc.m.active_nodes = self.nodes.iter().filter(|n| n.participates()).count() as u32;
    }

    fn status_phase(&mut self, acc: &mut RoundAcc) {
        let mut emissions = Vec::new();
        for i in 0..self.nodes.len() {
            let Some(status) = self.nodes[i].update_status() else {
                continue;
            };
            let announce = root_self_announce(&self.nodes[i]);
            let e = self.emit(&status);
            emissions.push((status, e));
            // A node that died paying for its STATUS stays silent afterwards.
            if let Some(announce) = announce.filter(|_| self.nodes[i].participates()) {
                acc.m.root_announcements += 1;
                let e = self.emit(&announce);
                emissions.push((announce, e));
            }
        }
        let params = self.params;
        for (msg, e) in emissions {
            let receivers = self.deliver(&msg, e, acc);
            if let Message::Status {
                sender,
                root,
                root_energy,
            } = msg
            {
                for r in receivers {
                    let out = self.nodes[r.index()].on_status(sender, root, root_energy, &params);
                    if out == StatusOutcome::LoopBroken {
                        acc.m.loops_broken += 1;
                    }
                }
            }
        }
    }

    fn border_phase(&mut self) -> Vec<Message> {
        let params = self.params;
        self.nodes
            .iter_mut()
            .filter_map(|n| match n.border_check(&params) {
                BorderOutcome::Boundary(m) => Some(m),
                _ => None,
            })
            .collect()
    }

    fn convergecast_phase(&mut self, origins: Vec<Message>, acc: &mut RoundAcc) {
        acc.m.location_origins = origins.iter().map(Message::sender).collect();
        let mut wave = std::mem::take(&mut self.pending);
        wave.extend(origins);
        let max_waves = self.nodes.len().max(1);
        let mut waves = 0;
        while !wave.is_empty() {
            if waves == max_waves {
                acc.m.dropped_locations += wave.len() as u64;
                wave.clear();
                break;
            }
            waves += 1;
            let mut next = Vec::new();
            for msg in wave.drain(..) {
                if !self.nodes[msg.sender().index()].participates() {
                    acc.m.dropped_locations += 1;
                    continue;
                }
                acc.m.location_hops += 1;
                for r in self.broadcast(&msg, acc) {
                    match self.nodes[r.index()].forward_to_parent(&msg, &self.params) {
                        ForwardAction::Ignore => {}
                        ForwardAction::LoopBroken => acc.m.loops_broken += 1,
                        ForwardAction::Forward(m) => next.push(m),
                        ForwardAction::Ingest(loc) => self.ingest(r, loc),
                    }
                }
            }
            if self.config.protocol.hop_per_round {
                self.pending = next;
                break;
            }
            wave = next;
        }
    }

    fn ingest(&mut self, root: NodeId, loc: Location) {
        let q = &self.config.protocol;
        let (max_dir, dof) = (q.max_dir, q.dof);
        let round = self.round;
        let node = &mut self.nodes[root.index()];
        let node_loc = node.loc;
        node.ledger
            .get_or_insert_with(|| BoundaryLedger::new(node_loc, max_dir, dof))
            .ingest_boundary(loc, round);
    }

    /// Every root compares this round's boundary against its ledger and sends
    /// the resulting CHANGE reports to the nearest relay.
    fn change_phase(&mut self, acc: &mut RoundAcc) {
        let q = &self.config.protocol;
        let (threshold, mode) = (q.threshold, q.threshold_mode);
        for i in 0..self.nodes.len() {
            let node = &mut self.nodes[i];
            if !node.participates() || !node.is_root() {
                continue;
            }
            let id = node.id;
            let Some(ledger) = node.ledger.as_mut() else {
                continue;
            };
            for report in ledger.close_round(threshold, mode) {
                let msg = report.to_message(id);
                acc.m.change_reports.push(report);
                self.uplink(&msg, acc);
            }
        }
    }

    fn relay_phase(&mut self, acc: &mut RoundAcc) {
        let q = &self.config.protocol;
        let (t_interval, samples) = (q.t_interval, q.sample_count);
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if !node.participates() || !node.is_root() {
                continue;
            }
            let Some(batch) = node
                .ledger
                .as_ref()
                .and_then(|l| l.periodic_relay_report(self.round, t_interval, samples))
            else {
                continue;
            };
            let msg = Message::Relay {
                sender: node.id,
                samples: batch.clone(),
            };
            acc.m.boundary_samples.push((node.id, batch));
            self.uplink(&msg, acc);
        }
    }

    /// Executes one round and returns its metrics.
    pub fn step_round(&mut self) -> RoundMetrics {
        let mut acc = RoundAcc::default();
        acc.m.round = self.round;
        self.update_activity(&mut acc);
        self.status_phase(&mut acc);
        let origins = self.border_phase();
        self.convergecast_phase(origins, &mut acc);
        self.change_phase(&mut acc);
        self.relay_phase(&mut acc);

        self.cum_energy += acc.m.energy_nj;
        let m = &mut acc.m;
        m.cum_energy_nj = self.cum_energy;
        m.dead_nodes = self.dead_count();
        for n in self.nodes.iter().filter(|n| n.participates()) {
            if n.is_root() {
                m.root_ids.push(n.id);
            }
            m.assignments.push((n.id, n.root));
        }
        self.round += 1;
        acc.m
    }

    /// Snapshot of the current state for rendering.
    pub fn snapshot(&self) -> Snapshot {
        let t = self.round.saturating_sub(1);
        let wound_t = self.wound_round(t);
        let field = &self.config.wound;
        let ever_t = wound_t.min(field.peak_round());
        let mut is_parent = vec![false; self.nodes.len()];
        for n in self.participating() {
            if !n.is_root() {
                is_parent[n.parent.index()] = true;
            }
        }
        let nodes = self
            .participating()
            .map(|n| SnapNode {
                id: n.id,
                loc: n.loc,
                parent: n.parent,
                is_root: n.is_root(),
                is_parent: is_parent[n.id.index()],
            })
            .collect();
        let started = self.round > 0;
        Snapshot {
            after_rounds: self.round,
            width: self.config.patch.width,
            height: self.config.patch.height,
            active: if started {
                field.shapes_at(wound_t)
            } else {
                Vec::new()
            },
            ever: if started {
                field.shapes_at(ever_t)
            } else {
                Vec::new()
            },
            nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapNode {
    pub id: NodeId,
    pub loc: Location,
    pub parent: NodeId,
    pub is_root: bool,
    pub is_parent: bool,
}

/// Everything the renderer needs from one moment of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub after_rounds: u32,
    pub width: f64,
    pub height: f64,
    /// Current abnormal region.
    pub active: Vec<Shape>,
    /// Largest region seen so far; the part not in `active` has healed.
    pub ever: Vec<Shape>,
    /// Participating sensors only.
    pub nodes: Vec<SnapNode>,
}

pub struct RunOutput {
    pub topology: Topology,
    pub series: MetricsSeries,
    pub snapshots: Vec<Snapshot>,
    pub log: Vec<TxRecord>,
}

/// Rounds after which a milestone snapshot is taken: 0, ⅓, ⅔ and all of the heal round.
pub fn milestone_rounds(config: &SimConfig) -> [u32; 4] {
    let h = config.wound.healed_round();
    [0, h / 3, 2 * h / 3, h]
}

/// Runs `config.run.rounds` rounds and collects metrics and snapshots.
pub fn run(config: &SimConfig) -> Result<RunOutput, ConfigError> {
    let mut state = SimState::new(config.clone())?;
    Ok(run_state(&mut state))
}

pub fn run_state(state: &mut SimState) -> RunOutput {
    let milestones = milestone_rounds(&state.config);
    let interval = state.config.run.snapshot_interval.max(1);
    let mut series = MetricsSeries::default();
    let mut snapshots = vec![state.snapshot()];
    for _ in 0..state.config.run.rounds {
        let t = state.round;
        series.rounds.push(state.step_round());
        if (t + 1).is_multiple_of(interval) || milestones.contains(&t) {
            snapshots.push(state.snapshot());
        }
    }
    RunOutput {
        topology: state.topology.clone(),
        series,
        snapshots,
        log: std::mem::take(&mut state.log),
    }
}
