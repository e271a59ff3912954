//! Per-sensor protocol state machine: status gossip, energy-aware tree adoption
//! with alive-status bookkeeping, and boundary detection.
//!
//! A node stores only its own parent/root beliefs plus one countdown per radio
//! neighbour. It never tracks children; convergecast traffic is addressed to the
//! parent by id and every other listener drops it.

use serde::{Deserialize, Serialize};

use crate::aggregation::BoundaryLedger;
use crate::types::{EnergyBudget, Location, Message, NodeId};

/// How a node ranks two candidate roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElectionRule {
    /// Higher root energy wins, ties go to the smaller root id.
    EnergyThenId,
    /// Smaller root id wins; energy is ignored.
    IdOnly,
}

impl ElectionRule {
    /// Whether root belief `a` ranks strictly above `b`.
    pub fn prefers(self, a: (NodeId, f64), b: (NodeId, f64)) -> bool {
        match self {
            Self::EnergyThenId => a.1 > b.1 || (a.1 == b.1 && a.0 < b.0),
            Self::IdOnly => a.0 < b.0,
        }
    }
}

/// A root id this node gave up, refused for `left` more rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldRoot {
    pub root: NodeId,
    pub left: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolParams {
    pub recharge: u32,
    pub alive_cap: u32,
    pub holddown: u32,
    pub rule: ElectionRule,
}

impl ProtocolParams {
    pub fn new(recharge: u32, alive_cap: u32, holddown: u32, rule: ElectionRule) -> Self {
        Self {
            recharge,
            alive_cap,
            holddown,
            rule,
        }
    }
}

/// Rounds a neighbour is still presumed awake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AliveStatus(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: NodeId,
    pub alive: AliveStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub loc: Location,
    pub budget: EnergyBudget,
    pub parent: NodeId,
    pub root: NodeId,
    pub root_energy: f64,
    /// One entry per radio neighbour, ascending by id.
    pub neighbors: Vec<Neighbor>,
    pub active: bool,
    /// Roots given up recently; offers naming them are refused.
    pub held: Vec<HeldRoot>,
    /// `(root, root energy)` carried by this round's STATUS. Offers must beat
    /// it as well as the current belief, so two nodes never adopt each other
    /// within one round.
    pub advertised: Option<(NodeId, f64)>,
    /// Origins of the LOCATION reports forwarded this round.
    pub forwarded: Vec<Location>,
    /// Boundary ledger, only ever present on a self-rooted node.
    pub ledger: Option<BoundaryLedger>,
}

/// What a STATUS did to the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusOutcome {
    /// Sender is not a radio neighbour; message dropped.
    UnknownNeighbor,
    /// A self-rooted receiver heard its own id advertised back.
    SelfEcho,
    /// Receiver switched to the sender as parent.
    Adopted,
    /// Sender is the receiver's parent; root beliefs copied.
    Followed,
    /// The parent offered a root this node gave up recently; the node
    /// re-rooted itself instead of following it around a cycle.
    LoopBroken,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BorderOutcome {
    /// Inactive or dead node, nothing checked.
    Skipped,
    Interior,
    /// Parent's countdown expired during the scan; node re-rooted itself.
    ParentLost,
    /// Self-rooted node with a silent neighbour; roots do not report.
    RootOnBoundary,
    Boundary(Message),
}

/// What a node does with an overheard LOCATION.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardAction {
    /// Addressed to someone else.
    Ignore,
    /// This node is the root; the location goes into its ledger.
    Ingest(Location),
    /// Re-address one hop further up.
    Forward(Message),
    /// This node already forwarded the same report this round, so its parent
    /// chain loops. The copy is dropped and the node re-rooted itself.
    LoopBroken,
}

impl NodeState {
    /// A sleeping node holding a fresh budget and the given neighbour ids.
    pub fn new(id: NodeId, loc: Location, budget: EnergyBudget, neighbors: &[NodeId]) -> Self {
        let mut ids = neighbors.to_vec();
        ids.sort_unstable();
        ids.dedup();
        Self {
            id,
            loc,
            budget,
            parent: id,
            root: id,
            root_energy: budget.remaining(),
            neighbors: ids
                .into_iter()
                .map(|id| Neighbor {
                    id,
                    alive: AliveStatus(0),
                })
                .collect(),
            active: false,
            held: Vec::new(),
            advertised: None,
            forwarded: Vec::new(),
            ledger: None,
        }
    }

    pub fn is_alive(&self) -> bool {
        !self.budget.is_dead()
    }

    pub fn is_root(&self) -> bool {
        self.parent == self.id
    }

    /// Alive and on abnormal skin.
    pub fn participates(&self) -> bool {
        self.active && self.is_alive()
    }

    pub fn neighbor(&self, id: NodeId) -> Option<&Neighbor> {
        self.neighbors
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.neighbors[i])
    }

    fn neighbor_mut(&mut self, id: NodeId) -> Option<&mut Neighbor> {
        self.neighbors
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(move |i| &mut self.neighbors[i])
    }

    /// Parent, root and root energy all point back at this node.
    pub fn reset_self(&mut self) {
        self.parent = self.id;
        self.root = self.id;
        self.root_energy = self.budget.remaining();
    }

    /// Skin under the node turned abnormal: fresh protocol state.
    pub fn wake(&mut self) {
        self.active = true;
        self.reset_self();
        for n in &mut self.neighbors {
            n.alive = AliveStatus(0);
        }
        self.held.clear();
        self.advertised = None;
        self.ledger = None;
    }

    /// Skin healed (or node died): radio off, protocol state discarded.
    pub fn sleep(&mut self) {
        self.active = false;
        self.reset_self();
        for n in &mut self.neighbors {
            n.alive = AliveStatus(0);
        }
        self.held.clear();
        self.advertised = None;
        self.ledger = None;
    }

    /// STATUS broadcast for this round, if the node is awake.
    ///
    /// A self-rooted node advertises its current remaining energy.
    pub fn update_status(&mut self) -> Option<Message> {
        if !self.participates() {
            return None;
        }
        if self.is_root() {
            self.root_energy = self.budget.remaining();
        }
        self.advertised = Some((self.root, self.root_energy));
        Some(Message::Status {
            sender: self.id,
            root: self.root,
            root_energy: self.root_energy,
        })
    }

    fn better(&self, rule: ElectionRule, root: NodeId, root_energy: f64) -> bool {
        let offer = (root, root_energy);
        rule.prefers(offer, (self.root, self.root_energy))
            && self.advertised.is_none_or(|mine| rule.prefers(offer, mine))
            && !self.holds(root)
    }

    fn holds(&self, root: NodeId) -> bool {
        self.held.iter().any(|h| h.root == root)
    }

    /// Remembers the current root as given up, unless it is this node itself.
    fn give_up_root(&mut self, params: &ProtocolParams) {
        if params.holddown == 0 || self.root == self.id {
            return;
        }
        let entry = HeldRoot {
            root: self.root,
            left: params.holddown,
        };
        match self.held.iter_mut().find(|h| h.root == self.root) {
            Some(h) => *h = entry,
            None => self.held.push(entry),
        }
    }

    /// Processes a STATUS heard from neighbour `from`.
    pub fn on_status(
        &mut self,
        from: NodeId,
        root: NodeId,
        root_energy: f64,
        params: &ProtocolParams,
    ) -> StatusOutcome {
        let cap = params.alive_cap;
        let Some(n) = self.neighbor_mut(from) else {
            return StatusOutcome::UnknownNeighbor;
        };
        n.alive = AliveStatus((n.alive.0 + params.recharge).min(cap));

        if root == self.id {
            if self.is_root() {
                return StatusOutcome::SelfEcho;
            }
            // A stale echo from the subtree this node used to root.
            return StatusOutcome::Unchanged;
        }
        if from == self.parent && !self.is_root() {
            if root != self.root && self.holds(root) {
                // Beliefs only come back around through a parent cycle.
                self.give_up_root(params);
                self.reset_self();
                return StatusOutcome::LoopBroken;
            }
            if root != self.root {
                self.give_up_root(params);
            }
            self.root = root;
            self.root_energy = root_energy;
            return StatusOutcome::Followed;
        }
        if root == self.root {
            return StatusOutcome::Unchanged;
        }
        if self.better(params.rule, root, root_energy) {
            self.give_up_root(params);
            self.parent = from;
            self.root = root;
            self.root_energy = root_energy;
            self.ledger = None;
            return StatusOutcome::Adopted;
        }
        StatusOutcome::Unchanged
    }

    /// End-of-round scan of neighbour countdowns.
    ///
    /// Neighbours are visited in ascending id order. A neighbour at zero marks
    /// this node as a boundary node; otherwise its countdown drops by one, and if
    /// that neighbour is the parent and just reached zero the node re-roots
    /// itself and stops scanning.
    pub fn border_check(&mut self, params: &ProtocolParams) -> BorderOutcome {
        if !self.participates() {
            return BorderOutcome::Skipped;
        }
        self.forwarded.clear();
        for h in &mut self.held {
            h.left -= 1;
        }
        self.held.retain(|h| h.left > 0);
        let parent = self.parent;
        let me = self.id;
        let mut boundary = false;
        let mut lost_parent = false;
        for n in &mut self.neighbors {
            if n.alive.0 == 0 {
                boundary = true;
            } else {
                n.alive.0 -= 1;
                if n.id == parent && parent != me && n.alive.0 == 0 {
                    lost_parent = true;
                    break;
                }
            }
        }
        if lost_parent {
            self.give_up_root(params);
            self.reset_self();
            return BorderOutcome::ParentLost;
        }

        if !boundary {
            return BorderOutcome::Interior;
        }
        if self.is_root() {
            return BorderOutcome::RootOnBoundary;
        }
        self.forwarded.push(self.loc);
        BorderOutcome::Boundary(Message::Location {
            sender: self.id,
            loc: self.loc,
            parent: self.parent,
        })
    }

    /// Handles a LOCATION overheard on the radio.
    pub fn forward_to_parent(&mut self, msg: &Message, params: &ProtocolParams) -> ForwardAction {
        let Message::Location { loc, parent, .. } = msg else {
            return ForwardAction::Ignore;
        };
        if *parent != self.id || !self.participates() {
            return ForwardAction::Ignore;
        }
        if self.is_root() {
            ForwardAction::Ingest(*loc)
        } else if self.forwarded.contains(loc) {
            self.give_up_root(params);
            self.reset_self();
            ForwardAction::LoopBroken
        } else {
            self.forwarded.push(*loc);
            ForwardAction::Forward(Message::Location {
                sender: self.id,
                loc: *loc,
                parent: self.parent,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProtocolParams {
        ProtocolParams::new(3, 6, 6, ElectionRule::EnergyThenId)
    }

    fn node(id: u32, energy: f64, nbrs: &[u32]) -> NodeState {
        let ids: Vec<NodeId> = nbrs.iter().map(|&i| NodeId(i)).collect();
        let mut n = NodeState::new(
            NodeId(id),
            Location::new(1.0, 1.0),
            EnergyBudget::new(energy),
            &ids,
        );
        n.wake();
        n
    }

    #[test]
    fn status_carries_root_beliefs() {
        let mut n = node(1, 9000.0, &[2]);
        n.parent = NodeId(2);
        n.root = NodeId(7);
        n.root_energy = 5000.0;
        assert_eq!(
            n.update_status(),
            Some(Message::Status {
                sender: NodeId(1),
                root: NodeId(7),
                root_energy: 5000.0
            })
        );
        n.sleep();
        assert_eq!(n.update_status(), None);
    }

    #[test]
    fn self_root_refreshes_energy() {
        let mut n = node(3, 5000.0, &[2]);
        n.root_energy = 9999.0;
        n.budget = EnergyBudget::with_remaining(5000.0, 4200.0);
        match n.update_status() {
            Some(Message::Status { root_energy, .. }) => assert_eq!(root_energy, 4200.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn adopts_richer_root() {
        let mut n = node(9, 3000.0, &[4]);
        n.root = NodeId(9);
        n.root_energy = 3000.0;
        let out = n.on_status(NodeId(4), NodeId(4), 5000.0, &params());
        assert_eq!(out, StatusOutcome::Adopted);
        assert_eq!(
            (n.parent, n.root, n.root_energy),
            (NodeId(4), NodeId(4), 5000.0)
        );
        assert_eq!(n.neighbor(NodeId(4)).unwrap().alive, AliveStatus(3));
    }

    #[test]
    fn tie_goes_to_smaller_root() {
        let mut n = node(7, 5000.0, &[3]);
        let out = n.on_status(NodeId(3), NodeId(2), 5000.0, &params());
        assert_eq!(out, StatusOutcome::Adopted);
        assert_eq!(n.root, NodeId(2));

        let mut m = node(1, 5000.0, &[3]);
        let out = m.on_status(NodeId(3), NodeId(2), 5000.0, &params());
        assert_eq!(out, StatusOutcome::Unchanged);
        assert_eq!(m.root, NodeId(1));
    }

    #[test]
    fn own_id_echo() {
        let mut n = node(3, 5000.0, &[4, 5]);
        assert_eq!(
            n.on_status(NodeId(5), NodeId(3), 9000.0, &params()),
            StatusOutcome::SelfEcho
        );
        assert!(n.is_root());
        // Once attached elsewhere, an echo of the old id is stale and ignored.
        n.on_status(NodeId(4), NodeId(8), 9000.0, &params());
        assert_eq!(n.parent, NodeId(4));
        let out = n.on_status(NodeId(5), NodeId(3), 9000.0, &params());
        assert_eq!(out, StatusOutcome::Unchanged);
        assert_eq!((n.parent, n.root), (NodeId(4), NodeId(8)));
    }

    #[test]
    fn alive_status_capped() {
        let mut n = node(1, 100.0, &[2]);
        for _ in 0..5 {
            n.on_status(NodeId(2), NodeId(1), 0.0, &params());
        }
        assert_eq!(n.neighbor(NodeId(2)).unwrap().alive, AliveStatus(6));
    }

    #[test]
    fn unknown_neighbor_ignored() {
        let mut n = node(1, 100.0, &[2]);
        let before = n.clone();
        assert_eq!(
            n.on_status(NodeId(42), NodeId(0), 1e9, &params()),
            StatusOutcome::UnknownNeighbor
        );
        assert_eq!(n, before);
    }

    #[test]
    fn follows_parent_and_ignores_same_root_elsewhere() {
        let mut n = node(5, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(0), 900.0, &params());
        assert_eq!(n.parent, NodeId(2));
        // Same root, stale higher value from another neighbour: no parent switch.
        let out = n.on_status(NodeId(3), NodeId(0), 950.0, &params());
        assert_eq!(out, StatusOutcome::Unchanged);
        assert_eq!(n.parent, NodeId(2));
        // Parent advertises the decayed value: copied.
        let out = n.on_status(NodeId(2), NodeId(0), 880.0, &params());
        assert_eq!(out, StatusOutcome::Followed);
        assert_eq!(n.root_energy, 880.0);
    }

    #[test]
    fn interior_node_decrements() {
        let mut n = node(1, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(1), 0.0, &params());
        n.on_status(NodeId(3), NodeId(1), 0.0, &params());
        assert_eq!(n.border_check(&params()), BorderOutcome::Interior);
        assert!(n.neighbors.iter().all(|x| x.alive == AliveStatus(2)));
    }

    #[test]
    fn boundary_node_reports_to_parent() {
        let mut n = node(1, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(2), 500.0, &params());
        match n.border_check(&params()) {
            BorderOutcome::Boundary(Message::Location { sender, parent, .. }) => {
                assert_eq!(sender, NodeId(1));
                assert_eq!(parent, NodeId(2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn root_on_boundary_stays_silent() {
        let mut n = node(1, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(1), 0.0, &params());
        assert_eq!(n.border_check(&params()), BorderOutcome::RootOnBoundary);
    }

    #[test]
    fn parent_expiry_returns_early() {
        // Neighbour 2 silent (boundary), neighbour 3 is the parent about to expire,
        // neighbour 4 is never reached by the scan.
        let mut n = node(1, 100.0, &[2, 3, 4]);
        n.on_status(NodeId(3), NodeId(3), 500.0, &params());
        n.on_status(NodeId(4), NodeId(3), 500.0, &params());
        n.neighbors[1].alive = AliveStatus(1);
        n.neighbors[2].alive = AliveStatus(4);
        assert_eq!(n.border_check(&params()), BorderOutcome::ParentLost);
        assert!(n.is_root());
        assert_eq!(n.neighbors[2].alive, AliveStatus(4));
        assert_eq!(
            n.held,
            vec![HeldRoot {
                root: NodeId(3),
                left: 6
            }]
        );
    }

    #[test]
    fn lost_root_refused_until_released() {
        let mut n = node(1, 100.0, &[2, 3]);
        n.held = vec![HeldRoot {
            root: NodeId(3),
            left: 2,
        }];
        assert_eq!(
            n.on_status(NodeId(2), NodeId(3), 500.0, &params()),
            StatusOutcome::Unchanged
        );
        // Other roots are unaffected.
        let mut m = n.clone();
        assert_eq!(
            m.on_status(NodeId(2), NodeId(9), 500.0, &params()),
            StatusOutcome::Adopted
        );
        n.border_check(&params());
        n.border_check(&params());
        assert!(n.held.is_empty());
        assert_eq!(
            n.on_status(NodeId(2), NodeId(3), 500.0, &params()),
            StatusOutcome::Adopted
        );
    }

    #[test]
    fn switching_roots_holds_the_old_one() {
        let mut n = node(5, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(0), 900.0, &params());
        n.on_status(NodeId(3), NodeId(7), 950.0, &params());
        assert_eq!(n.root, NodeId(7));
        assert_eq!(
            n.held,
            vec![HeldRoot {
                root: NodeId(0),
                left: 6
            }]
        );
        // Following the parent onto another root holds the previous one too.
        n.on_status(NodeId(3), NodeId(8), 10.0, &params());
        assert_eq!(n.held.len(), 2);
    }

    #[test]
    fn parent_leading_back_to_a_dropped_root_is_a_loop() {
        let mut n = node(5, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(0), 900.0, &params());
        n.on_status(NodeId(2), NodeId(8), 400.0, &params());
        assert_eq!(n.root, NodeId(8));
        assert_eq!(
            n.on_status(NodeId(2), NodeId(0), 900.0, &params()),
            StatusOutcome::LoopBroken
        );
        assert!(n.is_root());
    }

    #[test]
    fn mid_round_drop_cannot_invite_a_swap() {
        // Node 5 advertised root 0 at 900 this round, then its parent reports a
        // weaker root. An offer between the two must be refused.
        let mut n = node(5, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(0), 900.0, &params());
        n.update_status();
        n.on_status(NodeId(2), NodeId(4), 300.0, &params());
        assert_eq!(n.root_energy, 300.0);
        assert_eq!(
            n.on_status(NodeId(3), NodeId(7), 600.0, &params()),
            StatusOutcome::Unchanged
        );
    }

    #[test]
    fn zero_holddown_keeps_nothing() {
        let p = ProtocolParams::new(3, 6, 0, ElectionRule::EnergyThenId);
        let mut n = node(5, 100.0, &[2, 3]);
        n.on_status(NodeId(2), NodeId(0), 900.0, &p);
        n.on_status(NodeId(3), NodeId(7), 950.0, &p);
        assert!(n.held.is_empty());
    }

    #[test]
    fn convergecast_routing() {
        let mut relay = node(2, 100.0, &[1, 3]);
        relay.on_status(NodeId(3), NodeId(3), 900.0, &params());
        let msg = Message::Location {
            sender: NodeId(1),
            loc: Location::new(4.0, 5.0),
            parent: NodeId(2),
        };
        assert_eq!(
            relay.forward_to_parent(&msg, &params()),
            ForwardAction::Forward(Message::Location {
                sender: NodeId(2),
                loc: Location::new(4.0, 5.0),
                parent: NodeId(3)
            })
        );
        let mut root = node(2, 100.0, &[1]);
        assert_eq!(
            root.forward_to_parent(&msg, &params()),
            ForwardAction::Ingest(Location::new(4.0, 5.0))
        );
        let mut other = node(7, 100.0, &[1]);
        assert_eq!(
            other.forward_to_parent(&msg, &params()),
            ForwardAction::Ignore
        );
    }

    #[test]
    fn second_copy_breaks_the_loop() {
        let mut n = node(2, 100.0, &[1, 3]);
        n.on_status(NodeId(3), NodeId(9), 900.0, &params());
        let msg = Message::Location {
            sender: NodeId(1),
            loc: Location::new(4.0, 5.0),
            parent: NodeId(2),
        };
        assert!(matches!(
            n.forward_to_parent(&msg, &params()),
            ForwardAction::Forward(_)
        ));
        assert_eq!(
            n.forward_to_parent(&msg, &params()),
            ForwardAction::LoopBroken
        );
        assert!(n.is_root());
        assert_eq!(n.held[0].root, NodeId(9));
        // The next round starts with a clean slate.
        n.on_status(NodeId(3), NodeId(8), 950.0, &params());
        n.border_check(&params());
        assert!(matches!(
            n.forward_to_parent(&msg, &params()),
            ForwardAction::Forward(_)
        ));
    }

    #[test]
    fn id_only_rule_ignores_energy() {
        let p = ProtocolParams::new(3, 6, 6, ElectionRule::IdOnly);
        let mut n = node(5, 100.0, &[6, 2]);
        assert_eq!(
            n.on_status(NodeId(6), NodeId(6), 1e9, &p),
            StatusOutcome::Unchanged
        );
        assert_eq!(
            n.on_status(NodeId(2), NodeId(2), 0.0, &p),
            StatusOutcome::Adopted
        );
    }
}
