//! First-order radio energy model.

use serde::{Deserialize, Serialize};

use crate::types::EnergyBudget;

pub const DEFAULT_E_TRX: f64 = 16.7;
pub const DEFAULT_E_REC: f64 = 36.1;
pub const DEFAULT_EPS_AMP: f64 = 1.97;

/// Per-bit radio costs. `e_trx`/`e_rec` in nJ/bit, `eps_amp` in nJ/bit/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub e_trx: f64,
    pub e_rec: f64,
    pub eps_amp: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            e_trx: DEFAULT_E_TRX,
            e_rec: DEFAULT_E_REC,
            eps_amp: DEFAULT_EPS_AMP,
        }
    }
}

/// Energy (nJ) to transmit `bits` over `distance_m` metres.
pub fn tx_energy(params: &RadioParams, bits: u64, distance_m: f64) -> f64 {
    let k = bits as f64;
    params.e_trx * k + params.eps_amp * k * distance_m * distance_m
}

/// Energy (nJ) to receive `bits`.
pub fn rx_energy(params: &RadioParams, bits: u64) -> f64 {
    params.e_rec * bits as f64
}

/// Debits `cost` from the budget, clamping at zero.
///
/// Returns the new budget and whether this debit killed the node. An already dead
/// node never dies again.
pub fn debit(budget: EnergyBudget, cost: f64) -> (EnergyBudget, bool) {
    let was_alive = budget.remaining() > 0.0;
    let mut next = budget;
    next.set_remaining((budget.remaining() - cost.max(0.0)).max(0.0));
    let died = was_alive && next.remaining() == 0.0;
    (next, died)
}

/// Centimetres to metres.
#[inline]
pub fn cm_to_m(cm: f64) -> f64 {
    cm / 100.0
}
