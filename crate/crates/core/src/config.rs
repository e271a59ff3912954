//! Simulation configuration: the TOML document schema, defaults and validation.
//!
//! The document has five optional sections, `[patch]`, `[radio]`, `[protocol]`,
//! `[wound]` and `[run]`. Any key that is not listed below is rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::radio::{RadioParams, DEFAULT_EPS_AMP, DEFAULT_E_REC, DEFAULT_E_TRX};
use crate::types::{Location, NodeId};
use crate::wound::{Gunshot, Oval, ScenarioKind, Scratch, WoundField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Wound-following activity with energy-based root election.
    Proposed,
    /// Wound-following activity, root pinned to the smallest id of each component.
    WoundOnlyStatic,
    /// Every sensor active every round.
    AllActive,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::WoundOnlyStatic, Scheme::AllActive];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::WoundOnlyStatic => "wound_only_static",
            Scheme::AllActive => "all_active",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "wound_only_static" | "static" => Ok(Scheme::WoundOnlyStatic),
            "all_active" | "all" => Ok(Scheme::AllActive),
            other => Err(ConfigError::invalid(
                "scheme",
                format!("unknown scheme `{other}` (proposed | wound_only_static | all_active)"),
            )),
        }
    }
}

/// How the root compares a bin's new boundary distance with the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Report when the distance leaves the `(1 ± threshold)` band around the old one.
    #[default]
    Band,
    /// Report on `new > threshold * old` (growth) / `new < threshold * old` (shrinkage).
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchConfig {
    pub width: f64,
    pub height: f64,
    pub grid_spacing: f64,
    pub placement_jitter: f64,
    pub comm_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub recharge: u32,
    pub alive_cap: u32,
    pub max_dir: u32,
    pub dof: f64,
    pub threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub t_interval: u32,
    pub sample_count: u32,
    pub hop_per_round: bool,
    /// Rounds a node refuses a root id it has given up. 0 disables the hold.
    pub holddown: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rounds: u32,
    pub scheme: Scheme,
    pub seed: u64,
    pub snapshot_interval: u32,
}

/// Validated simulation configuration. Lengths in cm, energies in nJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub patch: PatchConfig,
    pub radio: RadioParams,
    pub initial_energy: f64,
    pub protocol: ProtocolConfig,
    pub wound: WoundField,
    pub run: RunConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

// ---- raw document ----

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    #[serde(default)]
    patch: RawPatch,
    #[serde(default)]
    radio: RawRadio,
    #[serde(default)]
    protocol: RawProtocol,
    #[serde(default)]
    wound: RawWound,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPatch {
    width: Option<f64>,
    height: Option<f64>,
    grid_spacing: Option<f64>,
    placement_jitter: Option<f64>,
    comm_range: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    e_trx: Option<f64>,
    e_rec: Option<f64>,
    eps_amp: Option<f64>,
    initial_energy: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    recharge: Option<u32>,
    alive_cap: Option<u32>,
    max_dir: Option<u32>,
    dof: Option<f64>,
    threshold: Option<f64>,
    threshold_mode: Option<ThresholdMode>,
    t_interval: Option<u32>,
    sample_count: Option<u32>,
    hop_per_round: Option<bool>,
    holddown: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWound {
    scenario: Option<ScenarioKind>,
    center_x: Option<f64>,
    center_y: Option<f64>,
    // oval
    semi_x: Option<f64>,
    semi_y: Option<f64>,
    // gunshot
    radius: Option<f64>,
    peak_factor: Option<f64>,
    growth_rounds: Option<u32>,
    heal_rounds: Option<u32>,
    // scratch
    length: Option<f64>,
    spacing: Option<f64>,
    angle_deg: Option<f64>,
    heal_rounds_each: Option<[u32; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    rounds: Option<u32>,
    scheme: Option<String>,
    seed: Option<u64>,
    snapshot_interval: Option<u32>,
}

pub const DEFAULT_RECHARGE: u32 = 3;
pub const DEFAULT_MAX_DIR: u32 = 20;
pub const DEFAULT_THRESHOLD: f64 = 0.10;
pub const DEFAULT_INITIAL_ENERGY: f64 = 500_000.0;
/// Rounds a given-up root id stays refused.
pub const DEFAULT_HOLDDOWN: u32 = 12;

/// Parses and validates a configuration document. Missing keys take defaults.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let raw: RawDoc = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let cfg = from_raw(raw)?;
    cfg.validate()?;
    Ok(cfg)
}

fn from_raw(raw: RawDoc) -> Result<SimConfig, ConfigError> {
    let patch = PatchConfig {
        width: raw.patch.width.unwrap_or(40.0),
        height: raw.patch.height.unwrap_or(40.0),
        grid_spacing: raw.patch.grid_spacing.unwrap_or(1.0),
        placement_jitter: raw.patch.placement_jitter.unwrap_or(0.2),
        comm_range: raw.patch.comm_range.unwrap_or(1.5),
    };
    let radio = RadioParams {
        e_trx: raw.radio.e_trx.unwrap_or(DEFAULT_E_TRX),
        e_rec: raw.radio.e_rec.unwrap_or(DEFAULT_E_REC),
        eps_amp: raw.radio.eps_amp.unwrap_or(DEFAULT_EPS_AMP),
    };
    let recharge = raw.protocol.recharge.unwrap_or(DEFAULT_RECHARGE);
    let alive_cap = raw.protocol.alive_cap.unwrap_or(2 * recharge);
    let max_dir = raw.protocol.max_dir.unwrap_or(DEFAULT_MAX_DIR);
    let protocol = ProtocolConfig {
        recharge,
        alive_cap,
        max_dir,
        dof: raw.protocol.dof.unwrap_or(2.0),
        threshold: raw.protocol.threshold.unwrap_or(DEFAULT_THRESHOLD),
        threshold_mode: raw.protocol.threshold_mode.unwrap_or_default(),
        t_interval: raw.protocol.t_interval.unwrap_or(5),
        sample_count: raw.protocol.sample_count.unwrap_or((max_dir / 2).max(1)),
        hop_per_round: raw.protocol.hop_per_round.unwrap_or(false),
        holddown: raw.protocol.holddown.unwrap_or(DEFAULT_HOLDDOWN),
    };
    let wound = wound_from_raw(&raw.wound, &patch)?;
    let scheme = match raw.run.scheme {
        Some(s) => s.parse()?,
        None => Scheme::Proposed,
    };
    let run = RunConfig {
        rounds: raw.run.rounds.unwrap_or(120),
        scheme,
        seed: raw.run.seed.unwrap_or(1),
        snapshot_interval: raw.run.snapshot_interval.unwrap_or(10),
    };
    Ok(SimConfig {
        patch,
        radio,
        initial_energy: raw.radio.initial_energy.unwrap_or(DEFAULT_INITIAL_ENERGY),
        protocol,
        wound,
        run,
    })
}

fn wound_from_raw(w: &RawWound, patch: &PatchConfig) -> Result<WoundField, ConfigError> {
    let kind = w.scenario.unwrap_or(ScenarioKind::Oval);
    let center = Location::new(
        w.center_x.unwrap_or(patch.width / 2.0),
        w.center_y.unwrap_or(patch.height / 2.0),
    );
    let unused = |name: &'static str, present: bool| -> Result<(), ConfigError> {
        if present {
            Err(ConfigError::invalid(
                name,
                format!("not a parameter of the {} scenario", kind.name()),
            ))
        } else {
            Ok(())
        }
    };
    let field = match kind {
        ScenarioKind::Oval => {
            unused("wound.radius", w.radius.is_some())?;
            unused("wound.peak_factor", w.peak_factor.is_some())?;
            unused("wound.growth_rounds", w.growth_rounds.is_some())?;
            unused("wound.length", w.length.is_some())?;
            unused("wound.spacing", w.spacing.is_some())?;
            unused("wound.angle_deg", w.angle_deg.is_some())?;
            unused("wound.heal_rounds_each", w.heal_rounds_each.is_some())?;
            WoundField::Oval(Oval {
                center,
                semi_x: w.semi_x.unwrap_or(12.0),
                semi_y: w.semi_y.unwrap_or(8.0),
                heal_rounds: w.heal_rounds.unwrap_or(60),
            })
        }
        ScenarioKind::Gunshot => {
            unused("wound.semi_x", w.semi_x.is_some())?;
            unused("wound.semi_y", w.semi_y.is_some())?;
            unused("wound.length", w.length.is_some())?;
            unused("wound.spacing", w.spacing.is_some())?;
            unused("wound.angle_deg", w.angle_deg.is_some())?;
            unused("wound.heal_rounds_each", w.heal_rounds_each.is_some())?;
            WoundField::Gunshot(Gunshot {
                center,
                radius: w.radius.unwrap_or(6.0),
                peak_factor: w.peak_factor.unwrap_or(1.5),
                growth_rounds: w.growth_rounds.unwrap_or(20),
                heal_rounds: w.heal_rounds.unwrap_or(80),
            })
        }
        ScenarioKind::Scratch => {
            unused("wound.semi_x", w.semi_x.is_some())?;
            unused("wound.semi_y", w.semi_y.is_some())?;
            unused("wound.peak_factor", w.peak_factor.is_some())?;
            unused("wound.growth_rounds", w.growth_rounds.is_some())?;
            unused("wound.heal_rounds", w.heal_rounds.is_some())?;
            WoundField::Scratch(Scratch {
                center,
                length: w.length.unwrap_or(24.0),
                radius: w.radius.unwrap_or(2.5),
                spacing: w.spacing.unwrap_or(10.0),
                angle_deg: w.angle_deg.unwrap_or(0.0),
                heal_rounds: w.heal_rounds_each.unwrap_or([35, 50, 40]),
            })
        }
    };
    Ok(field)
}

impl SimConfig {
    pub fn columns(&self) -> usize {
        (self.patch.width / self.patch.grid_spacing).floor() as usize
    }

    pub fn rows(&self) -> usize {
        (self.patch.height / self.patch.grid_spacing).floor() as usize
    }

    pub fn sensor_count(&self) -> usize {
        self.columns() * self.rows()
    }

    /// Checks every structural invariant; the first violation is reported by field name.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.patch;
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(
                    field,
                    format!("{field} > 0 (got {v})"),
                ))
            }
        };
        positive("patch.width", p.width)?;
        positive("patch.height", p.height)?;
        positive("patch.grid_spacing", p.grid_spacing)?;
        positive("patch.comm_range", p.comm_range)?;
        if !(p.placement_jitter.is_finite() && p.placement_jitter >= 0.0) {
            return Err(ConfigError::invalid(
                "patch.placement_jitter",
                "placement_jitter ≥ 0",
            ));
        }
        if p.placement_jitter * 2.0 >= p.grid_spacing {
            return Err(ConfigError::invalid(
                "patch.placement_jitter",
                "placement_jitter < grid_spacing / 2",
            ));
        }
        if p.comm_range <= p.grid_spacing {
            return Err(ConfigError::invalid(
                "patch.comm_range",
                "comm_range > grid_spacing",
            ));
        }
        // Worst case for two lattice neighbours pushed apart by jitter on both axes.
        let worst = (p.grid_spacing + 2.0 * p.placement_jitter).hypot(2.0 * p.placement_jitter);
        if p.comm_range <= worst {
            return Err(ConfigError::invalid(
                "patch.comm_range",
                format!("comm_range > {worst:.4} so jittered lattice neighbours stay connected"),
            ));
        }
        let n = self.sensor_count();
        if n == 0 {
            return Err(ConfigError::invalid(
                "patch",
                "patch holds at least one sensor",
            ));
        }
        if n > NodeId::MAX_WIRE as usize + 1 {
            return Err(ConfigError::invalid(
                "patch",
                format!("{n} sensors exceed the 16-bit id space"),
            ));
        }

        positive("radio.e_trx", self.radio.e_trx)?;
        positive("radio.e_rec", self.radio.e_rec)?;
        positive("radio.eps_amp", self.radio.eps_amp)?;
        positive("radio.initial_energy", self.initial_energy)?;

        let q = &self.protocol;
        if q.recharge < 1 {
            return Err(ConfigError::invalid("protocol.recharge", "recharge ≥ 1"));
        }
        if q.alive_cap < q.recharge {
            return Err(ConfigError::invalid(
                "protocol.alive_cap",
                "alive_cap ≥ recharge",
            ));
        }
        if q.max_dir < 1 || q.max_dir > 256 {
            return Err(ConfigError::invalid(
                "protocol.max_dir",
                "1 ≤ max_dir ≤ 256 (8-bit bin field)",
            ));
        }
        positive("protocol.dof", q.dof)?;
        if !(q.threshold > 0.0 && q.threshold < 1.0) {
            return Err(ConfigError::invalid(
                "protocol.threshold",
                "0 < threshold < 1",
            ));
        }
        if q.t_interval < 1 {
            return Err(ConfigError::invalid(
                "protocol.t_interval",
                "t_interval ≥ 1",
            ));
        }

        if q.sample_count < 1 || q.sample_count as usize > crate::types::MAX_RELAY_SAMPLES {
            return Err(ConfigError::invalid(
                "protocol.sample_count",
                "1 ≤ sample_count ≤ 255",
            ));
        }

        self.validate_wound()?;

        if self.run.snapshot_interval < 1 {
            return Err(ConfigError::invalid(
                "run.snapshot_interval",
                "snapshot_interval ≥ 1",
            ));
        }
        Ok(())
    }

    fn validate_wound(&self) -> Result<(), ConfigError> {
        let finite_pos = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, format!("{field} > 0")))
            }
        };
        match &self.wound {
            WoundField::Oval(o) => {
                finite_pos("wound.semi_x", o.semi_x)?;
                finite_pos("wound.semi_y", o.semi_y)?;
                if o.heal_rounds < 1 {
                    return Err(ConfigError::invalid("wound.heal_rounds", "heal_rounds ≥ 1"));
                }
                if !o.center.is_finite() {
                    return Err(ConfigError::invalid("wound.center", "finite center"));
                }
            }
            WoundField::Gunshot(g) => {
                finite_pos("wound.radius", g.radius)?;
                if !(g.peak_factor.is_finite() && g.peak_factor >= 1.0) {
                    return Err(ConfigError::invalid("wound.peak_factor", "peak_factor ≥ 1"));
                }
                if g.growth_rounds < 1 || g.heal_rounds <= g.growth_rounds {
                    return Err(ConfigError::invalid(
                        "wound.heal_rounds",
                        "1 ≤ growth_rounds < heal_rounds",
                    ));
                }
                if !g.center.is_finite() {
                    return Err(ConfigError::invalid("wound.center", "finite center"));
                }
            }
            WoundField::Scratch(s) => {
                finite_pos("wound.radius", s.radius)?;
                finite_pos("wound.length", s.length)?;
                if !(s.spacing.is_finite() && s.spacing > 2.0 * s.radius) {
                    return Err(ConfigError::invalid(
                        "wound.spacing",
                        "spacing > 2 × radius (capsules disjoint)",
                    ));
                }
                let [a, m, b] = s.heal_rounds;
                if a < 1 || b < 1 || m < a || m < b {
                    return Err(ConfigError::invalid(
                        "wound.heal_rounds_each",
                        "all ≥ 1 and the middle capsule heals last",
                    ));
                }
                if !s.center.is_finite() || !s.angle_deg.is_finite() {
                    return Err(ConfigError::invalid("wound.center", "finite center/angle"));
                }
            }
        }
        Ok(())
    }

    /// Same configuration with the wound swapped for the named scenario's defaults.
    pub fn with_scenario(mut self, kind: ScenarioKind) -> Self {
        let raw = RawWound {
            scenario: Some(kind),
            ..RawWound::default()
        };
        self.wound = wound_from_raw(&raw, &self.patch).expect("scenario defaults are valid");
        self
    }
}
