//! Round-based simulator for a self-organizing skin-monitoring sensor network.
//!
//! Sensors embedded in a skin patch wake up when the skin beneath them turns
//! abnormal, elect the highest-energy node of each connected patch as the root
//! of an aggregation tree, report boundary positions up that tree, and let the
//! root track per-direction growth or shrinkage of the region.

pub mod aggregation;
pub mod compare;
pub mod complexity;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod output;
pub mod protocol;
pub mod radio;
pub mod render;
pub mod topology;
pub mod types;
pub mod wound;

pub use config::{parse_config, Scheme, SimConfig, ThresholdMode};
pub use engine::{run, run_state, RunOutput, SimState, Snapshot};
pub use error::{ConfigError, Error, Result};
pub use metrics::{MetricsSeries, RoundMetrics};
pub use types::{Location, Message, MessageKind, NodeId};
pub use wound::{ScenarioKind, WoundField};
