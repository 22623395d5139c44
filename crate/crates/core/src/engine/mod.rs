//! Time-slotted simulation: configuration, the slot loop, metrics and
//! parameter sweeps.

mod config;
mod metrics;
mod sim;
mod sweep;

pub use config::{release_schedule, AreaConfig, Range, Scenario, ServerFee, SimConfig};
pub use metrics::{
    stream_bytes, write_stream, RunSummary, ServerSlot, SlotMetrics, STREAM_COLUMNS, STREAM_SCHEMA, SUMMARY_SCHEMA,
};
pub use sim::{run, RunOutput, Simulation};
pub use sweep::{aggregate, sweep, Axis, SweepPoint, SweepRow};
