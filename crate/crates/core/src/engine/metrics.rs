//! Per-slot records, run summaries and their file formats.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Version tag written at the top of every stream CSV.
pub const STREAM_SCHEMA: &str = "famus stream v1";
/// Version tag stored in every summary JSON.
pub const SUMMARY_SCHEMA: &str = "famus summary v1";

pub const STREAM_COLUMNS: [&str; 13] = [
    "slot",
    "row",
    "release",
    "queue",
    "reputation",
    "sigma",
    "delegated",
    "accuracy_loss",
    "selected",
    "participants",
    "rewards",
    "cost",
    "expected_cost",
];

/// One server in one slot. `queue` and `reputation` are the values the
/// slot started with, so replaying the queue update from these columns
/// reproduces the next row's `queue`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerSlot {
    pub queue: f64,
    pub reputation: f64,
    /// Service quality this slot; NaN when undefined.
    pub sigma: f64,
    pub delegated: bool,
    pub accuracy_loss: f64,
    /// Clients offered a menu or told to participate.
    pub selected: usize,
    pub participants: usize,
    pub rewards: f64,
    /// Realised cluster cost.
    pub cost: f64,
    pub expected_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: usize,
    pub release: bool,
    pub servers: Vec<ServerSlot>,
    /// Sum of realised cluster costs.
    pub cost: f64,
    pub expected_cost: f64,
    /// Mean accuracy loss over servers holding a task; `None` when no
    /// server holds one.
    pub accuracy_loss: Option<f64>,
    /// Contract participants whose type level was not the top one.
    pub ic_violations: usize,
}

impl SlotMetrics {
    pub fn delegated(&self) -> Vec<bool> {
        self.servers.iter().map(|s| s.delegated).collect()
    }

    pub fn queues(&self) -> Vec<f64> {
        self.servers.iter().map(|s| s.queue).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub policy: String,
    pub scenario: String,
    pub seed: u64,
    pub servers: usize,
    pub clients: usize,
    pub tasks: usize,
    pub type_levels: usize,
    pub balance: f64,
    pub epsilon: f64,
    pub sigma0: f64,
    pub measured_slots: usize,
    /// Type grid built after warm-up.
    pub grid: Vec<f64>,
    pub time_avg_cost: f64,
    pub time_avg_expected_cost: f64,
    /// Mean of the per-slot accuracy loss over slots where it is defined.
    pub time_avg_accuracy_loss: f64,
    pub time_avg_participants: f64,
    /// `None` when some server never accrued service quality.
    pub jfi: Option<f64>,
    pub delegation_counts: Vec<u64>,
    pub quality_sums: Vec<f64>,
    pub queue_mean: Vec<f64>,
    /// Least-squares backlog slope over the last half of the run, per server.
    pub queue_tail_slope: Vec<f64>,
    pub ic_violations: usize,
}

impl RunSummary {
    pub fn max_tail_slope(&self) -> f64 {
        self.queue_tail_slope.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Writes the per-slot stream: a schema comment line, a header, then one
/// row per server per slot followed by a `system` row that aggregates it.
pub fn write_stream<W: Write>(mut out: W, slots: &[SlotMetrics]) -> Result<()> {
    writeln!(
        out,
        "# {STREAM_SCHEMA}; one row per server per slot plus a 'system' row"
    )
    .map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STREAM_COLUMNS)?;
    for s in slots {
        let slot = s.slot.to_string();
        let release = u8::from(s.release).to_string();
        for (n, r) in s.servers.iter().enumerate() {
            w.write_record([
                slot.clone(),
                n.to_string(),
                release.clone(),
                num(r.queue),
                num(r.reputation),
                num(r.sigma),
                u8::from(r.delegated).to_string(),
                num(r.accuracy_loss),
                r.selected.to_string(),
                r.participants.to_string(),
                num(r.rewards),
                num(r.cost),
                num(r.expected_cost),
            ])?;
        }
        let sum = |f: fn(&ServerSlot) -> usize| s.servers.iter().map(f).sum::<usize>().to_string();
        w.write_record([
            slot,
            "system".to_string(),
            release,
            String::new(),
            String::new(),
            String::new(),
            sum(|r| usize::from(r.delegated)),
            s.accuracy_loss.map(num).unwrap_or_default(),
            sum(|r| r.selected),
            sum(|r| r.participants),
            num(s.servers.iter().map(|r| r.rewards).sum()),
            num(s.cost),
            num(s.expected_cost),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// The stream as bytes.
pub fn stream_bytes(slots: &[SlotMetrics]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_stream(&mut buf, slots).expect("writing to memory cannot fail");
    buf
}
