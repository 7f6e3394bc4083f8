//! Result files written by the command-line front end.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cca::MeasurementTiming;
use crate::experiment::{ExhaustiveRow, RoundRecord, RunRow, SweepTable};
use crate::gpr::KernelParams;
use crate::tracker::GprInput;

/// Echo of every setting that influenced a result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub channels: usize,
    pub rounds: usize,
    pub duration_ms: u64,
    pub minislot_us: u64,
    pub n_of_t: u64,
    /// `"reference"`, `"traffic:<path>"` or `"trace:<path>"`.
    pub source: String,
    pub seed: Option<u64>,
    pub lengthscale: f64,
    pub jitter: f64,
    pub stay_on_tie: bool,
    pub include_bootstrap: bool,
    pub gpr_input: GprInput,
}

impl ConfigEcho {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        channels: usize,
        rounds: usize,
        timing: &MeasurementTiming,
        source: String,
        seed: Option<u64>,
        kernel: &KernelParams,
        stay_on_tie: bool,
        include_bootstrap: bool,
        gpr_input: GprInput,
    ) -> Self {
        Self {
            channels,
            rounds,
            duration_ms: timing.duration_ms(),
            minislot_us: timing.minislot_us(),
            n_of_t: timing.n_of_t(),
            source,
            seed,
            lengthscale: kernel.lengthscale(),
            jitter: kernel.jitter(),
            stay_on_tie,
            include_bootstrap,
            gpr_input,
        }
    }
}

/// Top-level results JSON: `{"config", "exhaustive": {"L1", "c1_ms"}, "runs": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config: ConfigEcho,
    pub exhaustive: ExhaustiveRow,
    pub runs: Vec<RunRow>,
}

impl ResultsFile {
    pub fn from_table(config: ConfigEcho, table: SweepTable) -> Self {
        Self {
            config,
            exhaustive: table.exhaustive,
            runs: table.runs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }
}

pub const PER_ROUND_HEADER: &str =
    "round,bootstrap,measured,chosen,switched,chosen_load,min_load,err_true,err_avg,cumulative_cost_ms";

/// One CSV line per round; `measured` lists channels separated by `;`.
pub fn per_round_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from(PER_ROUND_HEADER);
    out.push('\n');
    for r in records {
        let measured: Vec<String> = r.measured.iter().map(|c| c.to_string()).collect();
        let avg = |v: &[f64]| {
            if v.is_empty() {
                String::new()
            } else {
                (v.iter().sum::<f64>() / v.len() as f64).to_string()
            }
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.bootstrap,
            measured.join(";"),
            r.chosen,
            r.switched,
            r.chosen_load,
            r.min_load,
            avg(&r.err_true),
            avg(&r.err_avg),
            r.cumulative_cost_ms
        );
    }
    out
}
