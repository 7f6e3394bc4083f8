//! Replays measurement strategies over a shared [`LoadMatrix`].
//!
//! Both strategies read the same pre-generated measured plane, so any
//! (round, channel) probed by both yields the same value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cca::{ChannelId, LoadMatrix, MeasurementTiming, RawMeasurement};
use crate::error::{Error, Result};
use crate::gpr::{KernelParams, Round};
use crate::selection::{
    bootstrap_schedule, choose_operating_channel, exhaustive_select, select_set, SelectionPolicy,
};
use crate::tracker::{EstimateVector, GprInput, LoadTracker};

/// Settings for one selective-measurement run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectiveConfig {
    pub k: usize,
    pub window: usize,
    pub policy: SelectionPolicy,
    pub kernel: KernelParams,
    /// Keep the current channel when its load ties the minimum.
    pub stay_on_tie: bool,
    /// Count bootstrap rounds in load, error and switch averages.
    pub include_bootstrap: bool,
    pub gpr_input: GprInput,
}

impl SelectiveConfig {
    pub fn new(k: usize, window: usize, policy: SelectionPolicy) -> Self {
        Self {
            k,
            window,
            policy,
            kernel: KernelParams::default(),
            stay_on_tie: true,
            include_bootstrap: false,
            gpr_input: GprInput::Smoothed,
        }
    }
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub bootstrap: bool,
    /// Channels measured this round, in ranking order.
    pub measured: Vec<ChannelId>,
    pub chosen: ChannelId,
    pub switched: bool,
    pub chosen_load: f64,
    /// Minimum measured load over all channels (what a full scan would pick).
    pub min_load: f64,
    /// Per-channel load estimate used for the decision (empty for full scans).
    pub estimates: Vec<f64>,
    /// Per-channel `|estimate - true load|`.
    pub err_true: Vec<f64>,
    /// Per-channel `|estimate - mean of the latest w measured loads up to this round|`.
    pub err_avg: Vec<f64>,
    pub cumulative_cost_ms: u64,
}

/// Aggregate outcome of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    /// Mean load of the chosen channel over evaluated rounds; `None` if no
    /// round was evaluated (bootstrap never finished).
    pub avg_selected_load: Option<f64>,
    /// Measurement time per round, `T * channels measured`.
    pub cost_ms: u64,
    pub err_true: Option<f64>,
    pub err_avg: Option<f64>,
    pub switches: usize,
    pub evaluated_rounds: usize,
    pub bootstrap_rounds: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Measures every channel each round and operates on the argmin.
pub fn run_exhaustive(
    matrix: &LoadMatrix,
    timing: &MeasurementTiming,
) -> Result<(Vec<RoundRecord>, ExperimentSummary)> {
    let all: Vec<ChannelId> = matrix.channel_ids().collect();
    let per_round = timing.duration_ms() * matrix.channels() as u64;
    let mut current: Option<ChannelId> = None;
    let mut records = Vec::with_capacity(matrix.rounds());
    for t in 0..matrix.rounds() {
        let row = matrix.measured_row(t);
        let chosen = exhaustive_select(row)?;
        let switched = current != Some(chosen);
        records.push(RoundRecord {
            round: t as u64,
            bootstrap: false,
            measured: all.clone(),
            chosen,
            switched,
            chosen_load: row[chosen.index()],
            min_load: row[chosen.index()],
            estimates: Vec::new(),
            err_true: Vec::new(),
            err_avg: Vec::new(),
            cumulative_cost_ms: per_round * (t as u64 + 1),
        });
        current = Some(chosen);
    }
    let summary = ExperimentSummary {
        avg_selected_load: mean(records.iter().map(|r| r.chosen_load)),
        cost_ms: per_round,
        err_true: None,
        err_avg: None,
        switches: count_switches(&records),
        evaluated_rounds: records.len(),
        bootstrap_rounds: 0,
    };
    Ok((records, summary))
}

/// Full-scan average load over rounds `from..`, for comparing against a
/// selective run that skips its bootstrap rounds.
pub fn exhaustive_average(matrix: &LoadMatrix, from: usize) -> Option<f64> {
    mean((from..matrix.rounds()).map(|t| {
        matrix
            .measured_row(t)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }))
}

fn count_switches(records: &[RoundRecord]) -> usize {
    // the first association is not a switch
    records
        .windows(2)
        .filter(|w| w[0].chosen != w[1].chosen)
        .count()
}

/// Mean of the latest `window` measured loads of `channel` up to and including round `t`.
pub fn realized_average(matrix: &LoadMatrix, t: usize, channel: ChannelId, window: usize) -> f64 {
    let start = (t + 1).saturating_sub(window);
    mean((start..=t).map(|r| matrix.measured_load(r, channel))).unwrap_or(0.0)
}

/// Per-channel absolute errors of `estimates` at round `t` against the true
/// load and against the realized `window`-sample average.
pub fn channel_errors(
    matrix: &LoadMatrix,
    t: usize,
    window: usize,
    estimates: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    matrix
        .channel_ids()
        .zip(estimates)
        .map(|(ch, &e)| {
            (
                (e - matrix.true_load(t, ch)).abs(),
                (e - realized_average(matrix, t, ch, window)).abs(),
            )
        })
        .unzip()
}

fn point_estimates(est: &EstimateVector, policy: SelectionPolicy) -> Vec<f64> {
    est.entries
        .iter()
        .map(|e| {
            if policy.uses_gpr() {
                e.posterior.clamped_mean()
            } else {
                e.benchmark
            }
        })
        .collect()
}

/// Measures K channels per round chosen by `config.policy`, after a
/// round-robin bootstrap that gives every channel `w` samples.
pub fn run_selective(
    matrix: &LoadMatrix,
    timing: &MeasurementTiming,
    config: &SelectiveConfig,
) -> Result<(Vec<RoundRecord>, ExperimentSummary)> {
    let m = matrix.channels();
    if config.k == 0 || config.k > m {
        return Err(Error::Config(format!("K = {} outside 1..={m}", config.k)));
    }
    if config.window == 0 {
        return Err(Error::Config("window length must be at least 1".into()));
    }
    let mut tracker = LoadTracker::with_input(m, config.window, config.gpr_input)?;
    let per_round = timing.duration_ms() * config.k as u64;
    let n_samples = timing.n_of_t();

    let mut current: Option<ChannelId> = None;
    let mut bootstrap_round = 0u64;
    let mut records = Vec::with_capacity(matrix.rounds());
    for t in 0..matrix.rounds() {
        let round = Round(t as u64);
        let estimates = tracker.estimate_all(round, &config.kernel)?;
        let bootstrap = tracker.bootstrapping();
        let set = if bootstrap {
            let s = bootstrap_schedule(m, config.k, bootstrap_round)?;
            bootstrap_round += 1;
            s
        } else {
            select_set(&estimates, config.k, config.policy)?
        };

        let measured: Vec<(ChannelId, f64)> = set
            .iter()
            .map(|ch| (ch, matrix.measured_load(t, ch)))
            .collect();
        for &(channel, busy_fraction) in &measured {
            tracker.record(&RawMeasurement {
                channel,
                round,
                busy_fraction,
                n_samples,
            })?;
        }
        let decision = choose_operating_channel(&measured, current, config.stay_on_tie)?;
        current = Some(decision.chosen);

        let point = point_estimates(&estimates, config.policy);
        let (err_true, err_avg) = channel_errors(matrix, t, config.window, &point);
        records.push(RoundRecord {
            round: t as u64,
            bootstrap,
            measured: set.as_slice().to_vec(),
            chosen: decision.chosen,
            switched: decision.switched,
            chosen_load: matrix.measured_load(t, decision.chosen),
            min_load: matrix
                .measured_row(t)
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
            estimates: point,
            err_true,
            err_avg,
            cumulative_cost_ms: per_round * (t as u64 + 1),
        });
    }

    let evaluated: Vec<&RoundRecord> = records
        .iter()
        .filter(|r| config.include_bootstrap || !r.bootstrap)
        .collect();
    let (err_true, err_avg) = estimation_error(&records, config.include_bootstrap);
    let summary = ExperimentSummary {
        avg_selected_load: mean(evaluated.iter().map(|r| r.chosen_load)),
        cost_ms: per_round,
        err_true,
        err_avg,
        switches: evaluated
            .iter()
            .filter(|r| r.switched && r.round > 0)
            .count(),
        evaluated_rounds: evaluated.len(),
        bootstrap_rounds: records.iter().filter(|r| r.bootstrap).count(),
    };
    Ok((records, summary))
}

/// Mean absolute estimation error over rounds and channels, against the true
/// load and against the realized window average. `None` when no round qualifies.
pub fn estimation_error(
    records: &[RoundRecord],
    include_bootstrap: bool,
) -> (Option<f64>, Option<f64>) {
    let rows = || {
        records
            .iter()
            .filter(move |r| include_bootstrap || !r.bootstrap)
    };
    (
        mean(rows().flat_map(|r| r.err_true.iter().copied())),
        mean(rows().flat_map(|r| r.err_avg.iter().copied())),
    )
}

/// Index of the first round after bootstrap, or the number of rounds if
/// bootstrap never finishes.
pub fn first_steady_round(records: &[RoundRecord]) -> usize {
    records
        .iter()
        .position(|r| !r.bootstrap)
        .unwrap_or(records.len())
}

/// Full-scan reference row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveRow {
    #[serde(rename = "L1")]
    pub l1: f64,
    pub c1_ms: u64,
}

/// One (K, w, policy) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub w: usize,
    pub policy: SelectionPolicy,
    #[serde(rename = "L2")]
    pub l2: Option<f64>,
    /// Full-scan average over the same rounds that `L2` averages.
    #[serde(rename = "L1_window")]
    pub l1_window: Option<f64>,
    pub c2_ms: u64,
    pub err_true: Option<f64>,
    pub err_avg: Option<f64>,
    pub switches: usize,
    pub bootstrap_rounds: usize,
}

impl RunRow {
    pub fn from_run(
        matrix: &LoadMatrix,
        config: &SelectiveConfig,
        records: &[RoundRecord],
        s: &ExperimentSummary,
    ) -> Self {
        let from = if config.include_bootstrap {
            0
        } else {
            first_steady_round(records)
        };
        Self {
            k: config.k,
            w: config.window,
            policy: config.policy,
            l2: s.avg_selected_load,
            l1_window: exhaustive_average(matrix, from),
            c2_ms: s.cost_ms,
            err_true: s.err_true,
            err_avg: s.err_avg,
            switches: s.switches,
            bootstrap_rounds: s.bootstrap_rounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub exhaustive: ExhaustiveRow,
    pub runs: Vec<RunRow>,
}

impl SweepTable {
    /// True when `L2` never rises by more than `tol` as K grows, for every
    /// (w, policy) series in the table. Rows without an `L2` are skipped.
    pub fn l2_non_increasing_in_k(&self, tol: f64) -> bool {
        let mut series: Vec<&RunRow> = self.runs.iter().collect();
        series.sort_by(|a, b| (a.policy, a.w, a.k).cmp(&(b.policy, b.w, b.k)));
        series
            .windows(2)
            .filter(|p| p[0].policy == p[1].policy && p[0].w == p[1].w)
            .all(|p| match (p[0].l2, p[1].l2) {
                (Some(a), Some(b)) => b <= a + tol,
                _ => true,
            })
    }
}

/// Runs every (K, w, policy) combination plus one full scan.
///
/// `base` supplies the kernel and flags; its K, window and policy are replaced
/// per cell. Rows come out ordered by policy, then w, then K.
pub fn sweep(
    matrix: &LoadMatrix,
    timing: &MeasurementTiming,
    ks: &[usize],
    windows: &[usize],
    policies: &[SelectionPolicy],
    base: &SelectiveConfig,
) -> Result<SweepTable> {
    let (_, full) = run_exhaustive(matrix, timing)?;
    let cells: Vec<SelectiveConfig> = policies
        .iter()
        .flat_map(|&policy| {
            windows.iter().flat_map(move |&window| {
                ks.iter().map(move |&k| SelectiveConfig {
                    k,
                    window,
                    policy,
                    ..*base
                })
            })
        })
        .collect();
    let runs = cells
        .par_iter()
        .map(|config| {
            let (records, summary) = run_selective(matrix, timing, config)?;
            Ok(RunRow::from_run(matrix, config, &records, &summary))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        exhaustive: ExhaustiveRow {
            l1: full
                .avg_selected_load
                .expect("matrix has at least one round"),
            c1_ms: full.cost_ms,
        },
        runs,
    })
}
