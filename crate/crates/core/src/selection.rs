//! Which channels to measure each round, and which one to operate on.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cca::ChannelId;
use crate::error::{Error, Result};
use crate::gpr::Posterior;
use crate::tracker::EstimateVector;

/// Channels measured in one round, in ranking order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelSet(Vec<ChannelId>);

impl ChannelSet {
    pub fn new(channels: Vec<ChannelId>) -> Result<Self> {
        let mut sorted = channels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != channels.len() {
            return Err(Error::Domain("channel set has duplicate members".into()));
        }
        if channels.is_empty() {
            return Err(Error::Domain("channel set is empty".into()));
        }
        Ok(Self(channels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, channel: ChannelId) -> bool {
        self.0.contains(&channel)
    }

    pub fn iter(&self) -> impl Iterator<Item = ChannelId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[ChannelId] {
        &self.0
    }

    /// Members in ascending channel order.
    pub fn sorted(&self) -> Vec<ChannelId> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }
}

/// How the measured set is ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Top-K by `variance * clamped mean`.
    WeightProduct,
    /// Top-K by posterior variance.
    VarianceOnly,
    /// Bottom-K by the moving-average load estimate.
    BenchmarkMavg,
}

impl SelectionPolicy {
    pub const ALL: [SelectionPolicy; 3] = [
        SelectionPolicy::WeightProduct,
        SelectionPolicy::VarianceOnly,
        SelectionPolicy::BenchmarkMavg,
    ];

    /// Short name used on the command line and in result files.
    pub fn name(self) -> &'static str {
        match self {
            SelectionPolicy::WeightProduct => "weight",
            SelectionPolicy::VarianceOnly => "variance",
            SelectionPolicy::BenchmarkMavg => "benchmark",
        }
    }

    /// Whether load estimates for this policy come from the GP posterior.
    pub fn uses_gpr(self) -> bool {
        !matches!(self, SelectionPolicy::BenchmarkMavg)
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weight" | "weight_product" => Ok(SelectionPolicy::WeightProduct),
            "variance" | "variance_only" => Ok(SelectionPolicy::VarianceOnly),
            "benchmark" | "benchmark_mavg" => Ok(SelectionPolicy::BenchmarkMavg),
            other => Err(Error::Config(format!(
                "unknown policy {other:?} (expected weight, variance or benchmark)"
            ))),
        }
    }
}

/// Channel with the minimum load; ties go to the lowest channel number.
pub fn exhaustive_select(loads: &[f64]) -> Result<ChannelId> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &l) in loads.iter().enumerate() {
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((i, l));
        }
    }
    best.map(|(i, _)| ChannelId::from_index(i))
        .ok_or_else(|| Error::Domain("no channel loads to select from".into()))
}

/// Measurement priority `v * clamp(mean, 0, 1)`.
pub fn weight(p: &Posterior) -> f64 {
    p.variance * p.clamped_mean()
}

/// Picks the K channels to measure.
///
/// Ties on the policy score fall back to higher posterior variance, then to
/// the lower channel number.
pub fn select_set(
    estimates: &EstimateVector,
    k: usize,
    policy: SelectionPolicy,
) -> Result<ChannelSet> {
    let m = estimates.len();
    if k == 0 || k > m {
        return Err(Error::Domain(format!("K = {k} outside 1..={m}")));
    }
    let mut ranked: Vec<(f64, f64, ChannelId)> = estimates
        .entries
        .iter()
        .map(|e| {
            let score = match policy {
                SelectionPolicy::WeightProduct => weight(&e.posterior),
                SelectionPolicy::VarianceOnly => e.posterior.variance,
                // ascending load == descending negated load
                SelectionPolicy::BenchmarkMavg => -e.benchmark,
            };
            (score, e.posterior.variance, e.channel)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
            .then(a.2.cmp(&b.2))
    });
    ChannelSet::new(ranked.into_iter().take(k).map(|(_, _, c)| c).collect())
}

/// Outcome of the operating-channel decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchDecision {
    pub previous: Option<ChannelId>,
    pub chosen: ChannelId,
    pub switched: bool,
}

/// Picks the least-loaded measured channel.
///
/// With `stay_on_tie`, an incumbent whose measured load equals the minimum is
/// kept. Otherwise ties go to the lowest channel number.
pub fn choose_operating_channel(
    measured: &[(ChannelId, f64)],
    current: Option<ChannelId>,
    stay_on_tie: bool,
) -> Result<SwitchDecision> {
    let min = measured
        .iter()
        .map(|&(_, l)| l)
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .ok_or_else(|| Error::Domain("no measured channels to choose from".into()))?;
    let incumbent =
        current.filter(|c| stay_on_tie && measured.iter().any(|&(ch, l)| ch == *c && l == min));
    let chosen = incumbent.unwrap_or_else(|| {
        measured
            .iter()
            .filter(|&&(_, l)| l == min)
            .map(|&(ch, _)| ch)
            .min()
            .expect("minimum is attained")
    });
    Ok(SwitchDecision {
        previous: current,
        chosen,
        switched: current != Some(chosen),
    })
}

/// Round-robin cold-start schedule: round `r` measures the K channels
/// starting at `(r * K) mod M + 1`, wrapping past M.
pub fn bootstrap_schedule(m: usize, k: usize, round: u64) -> Result<ChannelSet> {
    if k == 0 || k > m {
        return Err(Error::Domain(format!("K = {k} outside 1..={m}")));
    }
    let start = ((round % m as u64) * k as u64 % m as u64) as usize;
    ChannelSet::new(
        (0..k)
            .map(|i| ChannelId::from_index((start + i) % m))
            .collect(),
    )
}
