//! Per-channel measurement windows and load estimates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cca::{ChannelId, RawMeasurement};
use crate::error::{Error, Result};
use crate::gpr::{posterior, KernelParams, Posterior, Round};

/// Which samples feed the GP posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GprInput {
    /// Moving averages of the latest `w` raw measurements.
    #[default]
    Smoothed,
    /// Raw busy fractions, for ablation.
    Raw,
}

/// Sliding windows of one channel's latest `w` raw and smoothed samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelHistory {
    channel: ChannelId,
    window: usize,
    raw: VecDeque<(Round, f64)>,
    smoothed: VecDeque<(Round, f64)>,
    total: usize,
}

impl ChannelHistory {
    pub fn new(channel: ChannelId, window: usize) -> Self {
        Self {
            channel,
            window,
            raw: VecDeque::with_capacity(window + 1),
            smoothed: VecDeque::with_capacity(window + 1),
            total: 0,
        }
    }

    pub fn channel(&self) -> ChannelId {
        self.channel
    }

    pub fn last_round(&self) -> Option<Round> {
        self.raw.back().map(|&(r, _)| r)
    }

    /// Number of measurements ever recorded, including evicted ones.
    pub fn total_samples(&self) -> usize {
        self.total
    }

    pub fn raw_window(&self) -> impl ExactSizeIterator<Item = &(Round, f64)> {
        self.raw.iter()
    }

    pub fn smoothed_window(&self) -> impl ExactSizeIterator<Item = &(Round, f64)> {
        self.smoothed.iter()
    }

    fn push(&mut self, round: Round, busy_fraction: f64) -> Result<()> {
        if let Some(last) = self.last_round() {
            if round <= last {
                return Err(Error::Ordering {
                    channel: self.channel.0,
                    last: last.0,
                    got: round.0,
                });
            }
        }
        if !(0.0..=1.0).contains(&busy_fraction) {
            return Err(Error::Domain(format!(
                "busy fraction {busy_fraction} outside [0, 1]"
            )));
        }
        self.raw.push_back((round, busy_fraction));
        if self.raw.len() > self.window {
            self.raw.pop_front();
        }
        let avg = self.raw_mean().expect("window is non-empty after push");
        self.smoothed.push_back((round, avg));
        if self.smoothed.len() > self.window {
            self.smoothed.pop_front();
        }
        self.total += 1;
        Ok(())
    }

    fn raw_mean(&self) -> Option<f64> {
        if self.raw.is_empty() {
            None
        } else {
            Some(self.raw.iter().map(|&(_, l)| l).sum::<f64>() / self.raw.len() as f64)
        }
    }

    /// Moving average of the raw window, or 0 when nothing has been measured.
    pub fn benchmark_estimate(&self) -> f64 {
        self.raw_mean().unwrap_or(0.0)
    }

    pub fn posterior(
        &self,
        query: Round,
        params: &KernelParams,
        input: GprInput,
    ) -> Result<Posterior> {
        let samples: Vec<(Round, f64)> = match input {
            GprInput::Smoothed => self.smoothed.iter().copied().collect(),
            GprInput::Raw => self.raw.iter().copied().collect(),
        };
        posterior(&samples, query, params)
    }
}

/// Estimate for one channel at a query round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub channel: ChannelId,
    pub posterior: Posterior,
    /// Plain moving average of the latest `w` raw measurements.
    pub benchmark: f64,
}

/// One estimate per channel, indexed by `ChannelId::index`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVector {
    pub round: Round,
    pub entries: Vec<ChannelEstimate>,
}

impl EstimateVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, channel: ChannelId) -> &ChannelEstimate {
        &self.entries[channel.index()]
    }
}

/// Histories for channels `1..=M` sharing one window length.
#[derive(Debug, Clone)]
pub struct LoadTracker {
    window: usize,
    input: GprInput,
    histories: Vec<ChannelHistory>,
}

impl LoadTracker {
    pub fn new(channels: usize, window: usize) -> Result<Self> {
        Self::with_input(channels, window, GprInput::Smoothed)
    }

    pub fn with_input(channels: usize, window: usize, input: GprInput) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("window length must be at least 1".into()));
        }
        if channels == 0 {
            return Err(Error::Config("need at least one channel".into()));
        }
        Ok(Self {
            window,
            input,
            histories: (0..channels)
                .map(|i| ChannelHistory::new(ChannelId::from_index(i), window))
                .collect(),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn channels(&self) -> usize {
        self.histories.len()
    }

    pub fn history(&self, channel: ChannelId) -> &ChannelHistory {
        &self.histories[channel.index()]
    }

    /// Appends a measurement and its moving average to the channel's windows.
    pub fn record(&mut self, m: &RawMeasurement) -> Result<()> {
        let history = self
            .histories
            .get_mut(usize::from(m.channel.0).wrapping_sub(1))
            .ok_or_else(|| Error::Domain(format!("channel {} not tracked", m.channel)))?;
        history.push(m.round, m.busy_fraction)
    }

    /// True until every channel holds at least `w` samples.
    pub fn bootstrapping(&self) -> bool {
        self.histories.iter().any(|h| h.total < self.window)
    }

    /// Posterior and benchmark estimate of every channel at round `t`.
    pub fn estimate_all(&self, t: Round, params: &KernelParams) -> Result<EstimateVector> {
        let entries = self
            .histories
            .iter()
            .map(|h| {
                if let Some(last) = h.last_round() {
                    if last >= t {
                        return Err(Error::Precondition(format!(
                            "channel {} already has a sample at round {last}, cannot estimate round {t}",
                            h.channel
                        )));
                    }
                }
                Ok(ChannelEstimate {
                    channel: h.channel,
                    posterior: h.posterior(t, params, self.input)?,
                    benchmark: h.benchmark_estimate(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(EstimateVector { round: t, entries })
    }
}
