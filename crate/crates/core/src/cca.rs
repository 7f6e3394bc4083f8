//! Clear-channel-assessment measurement simulation.
//!
//! Ground-truth traffic is piecewise-stationary: each channel follows a
//! schedule of regimes, and within a regime every mini-slot is independently
//! busy with the regime's probability. A measurement of duration `T` averages
//! `n(T)` such busy/idle bits.
//!
//! Every mini-slot bit is derived from a hash of `(seed, channel, round, slot)`,
//! so any matrix entry can be regenerated on its own and the result does not
//! depend on evaluation order or thread count.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpr::Round;

/// 1-based channel number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub u16);

impl ChannelId {
    /// Zero-based position of this channel in per-channel arrays.
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }

    pub fn from_index(index: usize) -> Self {
        ChannelId(u16::try_from(index + 1).expect("channel index fits in u16"))
    }
}

impl std::fmt::Display for ChannelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

pub const DEFAULT_MINISLOT_US: u64 = 100;

/// Measurement duration `T` and the CCA mini-slot length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementTiming {
    duration_ms: u64,
    minislot_us: u64,
}

impl MeasurementTiming {
    pub fn new(duration_ms: u64, minislot_us: u64) -> Result<Self> {
        if duration_ms == 0 || minislot_us == 0 {
            return Err(Error::Config(
                "measurement duration and mini-slot must both be positive".into(),
            ));
        }
        let timing = Self {
            duration_ms,
            minislot_us,
        };
        if timing.n_of_t() == 0 {
            return Err(Error::Config(format!(
                "a {minislot_us} us mini-slot does not fit in {duration_ms} ms"
            )));
        }
        Ok(timing)
    }

    pub fn duration_ms(&self) -> u64 {
        self.duration_ms
    }

    pub fn minislot_us(&self) -> u64 {
        self.minislot_us
    }

    /// Number of mini-slots per measurement, `floor(T / slot)`.
    pub fn n_of_t(&self) -> u64 {
        self.duration_ms * 1000 / self.minislot_us
    }
}

impl Default for MeasurementTiming {
    fn default() -> Self {
        Self {
            duration_ms: 100,
            minislot_us: DEFAULT_MINISLOT_US,
        }
    }
}

/// Regime start round and busy probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment(pub u64, pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRegimes {
    pub channel: u16,
    pub segments: Vec<Segment>,
}

/// Per-channel regime schedules plus the seed for mini-slot sampling.
///
/// The serialized form is the traffic config file:
/// `{"seed": u64, "channels": M, "regimes": [{"channel": n, "segments": [[start, p], ...]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    pub seed: u64,
    pub channels: u16,
    pub regimes: Vec<ChannelRegimes>,
}

const REFERENCE_TRAFFIC: &str = include_str!("../../../configs/reference_traffic.json");

impl TrafficModel {
    /// Checks that every channel 1..=M has a well-formed regime schedule.
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::Config(
                "traffic model needs at least one channel".into(),
            ));
        }
        let mut seen = vec![false; usize::from(self.channels)];
        for r in &self.regimes {
            if r.channel == 0 || r.channel > self.channels {
                return Err(Error::Config(format!(
                    "regime for channel {} outside 1..={}",
                    r.channel, self.channels
                )));
            }
            let slot = &mut seen[usize::from(r.channel) - 1];
            if *slot {
                return Err(Error::Config(format!(
                    "channel {} has two regime lists",
                    r.channel
                )));
            }
            *slot = true;
            match r.segments.first() {
                Some(Segment(0, _)) => {}
                _ => {
                    return Err(Error::Config(format!(
                        "channel {}: first segment must start at round 0",
                        r.channel
                    )))
                }
            }
            for pair in r.segments.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return Err(Error::Config(format!(
                        "channel {}: segment starts must be strictly increasing",
                        r.channel
                    )));
                }
            }
            if let Some(s) = r.segments.iter().find(|s| !(0.0..=1.0).contains(&s.1)) {
                return Err(Error::Config(format!(
                    "channel {}: busy probability {} outside [0, 1]",
                    r.channel, s.1
                )));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!(
                "channel {} has no regimes",
                missing + 1
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrafficModel = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid traffic config: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The 13-channel reference schedule shipped with the repository.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_TRAFFIC).expect("bundled reference traffic config is valid")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Random regime-switching model: segment lengths uniform in
    /// `min_len..=max_len` rounds and busy probabilities uniform in `[0.05, 0.95]`.
    pub fn synthetic(seed: u64, channels: u16, rounds: u64, min_len: u64, max_len: u64) -> Self {
        assert!(channels >= 1 && min_len >= 1 && min_len <= max_len);
        let span = max_len - min_len + 1;
        let regimes = (1..=channels)
            .map(|ch| {
                let mut segments = Vec::new();
                let mut start = 0;
                let mut draw = 0u64;
                while start < rounds.max(1) {
                    let u = unit(slot_hash(seed ^ SYNTH_SALT, ch, draw, 0));
                    let len = min_len + slot_hash(seed ^ SYNTH_SALT, ch, draw, 1) % span;
                    segments.push(Segment(start, 0.05 + 0.9 * u));
                    start += len;
                    draw += 1;
                }
                ChannelRegimes {
                    channel: ch,
                    segments,
                }
            })
            .collect();
        Self {
            seed,
            channels,
            regimes,
        }
    }

    /// Busy probability of `channel` at `round`.
    pub fn busy_probability(&self, channel: ChannelId, round: Round) -> Result<f64> {
        let regimes = self
            .regimes
            .iter()
            .find(|r| r.channel == channel.0)
            .ok_or_else(|| {
                Error::Domain(format!("channel {channel} outside 1..={}", self.channels))
            })?;
        let idx = regimes.segments.partition_point(|s| s.0 <= round.0);
        Ok(regimes.segments[idx.saturating_sub(1)].1)
    }
}

const SYNTH_SALT: u64 = 0x005E_ED0F_7AFF_1C00;

/// One CCA measurement of one channel in one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawMeasurement {
    pub channel: ChannelId,
    pub round: Round,
    pub busy_fraction: f64,
    pub n_samples: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, channel: u16, round: u64) -> u64 {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ u64::from(channel));
    splitmix64(h ^ round)
}

fn slot_hash(seed: u64, channel: u16, round: u64, slot: u64) -> u64 {
    splitmix64(stream_key(seed, channel, round) ^ slot)
}

/// Uniform in `[0, 1)` from the top 53 bits.
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn busy_count(seed: u64, channel: u16, round: u64, n: u64, p: f64) -> u64 {
    let key = stream_key(seed, channel, round);
    (0..n)
        .filter(|&slot| unit(splitmix64(key ^ slot)) < p)
        .count() as u64
}

/// Simulates one CCA measurement of `channel` at `round`.
pub fn measure(
    model: &TrafficModel,
    channel: ChannelId,
    round: Round,
    timing: &MeasurementTiming,
) -> Result<RawMeasurement> {
    if channel.0 == 0 || channel.0 > model.channels {
        return Err(Error::Domain(format!(
            "channel {channel} outside 1..={}",
            model.channels
        )));
    }
    let p = model.busy_probability(channel, round)?;
    let n = timing.n_of_t();
    let busy = busy_count(model.seed, channel.0, round.0, n, p);
    Ok(RawMeasurement {
        channel,
        round,
        busy_fraction: busy as f64 / n as f64,
        n_samples: n,
    })
}

/// Ground-truth and measured load for every (round, channel) of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadMatrix {
    rounds: usize,
    channels: usize,
    true_load: Vec<f64>,
    measured_load: Vec<f64>,
}

impl LoadMatrix {
    /// Both planes are row-major `[round][channel]`.
    pub fn new(
        rounds: usize,
        channels: usize,
        true_load: Vec<f64>,
        measured_load: Vec<f64>,
    ) -> Result<Self> {
        if rounds == 0 || channels == 0 {
            return Err(Error::Precondition(
                "load matrix needs at least one round and channel".into(),
            ));
        }
        if channels > usize::from(u16::MAX) {
            return Err(Error::Precondition(format!(
                "{channels} channels is too many"
            )));
        }
        let cells = rounds * channels;
        if true_load.len() != cells || measured_load.len() != cells {
            return Err(Error::Precondition(format!(
                "expected {cells} entries per plane, got {} and {}",
                true_load.len(),
                measured_load.len()
            )));
        }
        if let Some(v) = true_load
            .iter()
            .chain(&measured_load)
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Precondition(format!("load {v} outside [0, 1]")));
        }
        Ok(Self {
            rounds,
            channels,
            true_load,
            measured_load,
        })
    }

    /// Matrix whose true plane equals its measured plane.
    pub fn from_measured(rounds: usize, channels: usize, measured_load: Vec<f64>) -> Result<Self> {
        Self::new(rounds, channels, measured_load.clone(), measured_load)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn channel_ids(&self) -> impl Iterator<Item = ChannelId> {
        (0..self.channels).map(ChannelId::from_index)
    }

    pub fn true_load(&self, round: usize, channel: ChannelId) -> f64 {
        self.true_load[round * self.channels + channel.index()]
    }

    pub fn measured_load(&self, round: usize, channel: ChannelId) -> f64 {
        self.measured_load[round * self.channels + channel.index()]
    }

    pub fn true_row(&self, round: usize) -> &[f64] {
        &self.true_load[round * self.channels..(round + 1) * self.channels]
    }

    pub fn measured_row(&self, round: usize) -> &[f64] {
        &self.measured_load[round * self.channels..(round + 1) * self.channels]
    }
}

/// Pre-generates the true and measured planes for `rounds` rounds.
pub fn generate_matrix(
    model: &TrafficModel,
    rounds: usize,
    timing: &MeasurementTiming,
) -> Result<LoadMatrix> {
    model.validate()?;
    if rounds == 0 {
        return Err(Error::Config("need at least one round".into()));
    }
    let channels = usize::from(model.channels);
    let cells: Vec<(f64, f64)> = (0..rounds * channels)
        .into_par_iter()
        .map(|cell| {
            let round = Round((cell / channels) as u64);
            let channel = ChannelId::from_index(cell % channels);
            let p = model.busy_probability(channel, round)?;
            let m = measure(model, channel, round, timing)?;
            Ok((p, m.busy_fraction))
        })
        .collect::<Result<_>>()?;
    let (true_load, measured_load) = cells.into_iter().unzip();
    LoadMatrix::new(rounds, channels, true_load, measured_load)
}
