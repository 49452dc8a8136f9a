//! Slot-level Monte Carlo for FSA-RD, FSA-RD-One and slotted ALOHA.
//!
//! Slots are numbered from 0; frame `k` covers slots `kM .. (k+1)M`, with
//! the reservation slot first. Each user generates an update at the start of
//! a slot with probability `rho` (sampled by geometric skipping, which has
//! the same law as per-slot Bernoulli draws). An update generated in frame
//! `k` can be sent from frame `k + 1` on.
//!
//! A delivery in slot `t` of an update generated in slot `g` sets the AoI
//! of slot `t + 1` to `t - g + 1`; otherwise the AoI grows by one per slot.
//! All users start with AoI 1 and empty buffers. The time average is taken
//! over slots `warmup .. horizon`.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`;
//! replication `r` uses stream `r` of that seed (`set_stream(r)`).

mod engine;
mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{AlohaConfig, ProtocolConfig, Scheme};
use crate::error::{Error, Result};

pub use stats::{write_trace_csv, Accumulator, EmpiricalMoments, MomentAccumulator, ReceptionRecord};

/// Largest accepted horizon, leaving headroom for slot arithmetic.
pub const MAX_HORIZON: u64 = 1 << 60;
/// Receptions needed before sample moments are reported.
pub const MIN_MOMENT_SAMPLES: usize = 1_000;
/// Batches used for the single-run confidence interval.
pub const BATCHES: u64 = 20;

/// The access scheme to simulate and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeSpec {
    FsaRd(ProtocolConfig),
    FsaRdOne(ProtocolConfig),
    SlottedAloha(AlohaConfig),
}

impl SchemeSpec {
    pub fn fsa(scheme: Scheme, config: ProtocolConfig) -> Self {
        match scheme {
            Scheme::FsaRd => SchemeSpec::FsaRd(config),
            Scheme::FsaRdOne => SchemeSpec::FsaRdOne(config),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SchemeSpec::FsaRd(_) => "FSA_RD",
            SchemeSpec::FsaRdOne(_) => "FSA_RD_ONE",
            SchemeSpec::SlottedAloha(_) => "SLOTTED_ALOHA",
        }
    }

    pub fn users(&self) -> usize {
        match self {
            SchemeSpec::FsaRd(c) | SchemeSpec::FsaRdOne(c) => c.users,
            SchemeSpec::SlottedAloha(c) => c.users,
        }
    }

    /// Slots per frame; slotted ALOHA counts as one-slot frames.
    pub fn frame_len(&self) -> usize {
        match self {
            SchemeSpec::FsaRd(c) | SchemeSpec::FsaRdOne(c) => c.frame_len,
            SchemeSpec::SlottedAloha(_) => 1,
        }
    }

    /// `10^4` frames' worth of slots.
    pub fn default_warmup(&self) -> u64 {
        10_000 * self.frame_len() as u64
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SchemeSpec::FsaRd(c) | SchemeSpec::FsaRdOne(c) => c.validate(),
            SchemeSpec::SlottedAloha(c) => c.validate(),
        }
    }
}

/// Run controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    /// Stream index; distinct replications of one seed are independent.
    pub replication: u64,
    /// Keep every post-warmup reception in [`SimResult::trace`].
    pub record_trace: bool,
}

impl SimOptions {
    pub fn new(horizon: u64, warmup: u64, seed: u64) -> Self {
        SimOptions {
            horizon,
            warmup,
            seed,
            replication: 0,
            record_trace: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn with_replication(mut self, replication: u64) -> Self {
        self.replication = replication;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.horizon > MAX_HORIZON {
            return Err(Error::Horizon(format!("{} exceeds the limit {MAX_HORIZON}", self.horizon)));
        }
        if self.horizon <= self.warmup {
            return Err(Error::Horizon(format!(
                "horizon {} must exceed warmup {}",
                self.horizon, self.warmup
            )));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replication);
        rng
    }
}

/// Frame-boundary statistics collected after warmup (FSA schemes only).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frames: u64,
    /// `active_histogram[i]`: frames that started with `i` active users.
    pub active_histogram: Vec<u64>,
    /// Sorted `(from, to, count)` for consecutive post-warmup frames.
    pub transitions: Vec<(u32, u32, u64)>,
    /// Reservation attempts by active users.
    pub reservations: u64,
    pub deliveries: u64,
    /// `delivery_slots[k]`: deliveries in frame slot `alpha = k + 2`.
    pub delivery_slots: Vec<u64>,
}

impl FrameStats {
    /// Empirical per-frame delivery probability of a reserving user.
    pub fn success_ratio(&self) -> f64 {
        self.deliveries as f64 / self.reservations as f64
    }
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub scheme: SchemeSpec,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub replication: u64,
    /// Mean of `per_user_aaoi`.
    pub network_aaoi: f64,
    pub per_user_aaoi: Vec<f64>,
    /// Post-warmup receptions.
    pub reception_count: u64,
    /// Sample moments over receptions that have a predecessor; `None`
    /// with fewer than two such receptions.
    pub empirical_moments: Option<EmpiricalMoments>,
    /// 95% half-width of `network_aaoi` from batch means within this run.
    pub ci_halfwidth: Option<f64>,
    pub frame_stats: Option<FrameStats>,
    pub trace: Option<Vec<ReceptionRecord>>,
}

/// Something that happened during a run, for observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEvent<'a> {
    Generation {
        user: u32,
        slot: u64,
    },
    /// Emitted after reservations are resolved. `choices` are
    /// `(user, minislot)` pairs of reserving users; `winners` are
    /// `(user, alpha)` pairs in data-slot order.
    Frame {
        index: u64,
        start: u64,
        active: &'a [u32],
        choices: &'a [(u32, u32)],
        winners: &'a [(u32, u32)],
    },
    /// Slotted ALOHA slot with at least one packet holder; `delivered`
    /// is set when exactly one of them transmitted.
    AlohaSlot {
        slot: u64,
        holders: u32,
        delivered: bool,
    },
    Reception {
        user: u32,
        slot: u64,
        generation_slot: u64,
        aoi_before: u64,
        aoi_after: u64,
    },
}

pub fn simulate(scheme: &SchemeSpec, horizon: u64, warmup: u64, seed: u64) -> Result<SimResult> {
    simulate_with(scheme, &SimOptions::new(horizon, warmup, seed))
}

pub fn simulate_slotted_aloha(cfg: &AlohaConfig, horizon: u64, warmup: u64, seed: u64) -> Result<SimResult> {
    simulate(&SchemeSpec::SlottedAloha(*cfg), horizon, warmup, seed)
}

pub fn simulate_with(scheme: &SchemeSpec, opts: &SimOptions) -> Result<SimResult> {
    simulate_observed(scheme, opts, |_| {})
}

/// Runs the simulation and reports every event to `observer`.
pub fn simulate_observed<F>(scheme: &SchemeSpec, opts: &SimOptions, observer: F) -> Result<SimResult>
where
    F: FnMut(SimEvent<'_>),
{
    scheme.validate()?;
    opts.validate()?;
    let mut rng = opts.rng();
    match scheme {
        SchemeSpec::FsaRd(c) => engine::run_fsa(scheme, c, false, opts, &mut rng, observer),
        SchemeSpec::FsaRdOne(c) => engine::run_fsa(scheme, c, true, opts, &mut rng, observer),
        SchemeSpec::SlottedAloha(c) => engine::run_aloha(scheme, c, opts, &mut rng, observer),
    }
}

/// Sample moments recomputed from a recorded trace.
pub fn empirical_moment_report(result: &SimResult) -> Result<EmpiricalMoments> {
    let trace = result
        .trace
        .as_ref()
        .ok_or_else(|| Error::domain("trace", "the run was made without trace recording"))?;
    let mut acc = MomentAccumulator::default();
    for r in trace {
        acc.push(r);
    }
    let got = acc.samples() as usize;
    if got < MIN_MOMENT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_MOMENT_SAMPLES,
            got,
        });
    }
    Ok(acc.summary())
}

/// Independent replications of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub runs: Vec<SimResult>,
    pub mean_aaoi: f64,
    /// 95% Student-t half-width over replications; `None` for one run.
    pub ci_halfwidth: Option<f64>,
}

/// Runs replications `0..reps` of `opts.seed` in parallel.
pub fn simulate_replications(scheme: &SchemeSpec, opts: &SimOptions, reps: u64) -> Result<ReplicationSummary> {
    if reps == 0 {
        return Err(Error::domain("reps", "at least one replication is required"));
    }
    let runs = (0..reps)
        .into_par_iter()
        .map(|r| simulate_with(scheme, &opts.with_replication(r)))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.network_aaoi).collect();
    let (mean_aaoi, ci_halfwidth) = mean_and_halfwidth(&values);
    Ok(ReplicationSummary {
        runs,
        mean_aaoi,
        ci_halfwidth,
    })
}

/// Sample mean and 95% Student-t half-width.
pub fn mean_and_halfwidth(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, Some(t * (var / n as f64).sqrt()))
}
