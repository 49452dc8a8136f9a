//! Helpers shared by the integration targets.
#![allow(dead_code)]

use fsard::markov::{build_transition_matrix, steady_state};
use fsard::simulator::{SchemeSpec, SimOptions, SimResult};
use fsard::{simulate_replications, ProtocolConfig, Scheme};

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimate compared against a reference value.
#[derive(Debug)]
pub struct Deviation {
    pub label: String,
    pub expected: f64,
    pub observed: f64,
    pub se: f64,
}

impl Deviation {
    pub fn z(&self) -> f64 {
        (self.observed - self.expected).abs() / self.se
    }
}

impl std::fmt::Display for Deviation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: expected {:.6}, observed {:.6} (se {:.2e}, z {:.2})",
            self.label,
            self.expected,
            self.observed,
            self.se,
            self.z()
        )
    }
}

/// Independent FSA-RD replications for the frame-level checks.
pub fn frame_runs(cfg: &ProtocolConfig, scheme: Scheme, horizon: u64, reps: u64, seed: u64) -> Vec<SimResult> {
    let spec = SchemeSpec::fsa(scheme, *cfg);
    let opts = SimOptions::new(horizon, spec.default_warmup(), seed);
    simulate_replications(&spec, &opts, reps).unwrap().runs
}

/// Stationary law against the per-replication frequency of each active count.
///
/// The standard error is the spread over replications, floored at the
/// i.i.d. binomial value for the pooled frame count. Bins expected to hold
/// fewer than 50 frames in total are skipped.
pub fn occupancy_deviations(cfg: &ProtocolConfig, runs: &[SimResult]) -> Vec<Deviation> {
    let pi = steady_state(&build_transition_matrix(cfg).unwrap()).unwrap().pi;
    let stats: Vec<_> = runs.iter().map(|r| r.frame_stats.as_ref().unwrap()).collect();
    let total: u64 = stats.iter().map(|s| s.frames).sum();
    let mut out = Vec::new();
    for (state, &p) in pi.iter().enumerate() {
        if p * (total as f64) < 50.0 {
            continue;
        }
        let freqs: Vec<f64> = stats
            .iter()
            .map(|s| s.active_histogram.get(state).copied().unwrap_or(0) as f64 / s.frames as f64)
            .collect();
        let (mean, se) = mean_se(&freqs);
        let floor = (p * (1.0 - p) / total as f64).sqrt();
        out.push(Deviation {
            label: format!("pi[{state}]"),
            expected: p,
            observed: mean,
            se: se.max(floor),
        });
    }
    out
}
