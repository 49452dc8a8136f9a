//! Parameter searches: `(gamma, M)` grids for the analytical FSA models and
//! simulated `tau` grids for slotted ALOHA.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{aaoi_fsa_rd_one_with, aaoi_fsa_rd_with, near_optimal_gamma};
use crate::combinatorics::SingletonTable;
use crate::config::{AlohaConfig, ProtocolConfig, Scheme};
use crate::error::{Error, Result};
use crate::output::{fmt_num, write_csv};
use crate::simulator::{simulate_replications, SchemeSpec, SimOptions};

/// AAoI values closer than this (relative) count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Smallest accepted per-replication horizon for simulated searches.
pub const MIN_SIM_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchScheme {
    FsaRd,
    FsaRdOne,
    SlottedAloha,
}

impl From<Scheme> for SearchScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::FsaRd => SearchScheme::FsaRd,
            Scheme::FsaRdOne => SearchScheme::FsaRdOne,
        }
    }
}

impl SearchScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchScheme::FsaRd => "FSA_RD",
            SearchScheme::FsaRdOne => "FSA_RD_ONE",
            SearchScheme::SlottedAloha => "SLOTTED_ALOHA",
        }
    }
}

/// One evaluated grid point. `probability` is `gamma` for the FSA schemes
/// and `tau` for slotted ALOHA, where `frame_len` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub frame_len: Option<usize>,
    pub probability: f64,
    pub aaoi: f64,
    /// 95% half-width over replications (simulated searches only).
    pub ci_halfwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub scheme: SearchScheme,
    pub users: usize,
    /// `None` for slotted ALOHA.
    pub minislots: Option<usize>,
    pub rho: f64,
    /// Best `gamma` (FSA) or `tau` (slotted ALOHA).
    pub best_probability: f64,
    pub best_frame_len: Option<usize>,
    pub best_aaoi: f64,
    pub best_ci_halfwidth: Option<f64>,
    /// Grid points whose confidence interval overlaps the optimum's among
    /// the optimum's grid neighbours. Non-empty only for forced results.
    pub overlapping: Vec<f64>,
    /// Every evaluated point, sorted by `(frame_len, probability)`.
    pub search_trace: Vec<SearchPoint>,
}

impl OptimizationResult {
    fn from_trace(
        scheme: SearchScheme,
        users: usize,
        minislots: Option<usize>,
        rho: f64,
        mut trace: Vec<SearchPoint>,
    ) -> Result<Self> {
        trace.sort_by(|a, b| {
            a.frame_len
                .cmp(&b.frame_len)
                .then(a.probability.total_cmp(&b.probability))
        });
        let best = select_best(&trace).ok_or(Error::EmptyGrid)?;
        Ok(OptimizationResult {
            scheme,
            users,
            minislots,
            rho,
            best_probability: best.probability,
            best_frame_len: best.frame_len,
            best_aaoi: best.aaoi,
            best_ci_halfwidth: best.ci_halfwidth,
            overlapping: Vec::new(),
            search_trace: trace,
        })
    }

    /// One CSV row per grid point.
    pub fn write_trace_csv<W: Write, S: Serialize>(&self, out: W, metadata: &S) -> Result<()> {
        let param = if self.scheme == SearchScheme::SlottedAloha { "tau" } else { "gamma" };
        let columns = ["scheme", "N", "V", "rho", "M", param, "aaoi", "ci_halfwidth"];
        let rows: Vec<Vec<String>> = self
            .search_trace
            .iter()
            .map(|p| {
                vec![
                    self.scheme.as_str().to_string(),
                    self.users.to_string(),
                    self.minislots.map(|v| v.to_string()).unwrap_or_default(),
                    fmt_num(self.rho),
                    p.frame_len.map(|m| m.to_string()).unwrap_or_default(),
                    fmt_num(p.probability),
                    fmt_num(p.aaoi),
                    p.ci_halfwidth.map(fmt_num).unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(out, metadata, &columns, &rows)
    }

    /// Summary record without the search trace.
    pub fn summary_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("plain data serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("search_trace");
            obj.insert("grid_points".into(), self.search_trace.len().into());
        }
        v
    }
}

/// Smallest AAoI; ties within [`TIE_TOLERANCE`] go to the smaller `M`,
/// then the smaller probability. `trace` must be sorted by those keys.
fn select_best(trace: &[SearchPoint]) -> Option<SearchPoint> {
    let min = trace.iter().map(|p| p.aaoi).fold(f64::INFINITY, f64::min);
    if trace.is_empty() {
        return None;
    }
    if !min.is_finite() {
        return trace.first().copied();
    }
    let slack = TIE_TOLERANCE * min.abs().max(1.0);
    trace.iter().find(|p| p.aaoi <= min + slack).copied()
}

fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = grid.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
        return Err(Error::domain(name, format!("grid value {bad} not in (0, 1]")));
    }
    Ok(())
}

/// `0.01, 0.02, ..., 1.00`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

fn evaluate_fsa(
    scheme: Scheme,
    table: &SingletonTable,
    users: usize,
    minislots: usize,
    rho: f64,
    frame_len: usize,
    gamma: f64,
) -> Result<SearchPoint> {
    let cfg = ProtocolConfig::new(users, frame_len, minislots, rho, gamma)?;
    let report = match scheme {
        Scheme::FsaRd => aaoi_fsa_rd_with(&cfg, table)?,
        Scheme::FsaRdOne => aaoi_fsa_rd_one_with(&cfg, table)?,
    };
    Ok(SearchPoint {
        frame_len: Some(frame_len),
        probability: gamma,
        aaoi: report.aaoi,
        ci_halfwidth: None,
    })
}

/// Analytical search over `grids[M]` for each frame length `M = 2..=V+1`.
fn search_fsa<G>(scheme: Scheme, users: usize, minislots: usize, rho: f64, grid_for: G) -> Result<OptimizationResult>
where
    G: Fn(usize) -> Result<Vec<f64>>,
{
    ProtocolConfig::new(users, 2, minislots, rho, 1.0)?;
    let mut points = Vec::new();
    for m in 2..=minislots + 1 {
        for g in grid_for(m)? {
            points.push((m, g));
        }
    }
    let table = SingletonTable::new(minislots, users);
    let trace = points
        .par_iter()
        .map(|&(m, g)| evaluate_fsa(scheme, &table, users, minislots, rho, m, g))
        .collect::<Result<Vec<_>>>()?;
    OptimizationResult::from_trace(scheme.into(), users, Some(minislots), rho, trace)
}

/// Exhaustive FSA-RD search over `gamma_grid x {2..=V+1}`.
pub fn optimize_fsa_rd(users: usize, minislots: usize, rho: f64, gamma_grid: &[f64]) -> Result<OptimizationResult> {
    check_grid(gamma_grid, "gamma")?;
    search_fsa(Scheme::FsaRd, users, minislots, rho, |_| Ok(gamma_grid.to_vec()))
}

/// FSA-RD search on the default grid, with the near-optimal `gamma` of
/// each frame length added to that frame length's grid.
pub fn optimize_fsa_rd_default(users: usize, minislots: usize, rho: f64) -> Result<OptimizationResult> {
    search_fsa(Scheme::FsaRd, users, minislots, rho, |m| {
        let mut grid = default_gamma_grid();
        let extra = near_optimal_gamma(users, minislots, m, rho)?.value();
        if !grid.iter().any(|&g| g == extra) {
            grid.push(extra);
        }
        Ok(grid)
    })
}

/// FSA-RD-One with `gamma` set to the near-optimal value for each `M`.
pub fn optimize_fsa_rd_one(users: usize, minislots: usize, rho: f64) -> Result<OptimizationResult> {
    search_fsa(Scheme::FsaRdOne, users, minislots, rho, |m| {
        Ok(vec![near_optimal_gamma(users, minislots, m, rho)?.value()])
    })
}

/// Exhaustive FSA-RD-One search over `gamma_grid x {2..=V+1}`.
pub fn optimize_fsa_rd_one_exhaustive(
    users: usize,
    minislots: usize,
    rho: f64,
    gamma_grid: &[f64],
) -> Result<OptimizationResult> {
    check_grid(gamma_grid, "gamma")?;
    search_fsa(Scheme::FsaRdOne, users, minislots, rho, |_| Ok(gamma_grid.to_vec()))
}

/// Simulated slotted-ALOHA search over `tau_grid`.
///
/// Each `tau` runs `replications` independent runs of `budget_slots` slots
/// (warmup `10^4` slots) with the same seed, so grid points share random
/// streams. If a grid neighbour of the optimum has an overlapping 95%
/// interval the optimum is not declared unless `force` is set.
pub fn optimize_slotted_aloha(
    users: usize,
    rho: f64,
    tau_grid: &[f64],
    budget_slots: u64,
    replications: u64,
    seed: u64,
    force: bool,
) -> Result<OptimizationResult> {
    check_grid(tau_grid, "tau")?;
    if budget_slots < MIN_SIM_BUDGET {
        return Err(Error::domain(
            "budget",
            format!("{budget_slots} slots per run is below {MIN_SIM_BUDGET}"),
        ));
    }
    AlohaConfig::new(users, rho, 1.0)?;
    let trace = tau_grid
        .par_iter()
        .map(|&tau| {
            let spec = SchemeSpec::SlottedAloha(AlohaConfig::new(users, rho, tau)?);
            let opts = SimOptions::new(budget_slots, spec.default_warmup(), seed);
            let summary = simulate_replications(&spec, &opts, replications)?;
            Ok(SearchPoint {
                frame_len: None,
                probability: tau,
                aaoi: summary.mean_aaoi,
                ci_halfwidth: summary.ci_halfwidth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = OptimizationResult::from_trace(SearchScheme::SlottedAloha, users, None, rho, trace)?;
    result.overlapping = overlapping_neighbours(&result);
    if !force {
        if let Some(&tau) = result.overlapping.first() {
            return Err(Error::AmbiguousOptimum {
                competitor: format!("tau={}", fmt_num(tau)),
            });
        }
    }
    Ok(result)
}

fn overlapping_neighbours(result: &OptimizationResult) -> Vec<f64> {
    let trace = &result.search_trace;
    let Some(i) = trace.iter().position(|p| p.probability == result.best_probability) else {
        return Vec::new();
    };
    let best = trace[i];
    let hw = |p: &SearchPoint| p.ci_halfwidth.unwrap_or(0.0);
    [i.checked_sub(1), Some(i + 1)]
        .into_iter()
        .flatten()
        .filter_map(|j| trace.get(j))
        .filter(|p| (p.aaoi - best.aaoi).abs() <= hw(p) + hw(&best))
        .map(|p| p.probability)
        .collect()
}
