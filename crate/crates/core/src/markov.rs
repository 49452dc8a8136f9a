//! Frame-level Markov chain over the number of active users.
//!
//! State `i` is the number of users holding an eligible update at a frame
//! boundary. During the frame `s` of them deliver (at most `M - 1`), and each
//! of the `N - i + s` users without a pending packet becomes active with the
//! per-frame arrival probability.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_row, successful_update_pmf_with, SingletonTable};
use crate::config::ProtocolConfig;
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;
/// Stationarity residual required from the solvers.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;
const POWER_ITERATION_BUDGET: usize = 200_000;

/// Dense row-stochastic matrix, `entry(i, j) = Pr{next = j | current = i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    n_states: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Validates non-negativity and unit row sums (within `1e-12`).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::domain("P", format!("row {i} has {} entries, expected {n}", row.len())));
            }
            entries.extend(row);
        }
        let m = StochasticMatrix { n_states: n, entries };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        for i in 0..self.n_states {
            let row = self.row(i);
            if let Some(bad) = row.iter().find(|&&x| !(x >= 0.0)) {
                return Err(Error::Numerical(format!("row {i} has entry {bad}")));
            }
            let sum = neumaier_sum(row.iter().copied());
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Numerical(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_states + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_states..(i + 1) * self.n_states]
    }

    /// Largest `|sum_j P[i][j] - 1|` over rows.
    pub fn max_row_error(&self) -> f64 {
        (0..self.n_states)
            .map(|i| (neumaier_sum(self.row(i).iter().copied()) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `pi * P`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let n = self.n_states;
        let mut out = vec![0.0; n];
        for (i, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += w * p;
            }
        }
        out
    }

    /// Number of closed communicating classes in the transition graph.
    pub fn closed_classes(&self) -> usize {
        let n = self.n_states;
        let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for i in 0..n {
            for j in 0..n {
                if self.entry(i, j) > 0.0 {
                    graph.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        let sccs = tarjan_scc(&graph);
        let mut component = vec![0usize; n];
        for (c, scc) in sccs.iter().enumerate() {
            for node in scc {
                component[node.index()] = c;
            }
        }
        sccs.iter()
            .enumerate()
            .filter(|(c, scc)| {
                scc.iter().all(|node| {
                    let i = node.index();
                    (0..n).all(|j| self.entry(i, j) == 0.0 || component[j] == *c)
                })
            })
            .count()
    }

    /// Writes `row,p0,p1,...` lines for inspection.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "row")?;
        for j in 0..self.n_states {
            write!(out, ",p{j}")?;
        }
        writeln!(out)?;
        for i in 0..self.n_states {
            write!(out, "{i}")?;
            for x in self.row(i) {
                write!(out, ",{x:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Stationary distribution over `0..=N` active users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub pi: Vec<f64>,
    /// `max_j |(pi P)_j - pi_j|` at the returned solution.
    pub residual: f64,
}

impl SteadyState {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "state,pi")?;
        for (i, p) in self.pi.iter().enumerate() {
            writeln!(out, "{i},{p:e}")?;
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.pi.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Transition matrix of the active-user chain under FSA-RD.
pub fn build_transition_matrix(config: &ProtocolConfig) -> Result<StochasticMatrix> {
    config.validate()?;
    let table = SingletonTable::new(config.minislots, config.users);
    build_transition_matrix_with(config, &table)
}

pub(crate) fn build_transition_matrix_with(config: &ProtocolConfig, table: &SingletonTable) -> Result<StochasticMatrix> {
    let n = config.users;
    let p = config.frame_arrival_prob();
    // arrivals[k] = Bin(k, p) row; k = number of users able to pick up a new update
    let arrivals: Vec<Vec<f64>> = (0..=n).map(|k| binomial_row(k, p)).collect();
    let rows: Result<Vec<Vec<f64>>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let delivered = successful_update_pmf_with(table, i, config.gamma, config.frame_len)?;
            // Collect per-entry terms, then sum with compensation.
            let mut acc = vec![(0.0f64, 0.0f64); n + 1];
            for (s, &ds) in delivered.masses().iter().enumerate() {
                if ds == 0.0 {
                    continue;
                }
                let idle = n - i + s;
                for (fresh, &b) in arrivals[idle].iter().enumerate() {
                    let j = i - s + fresh;
                    let x = ds * b;
                    let (sum, comp) = &mut acc[j];
                    let t = *sum + x;
                    if sum.abs() >= x.abs() {
                        *comp += (*sum - t) + x;
                    } else {
                        *comp += (x - t) + *sum;
                    }
                    *sum = t;
                }
            }
            Ok(acc
                .into_iter()
                .map(|(s, c)| {
                    let v = s + c;
                    if v < 0.0 && v > -1e-14 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect())
        })
        .collect();
    StochasticMatrix::from_rows(rows?)
}

fn residual(p: &StochasticMatrix, pi: &[f64]) -> f64 {
    p.left_multiply(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn normalise(pi: &mut [f64]) {
    for x in pi.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for x in pi.iter_mut() {
        *x /= total;
    }
}

/// Stationary law from a dense solve of `(P^T - I) pi = 0` with the last
/// equation replaced by `sum pi = 1`. Falls back to power iteration when the
/// direct solve misses the residual target.
pub fn steady_state(p: &StochasticMatrix) -> Result<SteadyState> {
    let classes = p.closed_classes();
    if classes != 1 {
        return Err(Error::DegenerateChain { classes });
    }
    let mut best = None;
    if let Some(mut pi) = direct_solve(p) {
        normalise(&mut pi);
        let r = residual(p, &pi);
        if r <= STATIONARY_TOLERANCE {
            return Ok(SteadyState { pi, residual: r });
        }
        best = Some(pi);
    }
    power_iteration_from(p, best)
}

/// Stationary law by power iteration only.
pub fn steady_state_power(p: &StochasticMatrix) -> Result<SteadyState> {
    let classes = p.closed_classes();
    if classes != 1 {
        return Err(Error::DegenerateChain { classes });
    }
    power_iteration_from(p, None)
}

fn direct_solve(p: &StochasticMatrix) -> Option<Vec<f64>> {
    let n = p.n_states();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = p.entry(i, j);
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    let pi: Vec<f64> = x.iter().copied().collect();
    pi.iter().all(|v| v.is_finite()).then_some(pi)
}

fn power_iteration_from(p: &StochasticMatrix, start: Option<Vec<f64>>) -> Result<SteadyState> {
    let n = p.n_states();
    let mut pi = start.unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let mut r = f64::INFINITY;
    for _ in 0..POWER_ITERATION_BUDGET {
        // Lazy step (I + P)/2 keeps periodic chains convergent.
        let next = p.left_multiply(&pi);
        for (x, y) in pi.iter_mut().zip(&next) {
            *x = 0.5 * (*x + y);
        }
        normalise(&mut pi);
        r = residual(p, &pi);
        if r <= STATIONARY_TOLERANCE {
            return Ok(SteadyState { pi, residual: r });
        }
    }
    Err(Error::NonConvergence {
        residual: r,
        tolerance: STATIONARY_TOLERANCE,
    })
}
