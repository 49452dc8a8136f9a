//! Per-reception samples and their running moments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::MomentDecomposition;
use crate::error::Result;

/// One successful delivery. Times are slot indices; `frame_end` is the first
/// slot after the delivery frame. Gap quantities are `None` for a user's
/// first delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptionRecord {
    pub index: u64,
    pub user: u32,
    pub t_prime: u64,
    pub generation_slot: u64,
    /// `S`: AoI right after the delivery, `t_prime - generation_slot + 1`.
    pub service: u64,
    /// `X`: slots since this user's previous delivery.
    pub inter_departure: Option<u64>,
    /// `Y`: slots between the ends of the two delivery frames.
    pub frame_gap: Option<u64>,
    /// `W`: from the previous delivery-frame end to the first frame with an eligible update.
    pub waiting: Option<u64>,
    /// `K`: from that frame to the end of the delivery frame.
    pub contention: Option<u64>,
    /// Slot index of the delivery within its frame, counted from 1.
    pub alpha: u64,
    /// `l`: slots from generation to the start of the first transmit frame.
    pub lead: u64,
    /// `Z`: frames spent as the transmit packet, in slots.
    pub transmit_span: u64,
    /// `S` of the previous delivery of the same user.
    pub prev_service: Option<u64>,
}

/// Writes the trace with columns
/// `reception_index,t_prime,generation_slot,S,X,Y,W,K,alpha,l,Z`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[ReceptionRecord]) -> Result<()> {
    writeln!(out, "reception_index,t_prime,generation_slot,S,X,Y,W,K,alpha,l,Z")?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.t_prime,
            r.generation_slot,
            r.service,
            opt(r.inter_departure),
            opt(r.frame_gap),
            opt(r.waiting),
            opt(r.contention),
            r.alpha,
            r.lead,
            r.transmit_span
        )?;
    }
    Ok(())
}

/// Running sum and sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.sum_sq / self.n as f64 - m * m).max(0.0)
    }

    /// Standard error of the mean, treating samples as independent.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Sample moments of the delivery process. Only deliveries with a
/// predecessor (so that `X`, `Y`, `W`, `K` exist) are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub s: Accumulator,
    pub x: Accumulator,
    pub x2: Accumulator,
    pub y: Accumulator,
    pub y2: Accumulator,
    pub w: Accumulator,
    pub k: Accumulator,
    pub alpha: Accumulator,
    pub alpha2: Accumulator,
    pub alpha3: Accumulator,
    pub lead: Accumulator,
    pub span: Accumulator,
    /// `S_{i-1} * X_i`.
    pub sx: Accumulator,
}

impl MomentAccumulator {
    pub fn push(&mut self, r: &ReceptionRecord) {
        let (Some(x), Some(y), Some(w), Some(k), Some(prev)) =
            (r.inter_departure, r.frame_gap, r.waiting, r.contention, r.prev_service)
        else {
            return;
        };
        let f = |v: u64| v as f64;
        self.s.push(f(r.service));
        self.x.push(f(x));
        self.x2.push(f(x) * f(x));
        self.y.push(f(y));
        self.y2.push(f(y) * f(y));
        self.w.push(f(w));
        self.k.push(f(k));
        self.alpha.push(f(r.alpha));
        self.alpha2.push(f(r.alpha) * f(r.alpha));
        self.alpha3.push(f(r.alpha).powi(3));
        self.lead.push(f(r.lead));
        self.span.push(f(r.transmit_span));
        self.sx.push(f(prev) * f(x));
    }

    pub fn samples(&self) -> u64 {
        self.x.n
    }

    pub fn summary(&self) -> EmpiricalMoments {
        let var_alpha = self.alpha.variance();
        // Delta-method standard error of the sample variance.
        let m1 = self.alpha.mean();
        let m2 = self.alpha2.mean();
        let m3 = self.alpha3.mean();
        let m4 = self.alpha2.sum_sq / self.alpha2.n.max(1) as f64;
        let central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        let var_alpha_se = ((central4 - var_alpha * var_alpha).max(0.0) / self.alpha.n.max(1) as f64).sqrt();
        EmpiricalMoments {
            samples: self.samples(),
            moments: MomentDecomposition {
                e_w: self.w.mean(),
                e_w2: self.w.sum_sq / self.w.n as f64,
                e_k: self.k.mean(),
                e_k2: self.k.sum_sq / self.k.n as f64,
                e_y: self.y.mean(),
                e_y2: self.y2.mean(),
                e_s: self.s.mean(),
                e_l: self.lead.mean(),
                e_z: self.span.mean(),
                e_alpha: m1,
            },
            var_alpha,
            e_x: self.x.mean(),
            e_x2: self.x2.mean(),
            e_sx: self.sx.mean(),
            se_x2: self.x2.std_error(),
            se_y2: self.y2.std_error(),
            se_y: self.y.std_error(),
            se_s: self.s.std_error(),
            se_sx: self.sx.std_error(),
            se_k: self.k.std_error(),
            se_var_alpha: var_alpha_se,
        }
    }
}

/// Sample moments plus the standard errors used by the moment-identity checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub samples: u64,
    pub moments: MomentDecomposition,
    pub var_alpha: f64,
    pub e_x: f64,
    pub e_x2: f64,
    /// `E[S_{i-1} X_i]`.
    pub e_sx: f64,
    pub se_x2: f64,
    pub se_y2: f64,
    pub se_y: f64,
    pub se_s: f64,
    pub se_sx: f64,
    pub se_k: f64,
    pub se_var_alpha: f64,
}

impl EmpiricalMoments {
    /// `E[X^2] - E[Y^2] - 2 Var(alpha)` and its combined standard error.
    pub fn second_moment_gap(&self) -> (f64, f64) {
        let gap = self.e_x2 - self.moments.e_y2 - 2.0 * self.var_alpha;
        let se = (self.se_x2.powi(2) + self.se_y2.powi(2) + 4.0 * self.se_var_alpha.powi(2)).sqrt();
        (gap, se)
    }

    /// `E[S X] - (E[S] E[Y] - Var(alpha))` and its combined standard error.
    pub fn cross_moment_gap(&self) -> (f64, f64) {
        let m = &self.moments;
        let gap = self.e_sx - (m.e_s * m.e_y - self.var_alpha);
        let se = (self.se_sx.powi(2)
            + (m.e_y * self.se_s).powi(2)
            + (m.e_s * self.se_y).powi(2)
            + self.se_var_alpha.powi(2))
        .sqrt();
        (gap, se)
    }
}
