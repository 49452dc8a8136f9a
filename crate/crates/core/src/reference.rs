//! Published optimum values for the benchmark grid: `N = 30` with `rho`
//! varying, and `rho = 0.04` with `N` varying.
//!
//! Cells are kept verbatim, including entries that disagree with a fresh
//! optimization. Tests and the `reproduce` command compare against them.

use crate::config::Scheme;

/// One printed FSA optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedFsaCell {
    /// `'a'` for the `rho` sweep, `'b'` for the `N` sweep.
    pub table: char,
    pub scheme: Scheme,
    pub users: usize,
    pub minislots: usize,
    pub rho: f64,
    pub gamma: f64,
    pub frame_len: usize,
    pub aaoi: f64,
}

/// One printed slotted-ALOHA optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedAlohaCell {
    pub table: char,
    pub users: usize,
    pub rho: f64,
    pub aaoi: f64,
}

const RHO_SWEEP: [f64; 5] = [0.01, 0.02, 0.04, 0.08, 0.1];
const USER_SWEEP: [usize; 4] = [10, 20, 40, 50];
const SWEEP_RHO: f64 = 0.04;
const SWEEP_USERS: usize = 30;

// (V, [(gamma, M, aaoi); 5]) per scheme, rho sweep.
const RD_A: [(usize, [(f64, usize, f64); 5]); 3] = [
    (4, [(0.82, 2, 105.55), (0.38, 2, 72.38), (0.20, 3, 70.25), (0.16, 3, 70.16), (0.15, 3, 70.15)]),
    (6, [(1.0, 2, 104.37), (0.85, 3, 60.75), (0.35, 3, 56.53), (0.25, 3, 56.45), (0.24, 3, 56.45)]),
    (8, [(1.0, 3, 104.16), (1.0, 3, 57.84), (0.50, 3, 51.38), (0.34, 3, 51.32), (0.32, 3, 52.30)]),
];
const ONE_A: [(usize, [(f64, usize, f64); 5]); 3] = [
    (4, [(1.0, 3, 131.16), (1.0, 3, 86.46), (1.0, 3, 70.74), (0.6025, 3, 70.18), (0.4920, 3, 70.16)]),
    (6, [(1.0, 3, 124.06), (1.0, 3, 78.74), (1.0, 3, 60.42), (0.9037, 3, 56.47), (0.7380, 3, 56.46)]),
    (8, [(1.0, 3, 120.82), (1.0, 4, 74.55), (1.0, 4, 55.67), (0.9403, 4, 51.37), (0.9840, 3, 51.32)]),
];
const RD_B: [(usize, [(f64, usize, f64); 4]); 3] = [
    (4, [(1.0, 2, 30.58), (0.4, 3, 47.71), (0.13, 3, 93.14), (0.10, 3, 116.02)]),
    (6, [(1.0, 3, 29.77), (0.77, 3, 38.89), (0.22, 3, 74.67), (0.16, 3, 92.84)]),
    (8, [(1.0, 3, 29.45), (1.0, 3, 35.78), (0.51, 3, 67.73), (0.22, 3, 84.12)]),
];
const ONE_B: [(usize, [(f64, usize, f64); 4]); 3] = [
    (4, [(1.0, 3, 37.40), (1.0, 3, 52.12), (0.8676, 3, 93.12), (0.6941, 3, 116.04)]),
    (6, [(1.0, 3, 35.12), (1.0, 3, 46.63), (1.0, 3, 75.89), (1.0, 3, 92.90)]),
    (8, [(1.0, 3, 34.09), (1.0, 4, 43.89), (1.0, 4, 69.19), (1.0, 4, 84.23)]),
];
const ALOHA_A: [f64; 5] = [110.14, 82.55, 81.30, 80.22, 80.12];
const ALOHA_B: [f64; 4] = [31.63, 53.72, 107.66, 136.97];

/// All 54 printed FSA cells, rho sweep first, FSA-RD before FSA-RD-One.
pub fn published_fsa_cells() -> Vec<PublishedFsaCell> {
    let mut cells = Vec::with_capacity(54);
    for (scheme, rows) in [(Scheme::FsaRd, &RD_A), (Scheme::FsaRdOne, &ONE_A)] {
        for &(v, row) in rows.iter() {
            for (&rho, &(gamma, m, aaoi)) in RHO_SWEEP.iter().zip(row.iter()) {
                cells.push(PublishedFsaCell {
                    table: 'a',
                    scheme,
                    users: SWEEP_USERS,
                    minislots: v,
                    rho,
                    gamma,
                    frame_len: m,
                    aaoi,
                });
            }
        }
    }
    for (scheme, rows) in [(Scheme::FsaRd, &RD_B), (Scheme::FsaRdOne, &ONE_B)] {
        for &(v, row) in rows.iter() {
            for (&n, &(gamma, m, aaoi)) in USER_SWEEP.iter().zip(row.iter()) {
                cells.push(PublishedFsaCell {
                    table: 'b',
                    scheme,
                    users: n,
                    minislots: v,
                    rho: SWEEP_RHO,
                    gamma,
                    frame_len: m,
                    aaoi,
                });
            }
        }
    }
    cells
}

/// The nine printed slotted-ALOHA optima.
pub fn published_aloha_cells() -> Vec<PublishedAlohaCell> {
    let a = RHO_SWEEP.iter().zip(ALOHA_A).map(|(&rho, aaoi)| PublishedAlohaCell {
        table: 'a',
        users: SWEEP_USERS,
        rho,
        aaoi,
    });
    let b = USER_SWEEP.iter().zip(ALOHA_B).map(|(&users, aaoi)| PublishedAlohaCell {
        table: 'b',
        users,
        rho: SWEEP_RHO,
        aaoi,
    });
    a.chain(b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let cells = published_fsa_cells();
        assert_eq!(cells.len(), 54);
        assert_eq!(cells.iter().filter(|c| c.table == 'a').count(), 30);
        assert_eq!(published_aloha_cells().len(), 9);
        assert!(cells.iter().all(|c| c.frame_len >= 2 && c.frame_len <= c.minislots + 1));
    }
}
