//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{frame_runs, occupancy_deviations, Deviation};
use fsard::analysis::{aaoi_fsa_rd, aaoi_fsa_rd_one, aaoi_upper_bound_one, near_optimal_gamma};
use fsard::cli::default_tau_grid;
use fsard::combinatorics::{singleton_count_pmf, singleton_count_pmf_alternating};
use fsard::markov::{build_transition_matrix, steady_state};
use fsard::optimizer::{optimize_fsa_rd_default, optimize_fsa_rd_one, optimize_fsa_rd_one_exhaustive, optimize_slotted_aloha};
use fsard::reference::{published_aloha_cells, published_fsa_cells, PublishedFsaCell};
use fsard::simulator::{empirical_moment_report, SchemeSpec, SimOptions};
use fsard::{simulate_replications, simulate_with, AlohaConfig, ProtocolConfig, Scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fail_if(failures: Vec<String>, passed: String) -> Outcome {
    if failures.is_empty() {
        Ok(passed)
    } else {
        Err(failures.join("\n    "))
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cell_label(c: &PublishedFsaCell) -> String {
    format!(
        "({}) {:?} N={} V={} rho={} printed ({}, M={}, {})",
        c.table, c.scheme, c.users, c.minislots, c.rho, c.gamma, c.frame_len, c.aaoi
    )
}

/// Random `(N, M, V, rho, gamma)` with `2 <= M <= V + 1`.
fn random_config(rng: &mut ChaCha8Rng, max_users: usize, max_minislots: usize) -> ProtocolConfig {
    let n = rng.gen_range(1..=max_users);
    let v = rng.gen_range(1..=max_minislots);
    let m = rng.gen_range(2..=v + 1);
    let rho = 10f64.powf(rng.gen_range(-3.0..=0.0));
    let gamma = rng.gen_range(0.01..=1.0);
    ProtocolConfig::new(n, m, v, rho, gamma).unwrap()
}

fn near_optimal_gamma_entries() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for c in published_fsa_cells() {
        if c.table != 'a' || c.scheme != Scheme::FsaRdOne || c.gamma >= 1.0 {
            continue;
        }
        checked += 1;
        let g = near_optimal_gamma(c.users, c.minislots, c.frame_len, c.rho).unwrap().value();
        if format!("{g:.4}") != format!("{:.4}", c.gamma) {
            failures.push(format!("{}: got {g:.6}", cell_label(&c)));
        }
    }
    if checked != 6 {
        failures.push(format!("expected 6 fractional entries, found {checked}"));
    }
    fail_if(failures, format!("{checked} entries match to 4 decimals"))
}

fn printed_aaoi_cells() -> Outcome {
    let mut failures = Vec::new();
    let cells = published_fsa_cells();
    for c in &cells {
        let aaoi = match c.scheme {
            Scheme::FsaRd => aaoi_fsa_rd(&ProtocolConfig::new(c.users, c.frame_len, c.minislots, c.rho, c.gamma).unwrap()),
            Scheme::FsaRdOne => {
                let g = near_optimal_gamma(c.users, c.minislots, c.frame_len, c.rho).unwrap().value();
                aaoi_fsa_rd_one(&ProtocolConfig::new(c.users, c.frame_len, c.minislots, c.rho, g).unwrap())
            }
        }
        .unwrap()
        .aaoi;
        let e = rel_err(aaoi, c.aaoi);
        if e > 0.01 {
            failures.push(format!("{}: model {aaoi:.2} ({:.2}% off)", cell_label(c), 100.0 * e));
        }
    }
    fail_if(failures, format!("{} cells within 1%", cells.len()))
}

fn optimizer_reproduces_table() -> Outcome {
    let mut failures = Vec::new();
    let cells: Vec<_> = published_fsa_cells().into_iter().filter(|c| c.scheme == Scheme::FsaRd).collect();
    for c in &cells {
        let r = optimize_fsa_rd_default(c.users, c.minislots, c.rho).unwrap();
        let mut issues = Vec::new();
        if r.best_frame_len != Some(c.frame_len) {
            issues.push(format!("M*={:?}", r.best_frame_len.unwrap()));
        }
        if rel_err(r.best_aaoi, c.aaoi) > 0.01 {
            issues.push(format!("AAoI {:.2}", r.best_aaoi));
        }
        if (r.best_probability - c.gamma).abs() > 0.02 + 1e-12 {
            issues.push(format!("gamma {:.2}", r.best_probability));
        }
        if !issues.is_empty() {
            failures.push(format!("{}: search gives {}", cell_label(c), issues.join(", ")));
        }
    }
    fail_if(failures, format!("{} FSA-RD cells reproduced", cells.len()))
}

fn simulation_matches_analysis() -> Outcome {
    let cases = [
        (Scheme::FsaRd, 30, 4, 3, 0.04, 0.3),
        (Scheme::FsaRdOne, 30, 4, 3, 0.04, 0.5),
        (Scheme::FsaRd, 30, 4, 3, 0.1, 0.15),
        (Scheme::FsaRdOne, 30, 4, 2, 0.1, 0.6),
        (Scheme::FsaRd, 50, 6, 3, 0.04, 0.2),
        (Scheme::FsaRdOne, 50, 6, 2, 0.04, 0.4),
        (Scheme::FsaRd, 50, 6, 2, 0.1, 0.1),
        (Scheme::FsaRdOne, 50, 6, 3, 0.1, 0.3),
    ];
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (i, &(scheme, n, v, m, rho, gamma)) in cases.iter().enumerate() {
        let cfg = ProtocolConfig::new(n, m, v, rho, gamma).unwrap();
        let analytic = match scheme {
            Scheme::FsaRd => aaoi_fsa_rd(&cfg),
            Scheme::FsaRdOne => aaoi_fsa_rd_one(&cfg),
        }
        .unwrap()
        .aaoi;
        let spec = SchemeSpec::fsa(scheme, cfg);
        let opts = SimOptions::new(10_000_000, spec.default_warmup(), 400 + i as u64);
        let sim = simulate_replications(&spec, &opts, 3).unwrap().mean_aaoi;
        let e = rel_err(sim, analytic);
        worst = worst.max(e);
        if e > 0.02 {
            failures.push(format!(
                "{scheme:?} N={n} V={v} M={m} rho={rho} gamma={gamma}: sim {sim:.3} vs {analytic:.3}"
            ));
        }
    }
    fail_if(failures, format!("{} configs, worst deviation {:.2}%", cases.len(), 100.0 * worst))
}

fn upper_bound_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    for _ in 0..500 {
        let cfg = random_config(&mut rng, 100, 10);
        let one = aaoi_fsa_rd_one(&cfg).unwrap().aaoi;
        let bound = aaoi_upper_bound_one(&cfg).unwrap();
        if !(one <= bound && bound <= one + cfg.frame_len as f64) {
            failures.push(format!("{cfg:?}: {one} / {bound}"));
        }
    }
    fail_if(failures, "500 configs".into())
}

fn saturated_schemes_coincide() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let cfg = random_config(&mut rng, 60, 8).with_rho(1.0);
        let rd = aaoi_fsa_rd(&cfg).unwrap().aaoi;
        let one = aaoi_fsa_rd_one(&cfg).unwrap().aaoi;
        worst = worst.max((rd - one).abs());
        if (rd - one).abs() > 1e-9 {
            failures.push(format!("{cfg:?}: {rd} vs {one}"));
        }
    }
    fail_if(failures, format!("50 configs, max gap {worst:.1e}"))
}

/// Singleton counts over all `V^j` placements.
fn enumerate_singletons(j: usize, v: usize) -> Vec<f64> {
    let mut counts = vec![0u64; j + 1];
    let mut choice = vec![0usize; j];
    let total = (v as u64).pow(j as u32);
    for _ in 0..total {
        let mut occupancy = vec![0u8; v];
        for &c in &choice {
            occupancy[c] += 1;
        }
        counts[occupancy.iter().filter(|&&o| o == 1).count()] += 1;
        for c in choice.iter_mut() {
            *c += 1;
            if *c < v {
                break;
            }
            *c = 0;
        }
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn singleton_oracles() -> Outcome {
    let mut failures = Vec::new();
    for j in 0..=8 {
        for v in 1..=6 {
            let pmf = singleton_count_pmf(j, v).unwrap();
            for (s, &p) in enumerate_singletons(j, v).iter().enumerate() {
                if (pmf.get(s) - p).abs() > 1e-12 {
                    failures.push(format!("enumeration j={j} V={v} s={s}: {} vs {p}", pmf.get(s)));
                }
            }
        }
    }
    for j in 0..=10 {
        for v in 1..=10 {
            let pmf = singleton_count_pmf(j, v).unwrap();
            let alt = singleton_count_pmf_alternating(j, v).unwrap();
            for s in 0..=j {
                if (pmf.get(s) - alt.get(s)).abs() > 1e-9 {
                    failures.push(format!("alternating j={j} V={v} s={s}: {} vs {}", pmf.get(s), alt.get(s)));
                }
            }
        }
    }
    fail_if(failures, "enumeration (j<=8, V<=6) and alternating sum (j, V<=10) agree".into())
}

fn chain_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let (mut row_err, mut residual) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let cfg = random_config(&mut rng, 100, 10);
        let p = build_transition_matrix(&cfg).unwrap();
        let pi = steady_state(&p).unwrap();
        row_err = row_err.max(p.max_row_error());
        residual = residual.max(pi.residual);
        if p.max_row_error() > 1e-12 || pi.residual > 1e-10 {
            failures.push(format!("{cfg:?}: row error {:.1e}, residual {:.1e}", p.max_row_error(), pi.residual));
        }
    }
    let spots = [
        (ProtocolConfig::new(30, 3, 4, 0.1, 0.15).unwrap(), 801),
        (ProtocolConfig::new(20, 3, 6, 0.04, 0.35).unwrap(), 802),
        (ProtocolConfig::new(12, 2, 2, 0.2, 0.3).unwrap(), 803),
    ];
    let mut bins = 0;
    for (cfg, seed) in spots {
        let runs = frame_runs(&cfg, Scheme::FsaRd, 1_000_000, 20, seed);
        let devs: Vec<Deviation> = occupancy_deviations(&cfg, &runs);
        bins += devs.len();
        failures.extend(devs.iter().filter(|d| d.z() > 3.0).map(|d| format!("N={}: {d}", cfg.users)));
    }
    fail_if(
        failures,
        format!("200 chains (max row error {row_err:.1e}, max residual {residual:.1e}), {bins} histogram bins within 3 SE"),
    )
}

fn trace_identities() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let configs = [
        (ProtocolConfig::new(30, 3, 6, 0.04, 0.35).unwrap(), 901),
        (ProtocolConfig::new(20, 3, 4, 0.1, 0.3).unwrap(), 902),
    ];
    for (cfg, seed) in configs {
        let spec = SchemeSpec::fsa(Scheme::FsaRd, cfg);
        let r = simulate_with(&spec, &SimOptions::new(2_000_000, spec.default_warmup(), seed).with_trace()).unwrap();
        let emp = empirical_moment_report(&r).unwrap();
        if emp.samples < 100_000 {
            failures.push(format!("N={}: only {} receptions", cfg.users, emp.samples));
        }
        for (name, (gap, se)) in [("second moment", emp.second_moment_gap()), ("cross moment", emp.cross_moment_gap())] {
            notes.push(format!("{name} z={:.2}", gap.abs() / se));
            if gap.abs() > 3.0 * se {
                failures.push(format!("N={} {name}: gap {gap:.4} with se {se:.4}", cfg.users));
            }
        }
    }
    fail_if(failures, notes.join(", "))
}

fn guided_gamma_quality() -> Outcome {
    let fine: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0).collect();
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for v in [4, 6, 8] {
        for k in 1..=10 {
            let rho = k as f64 / 100.0;
            let guided = optimize_fsa_rd_one(50, v, rho).unwrap().best_aaoi;
            let best = optimize_fsa_rd_one_exhaustive(50, v, rho, &fine).unwrap().best_aaoi;
            let e = guided / best - 1.0;
            worst = worst.max(e);
            if e > 0.02 {
                failures.push(format!("V={v} rho={rho}: guided {guided:.3} vs exhaustive {best:.3}"));
            }
        }
    }
    fail_if(failures, format!("30 settings, largest guided/exhaustive excess {:+.4}%", 100.0 * worst))
}

fn aloha_baseline() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (i, c) in published_aloha_cells().iter().enumerate() {
        let grid = default_tau_grid(c.users);
        let r = optimize_slotted_aloha(c.users, c.rho, &grid, 2_000_000, 2, 1100 + i as u64, true).unwrap();
        let e = rel_err(r.best_aaoi, c.aaoi);
        worst = worst.max(e);
        if e > 0.03 {
            failures.push(format!("N={} rho={}: {:.2} vs printed {}", c.users, c.rho, r.best_aaoi, c.aaoi));
        }
    }
    fail_if(failures, format!("9 cells, worst deviation {:.2}%", 100.0 * worst))
}

fn determinism() -> Outcome {
    let fsa = ProtocolConfig::new(20, 3, 4, 0.05, 0.4).unwrap();
    let specs = [
        SchemeSpec::fsa(Scheme::FsaRd, fsa),
        SchemeSpec::fsa(Scheme::FsaRdOne, fsa),
        SchemeSpec::SlottedAloha(AlohaConfig::new(20, 0.05, 0.08).unwrap()),
    ];
    let mut failures = Vec::new();
    for spec in &specs {
        let opts = SimOptions::new(300_000, 10_000, 1234).with_trace().with_replication(2);
        let a = serde_json::to_vec(&simulate_with(spec, &opts).unwrap()).unwrap();
        let b = serde_json::to_vec(&simulate_with(spec, &opts).unwrap()).unwrap();
        if a != b {
            failures.push(format!("{:?} differs between runs", spec.kind()));
        }
        let other = serde_json::to_vec(&simulate_with(spec, &SimOptions { seed: 1235, ..opts }).unwrap()).unwrap();
        if other == a {
            failures.push(format!("{:?} ignores the seed", spec.kind()));
        }
    }
    fail_if(failures, "3 schemes byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("near-optimal gamma entries", near_optimal_gamma_entries),
        ("analytic AAoI at printed parameters", printed_aaoi_cells),
        ("optimizer against printed optima", optimizer_reproduces_table),
        ("simulation against analysis", simulation_matches_analysis),
        ("one-shot upper-bound sandwich", upper_bound_sandwich),
        ("schemes coincide at rho = 1", saturated_schemes_coincide),
        ("singleton-count oracles", singleton_oracles),
        ("Markov chain validity", chain_validity),
        ("inter-departure moment identities", trace_identities),
        ("near-optimal gamma quality", guided_gamma_quality),
        ("slotted ALOHA baseline", aloha_baseline),
        ("determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} [{detail}] ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.1}s)\n    {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
