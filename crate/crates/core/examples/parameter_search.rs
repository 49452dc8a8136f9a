// Tuning `(gamma, M)` for the reservation schemes and `tau` for slotted
// ALOHA.

use fsard::cli::default_tau_grid;
use fsard::optimizer::{default_gamma_grid, optimize_fsa_rd_one_exhaustive};
use fsard::{optimize_fsa_rd_default, optimize_fsa_rd_one, optimize_slotted_aloha};

pub fn run() -> fsard::Result<()> {
    let (n, v, rho) = (30, 6, 0.04);

    let rd = optimize_fsa_rd_default(n, v, rho)?;
    println!(
        "FSA-RD: gamma* {:.4}, M* {}, AAoI {:.2} ({} points)",
        rd.best_probability,
        rd.best_frame_len.unwrap(),
        rd.best_aaoi,
        rd.search_trace.len()
    );

    let one = optimize_fsa_rd_one(n, v, rho)?;
    let exhaustive = optimize_fsa_rd_one_exhaustive(n, v, rho, &default_gamma_grid())?;
    println!(
        "FSA-RD-One: guided {:.2} at gamma {:.4}, grid search {:.2} at gamma {:.2}",
        one.best_aaoi, one.best_probability, exhaustive.best_aaoi, exhaustive.best_probability
    );

    let mut csv = Vec::new();
    rd.write_trace_csv(&mut csv, &serde_json::json!({ "N": n, "V": v, "rho": rho }))?;
    println!("search trace: {} CSV lines", csv.iter().filter(|&&b| b == b'\n').count());

    // Simulation-based, so noisy: neighbours whose intervals overlap the
    // optimum are reported instead of refused.
    let aloha = optimize_slotted_aloha(n, rho, &default_tau_grid(n), 1_000_000, 1, 9, true)?;
    println!(
        "slotted ALOHA: tau* {:.4}, AAoI {:.2}, overlapping {:?}",
        aloha.best_probability, aloha.best_aaoi, aloha.overlapping
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
