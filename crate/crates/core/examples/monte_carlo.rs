// Slot-level simulation: a single traced run, replications with a
// confidence interval, and the slotted ALOHA baseline.

use fsard::simulator::{write_trace_csv, SchemeSpec, SimOptions};
use fsard::{
    aaoi_fsa_rd, empirical_moment_report, simulate_replications, simulate_slotted_aloha, simulate_with, AlohaConfig,
    ProtocolConfig, Scheme,
};

pub fn run() -> fsard::Result<()> {
    let cfg = ProtocolConfig::new(30, 3, 4, 0.1, 0.15)?;
    let spec = SchemeSpec::fsa(Scheme::FsaRd, cfg);
    let opts = SimOptions::new(1_000_000, spec.default_warmup(), 2024);

    let traced = simulate_with(&spec, &opts.with_trace())?;
    let emp = empirical_moment_report(&traced)?;
    let (gap2, se2) = emp.second_moment_gap();
    let (gapx, sex) = emp.cross_moment_gap();
    println!(
        "one run: AAoI {:.2} +/- {:.2}, {} receptions",
        traced.network_aaoi,
        traced.ci_halfwidth.unwrap_or(f64::NAN),
        traced.reception_count
    );
    println!("E[X^2]-E[Y^2]-2Var(alpha) = {gap2:.3} (se {se2:.3}); E[SX] identity gap {gapx:.3} (se {sex:.3})");

    let mut csv = Vec::new();
    write_trace_csv(&mut csv, &traced.trace.unwrap_or_default()[..5])?;
    print!("{}", String::from_utf8_lossy(&csv));

    let reps = simulate_replications(&spec, &opts, 4)?;
    println!(
        "4 replications: {:.2} +/- {:.2}, analysis {:.2}",
        reps.mean_aaoi,
        reps.ci_halfwidth.unwrap_or(f64::NAN),
        aaoi_fsa_rd(&cfg)?.aaoi
    );

    let aloha = simulate_slotted_aloha(&AlohaConfig::new(30, 0.1, 0.06)?, 1_000_000, 10_000, 2024)?;
    println!("slotted ALOHA, tau=0.06: {:.2}", aloha.network_aaoi);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
