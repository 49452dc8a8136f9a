// The number of active users at frame boundaries under FSA-RD is a Markov
// chain. Build it, solve it, and compare against a simulated histogram.

use fsard::simulator::{SchemeSpec, SimOptions};
use fsard::{build_transition_matrix, simulate_with, steady_state, steady_state_power, ProtocolConfig, Scheme};

pub fn run() -> fsard::Result<()> {
    let cfg = ProtocolConfig::new(20, 3, 4, 0.05, 0.3)?;
    let p = build_transition_matrix(&cfg)?;
    let pi = steady_state(&p)?;
    let check = steady_state_power(&p)?;
    let gap = pi.pi.iter().zip(&check.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!(
        "{} states, row error {:.1e}, residual {:.1e}, |LU - power| {gap:.1e}",
        p.n_states(),
        p.max_row_error(),
        pi.residual
    );
    println!("mean active users {:.3}", pi.mean());

    let spec = SchemeSpec::fsa(Scheme::FsaRd, cfg);
    let sim = simulate_with(&spec, &SimOptions::new(1_000_000, spec.default_warmup(), 3))?;
    let stats = sim.frame_stats.expect("FSA runs report frame statistics");
    println!("active  stationary  simulated");
    for (i, &pi_i) in pi.pi.iter().enumerate().filter(|(_, &x)| x > 1e-3) {
        let freq = stats.active_histogram.get(i).copied().unwrap_or(0) as f64 / stats.frames as f64;
        println!("{i:>6}  {pi_i:>10.5}  {freq:>9.5}");
    }

    let mut csv = Vec::new();
    pi.write_csv(&mut csv)?;
    println!("stationary law as CSV: {} bytes", csv.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
