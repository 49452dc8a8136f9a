// Analytical AAoI of both schemes, the one-shot bound and the near-optimal
// reservation probability.

use fsard::{aaoi_fsa_rd, aaoi_fsa_rd_one, aaoi_upper_bound_one, near_optimal_gamma, ProtocolConfig};

pub fn run() -> fsard::Result<()> {
    let (n, v, rho) = (30, 4, 0.1);

    println!(" M  gamma   FSA-RD  FSA-RD-One   bound");
    for m in 2..=v + 1 {
        for gamma in [0.1, 0.15, 0.3, 0.6] {
            let cfg = ProtocolConfig::new(n, m, v, rho, gamma)?;
            let rd = aaoi_fsa_rd(&cfg)?;
            let one = aaoi_fsa_rd_one(&cfg)?;
            println!(
                "{m:>2}  {gamma:>5}  {:>7.2}  {:>10.2}  {:>6.2}",
                rd.aaoi,
                one.aaoi,
                aaoi_upper_bound_one(&cfg)?
            );
        }
    }

    let m = 3;
    let g = near_optimal_gamma(n, v, m, rho)?.value();
    let report = aaoi_fsa_rd_one(&ProtocolConfig::new(n, m, v, rho, g)?)?;
    let mo = &report.moments;
    println!("near-optimal gamma for M={m}: {g:.4}, AAoI {:.2}", report.aaoi);
    println!(
        "p_s {:.4}, E[W] {:.2}, E[K] {:.2}, E[Y] {:.2}, E[S] {:.2}, E[alpha] {:.3}",
        report.profile.p_s, mo.e_w, mo.e_k, mo.e_y, mo.e_s, mo.e_alpha
    );
    println!("from moments: {:.6} (direct {:.6})", report.aaoi_from_moments, report.aaoi);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
