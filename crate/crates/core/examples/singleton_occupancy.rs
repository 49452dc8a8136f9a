// How many contenders end up alone in a mini-slot, and how many of those
// get a data slot.
//
// Run with `cargo run --example singleton_occupancy`.

use fsard::{capped_success_pmf, reservation_count_pmf, singleton_count_pmf, successful_update_pmf, SingletonTable};

pub fn run() -> fsard::Result<()> {
    let (v, m) = (4, 3);

    println!("singletons among j contenders in V={v} mini-slots");
    for j in 0..=8 {
        let pmf = singleton_count_pmf(j, v)?;
        let masses: Vec<String> = pmf.masses().iter().map(|p| format!("{p:.4}")).collect();
        println!("  j={j}: [{}]  mean {:.4}", masses.join(", "), pmf.mean());
    }

    // Only M-1 data slots exist, so extra singletons lose out.
    let capped = capped_success_pmf(6, v, m)?;
    println!("6 contenders, M={m}: P(0, 1, 2 winners) = {:?}", capped.masses());

    let reservers = reservation_count_pmf(10, 0.3)?;
    let delivered = successful_update_pmf(10, 0.3, v, m)?;
    println!("10 active users, gamma=0.3: E[reservers]={:.3}, E[deliveries]={:.3}", reservers.mean(), delivered.mean());

    // A table amortises the kernels when many contender counts are needed.
    let table = SingletonTable::new(8, 60);
    let best = (0..=table.max_contenders())
        .max_by(|&a, &b| table.pmf(a).mean().total_cmp(&table.pmf(b).mean()))
        .unwrap();
    println!("V=8: expected singletons peak at j={best} ({:.3})", table.pmf(best).mean());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
