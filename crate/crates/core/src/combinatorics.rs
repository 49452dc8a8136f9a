//! Probability kernels for reservation contention.
//!
//! Active users reserve independently with probability `gamma`; those that do
//! drop a reservation packet into one of `V` mini-slots chosen uniformly. A
//! mini-slot holding exactly one packet is a successful reservation. The
//! distributions here are the building blocks of the frame-level Markov chain
//! and of the per-user success probabilities.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// Negative round-off tolerated before a value is treated as a bug.
const CLAMP_SLACK: f64 = 1e-12;

/// Sizes up to this bound use exact big-integer placement counts.
pub const EXACT_LIMIT: usize = 64;

/// Above this many trials binomial coefficients switch to the log domain.
const LOG_DOMAIN_THRESHOLD: usize = 60;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("probability", format!("{value} not in [0, 1]")))
        }
    }

    /// Accepts values that drifted outside `[0, 1]` by summation round-off.
    pub fn clamped(value: f64) -> Result<Self> {
        if value.is_nan() || value < -CLAMP_SLACK || value > 1.0 + CLAMP_SLACK {
            return Err(Error::Numerical(format!("probability {value} out of range")));
        }
        Ok(Probability(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// A probability mass function over the counts `0..=support_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountPmf {
    mass: Vec<f64>,
}

impl CountPmf {
    /// Builds a pmf, clamping round-off negatives. Rejects genuinely negative
    /// entries and totals that are not 1 within `1e-10`.
    pub fn from_masses(mut mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::Numerical("empty pmf".into()));
        }
        for m in mass.iter_mut() {
            *m = Probability::clamped(*m)?.value();
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("pmf sums to {total}")));
        }
        Ok(CountPmf { mass })
    }

    pub fn support_max(&self) -> usize {
        self.mass.len() - 1
    }

    /// Mass at `count`; zero outside the support.
    pub fn get(&self, count: usize) -> f64 {
        self.mass.get(count).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(k, m)| k as f64 * m).sum()
    }
}

/// `C(n, k)` as a float. Multiplicative for small `n`, log-gamma above.
pub fn binomial_coefficient(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= LOG_DOMAIN_THRESHOLD {
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c.round()
    } else {
        ln_binomial(n as u64, k as u64).exp()
    }
}

/// Binomial pmf row `Pr{X = k}`, `k = 0..=n`, for `X ~ Bin(n, q)`.
pub(crate) fn binomial_row(n: usize, q: f64) -> Vec<f64> {
    if q <= 0.0 {
        let mut row = vec![0.0; n + 1];
        row[0] = 1.0;
        return row;
    }
    if q >= 1.0 {
        let mut row = vec![0.0; n + 1];
        row[n] = 1.0;
        return row;
    }
    if n <= LOG_DOMAIN_THRESHOLD {
        (0..=n)
            .map(|k| binomial_coefficient(n, k) * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32))
            .collect()
    } else {
        let (lq, lr) = (q.ln(), (-q).ln_1p());
        (0..=n)
            .map(|k| (ln_binomial(n as u64, k as u64) + k as f64 * lq + (n - k) as f64 * lr).exp())
            .collect()
    }
}

fn check_probability(param: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::domain(param, format!("{value} not in [0, 1]")))
    }
}

/// Number of reservers among `active` users, each reserving with `gamma`.
pub fn reservation_count_pmf(active: usize, gamma: f64) -> Result<CountPmf> {
    check_probability("gamma", gamma)?;
    CountPmf::from_masses(binomial_row(active, gamma))
}

/// Distribution of the number of singleton mini-slots when `contenders`
/// packets land uniformly in `minislots` mini-slots.
pub fn singleton_count_pmf(contenders: usize, minislots: usize) -> Result<CountPmf> {
    if minislots < 1 {
        return Err(Error::domain("V", "at least one mini-slot is required"));
    }
    Ok(SingletonTable::new(minislots, contenders).pmf(contenders).clone())
}

/// Number of contenders that end up with a data slot when only the first
/// `frame_len - 1` singleton mini-slots are served. Mass beyond the cap is
/// folded onto `frame_len - 1`.
pub fn capped_success_pmf(contenders: usize, minislots: usize, frame_len: usize) -> Result<CountPmf> {
    check_frame(minislots, frame_len)?;
    let table = SingletonTable::new(minislots, contenders);
    Ok(fold_tail(table.pmf(contenders), frame_len - 1))
}

/// Number of `active` users that deliver an update within one frame.
pub fn successful_update_pmf(active: usize, gamma: f64, minislots: usize, frame_len: usize) -> Result<CountPmf> {
    check_probability("gamma", gamma)?;
    check_frame(minislots, frame_len)?;
    let table = SingletonTable::new(minislots, active);
    successful_update_pmf_with(&table, active, gamma, frame_len)
}

pub(crate) fn successful_update_pmf_with(
    table: &SingletonTable,
    active: usize,
    gamma: f64,
    frame_len: usize,
) -> Result<CountPmf> {
    let cap = frame_len - 1;
    let reservers = binomial_row(active, gamma);
    let mut mass = vec![0.0; active.min(cap) + 1];
    for (j, &b) in reservers.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (s, r) in table.pmf(j).masses().iter().enumerate() {
            mass[s.min(cap)] += b * r;
        }
    }
    CountPmf::from_masses(mass)
}

fn check_frame(minislots: usize, frame_len: usize) -> Result<()> {
    if minislots < 1 {
        return Err(Error::domain("V", "at least one mini-slot is required"));
    }
    if frame_len < 2 || frame_len > minislots + 1 {
        return Err(Error::domain("M", format!("frame length {frame_len} outside 2..={}", minislots + 1)));
    }
    Ok(())
}

fn fold_tail(pmf: &CountPmf, cap: usize) -> CountPmf {
    let mut mass = vec![0.0; pmf.support_max().min(cap) + 1];
    for (s, m) in pmf.masses().iter().enumerate() {
        mass[s.min(cap)] += m;
    }
    CountPmf { mass }
}

/// Singleton-count pmfs for every contender count `0..=max_contenders` at a
/// fixed number of mini-slots.
///
/// Counts are built from `G(n, b)`, the number of ways to drop `n` labelled
/// packets into `b` labelled mini-slots leaving no singleton:
/// `#{s singletons} = C(V, s) * j!/(j-s)! * G(j - s, V - s)`.
/// Every term is non-negative, so there is no cancellation. Up to
/// [`EXACT_LIMIT`] the counts are exact big integers; beyond it the same
/// recursion runs on probabilities in `f64`.
#[derive(Debug, Clone)]
pub struct SingletonTable {
    minislots: usize,
    pmfs: Vec<CountPmf>,
}

impl SingletonTable {
    pub fn new(minislots: usize, max_contenders: usize) -> Self {
        assert!(minislots >= 1, "minislots must be positive");
        let exact_max = if minislots <= EXACT_LIMIT {
            max_contenders.min(EXACT_LIMIT)
        } else {
            0
        };
        let mut pmfs = exact_pmfs(minislots, exact_max);
        if max_contenders > exact_max {
            let float = float_pmfs(minislots, max_contenders, exact_max + 1);
            pmfs.extend(float);
        }
        pmfs.truncate(max_contenders + 1);
        SingletonTable { minislots, pmfs }
    }

    pub fn minislots(&self) -> usize {
        self.minislots
    }

    pub fn max_contenders(&self) -> usize {
        self.pmfs.len() - 1
    }

    pub fn pmf(&self, contenders: usize) -> &CountPmf {
        &self.pmfs[contenders]
    }
}

fn exact_pmfs(v: usize, max_j: usize) -> Vec<CountPmf> {
    // no_singleton[b][n] = G(n, b)
    let mut choose = vec![vec![BigUint::zero(); max_j + 1]; max_j + 1];
    for n in 0..=max_j {
        choose[n][0] = BigUint::one();
        for k in 1..=n {
            choose[n][k] = &choose[n - 1][k - 1] + &choose[n - 1][k];
        }
    }
    let mut no_singleton = vec![vec![BigUint::zero(); max_j + 1]; v + 1];
    no_singleton[0][0] = BigUint::one();
    for b in 1..=v {
        for n in 0..=max_j {
            let mut acc = BigUint::zero();
            for k in (0..=n).filter(|&k| k != 1) {
                let prev = &no_singleton[b - 1][n - k];
                if !prev.is_zero() {
                    acc += &choose[n][k] * prev;
                }
            }
            no_singleton[b][n] = acc;
        }
    }
    let choose_v: Vec<BigUint> = {
        let mut row = vec![BigUint::one()];
        for s in 1..=v {
            let next = &row[s - 1] * BigUint::from(v - s + 1) / BigUint::from(s);
            row.push(next);
        }
        row
    };
    (0..=max_j)
        .map(|j| {
            let total = BigUint::from(v).pow(j as u32);
            let smax = j.min(v);
            let mut falling = BigUint::one();
            let mut mass = Vec::with_capacity(smax + 1);
            for s in 0..=smax {
                if s > 0 {
                    falling *= BigUint::from(j - s + 1);
                }
                let count = &choose_v[s] * &falling * &no_singleton[v - s][j - s];
                mass.push(ratio_to_f64(count, total.clone()));
            }
            CountPmf { mass }
        })
        .collect()
}

fn ratio_to_f64(num: BigUint, den: BigUint) -> f64 {
    BigRational::new(num.into(), den.into())
        .to_f64()
        .expect("finite ratio")
}

fn float_pmfs(v: usize, max_j: usize, from_j: usize) -> Vec<CountPmf> {
    // no_singleton[b][n]: probability that n packets in b slots leave no singleton
    let mut no_singleton = vec![vec![0.0f64; max_j + 1]; v + 1];
    no_singleton[0][0] = 1.0;
    for b in 1..=v {
        let q = 1.0 / b as f64;
        for n in 0..=max_j {
            let row = binomial_row(n, q);
            let acc: f64 = (0..=n)
                .filter(|&k| k != 1)
                .map(|k| row[k] * no_singleton[b - 1][n - k])
                .sum();
            no_singleton[b][n] = acc;
        }
    }
    let lnv = (v as f64).ln();
    (from_j..=max_j)
        .map(|j| {
            let smax = j.min(v);
            let mut mass = Vec::with_capacity(smax + 1);
            for s in 0..=smax {
                let g = no_singleton[v - s][j - s];
                if g == 0.0 {
                    mass.push(0.0);
                    continue;
                }
                let mut ln = ln_binomial(v as u64, s as u64) - s as f64 * lnv;
                ln += (0..s).map(|i| ((j - i) as f64).ln()).sum::<f64>();
                if j > s {
                    ln += (j - s) as f64 * (((v - s) as f64).ln() - lnv);
                }
                mass.push((ln + g.ln()).exp());
            }
            CountPmf { mass }
        })
        .collect()
}

/// Singleton-count pmf from the closed alternating-sum formula, evaluated in
/// exact rational arithmetic. Cost grows quickly; meant for cross-checks at
/// small sizes.
pub fn singleton_count_pmf_alternating(contenders: usize, minislots: usize) -> Result<CountPmf> {
    if minislots < 1 {
        return Err(Error::domain("V", "at least one mini-slot is required"));
    }
    let (j, v) = (contenders, minislots);
    let fact: Vec<BigUint> = {
        let mut f = vec![BigUint::one()];
        for i in 1..=j.max(v) {
            let next = &f[i - 1] * BigUint::from(i);
            f.push(next);
        }
        f
    };
    let prefactor_den = BigUint::from(v).pow(j as u32);
    let upper = v.min(j);
    let mut mass = Vec::with_capacity(upper + 1);
    for s in 0..=upper {
        let mut sum = BigRational::zero();
        for m in s..=upper {
            let num = BigUint::from(v - m).pow((j - m) as u32);
            let den = &fact[m - s] * &fact[v - m] * &fact[j - m];
            let term = BigRational::new(num.into(), den.into());
            if (m + s) % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        let pre = BigRational::new((&fact[v] * &fact[j]).into(), (&prefactor_den * &fact[s]).into());
        let value = (sum * pre).to_f64().ok_or_else(|| Error::Numerical("overflow".into()))?;
        mass.push(value);
    }
    CountPmf::from_masses(mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Enumerates all `V^j` placements and tallies singleton counts.
    fn enumerate_singletons(j: usize, v: usize) -> Vec<f64> {
        let total = v.pow(j as u32);
        let mut tally = vec![0u64; j.min(v) + 1];
        let mut slots = vec![0usize; j];
        for code in 0..total {
            let mut c = code;
            for s in slots.iter_mut() {
                *s = c % v;
                c /= v;
            }
            let mut occ = vec![0usize; v];
            for &s in &slots {
                occ[s] += 1;
            }
            tally[occ.iter().filter(|&&o| o == 1).count()] += 1;
        }
        tally.iter().map(|&t| t as f64 / total as f64).collect()
    }

    #[test]
    fn binomial_reservations() {
        assert_eq!(reservation_count_pmf(0, 0.5).unwrap().masses(), &[1.0]);
        assert_eq!(reservation_count_pmf(3, 0.0).unwrap().masses(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(reservation_count_pmf(2, 0.5).unwrap().masses(), &[0.25, 0.5, 0.25]);
        assert!(reservation_count_pmf(2, 1.5).is_err());
    }

    #[test]
    fn large_binomial_rows_still_normalised() {
        for n in [61usize, 200, 1000] {
            let pmf = reservation_count_pmf(n, 0.37).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-10);
            assert!((pmf.mean() - 0.37 * n as f64).abs() < 1e-8 * n as f64);
        }
        assert!((binomial_coefficient(100, 50) / 1.0089134454556419e29 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lone_contender_always_singleton() {
        let pmf = singleton_count_pmf(1, 4).unwrap();
        assert_eq!(pmf.masses(), &[0.0, 1.0]);
    }

    #[test]
    fn two_contenders_two_slots() {
        let pmf = singleton_count_pmf(2, 2).unwrap();
        assert_eq!(pmf.masses(), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn two_contenders_never_one_singleton() {
        for v in 1..=12 {
            assert_eq!(singleton_count_pmf(2, v).unwrap().get(1), 0.0);
        }
    }

    #[test]
    fn matches_enumeration() {
        let brute = enumerate_singletons(5, 4);
        let pmf = singleton_count_pmf(5, 4).unwrap();
        for (s, b) in brute.iter().enumerate() {
            assert!((pmf.get(s) - b).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn capped_pmf_folds_tail() {
        let r = singleton_count_pmf(2, 4).unwrap();
        let capped = capped_success_pmf(2, 4, 2).unwrap();
        assert_eq!(capped.support_max(), 1);
        assert_eq!(capped.get(0), r.get(0));
        assert!((capped.get(1) - (r.get(1) + r.get(2))).abs() < 1e-15);
        assert_eq!(capped_success_pmf(0, 4, 3).unwrap().masses(), &[1.0]);
        assert!(capped_success_pmf(3, 4, 6).is_err());
        assert!(capped_success_pmf(3, 4, 1).is_err());
    }

    #[test]
    fn capped_pmf_matches_capped_enumeration() {
        let brute = enumerate_singletons(6, 6);
        let capped = capped_success_pmf(6, 6, 4).unwrap();
        let mut expected = vec![0.0; 4];
        for (s, b) in brute.iter().enumerate() {
            expected[s.min(3)] += b;
        }
        for (s, e) in expected.iter().enumerate() {
            assert!((capped.get(s) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn no_fold_when_cap_covers_minislots() {
        for j in 0..9 {
            let plain = singleton_count_pmf(j, 5).unwrap();
            let capped = capped_success_pmf(j, 5, 6).unwrap();
            assert_eq!(plain.masses(), capped.masses());
        }
    }

    #[test]
    fn update_pmf_edge_cases() {
        assert_eq!(successful_update_pmf(0, 0.3, 4, 3).unwrap().masses(), &[1.0]);
        assert_eq!(successful_update_pmf(1, 1.0, 4, 3).unwrap().masses(), &[0.0, 1.0]);
    }

    #[test]
    fn update_pmf_matches_monte_carlo() {
        use rand::{Rng, SeedableRng};
        let (i, gamma, v, m) = (4usize, 0.5, 3usize, 3usize);
        let pmf = successful_update_pmf(i, gamma, v, m).unwrap();
        let trials = 1_000_000u64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut tally = [0u64; 3];
        for _ in 0..trials {
            let mut occ = [0u8; 3];
            for _ in 0..i {
                if rng.gen_bool(gamma) {
                    occ[rng.gen_range(0..v)] += 1;
                }
            }
            let singles = occ.iter().filter(|&&o| o == 1).count();
            tally[singles.min(m - 1)] += 1;
        }
        for s in 0..3 {
            let f = tally[s] as f64 / trials as f64;
            let se = (pmf.get(s) * (1.0 - pmf.get(s)) / trials as f64).sqrt().max(1e-9);
            assert!((f - pmf.get(s)).abs() < 3.0 * se + 1e-12, "s={s}: {f} vs {}", pmf.get(s));
        }
    }

    #[test]
    fn float_path_agrees_with_exact_path() {
        for v in [1usize, 2, 4, 8] {
            let exact = exact_pmfs(v, 40);
            let float = float_pmfs(v, 40, 0);
            for j in 0..=40 {
                for s in 0..=j.min(v) {
                    let (a, b) = (exact[j].get(s), float[j].get(s));
                    assert!((a - b).abs() < 1e-13 + 1e-11 * a, "j={j} v={v} s={s}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn large_contender_counts_stay_normalised() {
        let table = SingletonTable::new(6, 300);
        for j in [65usize, 100, 300] {
            let pmf = table.pmf(j);
            assert!((pmf.total() - 1.0).abs() < 1e-10);
            let expected = j as f64 * (1.0 - 1.0 / 6.0f64).powi(j as i32 - 1);
            assert!((pmf.mean() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn alternating_formula_small_cases() {
        let pmf = singleton_count_pmf_alternating(2, 2).unwrap();
        assert!((pmf.get(0) - 0.5).abs() < 1e-15);
        assert!((pmf.get(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn clamp_rejects_real_negatives() {
        assert_eq!(Probability::clamped(-1e-13).unwrap().value(), 0.0);
        assert!(Probability::clamped(-1e-6).is_err());
        assert!(CountPmf::from_masses(vec![0.5, 0.4]).is_err());
    }
}
