//! Exact laws of the collecting chain.
//!
//! The law of `X_t` (distinct stickers after `t` purchases) is propagated by
//! the two-term recurrence
//!
//! ```text
//! p_{t+1}(j) = p_t(j) * j/n + p_t(j-1) * (n-j+1)/n
//! ```
//!
//! in `O(n)` work per purchase and `O(n)` memory. The completion time
//! `tau = min { t : X_t = n }` is read off the absorbing state.
//! Values below `f64::MIN_POSITIVE` are flushed to zero while stepping; the
//! mass discarded that way is below `n * t * 2.3e-308`.

use serde::Serialize;

use crate::album::{advance_probability, stay_probability, AlbumSpec};
use crate::error::{Error, Result};

/// Law of `X_t` starting from an empty album.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    pub t: u64,
    /// `probs[j] = P(X_t = j)` for `j` in `0..=n`.
    pub probs: Vec<f64>,
}

impl StateDistribution {
    /// `P(X_t < n)`, summed over the non-absorbed states.
    pub fn unabsorbed_mass(&self) -> f64 {
        let n = self.probs.len() - 1;
        self.probs[..n].iter().sum()
    }
}

/// Law of the completion time truncated at `t_max` purchases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionLaw {
    pub n: usize,
    pub t_max: u64,
    /// `pmf[t] = P(tau = t)` for `t` in `0..=t_max`.
    pub pmf: Vec<f64>,
    /// `cdf[t] = P(tau <= t)`.
    pub cdf: Vec<f64>,
    /// `P(tau > t_max)`, the probability mass beyond the horizon.
    pub tail_mass: f64,
    #[serde(skip)]
    survival: Vec<f64>,
}

impl CompletionLaw {
    /// `P(tau > t)` for `t <= t_max`, accumulated from the far end so that
    /// small tails keep their relative precision.
    pub fn survival(&self, t: u64) -> Option<f64> {
        self.survival.get(usize::try_from(t).ok()?).copied()
    }

    /// `sum_t t * pmf[t]` over the truncated support.
    pub fn truncated_mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(t, &p)| t as f64 * p)
            .sum()
    }
}

/// Success probability of a geometric law on `{1, 2, ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricLaw {
    p: f64,
}

impl GeometricLaw {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p <= 1.0 {
            Ok(Self { p })
        } else {
            Err(Error::InvalidInstance(format!(
                "geometric success probability {p} is outside (0, 1]"
            )))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Steps the law of `X_t` forward one purchase at a time.
struct Evolver {
    n: usize,
    t: u64,
    probs: Vec<f64>,
    stay: Vec<f64>,
    advance: Vec<f64>,
    // Lowest state that can still carry mass.
    lo: usize,
}

impl Evolver {
    fn new(spec: &AlbumSpec) -> Self {
        let n = spec.n();
        let mut probs = vec![0.0; n + 1];
        probs[0] = 1.0;
        Self {
            n,
            t: 0,
            probs,
            stay: (0..=n).map(|i| stay_probability(n, i)).collect(),
            advance: (0..=n)
                .map(|i| {
                    if i < n {
                        advance_probability(n, i)
                    } else {
                        0.0
                    }
                })
                .collect(),
            lo: 0,
        }
    }

    /// Probability `X_{t+1} = n` and `X_t = n - 1`, i.e. `P(tau = t + 1)`.
    fn completion_step_mass(&self) -> f64 {
        self.probs[self.n - 1] * self.advance[self.n - 1]
    }

    fn step(&mut self) {
        let n = self.n;
        let hi = usize::try_from(self.t + 1).map_or(n, |t| t.min(n));
        let probs = &mut self.probs;
        if hi == n {
            // absorbing state keeps its mass
            probs[n] += probs[n - 1] * self.advance[n - 1];
        }
        let top = if hi == n { n - 1 } else { hi };
        for j in (self.lo.max(1)..=top).rev() {
            let v = probs[j] * self.stay[j] + probs[j - 1] * self.advance[j - 1];
            probs[j] = if v < f64::MIN_POSITIVE { 0.0 } else { v };
        }
        if self.lo == 0 {
            probs[0] = 0.0;
        }
        while self.lo < n && probs[self.lo] == 0.0 {
            self.lo += 1;
        }
        self.t += 1;
    }

    fn unabsorbed_mass(&self) -> f64 {
        self.probs[self.lo.min(self.n)..self.n].iter().sum()
    }
}

/// Exact law of `X_t` from the empty album.
pub fn evolve_distribution(spec: &AlbumSpec, t: u64) -> StateDistribution {
    let mut ev = Evolver::new(spec);
    for _ in 0..t {
        ev.step();
    }
    StateDistribution { t, probs: ev.probs }
}

fn law_from_evolver(ev: &mut Evolver, t_max: u64) -> CompletionLaw {
    let n = ev.n;
    let len = t_max as usize + 1;
    let mut pmf = Vec::with_capacity(len);
    let mut cdf = Vec::with_capacity(len);
    pmf.push(0.0);
    cdf.push(0.0);
    for _ in 0..t_max {
        let mass = ev.completion_step_mass();
        ev.step();
        pmf.push(mass);
        cdf.push(ev.probs[n]);
    }
    finish_law(n, ev, pmf, cdf)
}

fn finish_law(n: usize, ev: &Evolver, pmf: Vec<f64>, cdf: Vec<f64>) -> CompletionLaw {
    let tail_mass = ev.unabsorbed_mass();
    let mut survival = vec![0.0; pmf.len()];
    let mut acc = tail_mass;
    for t in (0..pmf.len()).rev() {
        survival[t] = acc;
        acc += pmf[t];
    }
    CompletionLaw {
        n,
        t_max: ev.t,
        pmf,
        cdf,
        tail_mass,
        survival,
    }
}

/// Law of the completion time up to `t_max` purchases.
pub fn completion_law(spec: &AlbumSpec, t_max: u64) -> Result<CompletionLaw> {
    if t_max < spec.n() as u64 {
        return Err(Error::HorizonTooSmall { t_max, n: spec.n() });
    }
    let mut ev = Evolver::new(spec);
    Ok(law_from_evolver(&mut ev, t_max))
}

/// `P(tau > t)`, the probability the album is still incomplete after `t`
/// purchases.
pub fn exact_tail(spec: &AlbumSpec, t: u64) -> f64 {
    evolve_distribution(spec, t).unabsorbed_mass()
}

/// Largest album size accepted by [`inclusion_exclusion_tail`].
pub const ORACLE_MAX_N: usize = 64;

/// Bound on the floating-point error of the alternating sum, relative to
/// the sum of term magnitudes; above this the oracle refuses to answer.
const ORACLE_ABS_ERROR_LIMIT: f64 = 1e-10;

/// `ln k!` for `k` in `0..=n`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `P(tau > t)` by inclusion-exclusion over the events "sticker `k` has not
/// been drawn":
///
/// ```text
/// sum_{k=1}^{n} (-1)^{k+1} C(n,k) (1 - k/n)^t
/// ```
///
/// Each term is evaluated in log space. Independent of the recurrence, so
/// it serves as an oracle for [`exact_tail`].
pub fn inclusion_exclusion_tail(spec: &AlbumSpec, t: u64) -> Result<f64> {
    let n = spec.n();
    if n > ORACLE_MAX_N {
        return Err(Error::OracleRange {
            n,
            max: ORACLE_MAX_N,
        });
    }
    let lf = log_factorials(n);
    let nf = n as f64;
    let tf = t as f64;
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    for k in 1..=n {
        let term = if k == n {
            // (1 - n/n)^t = 0^t, with 0^0 = 1
            if t == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            let log_binom = lf[n] - lf[k] - lf[n - k];
            let log_power = tf * (-(k as f64) / nf).ln_1p();
            (log_binom + log_power).exp()
        };
        magnitude += term;
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    // Each term carries a few ulps of error from exp/ln.
    let error_bound = 16.0 * f64::EPSILON * magnitude;
    if error_bound > ORACLE_ABS_ERROR_LIMIT {
        return Err(Error::OracleRange {
            n,
            max: ORACLE_MAX_N,
        });
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Smallest `t` with `P(tau <= t) >= target`.
///
/// The horizon starts at `ceil(n ln n)` and doubles until the target is
/// reached; the answer is then located by binary search.
pub fn completion_quantile(spec: &AlbumSpec, target: f64) -> Result<u64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidProbability(target));
    }
    let n = spec.n();
    let allowed_tail = 1.0 - target;
    let mut horizon = ((n as f64) * (n as f64).ln()).ceil().max(n as f64) as u64;

    let mut ev = Evolver::new(spec);
    let mut pmf = vec![0.0];
    let mut cdf = vec![0.0];
    loop {
        while ev.t < horizon {
            let mass = ev.completion_step_mass();
            ev.step();
            pmf.push(mass);
            cdf.push(ev.probs[n]);
        }
        if ev.unabsorbed_mass() <= allowed_tail {
            break;
        }
        horizon *= 2;
    }
    let law = finish_law(n, &ev, pmf, cdf);
    let first = law.survival.partition_point(|&s| s > allowed_tail);
    Ok(first as u64)
}

pub fn geometric_pmf(law: &GeometricLaw, k: u64) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidTrial(k));
    }
    Ok((1.0 - law.p).powf((k - 1) as f64) * law.p)
}

/// Mean number of trials up to and including the first success, `1/p`.
pub fn geometric_mean(law: &GeometricLaw) -> f64 {
    1.0 / law.p
}

/// Expected purchases to obtain one new sticker while `missing` are still
/// absent: `n / missing`.
pub fn expected_draws_for_next(spec: &AlbumSpec, missing: usize) -> Result<f64> {
    let n = spec.n();
    if missing == 0 || missing > n {
        return Err(Error::InvalidState { state: missing, n });
    }
    let law = GeometricLaw::new(missing as f64 / n as f64)?;
    Ok(geometric_mean(&law))
}

/// `E[tau] = sum_{k=1}^{n} n/k = n H_n`, smallest terms first.
pub fn expected_completion(spec: &AlbumSpec) -> f64 {
    let n = spec.n() as f64;
    (1..=spec.n()).rev().map(|k| n / k as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::album::{transition_probability, CollectorState};
    use proptest::prelude::*;

    fn spec(n: usize) -> AlbumSpec {
        AlbumSpec::unpriced(n).unwrap()
    }

    /// Law of `X_t` by enumerating all `n^t` equally likely draw sequences.
    fn enumerate_law(n: usize, t: u32) -> Vec<f64> {
        let total = (n as u64).pow(t);
        let mut counts = vec![0u64; n + 1];
        for code in 0..total {
            let mut seen = 0u64;
            let mut c = code;
            for _ in 0..t {
                seen |= 1 << (c % n as u64);
                c /= n as u64;
            }
            counts[seen.count_ones() as usize] += 1;
        }
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    #[test]
    fn initial_point_mass() {
        assert_eq!(evolve_distribution(&spec(2), 0).probs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn small_laws_match_enumeration() {
        assert_eq!(enumerate_law(2, 2), vec![0.0, 0.5, 0.5]);
        assert_eq!(evolve_distribution(&spec(2), 2).probs, vec![0.0, 0.5, 0.5]);

        let brute = enumerate_law(3, 3);
        assert!((brute[3] - 2.0 / 9.0).abs() < 1e-15);
        let d = evolve_distribution(&spec(3), 3);
        assert!((d.probs[3] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn evolution_matches_enumeration_exhaustively() {
        for n in 1..=8usize {
            for t in 0..=8u32 {
                let brute = enumerate_law(n, t);
                let d = evolve_distribution(&spec(n), t as u64);
                for (j, (b, p)) in brute.iter().zip(&d.probs).enumerate() {
                    assert!((b - p).abs() <= 1e-12, "n={n} t={t} j={j}: {b} vs {p}");
                }
            }
        }
    }

    #[test]
    fn distribution_invariants() {
        for n in [1, 2, 7, 40] {
            for t in [0u64, 1, 3, 10, 100] {
                let d = evolve_distribution(&spec(n), t);
                let sum: f64 = d.probs.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-10);
                for j in (t as usize + 1)..=n {
                    assert_eq!(d.probs[j], 0.0);
                }
            }
        }
    }

    #[test]
    fn one_step_consistency_with_transition_probabilities() {
        for n in [1usize, 2, 5, 13, 64] {
            let s = spec(n);
            for t in [0u64, 1, 4, 17, 90] {
                let now = evolve_distribution(&s, t);
                let next = evolve_distribution(&s, t + 1);
                for j in 0..=n {
                    let pushed: f64 = (0..=n)
                        .map(|i| {
                            now.probs[i]
                                * transition_probability(&s, CollectorState(i), CollectorState(j))
                                    .unwrap()
                        })
                        .sum();
                    assert!((pushed - next.probs[j]).abs() <= 1e-12, "n={n} t={t} j={j}");
                }
            }
        }
    }

    #[test]
    fn completion_law_single_sticker() {
        let law = completion_law(&spec(1), 6).unwrap();
        assert_eq!(law.pmf, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(law.tail_mass, 0.0);
    }

    #[test]
    fn completion_law_two_stickers_is_shifted_geometric() {
        // tau = 1 + Geometric(1/2): enumeration gives P(tau = t) = 2 / 2^t for t >= 2
        for t in 2..=5u32 {
            let brute_cdf: f64 = enumerate_law(2, t)[2];
            let prev: f64 = enumerate_law(2, t - 1)[2];
            assert_eq!(brute_cdf - prev, 0.5f64.powi(t as i32 - 1));
        }
        let law = completion_law(&spec(2), 5).unwrap();
        assert_eq!(law.pmf[0], 0.0);
        assert_eq!(law.pmf[1], 0.0);
        for t in 2..=5 {
            assert_eq!(law.pmf[t], 0.5f64.powi(t as i32 - 1));
        }
        assert_eq!(law.tail_mass, 0.5f64.powi(4));
    }

    #[test]
    fn completion_law_three_stickers_at_three() {
        let law = completion_law(&spec(3), 3).unwrap();
        assert!((law.cdf[3] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn completion_law_rejects_short_horizon() {
        assert_eq!(
            completion_law(&spec(10), 9).unwrap_err(),
            Error::HorizonTooSmall { t_max: 9, n: 10 }
        );
    }

    #[test]
    fn completion_law_invariants() {
        for n in [1usize, 3, 10, 50] {
            let law = completion_law(&spec(n), 20 * n as u64).unwrap();
            assert!(law.pmf[..n].iter().all(|&p| p == 0.0));
            assert!(law.pmf.iter().all(|&p| p >= 0.0));
            assert!(law.cdf.windows(2).all(|w| w[0] <= w[1]));
            assert!((law.cdf[law.t_max as usize] + law.tail_mass - 1.0).abs() <= 1e-10);
            for t in 0..=law.t_max {
                let s = law.survival(t).unwrap();
                assert!((s - (1.0 - law.cdf[t as usize])).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn tail_examples() {
        assert_eq!(exact_tail(&spec(2), 1), 1.0);
        assert_eq!(exact_tail(&spec(2), 3), 0.25);
    }

    #[test]
    fn inclusion_exclusion_examples() {
        assert!((inclusion_exclusion_tail(&spec(2), 3).unwrap() - 0.25).abs() < 1e-15);
        let v = inclusion_exclusion_tail(&spec(3), 3).unwrap();
        assert!((v - 7.0 / 9.0).abs() < 1e-14);
        assert_eq!(inclusion_exclusion_tail(&spec(1), 0).unwrap(), 1.0);
        assert_eq!(inclusion_exclusion_tail(&spec(1), 5).unwrap(), 0.0);
    }

    #[test]
    fn inclusion_exclusion_range() {
        assert_eq!(
            inclusion_exclusion_tail(&spec(65), 1000).unwrap_err(),
            Error::OracleRange { n: 65, max: 64 }
        );
        // heavy cancellation at small t is refused rather than answered badly
        assert!(inclusion_exclusion_tail(&spec(64), 0).is_err());
        // well-conditioned at large t
        let v = inclusion_exclusion_tail(&spec(64), 2000).unwrap();
        assert!((v - exact_tail(&spec(64), 2000)).abs() < 1e-9);
    }

    #[test]
    fn recurrence_agrees_with_inclusion_exclusion() {
        for n in 1..=12 {
            let s = spec(n);
            for t in 0..=200 {
                let a = exact_tail(&s, t);
                let b = inclusion_exclusion_tail(&s, t).unwrap();
                assert!((a - b).abs() <= 1e-9, "n={n} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(completion_quantile(&spec(1), 0.99).unwrap(), 1);
        assert_eq!(completion_quantile(&spec(2), 0.5).unwrap(), 2);
        assert_eq!(completion_quantile(&spec(2), 0.51).unwrap(), 3);
        assert!(completion_quantile(&spec(2), 1.0).is_err());
        assert!(completion_quantile(&spec(2), 0.0).is_err());
    }

    #[test]
    fn quantile_is_minimal() {
        for n in [3usize, 10, 37] {
            let s = spec(n);
            for target in [0.1, 0.5, 0.9, 0.999] {
                let q = completion_quantile(&s, target).unwrap();
                assert!(1.0 - exact_tail(&s, q) >= target - 1e-12);
                assert!(1.0 - exact_tail(&s, q - 1) < target);
            }
        }
    }

    #[test]
    fn geometric_examples() {
        let one = GeometricLaw::new(1.0).unwrap();
        assert_eq!(geometric_pmf(&one, 1).unwrap(), 1.0);
        assert_eq!(geometric_mean(&one), 1.0);
        let half = GeometricLaw::new(0.5).unwrap();
        assert_eq!(geometric_pmf(&half, 3).unwrap(), 0.125);
        let last = GeometricLaw::new(1.0 / 649.0).unwrap();
        assert_eq!(geometric_pmf(&last, 1).unwrap(), 1.0 / 649.0);
        assert!((geometric_mean(&last) - 649.0).abs() < 1e-9);
        let ten_missing = GeometricLaw::new(10.0 / 649.0).unwrap();
        assert!((geometric_mean(&ten_missing) - 64.9).abs() < 1e-12);
        assert_eq!(geometric_pmf(&half, 0), Err(Error::InvalidTrial(0)));
    }

    #[test]
    fn geometric_rejects_bad_p() {
        assert!(GeometricLaw::new(0.0).is_err());
        assert!(GeometricLaw::new(1.5).is_err());
        assert!(GeometricLaw::new(f64::NAN).is_err());
    }

    #[test]
    fn next_sticker_expectations() {
        assert!((expected_draws_for_next(&spec(649), 1).unwrap() - 649.0).abs() < 1e-9);
        assert_eq!(expected_draws_for_next(&spec(10), 10).unwrap(), 1.0);
        assert_eq!(expected_draws_for_next(&spec(10), 4).unwrap(), 2.5);
        assert!(expected_draws_for_next(&spec(10), 0).is_err());
        assert!(expected_draws_for_next(&spec(10), 11).is_err());
    }

    #[test]
    fn expected_completion_small() {
        assert_eq!(expected_completion(&spec(1)), 1.0);
        assert_eq!(expected_completion(&spec(3)), 5.5);
        let law = completion_law(&spec(3), 200).unwrap();
        assert!(law.tail_mass < 1e-12);
        assert!((law.truncated_mean() - 5.5).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn geometric_partial_sums_telescope(p in 1e-4f64..=1.0, big_k in 1u64..400) {
            let law = GeometricLaw::new(p).unwrap();
            let partial: f64 = (1..=big_k).map(|k| geometric_pmf(&law, k).unwrap()).sum();
            let closed = 1.0 - (1.0 - p).powf(big_k as f64);
            prop_assert!((partial - closed).abs() <= 1e-12);
        }

        #[test]
        fn distribution_is_a_probability_vector(n in 1usize..300, t in 0u64..3000) {
            let d = evolve_distribution(&spec(n), t);
            prop_assert!(d.probs.iter().all(|&p| p >= 0.0));
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            prop_assert!(d.probs.iter().skip(t as usize + 1).all(|&p| p == 0.0));
        }
    }
}
