//! f-random letters and words, and Monte Carlo checks of the tail bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::limits::{cdf, d_box, LimitFn, LimitVector, Piecewise};
use crate::rng::{SeededStream, PRNG_ID};
use crate::scalar::Scalar;
use crate::words::{sample_subsequence, Alphabet, Word};

/// `(X, Y)` with `X ~ U[0,1]` and `Y ~ Bernoulli(f(X))`.
pub fn f_random_letter<T: Scalar>(f: &LimitFn<T>, stream: &SeededStream) -> (f64, u8) {
    draw_letter(f, &mut stream.rng())
}

fn draw_letter<T: Scalar, R: Rng + ?Sized>(f: &LimitFn<T>, rng: &mut R) -> (f64, u8) {
    let x: f64 = rng.gen();
    let u: f64 = rng.gen();
    (x, u8::from(u < f.eval_f64(x)))
}

fn sorted_letters(mut draws: Vec<(f64, u8)>) -> Vec<u8> {
    // stable sort keeps draw order on equal X
    draws.sort_by(|a, b| a.0.total_cmp(&b.0));
    draws.into_iter().map(|(_, y)| y).collect()
}

/// `sub(n, f)`: `n` independent f-random letters read in increasing order of
/// `X`, ties broken by draw index.
pub fn f_random_word<T: Scalar>(f: &LimitFn<T>, n: usize, stream: &SeededStream) -> Result<Word> {
    if n == 0 {
        return Err(invalid("word length must be positive"));
    }
    let mut rng = stream.rng();
    let draws = (0..n).map(|_| draw_letter(f, &mut rng)).collect();
    Word::from_bits(&sorted_letters(draws))
}

/// `sub(n, F)` for a `k`-letter limit: `Y` takes letter `a` with probability
/// `f^a(X)`.
pub fn f_random_word_vector<T: Scalar>(
    f: &LimitVector<T>,
    n: usize,
    stream: &SeededStream,
) -> Result<Word> {
    if n == 0 {
        return Err(invalid("word length must be positive"));
    }
    let mut rng = stream.rng();
    let k = f.alphabet().size();
    let draws = (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            let u: f64 = rng.gen();
            let probs = f.eval_f64(x);
            let mut acc = 0.0;
            let letter = probs
                .iter()
                .position(|p| {
                    acc += p;
                    u < acc
                })
                .unwrap_or(k - 1);
            (x, letter as u8)
        })
        .collect();
    Word::new(f.alphabet().clone(), sorted_letters(draws))
}

/// Outcome of a Monte Carlo tail experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub empirical: f64,
    pub bound: f64,
    /// `bound + 3σ` with `σ² = bound(1 − bound)/trials` (bound clipped to 1).
    pub allowed: f64,
    pub exceedances: usize,
    pub trials: usize,
    pub seed: u64,
    pub prng: &'static str,
    /// Set when the subsequence length is below the configured `ℓ₀`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub below_l0: Option<bool>,
}

impl TailReport {
    fn new(exceedances: usize, trials: usize, bound: f64, stream: &SeededStream) -> Self {
        let p = bound.min(1.0);
        let allowed = bound + 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
        Self {
            empirical: exceedances as f64 / trials as f64,
            bound,
            allowed,
            exceedances,
            trials,
            seed: stream.seed,
            prng: PRNG_ID,
            below_l0: None,
        }
    }

    pub fn holds(&self) -> bool {
        self.empirical <= self.allowed
    }
}

/// Samples `trials` words `sub(n, f)` and reports the fraction with
/// `d_□(f_{sub(n,f)}, f) ≥ 8a` next to the bound `4n e^{−2a²n}`.
pub fn tail_experiment_dbox<T: Scalar>(
    f: &LimitFn<T>,
    n: usize,
    a: &T,
    trials: usize,
    stream: &SeededStream,
) -> Result<TailReport> {
    if n == 0 || trials == 0 {
        return Err(invalid("n and trials must be positive"));
    }
    if a.clone() * T::from_usize(n) < T::one() {
        return Err(invalid("a must be at least 1/n"));
    }
    let threshold = a.clone() * T::from_usize(8);
    let exceed = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let w = f_random_word(f, n, &stream.substream(i))?;
            Ok(d_box(&LimitFn::from_word(&w)?, f).value >= threshold)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    let af = a.as_f64();
    let bound = 4.0 * n as f64 * (-2.0 * af * af * n as f64).exp();
    Ok(TailReport::new(exceed, trials, bound, stream))
}

/// Default `ℓ₀(ε) = ⌈300/ε²⌉`.
pub fn default_l0(eps: f64) -> usize {
    (300.0 / (eps * eps)).ceil() as usize
}

/// Samples `u = sub(ℓ, w)` and reports the fraction with
/// `d_□(f_u, f_w) ≥ ε` next to `4ℓ e^{−ε²ℓ/300}`.
pub fn subsequence_tail_experiment<T: Scalar>(
    w: &Word,
    len: usize,
    eps: &T,
    trials: usize,
    stream: &SeededStream,
    l0: Option<usize>,
) -> Result<TailReport> {
    if len > w.len() {
        return Err(Error::PatternTooLong {
            pattern: len,
            word: w.len(),
        });
    }
    if len == 0 || trials == 0 {
        return Err(invalid("ℓ and trials must be positive"));
    }
    let fw = LimitFn::<T>::from_word(w)?;
    let exceed = (0..trials as u64)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let u = sample_subsequence(w, len, &mut stream.substream(i).rng());
            Ok(&d_box(&LimitFn::from_word(&u)?, &fw).value >= eps)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    let e = eps.as_f64();
    let bound = 4.0 * len as f64 * (-e * e * len as f64 / 300.0).exp();
    let mut report = TailReport::new(exceed, trials, bound, stream);
    report.below_l0 = Some(len < l0.unwrap_or_else(|| default_l0(e)));
    Ok(report)
}

/// Inverse of a continuous nondecreasing piecewise polynomial `F` with
/// `F(0) = 0`: the least `x` with `F(x) ≥ target`, by bisection.
fn inverse_cdf(big_f: &Piecewise<f64>, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if big_f.eval(&mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Samples `(X, Y)` by first drawing `Y ~ Bernoulli(∫f)` and then `X` from
/// the conditional density `f^Y(x) / P(Y)`.
pub struct MixtureSampler {
    p_one: f64,
    cdf_one: Piecewise<f64>,
    cdf_zero: Piecewise<f64>,
}

impl MixtureSampler {
    pub fn new<T: Scalar>(f: &LimitFn<T>) -> Self {
        let f = f.to_f64();
        let cdf_one = cdf(&f);
        let cdf_zero = cdf(&f.complement());
        Self {
            p_one: cdf_one.eval(&1.0),
            cdf_one,
            cdf_zero,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u8) {
        let y = u8::from(rng.gen::<f64>() < self.p_one);
        let u: f64 = rng.gen();
        let x = if y == 1 {
            inverse_cdf(&self.cdf_one, u * self.p_one)
        } else {
            inverse_cdf(&self.cdf_zero, u * (1.0 - self.p_one))
        };
        (x, y)
    }
}

/// Two-sample Kolmogorov–Smirnov statistic for laws of `(X, Y)` with binary
/// `Y`: the largest gap between the joint CDFs `P(X ≤ x, Y ≤ y)`.
pub fn ks_statistic_joint(a: &[(f64, u8)], b: &[(f64, u8)]) -> f64 {
    let mut events: Vec<(f64, u8, bool)> = a
        .iter()
        .map(|&(x, y)| (x, y, true))
        .chain(b.iter().map(|&(x, y)| (x, y, false)))
        .collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    // index 0: Y ≤ 0, index 1: Y ≤ 1
    let mut fa = [0.0f64; 2];
    let mut fb = [0.0f64; 2];
    let mut best = 0.0f64;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            let (_, y, from_a) = events[i];
            for level in y as usize..2 {
                if from_a {
                    fa[level] += 1.0 / na;
                } else {
                    fb[level] += 1.0 / nb;
                }
            }
            i += 1;
        }
        best = best.max((fa[0] - fb[0]).abs()).max((fa[1] - fb[1]).abs());
    }
    best
}

/// Critical value `c(α)·sqrt((n+m)/(nm))` with `c(0.01) = 1.628`.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pearson chi-square test of `P(ab) = d_a d_b` on disjoint consecutive
/// letter pairs. Returns `(statistic, p-value)`.
pub fn letter_pair_chi_square(words: &[Word], probs: &[f64]) -> Result<(f64, f64)> {
    let k = probs.len();
    if k < 2 {
        return Err(invalid("need at least two letters"));
    }
    let mut counts = vec![0u64; k * k];
    for w in words {
        if w.alphabet().size() != k {
            return Err(Error::AlphabetMismatch);
        }
        for pair in w.letters().chunks_exact(2) {
            counts[pair[0] as usize * k + pair[1] as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(invalid("no letter pairs"));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for a in 0..k {
        for b in 0..k {
            let expected = total as f64 * probs[a] * probs[b];
            if expected > 0.0 {
                let diff = counts[a * k + b] as f64 - expected;
                stat += diff * diff / expected;
                cells += 1;
            }
        }
    }
    let dof = cells.saturating_sub(1).max(1) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat);
    Ok((stat, p))
}

/// Empirical letter frequencies of a word.
pub fn letter_frequencies(w: &Word) -> Vec<f64> {
    let k = w.alphabet().size();
    let mut counts = vec![0usize; k];
    for &l in w.letters() {
        counts[l as usize] += 1;
    }
    counts
        .iter()
        .map(|&c| c as f64 / w.len().max(1) as f64)
        .collect()
}

/// Uniform ternary alphabet helper for experiments.
pub fn ternary() -> Alphabet {
    Alphabet::from_chars("012").expect("static alphabet")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::LimitFn;
    use crate::uniformity::best_uniformity;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn constant_extremes() {
        let one = LimitFn::constant(q(1, 1)).unwrap();
        let zero = LimitFn::constant(q(0, 1)).unwrap();
        let s = SeededStream::new(5);
        assert_eq!(f_random_letter(&one, &s).1, 1);
        assert_eq!(f_random_letter(&zero, &s).1, 0);
        assert_eq!(
            f_random_word(&one, 50, &s).unwrap(),
            Word::bits(&"1".repeat(50))
        );
    }

    #[test]
    fn bernoulli_mean() {
        let d = 0.3;
        let f = LimitFn::constant(0.3f64).unwrap();
        let mut rng = SeededStream::new(11).rng();
        let draws = 1_000_000;
        let ones = (0..draws)
            .filter(|_| draw_letter(&f, &mut rng).1 == 1)
            .count();
        let sigma = (d * (1.0 - d) / draws as f64).sqrt();
        assert!((ones as f64 / draws as f64 - d).abs() <= 4.0 * sigma);
    }

    #[test]
    fn block_structure_and_reproducibility() {
        let f = LimitFn::indicator_prefix(q(1, 2)).unwrap();
        let s = SeededStream::new(99);
        let w = f_random_word(&f, 200, &s).unwrap();
        let k = w.ones();
        assert_eq!(
            w,
            Word::bits(&format!("{}{}", "1".repeat(k), "0".repeat(200 - k)))
        );
        assert_eq!(w, f_random_word(&f, 200, &s).unwrap());
        assert_ne!(w, f_random_word(&f, 200, &SeededStream::new(100)).unwrap());
    }

    #[test]
    fn random_words_are_uniform() {
        let f = LimitFn::constant(q(1, 2)).unwrap();
        let n = 1000usize;
        let trials = 50;
        let limit = q(8, 1) * Rational::from_float((n as f64).powf(-0.25)).unwrap();
        let good = (0..trials)
            .filter(|&i| {
                let w = f_random_word(&f, n, &SeededStream::with_stream(3, i)).unwrap();
                best_uniformity(&w).unwrap().discrepancy <= limit
            })
            .count();
        let floor = 1.0 - 4.0 * n as f64 * (-2.0 * (n as f64).sqrt()).exp();
        assert!(good as f64 / trials as f64 >= floor);
    }

    #[test]
    fn tail_examples() {
        let one = LimitFn::constant(q(1, 1)).unwrap();
        let r = tail_experiment_dbox(&one, 50, &q(1, 20), 20, &SeededStream::new(1)).unwrap();
        assert_eq!(r.empirical, 0.0);
        let half = LimitFn::constant(q(1, 2)).unwrap();
        let r = tail_experiment_dbox(&half, 400, &q(1, 10), 200, &SeededStream::new(2)).unwrap();
        assert!((r.bound - 4.0 * 400.0 * (-8.0f64).exp()).abs() < 1e-12);
        assert!(r.holds());
        assert!(tail_experiment_dbox(&half, 400, &q(1, 1000), 10, &SeededStream::new(2)).is_err());
        let again =
            tail_experiment_dbox(&half, 400, &q(1, 10), 200, &SeededStream::new(2)).unwrap();
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn tail_does_not_grow_with_n() {
        let half = LimitFn::constant(0.5f64).unwrap();
        let a = 0.01;
        let trials = 1000;
        let small = tail_experiment_dbox(&half, 200, &a, trials, &SeededStream::new(8)).unwrap();
        let large = tail_experiment_dbox(&half, 400, &a, trials, &SeededStream::new(8)).unwrap();
        let p = small.empirical;
        let sigma = (p * (1.0 - p) / trials as f64)
            .sqrt()
            .max(1.0 / trials as f64);
        assert!(large.empirical <= p + 3.0 * sigma);
    }

    #[test]
    fn subsequence_tail_examples() {
        let w = Word::bits(&"01".repeat(50));
        let r = subsequence_tail_experiment(&w, 100, &q(1, 100), 5, &SeededStream::new(4), None)
            .unwrap();
        assert_eq!(r.empirical, 0.0);
        assert_eq!(r.below_l0, Some(true));
        let w = Word::bits(&"01".repeat(500));
        let r = subsequence_tail_experiment(&w, 200, &q(3, 10), 100, &SeededStream::new(4), None)
            .unwrap();
        assert!(r.bound > 700.0 && r.holds());
        assert!(
            subsequence_tail_experiment(&w, 1001, &q(3, 10), 1, &SeededStream::new(4), None)
                .is_err()
        );

        let blocks = Word::bits(&format!("{}{}", "0".repeat(500), "1".repeat(500)));
        let eps = q(1, 20);
        let trials = 400;
        let r =
            subsequence_tail_experiment(&blocks, 200, &eps, trials, &SeededStream::new(6), None)
                .unwrap();
        // d_□(f_u, f_w) = |K/ℓ − 1/2| with K hypergeometric
        let law = statrs::distribution::Hypergeometric::new(1000, 500, 200).unwrap();
        let p: f64 = (0..=200u64)
            .filter(|k| k.abs_diff(100) >= 10)
            .map(|k| statrs::distribution::Discrete::pmf(&law, k))
            .sum();
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((r.empirical - p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn pair_law_chi_square() {
        let f = LimitFn::constant(0.3f64).unwrap();
        let words: Vec<Word> = (0..100)
            .map(|i| f_random_word(&f, 1000, &SeededStream::with_stream(21, i)).unwrap())
            .collect();
        let (_, p) = letter_pair_chi_square(&words, &[0.7, 0.3]).unwrap();
        assert!(p > 0.01);
        // a strongly correlated source is rejected
        let bad = vec![Word::bits(&"0011".repeat(1000))];
        assert!(letter_pair_chi_square(&bad, &[0.5, 0.5]).unwrap().1 < 0.01);
    }

    #[test]
    fn convergence_in_median() {
        let f = LimitFn::indicator_prefix(0.5f64).unwrap();
        let mut medians = Vec::new();
        for (k, n) in [100usize, 1000, 10_000].into_iter().enumerate() {
            let mut d: Vec<f64> = (0..100u64)
                .into_par_iter()
                .map(|i| {
                    let w =
                        f_random_word(&f, n, &SeededStream::with_stream(31 + k as u64, i)).unwrap();
                    d_box(&LimitFn::from_word(&w).unwrap(), &f).value
                })
                .collect();
            d.sort_by(f64::total_cmp);
            medians.push((d[49] + d[50]) / 2.0);
        }
        assert!(medians[0] > medians[1] && medians[1] > medians[2]);
    }

    #[test]
    fn mixture_identity() {
        let f = LimitFn::indicator_prefix(q(1, 2)).unwrap();
        let mixture = MixtureSampler::new(&f);
        let n = 20_000;
        let mut rng_a = SeededStream::new(41).rng();
        let mut rng_b = SeededStream::new(42).rng();
        let direct: Vec<(f64, u8)> = (0..n).map(|_| draw_letter(&f, &mut rng_a)).collect();
        let mixed: Vec<(f64, u8)> = (0..n).map(|_| mixture.draw(&mut rng_b)).collect();
        assert!(ks_statistic_joint(&direct, &mixed) < ks_critical_1pct(n, n));
        // a different law is detected
        let g = LimitFn::indicator_prefix(q(2, 5)).unwrap();
        let other: Vec<(f64, u8)> = (0..n)
            .map(|_| MixtureSampler::new(&g).draw(&mut rng_b))
            .collect();
        assert!(ks_statistic_joint(&direct, &other) > ks_critical_1pct(n, n));
    }

    #[test]
    fn vector_words() {
        let f = LimitVector::<Rational>::uniform(ternary());
        let w = f_random_word_vector(&f, 3000, &SeededStream::new(3)).unwrap();
        for p in letter_frequencies(&w) {
            assert!((p - 1.0 / 3.0).abs() < 0.05);
        }
        assert!(f_random_word_vector(&f, 0, &SeededStream::new(3)).is_err());
    }
}
