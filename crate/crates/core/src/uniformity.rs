//! Quasi-randomness diagnostics for binary words.

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::poly::binomial;
use crate::words::{count_occurrences, Word};
use crate::Rational;

/// A 1-based inclusive interval `start..=end` of positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        (self.end + 1).saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Result of [`best_uniformity`].
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityReport {
    pub n: usize,
    /// Density minimizing the discrepancy.
    pub d: Rational,
    /// Least `ε` such that the word is `(d, ε)`-uniform.
    pub discrepancy: Rational,
    pub witness: Interval,
    /// `‖w‖₁ / n`.
    pub reference_d: Rational,
    /// Normalized discrepancy at `reference_d`.
    pub reference_discrepancy: Rational,
}

/// Output of [`quasirandomness_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuasirandomnessDiagnostics {
    pub uniformity: UniformityReport,
    /// `|t(u,w) − d^{‖u‖₁}(1−d)^{3−‖u‖₁}|` for every `u ∈ {0,1}³`, with
    /// `d = ‖w‖₁/n`. Empty when `n < 3`.
    pub residuals: Vec<(Word, Rational)>,
    /// `(k, (1/n) Σ_j w_j e^{2πikj/n})` for `k = 1..=K`.
    pub exponential_sums: Vec<(i64, Complex64)>,
    /// Induced walk counts in the Cayley digraph for every `u ∈ {0,1}³`.
    pub cayley_counts: Vec<(Word, BigUint)>,
}

fn require_binary(w: &Word) -> Result<()> {
    if w.alphabet().is_binary() {
        Ok(())
    } else {
        Err(invalid("operation needs a binary word"))
    }
}

fn prefix_ones(w: &Word) -> Vec<i64> {
    let mut s = Vec::with_capacity(w.len() + 1);
    s.push(0i64);
    for &l in w.letters() {
        s.push(s.last().unwrap() + i64::from(l == 1));
    }
    s
}

/// Indices of the maximum and minimum of `S_j − d·j`.
fn extremes(prefix: &[i64], d: &BigRational) -> (usize, usize) {
    let small = d.numer().to_i64().zip(d.denom().to_i64());
    let mut arg_max = 0;
    let mut arg_min = 0;
    match small {
        Some((p, q)) => {
            let value =
                |j: usize| i128::from(q) * i128::from(prefix[j]) - i128::from(p) * j as i128;
            let (mut hi, mut lo) = (value(0), value(0));
            for j in 1..prefix.len() {
                let v = value(j);
                if v > hi {
                    hi = v;
                    arg_max = j;
                }
                if v < lo {
                    lo = v;
                    arg_min = j;
                }
            }
        }
        None => {
            let (p, q) = (d.numer(), d.denom());
            let value = |j: usize| q * BigInt::from(prefix[j]) - p * BigInt::from(j);
            let (mut hi, mut lo) = (value(0), value(0));
            for j in 1..prefix.len() {
                let v = value(j);
                if v > hi {
                    hi = v.clone();
                    arg_max = j;
                }
                if v < lo {
                    lo = v;
                    arg_min = j;
                }
            }
        }
    }
    (arg_max, arg_min)
}

fn interval_excess(prefix: &[i64], d: &BigRational, a: usize, b: usize) -> Rational {
    let ones = BigRational::from_integer(BigInt::from(prefix[b] - prefix[a]));
    (ones - d * BigRational::from_integer(BigInt::from(b - a))).abs()
}

fn discrepancy_from_prefix(prefix: &[i64], d: &BigRational) -> (Rational, Interval) {
    let (hi, lo) = extremes(prefix, d);
    let (a, b) = (hi.min(lo), hi.max(lo));
    let n = prefix.len() - 1;
    if a == b {
        // Every interval carries exactly d|I| ones.
        return (Rational::zero(), Interval { start: 1, end: n });
    }
    let value = interval_excess(prefix, d, a, b);
    (
        value,
        Interval {
            start: a + 1,
            end: b,
        },
    )
}

fn check_density(d: &Rational) -> Result<()> {
    if d.is_negative() || d > &Rational::one() {
        return Err(invalid(format!("density {d} outside [0,1]")));
    }
    Ok(())
}

/// `sup_I |Σ_{i∈I} w_i − d|I||` (not normalized by `n`) with an attaining
/// interval.
pub fn discrepancy(w: &Word, d: &Rational) -> Result<(Rational, Interval)> {
    require_binary(w)?;
    check_density(d)?;
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(discrepancy_from_prefix(&prefix_ones(w), d))
}

/// Slopes of the edges of the upper (or lower) convex hull of `(j, S_j)`.
fn hull_slopes(prefix: &[i64], upper: bool) -> Vec<Rational> {
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for (j, &s) in prefix.iter().enumerate() {
        let p = (j as i64, s);
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) as i128 * (p.1 - o.1) as i128
                - (a.1 - o.1) as i128 * (p.0 - o.0) as i128;
            if (upper && cross >= 0) || (!upper && cross <= 0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.windows(2)
        .map(|e| Rational::new((e[1].1 - e[0].1).into(), (e[1].0 - e[0].0).into()))
        .collect()
}

/// Minimizes the discrepancy over `d ∈ [0,1]`.
///
/// `d ↦ max_j(S_j − dj) − min_j(S_j − dj)` is convex and piecewise linear
/// with breakpoints at hull edge slopes, so a binary search over the sorted
/// slopes finds the exact minimizer.
pub fn best_uniformity(w: &Word) -> Result<UniformityReport> {
    require_binary(w)?;
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let prefix = prefix_ones(w);
    let n = w.len();
    let mut candidates = hull_slopes(&prefix, true);
    candidates.extend(hull_slopes(&prefix, false));
    candidates.push(Rational::zero());
    candidates.push(Rational::one());
    candidates.sort();
    candidates.dedup();

    let eval = |d: &Rational| discrepancy_from_prefix(&prefix, d).0;
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if eval(&candidates[mid + 1]) >= eval(&candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let d = candidates[lo].clone();
    let (value, witness) = discrepancy_from_prefix(&prefix, &d);
    let n_q = Rational::from_integer(n.into());
    let reference_d = Rational::new(prefix[n].into(), n.into());
    let reference_discrepancy = discrepancy_from_prefix(&prefix, &reference_d).0 / &n_q;
    Ok(UniformityReport {
        n,
        d,
        discrepancy: value / n_q,
        witness,
        reference_d,
        reference_discrepancy,
    })
}

/// `d^{‖u‖₁}(1−d)^{ℓ−‖u‖₁}`.
fn product_density(u: &Word, d: &Rational) -> Rational {
    let ones = u.ones();
    num_traits::pow(d.clone(), ones) * num_traits::pow(Rational::one() - d, u.len() - ones)
}

/// `|binom(w,u) − d^{‖u‖₁}(1−d)^{ℓ−‖u‖₁} binom(n,ℓ)| / n^ℓ` for every
/// `u ∈ {0,1}^ℓ`.
pub fn counting_residuals(w: &Word, d: &Rational, len: usize) -> Result<Vec<(Word, Rational)>> {
    require_binary(w)?;
    check_density(d)?;
    if len == 0 || w.len() < len {
        return Err(Error::PatternTooLong {
            pattern: len,
            word: w.len(),
        });
    }
    let total = Rational::from_integer(binomial(w.len(), len));
    let scale = Rational::from_integer(num_traits::pow(BigInt::from(w.len()), len));
    Ok(Word::all(w.alphabet(), len)
        .map(|u| {
            let count = Rational::from_integer(count_occurrences(w.letters(), u.letters()).into());
            let r = (count - product_density(&u, d) * &total).abs() / &scale;
            (u, r)
        })
        .collect())
}

/// Length-three residuals; their maximum is the `ε` of the counting
/// hypothesis.
pub fn minimizer_residuals(w: &Word, d: &Rational) -> Result<Vec<(Word, Rational)>> {
    if w.len() < 3 {
        return Err(invalid("minimizer residuals need n ≥ 3"));
    }
    counting_residuals(w, d, 3)
}

/// `(1/n) Σ_{j∈[n]} w_j e^{2πikj/n}` with Kahan-compensated summation.
pub fn exponential_sum(w: &Word, k: i64) -> Result<Complex64> {
    require_binary(w)?;
    if k == 0 {
        return Err(invalid("exponential sum needs k ≠ 0"));
    }
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let n = w.len() as i128;
    let (mut re, mut im) = (Kahan::default(), Kahan::default());
    for (j, _) in w.letters().iter().enumerate().filter(|(_, &l)| l == 1) {
        let phase = (i128::from(k) * (j as i128 + 1)).rem_euclid(n) as f64 / n as f64;
        let angle = std::f64::consts::TAU * phase;
        re.add(angle.cos());
        im.add(angle.sin());
    }
    Ok(Complex64::new(re.sum, im.sum) / n as f64)
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// A piecewise-linear function on the circle `ℝ/ℤ`, given by its values at
/// breakpoints `0 = x_0 < … < x_m = 1` with `φ(0) = φ(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleFunction {
    points: Vec<(Rational, Rational)>,
}

impl CircleFunction {
    pub fn new(points: Vec<(Rational, Rational)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidBreakpoints("need at least two points".into()));
        }
        if !points[0].0.is_zero() || !points.last().unwrap().0.is_one() {
            return Err(Error::InvalidBreakpoints(
                "breakpoints must run from 0 to 1".into(),
            ));
        }
        if points.windows(2).any(|p| p[0].0 >= p[1].0) {
            return Err(Error::InvalidBreakpoints(
                "breakpoints must increase".into(),
            ));
        }
        if points[0].1 != points.last().unwrap().1 {
            return Err(invalid("φ(0) ≠ φ(1): not a function on the circle"));
        }
        Ok(Self { points })
    }

    /// Distance to the nearest integer.
    pub fn tent() -> Self {
        let q = |n: i64, d: i64| Rational::new(n.into(), d.into());
        Self::new(vec![
            (q(0, 1), q(0, 1)),
            (q(1, 2), q(1, 2)),
            (q(1, 1), q(0, 1)),
        ])
        .unwrap()
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![(Rational::zero(), c.clone()), (Rational::one(), c)]).unwrap()
    }

    /// Evaluates at `x`, reduced mod 1.
    pub fn eval(&self, x: &Rational) -> Rational {
        let x = x - x.floor();
        let i = self
            .points
            .partition_point(|p| p.0 <= x)
            .clamp(1, self.points.len() - 1);
        let ((x0, y0), (x1, y1)) = (&self.points[i - 1], &self.points[i]);
        y0 + (y1 - y0) * (&x - x0) / (x1 - x0)
    }

    pub fn integral(&self) -> Rational {
        self.points
            .windows(2)
            .map(|p| (&p[1].0 - &p[0].0) * (&p[0].1 + &p[1].1) / Rational::from_integer(2.into()))
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> Rational {
        self.points
            .windows(2)
            .map(|p| ((&p[1].1 - &p[0].1) / (&p[1].0 - &p[0].0)).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// `|(1/n) Σ_j w_j φ(j/n) − d ∫φ|` with `d = ‖w‖₁/n`, exactly.
pub fn equidistribution_error(w: &Word, phi: &CircleFunction) -> Result<Rational> {
    require_binary(w)?;
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let n = Rational::from_integer(w.len().into());
    let sum = w
        .letters()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 1)
        .map(|(j, _)| phi.eval(&(Rational::from_integer((j + 1).into()) / &n)))
        .fold(Rational::zero(), |a, b| a + b);
    let d = Rational::from_integer(w.ones().into()) / &n;
    Ok((sum / n - d * phi.integral()).abs())
}

/// Number of induced `u`-walks in the Cayley digraph on `ℤ_{2n}`, which is
/// `2n · binom(w, u)`.
pub fn cayley_walk_count(w: &Word, u: &Word) -> Result<BigUint> {
    require_binary(w)?;
    require_binary(u)?;
    Ok(BigUint::from(2 * w.len()) * count_occurrences(w.letters(), u.letters()))
}

/// Checks the inverse Cauchy–Schwarz statement on one instance, returning
/// `(hypothesis, conclusion)`.
pub fn inverse_cs_check(g: &[f64], h: &[f64], eps: f64) -> Result<(bool, bool)> {
    if g.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: g.len(),
            right: h.len(),
        });
    }
    if g.is_empty() {
        return Err(Error::EmptyWord);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("ε must lie in (0,1)"));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let hh = dot(h, h);
    if hh == 0.0 {
        return Err(invalid("h must be nonzero"));
    }
    let n = g.len() as f64;
    let gh = dot(g, h);
    let gg = dot(g, g);
    let hypothesis = gh * gh >= gg * hh - eps * n.powi(3) * hh;
    let ratio = gh / hh;
    let radius = eps.cbrt() * n;
    let outliers = g
        .iter()
        .zip(h)
        .filter(|(gi, hi)| (*gi - ratio * *hi).abs() > radius)
        .count();
    Ok((hypothesis, outliers as f64 <= radius))
}

/// Bundles every diagnostic for one word.
pub fn quasirandomness_report(w: &Word, kmax: usize) -> Result<QuasirandomnessDiagnostics> {
    if kmax == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let uniformity = best_uniformity(w)?;
    let d = uniformity.reference_d.clone();
    let patterns: Vec<Word> = Word::all(w.alphabet(), 3).collect();
    let residuals = if w.len() >= 3 {
        let total = Rational::from_integer(binomial(w.len(), 3));
        patterns
            .iter()
            .map(|u| {
                let t = Rational::from_integer(count_occurrences(w.letters(), u.letters()).into())
                    / &total;
                (u.clone(), (t - product_density(u, &d)).abs())
            })
            .collect()
    } else {
        Vec::new()
    };
    let exponential_sums = (1..=kmax as i64)
        .map(|k| exponential_sum(w, k).map(|z| (k, z)))
        .collect::<Result<_>>()?;
    let cayley_counts = patterns
        .iter()
        .map(|u| cayley_walk_count(w, u).map(|c| (u.clone(), c)))
        .collect::<Result<_>>()?;
    Ok(QuasirandomnessDiagnostics {
        uniformity,
        residuals,
        exponential_sums,
        cayley_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn brute_discrepancy(w: &Word, d: &Rational) -> Rational {
        let n = w.len();
        let mut best = Rational::zero();
        for a in 1..=n {
            for b in a..=n {
                let ones = w.letters()[a - 1..b].iter().filter(|&&l| l == 1).count();
                let v = (Rational::from_integer(ones.into())
                    - d * Rational::from_integer((b - a + 1).into()))
                .abs();
                best = best.max(v);
            }
        }
        best
    }

    /// Exact minimum over every rational with denominator at most n, which
    /// contains every breakpoint.
    fn brute_best(w: &Word) -> Rational {
        let n = w.len() as i64;
        let mut best: Option<Rational> = None;
        for den in 1..=n {
            for num in 0..=den {
                let v = brute_discrepancy(w, &q(num, den));
                best = Some(best.map_or(v.clone(), |b: Rational| b.min(v)));
            }
        }
        best.unwrap() / Rational::from_integer(n.into())
    }

    fn blocks(n: usize) -> Word {
        let s = format!(
            "{}{}{}",
            "0".repeat(n / 4),
            "1".repeat(n / 2),
            "0".repeat(n / 4)
        );
        Word::bits(&s)
    }

    #[test]
    fn discrepancy_examples() {
        for n in [2usize, 8, 20] {
            let w = Word::bits(&"01".repeat(n / 2));
            let (v, _) = discrepancy(&w, &q(1, 2)).unwrap();
            assert_eq!(v, q(1, 2));
            assert_eq!(v, brute_discrepancy(&w, &q(1, 2)));
        }
        for n in [8usize, 16, 20] {
            let w = blocks(n);
            let (v, iv) = discrepancy(&w, &q(1, 2)).unwrap();
            assert_eq!(v, q(n as i64, 4));
            assert_eq!(v, brute_discrepancy(&w, &q(1, 2)));
            assert_eq!(iv.len(), n / 2);
        }
        assert_eq!(
            discrepancy(&Word::bits("1111"), &q(1, 1)).unwrap().0,
            q(0, 1)
        );
        assert!(discrepancy(&Word::bits("1"), &q(3, 2)).is_err());
    }

    #[test]
    fn best_uniformity_examples() {
        let r = best_uniformity(&Word::bits("11111")).unwrap();
        assert_eq!((r.d, r.discrepancy), (q(1, 1), q(0, 1)));
        for n in [4usize, 10, 20] {
            let w = Word::bits(&"01".repeat(n / 2));
            let r = best_uniformity(&w).unwrap();
            assert!(r.discrepancy <= q(1, 2 * n as i64));
            assert_eq!(r.discrepancy, brute_best(&w));
        }
        assert_eq!(best_uniformity(&Word::bits("")), Err(Error::EmptyWord));
    }

    #[test]
    fn minimizer_residual_examples() {
        let n = 1000;
        let w = Word::bits(&"01".repeat(n / 2));
        let r = minimizer_residuals(&w, &q(1, 2)).unwrap();
        let max = r.iter().map(|(_, v)| v.clone()).max().unwrap();
        assert!(max <= q(5, 2 * n as i64));

        let ones = Word::bits(&"1".repeat(30));
        let r = minimizer_residuals(&ones, &q(1, 1)).unwrap();
        assert_eq!(r[7].1, q(0, 1));

        let alt = minimizer_residuals(&Word::bits(&"01".repeat(20)), &q(1, 2)).unwrap();
        let blk = minimizer_residuals(&blocks(40), &q(1, 2)).unwrap();
        let idx = 0b110;
        assert!(blk[idx].1 >= &alt[idx].1 * Rational::from_integer(5.into()));
        assert!(minimizer_residuals(&Word::bits("01"), &q(1, 2)).is_err());
    }

    fn direct_exp_sum(w: &Word, k: i64) -> Complex64 {
        let n = w.len() as f64;
        let mut z = Complex64::new(0.0, 0.0);
        for (j, &l) in w.letters().iter().enumerate() {
            if l == 1 {
                z += Complex64::from_polar(
                    1.0,
                    std::f64::consts::TAU * k as f64 * (j + 1) as f64 / n,
                );
            }
        }
        z / n
    }

    #[test]
    fn exponential_sum_examples() {
        assert!(
            exponential_sum(&Word::bits(&"1".repeat(100)), 1)
                .unwrap()
                .norm()
                < 1e-12
        );
        assert_eq!(exponential_sum(&Word::bits("0000"), 3).unwrap().norm(), 0.0);
        let w = Word::bits("01010101");
        let z = exponential_sum(&w, 4).unwrap();
        assert!((z.norm() - 0.5).abs() < 1e-12);
        assert!((z - direct_exp_sum(&w, 4)).norm() < 1e-12);
        assert!(exponential_sum(&w, 0).is_err());
        let long = Word::bits(&"0110100110010110".repeat(625));
        for k in [1, 7, -3, 5000] {
            assert!((exponential_sum(&long, k).unwrap() - direct_exp_sum(&long, k)).norm() < 1e-9);
        }
    }

    #[test]
    fn equidistribution_examples() {
        let c = CircleFunction::constant(q(3, 7));
        assert_eq!(
            equidistribution_error(&Word::bits("0110111"), &c).unwrap(),
            q(0, 1)
        );
        assert_eq!(
            equidistribution_error(&Word::bits("0000"), &CircleFunction::tent()).unwrap(),
            q(0, 1)
        );
        let n = 1000;
        let w = Word::bits(&"01".repeat(n / 2));
        let tent = CircleFunction::tent();
        let err = equidistribution_error(&w, &tent).unwrap();
        // direct evaluation oracle in floating point
        let direct: f64 = (1..=n)
            .filter(|j| j % 2 == 0)
            .map(|j| {
                let x = j as f64 / n as f64;
                x.min(1.0 - x)
            })
            .sum::<f64>()
            / n as f64
            - 0.5 * 0.25;
        assert!((crate::scalar::ratio_to_f64(&err) - direct.abs()).abs() < 1e-12);
        assert!(err <= q(2, 1) * tent.lipschitz() / Rational::from_integer(n.into()));
        let bad = CircleFunction::new(vec![(q(0, 1), q(0, 1)), (q(1, 1), q(1, 1))]);
        assert!(bad.is_err());
    }

    /// Enumerates induced walks directly on `ℤ_{2n}`.
    fn brute_walks(w: &Word, u: &Word) -> u64 {
        let n = w.len();
        let m = 2 * n;
        fn go(w: &[u8], u: &[u8], m: usize, v: usize, k: usize, last: usize) -> u64 {
            if k == u.len() {
                return 1;
            }
            let mut total = 0;
            for next in 0..m {
                let step = (next + m - v) % m;
                if step <= last || step > w.len() {
                    continue;
                }
                let edge = w[step - 1] == 1;
                if edge == (u[k] == 1) {
                    total += go(w, u, m, next, k + 1, step);
                }
            }
            total
        }
        (0..m)
            .map(|v| go(w.letters(), u.letters(), m, v, 0, 0))
            .sum()
    }

    #[test]
    fn cayley_counts() {
        assert_eq!(
            cayley_walk_count(&Word::bits("1"), &Word::bits("1")).unwrap(),
            BigUint::from(2u32)
        );
        assert_eq!(
            cayley_walk_count(&Word::bits("0101"), &Word::bits("11")).unwrap(),
            BigUint::from(8u32)
        );
        for w in ["0101", "0110100", "1110010110"] {
            let w = Word::bits(w);
            for u in Word::all(w.alphabet(), 3) {
                assert_eq!(
                    cayley_walk_count(&w, &u).unwrap(),
                    BigUint::from(brute_walks(&w, &u))
                );
            }
        }
    }

    #[test]
    fn inverse_cs_examples() {
        let h: Vec<f64> = (1..=10).map(f64::from).collect();
        let g: Vec<f64> = h.iter().map(|x| 3.0 * x).collect();
        assert_eq!(inverse_cs_check(&g, &h, 0.1).unwrap(), (true, true));
        let h = vec![1.0, 0.0];
        let g = vec![0.0, 5.0];
        assert!(!inverse_cs_check(&g, &h, 0.1).unwrap().0);
        assert!(inverse_cs_check(&[1.0], &[0.0], 0.1).is_err());
    }

    #[test]
    fn report_examples() {
        let r = quasirandomness_report(&Word::bits(&"01".repeat(50)), 4).unwrap();
        assert!(r.uniformity.discrepancy <= q(1, 100));
        assert!(r
            .exponential_sums
            .iter()
            .take(3)
            .all(|(_, z)| z.norm() < 1e-9));
        let r = quasirandomness_report(
            &Word::bits(&format!("{}{}", "0".repeat(50), "1".repeat(50))),
            2,
        )
        .unwrap();
        assert_eq!(r.uniformity.reference_discrepancy, q(1, 4));
        let r = quasirandomness_report(&Word::bits("111111"), 1).unwrap();
        assert!(r.residuals.iter().all(|(_, v)| v.is_zero()));
        for (u, c) in &r.cayley_counts {
            assert_eq!(
                c,
                &(BigUint::from(12u32) * count_occurrences(&[1; 6], u.letters()))
            );
        }
    }

    proptest! {
        #[test]
        fn prefix_discrepancy_matches_brute(w in prop::collection::vec(0u8..2, 1..=50), num in 0i64..=12) {
            let w = Word::from_bits(&w).unwrap();
            let d = q(num, 12);
            let (v, iv) = discrepancy(&w, &d).unwrap();
            prop_assert_eq!(&v, &brute_discrepancy(&w, &d));
            let prefix = prefix_ones(&w);
            prop_assert_eq!(interval_excess(&prefix, &d, iv.start - 1, iv.end), v);
        }

        #[test]
        fn best_uniformity_is_exact(w in prop::collection::vec(0u8..2, 1..=12)) {
            let w = Word::from_bits(&w).unwrap();
            let r = best_uniformity(&w).unwrap();
            prop_assert_eq!(&r.discrepancy, &brute_best(&w));
            prop_assert!(r.discrepancy <= r.reference_discrepancy);
            prop_assert!(r.discrepancy >= Rational::zero() && r.discrepancy <= Rational::one());
        }

        #[test]
        fn exp_sum_bounded_by_density(w in prop::collection::vec(0u8..2, 1..=200), k in 1i64..50) {
            let w = Word::from_bits(&w).unwrap();
            let z = exponential_sum(&w, k).unwrap();
            prop_assert!(z.norm() <= w.ones() as f64 / w.len() as f64 + 1e-12);
        }

        #[test]
        fn forward_counting_bound(w in prop::collection::vec(0u8..2, 20..=60), len in 1usize..=5) {
            let w = Word::from_bits(&w).unwrap();
            let r = best_uniformity(&w).unwrap();
            let five_eps = Rational::from_integer(5.into()) * &r.discrepancy;
            for (_, res) in counting_residuals(&w, &r.d, len).unwrap() {
                prop_assert!(res <= five_eps.clone());
            }
        }

        #[test]
        fn inverse_cs_never_violated(
            g in prop::collection::vec(-50.0f64..50.0, 1..=30),
            h0 in prop::collection::vec(-50.0f64..50.0, 30),
            eps in 0.001f64..0.999,
        ) {
            let h = &h0[..g.len()];
            prop_assume!(h.iter().any(|x| *x != 0.0));
            let (hyp, concl) = inverse_cs_check(&g, h, eps).unwrap();
            prop_assert!(!hyp || concl);
        }
    }
}
