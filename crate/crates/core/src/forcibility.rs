//! Moments of cumulative distributions from word densities, and density
//! certificates that force piecewise-polynomial limits.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::{cdf, d1_fn, limit_density_table, LimitFn};
use crate::poly::{binomial, factorial, Polynomial};
use crate::scalar::{format_rational, Scalar};
use crate::words::{Alphabet, Word};
use crate::Rational;

/// Default cap on the pattern length `i + j + 1`.
pub const DEFAULT_PATTERN_CAP: usize = 12;

/// Densities of a limit function, keyed by pattern.
pub type LimitDensities = HashMap<Word, Rational>;

/// `∫ x^i F(x)^j dx` written as a combination of pattern densities.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentCombination {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<(Word, Rational)>,
}

impl MomentCombination {
    pub fn evaluate(&self, densities: &LimitDensities) -> Result<Rational> {
        evaluate_terms(&Rational::zero(), &self.terms, densities)
    }
}

fn evaluate_terms(
    constant: &Rational,
    terms: &[(Word, Rational)],
    densities: &LimitDensities,
) -> Result<Rational> {
    let missing: Vec<String> = terms
        .iter()
        .filter(|(u, _)| !densities.contains_key(u))
        .map(|(u, _)| u.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPatterns(missing));
    }
    Ok(terms
        .iter()
        .fold(constant.clone(), |acc, (u, c)| acc + c * &densities[u]))
}

/// Terms `(i! j! / (i+j+1)!) binom(u_1+…+u_{i+j}, j) t(u)` over patterns of
/// length `i + j + 1` whose first `i + j` letters hold at least `j` ones.
pub fn moment_words(i: usize, j: usize, cap: usize) -> Result<MomentCombination> {
    let len = i + j + 1;
    if len > cap {
        return Err(Error::CapExceeded {
            what: "moment pattern length",
            count: len as u128,
            cap: cap as u128,
        });
    }
    let scale = Rational::new(factorial(i) * factorial(j), factorial(len));
    let terms = Word::all(&Alphabet::binary(), len)
        .filter_map(|u| {
            let s = u.letters()[..i + j].iter().filter(|&&l| l == 1).count();
            (s >= j).then(|| {
                let c = &scale * Rational::from_integer(binomial(s, j));
                (u, c)
            })
        })
        .collect();
    Ok(MomentCombination { i, j, terms })
}

/// `∫_0^1 x^i F(x)^j dx` with `F = ∫_0^x f`, integrated piece by piece.
pub fn moment_direct<T: Scalar>(i: usize, j: usize, f: &LimitFn<T>) -> T {
    let big_f = cdf(f);
    let xi = Polynomial::monomial(T::one(), i);
    big_f
        .pieces()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, p)| {
            let b = big_f.breakpoints();
            acc + (&xi * &p.pow(j)).integrate(&b[k], &b[k + 1])
        })
}

/// `Σ coefficient · t(u)` for the combination of [`moment_words`].
pub fn moment_from_densities(i: usize, j: usize, densities: &LimitDensities) -> Result<Rational> {
    moment_words(i, j, usize::MAX)?.evaluate(densities)
}

/// Every density `t(u, f)` with `1 ≤ |u| ≤ max_len`.
pub fn limit_densities(f: &LimitFn<Rational>, max_len: usize) -> LimitDensities {
    let v = f.to_vector();
    (1..=max_len)
        .flat_map(|len| limit_density_table(&v, len))
        .collect()
}

/// A list of words whose densities force `f`, together with the
/// nonnegative combination `residual(h) = ∫ P(x, H(x)) dx` that vanishes on
/// `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcibilityCertificate {
    pub target: LimitFn<Rational>,
    /// Distinct branch antiderivatives `Q_i`.
    pub branches: Vec<Polynomial<Rational>>,
    /// Coefficients `c_ab` of `x^a y^b` in `P(x, y) = Π (y − Q_i(x))²`.
    pub p_coeffs: Vec<((usize, usize), Rational)>,
    pub words: Vec<Word>,
    pub constant: Rational,
    pub terms: Vec<(Word, Rational)>,
    /// `(k+1)^{2k²(1+max deg P_i)}` for `k` pieces.
    pub word_bound: BigUint,
}

/// Bivariate polynomial as coefficients of `y^b`, each a polynomial in `x`.
type Bivariate = Vec<Polynomial<Rational>>;

fn bivariate_mul(a: &Bivariate, b: &Bivariate) -> Bivariate {
    let mut out = vec![Polynomial::zero(); a.len() + b.len() - 1];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(p * q);
        }
    }
    out
}

/// Builds the certificate for a piecewise-polynomial `f`.
pub fn forcibility_certificate(
    f: &LimitFn<Rational>,
    cap: usize,
) -> Result<ForcibilityCertificate> {
    let f = f.canonical();
    let big_f = cdf(&f);
    let mut branches: Vec<Polynomial<Rational>> = Vec::new();
    for q in big_f.pieces() {
        if !branches.contains(q) {
            branches.push(q.clone());
        }
    }
    let mut p: Bivariate = vec![Polynomial::one()];
    for q in &branches {
        // (y − Q)² = Q² − 2Q y + y²
        let factor = vec![
            q * q,
            q.scale(&Rational::from_integer((-2).into())),
            Polynomial::one(),
        ];
        p = bivariate_mul(&p, &factor);
    }
    let mut p_coeffs = Vec::new();
    let mut constant = Rational::zero();
    let mut aggregated: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
    for (b, px) in p.iter().enumerate() {
        for (a, c) in px.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            p_coeffs.push(((a, b), c.clone()));
            if b == 0 {
                constant += c / Rational::from_integer((a + 1).into());
                continue;
            }
            for (u, coef) in moment_words(a, b, cap)?.terms {
                *aggregated
                    .entry(u.letters().to_vec())
                    .or_insert_with(Rational::zero) += c * coef;
            }
        }
    }
    let terms: Vec<(Word, Rational)> = aggregated
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(letters, c)| (Word::from_bits(&letters).expect("binary"), c))
        .collect();
    let mut words: Vec<Word> = terms.iter().map(|(u, _)| u.clone()).collect();
    words.sort_by(|x, y| {
        x.len()
            .cmp(&y.len())
            .then_with(|| x.letters().cmp(y.letters()))
    });
    let k = f.pieces().len();
    let max_deg = f.pieces().iter().map(Polynomial::degree).max().unwrap_or(0);
    let exponent = 2 * k * k * (1 + max_deg);
    let word_bound = num_traits::pow(BigUint::from(k + 1), exponent);
    Ok(ForcibilityCertificate {
        target: f,
        branches,
        p_coeffs,
        words,
        constant,
        terms,
        word_bound,
    })
}

impl ForcibilityCertificate {
    pub fn max_word_len(&self) -> usize {
        self.words.iter().map(Word::len).max().unwrap_or(0)
    }

    /// `constant + Σ coefficient · t(u)`.
    pub fn residual(&self, densities: &LimitDensities) -> Result<Rational> {
        evaluate_terms(&self.constant, &self.terms, densities)
    }

    pub fn residual_for(&self, h: &LimitFn<Rational>) -> Rational {
        self.residual(&limit_densities(h, self.max_word_len()))
            .expect("all certificate densities computed")
    }

    /// Serializable summary with rationals as `"n/d"` strings.
    pub fn summary(&self, residual: Option<&Rational>) -> CertificateSummary {
        CertificateSummary {
            words: self.words.iter().map(Word::to_string).collect(),
            coefficients: self
                .terms
                .iter()
                .map(|(u, c)| (u.to_string(), format_rational(c)))
                .collect(),
            constant: format_rational(&self.constant),
            branches: self
                .branches
                .iter()
                .map(|q| q.coeffs().iter().map(format_rational).collect())
                .collect(),
            word_bound: self.word_bound.to_string(),
            residual: residual.map(format_rational),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSummary {
    pub words: Vec<String>,
    pub coefficients: Vec<(String, String)>,
    pub constant: String,
    pub branches: Vec<Vec<String>>,
    pub word_bound: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
}

/// Outcome of comparing a candidate `h` against the certificate of `f`.
#[derive(Clone, Debug, PartialEq)]
pub enum ForcingVerdict {
    /// Some certificate word has different densities.
    Distinguished {
        word: Word,
        target: Rational,
        candidate: Rational,
    },
    /// All certificate densities agree; `d1` shows whether `h = f` a.e.
    Indistinguishable { d1: Rational, exact: bool },
}

pub fn check_forced(
    f: &LimitFn<Rational>,
    h: &LimitFn<Rational>,
    cert: &ForcibilityCertificate,
) -> ForcingVerdict {
    let len = cert.max_word_len();
    let df = limit_densities(f, len);
    let dh = limit_densities(h, len);
    for u in &cert.words {
        if df[u] != dh[u] {
            return ForcingVerdict::Distinguished {
                word: u.clone(),
                target: df[u].clone(),
                candidate: dh[u].clone(),
            };
        }
    }
    let d = d1_fn(f, h);
    ForcingVerdict::Indistinguishable {
        d1: d.value,
        exact: d.exact,
    }
}

/// `min_i |H(x) − Q_i(x)|`, the distance of `H` from the nearest branch.
pub fn branch_gap(cert: &ForcibilityCertificate, h: &LimitFn<Rational>, x: &Rational) -> Rational {
    let hx = cdf(h).eval(x);
    cert.branches
        .iter()
        .map(|q| (&hx - q.eval(x)).abs())
        .min()
        .unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::t_density;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn w(s: &str) -> Word {
        Word::bits(s)
    }

    #[test]
    fn moment_word_examples() {
        let m = moment_words(0, 1, DEFAULT_PATTERN_CAP).unwrap();
        assert_eq!(m.terms, vec![(w("10"), q(1, 2)), (w("11"), q(1, 2))]);
        let m = moment_words(1, 0, DEFAULT_PATTERN_CAP).unwrap();
        assert_eq!(m.terms.len(), 4);
        assert!(m.terms.iter().all(|(_, c)| c == &q(1, 2)));
        let m = moment_words(0, 2, DEFAULT_PATTERN_CAP).unwrap();
        assert_eq!(m.terms, vec![(w("110"), q(1, 3)), (w("111"), q(1, 3))]);
        assert!(moment_words(6, 6, DEFAULT_PATTERN_CAP).is_err());
        // the free last letter carries equal coefficients
        let m = moment_words(2, 2, DEFAULT_PATTERN_CAP).unwrap();
        for pair in m.terms.chunks(2) {
            assert_eq!(pair[0].1, pair[1].1);
            assert_eq!(&pair[0].0.letters()[..4], &pair[1].0.letters()[..4]);
        }
    }

    #[test]
    fn moment_examples() {
        let d = q(3, 5);
        let f = LimitFn::constant(d.clone()).unwrap();
        let dens = limit_densities(&f, 4);
        assert_eq!(moment_direct(0, 1, &f), &d / q(2, 1));
        assert_eq!(moment_from_densities(0, 1, &dens).unwrap(), &d / q(2, 1));
        assert_eq!(
            moment_from_densities(0, 2, &dens).unwrap(),
            &d * &d / q(3, 1)
        );
        assert_eq!(moment_direct(1, 1, &f), &d / q(3, 1));
        let h = LimitFn::indicator_prefix(q(1, 2)).unwrap();
        assert_eq!(moment_direct(0, 1, &h), q(3, 8));

        let zero = LimitFn::constant(q(0, 1)).unwrap();
        let one = LimitFn::constant(q(1, 1)).unwrap();
        let (dz, d1) = (limit_densities(&zero, 5), limit_densities(&one, 5));
        for i in 0..=2 {
            for j in 1..=2 {
                assert_eq!(moment_from_densities(i, j, &dz).unwrap(), q(0, 1));
                assert_eq!(
                    moment_from_densities(i, j, &d1).unwrap(),
                    q(1, (i + j + 1) as i64)
                );
            }
        }
        let err = moment_from_densities(0, 2, &limit_densities(&one, 2)).unwrap_err();
        assert!(err.to_string().contains("110"));
    }

    #[test]
    fn constant_certificates() {
        let a = q(1, 2);
        let f = LimitFn::constant(a.clone()).unwrap();
        let cert = forcibility_certificate(&f, DEFAULT_PATTERN_CAP).unwrap();
        assert!(cert.words.iter().all(|u| u.len() <= 3));
        assert_eq!(cert.residual_for(&f), q(0, 1));
        let h = LimitFn::indicator_prefix(a.clone()).unwrap();
        assert!(cert.residual_for(&h) > q(0, 1));
        assert_eq!(
            t_density(&w("110"), &h).unwrap(),
            q(3, 1) * &a * &a * (q(1, 1) - &a)
        );
        assert!(cert.words.len() as u64 <= 4u64.pow(2));
        match check_forced(&f, &h, &cert) {
            ForcingVerdict::Distinguished { word, .. } => assert_eq!(word.len(), 3),
            other => panic!("expected distinction, got {other:?}"),
        }
        let refined = f.refine(&[q(0, 1), q(1, 3), q(1, 1)]);
        assert_eq!(
            check_forced(&f, &refined, &cert),
            ForcingVerdict::Indistinguishable {
                d1: q(0, 1),
                exact: true
            }
        );
    }

    #[test]
    fn polynomial_certificates() {
        let id = LimitFn::from_parts(vec![q(0, 1), q(1, 1)], vec![Polynomial::x()]).unwrap();
        let cert = forcibility_certificate(&id, DEFAULT_PATTERN_CAP).unwrap();
        assert_eq!(cert.residual_for(&id), q(0, 1));
        assert!(BigUint::from(cert.words.len()) <= cert.word_bound);
        let two = LimitFn::from_parts(
            vec![q(0, 1), q(1, 3), q(1, 1)],
            vec![Polynomial::x(), Polynomial::new(vec![q(1, 1), q(-1, 2)])],
        )
        .unwrap();
        let cert = forcibility_certificate(&two, DEFAULT_PATTERN_CAP).unwrap();
        assert_eq!(cert.residual_for(&two), q(0, 1));
        assert_eq!(cert.branches.len(), 2);
    }

    fn arb_step() -> impl Strategy<Value = LimitFn<Rational>> {
        (any::<u64>(), 1usize..=8).prop_map(|(seed, steps)| {
            LimitFn::random_step(&mut ChaCha8Rng::seed_from_u64(seed), steps, 16)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn moment_identity(f in arb_step()) {
            let dens = limit_densities(&f, 6);
            for i in 0..=5usize {
                for j in 0..=5 - i {
                    prop_assert_eq!(moment_direct(i, j, &f), moment_from_densities(i, j, &dens).unwrap());
                }
            }
        }

        #[test]
        fn residual_nonnegative_and_zero_only_on_branches(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = LimitFn::random_step(&mut rng, 2, 4);
            let cert = forcibility_certificate(&f, DEFAULT_PATTERN_CAP).unwrap();
            let h = LimitFn::random_step(&mut rng, 3, 4);
            let r = cert.residual_for(&h);
            prop_assert!(r >= Rational::zero());
            if r.is_zero() {
                for k in 0..=64 {
                    prop_assert!(branch_gap(&cert, &h, &q(k, 64)).as_f64() <= 1e-9);
                }
            }
        }
    }
}
