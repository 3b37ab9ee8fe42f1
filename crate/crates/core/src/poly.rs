//! Dense univariate polynomials and real-root isolation.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::{common_denominator, Scalar};

/// Coefficients are stored in ascending degree with no trailing zeros; the
/// zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn monomial(c: T, degree: usize) -> Self {
        let mut coeffs = vec![T::zero(); degree];
        coeffs.push(c);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.as_f64())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.clone() * T::from_usize(k))
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(T::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.clone() / T::from_usize(k + 1));
        }
        Self::new(coeffs)
    }

    /// `∫_a^b p(x) dx`.
    pub fn integrate(&self, a: &T, b: &T) -> T {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `p(a + b t)` as a polynomial in `t`.
    pub fn compose_linear(&self, a: &T, b: &T) -> Self {
        let lin = Self::new(vec![a.clone(), b.clone()]);
        self.coeffs.iter().rev().fold(Self::zero(), |acc, c| {
            &(&acc * &lin) + &Self::constant(c.clone())
        })
    }

    /// Polynomial long division; `divisor` must be nonzero.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        let lead = divisor.leading();
        if rem.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![T::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let c = rem[k + dd].clone() / lead.clone();
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] = rem[k + j].clone() - c.clone() * d.clone();
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let lead = self.leading();
        Self::new(
            self.coeffs
                .iter()
                .map(|c| c.clone() / lead.clone())
                .collect(),
        )
    }

    /// Monic gcd. Only meaningful for exact scalars.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// The square-free part `p / gcd(p, p')` for exact scalars; floats are
    /// returned unchanged.
    pub fn square_free(&self) -> Self {
        if !T::EXACT || self.degree() < 2 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }

    /// Coefficients in the Bernstein basis of degree `deg(p)` on `[lo, hi]`.
    pub fn bernstein_coeffs(&self, lo: &T, hi: &T) -> Vec<T> {
        let local = self.compose_linear(lo, &(hi.clone() - lo.clone()));
        let n = self.degree();
        let c: Vec<T> = (0..=n).map(|k| local.coeff(k)).collect();
        (0..=n)
            .map(|i| {
                (0..=i).fold(T::zero(), |acc, k| {
                    acc + c[k].clone() * T::from_bigint(&binomial(i, k))
                        / T::from_bigint(&binomial(n, k))
                })
            })
            .collect()
    }

    /// Real roots strictly inside `(a, b)`, each either exact or bracketed.
    pub fn roots_in(&self, a: &T, b: &T) -> Vec<Root<T>> {
        if self.degree() == 0 || a >= b {
            return Vec::new();
        }
        if self.degree() == 1 {
            let r = -self.coeff(0) / self.coeff(1);
            return if &r > a && &r < b {
                vec![Root::Exact(r)]
            } else {
                Vec::new()
            };
        }
        let q = self.square_free();
        let resolution = T::root_resolution(q.coeffs());
        let mut roots = Vec::new();
        let mut stack = vec![(a.clone(), b.clone(), 0usize)];
        while let Some((lo, hi, depth)) = stack.pop() {
            let vars = sign_variations(&q.bernstein_coeffs(&lo, &hi));
            if vars == 0 {
                continue;
            }
            let (flo, fhi) = (q.eval(&lo), q.eval(&hi));
            if vars == 1 && !flo.is_zero() && !fhi.is_zero() {
                roots.push(refine_root(&q, lo, hi, flo, &resolution));
                continue;
            }
            let mid = (lo.clone() + hi.clone()) * T::half();
            if depth > MAX_ISOLATION_DEPTH || mid <= lo || mid >= hi {
                roots.push(Root::Bracket(lo, hi));
                continue;
            }
            if q.eval(&mid).is_zero() {
                roots.push(Root::Exact(mid.clone()));
            }
            stack.push((mid.clone(), hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
        roots.sort_by(|x, y| x.approx().partial_cmp(&y.approx()).unwrap());
        roots
    }
}

const MAX_ISOLATION_DEPTH: usize = 200;
const MAX_REFINE_STEPS: usize = 4000;

/// A located real root.
#[derive(Clone, Debug, PartialEq)]
pub enum Root<T> {
    Exact(T),
    /// The root lies in the (tiny) open interval.
    Bracket(T, T),
}

impl<T: Scalar> Root<T> {
    pub fn approx(&self) -> T {
        match self {
            Root::Exact(r) => r.clone(),
            Root::Bracket(lo, hi) => (lo.clone() + hi.clone()) * T::half(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Root::Exact(_))
    }
}

fn refine_root<T: Scalar>(
    q: &Polynomial<T>,
    mut lo: T,
    mut hi: T,
    mut flo: T,
    resolution: &Option<T>,
) -> Root<T> {
    let tolerance = resolution.clone();
    for step in 0..MAX_REFINE_STEPS {
        let mid = (lo.clone() + hi.clone()) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = q.eval(&mid);
        if fm.is_zero() {
            return Root::Exact(mid);
        }
        if fm.is_positive() == flo.is_positive() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        let width = hi.clone() - lo.clone();
        let done = match &tolerance {
            Some(tol) => width < *tol,
            None => false,
        };
        if done || (step % 16 == 15) {
            if let Some(s) = T::simplest_between(&lo, &hi) {
                if s > lo && s < hi && q.eval(&s).is_zero() {
                    return Root::Exact(s);
                }
            }
        }
        if done {
            break;
        }
    }
    Root::Bracket(lo, hi)
}

fn sign_variations<T: Scalar>(coeffs: &[T]) -> usize {
    let mut last: Option<bool> = None;
    let mut count = 0;
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        let positive = c.is_positive();
        if last.is_some_and(|p| p != positive) {
            count += 1;
        }
        last = Some(positive);
    }
    count
}

/// Exact binomial coefficient.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Root resolution used by exact isolation: below `1 / (2 L²)`, with `L` the
/// leading coefficient of the primitive integer multiple, the simplest
/// rational in a bracket is the only candidate rational root.
pub(crate) fn rational_root_resolution(coeffs: &[BigRational]) -> BigRational {
    let den = common_denominator(coeffs.iter());
    let ints: Vec<BigInt> = coeffs
        .iter()
        .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
        .collect();
    let content = ints
        .iter()
        .fold(BigInt::zero(), |g, c| num_integer::Integer::gcd(&g, c));
    let lead = ints.last().cloned().unwrap_or_else(BigInt::one).abs();
    let lead = if content.is_zero() {
        lead
    } else {
        lead / content
    };
    let floor = BigRational::new(BigInt::one(), BigInt::one() << 100usize);
    let bound = BigRational::new(BigInt::one(), BigInt::from(2) * &lead * &lead);
    if bound < floor {
        bound
    } else {
        floor
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}
