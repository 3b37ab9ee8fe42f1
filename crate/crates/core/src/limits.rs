//! Piecewise-polynomial limit functions and their density calculus.

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::poly::{binomial, factorial, Polynomial, Root};
use crate::scalar::Scalar;
use crate::words::{Alphabet, Word};
use crate::Rational;

/// A function on `[0,1]` that is polynomial (in the absolute coordinate `x`)
/// on each interval `[b_{j-1}, b_j)`. No range restriction.
#[derive(Clone, Debug, PartialEq)]
pub struct Piecewise<T> {
    breaks: Vec<T>,
    pieces: Vec<Polynomial<T>>,
}

impl<T: Scalar> Piecewise<T> {
    pub fn new(breaks: Vec<T>, pieces: Vec<Polynomial<T>>) -> Result<Self> {
        if breaks.len() < 2 || pieces.len() + 1 != breaks.len() {
            return Err(Error::InvalidBreakpoints(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                pieces.len()
            )));
        }
        if !breaks[0].is_zero() || !breaks[breaks.len() - 1].is_one() {
            return Err(Error::InvalidBreakpoints(
                "must start at 0 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|b| b[0] >= b[1]) {
            return Err(Error::InvalidBreakpoints(
                "must be strictly increasing".into(),
            ));
        }
        Ok(Self { breaks, pieces })
    }

    pub fn constant(c: T) -> Self {
        Self {
            breaks: vec![T::zero(), T::one()],
            pieces: vec![Polynomial::constant(c)],
        }
    }

    /// Step function with the given breakpoints and piece values.
    pub fn step(breaks: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::new(
            breaks,
            values.into_iter().map(Polynomial::constant).collect(),
        )
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Polynomial<T>] {
        &self.pieces
    }

    pub fn max_degree(&self) -> usize {
        self.pieces
            .iter()
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn is_step(&self) -> bool {
        self.max_degree() == 0
    }

    /// Index of the piece whose half-open interval holds `x`; `x = 1`
    /// belongs to the last piece.
    pub fn piece_index(&self, x: &T) -> usize {
        self.breaks[1..self.breaks.len() - 1]
            .partition_point(|b| b <= x)
            .min(self.pieces.len() - 1)
    }

    pub fn eval(&self, x: &T) -> T {
        self.pieces[self.piece_index(x)].eval(x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let idx = self.breaks[1..self.breaks.len() - 1]
            .partition_point(|b| b.as_f64() <= x)
            .min(self.pieces.len() - 1);
        self.pieces[idx].eval_f64(x)
    }

    /// Re-expresses the function on a finer grid that contains every
    /// breakpoint of `self`.
    pub fn refine(&self, grid: &[T]) -> Self {
        let pieces = grid
            .windows(2)
            .map(|w| {
                let mid = (w[0].clone() + w[1].clone()) * T::half();
                self.pieces[self.piece_index(&mid)].clone()
            })
            .collect();
        Self {
            breaks: grid.to_vec(),
            pieces,
        }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        op: impl Fn(&Polynomial<T>, &Polynomial<T>) -> Polynomial<T>,
    ) -> Self {
        let grid = merge_grids(&self.breaks, &other.breaks);
        let (a, b) = (self.refine(&grid), other.refine(&grid));
        Self {
            breaks: grid,
            pieces: a
                .pieces
                .iter()
                .zip(&b.pieces)
                .map(|(p, q)| op(p, q))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |p, q| p + q)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |p, q| p - q)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |p, q| p * q)
    }

    pub fn map_pieces(&self, op: impl Fn(&Polynomial<T>) -> Polynomial<T>) -> Self {
        Self {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().map(op).collect(),
        }
    }

    /// Merges adjacent pieces carrying the same polynomial.
    pub fn canonical(&self) -> Self {
        let mut breaks = vec![self.breaks[0].clone()];
        let mut pieces: Vec<Polynomial<T>> = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            if pieces.last() == Some(p) {
                *breaks.last_mut().unwrap() = self.breaks[i + 1].clone();
            } else {
                pieces.push(p.clone());
                breaks.push(self.breaks[i + 1].clone());
            }
        }
        Self { breaks, pieces }
    }

    /// Continuous antiderivative `F(x) = ∫_0^x`.
    pub fn antiderivative(&self) -> Self {
        let mut acc = T::zero();
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let anti = p.antiderivative();
                let (a, b) = (&self.breaks[i], &self.breaks[i + 1]);
                let shift = acc.clone() - anti.eval(a);
                acc = acc.clone() + anti.eval(b) - anti.eval(a);
                &anti + &Polynomial::constant(shift)
            })
            .collect();
        Self {
            breaks: self.breaks.clone(),
            pieces,
        }
    }

    pub fn integral(&self) -> T {
        self.pieces
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, p)| {
                acc + p.integrate(&self.breaks[i], &self.breaks[i + 1])
            })
    }

    /// Roots of each piece strictly inside its interval.
    pub fn interior_roots(&self) -> Vec<Root<T>> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .flat_map(|(i, p)| p.roots_in(&self.breaks[i], &self.breaks[i + 1]))
            .collect()
    }

    pub fn map_scalar<S: Scalar>(&self, f: impl Fn(&T) -> S) -> Piecewise<S> {
        Piecewise {
            breaks: self.breaks.iter().map(&f).collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Polynomial::new(p.coeffs().iter().map(&f).collect()))
                .collect(),
        }
    }
}

/// Sorted union of two breakpoint lists.
pub fn merge_grids<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1].clone()
        } else {
            j += 1;
            b[j - 1].clone()
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Whether `p ≥ 0` on `[a, b]`: checked at the endpoints and between
/// consecutive isolated roots, where the sign is constant.
fn nonnegative_on<T: Scalar>(p: &Polynomial<T>, a: &T, b: &T, slack: &T) -> bool {
    if p.is_zero() {
        return true;
    }
    let mut points = vec![a.clone()];
    points.extend(p.roots_in(a, b).iter().map(Root::approx));
    points.push(b.clone());
    let floor = -slack.clone();
    let ok = |x: &T| p.eval(x) >= floor;
    ok(a)
        && ok(b)
        && points
            .windows(2)
            .all(|w| ok(&((w[0].clone() + w[1].clone()) * T::half())))
}

fn range_slack<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64_lossy(1e-9)
    }
}

/// A limit object: a piecewise polynomial with values in `[0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitFn<T> {
    inner: Piecewise<T>,
}

impl<T: Scalar> LimitFn<T> {
    pub fn new(inner: Piecewise<T>) -> Result<Self> {
        let slack = range_slack::<T>();
        for (i, p) in inner.pieces.iter().enumerate() {
            let (a, b) = (&inner.breaks[i], &inner.breaks[i + 1]);
            let upper = &Polynomial::one() - p;
            if !nonnegative_on(p, a, b, &slack) || !nonnegative_on(&upper, a, b, &slack) {
                return Err(Error::OutOfUnitRange { piece: i });
            }
        }
        Ok(Self { inner })
    }

    pub fn from_parts(breaks: Vec<T>, pieces: Vec<Polynomial<T>>) -> Result<Self> {
        Self::new(Piecewise::new(breaks, pieces)?)
    }

    pub fn constant(c: T) -> Result<Self> {
        Self::new(Piecewise::constant(c))
    }

    pub fn step(breaks: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::new(Piecewise::step(breaks, values)?)
    }

    /// `1_{[0,a)}`.
    pub fn indicator_prefix(a: T) -> Result<Self> {
        if a.is_zero() || a.is_one() {
            return Self::constant(if a.is_zero() { T::zero() } else { T::one() });
        }
        Self::step(vec![T::zero(), a, T::one()], vec![T::one(), T::zero()])
    }

    /// `f_w(x) = w_{⌈nx⌉}` for a binary word.
    pub fn from_word(w: &Word) -> Result<Self> {
        if !w.alphabet().is_binary() {
            return Err(invalid(
                "associated function needs a binary word; use LimitVector",
            ));
        }
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        let n = w.len();
        let breaks = (0..=n).map(|j| T::from_ratio(j as i64, n as i64)).collect();
        let values = w
            .letters()
            .iter()
            .map(|&l| T::from_usize(l as usize))
            .collect();
        Ok(Self::step(breaks, values)?.canonical())
    }

    pub fn piecewise(&self) -> &Piecewise<T> {
        &self.inner
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.inner.breaks
    }

    pub fn pieces(&self) -> &[Polynomial<T>] {
        &self.inner.pieces
    }

    pub fn eval(&self, x: &T) -> T {
        self.inner.eval(x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.inner.eval_f64(x)
    }

    /// `1 − f`.
    pub fn complement(&self) -> Self {
        Self {
            inner: self.inner.map_pieces(|p| &Polynomial::one() - p),
        }
    }

    pub fn canonical(&self) -> Self {
        Self {
            inner: self.inner.canonical(),
        }
    }

    pub fn refine(&self, grid: &[T]) -> Self {
        Self {
            inner: self.inner.refine(grid),
        }
    }

    pub fn is_step(&self) -> bool {
        self.inner.is_step()
    }

    pub fn map_scalar<S: Scalar>(&self, f: impl Fn(&T) -> S) -> LimitFn<S> {
        LimitFn {
            inner: self.inner.map_scalar(f),
        }
    }

    pub fn to_f64(&self) -> LimitFn<f64> {
        self.map_scalar(|c| c.as_f64())
    }

    /// `(1 − f, f)` as a two-letter vector.
    pub fn to_vector(&self) -> LimitVector<T> {
        LimitVector {
            alphabet: Alphabet::binary(),
            breaks: self.inner.breaks.clone(),
            components: vec![self.complement().inner.pieces, self.inner.pieces.clone()],
        }
    }
}

impl LimitFn<Rational> {
    /// A random step function with `steps` pieces whose breakpoints and
    /// values are multiples of `1/denominator`.
    pub fn random_step<R: Rng + ?Sized>(rng: &mut R, steps: usize, denominator: i64) -> Self {
        let steps = steps.clamp(1, denominator as usize);
        let interior =
            rand::seq::index::sample(rng, denominator as usize - 1, steps - 1).into_vec();
        let mut cuts: Vec<i64> = interior.into_iter().map(|c| c as i64 + 1).collect();
        cuts.sort_unstable();
        let mut breaks = vec![Rational::zero()];
        breaks.extend(
            cuts.into_iter()
                .map(|c| Rational::new(c.into(), denominator.into())),
        );
        breaks.push(Rational::one());
        let values = (0..steps)
            .map(|_| Rational::new(rng.gen_range(0..=denominator).into(), denominator.into()))
            .collect();
        Self::step(breaks, values).expect("valid random step function")
    }
}

/// A `k`-letter limit: component functions on a shared grid summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitVector<T> {
    alphabet: Alphabet,
    breaks: Vec<T>,
    components: Vec<Vec<Polynomial<T>>>,
}

impl<T: Scalar> LimitVector<T> {
    pub fn new(alphabet: Alphabet, components: Vec<Piecewise<T>>) -> Result<Self> {
        if components.len() != alphabet.size() {
            return Err(invalid(format!(
                "{} components for {} letters",
                components.len(),
                alphabet.size()
            )));
        }
        let grid = components
            .iter()
            .fold(vec![T::zero(), T::one()], |g, c| merge_grids(&g, &c.breaks));
        let components: Vec<Vec<Polynomial<T>>> =
            components.iter().map(|c| c.refine(&grid).pieces).collect();
        let slack = range_slack::<T>();
        for piece in 0..grid.len() - 1 {
            let (a, b) = (&grid[piece], &grid[piece + 1]);
            let mut total = Polynomial::zero();
            for c in &components {
                if !nonnegative_on(&c[piece], a, b, &slack) {
                    return Err(Error::OutOfUnitRange { piece });
                }
                total = &total + &c[piece];
            }
            let excess = &total - &Polynomial::one();
            let zero = if T::EXACT {
                excess.is_zero()
            } else {
                excess.coeffs().iter().all(|c| c.abs() <= slack)
            };
            if !zero {
                return Err(invalid(format!(
                    "components do not sum to 1 on piece {piece}"
                )));
            }
        }
        Ok(Self {
            alphabet,
            breaks: grid,
            components,
        })
    }

    /// Constant components `f^a ≡ p_a`.
    pub fn constant(alphabet: Alphabet, probs: Vec<T>) -> Result<Self> {
        Self::new(
            alphabet,
            probs.into_iter().map(Piecewise::constant).collect(),
        )
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        Self::constant(alphabet, vec![T::from_ratio(1, k as i64); k]).expect("uniform vector")
    }

    /// Indicator components of a `k`-letter word.
    pub fn from_word(w: &Word) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        let n = w.len();
        let breaks: Vec<T> = (0..=n).map(|j| T::from_ratio(j as i64, n as i64)).collect();
        let components = (0..w.alphabet().size() as u8)
            .map(|a| {
                w.letters()
                    .iter()
                    .map(|&l| Polynomial::constant(T::from_usize(usize::from(l == a))))
                    .collect()
            })
            .collect();
        Ok(Self {
            alphabet: w.alphabet().clone(),
            breaks,
            components,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    pub fn component(&self, letter: u8) -> Piecewise<T> {
        Piecewise {
            breaks: self.breaks.clone(),
            pieces: self.components[letter as usize].clone(),
        }
    }

    /// Values of every component at `x`.
    pub fn eval_f64(&self, x: f64) -> Vec<f64> {
        let idx = self.breaks[1..self.breaks.len() - 1]
            .partition_point(|b| b.as_f64() <= x)
            .min(self.breaks.len() - 2);
        self.components.iter().map(|c| c[idx].eval_f64(x)).collect()
    }
}

/// `I_j` on each piece from `I_{j-1}` and the component `g`:
/// `I_j(x) = ∫_0^x g(t) I_{j-1}(t) dt`.
fn integrate_step<T: Scalar>(
    breaks: &[T],
    g: &[Polynomial<T>],
    prev: &[Polynomial<T>],
) -> Vec<Polynomial<T>> {
    let mut acc = T::zero();
    g.iter()
        .zip(prev)
        .enumerate()
        .map(|(i, (gi, pi))| {
            let anti = (gi * pi).antiderivative();
            let (a, b) = (&breaks[i], &breaks[i + 1]);
            let at_a = anti.eval(a);
            let shift = acc.clone() - at_a.clone();
            acc = acc.clone() + anti.eval(b) - at_a;
            &anti + &Polynomial::constant(shift)
        })
        .collect()
}

fn pattern_integral<T: Scalar>(breaks: &[T], components: &[Vec<Polynomial<T>>], u: &[u8]) -> T {
    let mut current = vec![Polynomial::one(); breaks.len() - 1];
    for &letter in u {
        current = integrate_step(breaks, &components[letter as usize], &current);
    }
    let last = current.last().expect("at least one piece");
    last.eval(&T::one()) * T::from_bigint(&factorial(u.len()))
}

/// `t(u, f) = ℓ! ∫_{x_1<…<x_ℓ} Π f^{u_i}(x_i)` exactly, by iterated
/// integration.
pub fn t_density<T: Scalar>(u: &Word, f: &LimitFn<T>) -> Result<T> {
    if !u.alphabet().is_binary() {
        return Err(Error::AlphabetMismatch);
    }
    if u.is_empty() {
        return Err(invalid("pattern must be nonempty"));
    }
    let v = f.to_vector();
    Ok(pattern_integral(&v.breaks, &v.components, u.letters()))
}

/// `t(u, F)` for a `k`-letter limit.
pub fn t_density_vector<T: Scalar>(u: &Word, f: &LimitVector<T>) -> Result<T> {
    if u.alphabet() != f.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    if u.is_empty() {
        return Err(invalid("pattern must be nonempty"));
    }
    Ok(pattern_integral(&f.breaks, &f.components, u.letters()))
}

/// `t(u, F)` for every `u` of length `len`, sharing prefix integrals.
pub fn limit_density_table<T: Scalar>(f: &LimitVector<T>, len: usize) -> Vec<(Word, T)> {
    let scale = T::from_bigint(&factorial(len));
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(len);
    let start = vec![Polynomial::one(); f.breaks.len() - 1];
    table_dfs(f, len, &scale, &start, &mut prefix, &mut out);
    out
}

fn table_dfs<T: Scalar>(
    f: &LimitVector<T>,
    len: usize,
    scale: &T,
    current: &[Polynomial<T>],
    prefix: &mut Vec<u8>,
    out: &mut Vec<(Word, T)>,
) {
    if prefix.len() == len {
        let value = current.last().unwrap().eval(&T::one()) * scale.clone();
        let word = Word::new(f.alphabet.clone(), prefix.clone()).expect("letters in range");
        out.push((word, value));
        return;
    }
    for letter in 0..f.components.len() as u8 {
        let next = integrate_step(&f.breaks, &f.components[letter as usize], current);
        prefix.push(letter);
        table_dfs(f, len, scale, &next, prefix, out);
        prefix.pop();
    }
}

/// `F(x) = ∫_0^x f`.
pub fn cdf<T: Scalar>(f: &LimitFn<T>) -> Piecewise<T> {
    f.inner.antiderivative()
}

/// A value that is exact when every extremum location was found exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Measured<T> {
    pub value: T,
    pub exact: bool,
}

/// Points where `H = ∫(f − g)` may attain its extrema.
fn critical_values<T: Scalar>(h: &Piecewise<T>) -> (Vec<T>, bool) {
    let big_h = h.antiderivative();
    let roots = h.interior_roots();
    let exact = T::EXACT && roots.iter().all(Root::is_exact);
    let mut values: Vec<T> = h.breaks.iter().map(|x| big_h.eval(x)).collect();
    values.extend(roots.iter().map(|r| big_h.eval(&r.approx())));
    (values, exact)
}

/// `d_□(f, g) = sup_I |∫_I (f − g)| = max H − min H` with `H = ∫_0^x (f − g)`.
pub fn d_box<T: Scalar>(f: &LimitFn<T>, g: &LimitFn<T>) -> Measured<T> {
    let h = f.inner.sub(&g.inner);
    let (values, exact) = critical_values(&h);
    let max = values.iter().cloned().fold(T::zero(), T::max_of);
    let min = values.iter().cloned().fold(T::zero(), T::min_of);
    let out = Measured {
        value: max - min,
        exact,
    };
    debug_assert!({
        let sup = prefix_values_sup(&values);
        sup <= out.value && out.value <= sup * T::from_usize(2)
    });
    out
}

fn prefix_values_sup<T: Scalar>(values: &[T]) -> T {
    values.iter().map(|v| v.abs()).fold(T::zero(), T::max_of)
}

/// `sup_b |∫_0^b (f − g)|`.
pub fn prefix_sup_dist<T: Scalar>(f: &LimitFn<T>, g: &LimitFn<T>) -> Measured<T> {
    let h = f.inner.sub(&g.inner);
    let (values, exact) = critical_values(&h);
    Measured {
        value: prefix_values_sup(&values),
        exact,
    }
}

/// `d₁(f, g) = ∫|f − g|`, splitting each piece at the sign changes of `f − g`.
pub fn d1_fn<T: Scalar>(f: &LimitFn<T>, g: &LimitFn<T>) -> Measured<T> {
    let h = f.inner.sub(&g.inner);
    let mut exact = T::EXACT;
    let mut total = T::zero();
    for (i, p) in h.pieces.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let (a, b) = (&h.breaks[i], &h.breaks[i + 1]);
        let roots = p.roots_in(a, b);
        exact &= roots.iter().all(Root::is_exact);
        let mut cuts = vec![a.clone()];
        cuts.extend(roots.iter().map(Root::approx));
        cuts.push(b.clone());
        for w in cuts.windows(2) {
            total = total + p.integrate(&w[0], &w[1]).abs();
        }
    }
    Measured {
        value: total,
        exact,
    }
}

/// Values `J` on the grid `{0, …, t}^k` for `k ∈ {1, 2}`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinGrid<T> {
    t: usize,
    dims: usize,
    values: Vec<T>,
}

impl<T: Scalar> BernsteinGrid<T> {
    pub fn new(t: usize, dims: usize, values: Vec<T>) -> Result<Self> {
        if t == 0 {
            return Err(invalid("Bernstein degree t must be at least 1"));
        }
        if !(1..=2).contains(&dims) {
            return Err(invalid("Bernstein evaluation supports dimension 1 or 2"));
        }
        if values.len() != (t + 1).pow(dims as u32) {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: (t + 1).pow(dims as u32),
            });
        }
        Ok(Self { t, dims, values })
    }

    /// Samples `J` at the grid points `i / t`.
    pub fn sample(t: usize, dims: usize, j: impl Fn(&[T]) -> T) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(invalid("Bernstein evaluation supports dimension 1 or 2"));
        }
        let side = t + 1;
        let values = (0..side.pow(dims as u32))
            .map(|idx| {
                let point: Vec<T> = (0..dims)
                    .map(|d| {
                        let i = if d == 0 {
                            idx / side.pow(dims as u32 - 1)
                        } else {
                            idx % side
                        };
                        T::from_ratio(i as i64, t as i64)
                    })
                    .collect();
                j(&point)
            })
            .collect();
        Self::new(t, dims, values)
    }
}

/// `Σ_i J(i/t) Π_j binom(t, i_j) x_j^{i_j} (1 − x_j)^{t − i_j}`.
pub fn bernstein_eval<T: Scalar>(grid: &BernsteinGrid<T>, x: &[T]) -> Result<T> {
    if x.len() != grid.dims {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: grid.dims,
        });
    }
    let t = grid.t;
    let basis = |xj: &T| -> Vec<T> {
        (0..=t)
            .map(|i| {
                T::from_bigint(&binomial(t, i))
                    * num_traits::pow(xj.clone(), i)
                    * num_traits::pow(T::one() - xj.clone(), t - i)
            })
            .collect()
    };
    let bx = basis(&x[0]);
    if grid.dims == 1 {
        return Ok(bx
            .iter()
            .zip(&grid.values)
            .fold(T::zero(), |acc, (b, v)| acc + b.clone() * v.clone()));
    }
    let by = basis(&x[1]);
    let mut total = T::zero();
    for (i, bi) in bx.iter().enumerate() {
        for (j, bj) in by.iter().enumerate() {
            total = total + bi.clone() * bj.clone() * grid.values[i * (t + 1) + j].clone();
        }
    }
    Ok(total)
}

/// `∫_0^1 f(x) x^k dx`, exactly.
pub fn moment_x<T: Scalar>(f: &LimitFn<T>, k: usize) -> T {
    f.inner
        .map_pieces(|p| p * &Polynomial::monomial(T::one(), k))
        .integral()
}
